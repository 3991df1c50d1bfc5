//! Command-line front end.
//!
//! Exit codes: 0 success, 1 unreadable or malformed input, 2 numerical
//! failure (singular covariance, zero denominator, non-convergence),
//! 3 no market equilibrium, 64 usage error.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use crate::covariance::{estimate, CovOptions, GlassoOptions, ResidualPanel};
use crate::error::{Error, Result};
use crate::hierarchy::{summation_matrix, to_representation};
use crate::io;
use crate::market::{self, Side};
use crate::reconcile::{
    covariance_in_representation, mapping_for, reconcile, reconcile_in_representation, History,
    Method, MethodInputs,
};
use crate::simulation::{self, ErrorCov, SimConfig, Transform};
use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_NO_EQUILIBRIUM: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

/// Environment variable capping simulation threads (0 = automatic).
pub const THREADS_ENV: &str = "CURVE_RECONCILE_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "curve-reconcile",
    version,
    about = "Reconcile forecasts of aggregated curves"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reconcile a base forecast vector (`level,value` CSV) and print the coherent vector.
    Reconcile(ReconcileArgs),
    /// Estimate the covariance W for an optimal method and print it as a labelled matrix.
    EstimateCov(EstimateCovArgs),
    /// Run the Monte-Carlo study and print an RMSE table.
    Simulate(SimulateArgs),
    /// Step curves, price classes and equilibrium from a bids CSV.
    Curves {
        #[command(subcommand)]
        action: CurvesCommand,
    },
}

#[derive(Debug, Args)]
pub struct CovFlags {
    /// Graphical lasso penalty.
    #[arg(long, default_value_t = 0.1)]
    pub rho: f64,
    /// Subtract column means before forming sample moments.
    #[arg(long)]
    pub center: bool,
}

impl CovFlags {
    fn options(&self) -> CovOptions {
        CovOptions {
            center: self.center,
            glasso: GlassoOptions {
                rho: self.rho,
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct ReconcileArgs {
    /// Base forecasts, header `level,value`.
    pub forecast: PathBuf,
    #[arg(long)]
    pub method: Method,
    /// In-sample residual panel (required by opwls, opcov, opshrink, opledoitwolf, opglasso).
    #[arg(long)]
    pub residuals: Option<PathBuf>,
    /// Historical actuals panel (required by tdar, tdra, adar, adra).
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Reconcile in representation k (optimal methods only); output stays canonical.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[command(flatten)]
    pub cov: CovFlags,
}

#[derive(Debug, Args)]
pub struct EstimateCovArgs {
    /// Residual panel with level labels as header.
    #[arg(long)]
    pub residuals: Option<PathBuf>,
    /// Optimal method whose covariance is wanted.
    #[arg(long)]
    pub scheme: Method,
    /// Bottom dimension, needed only without a residual panel.
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub cov: CovFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CovArg {
    Id,
    Corr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformArg {
    None,
    Square,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Bottom dimensions.
    #[arg(long = "n", value_delimiter = ',', default_value = "4,16,64")]
    pub n: Vec<usize>,
    /// History lengths.
    #[arg(long = "N", value_delimiter = ',', default_value = "16,64,256")]
    pub history: Vec<usize>,
    #[arg(long, default_value_t = 0.7)]
    pub phi: f64,
    #[arg(long, value_enum, default_value_t = CovArg::Id)]
    pub cov: CovArg,
    #[arg(long, value_enum, default_value_t = TransformArg::None)]
    pub transform: TransformArg,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    /// Method tokens; defaults to all fourteen.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
    #[arg(long, default_value_t = 0.1)]
    pub rho: f64,
    /// Also write every evaluation target `y_{N+1}` to this CSV.
    #[arg(long)]
    pub dump_targets: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Supply,
    Demand,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::Supply => Side::Supply,
            SideArg::Demand => Side::Demand,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum CurvesCommand {
    /// Print the cumulative step curve (`price,cum_volume`).
    Aggregate {
        bids: PathBuf,
        #[arg(long, value_enum, default_value_t = SideArg::Supply)]
        side: SideArg,
    },
    /// Print price-class boundaries from equidistant volume targets.
    Classes {
        bids: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum, default_value_t = SideArg::Supply)]
        side: SideArg,
    },
    /// Print class volumes (`index,value`) using a stored grid or a fresh one.
    Bin {
        bids: PathBuf,
        /// Grid CSV (`boundary`) shared across auctions.
        #[arg(long, conflicts_with = "m", required_unless_present = "m")]
        grid: Option<PathBuf>,
        /// Build the grid from these bids with M volume steps.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, value_enum, default_value_t = SideArg::Supply)]
        side: SideArg,
    },
    /// Print the clearing point (`price,volume`).
    Intersect { bids: PathBuf },
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse(_)
        | Error::Io(_)
        | Error::InvalidDimension { .. }
        | Error::InvalidPrice { .. }
        | Error::EmptyInput(_)
        | Error::NonFinite { .. } => EXIT_PARSE,
        Error::NoEquilibrium => EXIT_NO_EQUILIBRIUM,
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::Division { .. }
        | Error::SingularMatrix { .. }
        | Error::InsufficientData { .. }
        | Error::ZeroVariance { .. }
        | Error::Convergence { .. }
        | Error::DegenerateSeries
        | Error::DegenerateCurve => EXIT_NUMERIC,
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    return EXIT_OK;
                }
                _ => EXIT_USAGE,
            };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    let mut buf = Vec::new();
    match execute(&cli.command, &mut buf) {
        Ok(()) => match out.write_all(&buf) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_PARSE
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn execute(command: &Command, out: &mut Vec<u8>) -> Result<()> {
    match command {
        Command::Reconcile(args) => cmd_reconcile(args, out),
        Command::EstimateCov(args) => cmd_estimate_cov(args, out),
        Command::Simulate(args) => cmd_simulate(args, out),
        Command::Curves { action } => cmd_curves(action, out),
    }
}

fn read_residuals(path: Option<&PathBuf>) -> Result<Option<ResidualPanel>> {
    path.map(|p| ResidualPanel::new(io::read_panel(open(p)?)?))
        .transpose()
}

fn cmd_reconcile(args: &ReconcileArgs, out: &mut Vec<u8>) -> Result<()> {
    let y_hat = io::read_levels(open(&args.forecast)?)?;
    let n = y_hat.bottom_len();
    let m = args.method;
    if m.needs_residuals() && args.residuals.is_none() {
        return Err(Error::InvalidArgument(format!(
            "method {m} needs --residuals"
        )));
    }
    if m.needs_history() && args.history.is_none() {
        return Err(Error::InvalidArgument(format!(
            "method {m} needs --history"
        )));
    }
    if args.k != 1 && !m.is_optimal() {
        return Err(Error::InvalidArgument(format!(
            "--k applies to optimal methods only, not {m}"
        )));
    }
    let residuals = read_residuals(args.residuals.as_ref())?;
    let history = match &args.history {
        Some(p) => Some(History::from_levels(&io::read_panel(open(p)?)?)?),
        None => None,
    };
    let w = if m.is_optimal() {
        Some(estimate(m, n, residuals.as_ref(), &args.cov.options())?.w)
    } else {
        None
    };

    let y_tilde = if args.k == 1 {
        let inputs = MethodInputs {
            forecast: &y_hat,
            history: history.as_ref(),
            covariance: w.as_ref(),
        };
        let p = mapping_for(m, inputs)?;
        reconcile(&p, &summation_matrix(n, 1)?, &y_hat)?.y_tilde
    } else {
        let w = w.expect("optimal method has a covariance");
        let y_k = to_representation(&y_hat, args.k)?;
        let w_k = covariance_in_representation(&w, n, args.k)?;
        reconcile_in_representation(&y_k, &w_k, m)?.canonical
    };
    io::write_levels(out, &y_tilde)
}

fn cmd_estimate_cov(args: &EstimateCovArgs, out: &mut Vec<u8>) -> Result<()> {
    if !args.scheme.is_optimal() {
        return Err(Error::InvalidArgument(format!(
            "{} has no covariance estimator",
            args.scheme
        )));
    }
    let residuals = read_residuals(args.residuals.as_ref())?;
    let n = match (&residuals, args.n) {
        (Some(p), _) => p.levels().div_ceil(2),
        (None, Some(n)) => n,
        (None, None) => {
            return Err(Error::InvalidArgument("give --residuals or --n".into()));
        }
    };
    let est = estimate(args.scheme, n, residuals.as_ref(), &args.cov.options())?;
    io::write_panel(out, &est.w)
}

fn threads_from_env() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Error::InvalidArgument(format!(
                "{THREADS_ENV} must be a non-negative integer, got '{v}'"
            ))
        }),
        Err(_) => Ok(0),
    }
}

fn cmd_simulate(args: &SimulateArgs, out: &mut Vec<u8>) -> Result<()> {
    let methods = args.methods.clone().unwrap_or_else(|| Method::ALL.to_vec());
    let threads = threads_from_env()?;
    let mut configs = Vec::new();
    for &n in &args.n {
        for &history in &args.history {
            let config = SimConfig {
                error_cov: match args.cov {
                    CovArg::Id => ErrorCov::Identity,
                    CovArg::Corr => ErrorCov::Correlated,
                },
                transform: match args.transform {
                    TransformArg::None => Transform::None,
                    TransformArg::Square => Transform::Square,
                },
                replications: args.reps,
                seed: args.seed,
                methods: methods.clone(),
                cov: CovOptions {
                    center: false,
                    glasso: GlassoOptions {
                        rho: args.rho,
                        ..Default::default()
                    },
                },
                threads,
                ..SimConfig::new(n, history, args.phi)
            };
            config.validate()?;
            configs.push(config);
        }
    }
    if configs.is_empty() {
        return Err(Error::InvalidArgument("empty --n or --N grid".into()));
    }
    if let Some(path) = &args.dump_targets {
        dump_targets(path, &configs)?;
    }
    let results = configs
        .iter()
        .map(simulation::run_experiment)
        .collect::<Result<Vec<_>>>()?;

    let header: Vec<String> = std::iter::once("method".to_string())
        .chain(configs.iter().map(|c| format!("n{}_N{}", c.n, c.history)))
        .collect();
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut row =
        |name: String, cells: Vec<String>| rows.push(std::iter::once(name).chain(cells).collect());
    row(
        "base".into(),
        results.iter().map(|r| io::fmt_num(r.base.rmse)).collect(),
    );
    for &m in &methods {
        row(
            m.token().into(),
            results
                .iter()
                .map(|r| io::fmt_num(r.methods[&m].rmse))
                .collect(),
        );
    }
    if methods.contains(&Method::TdFo) {
        row(
            "tdfo_filtered".into(),
            results
                .iter()
                .map(|r| {
                    r.methods[&Method::TdFo]
                        .filtered_rmse
                        .map_or("nan".into(), io::fmt_num)
                })
                .collect(),
        );
    }
    row(
        "outliers".into(),
        results
            .iter()
            .map(|r| r.outlier_count.to_string())
            .collect(),
    );
    for &m in &methods {
        if results.iter().any(|r| r.methods[&m].failures > 0) {
            row(
                format!("{}_failed", m.token()),
                results
                    .iter()
                    .map(|r| r.methods[&m].failures.to_string())
                    .collect(),
            );
        }
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    io::write_rows(out, &header, rows)
}

fn dump_targets(path: &Path, configs: &[SimConfig]) -> Result<()> {
    let mut rows = Vec::new();
    for c in configs {
        let labels = io::level_labels(c.n);
        for r in 0..c.replications {
            let levels = simulation::levels_from_bottom(&simulation::simulate_var1(c, r)?)?;
            let target = levels.row(levels.nrows() - 1);
            for (label, v) in labels.iter().zip(target.iter()) {
                rows.push(vec![
                    c.n.to_string(),
                    c.history.to_string(),
                    (r + 1).to_string(),
                    label.clone(),
                    io::fmt_num(*v),
                ]);
            }
        }
    }
    let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    io::write_rows(
        std::io::BufWriter::new(file),
        &["n", "N", "replication", "level", "target"],
        rows,
    )
}

fn cmd_curves(action: &CurvesCommand, out: &mut Vec<u8>) -> Result<()> {
    match action {
        CurvesCommand::Aggregate { bids, side } => {
            let bids = io::read_bids(open(bids)?)?;
            io::write_curve(out, &market::build_step_curve(bids.side((*side).into()))?)
        }
        CurvesCommand::Classes { bids, m, side } => {
            let bids = io::read_bids(open(bids)?)?;
            let curve = market::build_step_curve(bids.side((*side).into()))?;
            io::write_grid(out, &market::make_price_classes(&curve, *m)?)
        }
        CurvesCommand::Bin {
            bids,
            grid,
            m,
            side,
        } => {
            let side: Side = (*side).into();
            let bids = io::read_bids(open(bids)?)?;
            let ladder = bids.side(side);
            let grid = match (grid, m) {
                (Some(path), _) => io::read_grid(open(path)?, side)?,
                (None, Some(m)) => {
                    market::make_price_classes(&market::build_step_curve(ladder)?, *m)?
                }
                (None, None) => return Err(Error::InvalidArgument("give --grid or --m".into())),
            };
            io::write_series(out, market::bin_volumes(ladder, &grid)?.values())
        }
        CurvesCommand::Intersect { bids } => {
            let bids = io::read_bids(open(bids)?)?;
            let eq = market::intersect(
                &market::build_step_curve(&bids.supply)?,
                &market::build_step_curve(&bids.demand)?,
            )?;
            io::write_equilibrium(out, &eq)
        }
    }
}
