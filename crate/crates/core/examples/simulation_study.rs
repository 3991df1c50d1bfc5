//! Monte-Carlo RMSE table for one `(n, N)` cell.
//!
//! ```bash
//! cargo run --release --example simulation_study -- 16 64 500
//! cargo run --release --example simulation_study -- 16 64 500 square
//! cargo run --release --example simulation_study -- 4 256 500 corr phi=0.5 methods=bu,adfo,opwls
//! ```

use curve_reconcile::simulation::{run_experiment, ErrorCov, SimConfig, Transform};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: usize| args.get(i).map_or(Ok(default), |s| s.parse());
    let mut config = SimConfig::new(arg(0, 16)?, arg(1, 64)?, 0.7);
    config.replications = arg(2, 200)?;
    for flag in args.iter().skip(3) {
        match flag.split_once('=') {
            Some(("phi", v)) => config.phi = v.parse()?,
            Some(("methods", v)) => {
                config.methods = v
                    .split(',')
                    .filter(|t| !t.is_empty())
                    .map(str::parse)
                    .collect::<Result<_, _>>()?
            }
            _ => match flag.as_str() {
                "square" => config.transform = Transform::Square,
                "corr" => config.error_cov = ErrorCov::Correlated,
                other => return Err(format!("unknown flag {other}").into()),
            },
        }
    }

    let started = std::time::Instant::now();
    let result = run_experiment(&config)?;
    println!(
        "n={} N={} phi={} reps={} ({:.1}s)",
        config.n,
        config.history,
        config.phi,
        config.replications,
        started.elapsed().as_secs_f64()
    );
    println!(
        "{:<14}{:>12}{:>12}{:>10}",
        "method", "rmse", "filtered", "failed"
    );
    let row = |name: &str, s: &curve_reconcile::simulation::MethodStats| {
        let filtered = s
            .filtered_rmse
            .map_or("-".to_string(), |v| format!("{v:.4}"));
        println!("{name:<14}{:>12.4}{filtered:>12}{:>10}", s.rmse, s.failures);
    };
    row("base", &result.base);
    for (m, stats) in &result.methods {
        row(m.token(), stats);
    }
    println!("outliers: {}", result.outlier_count);
    Ok(())
}
