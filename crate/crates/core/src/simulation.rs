//! Monte-Carlo study: VAR(1) bottom processes, per-level AR(1) base
//! forecasts, and RMSE of every reconciliation method.
//!
//! Each replication is independent. Draws come from one ChaCha stream per
//! `(seed, series)` with the replication index as stream id, so results do not
//! depend on scheduling. Replications are evaluated in parallel, collected in
//! index order and reduced sequentially.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::covariance::{estimate, CovOptions, ResidualPanel};
use crate::error::{Error, Result};
use crate::hierarchy::{summation_matrix, HierarchyVector};
use crate::reconcile::{
    mapping_for, proportions_top_down, reconcile, History, Method, MethodInputs, ProportionInput,
    ProportionSource,
};

/// Steps simulated from a zero start and discarded.
pub const BURN_IN: usize = 100;

/// Replications whose forecasted top-down proportion `p_1` exceeds this in
/// absolute value are flagged as outliers.
pub const OUTLIER_THRESHOLD: f64 = 50.0;

/// Innovation covariance `A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCov {
    Identity,
    /// `0.3 I + 0.7 11'`.
    Correlated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    None,
    /// Simulate with `sqrt(phi) I`, then square every value before aggregating.
    Square,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Bottom dimension.
    pub n: usize,
    /// History length used for fitting; one more step is simulated as the target.
    pub history: usize,
    pub phi: f64,
    pub error_cov: ErrorCov,
    pub transform: Transform,
    pub replications: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub cov: CovOptions,
    /// Worker threads; 0 uses the rayon default.
    pub threads: usize,
}

impl SimConfig {
    /// Identity errors, no transform, all methods, 1000 replications.
    pub fn new(n: usize, history: usize, phi: f64) -> Self {
        Self {
            n,
            history,
            phi,
            error_cov: ErrorCov::Identity,
            transform: Transform::None,
            replications: 1000,
            seed: 1,
            methods: Method::ALL.to_vec(),
            cov: CovOptions::default(),
            threads: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!(
                "n must be >= 2, got {}",
                self.n
            )));
        }
        if self.history < 3 {
            return Err(Error::InvalidArgument(format!(
                "history length must be >= 3, got {}",
                self.history
            )));
        }
        if !self.phi.is_finite() || self.phi.abs() >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "phi must satisfy |phi| < 1, got {}",
                self.phi
            )));
        }
        if self.transform == Transform::Square && self.phi < 0.0 {
            return Err(Error::InvalidArgument(
                "the square transform needs phi >= 0".into(),
            ));
        }
        if self.replications == 0 {
            return Err(Error::InvalidArgument("replications must be >= 1".into()));
        }
        Ok(())
    }

    /// Autoregressive coefficient actually used by the simulator.
    pub fn effective_phi(&self) -> f64 {
        match self.transform {
            Transform::None => self.phi,
            Transform::Square => self.phi.sqrt(),
        }
    }

    pub fn levels(&self) -> usize {
        2 * self.n - 1
    }
}

fn stream(seed: u64, series: usize, replication: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(series as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(replication as u64);
    rng
}

fn normals(seed: u64, series: usize, replication: usize, len: usize) -> Vec<f64> {
    let mut rng = stream(seed, series, replication);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Bottom values `b_t` for one replication: `(history + 1) x n`, transform applied.
pub fn simulate_var1(config: &SimConfig, replication: usize) -> Result<DMatrix<f64>> {
    config.validate()?;
    let n = config.n;
    let steps = BURN_IN + config.history + 1;
    let phi = config.effective_phi();
    let mut shocks: Vec<Vec<f64>> = (0..n)
        .map(|j| normals(config.seed, j, replication, steps))
        .collect();
    if config.error_cov == ErrorCov::Correlated {
        // Common factor on its own series index: eps_j = sqrt(0.3) z_j + sqrt(0.7) z_0.
        let common = normals(config.seed, n, replication, steps);
        let (own, shared) = (0.3f64.sqrt(), 0.7f64.sqrt());
        for z in &mut shocks {
            for (v, c) in z.iter_mut().zip(&common) {
                *v = own * *v + shared * c;
            }
        }
    }
    let mut b = DMatrix::zeros(config.history + 1, n);
    for (j, z) in shocks.iter().enumerate() {
        let mut x = 0.0;
        for (t, eps) in z.iter().enumerate() {
            x = phi * x + eps;
            if t >= BURN_IN {
                b[(t - BURN_IN, j)] = x;
            }
        }
    }
    if config.transform == Transform::Square {
        b.apply(|v| *v = *v * *v);
    }
    Ok(b)
}

/// Stacks each row of bottom values into the canonical `y` ordering.
pub fn levels_from_bottom(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = summation_matrix(b.ncols(), 1)?;
    Ok(b * s.transpose())
}

/// Least-squares AR(1) coefficient without intercept.
pub fn fit_ar1(series: &[f64]) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: series.len(),
        });
    }
    let (mut num, mut den) = (0.0, 0.0);
    for w in series.windows(2) {
        num += w[1] * w[0];
        den += w[0] * w[0];
    }
    if den == 0.0 {
        return Err(Error::DegenerateSeries);
    }
    Ok(num / den)
}

/// Base forecasts and everything the reconcilers need for one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseForecast {
    pub y_hat: HierarchyVector,
    pub target: Vec<f64>,
    pub residuals: ResidualPanel,
    pub history: History,
    pub phi_hat: Vec<f64>,
}

/// Fits AR(1) to each column of `levels` (rows `0..N`), forecasts row `N`.
pub fn base_forecast(levels: &DMatrix<f64>) -> Result<BaseForecast> {
    let rows = levels.nrows();
    if rows < 4 {
        return Err(Error::InsufficientData {
            required: 4,
            actual: rows,
        });
    }
    let fit_len = rows - 1;
    let l = levels.ncols();
    let mut phi_hat = Vec::with_capacity(l);
    let mut y_hat = Vec::with_capacity(l);
    let mut resid = DMatrix::zeros(fit_len - 1, l);
    for c in 0..l {
        let col: Vec<f64> = levels.column(c).iter().take(fit_len).copied().collect();
        let phi = fit_ar1(&col)?;
        for t in 1..fit_len {
            resid[(t - 1, c)] = col[t] - phi * col[t - 1];
        }
        y_hat.push(phi * col[fit_len - 1]);
        phi_hat.push(phi);
    }
    Ok(BaseForecast {
        y_hat: HierarchyVector::new(y_hat)?,
        target: levels.row(fit_len).iter().copied().collect(),
        residuals: ResidualPanel::new(resid)?,
        history: History::from_levels(&levels.rows(0, fit_len).into_owned())?,
        phi_hat,
    })
}

/// Squared errors of one forecast, per level.
fn squared_errors(forecast: &[f64], target: &[f64]) -> Option<Vec<f64>> {
    let e: Vec<f64> = forecast
        .iter()
        .zip(target)
        .map(|(f, t)| (f - t).powi(2))
        .collect();
    e.iter().all(|v| v.is_finite()).then_some(e)
}

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationOutcome {
    /// Forecasted top-down `p_1`, or `None` if it could not be computed.
    pub p_fo_1: Option<f64>,
    pub outlier: bool,
    pub base: Vec<f64>,
    /// Per-level squared errors, or the error that stopped the method.
    pub methods: Vec<(Method, std::result::Result<Vec<f64>, Error>)>,
}

/// Evaluates every method on one `(N + 1) x (2n - 1)` panel of levels.
pub fn evaluate_replication(
    levels: &DMatrix<f64>,
    methods: &[Method],
    cov: &CovOptions,
) -> Result<ReplicationOutcome> {
    let base = base_forecast(levels)?;
    let n = base.y_hat.bottom_len();
    let s = summation_matrix(n, 1)?;
    let p_fo_1 = proportions_top_down(
        ProportionInput::Forecast(&base.y_hat),
        ProportionSource::Forecasted,
    )
    .ok()
    .map(|p| p.values()[0]);
    let outlier = p_fo_1.is_none_or(|p| p.is_nan() || p.abs() > OUTLIER_THRESHOLD);
    let base_err = squared_errors(base.y_hat.values(), &base.target)
        .ok_or_else(|| Error::InvalidArgument("non-finite base forecast".into()))?;

    let mut results = Vec::with_capacity(methods.len());
    for &m in methods {
        let run = || -> Result<Vec<f64>> {
            let w = if m.is_optimal() {
                Some(estimate(m, n, Some(&base.residuals), cov)?.w)
            } else {
                None
            };
            let inputs = MethodInputs {
                forecast: &base.y_hat,
                history: Some(&base.history),
                covariance: w.as_ref(),
            };
            let p = mapping_for(m, inputs)?;
            let rec = reconcile(&p, &s, &base.y_hat)?;
            squared_errors(&rec.y_tilde, &base.target)
                .ok_or_else(|| Error::InvalidArgument(format!("{m} produced non-finite values")))
        };
        results.push((m, run()));
    }
    Ok(ReplicationOutcome {
        p_fo_1,
        outlier,
        base: base_err,
        methods: results,
    })
}

/// Pooled error statistics for one row of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodStats {
    /// `sqrt` of the mean squared error pooled over levels and replications.
    pub rmse: f64,
    /// Same, excluding outlier replications; `None` if none remain.
    pub filtered_rmse: Option<f64>,
    /// Per-level RMSE over the replications where the method succeeded.
    pub per_level_rmse: Vec<f64>,
    /// Replications where the method failed (singular covariance, zero denominator, overflow).
    pub failures: usize,
    pub evaluated: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub base: MethodStats,
    pub methods: BTreeMap<Method, MethodStats>,
    pub outlier_count: usize,
    pub replications: usize,
}

impl SimResult {
    pub fn rmse(&self, method: Method) -> Option<f64> {
        self.methods.get(&method).map(|s| s.rmse)
    }
}

#[derive(Default)]
struct Accumulator {
    per_level: Vec<f64>,
    filtered: f64,
    filtered_reps: usize,
    evaluated: usize,
    failures: usize,
}

impl Accumulator {
    fn add(&mut self, errors: &[f64], outlier: bool) {
        if self.per_level.is_empty() {
            self.per_level = vec![0.0; errors.len()];
        }
        for (acc, e) in self.per_level.iter_mut().zip(errors) {
            *acc += e;
        }
        if !outlier {
            self.filtered += errors.iter().sum::<f64>();
            self.filtered_reps += 1;
        }
        self.evaluated += 1;
    }

    fn finish(self, levels: usize) -> MethodStats {
        let total: f64 = self.per_level.iter().sum();
        let pooled = |sum: f64, reps: usize| (sum / (reps * levels) as f64).sqrt();
        MethodStats {
            rmse: if self.evaluated == 0 {
                f64::NAN
            } else {
                pooled(total, self.evaluated)
            },
            filtered_rmse: (self.filtered_reps > 0)
                .then(|| pooled(self.filtered, self.filtered_reps)),
            per_level_rmse: self
                .per_level
                .iter()
                .map(|s| (s / self.evaluated as f64).sqrt())
                .collect(),
            failures: self.failures,
            evaluated: self.evaluated,
        }
    }
}

/// Runs all replications and pools the squared errors.
pub fn run_experiment(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let one = |r: usize| -> Result<ReplicationOutcome> {
        let b = simulate_var1(config, r)?;
        evaluate_replication(&levels_from_bottom(&b)?, &config.methods, &config.cov)
    };
    let collect = || {
        (0..config.replications)
            .into_par_iter()
            .map(one)
            .collect::<Vec<_>>()
    };
    let outcomes = if config.threads == 0 {
        collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(collect)
    };

    let mut base = Accumulator::default();
    let mut per_method: BTreeMap<Method, Accumulator> = config
        .methods
        .iter()
        .map(|&m| (m, Accumulator::default()))
        .collect();
    let mut outlier_count = 0;
    for outcome in outcomes {
        let outcome = outcome?;
        outlier_count += usize::from(outcome.outlier);
        base.add(&outcome.base, outcome.outlier);
        for (m, res) in &outcome.methods {
            let acc = per_method.get_mut(m).expect("method registered");
            match res {
                Ok(e) => acc.add(e, outcome.outlier),
                Err(_) => acc.failures += 1,
            }
        }
    }
    let levels = config.levels();
    Ok(SimResult {
        base: base.finish(levels),
        methods: per_method
            .into_iter()
            .map(|(m, a)| (m, a.finish(levels)))
            .collect(),
        outlier_count,
        replications: config.replications,
    })
}

/// `(MAE, RMSE)` of a `D x H` forecast; RMSE averages the per-day root mean square.
pub fn error_metrics(actual: &DMatrix<f64>, forecast: &DMatrix<f64>) -> Result<(f64, f64)> {
    if actual.shape() != forecast.shape() {
        return Err(Error::dim(
            format!("{}x{}", actual.nrows(), actual.ncols()),
            format!("{}x{}", forecast.nrows(), forecast.ncols()),
        ));
    }
    if actual.is_empty() {
        return Err(Error::EmptyInput("error metrics need at least one day"));
    }
    let e = actual - forecast;
    let mae = e.abs().mean();
    let rmse = e
        .row_iter()
        .map(|day| (day.norm_squared() / day.len() as f64).sqrt())
        .sum::<f64>()
        / e.nrows() as f64;
    Ok((mae, rmse))
}
