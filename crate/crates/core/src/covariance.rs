//! Estimators for the base-forecast error covariance `W`.
//!
//! Each optimal reconciliation method pairs with one estimator:
//!
//! | scheme | estimate |
//! |--------|----------|
//! | `opols` | `I` |
//! | `oplambda` | `diag(S 1_n) = diag(n, n-1, ..., 2, 1, ..., 1)` |
//! | `opwls` | diagonal of the sample covariance |
//! | `opcov` | sample covariance `E'E / T` |
//! | `opshrink` | `lambda * diag + (1 - lambda) * sample`, Schafer-Strimmer intensity |
//! | `opledoitwolf` | `delta * F + (1 - delta) * sample`, constant-correlation target |
//! | `opglasso` | graphical lasso of the sample covariance |
//!
//! Residuals are used as given (no centering) unless [`CovOptions::center`]
//! is set.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_finite, Error, Result};
use crate::hierarchy::{bottom_dim, summation_matrix};
use crate::reconcile::Method;

/// `T x (2n - 1)` base-forecast errors, columns ordered like `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualPanel {
    e: DMatrix<f64>,
}

impl ResidualPanel {
    pub fn new(e: DMatrix<f64>) -> Result<Self> {
        bottom_dim(e.ncols())?;
        if e.nrows() == 0 {
            return Err(Error::EmptyInput("residual panel has no rows"));
        }
        ensure_finite(e.as_slice())?;
        Ok(Self { e })
    }

    /// Builds a panel from rows of equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::dim(cols, bad.len()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(rows.len(), cols, &flat))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.e
    }

    /// Sample count `T`.
    pub fn samples(&self) -> usize {
        self.e.nrows()
    }

    /// Number of levels `2n - 1`.
    pub fn levels(&self) -> usize {
        self.e.ncols()
    }

    fn deviations(&self, center: bool) -> DMatrix<f64> {
        let mut d = self.e.clone();
        if center {
            for mut col in d.column_iter_mut() {
                let mean = col.mean();
                col.add_scalar_mut(-mean);
            }
        }
        d
    }
}

/// A covariance estimate and the parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct CovEstimate {
    pub w: DMatrix<f64>,
    pub scheme: Method,
    /// Shrinkage intensity (lambda or delta), already clipped to `[0, 1]`.
    pub shrinkage: Option<f64>,
    /// Graphical lasso penalty.
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlassoOptions {
    pub rho: f64,
    /// Convergence threshold on the largest column change, relative to the mean diagonal.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for GlassoOptions {
    fn default() -> Self {
        Self {
            rho: 0.1,
            tol: 1e-7,
            max_sweeps: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CovOptions {
    /// Subtract column means before forming sample moments.
    pub center: bool,
    pub glasso: GlassoOptions,
}

pub fn w_identity(n: usize) -> Result<CovEstimate> {
    if n < 2 {
        return Err(Error::dim("n >= 2", n));
    }
    Ok(CovEstimate {
        w: DMatrix::identity(2 * n - 1, 2 * n - 1),
        scheme: Method::OpOls,
        shrinkage: None,
        rho: None,
    })
}

/// `diag(S 1_n)`: each level weighted by the number of bottom values it aggregates.
pub fn w_lambda(s: &DMatrix<f64>) -> Result<CovEstimate> {
    if s.nrows() != 2 * s.ncols() - 1 {
        return Err(Error::dim(
            "(2n-1) x n summation matrix",
            format!("{}x{}", s.nrows(), s.ncols()),
        ));
    }
    let counts = s * DVector::from_element(s.ncols(), 1.0);
    Ok(CovEstimate {
        w: DMatrix::from_diagonal(&counts),
        scheme: Method::OpLambda,
        shrinkage: None,
        rho: None,
    })
}

fn require_samples(panel: &ResidualPanel, required: usize) -> Result<()> {
    if panel.samples() < required {
        return Err(Error::InsufficientData {
            required,
            actual: panel.samples(),
        });
    }
    Ok(())
}

fn gram(d: &DMatrix<f64>) -> DMatrix<f64> {
    let t = d.nrows() as f64;
    let g = d.transpose() * d / t;
    (&g + g.transpose()) * 0.5
}

/// Sample covariance `E'E / T`. It is singular whenever `T < 2n - 1`; that
/// surfaces when the GLS projection factorizes it.
pub fn w_sample(panel: &ResidualPanel, opts: &CovOptions) -> Result<CovEstimate> {
    Ok(CovEstimate {
        w: gram(&panel.deviations(opts.center)),
        scheme: Method::OpCov,
        shrinkage: None,
        rho: None,
    })
}

/// Diagonal of the sample covariance; off-diagonals exactly zero.
pub fn w_diagonal(panel: &ResidualPanel, opts: &CovOptions) -> Result<CovEstimate> {
    let sample = w_sample(panel, opts)?;
    Ok(CovEstimate {
        w: DMatrix::from_diagonal(&sample.w.diagonal()),
        scheme: Method::OpWls,
        shrinkage: None,
        rho: None,
    })
}

/// Schafer-Strimmer intensity for shrinking correlations toward zero.
///
/// Columns are centered and scaled to unit sample variance (`T - 1`
/// divisor). With `w_kij = x_ki x_kj`, the unbiased correlation is
/// `r_ij = T/(T-1) mean_k w_kij` and its variance estimate is
/// `T/(T-1)^3 sum_k (w_kij - mean w_ij)^2`. The intensity
/// `sum_{i!=j} var(r_ij) / sum_{i!=j} r_ij^2` is clipped to `[0, 1]`.
pub fn schafer_strimmer_lambda(panel: &ResidualPanel) -> Result<f64> {
    require_samples(panel, 3)?;
    let e = panel.matrix();
    let (t, p) = (e.nrows(), e.ncols());
    let tf = t as f64;
    let mut xs = e.clone();
    for (j, mut col) in xs.column_iter_mut().enumerate() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        let var = col.norm_squared() / (tf - 1.0);
        if var <= 0.0 {
            return Err(Error::ZeroVariance { column: j + 1 });
        }
        col /= var.sqrt();
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..p {
        for j in i + 1..p {
            let w: Vec<f64> = (0..t).map(|k| xs[(k, i)] * xs[(k, j)]).collect();
            let mean = w.iter().sum::<f64>() / tf;
            let ss: f64 = w.iter().map(|v| (v - mean).powi(2)).sum();
            let r = tf / (tf - 1.0) * mean;
            num += tf / (tf - 1.0).powi(3) * ss;
            den += r * r;
        }
    }
    // Both sums run over i < j; the symmetric halves cancel in the ratio.
    let lambda = if den == 0.0 { 1.0 } else { num / den };
    Ok(lambda.clamp(0.0, 1.0))
}

/// `lambda * diag(W_cov) + (1 - lambda) * W_cov` with the Schafer-Strimmer intensity.
pub fn w_shrink_schafer(panel: &ResidualPanel, opts: &CovOptions) -> Result<CovEstimate> {
    let lambda = schafer_strimmer_lambda(panel)?;
    let sample = w_sample(panel, opts)?.w;
    let target = DMatrix::from_diagonal(&sample.diagonal());
    Ok(CovEstimate {
        w: shrink(&target, &sample, lambda),
        scheme: Method::OpShrink,
        shrinkage: Some(lambda),
        rho: None,
    })
}

fn shrink(target: &DMatrix<f64>, sample: &DMatrix<f64>, intensity: f64) -> DMatrix<f64> {
    target * intensity + sample * (1.0 - intensity)
}

/// Constant-correlation target `F` and the Ledoit-Wolf intensity `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct LedoitWolfParts {
    pub sample: DMatrix<f64>,
    pub target: DMatrix<f64>,
    pub mean_correlation: f64,
    pub delta: f64,
}

/// Shrinkage toward constant correlation.
///
/// `f_ii = s_ii`, `f_ij = rbar sqrt(s_ii s_jj)` with `rbar` the mean
/// off-diagonal sample correlation. The intensity is
/// `delta = clip((pi - rho) / gamma / T, 0, 1)` where `pi` sums the
/// asymptotic variances of the sample covariances, `rho` their covariances
/// with the target, and `gamma` is the squared Frobenius distance between
/// target and sample.
pub fn ledoit_wolf_parts(panel: &ResidualPanel, opts: &CovOptions) -> Result<LedoitWolfParts> {
    require_samples(panel, 2)?;
    let d = panel.deviations(opts.center);
    let (t, p) = (d.nrows(), d.ncols());
    let tf = t as f64;
    let s = gram(&d);
    if let Some(j) = (0..p).find(|&j| s[(j, j)] <= 0.0) {
        return Err(Error::ZeroVariance { column: j + 1 });
    }
    let sd: Vec<f64> = (0..p).map(|i| s[(i, i)].sqrt()).collect();
    let mut rbar = 0.0;
    for i in 0..p {
        for j in i + 1..p {
            rbar += s[(i, j)] / (sd[i] * sd[j]);
        }
    }
    rbar *= 2.0 / ((p - 1) * p) as f64;
    let target = DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            s[(i, i)]
        } else {
            rbar * sd[i] * sd[j]
        }
    });

    // pi_ij = mean_t (d_ti d_tj - s_ij)^2
    let mut pi_mat = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let v = (0..t)
                .map(|r| (d[(r, i)] * d[(r, j)] - s[(i, j)]).powi(2))
                .sum::<f64>()
                / tf;
            pi_mat[(i, j)] = v;
            pi_mat[(j, i)] = v;
        }
    }
    let pi_hat = pi_mat.sum();

    // theta_{ii,ij} = mean_t (d_ti^2 - s_ii)(d_ti d_tj - s_ij)
    let theta = |i: usize, j: usize| {
        (0..t)
            .map(|r| (d[(r, i)].powi(2) - s[(i, i)]) * (d[(r, i)] * d[(r, j)] - s[(i, j)]))
            .sum::<f64>()
            / tf
    };
    let mut rho_hat = pi_mat.diagonal().sum();
    for i in 0..p {
        for j in 0..p {
            if i != j {
                rho_hat +=
                    rbar / 2.0 * ((sd[j] / sd[i]) * theta(i, j) + (sd[i] / sd[j]) * theta(j, i));
            }
        }
    }
    let gamma_hat = (&target - &s).norm_squared();
    let delta = if gamma_hat == 0.0 {
        1.0
    } else {
        ((pi_hat - rho_hat) / gamma_hat / tf).clamp(0.0, 1.0)
    };
    Ok(LedoitWolfParts {
        sample: s,
        target,
        mean_correlation: rbar,
        delta,
    })
}

pub fn w_ledoit_wolf(panel: &ResidualPanel, opts: &CovOptions) -> Result<CovEstimate> {
    let parts = ledoit_wolf_parts(panel, opts)?;
    Ok(CovEstimate {
        w: shrink(&parts.target, &parts.sample, parts.delta),
        scheme: Method::OpLedoitWolf,
        shrinkage: Some(parts.delta),
        rho: None,
    })
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Coordinate descent for `min_b 1/2 b'Vb - b'u + rho |b|_1`, warm-started from `beta`.
/// Returns `V b`.
fn lasso_cd(v: &DMatrix<f64>, u: &[f64], rho: f64, beta: &mut [f64], tol: f64) -> DVector<f64> {
    let m = beta.len();
    let mut vb = v * DVector::from_column_slice(beta);
    for _ in 0..10_000 {
        let mut max_change = 0.0f64;
        for k in 0..m {
            let vkk = v[(k, k)];
            let partial = u[k] - (vb[k] - vkk * beta[k]);
            let new = soft_threshold(partial, rho) / vkk;
            let delta = new - beta[k];
            if delta != 0.0 {
                vb.axpy(delta, &v.column(k), 1.0);
                beta[k] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change <= tol {
            break;
        }
    }
    vb
}

/// Graphical lasso on a sample covariance.
///
/// Starts from `W = S + rho I` and cycles through the columns: with `W11`
/// the current estimate without row/column `j` and `s12` the sample column,
/// it solves the lasso `min 1/2 b'W11 b - b's12 + rho |b|_1` by coordinate
/// descent and sets `w12 = W11 b`. Stops when no column moves more than
/// `tol * mean(diag S)`.
pub fn w_glasso(sample: &DMatrix<f64>, opts: &GlassoOptions) -> Result<CovEstimate> {
    if !sample.is_square() || sample.nrows() < 2 {
        return Err(Error::dim(
            "square covariance of dimension >= 2",
            format!("{}x{}", sample.nrows(), sample.ncols()),
        ));
    }
    if !opts.rho.is_finite() || opts.rho < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "rho must be >= 0, got {}",
            opts.rho
        )));
    }
    let s = crate::linalg::symmetrize(sample)?;
    let p = s.nrows();
    let rho = opts.rho;
    let scale = (s.diagonal().sum() / p as f64).abs().max(f64::MIN_POSITIVE);
    let threshold = opts.tol * scale;
    let inner_tol = threshold * 0.1;

    let mut w = &s + DMatrix::identity(p, p) * rho;
    if (0..p).any(|i| w[(i, i)] <= 0.0) {
        return Err(Error::InvalidArgument(
            "glasso needs a strictly positive diagonal".into(),
        ));
    }
    // beta[j] holds the warm start for column j (length p - 1).
    let mut betas = vec![vec![0.0; p - 1]; p];
    let others = |j: usize| (0..p).filter(move |&i| i != j);

    for sweep in 1..=opts.max_sweeps {
        let mut max_change = 0.0f64;
        for j in 0..p {
            let idx: Vec<usize> = others(j).collect();
            let w11 = DMatrix::from_fn(p - 1, p - 1, |a, b| w[(idx[a], idx[b])]);
            let s12: Vec<f64> = idx.iter().map(|&i| s[(i, j)]).collect();
            let w12 = lasso_cd(&w11, &s12, rho, &mut betas[j], inner_tol);
            for (a, &i) in idx.iter().enumerate() {
                max_change = max_change.max((w12[a] - w[(i, j)]).abs());
                w[(i, j)] = w12[a];
                w[(j, i)] = w12[a];
            }
        }
        if max_change <= threshold {
            let w = (&w + w.transpose()) * 0.5;
            return Ok(CovEstimate {
                w,
                scheme: Method::OpGlasso,
                shrinkage: None,
                rho: Some(rho),
            });
        }
        if sweep == opts.max_sweeps {
            break;
        }
    }
    Err(Error::Convergence {
        iterations: opts.max_sweeps,
    })
}

/// Covariance for an optimal `method`; `n` is the bottom dimension.
///
/// `opols` and `oplambda` ignore the panel; every other scheme requires one.
pub fn estimate(
    method: Method,
    n: usize,
    panel: Option<&ResidualPanel>,
    opts: &CovOptions,
) -> Result<CovEstimate> {
    let panel_for = || {
        let p = panel
            .ok_or_else(|| Error::InvalidArgument(format!("{method} needs a residual panel")))?;
        if p.levels() != 2 * n - 1 {
            return Err(Error::dim(
                format!("{} residual columns", 2 * n - 1),
                p.levels(),
            ));
        }
        Ok(p)
    };
    match method {
        Method::OpOls => w_identity(n),
        Method::OpLambda => w_lambda(&summation_matrix(n, 1)?),
        Method::OpWls => w_diagonal(panel_for()?, opts),
        Method::OpCov => w_sample(panel_for()?, opts),
        Method::OpShrink => w_shrink_schafer(panel_for()?, opts),
        Method::OpLedoitWolf => w_ledoit_wolf(panel_for()?, opts),
        Method::OpGlasso => {
            let sample = w_sample(panel_for()?, opts)?;
            w_glasso(&sample.w, &opts.glasso)
        }
        other => Err(Error::InvalidArgument(format!(
            "{other} has no covariance estimator"
        ))),
    }
}
