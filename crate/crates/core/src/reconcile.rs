//! Linear reconciliation `y~ = S P y^` for aggregated curves.
//!
//! Every method is a mapping matrix `P` of shape `n x (2n - 1)` taking the
//! stacked base forecasts to bottom values:
//!
//! | token | mapping |
//! |-------|---------|
//! | `bu` | `[O I_n]` |
//! | `tdar`, `tdra`, `tdfo` | `[p O]`, proportions of the top level `a_n` |
//! | `adar`, `adra`, `adfo` | `[Q O]`, `Q = antidiag(q)`, proportions of the node directly above |
//! | `op*` | `(S' W^{-1} S)^{-1} S' W^{-1}` |
//!
//! Aggregated-down maps `b~_j = q_j * a^_j`: row `j` of `Q` picks entry
//! `n - j + 1` of `y^`, which holds `a_j` (with `a_1 = b_1` at position `n`).

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_finite, Error, Result};
use crate::hierarchy::{bottom_dim, permutation_matrix, summation_matrix, HierarchyVector};
use crate::linalg::gls_projection;

/// Reconciliation method, identified on the command line by its lowercase token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Bu,
    TdAr,
    TdRa,
    TdFo,
    AdAr,
    AdRa,
    AdFo,
    OpOls,
    OpLambda,
    OpWls,
    OpCov,
    OpShrink,
    OpLedoitWolf,
    OpGlasso,
}

impl Method {
    pub const ALL: [Method; 14] = [
        Method::Bu,
        Method::TdAr,
        Method::TdRa,
        Method::TdFo,
        Method::AdAr,
        Method::AdRa,
        Method::AdFo,
        Method::OpOls,
        Method::OpLambda,
        Method::OpWls,
        Method::OpCov,
        Method::OpShrink,
        Method::OpLedoitWolf,
        Method::OpGlasso,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Method::Bu => "bu",
            Method::TdAr => "tdar",
            Method::TdRa => "tdra",
            Method::TdFo => "tdfo",
            Method::AdAr => "adar",
            Method::AdRa => "adra",
            Method::AdFo => "adfo",
            Method::OpOls => "opols",
            Method::OpLambda => "oplambda",
            Method::OpWls => "opwls",
            Method::OpCov => "opcov",
            Method::OpShrink => "opshrink",
            Method::OpLedoitWolf => "opledoitwolf",
            Method::OpGlasso => "opglasso",
        }
    }

    /// Minimum-trace methods built from a covariance `W`.
    pub fn is_optimal(self) -> bool {
        matches!(
            self,
            Method::OpOls
                | Method::OpLambda
                | Method::OpWls
                | Method::OpCov
                | Method::OpShrink
                | Method::OpLedoitWolf
                | Method::OpGlasso
        )
    }

    /// Proportions estimated from historical actuals (average ratio / ratio of averages).
    pub fn needs_history(self) -> bool {
        matches!(
            self,
            Method::TdAr | Method::TdRa | Method::AdAr | Method::AdRa
        )
    }

    /// Covariance estimated from a residual panel.
    pub fn needs_residuals(self) -> bool {
        self.is_optimal() && !matches!(self, Method::OpOls | Method::OpLambda)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.token() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method token '{s}'")))
    }
}

/// `n x (2n - 1)` matrix mapping base forecasts to bottom values.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingMatrix {
    p: DMatrix<f64>,
    method: Method,
}

impl MappingMatrix {
    pub fn new(p: DMatrix<f64>, method: Method) -> Result<Self> {
        let n = p.nrows();
        if n < 2 || p.ncols() != 2 * n - 1 {
            return Err(Error::dim(
                "n x (2n-1) mapping with n >= 2",
                format!("{}x{}", p.nrows(), p.ncols()),
            ));
        }
        Ok(Self { p, method })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn bottom_len(&self) -> usize {
        self.p.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProportionKind {
    TopDown,
    AggregatedDown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProportionSource {
    AverageRatio,
    RatioOfAverages,
    Forecasted,
}

/// Disaggregation proportions: `p` (top-down) or `q` (aggregated-down).
#[derive(Debug, Clone, PartialEq)]
pub struct Proportions {
    values: Vec<f64>,
    kind: ProportionKind,
    source: ProportionSource,
}

impl Proportions {
    pub fn new(values: Vec<f64>, kind: ProportionKind, source: ProportionSource) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::dim("n >= 2 proportions", values.len()));
        }
        ensure_finite(&values)?;
        if kind == ProportionKind::AggregatedDown && values[0] != 1.0 {
            return Err(Error::InvalidArgument(format!(
                "aggregated-down proportions need q_1 = 1, got {}",
                values[0]
            )));
        }
        Ok(Self {
            values,
            kind,
            source,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> ProportionKind {
        self.kind
    }

    pub fn source(&self) -> ProportionSource {
        self.source
    }
}

/// Historical actuals: `T` curves as aggregated values `a` and bottom values `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    /// `T x n`, column `j` is `a_{j+1}`.
    a: DMatrix<f64>,
    /// `T x n`, column `j` is `b_{j+1}`.
    b: DMatrix<f64>,
}

impl History {
    /// Coherent history from bottom values (`T x n`).
    pub fn from_bottom(b: DMatrix<f64>) -> Result<Self> {
        if b.nrows() == 0 {
            return Err(Error::InsufficientData {
                required: 1,
                actual: 0,
            });
        }
        if b.ncols() < 2 {
            return Err(Error::dim("n >= 2 columns", b.ncols()));
        }
        ensure_finite(b.as_slice())?;
        let mut a = b.clone();
        for t in 0..a.nrows() {
            for j in 1..a.ncols() {
                a[(t, j)] = a[(t, j - 1)] + b[(t, j)];
            }
        }
        Ok(Self { a, b })
    }

    /// History taken level by level from a `T x (2n - 1)` panel laid out like `y`.
    pub fn from_levels(panel: &DMatrix<f64>) -> Result<Self> {
        if panel.nrows() == 0 {
            return Err(Error::InsufficientData {
                required: 1,
                actual: 0,
            });
        }
        let n = bottom_dim(panel.ncols())?;
        ensure_finite(panel.as_slice())?;
        let t = panel.nrows();
        let a = DMatrix::from_fn(t, n, |r, j| panel[(r, n - 1 - j)]);
        let b = DMatrix::from_fn(t, n, |r, j| panel[(r, n - 1 + j)]);
        Ok(Self { a, b })
    }

    pub fn len(&self) -> usize {
        self.a.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.a.nrows() == 0
    }

    pub fn bottom_len(&self) -> usize {
        self.a.ncols()
    }
}

/// Where proportions are estimated from.
#[derive(Debug, Clone, Copy)]
pub enum ProportionInput<'a> {
    History(&'a History),
    Forecast(&'a HierarchyVector),
}

/// Splits a canonical `y` into `(a, b)`, both indexed 0-based from `a_1`/`b_1`.
fn split_levels(y: &HierarchyVector) -> Result<(Vec<f64>, &[f64])> {
    if y.k() != 1 {
        return Err(Error::InvalidArgument(format!(
            "proportions need a canonical forecast vector, got k = {}",
            y.k()
        )));
    }
    let n = y.bottom_len();
    let v = y.values();
    let a = (0..n).map(|j| v[n - 1 - j]).collect();
    Ok((a, &v[n - 1..]))
}

fn column_mean(m: &DMatrix<f64>, j: usize) -> f64 {
    m.column(j).mean()
}

/// Top-down proportions `p` of the top level `a_n`.
///
/// From forecasts, the nested form is used:
/// `p_n = b_n / (a_{n-1} + b_n)`,
/// `p_j = b_j / (a_{j-1} + b_j) * prod_{i=j..n-1} a_i / (a_i + b_{i+1})` for `1 < j < n`,
/// `p_1 = prod_{i=1..n-1} a_i / (a_i + b_{i+1})`.
/// Near-zero denominators are not regularized; exact zeros return
/// [`Error::Division`] with the 1-based `j` of `a_{j-1} + b_j`.
pub fn proportions_top_down(
    input: ProportionInput<'_>,
    source: ProportionSource,
) -> Result<Proportions> {
    let values = match (input, source) {
        (ProportionInput::Forecast(y), ProportionSource::Forecasted) => {
            let (a, b) = split_levels(y)?;
            top_down_forecasted(&a, b)?
        }
        (ProportionInput::History(h), ProportionSource::AverageRatio) => {
            let n = h.bottom_len();
            let t_len = h.len();
            if let Some(t) = (0..t_len).find(|&t| h.a[(t, n - 1)] == 0.0) {
                return Err(Error::Division {
                    what: "top-down average ratio (time step with a_n = 0)",
                    index: t + 1,
                });
            }
            (0..n)
                .map(|j| {
                    (0..t_len)
                        .map(|t| h.b[(t, j)] / h.a[(t, n - 1)])
                        .sum::<f64>()
                        / t_len as f64
                })
                .collect()
        }
        (ProportionInput::History(h), ProportionSource::RatioOfAverages) => {
            let n = h.bottom_len();
            let top = column_mean(&h.a, n - 1);
            if top == 0.0 {
                return Err(Error::Division {
                    what: "top-down ratio of averages",
                    index: n,
                });
            }
            (0..n).map(|j| column_mean(&h.b, j) / top).collect()
        }
        _ => return Err(mismatched_source(source)),
    };
    Proportions::new(values, ProportionKind::TopDown, source)
}

fn top_down_forecasted(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    // ratio[i] = a_{i+1} / (a_{i+1} + b_{i+2}) in 1-based terms, i = 0..n-2
    let mut ratio = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let denom = a[i] + b[i + 1];
        if denom == 0.0 {
            return Err(Error::Division {
                what: "top-down forecasted proportions",
                index: i + 2,
            });
        }
        ratio.push(a[i] / denom);
    }
    // suffix[j] = prod_{i >= j} ratio[i]
    let mut suffix = vec![1.0; n];
    for i in (0..n - 1).rev() {
        suffix[i] = suffix[i + 1] * ratio[i];
    }
    let mut p = vec![0.0; n];
    p[0] = suffix[0];
    for j in 1..n {
        p[j] = b[j] / (a[j - 1] + b[j]) * suffix[j];
    }
    Ok(p)
}

/// Aggregated-down proportions `q_j` of `b_j` within `a_j`; always `q_1 = 1`.
///
/// Forecasted: `q_j = (a_j - a_{j-1}) / a_j`. Historical: average ratio
/// `mean_t(b_{j,t} / a_{j,t})` or ratio of averages `mean(b_j) / mean(a_j)`.
pub fn proportions_aggregated_down(
    input: ProportionInput<'_>,
    source: ProportionSource,
) -> Result<Proportions> {
    let mut q = match (input, source) {
        (ProportionInput::Forecast(y), ProportionSource::Forecasted) => {
            let (a, _) = split_levels(y)?;
            let n = a.len();
            let mut q = vec![1.0; n];
            for j in 1..n {
                if a[j] == 0.0 {
                    return Err(Error::Division {
                        what: "aggregated-down forecasted proportions",
                        index: j + 1,
                    });
                }
                q[j] = (a[j] - a[j - 1]) / a[j];
            }
            q
        }
        (ProportionInput::History(h), ProportionSource::AverageRatio) => {
            let n = h.bottom_len();
            let t_len = h.len();
            let mut q = vec![1.0; n];
            for (j, qj) in q.iter_mut().enumerate().skip(1) {
                let mut acc = 0.0;
                for t in 0..t_len {
                    let denom = h.a[(t, j)];
                    if denom == 0.0 {
                        return Err(Error::Division {
                            what: "aggregated-down average ratio",
                            index: j + 1,
                        });
                    }
                    acc += h.b[(t, j)] / denom;
                }
                *qj = acc / t_len as f64;
            }
            q
        }
        (ProportionInput::History(h), ProportionSource::RatioOfAverages) => {
            let n = h.bottom_len();
            let mut q = vec![1.0; n];
            for (j, qj) in q.iter_mut().enumerate().skip(1) {
                let denom = column_mean(&h.a, j);
                if denom == 0.0 {
                    return Err(Error::Division {
                        what: "aggregated-down ratio of averages",
                        index: j + 1,
                    });
                }
                *qj = column_mean(&h.b, j) / denom;
            }
            q
        }
        _ => return Err(mismatched_source(source)),
    };
    q[0] = 1.0;
    Proportions::new(q, ProportionKind::AggregatedDown, source)
}

fn mismatched_source(source: ProportionSource) -> Error {
    let need = match source {
        ProportionSource::Forecasted => "a forecast vector",
        _ => "a history",
    };
    Error::InvalidArgument(format!("{source:?} proportions need {need}"))
}

/// `P_bu = [O_{n x (n-1)} I_n]`.
pub fn mapping_bottom_up(n: usize) -> Result<MappingMatrix> {
    if n < 2 {
        return Err(Error::dim("n >= 2", n));
    }
    let p = DMatrix::from_fn(n, 2 * n - 1, |i, j| if j == n - 1 + i { 1.0 } else { 0.0 });
    MappingMatrix::new(p, Method::Bu)
}

fn source_method(kind: ProportionKind, source: ProportionSource) -> Method {
    use ProportionKind::*;
    use ProportionSource::*;
    match (kind, source) {
        (TopDown, AverageRatio) => Method::TdAr,
        (TopDown, RatioOfAverages) => Method::TdRa,
        (TopDown, Forecasted) => Method::TdFo,
        (AggregatedDown, AverageRatio) => Method::AdAr,
        (AggregatedDown, RatioOfAverages) => Method::AdRa,
        (AggregatedDown, Forecasted) => Method::AdFo,
    }
}

/// `P_td = [p O_{n x (2n-2)}]`: every bottom value is a share of `a^_n`.
pub fn mapping_top_down(p: &Proportions) -> Result<MappingMatrix> {
    if p.kind != ProportionKind::TopDown {
        return Err(Error::InvalidArgument(
            "top-down mapping needs top-down proportions".into(),
        ));
    }
    let n = p.values.len();
    let mut m = DMatrix::zeros(n, 2 * n - 1);
    for (i, v) in p.values.iter().enumerate() {
        m[(i, 0)] = *v;
    }
    MappingMatrix::new(m, source_method(p.kind, p.source))
}

/// `P_ad = [Q O_{n x (n-1)}]` with `Q = antidiag(q_1, ..., q_n)` read top to bottom.
pub fn mapping_aggregated_down(q: &Proportions) -> Result<MappingMatrix> {
    if q.kind != ProportionKind::AggregatedDown {
        return Err(Error::InvalidArgument(
            "aggregated-down mapping needs aggregated-down proportions".into(),
        ));
    }
    if q.values[0] != 1.0 {
        return Err(Error::InvalidArgument(format!(
            "q_1 must be 1, got {}",
            q.values[0]
        )));
    }
    let n = q.values.len();
    let mut m = DMatrix::zeros(n, 2 * n - 1);
    for (j, v) in q.values.iter().enumerate() {
        m[(j, n - 1 - j)] = *v;
    }
    MappingMatrix::new(m, source_method(q.kind, q.source))
}

/// Minimum-trace mapping `(S' W^{-1} S)^{-1} S' W^{-1}` for an optimal `method`.
///
/// `W` is symmetrized when its asymmetry is below 1e-10 (relative), rejected
/// otherwise, and must be positive definite.
pub fn mapping_optimal(
    s: &DMatrix<f64>,
    w: &DMatrix<f64>,
    method: Method,
) -> Result<MappingMatrix> {
    if !method.is_optimal() {
        return Err(Error::InvalidArgument(format!(
            "{method} is not an optimal method"
        )));
    }
    let p = gls_projection(s, w, method.token())?;
    MappingMatrix::new(p, method)
}

/// Coherent forecast: `y~ = S b~` with `b~ = P y^`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconciledForecast {
    pub y_tilde: Vec<f64>,
    pub b_tilde: Vec<f64>,
}

impl ReconciledForecast {
    /// Largest `|y~ - S b~|` against the given summation matrix.
    pub fn coherency_error(&self, s: &DMatrix<f64>) -> f64 {
        let y = s * DVector::from_column_slice(&self.b_tilde);
        y.iter()
            .zip(&self.y_tilde)
            .map(|(l, r)| (l - r).abs())
            .fold(0.0, f64::max)
    }
}

/// Applies `y~ = S P y^`.
pub fn reconcile(
    p: &MappingMatrix,
    s: &DMatrix<f64>,
    y_hat: &HierarchyVector,
) -> Result<ReconciledForecast> {
    let n = p.bottom_len();
    if s.nrows() != 2 * n - 1 || s.ncols() != n {
        return Err(Error::dim(
            format!("{}x{} summation matrix", 2 * n - 1, n),
            format!("{}x{}", s.nrows(), s.ncols()),
        ));
    }
    if y_hat.values().len() != 2 * n - 1 {
        return Err(Error::dim(2 * n - 1, y_hat.values().len()));
    }
    let b = p.matrix() * y_hat.to_dvector();
    let y = s * &b;
    Ok(ReconciledForecast {
        y_tilde: y.as_slice().to_vec(),
        b_tilde: b.as_slice().to_vec(),
    })
}

/// Reconciliation carried out in representation `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationForecast {
    pub k: usize,
    /// `y~_[k]` and `b~_[k]`.
    pub in_representation: ReconciledForecast,
    /// `B_[k] y~_[k]`, comparable with a canonical reconciliation.
    pub canonical: Vec<f64>,
}

/// Minimum-trace reconciliation of `y^_[k]` with `S_[k]` and covariance `W_[k]`.
///
/// When `y^ = B_[k] y^_[k]` and `W_[k] = B_[k]' W B_[k]`, the canonical image
/// equals the canonical reconciliation with `W`.
pub fn reconcile_in_representation(
    y_hat_k: &HierarchyVector,
    w_k: &DMatrix<f64>,
    method: Method,
) -> Result<RepresentationForecast> {
    let n = y_hat_k.bottom_len();
    let k = y_hat_k.k();
    let s_k = summation_matrix(n, k)?;
    let p = mapping_optimal(&s_k, w_k, method)?;
    let in_representation = reconcile(&p, &s_k, y_hat_k)?;
    let b_k = permutation_matrix(n, k)?;
    let canonical = b_k * DVector::from_column_slice(&in_representation.y_tilde);
    Ok(RepresentationForecast {
        k,
        in_representation,
        canonical: canonical.as_slice().to_vec(),
    })
}

/// Transforms a canonical covariance into representation `k`: `W_[k] = B_[k]' W B_[k]`,
/// so that `W_[k]^{-1} = B_[k]' W^{-1} B_[k]`.
pub fn covariance_in_representation(w: &DMatrix<f64>, n: usize, k: usize) -> Result<DMatrix<f64>> {
    let b = permutation_matrix(n, k)?;
    if w.nrows() != b.nrows() || !w.is_square() {
        return Err(Error::dim(
            format!("{0}x{0}", b.nrows()),
            format!("{}x{}", w.nrows(), w.ncols()),
        ));
    }
    Ok(b.transpose() * w * b)
}

/// Inputs a method may draw on when its mapping is built.
#[derive(Debug, Clone, Copy)]
pub struct MethodInputs<'a> {
    /// Canonical base forecasts.
    pub forecast: &'a HierarchyVector,
    /// Actuals for `*ar` / `*ra` proportions.
    pub history: Option<&'a History>,
    /// Covariance for optimal methods.
    pub covariance: Option<&'a DMatrix<f64>>,
}

/// Builds the mapping matrix for any method.
pub fn mapping_for(method: Method, inputs: MethodInputs<'_>) -> Result<MappingMatrix> {
    let n = inputs.forecast.bottom_len();
    let history = || {
        inputs.history.ok_or_else(|| {
            Error::InvalidArgument(format!("method {method} needs historical actuals"))
        })
    };
    let forecast = ProportionInput::Forecast(inputs.forecast);
    match method {
        Method::Bu => mapping_bottom_up(n),
        Method::TdAr => mapping_top_down(&proportions_top_down(
            ProportionInput::History(history()?),
            ProportionSource::AverageRatio,
        )?),
        Method::TdRa => mapping_top_down(&proportions_top_down(
            ProportionInput::History(history()?),
            ProportionSource::RatioOfAverages,
        )?),
        Method::TdFo => mapping_top_down(&proportions_top_down(
            forecast,
            ProportionSource::Forecasted,
        )?),
        Method::AdAr => mapping_aggregated_down(&proportions_aggregated_down(
            ProportionInput::History(history()?),
            ProportionSource::AverageRatio,
        )?),
        Method::AdRa => mapping_aggregated_down(&proportions_aggregated_down(
            ProportionInput::History(history()?),
            ProportionSource::RatioOfAverages,
        )?),
        Method::AdFo => mapping_aggregated_down(&proportions_aggregated_down(
            forecast,
            ProportionSource::Forecasted,
        )?),
        _ => {
            let w = inputs.covariance.ok_or_else(|| {
                Error::InvalidArgument(format!("method {method} needs a covariance matrix"))
            })?;
            mapping_optimal(&summation_matrix(n, 1)?, w, method)
        }
    }
}
