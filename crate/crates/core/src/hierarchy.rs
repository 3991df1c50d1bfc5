//! Representations of an aggregated curve as a vertical hierarchy.
//!
//! A curve `a = (a_1, ..., a_n)` is the cumulative sum of its marginal
//! (bottom) values `b`. Stacking the aggregates in reverse order on top of
//! the bottom values gives the hierarchy vector
//!
//! ```text
//! y = (a_n, a_{n-1}, ..., a_2, b_1, ..., b_n)      length 2n - 1
//! ```
//!
//! where `a_1 = b_1` is stored once, at position `n`. The summation matrix
//! `S` satisfies `y = S b`.
//!
//! Disaggregation can also start from any point `k` of the curve, which
//! yields the alternative bottom series `b_[k]`, summation matrix `S_[k]` and
//! hierarchy vector `y_[k]`. All of them are tied to the canonical form by
//! `S = B_[k] S_[k] A_[k] D_n^{-1}`.
//!
//! Index conventions: curve points, bottom values and the representation
//! index `k` are 1-based in every public signature and doc comment, the
//! storage underneath is plain 0-based `Vec`/`DMatrix`. `k = 1` is the
//! canonical representation.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_finite, Error, Result};

/// Cumulative (aggregated) values `a_1..a_n` of a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    values: Vec<f64>,
}

impl Curve {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::dim("curve length >= 2", values.len()));
        }
        ensure_finite(&values)?;
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at the 1-based point `i`.
    pub fn at(&self, i: usize) -> f64 {
        self.values[i - 1]
    }
}

/// Bottom values `b_[k],1..b_[k],n`; `origin_k = 1` is the canonical
/// marginal series.
#[derive(Debug, Clone, PartialEq)]
pub struct BottomSeries {
    values: Vec<f64>,
    origin_k: usize,
}

impl BottomSeries {
    /// Canonical (`k = 1`) bottom series.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_origin(values, 1)
    }

    pub fn with_origin(values: Vec<f64>, origin_k: usize) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::dim("bottom series length >= 2", values.len()));
        }
        check_k(values.len(), origin_k)?;
        ensure_finite(&values)?;
        Ok(Self { values, origin_k })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn origin_k(&self) -> usize {
        self.origin_k
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A `(2n - 1)`-vector laid out as `y_[k] = (a_[-k]; b_[k])`.
///
/// Base forecasts are generally incoherent, so construction only checks the
/// length and finiteness, not the summation relations.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyVector {
    values: Vec<f64>,
    k: usize,
}

impl HierarchyVector {
    /// Canonical (`k = 1`) vector.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_representation(values, 1)
    }

    pub fn with_representation(values: Vec<f64>, k: usize) -> Result<Self> {
        let n = bottom_dim(values.len())?;
        check_k(n, k)?;
        ensure_finite(&values)?;
        Ok(Self { values, k })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of bottom values `n`.
    pub fn bottom_len(&self) -> usize {
        self.values.len().div_ceil(2)
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }

    /// The trailing `n` entries, i.e. `b_[k]`.
    pub fn bottom(&self) -> &[f64] {
        &self.values[self.bottom_len() - 1..]
    }

    /// Whether `y = S_[k] b` holds to `tol` (absolute, elementwise).
    pub fn is_coherent(&self, tol: f64) -> bool {
        let n = self.bottom_len();
        let s = summation_matrix(n, self.k).expect("validated at construction");
        let y = &s * DVector::from_column_slice(self.bottom());
        y.iter()
            .zip(&self.values)
            .all(|(lhs, rhs)| (lhs - rhs).abs() <= tol)
    }
}

/// `n` from a hierarchy length `2n - 1`.
pub fn bottom_dim(hierarchy_len: usize) -> Result<usize> {
    if hierarchy_len < 3 || hierarchy_len.is_multiple_of(2) {
        return Err(Error::dim("odd hierarchy length 2n-1 >= 3", hierarchy_len));
    }
    Ok(hierarchy_len.div_ceil(2))
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("n must be >= 2, got {n}")));
    }
    Ok(())
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "representation index k must lie in [1, {n}], got {k}"
        )));
    }
    Ok(())
}

/// Cumulative sum `a_i = b_1 + ... + b_i` of a canonical bottom series.
pub fn aggregate_bottom(b: &BottomSeries) -> Result<Curve> {
    if b.origin_k != 1 {
        return Err(Error::InvalidArgument(format!(
            "aggregate_bottom expects a canonical series (k = 1), got k = {}",
            b.origin_k
        )));
    }
    let values = b
        .values
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect();
    Curve::new(values)
}

/// Rebuilds the curve from any representation `b_[k]`:
/// `a_i = sum_{j=k..i} b_[k],j` for `i > k` and `sum_{j=i..k}` for `i <= k`.
pub fn aggregate_representation(b: &BottomSeries) -> Result<Curve> {
    let k0 = b.origin_k - 1;
    let v = &b.values;
    let n = v.len();
    let mut a = vec![0.0; n];
    a[k0] = v[k0];
    for i in (0..k0).rev() {
        a[i] = a[i + 1] + v[i];
    }
    for i in k0 + 1..n {
        a[i] = a[i - 1] + v[i];
    }
    Curve::new(a)
}

/// Disaggregates a curve starting from the 1-based point `k`:
/// `b_[k],i = a_i - a_{i-1}` for `i > k`, `a_i - a_{i+1}` for `i < k`, and
/// `b_[k],k = a_k`.
pub fn disaggregate(a: &Curve, k: usize) -> Result<BottomSeries> {
    let n = a.len();
    check_k(n, k)?;
    let k0 = k - 1;
    let v = &a.values;
    let values = (0..n)
        .map(|i| match i.cmp(&k0) {
            std::cmp::Ordering::Greater => v[i] - v[i - 1],
            std::cmp::Ordering::Less => v[i] - v[i + 1],
            std::cmp::Ordering::Equal => v[i],
        })
        .collect();
    BottomSeries::with_origin(values, k)
}

/// `a_[-k]`: the curve reversed, without its `k`-th point.
fn reversed_without(a: &[f64], k: usize) -> impl Iterator<Item = f64> + '_ {
    a.iter()
        .enumerate()
        .rev()
        .filter(move |(i, _)| *i != k - 1)
        .map(|(_, v)| *v)
}

/// `y_[k] = (a_[-k]; b_[k])`. For `k = 1` this is `(a_n, ..., a_2, b_1, ..., b_n)`.
pub fn build_hierarchy_vector(a: &Curve, k: usize) -> Result<HierarchyVector> {
    let b = disaggregate(a, k)?;
    let values: Vec<f64> = reversed_without(&a.values, k)
        .chain(b.values.iter().copied())
        .collect();
    HierarchyVector::with_representation(values, k)
}

/// Summation matrix `S_[k]` of shape `(2n - 1) x n` with `y_[k] = S_[k] b_[k]`.
///
/// Row `r < n - 1` holds the aggregate `a_i` listed in `a_[-k]`; it sums
/// `b_[k],j` over `j` between `k` and `i` inclusive. The last `n` rows are
/// the identity.
pub fn summation_matrix(n: usize, k: usize) -> Result<DMatrix<f64>> {
    check_n(n)?;
    check_k(n, k)?;
    let mut s = DMatrix::zeros(2 * n - 1, n);
    let k0 = k - 1;
    for (row, i) in (0..n).rev().filter(|&i| i != k0).enumerate() {
        let (lo, hi) = if i > k0 { (k0, i) } else { (i, k0) };
        for j in lo..=hi {
            s[(row, j)] = 1.0;
        }
    }
    for j in 0..n {
        s[(n - 1 + j, j)] = 1.0;
    }
    Ok(s)
}

/// Differencing matrix `D_n`: 1 on the diagonal, -1 on the subdiagonal, so `b = D_n a`.
pub fn difference_matrix(n: usize) -> Result<DMatrix<f64>> {
    check_n(n)?;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else if i == j + 1 {
            -1.0
        } else {
            0.0
        }
    }))
}

/// `D_n^{-1}`: lower-triangular all-ones.
pub fn cumulation_matrix(n: usize) -> Result<DMatrix<f64>> {
    check_n(n)?;
    Ok(DMatrix::from_fn(
        n,
        n,
        |i, j| if j <= i { 1.0 } else { 0.0 },
    ))
}

/// `A_[k]` with `b_[k] = A_[k] a`. Equals `D_n` for `k = 1`.
pub fn representation_matrix(n: usize, k: usize) -> Result<DMatrix<f64>> {
    check_n(n)?;
    check_k(n, k)?;
    let k0 = k - 1;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 1.0;
        if i > k0 {
            m[(i, i - 1)] = -1.0;
        } else if i < k0 {
            m[(i, i + 1)] = -1.0;
        }
    }
    Ok(m)
}

/// Signed permutation `B_[k]` with `y = B_[k] y_[k]`; orthogonal.
pub fn permutation_matrix(n: usize, k: usize) -> Result<DMatrix<f64>> {
    check_n(n)?;
    check_k(n, k)?;
    let dim = 2 * n - 1;
    let mut m = DMatrix::zeros(dim, dim);
    // Positions in y_[k] (0-based): aggregate a_i for i != k sits at
    // n - i when i > k and at n - 1 - i when i < k; b_[k],j at n - 2 + j.
    let agg_pos = |i: usize| if i > k { n - i } else { n - 1 - i };
    let bottom_pos = |j: usize| n - 2 + j;
    // Canonical y: a_i at n - i for i in 2..=n, b_i at n - 2 + i.
    for i in 2..=n {
        let row = n - i;
        if i == k {
            m[(row, bottom_pos(k))] = 1.0;
        } else {
            m[(row, agg_pos(i))] = 1.0;
        }
    }
    for i in 1..=n {
        let row = n - 2 + i;
        if i == 1 {
            // b_1 = a_1
            if k == 1 {
                m[(row, bottom_pos(1))] = 1.0;
            } else {
                m[(row, agg_pos(1))] = 1.0;
            }
        } else if i <= k {
            // b_i = a_i - a_{i-1} = -b_[k],i-1
            m[(row, bottom_pos(i - 1))] = -1.0;
        } else {
            m[(row, bottom_pos(i))] = 1.0;
        }
    }
    Ok(m)
}

/// All matrices relating representation `k` to the canonical one.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureMatrices {
    pub n: usize,
    pub k: usize,
    /// Canonical summation matrix, `(2n-1) x n`.
    pub s: DMatrix<f64>,
    /// `S_[k]`, `(2n-1) x n`.
    pub s_k: DMatrix<f64>,
    /// `D_n`, `n x n`.
    pub d: DMatrix<f64>,
    /// `A_[k]`, `n x n`.
    pub a_k: DMatrix<f64>,
    /// `B_[k]`, `(2n-1) x (2n-1)`.
    pub b_k: DMatrix<f64>,
}

impl StructureMatrices {
    /// `B_[k] S_[k] A_[k] D_n^{-1}`, which equals `S`.
    pub fn recomposed_s(&self) -> DMatrix<f64> {
        let d_inv = cumulation_matrix(self.n).expect("n validated");
        &self.b_k * &self.s_k * &self.a_k * d_inv
    }
}

pub fn structure_matrices(n: usize, k: usize) -> Result<StructureMatrices> {
    Ok(StructureMatrices {
        n,
        k,
        s: summation_matrix(n, 1)?,
        s_k: summation_matrix(n, k)?,
        d: difference_matrix(n)?,
        a_k: representation_matrix(n, k)?,
        b_k: permutation_matrix(n, k)?,
    })
}

/// Re-expresses a canonical vector in representation `k`: `y_[k] = B_[k]' y`.
pub fn to_representation(y: &HierarchyVector, k: usize) -> Result<HierarchyVector> {
    if y.k != 1 {
        return Err(Error::InvalidArgument(format!(
            "expected a canonical vector, got k = {}",
            y.k
        )));
    }
    let b = permutation_matrix(y.bottom_len(), k)?;
    let yk = b.transpose() * y.to_dvector();
    HierarchyVector::with_representation(yk.as_slice().to_vec(), k)
}

/// Maps a representation-`k` vector back to canonical: `y = B_[k] y_[k]`.
pub fn to_canonical(yk: &HierarchyVector) -> Result<HierarchyVector> {
    let b = permutation_matrix(yk.bottom_len(), yk.k)?;
    let y = b * yk.to_dvector();
    HierarchyVector::new(y.as_slice().to_vec())
}
