//! Dense helpers for the generalized least-squares projection.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

/// Asymmetry allowed before a covariance is rejected, relative to `max(1, max|w_ij|)`.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Largest `|m_ij - m_ji|`.
pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i + 1..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Returns `(W + W') / 2`, or an error if `W` is not square or visibly asymmetric.
pub fn symmetrize(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !w.is_square() {
        return Err(Error::dim(
            "square covariance",
            format!("{}x{}", w.nrows(), w.ncols()),
        ));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "covariance has non-finite entries".into(),
        ));
    }
    let scale = w.amax().max(1.0);
    let asym = max_asymmetry(w);
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::InvalidArgument(format!(
            "covariance is not symmetric (max asymmetry {asym:e})"
        )));
    }
    Ok((w + w.transpose()) * 0.5)
}

/// Cholesky factor of a symmetric matrix; failure names the estimator.
pub fn cholesky(w: DMatrix<f64>, estimator: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(w).ok_or_else(|| Error::SingularMatrix {
        estimator: estimator.to_string(),
    })
}

/// `P = (S' W^{-1} S)^{-1} S' W^{-1}` using two Cholesky solves.
///
/// `W^{-1}` is never formed: `X = W^{-1} S` comes from the factor of `W`,
/// then the `n x n` Gram matrix `S'X` is factorized and solved against `X'`.
pub fn gls_projection(s: &DMatrix<f64>, w: &DMatrix<f64>, estimator: &str) -> Result<DMatrix<f64>> {
    if w.nrows() != s.nrows() {
        return Err(Error::dim(
            format!("{0}x{0} covariance", s.nrows()),
            format!("{}x{}", w.nrows(), w.ncols()),
        ));
    }
    let w = symmetrize(w)?;
    let chol_w = cholesky(w, estimator)?;
    let winv_s = chol_w.solve(s);
    let gram = s.transpose() * &winv_s;
    let gram = (&gram + gram.transpose()) * 0.5;
    let chol_g = cholesky(gram, estimator)?;
    Ok(chol_g.solve(&winv_s.transpose()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetric_and_indefinite() {
        let s = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
        let mut w = DMatrix::<f64>::identity(3, 3);
        w[(0, 1)] = 0.1;
        assert!(matches!(
            gls_projection(&s, &w, "x"),
            Err(Error::InvalidArgument(_))
        ));
        let w = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0, 1.0]));
        assert_eq!(
            gls_projection(&s, &w, "opcov"),
            Err(Error::SingularMatrix {
                estimator: "opcov".into()
            })
        );
    }

    #[test]
    fn tiny_asymmetry_is_symmetrized() {
        let mut w = DMatrix::<f64>::identity(3, 3);
        w[(0, 1)] = 1e-13;
        let sym = symmetrize(&w).unwrap();
        assert_eq!(max_asymmetry(&sym), 0.0);
    }
}
