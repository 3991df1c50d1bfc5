//! Reconciling in representation `k` with `W_[k] = B_[k]' W B_[k]` gives the
//! same coherent forecast as the canonical reconciliation.
//!
//! ```bash
//! cargo run --example representation_invariance
//! ```

use curve_reconcile::hierarchy::{summation_matrix, to_representation, HierarchyVector};
use curve_reconcile::reconcile::{
    covariance_in_representation, mapping_optimal, reconcile, reconcile_in_representation, Method,
};
use nalgebra::DMatrix;

fn main() -> curve_reconcile::Result<()> {
    let n = 5;
    let y_hat = HierarchyVector::new(vec![21.0, 17.5, 9.0, 6.2, 2.1, 3.8, 3.3, 4.1, 5.0])?;
    let m = 2 * n - 1;
    // A dense SPD covariance: AR(1)-style correlation with unequal variances.
    let w = DMatrix::from_fn(m, m, |i, j| {
        0.6f64.powi((i as i32 - j as i32).abs()) * (1.0 + 0.1 * i as f64) * (1.0 + 0.1 * j as f64)
    });
    let s = summation_matrix(n, 1)?;
    let canonical = reconcile(&mapping_optimal(&s, &w, Method::OpCov)?, &s, &y_hat)?;
    println!("canonical: {:.4?}", canonical.y_tilde);

    for k in 1..=n {
        let yk = to_representation(&y_hat, k)?;
        let wk = covariance_in_representation(&w, n, k)?;
        let rep = reconcile_in_representation(&yk, &wk, Method::OpCov)?;
        let gap = rep
            .canonical
            .iter()
            .zip(&canonical.y_tilde)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!(
            "k = {k}: b~_[k] = {:.4?}, max gap to canonical {gap:.1e}",
            rep.in_representation.b_tilde
        );
    }
    Ok(())
}
