//! Every reconciliation method on one simulated replication.
//!
//! ```bash
//! cargo run --example reconcile_methods
//! cargo run --example reconcile_methods -- 8 128
//! ```

use curve_reconcile::covariance::{estimate, CovOptions};
use curve_reconcile::hierarchy::summation_matrix;
use curve_reconcile::reconcile::{mapping_for, reconcile, Method, MethodInputs};
use curve_reconcile::simulation::{base_forecast, levels_from_bottom, simulate_var1, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .map(|a| a.parse())
        .collect::<Result<_, _>>()?;
    let n = args.first().copied().unwrap_or(4);
    let history = args.get(1).copied().unwrap_or(64);
    let config = SimConfig::new(n, history, 0.7);

    let levels = levels_from_bottom(&simulate_var1(&config, 0)?)?;
    let base = base_forecast(&levels)?;
    let s = summation_matrix(n, 1)?;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:8.3}")).collect::<String>();
    println!("{:<13}{}", "target", fmt(&base.target));
    println!("{:<13}{}", "base", fmt(base.y_hat.values()));

    for m in Method::ALL {
        let w = if m.is_optimal() {
            Some(estimate(m, n, Some(&base.residuals), &CovOptions::default())?.w)
        } else {
            None
        };
        let inputs = MethodInputs {
            forecast: &base.y_hat,
            history: Some(&base.history),
            covariance: w.as_ref(),
        };
        match mapping_for(m, inputs).and_then(|p| reconcile(&p, &s, &base.y_hat)) {
            Ok(rec) => println!("{:<13}{}", m.token(), fmt(&rec.y_tilde)),
            Err(e) => println!("{:<13}{e}", m.token()),
        }
    }
    Ok(())
}
