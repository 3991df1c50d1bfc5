//! Covariance estimators on the in-sample residuals of one replication,
//! and how the graphical lasso penalty thins out the precision matrix.
//!
//! ```bash
//! cargo run --example covariance_estimators
//! ```

use curve_reconcile::covariance::{
    estimate, ledoit_wolf_parts, schafer_strimmer_lambda, w_glasso, w_sample, CovOptions,
    GlassoOptions,
};
use curve_reconcile::reconcile::Method;
use curve_reconcile::simulation::{
    base_forecast, levels_from_bottom, simulate_var1, ErrorCov, SimConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = SimConfig::new(4, 64, 0.7);
    config.error_cov = ErrorCov::Correlated;
    let base = base_forecast(&levels_from_bottom(&simulate_var1(&config, 0)?)?)?;
    let panel = &base.residuals;
    let opts = CovOptions::default();
    println!("residual panel: {} x {}", panel.samples(), panel.levels());
    println!(
        "schafer-strimmer lambda = {:.4}",
        schafer_strimmer_lambda(panel)?
    );
    let lw = ledoit_wolf_parts(panel, &opts)?;
    println!(
        "ledoit-wolf delta = {:.4}, mean correlation = {:.4}",
        lw.delta, lw.mean_correlation
    );

    for m in [
        Method::OpWls,
        Method::OpCov,
        Method::OpShrink,
        Method::OpLedoitWolf,
    ] {
        let w = estimate(m, config.n, Some(panel), &opts)?.w;
        println!(
            "{m}: trace {:.3}, min eigenvalue {:.4}",
            w.trace(),
            w.symmetric_eigenvalues().min()
        );
    }

    let sample = w_sample(panel, &opts)?.w;
    for rho in [0.0, 0.05, 0.1, 0.2, 0.5, 1.0] {
        let w = w_glasso(
            &sample,
            &GlassoOptions {
                rho,
                ..Default::default()
            },
        )?
        .w;
        let theta = w.try_inverse().ok_or("glasso estimate not invertible")?;
        let m = theta.nrows();
        let zeros = (0..m)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .filter(|&(i, j)| i < j && theta[(i, j)].abs() < 1e-6)
            .count();
        println!(
            "glasso rho = {rho:<4}: {zeros} of {} off-diagonal precision entries are zero",
            m * (m - 1) / 2
        );
    }
    Ok(())
}
