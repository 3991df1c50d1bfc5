//! MAE and daily-averaged RMSE of an hourly forecast.
//!
//! ```bash
//! cargo run --example error_metrics
//! ```

use curve_reconcile::simulation::error_metrics;
use nalgebra::DMatrix;

fn main() -> curve_reconcile::Result<()> {
    let days = 7;
    let actual = DMatrix::from_fn(days, 24, |d, h| {
        40.0 + 15.0 * ((h as f64 - 6.0) / 24.0 * std::f64::consts::TAU).sin() + d as f64
    });
    // A forecast that is right on weekdays and misses the weekend level by 6.
    let forecast = DMatrix::from_fn(days, 24, |d, h| {
        actual[(d, h)] + if d >= 5 { 6.0 } else { 0.0 }
    });
    let (mae, rmse) = error_metrics(&actual, &forecast)?;
    println!("weekend miss:   MAE {mae:.4}, RMSE {rmse:.4}");

    let alternating = DMatrix::from_fn(days, 24, |d, h| {
        actual[(d, h)] + if h % 2 == 0 { 1.0 } else { -1.0 }
    });
    let (mae, rmse) = error_metrics(&actual, &alternating)?;
    println!("+-1 every hour: MAE {mae:.4}, RMSE {rmse:.4}");
    Ok(())
}
