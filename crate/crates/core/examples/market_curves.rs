//! Synthetic auction: step curves, equidistant-volume price classes,
//! class volumes as a hierarchy, and the clearing point.
//!
//! ```bash
//! cargo run --example market_curves
//! cargo run --example market_curves -- 40 7
//! ```

use curve_reconcile::hierarchy::{aggregate_bottom, build_hierarchy_vector};
use curve_reconcile::market::{
    bin_volumes, build_step_curve, intersect, make_price_classes, tick_to_price, BidLadder, Side,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ladder(rng: &mut ChaCha8Rng, side: Side, count: usize) -> curve_reconcile::Result<BidLadder> {
    let bids: Vec<(f64, f64)> = (0..count)
        .map(|_| {
            // Most volume sits between 0 and 150 EUR/MWh, with a few bids at the price limits.
            let tick = match rng.random_range(0..10) {
                0 => {
                    if side == Side::Supply {
                        -5000
                    } else {
                        30000
                    }
                }
                _ => rng.random_range(0..1500),
            };
            (
                tick_to_price(tick),
                f64::from(rng.random_range(1..200)) * 5.0,
            )
        })
        .collect();
    BidLadder::new(side, &bids)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<u64> = std::env::args()
        .skip(1)
        .map(|a| a.parse())
        .collect::<Result<_, _>>()?;
    let m = args.first().copied().unwrap_or(20) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(args.get(1).copied().unwrap_or(1));
    let supply = ladder(&mut rng, Side::Supply, 300)?;
    let demand = ladder(&mut rng, Side::Demand, 300)?;

    let s_curve = build_step_curve(&supply)?;
    let d_curve = build_step_curve(&demand)?;
    let eq = intersect(&s_curve, &d_curve)?;
    println!(
        "clearing price {:.1} EUR/MWh, volume {:.1} MWh",
        eq.price, eq.volume
    );

    for (ladder, curve) in [(&supply, &s_curve), (&demand, &d_curve)] {
        let grid = make_price_classes(curve, m)?;
        let b = bin_volumes(ladder, &grid)?;
        let a = aggregate_bottom(&b)?;
        println!("\n{} side, {} classes", ladder.side(), grid.class_count());
        for ((label, vol), cum) in grid.labels().iter().zip(b.values()).zip(a.values()) {
            println!("  {label:>9} {vol:>9.1} {cum:>10.1}");
        }
        let y = build_hierarchy_vector(&a, 1)?;
        println!(
            "  hierarchy of {} levels, top {:.1} = total bid volume {:.1}",
            y.values().len(),
            y.values()[0],
            ladder.total_volume()
        );
    }
    Ok(())
}
