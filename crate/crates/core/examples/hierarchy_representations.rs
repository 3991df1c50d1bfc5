//! Disaggregating one curve from every starting point and checking the
//! structure identity `S = B_[k] S_[k] A_[k] D_n^{-1}`.
//!
//! ```bash
//! cargo run --example hierarchy_representations
//! ```

use curve_reconcile::hierarchy::{build_hierarchy_vector, disaggregate, structure_matrices, Curve};

fn main() -> curve_reconcile::Result<()> {
    let a = Curve::new(vec![1.0, 4.0, 6.0, 7.0, 10.0, 15.0])?;
    println!("a = {:?}", a.values());
    for k in 1..=a.len() {
        let b = disaggregate(&a, k)?;
        println!("b_[{k}] = {:?}", b.values());
    }

    let y = build_hierarchy_vector(&a, 1)?;
    println!(
        "y     = {:?} (coherent: {})",
        y.values(),
        y.is_coherent(0.0)
    );
    let y6 = build_hierarchy_vector(&a, 6)?;
    println!("y_[6] = {:?}", y6.values());

    let m = structure_matrices(6, 3)?;
    println!("S_[3] =\n{}", m.s_k);
    println!(
        "max |S - B S_[k] A D^-1| = {:e}",
        (m.recomposed_s() - &m.s).amax()
    );
    Ok(())
}
