//! Builds a switching generator, computes its stationary distribution and
//! shows that relabeling regimes permutes it.
//!
//! cargo run --example generator

use regime_switch::markov::{invariant_measure, QMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = QMatrix::from_rows(&[
        vec![-3.0, 2.0, 1.0],
        vec![1.0, -1.5, 0.5],
        vec![0.5, 4.0, -4.5],
    ])?;
    let mu = invariant_measure(&q)?;
    println!("mu          = {:?}", mu.as_slice());
    println!("|mu Q|_inf  = {:.2e}", mu.residual(&q));

    let perm = [2, 0, 1];
    let relabeled = invariant_measure(&q.permuted(&perm))?;
    println!("relabeled   = {:?}", relabeled.as_slice());

    // rows must sum to zero and off-diagonals be nonnegative
    match QMatrix::from_rows(&[vec![-1.0, 2.0], vec![1.0, -1.0]]) {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
