//! Principal eigenpair of the tilted generator `Q + p diag(beta)` and the
//! range of `p` where it certifies exponential stability.
//!
//! cargo run --example perron

use regime_switch::markov::{invariant_measure, QMatrix};
use regime_switch::mmatrix::{critical_p, perron};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = QMatrix::from_rows(&[vec![-1.0, 1.0], vec![2.0, -2.0]])?;
    // stable in the first regime, unstable in the second, stable on average
    let beta = [-3.0, 1.0];
    let drift = invariant_measure(&q)?.weighted_sum(&beta);
    println!("averaged drift = {drift:.4}");

    for p in [0.0, 1e-3, 0.1, 0.5] {
        let d = perron(&q, &beta, p)?;
        println!("p = {p:<6} eta = {:+.6e}  xi = {:?}  residual {:.1e}", d.eta_p, d.xi, d.residual(&q, &beta));
    }
    println!("first order at p = 1e-3: {:+.6e}", -1e-3 * drift);
    println!("eta stays positive up to p = {:.6}", critical_p(&q, &beta, 10.0)?);
    Ok(())
}
