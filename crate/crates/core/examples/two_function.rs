//! Fredholm pairs, the boundary quantity for zero average drift, and the
//! complete one-dimensional power-drift classification.
//!
//! cargo run --example two_function

use regime_switch::criteria::{boundary_quantity, classify_power_1d, fredholm_solve};
use regime_switch::markov::{invariant_measure, QMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = QMatrix::from_rows(&[vec![-1.0, 1.0], vec![2.0, -2.0]])?;
    let mu = invariant_measure(&q)?;

    // Q xi = -kappa 1 - beta has a solution exactly for kappa = -sum mu beta
    let beta = [-3.0, 1.0];
    let pair = fredholm_solve(&q, &beta)?;
    println!("kappa = {}, xi = {:?}, residual {:.1e}", pair.kappa, pair.xi, pair.residual(&q, &beta));
    println!("check: -sum mu beta = {}", -mu.weighted_sum(&beta));

    // centred b: sum mu b w < 0 decides the critical case
    let b = [-2.0, 4.0];
    let cert = boundary_quantity(&q, &b)?;
    println!("w = {:?}, sum mu b w = {}", cert.w, cert.quantity);

    let sigma = [1.0, 0.5];
    for delta in [-0.5, 0.0, 0.5] {
        for shift in [-0.1, 0.0, 0.1] {
            let drift: Vec<f64> = b.iter().map(|v| v + shift).collect();
            let c = classify_power_1d(&q, &drift, &sigma, delta)?;
            println!("delta {delta:+.1}, average drift {shift:+.1}: {}", c.verdict);
        }
    }
    Ok(())
}
