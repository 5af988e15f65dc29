//! Classifiers for finitely many regimes: averaged drift, the M-matrix
//! criterion, and linear drifts.
//!
//! cargo run --example finite_regimes

use regime_switch::criteria::{classify_avg, classify_mmatrix, classify_ou, LimitBehavior, LyapunovBehavior};
use regime_switch::markov::QMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = QMatrix::from_rows(&[vec![-1.0, 1.0], vec![2.0, -2.0]])?;

    // L V <= beta_i V with V -> infinity: negative average means stable; the
    // M-matrix test is stricter and fails on the second row
    for beta in [vec![-3.0, 1.0], vec![-1.0, 1.5]] {
        let lyap = LyapunovBehavior::new(LimitBehavior::ToInfinity, beta.clone());
        let avg = classify_avg(&q, &lyap)?;
        let mm = classify_mmatrix(&q, &lyap)?;
        println!("beta = {beta:?}: averaged {} / M-matrix {}", avg.verdict, mm.verdict);
    }

    // V -> 0 flips the conclusion to transience
    let lyap = LyapunovBehavior::new(LimitBehavior::ToZero, vec![-1.0, -0.5]);
    println!("V -> 0, beta < 0: {}", classify_avg(&q, &lyap)?.verdict);

    // dX = b_i X dt + dB: the sign of sum mu_i b_i decides, zero is undecided
    for b in [[-2.0, 1.0], [-0.5, 1.0], [-0.2, 1.0]] {
        let c = classify_ou(&q, &b)?;
        println!("linear drift b = {b:?}: {}", c.verdict);
    }
    Ok(())
}
