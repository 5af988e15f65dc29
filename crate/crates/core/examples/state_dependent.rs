//! State-dependent switching rates: constant bounds from a scan of the
//! state space, then the bounded-rates criterion with `V = x` and `V = 1/x`.
//!
//! cargo run --example state_dependent

use regime_switch::criteria::{classify_state_dependent_with, LimitBehavior, LyapunovBehavior};
use regime_switch::markov::{bound_rates, RateBounds, ScanDomain, StateDependentRates};
use regime_switch::mmatrix::MMatrixTest;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // both directions switch at (1 + 2r) / (1 + r), which runs from 1 to 2
    let rates = StateDependentRates::new(2, 1, |x, _, _| {
        let r = x[0].abs();
        (1.0 + 2.0 * r) / (1.0 + r)
    });
    // a scan approaches the supremum 2 only as r grows
    let scanned = bound_rates(&rates, &ScanDomain::half_line())?;
    println!("scanned bounds {:?}", scanned.rows());
    // closed-form bounds, when known, replace the scan
    let exact = RateBounds { inf: 1.0, sup: 2.0 };
    let bounded = bound_rates(&rates.with_hint(0, 1, exact).with_hint(1, 0, exact), &ScanDomain::half_line())?;
    println!("exact bounds   {:?}", bounded.rows());

    // drift (kappa - 1) x in regime 1 and kappa x in regime 2
    for kappa in [0.3, 0.65, 1.2] {
        let growth = LyapunovBehavior::new(LimitBehavior::ToInfinity, vec![kappa - 1.0, kappa]);
        let decay = LyapunovBehavior::new(LimitBehavior::ToZero, vec![1.0 - kappa, -kappa]);
        print!("kappa {kappa}:");
        for test in [MMatrixTest::Semipositive, MMatrixTest::LeadingMinors] {
            let up = classify_state_dependent_with(&bounded, &growth, test)?.verdict;
            let down = classify_state_dependent_with(&bounded, &decay, test)?.verdict;
            print!("  {}: x {up}, 1/x {down}", test.name());
        }
        println!();
    }
    Ok(())
}
