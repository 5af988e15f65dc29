//! Monte Carlo ensembles of a regime-switching diffusion: return and escape
//! fractions, reproducible for any thread count.
//!
//! cargo run --release --example simulate

use regime_switch::markov::QMatrix;
use regime_switch::simulator::{run_ensemble, Boundary, DiffusionSpec, DriftSpec, EnsembleConfig, SdeModel, SwitchingSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = QMatrix::from_rows(&[vec![-1.0, 1.0], vec![2.0, -2.0]])?;
    let cfg = EnsembleConfig {
        x0: vec![5.0],
        i0: 0,
        r0: 1.0,
        horizon: 100.0,
        dt: 1e-3,
        trials: 400,
        seed: 7,
        escape_radius: Some(50.0),
        threads: None,
    };
    // stable on average, then unstable on average
    for b in [vec![-2.0, 1.0], vec![0.5, 1.0]] {
        let model = SdeModel::new(
            1,
            DriftSpec::Linear { b: b.clone() },
            DiffusionSpec::Scalar(vec![1.0, 1.0]),
            SwitchingSpec::Constant(q.clone()),
            Boundary::None,
        )?;
        let r = run_ensemble(&model, &cfg)?;
        println!(
            "b = {b:?}: returned {:.3} (+/- {:.3}), escaped {:.3}, censored {}",
            r.return_fraction,
            r.return_ci.unwrap_or(0.0),
            r.escape_fraction.unwrap_or(0.0),
            r.censored
        );
    }
    Ok(())
}
