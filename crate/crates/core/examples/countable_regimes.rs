//! Countably many regimes driven by a birth-death chain: coarsening onto a
//! finite partition and locating the stability thresholds in the drift level.
//!
//! cargo run --example countable_regimes

use regime_switch::criteria::thresholds::{kappa_thresholds, leading_partition, LyapunovBranch};
use regime_switch::criteria::{classify_infinite_with, InfiniteOptions, LimitBehavior};
use regime_switch::markov::{coarsen, ClassBound, TailHomogeneousChain};
use regime_switch::mmatrix::MMatrixTest;
use regime_switch::reproduce::{threshold_rows, threshold_table};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // up rate 1, down rate 2 from every regime
    let chain = TailHomogeneousChain::constant(1.0, 2.0)?;
    let partition = leading_partition(3)?;

    let coarse = coarsen(&chain, &LyapunovBranch::Direct.beta(0.5), &partition)?;
    println!("class coefficients {:?}", coarse.beta.as_slice());
    println!("coarse generator {}", coarse.q);

    let sound = InfiniteOptions::default();
    let minors = InfiniteOptions { bound: ClassBound::TailLimit, test: MMatrixTest::LeadingMinors };
    for kappa in [0.3, 0.5, 0.9] {
        let rec = classify_infinite_with(&chain, &LyapunovBranch::Direct.beta(kappa), &partition, LimitBehavior::ToInfinity, minors)?;
        let inverse = LyapunovBranch::Inverse { r0: 1e6 }.beta(kappa);
        let tr = classify_infinite_with(&chain, &inverse, &partition, LimitBehavior::ToZero, sound)?;
        println!("kappa {kappa}: x gives {}, 1/x gives {}", rec.verdict, tr.verdict);
    }

    let closed = kappa_thresholds(2.0, 1.0)?;
    println!("closed forms: recurrent below {:.7}, transient above {:.7}", closed.recurrence, closed.transience);
    print!("{}", threshold_table(&threshold_rows(2.0, 1.0, 3, 1e6)?));
    Ok(())
}
