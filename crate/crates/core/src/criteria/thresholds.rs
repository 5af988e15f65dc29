//! κ thresholds for the birth–death switched linear drift `dX = (κ - 1/Λ) X dt + √2 dB`
//! on the half line, with up-rate `b` and down-rate `a` for the regime chain.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::CriteriaError;
use crate::markov::{coarsen_with, BetaSequence, ClassBound, Partition, RegimeClass, TailHomogeneousChain};
use crate::mmatrix::{assess, transformed_matrix, MMatrixTest, TestOutcome};

/// Printed closed forms of the recurrence and transience thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaThresholds {
    /// Recurrent below this value (test function `x`).
    pub recurrence: f64,
    /// Transient above this value (test function `1/x`).
    pub transience: f64,
}

/// Two-class closed forms, as printed; needs `a >= b > 0`.
///
/// The transience branch with `2ab > 1 - b` agrees with the matrix test only
/// for `b = 1`; [`transience_two_class`] is the form that does in general.
pub fn kappa_thresholds(a: f64, b: f64) -> Result<KappaThresholds, CriteriaError> {
    check_rates(a, b)?;
    let s = a + b + 1.0;
    let recurrence = (s - (s * s - 4.0 * a).sqrt()) / 2.0;
    let transience = if 2.0 * a * b <= 1.0 - b {
        1.0 - b
    } else {
        let t = a + b - 1.0;
        (1.0 - b - a + (t * t + 4.0 * a + 2.0 * b - 2.0).sqrt()) / 2.0
    };
    Ok(KappaThresholds { recurrence, transience })
}

/// Largest root of `κ² + (a + b - 1)κ - a`, floored at `1 - b`: where the
/// two-class inverse-branch matrix with tail-limit coefficients turns positive.
pub fn transience_two_class(a: f64, b: f64) -> Result<f64, CriteriaError> {
    check_rates(a, b)?;
    let t = a + b - 1.0;
    Ok(((-t + (t * t + 4.0 * a).sqrt()) / 2.0).max(1.0 - b))
}

/// Three-class recurrence threshold for `a = 2, b = 1`.
pub fn three_class_recurrence() -> f64 {
    (11.0 - 73f64.sqrt()) / 4.0
}

/// Three-class transience threshold for `a = 2, b = 1` (tail-limit coefficients).
pub fn three_class_transience() -> f64 {
    (17f64.sqrt() - 1.0) / 4.0
}

fn check_rates(a: f64, b: f64) -> Result<(), CriteriaError> {
    if !(b > 0.0 && a >= b && a.is_finite()) {
        return Err(CriteriaError::InvalidInput(format!("need a >= b > 0, got a = {a}, b = {b}")));
    }
    Ok(())
}

/// Which test function drives the partition criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum LyapunovBranch {
    /// `V = x`, `beta_j = κ - 1/j`; a pass proves recurrence.
    Direct,
    /// `V = 1/x`, `beta_j = -κ + 1/j + 2/r0²`; a pass proves transience.
    Inverse { r0: f64 },
}

impl LyapunovBranch {
    pub fn beta(self, kappa: f64) -> BetaSequence {
        match self {
            LyapunovBranch::Direct => BetaSequence::harmonic(kappa, -1.0),
            LyapunovBranch::Inverse { r0 } => BetaSequence::harmonic(-kappa + 2.0 / (r0 * r0), 1.0),
        }
    }

    /// Search interval for κ: the direct branch passes near 0, the inverse one for large κ.
    fn domain(self, a: f64, b: f64) -> (f64, f64) {
        match self {
            LyapunovBranch::Direct => (0.0, 1.0),
            LyapunovBranch::Inverse { .. } => (0.0, 2.0 + a + b),
        }
    }
}

/// Classes `{1}, …, {m-1}, {m, m+1, …}`.
pub fn leading_partition(classes: usize) -> Result<Partition, CriteriaError> {
    if classes < 2 {
        return Err(CriteriaError::InvalidInput("need at least two classes".into()));
    }
    let mut cs: Vec<RegimeClass> = (1..classes).map(|j| RegimeClass::finite([j])).collect();
    cs.push(RegimeClass::tail(classes));
    Ok(Partition::from_classes(cs)?)
}

/// `-(diag beta^F + Q^F) H_m` for the example at a given κ.
pub fn partition_matrix(
    a: f64,
    b: f64,
    kappa: f64,
    classes: usize,
    branch: LyapunovBranch,
    bound: ClassBound,
) -> Result<DMatrix<f64>, CriteriaError> {
    check_rates(a, b)?;
    let chain = TailHomogeneousChain::constant(b, a)?;
    let coarse = coarsen_with(&chain, &branch.beta(kappa), &leading_partition(classes)?, bound)?;
    Ok(transformed_matrix(&coarse.q, coarse.beta.as_slice()))
}

/// Boundary of `{x : pred(x)}` on `[lo, hi]` located by a coarse scan then
/// bisection to `tol`; `None` if the predicate never changes value.
pub fn bisect<F>(lo: f64, hi: f64, tol: f64, mut pred: F) -> Result<Option<f64>, CriteriaError>
where
    F: FnMut(f64) -> Result<bool, CriteriaError>,
{
    const SCAN: usize = 200;
    let mut prev_x = lo;
    let mut prev = pred(lo)?;
    for k in 1..=SCAN {
        let x = lo + (hi - lo) * k as f64 / SCAN as f64;
        let cur = pred(x)?;
        if cur != prev {
            let (mut l, mut h) = (prev_x, x);
            while h - l > tol {
                let mid = 0.5 * (l + h);
                if pred(mid)? == prev {
                    l = mid;
                } else {
                    h = mid;
                }
            }
            return Ok(Some(0.5 * (l + h)));
        }
        prev_x = x;
        prev = cur;
    }
    Ok(None)
}

/// First κ where the matrix test changes outcome: the supremum of passing κ
/// for the direct branch, the infimum for the inverse branch.
pub fn bisect_threshold(
    a: f64,
    b: f64,
    classes: usize,
    branch: LyapunovBranch,
    bound: ClassBound,
    test: MMatrixTest,
) -> Result<Option<f64>, CriteriaError> {
    let (lo, hi) = branch.domain(a, b);
    bisect(lo, hi, 1e-12, |kappa| {
        let m = partition_matrix(a, b, kappa, classes, branch, bound)?;
        Ok(assess(&m, test)?.outcome == TestOutcome::Pass)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FAR: LyapunovBranch = LyapunovBranch::Inverse { r0: 1e6 };

    #[test]
    fn printed_example_values() {
        let t = kappa_thresholds(2.0, 1.0).unwrap();
        assert!((t.recurrence - (2.0 - 2f64.sqrt())).abs() < 1e-15);
        assert!((t.transience - (3f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!((three_class_recurrence() - 0.6139991).abs() < 1e-7);
        assert!((three_class_transience() - 0.7807764).abs() < 1e-7);
    }

    #[test]
    fn equal_rates() {
        let t = kappa_thresholds(1.0, 1.0).unwrap();
        assert!((t.recurrence - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-15);
        // 2ab = 2 > 0 = 1 - b: second branch, (-1 + sqrt(5)) / 2
        assert!((t.transience - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn small_b_limit() {
        // a = 1, b -> 0: recurrence threshold (2 - sqrt(4 - 4)) / 2 = 1, approached like 1 - sqrt(b)
        for b in [1e-2, 1e-4, 1e-6, 1e-8] {
            let t = kappa_thresholds(1.0, b).unwrap();
            assert!((1.0 - t.recurrence - b.sqrt()).abs() < 2.0 * b, "b={b}");
        }
        // the second minor vanishes like b at the root, so stay clear of the boundary band
        let t = kappa_thresholds(1.0, 1e-4).unwrap();
        let m = bisect_threshold(1.0, 1e-4, 2, LyapunovBranch::Direct, ClassBound::Supremum, MMatrixTest::LeadingMinors)
            .unwrap()
            .unwrap();
        assert!((m - t.recurrence).abs() < 1e-6, "{m} vs {}", t.recurrence);
    }

    #[test]
    fn direct_branch_matches_closed_form() {
        for (a, b) in [(2.0, 1.0), (1.0, 1.0), (3.0, 0.5), (5.0, 2.0)] {
            let bis = bisect_threshold(a, b, 2, LyapunovBranch::Direct, ClassBound::Supremum, MMatrixTest::LeadingMinors)
                .unwrap()
                .unwrap();
            let cf = kappa_thresholds(a, b).unwrap().recurrence;
            assert!((bis - cf).abs() < 1e-6, "a={a} b={b}: {bis} vs {cf}");
        }
    }

    #[test]
    fn direct_branch_is_never_semipositive() {
        let r = bisect_threshold(2.0, 1.0, 2, LyapunovBranch::Direct, ClassBound::Supremum, MMatrixTest::Semipositive)
            .unwrap();
        assert_eq!(r, None);
    }

    #[test]
    fn inverse_branch_matches_closed_form() {
        for test in [MMatrixTest::Strict, MMatrixTest::Semipositive, MMatrixTest::LeadingMinors] {
            let bis = bisect_threshold(2.0, 1.0, 2, FAR, ClassBound::TailLimit, test).unwrap().unwrap();
            assert!((bis - (3f64.sqrt() - 1.0)).abs() < 1e-6, "{test:?}: {bis}");
        }
        for (a, b) in [(1.0, 1.0), (3.0, 0.5), (2.0, 0.2), (5.0, 2.0)] {
            let bis = bisect_threshold(a, b, 2, FAR, ClassBound::TailLimit, MMatrixTest::Strict).unwrap().unwrap();
            let cf = transience_two_class(a, b).unwrap();
            assert!((bis - cf).abs() < 1e-6, "a={a} b={b}: {bis} vs {cf}");
        }
        // the printed second branch agrees for b = 1 only
        let printed = kappa_thresholds(3.0, 0.5).unwrap().transience;
        assert!((printed - transience_two_class(3.0, 0.5).unwrap()).abs() > 1e-3);
    }

    #[test]
    fn three_classes() {
        let rec = bisect_threshold(2.0, 1.0, 3, LyapunovBranch::Direct, ClassBound::Supremum, MMatrixTest::LeadingMinors)
            .unwrap()
            .unwrap();
        assert!((rec - three_class_recurrence()).abs() < 1e-6);
        assert!(rec > 2.0 - 2f64.sqrt());
        let trans = bisect_threshold(2.0, 1.0, 3, FAR, ClassBound::TailLimit, MMatrixTest::LeadingMinors).unwrap().unwrap();
        assert!((trans - three_class_transience()).abs() < 1e-6);
        assert!(trans > 3f64.sqrt() - 1.0);
    }

    #[test]
    fn supremum_bounds_are_weaker() {
        let two = bisect_threshold(2.0, 1.0, 2, FAR, ClassBound::Supremum, MMatrixTest::Semipositive).unwrap().unwrap();
        // kappa^2 + 1.5 kappa - 2 = 0
        assert!((two - (-1.5 + 10.25f64.sqrt()) / 2.0).abs() < 1e-6);
        assert!(two > 3f64.sqrt() - 1.0);
    }

    #[test]
    fn partition_matrix_entries() {
        let m = partition_matrix(2.0, 1.0, 0.5, 2, LyapunovBranch::Direct, ClassBound::Supremum).unwrap();
        let want = [[1.5, 0.5], [-2.0, -0.5]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((m[(i, j)] - want[i][j]).abs() < 1e-14);
            }
        }
        let m = partition_matrix(2.0, 1.0, 0.5, 3, LyapunovBranch::Direct, ClassBound::Supremum).unwrap();
        let want = [[1.5, 0.5, 0.5], [-2.0, 1.0, 0.0], [0.0, -2.0, -0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((m[(i, j)] - want[i][j]).abs() < 1e-14);
            }
        }
    }
}
