use crate::error::CriteriaError;
use crate::markov::{coarsen_with, BetaSequence, ClassBound, CoarseModel, Partition, TailHomogeneousChain};
use crate::mmatrix::{assess, transformed_matrix, MMatrixTest, TestOutcome};

use super::{rows_of, Certificate, Classification, CoarseSummary, Criterion, LimitBehavior, Verdict};

/// Knobs of the finite-partition criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InfiniteOptions {
    pub bound: ClassBound,
    pub test: MMatrixTest,
}

impl Default for InfiniteOptions {
    fn default() -> Self {
        InfiniteOptions { bound: ClassBound::Supremum, test: MMatrixTest::Semipositive }
    }
}

pub(crate) fn summarize(coarse: &CoarseModel) -> CoarseSummary {
    CoarseSummary {
        members: coarse.partition.classes().iter().map(|c| c.members.iter().copied().collect()).collect(),
        tail_from: coarse.partition.classes().iter().map(|c| c.tail_from).collect(),
        beta: coarse.beta.iter().copied().collect(),
        q: rows_of(&coarse.q),
    }
}

/// Finite-partition criterion with the default (sound) options.
pub fn classify_infinite(
    chain: &TailHomogeneousChain,
    beta: &BetaSequence,
    partition: &Partition,
    limit: LimitBehavior,
) -> Result<Classification, CriteriaError> {
    classify_infinite_with(chain, beta, partition, limit, InfiniteOptions::default())
}

/// Coarsens, then tests `-(diag beta^F + Q^F) H_m`.
///
/// The conclusion for `V -> infinity` is recurrence only; the coarsened
/// inequality gives no spectral gap.
pub fn classify_infinite_with(
    chain: &TailHomogeneousChain,
    beta: &BetaSequence,
    partition: &Partition,
    limit: LimitBehavior,
    options: InfiniteOptions,
) -> Result<Classification, CriteriaError> {
    if !chain.is_recurrent() {
        return Err(CriteriaError::ChainNotRecurrent { up: chain.tail_up(), down: chain.tail_down() });
    }
    let coarse = coarsen_with(chain, beta, partition, options.bound)?;
    let a = transformed_matrix(&coarse.q, coarse.beta.as_slice());
    let assessment = assess(&a, options.test)?;
    let outcome = assessment.outcome;
    let cert = Certificate::MMatrix {
        matrix: rows_of(&a),
        transformed: true,
        coarse: Some(summarize(&coarse)),
        assessment,
    };
    let verdict = match limit {
        LimitBehavior::ToInfinity => Verdict::Recurrent,
        LimitBehavior::ToZero => Verdict::Transient,
    };
    let c = match outcome {
        TestOutcome::Pass => Classification::conclusive(verdict, Criterion::FinitePartition, cert),
        TestOutcome::Fail => Classification::inconclusive(
            Criterion::FinitePartition,
            cert,
            format!("-(diag beta^F + Q^F) H fails the {} test", options.test.name()),
        ),
        TestOutcome::Boundary => Classification::inconclusive(
            Criterion::FinitePartition,
            cert,
            format!("-(diag beta^F + Q^F) H is within the boundary band of the {} test", options.test.name()),
        ),
    };
    let bound = match options.bound {
        ClassBound::Supremum => "class bound: supremum",
        ClassBound::TailLimit => "class bound: tail limit (the tail class uses lim beta_j, below its supremum)",
    };
    Ok(c.with_note(format!("matrix test: {}", options.test.name())).with_note(bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::RegimeClass;

    fn chain() -> TailHomogeneousChain {
        TailHomogeneousChain::constant(1.0, 2.0).unwrap()
    }

    fn two() -> Partition {
        Partition::from_classes(vec![RegimeClass::finite([1]), RegimeClass::tail(2)]).unwrap()
    }

    fn three() -> Partition {
        Partition::from_classes(vec![RegimeClass::finite([1]), RegimeClass::finite([2]), RegimeClass::tail(3)])
            .unwrap()
    }

    fn minors() -> InfiniteOptions {
        InfiniteOptions { bound: ClassBound::Supremum, test: MMatrixTest::LeadingMinors }
    }

    #[test]
    fn two_class_recurrence_by_minors() {
        let beta = BetaSequence::harmonic(0.5, -1.0);
        let c = classify_infinite_with(&chain(), &beta, &two(), LimitBehavior::ToInfinity, minors()).unwrap();
        assert_eq!(c.verdict, Verdict::Recurrent);
        c.revalidate().unwrap();
        // the sound semipositivity test cannot certify this matrix
        let c = classify_infinite(&chain(), &beta, &two(), LimitBehavior::ToInfinity).unwrap();
        assert_eq!(c.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn three_class_recurrence_by_minors() {
        let beta = BetaSequence::harmonic(0.6, -1.0);
        let c = classify_infinite_with(&chain(), &beta, &three(), LimitBehavior::ToInfinity, minors()).unwrap();
        assert_eq!(c.verdict, Verdict::Recurrent);
        let c = classify_infinite_with(&chain(), &beta, &two(), LimitBehavior::ToInfinity, minors()).unwrap();
        assert_eq!(c.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn inverse_branch_transience() {
        let (kappa, r0) = (0.8, 1e4);
        // V = 1/x with diffusion sqrt 2: beta_j = -kappa + 1/j + 2 r0^-2
        let beta = BetaSequence::harmonic(-kappa + 2.0 / (r0 * r0), 1.0);
        let tail = InfiniteOptions { bound: ClassBound::TailLimit, test: MMatrixTest::Strict };
        let c = classify_infinite_with(&chain(), &beta, &two(), LimitBehavior::ToZero, tail).unwrap();
        assert_eq!(c.verdict, Verdict::Transient);
        c.revalidate().unwrap();
        let c = classify_infinite_with(
            &chain(),
            &beta,
            &two(),
            LimitBehavior::ToZero,
            InfiniteOptions { bound: ClassBound::TailLimit, test: MMatrixTest::Semipositive },
        )
        .unwrap();
        assert_eq!(c.verdict, Verdict::Transient);
        // with the class supremum -kappa + 1/2 the matrix fails at 0.8
        let c = classify_infinite(&chain(), &beta, &two(), LimitBehavior::ToZero).unwrap();
        assert_eq!(c.verdict, Verdict::Inconclusive);
        // and passes well above
        let beta = BetaSequence::harmonic(-0.9 + 2.0 / (r0 * r0), 1.0);
        let c = classify_infinite(&chain(), &beta, &two(), LimitBehavior::ToZero).unwrap();
        assert_eq!(c.verdict, Verdict::Transient);
        c.revalidate().unwrap();
    }

    #[test]
    fn transient_chain_is_rejected() {
        let up_heavy = TailHomogeneousChain::constant(2.0, 1.0).unwrap();
        let beta = BetaSequence::harmonic(0.5, -1.0);
        let err = classify_infinite(&up_heavy, &beta, &two(), LimitBehavior::ToInfinity).unwrap_err();
        assert!(matches!(err, CriteriaError::ChainNotRecurrent { .. }));
    }
}
