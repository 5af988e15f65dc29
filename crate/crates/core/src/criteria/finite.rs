use crate::error::CriteriaError;
use crate::markov::QMatrix;
use crate::mmatrix::{assess, critical_p, perron, shifted_negation, transformed_matrix, MMatrixTest, TestOutcome};

use super::{
    rows_of, sign_tol, weighted_average, Certificate, Classification, Criterion, LimitBehavior, LyapunovBehavior,
    Verdict,
};

fn verdict_for(limit: LimitBehavior) -> Verdict {
    match limit {
        LimitBehavior::ToInfinity => Verdict::ExponentiallyErgodic,
        LimitBehavior::ToZero => Verdict::Transient,
    }
}

/// Decides by the sign of `sum mu_i beta_i`.
///
/// A conclusive certificate carries the Perron pair of `Q + p diag(beta)` at
/// half the critical tilt, i.e. the decay rate of `V^p xi`.
pub fn classify_avg(q: &QMatrix, lyap: &LyapunovBehavior) -> Result<Classification, CriteriaError> {
    lyap.validate(q.n())?;
    let (mu, weighted) = weighted_average(q, &lyap.beta)?;
    let tol = sign_tol(&lyap.beta);
    let mut cert = Certificate::Averaged {
        q: q.rows(),
        beta: lyap.beta.clone(),
        mu,
        weighted,
        perron: None,
    };
    if weighted >= -tol {
        return Ok(Classification::inconclusive(
            Criterion::AveragedDrift,
            cert,
            format!("weighted drift {weighted:.6e} is not negative"),
        ));
    }
    let p0 = critical_p(q, &lyap.beta, 1.0)?;
    let pd = perron(q, &lyap.beta, 0.5 * p0)?;
    if let Certificate::Averaged { perron, .. } = &mut cert {
        *perron = Some(pd);
    }
    Ok(Classification::conclusive(verdict_for(lyap.limit), Criterion::AveragedDrift, cert))
}

/// Tests `-(Q + diag beta)` for nonsingular M-matrix status.
pub fn classify_mmatrix(q: &QMatrix, lyap: &LyapunovBehavior) -> Result<Classification, CriteriaError> {
    lyap.validate(q.n())?;
    let a = shifted_negation(q.matrix(), &lyap.beta);
    let assessment = assess(&a, MMatrixTest::Strict)?;
    let outcome = assessment.outcome;
    let cert = Certificate::MMatrix { matrix: rows_of(&a), transformed: false, coarse: None, assessment };
    Ok(match outcome {
        TestOutcome::Pass => Classification::conclusive(verdict_for(lyap.limit), Criterion::MMatrix, cert),
        TestOutcome::Fail => {
            Classification::inconclusive(Criterion::MMatrix, cert, "-(Q + diag beta) is not a nonsingular M-matrix")
        }
        TestOutcome::Boundary => Classification::inconclusive(
            Criterion::MMatrix,
            cert,
            "-(Q + diag beta) is within the boundary band of singularity",
        ),
    })
}

/// Tests `-(Q~ + diag beta) H` with the default semipositivity test.
pub fn classify_state_dependent(q_tilde: &QMatrix, lyap: &LyapunovBehavior) -> Result<Classification, CriteriaError> {
    classify_state_dependent_with(q_tilde, lyap, MMatrixTest::Semipositive)
}

/// Bounded-rate criterion with an explicit matrix test.
///
/// A pass yields `eta >> 0` with `-(Q~ + diag beta) H eta >> 0`; then
/// `xi = H eta` is strictly decreasing, which is what lets `Q~` dominate every
/// `Q_x`.
pub fn classify_state_dependent_with(
    q_tilde: &QMatrix,
    lyap: &LyapunovBehavior,
    test: MMatrixTest,
) -> Result<Classification, CriteriaError> {
    lyap.validate(q_tilde.n())?;
    let a = transformed_matrix(q_tilde.matrix(), &lyap.beta);
    let assessment = assess(&a, test)?;
    let outcome = assessment.outcome;
    let cert = Certificate::MMatrix { matrix: rows_of(&a), transformed: true, coarse: None, assessment };
    let c = match outcome {
        TestOutcome::Pass => {
            let c = Classification::conclusive(verdict_for(lyap.limit), Criterion::BoundedRates, cert);
            if lyap.limit == LimitBehavior::ToInfinity {
                c.with_note("exponential ergodicity implies recurrence")
            } else {
                c
            }
        }
        TestOutcome::Fail => Classification::inconclusive(
            Criterion::BoundedRates,
            cert,
            format!("-(Q~ + diag beta) H fails the {} test", test.name()),
        ),
        TestOutcome::Boundary => Classification::inconclusive(
            Criterion::BoundedRates,
            cert,
            format!("-(Q~ + diag beta) H is within the boundary band of the {} test", test.name()),
        ),
    };
    Ok(c.with_note(format!("matrix test: {}", test.name())))
}

/// Linear drift `b_i x` with nondegenerate noise: sign of `sum mu_i b_i`.
pub fn classify_ou(q: &QMatrix, b: &[f64]) -> Result<Classification, CriteriaError> {
    let (mu, weighted) = weighted_average(q, b)?;
    let tol = sign_tol(b);
    let cert = Certificate::Averaged { q: q.rows(), beta: b.to_vec(), mu, weighted, perron: None };
    Ok(if weighted < -tol {
        Classification::conclusive(Verdict::ExponentiallyErgodic, Criterion::OuDrift, cert)
    } else if weighted > tol {
        Classification::conclusive(Verdict::Transient, Criterion::OuDrift, cert)
    } else {
        Classification::inconclusive(
            Criterion::OuDrift,
            cert,
            "weighted drift vanishes; the balanced linear case is not decided here",
        )
    })
}
