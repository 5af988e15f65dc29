//! Runs classifiers against a model file.
//!
//! `auto` tries criteria in the fixed order of [`AUTO_ORDER`] and keeps the
//! first conclusive result; every attempt is recorded.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::criteria::{
    classify_avg, classify_infinite_with, classify_mmatrix, classify_ou, classify_power_1d, classify_radial,
    classify_state_dependent_with, classify_two_function, classify_two_function_state_dependent, Classification,
    Criterion, InfiniteOptions, RadialModel, SphereGrid, Verdict,
};
use crate::error::Error;
use crate::markov::ClassBound;
use crate::mmatrix::MMatrixTest;
use crate::model::{Domain, DriftModel, LyapunovInput, ModelFile};

/// Strongest first: complete one-dimensional criteria, then M-matrix tests,
/// then averaged and two-function criteria.
pub const AUTO_ORDER: [Criterion; 9] = [
    Criterion::Power1d,
    Criterion::OuDrift,
    Criterion::MMatrix,
    Criterion::BoundedRates,
    Criterion::FinitePartition,
    Criterion::AveragedDrift,
    Criterion::TwoFunction,
    Criterion::TwoFunctionBoundedRates,
    Criterion::RadialDrift,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriterionChoice {
    Auto,
    Only(Criterion),
}

impl FromStr for CriterionChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            Ok(CriterionChoice::Auto)
        } else {
            s.parse().map(CriterionChoice::Only).map_err(|e: crate::error::CriteriaError| e.to_string())
        }
    }
}

impl fmt::Display for CriterionChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CriterionChoice::Auto => f.write_str("auto"),
            CriterionChoice::Only(c) => write!(f, "{c}"),
        }
    }
}

/// Overrides of the model's matrix-test settings.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AnalysisOptions {
    pub mmatrix_test: Option<MMatrixTest>,
    pub class_bound: Option<ClassBound>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub criterion: Criterion,
    /// Which model inputs were used, e.g. `lyapunov[2] partition[1]`.
    pub input: String,
    pub verdict: Verdict,
    pub reason: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub result: Classification,
    pub input: String,
    pub attempts: Vec<Attempt>,
}

fn finite_lyapunov(inputs: &[LyapunovInput]) -> Vec<(usize, &crate::criteria::LyapunovBehavior)> {
    inputs
        .iter()
        .enumerate()
        .filter_map(|(k, l)| match l {
            LyapunovInput::Finite(b) => Some((k + 1, b)),
            LyapunovInput::Countable { .. } => None,
        })
        .collect()
}

/// All runs of one criterion; empty when the model lacks its inputs.
fn runs(model: &ModelFile, criterion: Criterion, opts: AnalysisOptions) -> Result<Vec<(String, Classification)>, Error> {
    let q = model.generator()?;
    let lyap = model.lyapunov_inputs()?;
    let test = opts.mmatrix_test.or(model.mmatrix_test);
    let mut out = Vec::new();
    match criterion {
        Criterion::Power1d => {
            if let (Some(q), DriftModel::Power { b, delta }) = (&q, &model.drift) {
                if model.dimension == 1 && model.domain == Domain::HalfLine {
                    let sigma = model.sigma_values();
                    out.push(("drift".into(), classify_power_1d(q, b, &sigma, *delta)?));
                }
            }
        }
        Criterion::OuDrift => {
            let b = match &model.drift {
                DriftModel::Ou { b } => Some(b),
                DriftModel::Power { b, delta } if *delta == 1.0 => Some(b),
                _ => None,
            };
            if let (Some(q), Some(b)) = (&q, b) {
                out.push(("drift".into(), classify_ou(q, b)?));
            }
        }
        Criterion::MMatrix => {
            if let Some(q) = &q {
                for (k, l) in finite_lyapunov(&lyap) {
                    out.push((format!("lyapunov[{k}]"), classify_mmatrix(q, l)?));
                }
            }
        }
        Criterion::BoundedRates => {
            let qt = match model.q_tilde()? {
                Some(qt) => Some(qt),
                None => q.clone(),
            };
            if let Some(qt) = qt {
                for (k, l) in finite_lyapunov(&lyap) {
                    let t = test.unwrap_or(MMatrixTest::Semipositive);
                    out.push((format!("lyapunov[{k}]"), classify_state_dependent_with(&qt, l, t)?));
                }
            }
        }
        Criterion::FinitePartition => {
            if let Some(chain) = model.chain()? {
                let options = InfiniteOptions {
                    bound: opts.class_bound.or(model.class_bound).unwrap_or_default(),
                    test: test.unwrap_or(MMatrixTest::Semipositive),
                };
                for (k, l) in lyap.iter().enumerate() {
                    if let LyapunovInput::Countable { beta, limit } = l {
                        for (p, part) in model.partitions(beta)?.iter().enumerate() {
                            let c = classify_infinite_with(&chain, beta, part, *limit, options)?;
                            out.push((format!("lyapunov[{}] partition[{}]", k + 1, p + 1), c));
                        }
                    }
                }
            }
        }
        Criterion::AveragedDrift => {
            if let Some(q) = &q {
                for (k, l) in finite_lyapunov(&lyap) {
                    out.push((format!("lyapunov[{k}]"), classify_avg(q, l)?));
                }
            }
        }
        Criterion::TwoFunction => {
            if let (Some(q), Some(d)) = (&q, model.two_function_data()) {
                out.push(("two_function".into(), classify_two_function(q, &d)?));
            }
        }
        Criterion::TwoFunctionBoundedRates => {
            let qt = match model.q_tilde()? {
                Some(qt) => Some(qt),
                None => q.clone(),
            };
            if let (Some(qt), Some(d)) = (qt, model.two_function_data()) {
                out.push(("two_function".into(), classify_two_function_state_dependent(&qt, &d.beta, d.h_limit)?));
            }
        }
        Criterion::RadialDrift => {
            if let (Some(q), Some((delta, drift, points))) = (&q, model.radial_profile()) {
                if model.domain == Domain::Whole {
                    let rm = RadialModel {
                        dim: model.dimension,
                        regimes: q.n(),
                        delta,
                        drift,
                        diffusion: Some(model.diffusion_profile()),
                    };
                    let grid = if points.is_empty() { SphereGrid::default() } else { SphereGrid::Points(points) };
                    out.push(("drift".into(), classify_radial(q, &rm, &grid)?));
                }
            }
        }
    }
    Ok(out)
}

/// Classifies a model with one criterion or the automatic sequence.
pub fn analyze(model: &ModelFile, choice: CriterionChoice, opts: AnalysisOptions) -> Result<Analysis, Error> {
    let order: Vec<Criterion> = match choice {
        CriterionChoice::Auto => AUTO_ORDER.to_vec(),
        CriterionChoice::Only(c) => vec![c],
    };
    let mut attempts = Vec::new();
    let mut first: Option<(String, Classification)> = None;
    for c in order {
        for (input, result) in runs(model, c, opts)? {
            attempts.push(Attempt {
                criterion: c,
                input: input.clone(),
                verdict: result.verdict,
                reason: result.reason.clone(),
            });
            if result.verdict.is_conclusive() {
                return Ok(Analysis { result, input, attempts });
            }
            first.get_or_insert((input, result));
        }
    }
    match first {
        Some((input, result)) => Ok(Analysis { result, input, attempts }),
        None => Err(Error::CriterionNotApplicable(choice.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    fn ex21(kappa: f64, test: &str) -> ModelFile {
        parse_model(&format!(
            r#"{{
                "regimes": "countable",
                "domain": "half-line",
                "q": {{"birth_death": {{"a": 2, "b": 1}}}},
                "drift": {{"kind": "linear-sequence", "beta": {{"limit": {kappa}, "coeff": -1}}}},
                "sigma": 1.4142135623730951,
                "lyapunov": [{{"preset": "abs"}}],
                "partition": [{{"classes": [[1], {{"from": 2}}]}}, {{"classes": [[1], [2], {{"from": 3}}]}}],
                "mmatrix_test": "{test}"
            }}"#
        ))
        .unwrap()
    }

    #[test]
    fn ou_model_is_decided_by_linear_criterion() {
        let m = parse_model(
            r#"{"regimes": 2, "q": {"matrix": [[-1, 1], [2, -2]]}, "drift": {"kind": "ou", "b": [-2, 1]}}"#,
        )
        .unwrap();
        let a = analyze(&m, CriterionChoice::Auto, AnalysisOptions::default()).unwrap();
        assert_eq!(a.result.verdict, Verdict::ExponentiallyErgodic);
        assert_eq!(a.result.criterion, Criterion::OuDrift);
    }

    #[test]
    fn countable_example_by_partition() {
        let a = analyze(&ex21(0.5, "leading-minors"), CriterionChoice::Auto, AnalysisOptions::default()).unwrap();
        assert_eq!(a.result.verdict, Verdict::Recurrent);
        assert_eq!(a.result.criterion, Criterion::FinitePartition);
        assert_eq!(a.input, "lyapunov[1] partition[1]");

        let a = analyze(&ex21(0.6, "leading-minors"), CriterionChoice::Auto, AnalysisOptions::default()).unwrap();
        assert_eq!(a.input, "lyapunov[1] partition[2]");

        let a = analyze(&ex21(0.65, "leading-minors"), CriterionChoice::Auto, AnalysisOptions::default()).unwrap();
        assert_eq!(a.result.verdict, Verdict::Inconclusive);
        assert_eq!(a.attempts.len(), 2);

        let a = analyze(&ex21(0.5, "semipositive"), CriterionChoice::Auto, AnalysisOptions::default()).unwrap();
        assert_eq!(a.result.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn explicit_criterion_must_apply() {
        let err = analyze(&ex21(0.5, "strict"), "prop22".parse().unwrap(), AnalysisOptions::default()).unwrap_err();
        assert!(matches!(err, Error::CriterionNotApplicable(_)));
    }

    #[test]
    fn half_line_power_drift() {
        let m = parse_model(
            r#"{"regimes": 2, "domain": "half-line", "q": {"matrix": [[-1, 1], [2, -2]]},
                "drift": {"kind": "power", "b": [-1, 2], "delta": 0.5}}"#,
        )
        .unwrap();
        let a = analyze(&m, CriterionChoice::Auto, AnalysisOptions::default()).unwrap();
        assert_eq!(a.result.verdict, Verdict::Recurrent);
        assert_eq!(a.result.criterion, Criterion::Power1d);
    }

    #[test]
    fn whole_space_power_drift_uses_radial_limits() {
        let m = parse_model(
            r#"{"regimes": 2, "dimension": 2, "q": {"matrix": [[-1, 1], [2, -2]]},
                "drift": {"kind": "power", "b": [-1, 0.5], "delta": 0.5}}"#,
        )
        .unwrap();
        let a = analyze(&m, CriterionChoice::Auto, AnalysisOptions::default()).unwrap();
        assert_eq!(a.result.verdict, Verdict::Recurrent);
        assert_eq!(a.result.criterion, Criterion::RadialDrift);
    }
}
