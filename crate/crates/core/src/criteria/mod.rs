//! Classifiers mapping model data to a verdict with a re-checkable certificate.
//!
//! The Lyapunov-type functions themselves are analytic inputs: callers supply
//! only the constants `beta_i` of the drift inequality and how the function
//! behaves at infinity.

mod finite;
mod infinite;
mod radial;
pub mod thresholds;
mod two_function;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use finite::{classify_avg, classify_mmatrix, classify_ou, classify_state_dependent, classify_state_dependent_with};
pub use infinite::{classify_infinite, classify_infinite_with, InfiniteOptions};
pub use radial::{classify_radial, radial_beta, DiffusionProfile, DriftProfile, RadialMode, RadialModel, SphereGrid};
pub use two_function::{
    boundary_quantity, classify_power_1d, classify_two_function, classify_two_function_state_dependent,
    fredholm_solve, poisson_solve, FredholmPair,
};

use crate::error::CriteriaError;
use crate::markov::{invariant_measure, matrix_from_rows, QMatrix};
use crate::mmatrix::{leading_minors, z_pattern, MMatrixAssessment, MMatrixTest, PerronData, TriangularOnes};

/// Relative tolerance on every sign test of a weighted drift.
pub const SIGN_TOL: f64 = 1e-10;

pub(crate) fn sign_tol(v: &[f64]) -> f64 {
    SIGN_TOL * v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Behaviour of a test function as `|x| -> infinity`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitBehavior {
    ToInfinity,
    ToZero,
}

/// `V > 0` and `L^(i) V <= beta_i V` for `|x| > r0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovBehavior {
    pub limit: LimitBehavior,
    pub r0: Option<f64>,
    pub beta: Vec<f64>,
}

impl LyapunovBehavior {
    pub fn new(limit: LimitBehavior, beta: Vec<f64>) -> Self {
        LyapunovBehavior { limit, r0: None, beta }
    }

    pub(crate) fn validate(&self, n: usize) -> Result<(), CriteriaError> {
        check_vector(&self.beta, n, "beta")?;
        if let Some(r0) = self.r0 {
            if !(r0 > 0.0 && r0.is_finite()) {
                return Err(CriteriaError::InvalidInput(format!("r0 must be positive, got {r0}")));
            }
        }
        Ok(())
    }
}

/// Constants of the two-function condition: `L^(i) h <= beta_i g`, `g/h -> 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoFunctionData {
    pub beta: Vec<f64>,
    pub h_limit: LimitBehavior,
}

pub(crate) fn check_vector(v: &[f64], n: usize, name: &str) -> Result<(), CriteriaError> {
    if v.len() != n {
        return Err(CriteriaError::InvalidInput(format!("{name} has length {}, expected {n}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(CriteriaError::InvalidInput(format!("{name} contains a non-finite value")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Recurrent,
    Transient,
    ExponentiallyErgodic,
    Inconclusive,
}

impl Verdict {
    pub fn is_conclusive(self) -> bool {
        self != Verdict::Inconclusive
    }

    /// Exponential ergodicity implies recurrence.
    pub fn implies_recurrence(self) -> bool {
        matches!(self, Verdict::Recurrent | Verdict::ExponentiallyErgodic)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Recurrent => "Recurrent",
            Verdict::Transient => "Transient",
            Verdict::ExponentiallyErgodic => "ExponentiallyErgodic",
            Verdict::Inconclusive => "Inconclusive",
        };
        f.write_str(s)
    }
}

/// Identifies which criterion produced a classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// Sign of `sum mu_i beta_i` with one test function.
    AveragedDrift,
    /// `-(Q + diag beta)` is a nonsingular M-matrix.
    MMatrix,
    /// `-(Q~ + diag beta) H` for state-dependent rates.
    BoundedRates,
    /// Coarsened infinite regime space.
    FinitePartition,
    /// Linear drift `b_i x`.
    OuDrift,
    /// Two test functions, Fredholm solve.
    TwoFunction,
    /// Two test functions with state-dependent rates and a nonincreasing weight.
    TwoFunctionBoundedRates,
    /// Radial drift limits.
    RadialDrift,
    /// One-dimensional power drift on the half line.
    Power1d,
}

impl Criterion {
    pub const ALL: [Criterion; 9] = [
        Criterion::AveragedDrift,
        Criterion::MMatrix,
        Criterion::BoundedRates,
        Criterion::FinitePartition,
        Criterion::OuDrift,
        Criterion::TwoFunction,
        Criterion::TwoFunctionBoundedRates,
        Criterion::RadialDrift,
        Criterion::Power1d,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Criterion::AveragedDrift => "averaged-drift",
            Criterion::MMatrix => "m-matrix",
            Criterion::BoundedRates => "bounded-rates",
            Criterion::FinitePartition => "finite-partition",
            Criterion::OuDrift => "ou-drift",
            Criterion::TwoFunction => "two-function",
            Criterion::TwoFunctionBoundedRates => "two-function-bounded-rates",
            Criterion::RadialDrift => "radial-drift",
            Criterion::Power1d => "power-1d",
        }
    }

    /// Short command-line alias.
    pub fn alias(self) -> &'static str {
        match self {
            Criterion::AveragedDrift => "thm21",
            Criterion::MMatrix => "thm22",
            Criterion::BoundedRates => "thm23",
            Criterion::FinitePartition => "thm24",
            Criterion::OuDrift => "prop22",
            Criterion::TwoFunction => "thm31",
            Criterion::TwoFunctionBoundedRates => "thm32",
            Criterion::RadialDrift => "thm33",
            Criterion::Power1d => "cor31",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Criterion {
    type Err = CriteriaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.id() == s || c.alias() == s)
            .ok_or_else(|| CriteriaError::InvalidInput(format!("unknown criterion '{s}'")))
    }
}

/// Solution of the shifted Poisson equation used by the boundary case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCertificate {
    /// `Q w = b`, `sum mu_i w_i = 0`.
    pub w: Vec<f64>,
    /// `sum mu_i b_i w_i`, negative for nonconstant `w`.
    pub quantity: f64,
}

/// Summary of a coarsened model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarseSummary {
    /// Explicit members of each class.
    pub members: Vec<Vec<usize>>,
    /// Tail start of each class, if it contains the tail.
    pub tail_from: Vec<Option<usize>>,
    pub beta: Vec<f64>,
    pub q: Vec<Vec<f64>>,
}

/// Evidence attached to a classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    Averaged {
        q: Vec<Vec<f64>>,
        beta: Vec<f64>,
        mu: Vec<f64>,
        weighted: f64,
        perron: Option<PerronData>,
    },
    MMatrix {
        matrix: Vec<Vec<f64>>,
        /// Whether `matrix` carries the right factor `H`.
        transformed: bool,
        coarse: Option<CoarseSummary>,
        assessment: MMatrixAssessment,
    },
    Fredholm {
        q: Vec<Vec<f64>>,
        beta: Vec<f64>,
        mu: Vec<f64>,
        weighted: f64,
        pair: Option<FredholmPair>,
    },
    MonotoneWeight {
        q_tilde: Vec<Vec<f64>>,
        beta: Vec<f64>,
        eta: Option<Vec<f64>>,
    },
    Radial {
        q: Vec<Vec<f64>>,
        mu: Vec<f64>,
        beta_sup: Vec<f64>,
        beta_inf: Vec<f64>,
        weighted_sup: f64,
        weighted_inf: f64,
    },
    Power1d {
        q: Vec<Vec<f64>>,
        b: Vec<f64>,
        mu: Vec<f64>,
        weighted: f64,
        delta: f64,
        boundary: Option<BoundaryCertificate>,
    },
}

pub(crate) fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn reject(msg: impl Into<String>) -> CriteriaError {
    CriteriaError::CertificateRejected(msg.into())
}

/// Checks `mu` against `q` and returns `sum mu_i v_i`.
fn check_measure(q: &DMatrix<f64>, mu: &[f64], v: &[f64]) -> Result<f64, CriteriaError> {
    let mu_v = DVector::from_column_slice(mu);
    let total: f64 = mu.iter().sum();
    if (total - 1.0).abs() > 1e-12 || mu.iter().any(|m| *m <= 0.0) {
        return Err(reject("mu is not a positive probability vector"));
    }
    if (q.transpose() * &mu_v).amax() > 1e-9 * q.amax().max(1.0) {
        return Err(reject("mu is not invariant for q"));
    }
    Ok(mu.iter().zip(v).map(|(m, x)| m * x).sum())
}

fn expect_sign(verdict: Verdict, weighted: f64, tol: f64) -> Result<(), CriteriaError> {
    if verdict.is_conclusive() && weighted >= -tol {
        return Err(reject(format!("weighted drift {weighted} does not support {verdict}")));
    }
    Ok(())
}

impl Certificate {
    /// Re-checks the evidence for `verdict` from the stored data alone.
    pub fn revalidate(&self, verdict: Verdict) -> Result<(), CriteriaError> {
        match self {
            Certificate::Averaged { q, beta, mu, weighted, perron } => {
                let qm = matrix_from_rows(q)?;
                let w = check_measure(&qm, mu, beta)?;
                if (w - weighted).abs() > 1e-12 * weighted.abs().max(1.0) {
                    return Err(reject("weighted drift does not match mu and beta"));
                }
                if let Some(pd) = perron {
                    let qv = QMatrix::new(qm)?;
                    if pd.residual(&qv, beta) > 1e-8 * qv.max_abs().max(1.0) {
                        return Err(reject("Perron residual too large"));
                    }
                    if verdict.is_conclusive() && (pd.eta_p <= 0.0 || pd.xi.iter().any(|v| *v <= 0.0)) {
                        return Err(reject("Perron pair does not give a decay rate"));
                    }
                }
                let tol = sign_tol(beta);
                let supported = match verdict {
                    Verdict::Inconclusive => true,
                    Verdict::ExponentiallyErgodic => w < -tol,
                    // a positive average decides only for linear drift, which carries no Perron pair
                    Verdict::Transient => w < -tol || (w > tol && perron.is_none()),
                    Verdict::Recurrent => false,
                };
                if !supported {
                    return Err(reject(format!("weighted drift {w} does not support {verdict}")));
                }
                Ok(())
            }
            Certificate::MMatrix { matrix, transformed, coarse, assessment } => {
                let a = matrix_from_rows(matrix)?;
                if let Some(c) = coarse {
                    let qf = matrix_from_rows(&c.q)?;
                    let expect = crate::mmatrix::transformed_matrix(&qf, &c.beta);
                    if (&expect - &a).amax() > 1e-12 * a.amax().max(1.0) {
                        return Err(reject("test matrix does not match the coarsened data"));
                    }
                }
                if !verdict.is_conclusive() {
                    return Ok(());
                }
                match assessment.test {
                    MMatrixTest::LeadingMinors => {
                        if leading_minors(&a).iter().any(|m| *m <= 0.0) {
                            return Err(reject("a leading minor is not positive"));
                        }
                    }
                    test => {
                        if test == MMatrixTest::Strict && !z_pattern(&a) {
                            return Err(reject("matrix is not a Z-matrix"));
                        }
                        let x = assessment
                            .certificate
                            .positive_vector
                            .as_ref()
                            .ok_or_else(|| reject("no positive vector"))?;
                        let x = DVector::from_column_slice(x);
                        if x.min() <= 0.0 || (&a * &x).min() <= 0.0 {
                            return Err(reject("positive vector does not certify Ax >> 0"));
                        }
                        if *transformed {
                            let xi = TriangularOnes::new(x.len()).apply(&x);
                            if xi.as_slice().windows(2).any(|w| w[1] >= w[0]) {
                                return Err(reject("weights are not strictly decreasing"));
                            }
                        }
                    }
                }
                Ok(())
            }
            Certificate::Fredholm { q, beta, mu, weighted, pair } => {
                let qm = matrix_from_rows(q)?;
                let w = check_measure(&qm, mu, beta)?;
                if (w - weighted).abs() > 1e-12 * weighted.abs().max(1.0) {
                    return Err(reject("weighted drift does not match mu and beta"));
                }
                expect_sign(verdict, w, sign_tol(beta))?;
                if let Some(p) = pair {
                    let res = p.residual_with(&qm, beta);
                    let scale = crate::mmatrix::inf_norm(&qm) + beta.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                    if res > 1e-9 * scale.max(1.0) {
                        return Err(reject(format!("Fredholm residual {res:e} too large")));
                    }
                    if (p.kappa + w).abs() > 1e-12 * w.abs().max(1e-300) * 10.0 {
                        return Err(reject("kappa differs from the weighted drift"));
                    }
                } else if verdict.is_conclusive() {
                    return Err(reject("missing Fredholm pair"));
                }
                Ok(())
            }
            Certificate::MonotoneWeight { q_tilde, beta, eta } => {
                if !verdict.is_conclusive() {
                    return Ok(());
                }
                let qm = matrix_from_rows(q_tilde)?;
                let eta = eta.as_ref().ok_or_else(|| reject("missing weight vector"))?;
                let e = DVector::from_column_slice(eta);
                if e.min() <= 0.0 || eta.windows(2).any(|w| w[1] > w[0]) {
                    return Err(reject("weight is not positive and nonincreasing"));
                }
                let slack = &qm * &e + DVector::from_column_slice(beta);
                if slack.max() >= 0.0 {
                    return Err(reject("beta + Q~ eta is not negative"));
                }
                Ok(())
            }
            Certificate::Radial { q, mu, beta_sup, beta_inf, weighted_sup, weighted_inf } => {
                let qm = matrix_from_rows(q)?;
                let ws = check_measure(&qm, mu, beta_sup)?;
                let wi = check_measure(&qm, mu, beta_inf)?;
                if (ws - weighted_sup).abs() > 1e-12 * ws.abs().max(1.0)
                    || (wi - weighted_inf).abs() > 1e-12 * wi.abs().max(1.0)
                {
                    return Err(reject("weighted limits do not match"));
                }
                match verdict {
                    Verdict::Recurrent if ws >= -sign_tol(beta_sup) => Err(reject("limsup average is not negative")),
                    Verdict::Transient if wi <= sign_tol(beta_inf) => Err(reject("liminf average is not positive")),
                    _ => Ok(()),
                }
            }
            Certificate::Power1d { q, b, mu, weighted, boundary, .. } => {
                let qm = matrix_from_rows(q)?;
                let w = check_measure(&qm, mu, b)?;
                if (w - weighted).abs() > 1e-12 * weighted.abs().max(1.0) {
                    return Err(reject("weighted drift does not match mu and b"));
                }
                let tol = sign_tol(b);
                match verdict {
                    Verdict::Recurrent if w > tol => Err(reject("positive weighted drift cannot be recurrent")),
                    Verdict::Transient if w <= tol => Err(reject("nonpositive weighted drift cannot be transient")),
                    Verdict::ExponentiallyErgodic | Verdict::Inconclusive => {
                        Err(reject("the one-dimensional power criterion is a dichotomy"))
                    }
                    _ => {
                        if let Some(bc) = boundary {
                            let wv = DVector::from_column_slice(&bc.w);
                            let centred: Vec<f64> = b.iter().map(|x| x - w).collect();
                            let res = (&qm * &wv - DVector::from_column_slice(&centred)).amax();
                            if res > 1e-9 * (qm.amax() * wv.amax() + 1.0) {
                                return Err(reject("boundary solve residual too large"));
                            }
                            if bc.quantity >= 0.0 && wv.amax() > 0.0 {
                                return Err(reject("boundary quantity is not negative"));
                            }
                        }
                        Ok(())
                    }
                }
            }
        }
    }
}

/// Outcome of one criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub criterion: Criterion,
    pub certificate: Certificate,
    /// Set exactly when the verdict is inconclusive.
    pub reason: Option<String>,
    pub notes: Vec<String>,
}

impl Classification {
    pub(crate) fn conclusive(verdict: Verdict, criterion: Criterion, certificate: Certificate) -> Self {
        Classification { verdict, criterion, certificate, reason: None, notes: Vec::new() }
    }

    pub(crate) fn inconclusive(criterion: Criterion, certificate: Certificate, reason: impl Into<String>) -> Self {
        Classification {
            verdict: Verdict::Inconclusive,
            criterion,
            certificate,
            reason: Some(reason.into()),
            notes: Vec::new(),
        }
    }

    pub(crate) fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn revalidate(&self) -> Result<(), CriteriaError> {
        self.certificate.revalidate(self.verdict)
    }
}

/// `(mu, sum mu_i v_i)` for a finite generator.
pub(crate) fn weighted_average(q: &QMatrix, v: &[f64]) -> Result<(Vec<f64>, f64), CriteriaError> {
    check_vector(v, q.n(), "coefficient vector")?;
    let mu = invariant_measure(q)?;
    Ok((mu.as_slice().to_vec(), mu.weighted_sum(v)))
}
