//! Nonsingular M-matrix tests and spectral data of `Q + p diag(beta)`.
//!
//! For a Z-matrix (nonpositive off-diagonal entries) the following are
//! equivalent: being a nonsingular M-matrix, positive leading principal
//! minors, positive real eigenvalues, and semipositivity (`x >> 0` with
//! `Ax >> 0`). [`is_nonsingular_mmatrix`] evaluates all of them and reports
//! disagreement instead of picking one.

mod perron;

pub use perron::{critical_p, inf_norm, perron, PerronData, POWER_ITERATION_CAP};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::MMatrixError;
use crate::lp::find_nonnegative;

/// Off-diagonal entries within this band (relative to `max(1, max|A|)`) count as zero.
pub const Z_PATTERN_TOL: f64 = 1e-12;
/// Relative distance to singularity below which a verdict is not forced.
pub const BOUNDARY_BAND: f64 = 1e-8;
pub const MAX_SIZE: usize = 64;

fn scale_of(a: &DMatrix<f64>) -> f64 {
    a.amax().max(1.0)
}

fn check_shape(a: &DMatrix<f64>) -> Result<(), MMatrixError> {
    if a.nrows() == 0 || !a.is_square() {
        return Err(MMatrixError::Shape);
    }
    if a.nrows() > MAX_SIZE {
        return Err(MMatrixError::TooLarge(a.nrows()));
    }
    Ok(())
}

/// First off-diagonal entry above the tolerance band, if any.
pub fn z_violation(a: &DMatrix<f64>) -> Option<(usize, usize, f64)> {
    let tol = Z_PATTERN_TOL * scale_of(a);
    let n = a.nrows();
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .find(|&(i, j)| i != j && a[(i, j)] > tol)
        .map(|(i, j)| (i, j, a[(i, j)]))
}

/// True iff every off-diagonal entry is nonpositive (up to the band).
pub fn z_pattern(a: &DMatrix<f64>) -> bool {
    z_violation(a).is_none()
}

/// Determinants of the top-left `k x k` blocks, `k = 1..=n`.
pub fn leading_minors(a: &DMatrix<f64>) -> Vec<f64> {
    (1..=a.nrows().min(a.ncols()))
        .map(|k| a.view((0, 0), (k, k)).into_owned().lu().determinant())
        .collect()
}

/// Finds `x >= 1` with `Ax >> 0` (`Ax >= 1` from the LP); `None` when no `x >> 0` has `Ax >> 0`.
pub fn semipositive_certificate(a: &DMatrix<f64>) -> Result<Option<DVector<f64>>, MMatrixError> {
    if !a.is_square() {
        return Err(MMatrixError::Shape);
    }
    let n = a.nrows();
    let ones = DVector::from_element(n, 1.0);
    // A^-1 1 works for every nonsingular M-matrix and stays exact near
    // singularity, where the LP would need entries of size 1/lambda_min
    if let Some(x) = a.clone().lu().solve(&ones) {
        if x.iter().all(|v| *v > 0.0 && v.is_finite()) && (a * &x).min() > 0.0 {
            return Ok(Some(&x / x.min().min(1.0)));
        }
    }
    // x = 1 + z, z >= 0
    let h = &ones - a * &ones;
    Ok(find_nonnegative(a, &h)?.map(|z| z + ones))
}

/// Smallest real eigenvalue, `None` if the spectrum has no real point.
pub fn min_real_eigenvalue(a: &DMatrix<f64>) -> Result<Option<f64>, MMatrixError> {
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 100_000)
        .ok_or(MMatrixError::NoConvergence(100_000))?;
    let tol = 1e-10 * scale_of(a);
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= tol)
        .map(|z| z.re)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |m| m.min(v)))))
}

/// Evidence for or against nonsingular M-matrix status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MMatrixCertificate {
    /// Z-pattern holds and every leading minor is positive.
    pub verdict: bool,
    pub z_pattern_ok: bool,
    pub z_violation: Option<(usize, usize, f64)>,
    pub minors: Vec<f64>,
    /// `x >= 1` with `Ax >= 1`, when one exists.
    pub positive_vector: Option<Vec<f64>>,
    pub image: Option<Vec<f64>>,
    pub min_real_eigenvalue: Option<f64>,
    /// A real eigenvalue `<= 0`, when one exists.
    pub eigen_witness: Option<f64>,
    /// `|min real eigenvalue| / max(1, max|A|)` for Z-matrices, infinity otherwise.
    pub distance: f64,
}

impl MMatrixCertificate {
    pub fn minors_positive(&self) -> bool {
        self.minors.iter().all(|m| *m > 0.0)
    }

    pub fn eigenvalues_positive(&self) -> bool {
        self.min_real_eigenvalue.is_none_or(|l| l > 0.0)
    }

    pub fn semipositive(&self) -> bool {
        self.positive_vector.is_some()
    }

    pub fn near_boundary(&self) -> bool {
        self.distance <= BOUNDARY_BAND
    }
}

/// Runs every check without enforcing their agreement.
pub fn mmatrix_evidence(a: &DMatrix<f64>) -> Result<MMatrixCertificate, MMatrixError> {
    check_shape(a)?;
    let z_violation = z_violation(a);
    let z_ok = z_violation.is_none();
    let minors = leading_minors(a);
    let positive = semipositive_certificate(a)?;
    let image = positive.as_ref().map(|x| (a * x).iter().copied().collect());
    let min_eig = min_real_eigenvalue(a)?;
    let distance = if z_ok {
        min_eig.map_or(0.0, |l| l.abs() / scale_of(a))
    } else {
        f64::INFINITY
    };
    let verdict = z_ok && minors.iter().all(|m| *m > 0.0);
    Ok(MMatrixCertificate {
        verdict,
        z_pattern_ok: z_ok,
        z_violation,
        minors,
        positive_vector: positive.map(|x| x.iter().copied().collect()),
        image,
        min_real_eigenvalue: min_eig,
        eigen_witness: min_eig.filter(|l| *l <= 0.0),
        distance,
    })
}

/// Decides nonsingular M-matrix status; the equivalent conditions must agree
/// unless the matrix is within [`BOUNDARY_BAND`] of singularity.
pub fn is_nonsingular_mmatrix(a: &DMatrix<f64>) -> Result<MMatrixCertificate, MMatrixError> {
    let cert = mmatrix_evidence(a)?;
    if cert.z_pattern_ok && !cert.near_boundary() {
        let minors = cert.minors_positive();
        let semipositive = cert.semipositive();
        let eigenvalue = cert.eigenvalues_positive();
        if minors != semipositive || minors != eigenvalue {
            return Err(MMatrixError::InconsistentChecks {
                minors,
                semipositive,
                eigenvalue,
                distance: cert.distance,
            });
        }
    }
    Ok(cert)
}

/// Which condition a criterion requires of its test matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MMatrixTest {
    /// Nonsingular M-matrix: Z-pattern plus the equivalent conditions.
    #[default]
    Strict,
    /// Existence of `x >> 0` with `Ax >> 0`, without the Z-pattern.
    Semipositive,
    /// Positive leading principal minors, without the Z-pattern.
    LeadingMinors,
}

impl MMatrixTest {
    pub fn name(self) -> &'static str {
        match self {
            MMatrixTest::Strict => "strict",
            MMatrixTest::Semipositive => "semipositive",
            MMatrixTest::LeadingMinors => "leading-minors",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestOutcome {
    Pass,
    Fail,
    /// Within the boundary band; the test does not decide.
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MMatrixAssessment {
    pub test: MMatrixTest,
    pub outcome: TestOutcome,
    pub certificate: MMatrixCertificate,
}

impl MMatrixAssessment {
    pub fn passed(&self) -> bool {
        self.outcome == TestOutcome::Pass
    }
}

/// Applies `test` to `a` with the boundary band.
pub fn assess(a: &DMatrix<f64>, test: MMatrixTest) -> Result<MMatrixAssessment, MMatrixError> {
    let (outcome, certificate) = match test {
        MMatrixTest::Strict => {
            let cert = is_nonsingular_mmatrix(a)?;
            let outcome = if !cert.z_pattern_ok {
                TestOutcome::Fail
            } else if cert.near_boundary() {
                TestOutcome::Boundary
            } else if cert.verdict {
                TestOutcome::Pass
            } else {
                TestOutcome::Fail
            };
            (outcome, cert)
        }
        MMatrixTest::Semipositive => {
            let mut cert = mmatrix_evidence(a)?;
            let eps = BOUNDARY_BAND * scale_of(a);
            let id = DMatrix::<f64>::identity(a.nrows(), a.ncols());
            let outcome = match semipositive_certificate(&(a - &id * eps))? {
                Some(x) => {
                    cert.image = Some((a * &x).iter().copied().collect());
                    cert.positive_vector = Some(x.iter().copied().collect());
                    TestOutcome::Pass
                }
                None => match semipositive_certificate(&(a + &id * eps))? {
                    None => TestOutcome::Fail,
                    Some(_) => TestOutcome::Boundary,
                },
            };
            (outcome, cert)
        }
        MMatrixTest::LeadingMinors => {
            let cert = mmatrix_evidence(a)?;
            let s = scale_of(a);
            let mut outcome = TestOutcome::Pass;
            for (k, m) in cert.minors.iter().enumerate() {
                let band = BOUNDARY_BAND * s.powi(k as i32 + 1);
                if *m < -band {
                    outcome = TestOutcome::Fail;
                    break;
                }
                if m.abs() <= band {
                    outcome = TestOutcome::Boundary;
                }
            }
            (outcome, cert)
        }
    };
    Ok(MMatrixAssessment { test, outcome, certificate })
}

/// The upper-triangular all-ones matrix `H_m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TriangularOnes {
    m: usize,
}

impl TriangularOnes {
    pub fn new(m: usize) -> Self {
        TriangularOnes { m }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.m, self.m, |i, j| if j >= i { 1.0 } else { 0.0 })
    }

    /// Suffix sums: `(H eta)_i = eta_i + ... + eta_m`.
    pub fn apply(&self, eta: &DVector<f64>) -> DVector<f64> {
        let mut out = eta.clone();
        for i in (0..self.m.saturating_sub(1)).rev() {
            out[i] += out[i + 1];
        }
        out
    }

    /// Inverse map: successive differences.
    pub fn solve(&self, xi: &DVector<f64>) -> DVector<f64> {
        let mut out = xi.clone();
        for i in 0..self.m.saturating_sub(1) {
            out[i] = xi[i] - xi[i + 1];
        }
        out
    }

    /// `A H` without forming `H`: column `j` is the prefix sum of columns `0..=j`.
    pub fn right_multiply(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = a.clone();
        for j in 1..out.ncols() {
            let prev = out.column(j - 1).into_owned();
            let mut col = out.column_mut(j);
            col += prev;
        }
        out
    }
}

/// `-(Q + diag(beta))`.
pub fn shifted_negation(q: &DMatrix<f64>, beta: &[f64]) -> DMatrix<f64> {
    let mut a = -q.clone();
    for (i, b) in beta.iter().enumerate() {
        a[(i, i)] -= b;
    }
    a
}

/// `-(Q + diag(beta)) H`.
pub fn transformed_matrix(q: &DMatrix<f64>, beta: &[f64]) -> DMatrix<f64> {
    TriangularOnes::new(q.nrows()).right_multiply(&shifted_negation(q, beta))
}
