use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::CriteriaError;
use crate::lp::find_nonnegative;
use crate::markov::{invariant_measure, QMatrix};
use crate::mmatrix::{inf_norm, TriangularOnes};

use super::finite::classify_ou;
use super::{
    check_vector, sign_tol, weighted_average, BoundaryCertificate, Certificate, Classification, Criterion,
    LimitBehavior, TwoFunctionData, Verdict,
};

/// `kappa > 0` and `xi` with `Q xi = -kappa 1 - beta`, normalised by `sum mu_i xi_i = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FredholmPair {
    pub kappa: f64,
    pub xi: Vec<f64>,
}

impl FredholmPair {
    /// `||Q xi + kappa 1 + beta||_inf`.
    pub fn residual(&self, q: &QMatrix, beta: &[f64]) -> f64 {
        self.residual_with(q.matrix(), beta)
    }

    pub(crate) fn residual_with(&self, q: &DMatrix<f64>, beta: &[f64]) -> f64 {
        let xi = DVector::from_column_slice(&self.xi);
        let r = q * xi + DVector::from_column_slice(beta).add_scalar(self.kappa);
        r.amax()
    }
}

/// Solves `(Q - 1 mu^T) x = rhs`; the matrix is nonsingular for irreducible `Q`
/// and every solution has `sum mu_i x_i = -sum mu_i rhs_i`.
fn solve_projected(q: &QMatrix, mu: &DVector<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>, CriteriaError> {
    let n = q.n();
    let ones = DVector::from_element(n, 1.0);
    let m = q.matrix() - &ones * mu.transpose();
    let lu = m.clone().lu();
    let mut x = lu.solve(rhs).ok_or(crate::error::MarkovError::SingularSolve)?;
    let r = rhs - &m * &x;
    if let Some(d) = lu.solve(&r) {
        x += d;
    }
    Ok(x)
}

/// Fredholm pair for `sum mu_i beta_i < 0`.
pub fn fredholm_solve(q: &QMatrix, beta: &[f64]) -> Result<FredholmPair, CriteriaError> {
    check_vector(beta, q.n(), "beta")?;
    let mu = invariant_measure(q)?;
    let weighted = mu.weighted_sum(beta);
    if weighted >= -sign_tol(beta) {
        return Err(CriteriaError::NotSolvable(weighted));
    }
    let kappa = -weighted;
    let rhs = -DVector::from_column_slice(beta).add_scalar(kappa);
    let xi = solve_projected(q, mu.probabilities(), &rhs)?;
    Ok(FredholmPair { kappa, xi: xi.iter().copied().collect() })
}

/// `w` with `Q w = b - (sum mu_i b_i) 1` and `sum mu_i w_i = 0`.
pub fn poisson_solve(q: &QMatrix, b: &[f64]) -> Result<Vec<f64>, CriteriaError> {
    check_vector(b, q.n(), "b")?;
    let mu = invariant_measure(q)?;
    let mean = mu.weighted_sum(b);
    let centred = DVector::from_column_slice(b).add_scalar(-mean);
    Ok(solve_projected(q, mu.probabilities(), &centred)?.iter().copied().collect())
}

/// `sum mu_i b_i w_i` for the centred Poisson solution `w`; it equals minus
/// the Dirichlet form of `w`, so it is negative unless `b` is constant.
pub fn boundary_quantity(q: &QMatrix, b: &[f64]) -> Result<BoundaryCertificate, CriteriaError> {
    let w = poisson_solve(q, b)?;
    let mu = invariant_measure(q)?;
    let mean = mu.weighted_sum(b);
    let quantity = mu.as_slice().iter().zip(b).zip(&w).map(|((m, bi), wi)| m * (bi - mean) * wi).sum();
    Ok(BoundaryCertificate { w, quantity })
}

fn fredholm_certificate(q: &QMatrix, beta: &[f64]) -> Result<Certificate, CriteriaError> {
    let (mu, weighted) = weighted_average(q, beta)?;
    let pair = if weighted < -sign_tol(beta) { Some(fredholm_solve(q, beta)?) } else { None };
    Ok(Certificate::Fredholm { q: q.rows(), beta: beta.to_vec(), mu, weighted, pair })
}

/// Two-function criterion for constant rates.
pub fn classify_two_function(q: &QMatrix, data: &TwoFunctionData) -> Result<Classification, CriteriaError> {
    check_vector(&data.beta, q.n(), "beta")?;
    let cert = fredholm_certificate(q, &data.beta)?;
    let solved = matches!(&cert, Certificate::Fredholm { pair: Some(_), .. });
    if !solved {
        let weighted = match &cert {
            Certificate::Fredholm { weighted, .. } => *weighted,
            _ => unreachable!(),
        };
        return Ok(Classification::inconclusive(
            Criterion::TwoFunction,
            cert,
            format!(
                "weighted drift {weighted:.6e} is not negative; for a one-dimensional power drift the \
                 balanced case is decided by the power-1d criterion"
            ),
        ));
    }
    let verdict = match data.h_limit {
        LimitBehavior::ToInfinity => Verdict::Recurrent,
        LimitBehavior::ToZero => Verdict::Transient,
    };
    Ok(Classification::conclusive(verdict, Criterion::TwoFunction, cert))
}

/// Searches a positive nonincreasing `eta` with `beta + Q~ eta << 0`.
///
/// Solved in homogeneous form: `eta = H w / s` with `w, s >= 0`, `w_N >= 1`,
/// `s >= 1` and `-(Q~ H w + s beta) >= 1`, which is feasible exactly when a
/// strict solution exists.
pub fn classify_two_function_state_dependent(
    q_tilde: &QMatrix,
    beta: &[f64],
    h_limit: LimitBehavior,
) -> Result<Classification, CriteriaError> {
    let n = q_tilde.n();
    check_vector(beta, n, "beta")?;
    let h = TriangularOnes::new(n);
    let qh = h.right_multiply(q_tilde.matrix());
    let mut g = DMatrix::zeros(n + 2, n + 1);
    let mut rhs = DVector::from_element(n + 2, 1.0);
    g[(0, n - 1)] = 1.0;
    g[(1, n)] = 1.0;
    for i in 0..n {
        for j in 0..n {
            g[(i + 2, j)] = -qh[(i, j)];
        }
        g[(i + 2, n)] = -beta[i];
    }
    let scale = inf_norm(&g).max(1.0);
    g /= scale;
    rhs /= scale;
    let solution = find_nonnegative(&g, &rhs)?;
    let eta = solution.map(|z| {
        let s = z[n];
        let w = z.rows(0, n).into_owned();
        (h.apply(&w) / s).iter().copied().collect::<Vec<f64>>()
    });
    let found = eta.is_some();
    let cert = Certificate::MonotoneWeight { q_tilde: q_tilde.rows(), beta: beta.to_vec(), eta };
    if !found {
        return Ok(Classification::inconclusive(
            Criterion::TwoFunctionBoundedRates,
            cert,
            "no positive nonincreasing eta makes beta + Q~ eta negative",
        ));
    }
    let verdict = match h_limit {
        LimitBehavior::ToInfinity => Verdict::Recurrent,
        LimitBehavior::ToZero => Verdict::Transient,
    };
    Ok(Classification::conclusive(verdict, Criterion::TwoFunctionBoundedRates, cert))
}

/// Complete criterion for `dX = b_i X^delta dt + sigma_i dB` on the half line.
///
/// For `delta in [-1, 1)` the process is recurrent iff `sum mu_i b_i <= 0`;
/// the balanced case carries the negative quantity `sum mu_i b_i w_i`.
/// `delta = 1` is the linear case.
pub fn classify_power_1d(q: &QMatrix, b: &[f64], sigma: &[f64], delta: f64) -> Result<Classification, CriteriaError> {
    check_vector(b, q.n(), "b")?;
    check_vector(sigma, q.n(), "sigma")?;
    if sigma.contains(&0.0) {
        return Err(CriteriaError::InvalidInput("sigma_i must be nonzero".into()));
    }
    if !(-1.0..=1.0).contains(&delta) {
        return Err(CriteriaError::InvalidInput(format!("delta must lie in [-1, 1], got {delta}")));
    }
    if delta == 1.0 {
        return Ok(classify_ou(q, b)?.with_note("delta = 1 is handled by the linear-drift criterion"));
    }
    let (mu, weighted) = weighted_average(q, b)?;
    let tol = sign_tol(b);
    let boundary = if weighted.abs() <= tol { Some(boundary_quantity(q, b)?) } else { None };
    let verdict = if weighted <= tol { Verdict::Recurrent } else { Verdict::Transient };
    let cert = Certificate::Power1d { q: q.rows(), b: b.to_vec(), mu, weighted, delta, boundary };
    Ok(Classification::conclusive(verdict, Criterion::Power1d, cert))
}
