use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::MMatrixError;
use crate::markov::{invariant_measure, QMatrix};

pub const POWER_ITERATION_CAP: usize = 100_000;
const RESIDUAL_TOL: f64 = 1e-12;

/// Perron pair of `Q_p = Q + p diag(beta)`: `Q_p xi = -eta_p xi`, `xi >> 0`, `sum xi = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerronData {
    pub p: f64,
    pub eta_p: f64,
    pub xi: Vec<f64>,
    pub iterations: usize,
}

impl PerronData {
    /// `||Q_p xi + eta_p xi||_inf`.
    pub fn residual(&self, q: &QMatrix, beta: &[f64]) -> f64 {
        let qp = tilted(q, beta, self.p);
        let xi = DVector::from_column_slice(&self.xi);
        (&qp * &xi + &xi * self.eta_p).amax()
    }
}

fn tilted(q: &QMatrix, beta: &[f64], p: f64) -> DMatrix<f64> {
    let mut qp = q.matrix().clone();
    for (i, b) in beta.iter().enumerate() {
        qp[(i, i)] += p * b;
    }
    qp
}

/// Maximum absolute row sum.
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Power iteration on `Q_p + cI`, which is nonnegative with a positive
/// diagonal, hence primitive for irreducible `Q`.
pub fn perron(q: &QMatrix, beta: &[f64], p: f64) -> Result<PerronData, MMatrixError> {
    let n = q.n();
    if beta.len() != n {
        return Err(crate::error::MarkovError::Dimension { expected: n, got: beta.len() }.into());
    }
    if !(p >= 0.0 && p.is_finite()) {
        return Err(MMatrixError::NotApplicable(format!("p must be a finite nonnegative number, got {p}")));
    }
    let qp = tilted(q, beta, p);
    let c = (0..n).map(|i| q.exit_rate(i) + p * beta[i].abs()).fold(0.0, f64::max) + 1.0;
    let mut shifted = qp.clone();
    for i in 0..n {
        shifted[(i, i)] += c;
    }
    let tol = RESIDUAL_TOL * inf_norm(&qp).max(1.0);
    let mut xi = DVector::from_element(n, 1.0 / n as f64);
    for it in 1..=POWER_ITERATION_CAP {
        let y = &shifted * &xi;
        let rho = y.sum();
        let next = y / rho;
        let residual = (&shifted * &next - &next * rho).amax();
        xi = next;
        if residual <= tol {
            return Ok(PerronData { p, eta_p: c - rho, xi: xi.iter().copied().collect(), iterations: it });
        }
    }
    Err(MMatrixError::NoConvergence(POWER_ITERATION_CAP))
}

/// Largest `p0 <= p_max` with `eta_p > 0` on `(0, p0)`.
///
/// `eta_p` is concave with `eta_0 = 0` and slope `-sum mu_i beta_i` at zero,
/// so the positive set is an interval starting at zero.
pub fn critical_p(q: &QMatrix, beta: &[f64], p_max: f64) -> Result<f64, MMatrixError> {
    let mu = invariant_measure(q)?;
    let drift = mu.weighted_sum(beta);
    if drift >= 0.0 {
        return Err(MMatrixError::NotApplicable(format!(
            "weighted drift {drift} is not negative"
        )));
    }
    if perron(q, beta, p_max)?.eta_p > 0.0 {
        return Ok(p_max);
    }
    let (mut lo, mut hi) = (0.0, p_max);
    while hi - lo > 1e-8 * hi.max(1e-8) {
        let mid = 0.5 * (lo + hi);
        if perron(q, beta, mid)?.eta_p > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
