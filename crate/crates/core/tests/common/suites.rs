//! Randomised numerical suites, each checked against an independent oracle.
#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use regime_switch::criteria::{boundary_quantity, classify_power_1d, fredholm_solve, Verdict};
use regime_switch::lp::find_nonnegative;
use regime_switch::markov::{invariant_measure, QMatrix};
use regime_switch::mmatrix::{
    is_nonsingular_mmatrix, leading_minors, min_real_eigenvalue, perron, semipositive_certificate, BOUNDARY_BAND,
};

#[derive(Debug, Default)]
pub struct SuiteResult {
    pub cases: usize,
    pub failures: usize,
    /// Cases excluded by the suite's own rule, e.g. too close to singularity.
    pub skipped: usize,
    pub worst: f64,
    pub first_failure: Option<String>,
}

impl SuiteResult {
    fn fail(&mut self, msg: String) {
        self.failures += 1;
        self.first_failure.get_or_insert(msg);
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

pub fn random_generator(rng: &mut impl Rng, n: usize, lo: f64, hi: f64, zero_prob: f64) -> QMatrix {
    let mut off = DMatrix::from_fn(n, n, |i, j| {
        if i == j || rng.random_bool(zero_prob) {
            0.0
        } else {
            rng.random_range(lo..hi)
        }
    });
    for i in 0..n {
        if n > 1 && off[(i, (i + 1) % n)] == 0.0 {
            off[(i, (i + 1) % n)] = rng.random_range(lo..hi);
        }
    }
    QMatrix::from_off_diagonal(&off).expect("irreducible by construction")
}

/// Null vector of `Q^T` from the SVD, normalised to a probability vector.
pub fn svd_measure(q: &QMatrix) -> DVector<f64> {
    let svd = q.matrix().transpose().svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let k = svd.singular_values.imin();
    let v: DVector<f64> = v_t.row(k).transpose();
    &v / v.sum()
}

fn spectral_radius(b: &DMatrix<f64>) -> f64 {
    b.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Random Z-matrices `sI - B`, with `s` either side of `rho(B)`: the oracle
/// verdict is `s > rho(B)`. Minors, LP semipositivity and eigenvalues must all
/// reproduce it outside the boundary band.
pub fn mmatrix_agreement(count: usize, seed: u64) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = SuiteResult::default();
    while r.cases + r.skipped < count {
        let n = rng.random_range(1..=10);
        let b = DMatrix::from_fn(n, n, |_, _| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..5.0) });
        let rho = spectral_radius(&b);
        // one case in five sits within 1e-6 of singularity
        let u: f64 = if rng.random_bool(0.2) {
            let mag = 10f64.powf(rng.random_range(-10.0..-6.0));
            if rng.random_bool(0.5) { mag } else { -mag }
        } else {
            rng.random_range(-0.3..0.3)
        };
        let s = if rho > 0.0 { rho * (1.0 + u) } else { u };
        let a = DMatrix::identity(n, n) * s - &b;
        let expected = s > rho;
        let distance = (s - rho).abs() / a.amax().max(1.0);
        if distance <= BOUNDARY_BAND {
            r.skipped += 1;
            continue;
        }
        r.cases += 1;
        r.worst = r.worst.max(1.0 / distance);
        let minors = leading_minors(&a).iter().all(|m| *m > 0.0);
        let ones = DVector::from_element(n, 1.0);
        let lp = match find_nonnegative(&a, &(&ones - &a * &ones)) {
            Ok(z) => z.is_some(),
            Err(e) => {
                r.fail(format!("LP error {e} at n = {n}"));
                continue;
            }
        };
        let certificate = semipositive_certificate(&a).map(|x| x.is_some()).unwrap_or(!expected);
        let eigen = min_real_eigenvalue(&a).ok().flatten().is_none_or(|l| l > 0.0);
        let library = is_nonsingular_mmatrix(&a).map(|c| c.verdict);
        let checks = [("minors", minors), ("lp", lp), ("certificate", certificate), ("eigenvalue", eigen)];
        if let Some((name, _)) = checks.iter().find(|(_, v)| *v != expected) {
            r.fail(format!("{name} disagrees (n = {n}, s - rho = {:e})", s - rho));
        } else if library.as_ref().map_or(true, |v| *v != expected) {
            r.fail(format!("library verdict {library:?}, expected {expected} (n = {n})"));
        }
    }
    r
}

/// `eta_p` for `sum mu beta < 0`: positive at small `p`, first order
/// `-p sum mu beta`, zero at `p = 0`. `worst` is the largest relative
/// first-order error.
pub fn perron_suite(count: usize, seed: u64) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = SuiteResult::default();
    let p = 1e-3;
    for _ in 0..count {
        let n = rng.random_range(2..=8);
        let q = random_generator(&mut rng, n, 0.5, 5.0, 0.0);
        let mu = svd_measure(&q);
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let c = rng.random_range(0.5..2.0);
        let mean: f64 = mu.iter().zip(&raw).map(|(m, b)| m * b).sum();
        let beta: Vec<f64> = raw.iter().map(|b| b - mean - c).collect();
        let drift: f64 = mu.iter().zip(&beta).map(|(m, b)| m * b).sum();
        r.cases += 1;
        let (zero, small) = match (perron(&q, &beta, 0.0), perron(&q, &beta, p)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                r.fail(format!("perron failed: {e}"));
                continue;
            }
        };
        let first_order = -p * drift;
        let rel = (small.eta_p - first_order).abs() / first_order.abs();
        r.worst = r.worst.max(rel);
        // independent residual: (Q + p diag beta) xi = -eta xi
        let xi = DVector::from_vec(small.xi.clone());
        let qp = q.matrix() + DMatrix::from_diagonal(&DVector::from_vec(beta.clone())) * p;
        let residual = (&qp * &xi + &xi * small.eta_p).amax();
        let scale = qp.amax().max(1.0) * xi.amax();
        if zero.eta_p.abs() > 1e-10 {
            r.fail(format!("eta_0 = {:e}", zero.eta_p));
        } else if !(small.eta_p > 0.0) {
            r.fail(format!("eta_p = {:e} not positive", small.eta_p));
        } else if rel > 0.05 {
            r.fail(format!("first-order error {rel:.3}"));
        } else if residual > 1e-9 * scale || small.xi.iter().any(|v| *v <= 1e-12) {
            r.fail(format!("perron residual {residual:e}"));
        }
    }
    r
}

/// Solves `Q xi = -kappa 1 - beta` and checks the residual directly and
/// `kappa` against the SVD measure. `worst` is the largest scaled residual.
pub fn fredholm_suite(count: usize, seed: u64) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = SuiteResult::default();
    for _ in 0..count {
        let n = rng.random_range(1..=10);
        let q = random_generator(&mut rng, n, 0.1, 5.0, 0.3);
        let mu = invariant_measure(&q).expect("irreducible");
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let c = rng.random_range(0.1..2.0);
        let mean = mu.weighted_sum(&raw);
        let beta: Vec<f64> = raw.iter().map(|b| b - mean - c).collect();
        r.cases += 1;
        let pair = match fredholm_solve(&q, &beta) {
            Ok(p) => p,
            Err(e) => {
                r.fail(format!("fredholm_solve: {e}"));
                continue;
            }
        };
        let xi = DVector::from_vec(pair.xi.clone());
        let res = q.matrix() * &xi + DVector::from_element(n, pair.kappa) + DVector::from_vec(beta.clone());
        let scale = (q.matrix().amax() * xi.amax()).max(beta.iter().fold(1.0f64, |m, b| m.max(b.abs())));
        let scaled = res.amax() / scale;
        r.worst = r.worst.max(scaled);
        let oracle = -svd_measure(&q).iter().zip(&beta).map(|(m, b)| m * b).sum::<f64>();
        let rel = (pair.kappa - oracle).abs() / oracle.abs();
        if scaled > 1e-9 {
            r.fail(format!("residual {scaled:e} at n = {n}"));
        } else if rel > 1e-12 {
            r.fail(format!("kappa {} vs {oracle}: relative {rel:e}", pair.kappa));
        }
    }
    r
}

/// `sum mu_i b_i w_i < 0` for `Q w = b`, `b` centred and nonzero.
pub fn boundary_quantity_suite(count: usize, seed: u64) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = SuiteResult { worst: f64::NEG_INFINITY, ..SuiteResult::default() };
    for _ in 0..count {
        let n = rng.random_range(2..=10);
        let q = random_generator(&mut rng, n, 0.1, 5.0, 0.3);
        let mu = invariant_measure(&q).expect("irreducible");
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mean = mu.weighted_sum(&raw);
        let b: Vec<f64> = raw.iter().map(|v| v - mean).collect();
        r.cases += 1;
        match boundary_quantity(&q, &b) {
            Ok(cert) => {
                let w = DVector::from_vec(cert.w.clone());
                let residual = (q.matrix() * &w - DVector::from_vec(b.clone())).amax();
                let direct: f64 = (0..n).map(|i| mu.as_slice()[i] * b[i] * cert.w[i]).sum();
                r.worst = r.worst.max(cert.quantity);
                if !(cert.quantity < 0.0) {
                    r.fail(format!("quantity {} not negative", cert.quantity));
                } else if residual > 1e-9 * q.matrix().amax().max(1.0) * w.amax().max(1.0) {
                    r.fail(format!("Poisson residual {residual:e}"));
                } else if (direct - cert.quantity).abs() > 1e-12 * direct.abs().max(1.0) {
                    r.fail(format!("quantity {} vs direct {direct}", cert.quantity));
                }
            }
            Err(e) => r.fail(format!("boundary_quantity: {e}")),
        }
    }
    r
}

pub const POWERS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 0.9];
pub const AVERAGES: [f64; 7] = [-1.0, -0.1, -1e-6, 0.0, 1e-6, 0.1, 1.0];

/// One-dimensional power drift: Recurrent exactly when the averaged drift is
/// at most zero, never Inconclusive.
pub fn power_grid(generators: usize, seed: u64) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = SuiteResult::default();
    for g in 0..generators {
        let n = 1 + g % 4;
        let q = random_generator(&mut rng, n, 0.2, 4.0, 0.2);
        let mu = invariant_measure(&q).expect("irreducible");
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mean = mu.weighted_sum(&raw);
        for sigma_scale in [0.5, 1.0, 3.0] {
            let sigma: Vec<f64> = (0..n).map(|_| sigma_scale * rng.random_range(0.5..1.5)).collect();
            for delta in POWERS {
                for s in AVERAGES {
                    let b: Vec<f64> = if n == 1 { vec![s] } else { raw.iter().map(|v| v - mean + s).collect() };
                    r.cases += 1;
                    let expected = if s <= 0.0 { Verdict::Recurrent } else { Verdict::Transient };
                    match classify_power_1d(&q, &b, &sigma, delta) {
                        Ok(c) if c.verdict == expected => {}
                        Ok(c) => r.fail(format!("n = {n}, delta = {delta}, avg = {s}: {} instead of {expected}", c.verdict)),
                        Err(e) => r.fail(format!("n = {n}, delta = {delta}: {e}")),
                    }
                }
            }
        }
    }
    r
}
