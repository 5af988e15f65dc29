//! Euler–Maruyama engine for regime-switching diffusions.
//!
//! Monte Carlo output is corroboration only: a finite horizon cannot prove
//! recurrence, so paths that neither return nor escape are reported as
//! censored.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::markov::{QMatrix, StateDependentRates, TailHomogeneousChain};

/// Largest allowed switching probability per step.
pub const MAX_SWITCH_PROB: f64 = 0.1;

pub type DriftFn = Arc<dyn Fn(&[f64], usize) -> Vec<f64> + Send + Sync>;
pub type DiffusionFn = Arc<dyn Fn(&[f64], usize) -> DMatrix<f64> + Send + Sync>;

/// Drift `b(x, i)`.
#[derive(Clone)]
pub enum DriftSpec {
    /// `b_i |x|^delta x/|x|`; for `delta < 0` the norm is floored at `max(1e-3, sqrt dt)`.
    Power { b: Vec<f64>, delta: f64 },
    /// `b_i x`.
    Linear { b: Vec<f64> },
    Custom(DriftFn),
}

/// Diffusion coefficient `sigma(x, i)`.
#[derive(Clone)]
pub enum DiffusionSpec {
    /// `sigma_i I`.
    Scalar(Vec<f64>),
    Custom(DiffusionFn),
}

#[derive(Clone)]
pub enum SwitchingSpec {
    Constant(QMatrix),
    /// `max_exit` must bound `q_i(x)` everywhere; it fixes the step-size check.
    StateDependent { rates: StateDependentRates, max_exit: f64 },
}

impl SwitchingSpec {
    pub fn regimes(&self) -> usize {
        match self {
            SwitchingSpec::Constant(q) => q.n(),
            SwitchingSpec::StateDependent { rates, .. } => rates.n(),
        }
    }

    fn max_exit(&self) -> f64 {
        match self {
            SwitchingSpec::Constant(q) => (0..q.n()).map(|i| q.exit_rate(i)).fold(0.0, f64::max),
            SwitchingSpec::StateDependent { max_exit, .. } => *max_exit,
        }
    }

    fn rate(&self, x: &[f64], i: usize, j: usize) -> f64 {
        match self {
            SwitchingSpec::Constant(q) => q.rate(i, j),
            SwitchingSpec::StateDependent { rates, .. } => rates.rate(x, i, j),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    #[default]
    None,
    /// Half line `[0, inf)`, reflected by `x -> |x|`; needs `dim = 1`.
    ReflectAtZero,
}

/// `dX = b(X, L) dt + sigma(X, L) dB` with `L` switching at rates `q_ij(X)`.
#[derive(Clone)]
pub struct SdeModel {
    dim: usize,
    drift: DriftSpec,
    diffusion: DiffusionSpec,
    switching: SwitchingSpec,
    boundary: Boundary,
    notes: Vec<String>,
}

impl fmt::Debug for SdeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SdeModel")
            .field("dim", &self.dim)
            .field("regimes", &self.regimes())
            .field("boundary", &self.boundary)
            .field("notes", &self.notes)
            .finish_non_exhaustive()
    }
}

impl SdeModel {
    pub fn new(
        dim: usize,
        drift: DriftSpec,
        diffusion: DiffusionSpec,
        switching: SwitchingSpec,
        boundary: Boundary,
    ) -> Result<Self, SimError> {
        let invalid = |m: String| Err(SimError::InvalidConfig(m));
        let n = switching.regimes();
        if dim == 0 {
            return invalid("dimension must be positive".into());
        }
        if boundary == Boundary::ReflectAtZero && dim != 1 {
            return invalid("reflection at zero needs a one-dimensional state".into());
        }
        let coeffs = match &drift {
            DriftSpec::Power { b, delta } => {
                if !(delta.is_finite() && *delta <= 1.0) {
                    return invalid(format!("power drift exponent must be at most 1, got {delta}"));
                }
                Some(b)
            }
            DriftSpec::Linear { b } => Some(b),
            DriftSpec::Custom(_) => None,
        };
        if let Some(b) = coeffs {
            if b.len() != n || b.iter().any(|v| !v.is_finite()) {
                return invalid(format!("drift needs {n} finite coefficients"));
            }
        }
        if let DiffusionSpec::Scalar(s) = &diffusion {
            if s.len() != n || s.iter().any(|v| !v.is_finite()) {
                return invalid(format!("diffusion needs {n} finite coefficients"));
            }
        }
        if let SwitchingSpec::StateDependent { rates, max_exit } = &switching {
            if !(max_exit.is_finite() && *max_exit >= 0.0) {
                return invalid("max_exit must be finite and nonnegative".into());
            }
            if rates.dim() != dim {
                return invalid(format!("rates are defined on R^{}, model on R^{dim}", rates.dim()));
            }
        }
        Ok(SdeModel { dim, drift, diffusion, switching, boundary, notes: Vec::new() })
    }

    /// Attaches a caveat that is copied into every report.
    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn regimes(&self) -> usize {
        self.switching.regimes()
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn switching(&self) -> &SwitchingSpec {
        &self.switching
    }

    fn drift_at(&self, x: &[f64], i: usize, dt: f64) -> Vec<f64> {
        match &self.drift {
            DriftSpec::Linear { b } => x.iter().map(|v| b[i] * v).collect(),
            DriftSpec::Power { b, delta } => {
                let r = norm(x);
                if r == 0.0 {
                    return vec![0.0; x.len()];
                }
                let rr = if *delta < 0.0 { r.max(1e-3f64.max(dt.sqrt())) } else { r };
                let scale = b[i] * rr.powf(*delta) / r;
                x.iter().map(|v| scale * v).collect()
            }
            DriftSpec::Custom(f) => f(x, i),
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn check_dt(model: &SdeModel, dt: f64) -> Result<(), SimError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimError::InvalidConfig(format!("dt must be positive, got {dt}")));
    }
    let p = model.switching.max_exit() * dt;
    if p > MAX_SWITCH_PROB {
        return Err(SimError::StepTooLarge(p));
    }
    Ok(())
}

/// One Euler–Maruyama step followed by a thinned regime switch with
/// probability `q_ij(x) dt`, both evaluated at the pre-step state.
pub fn step<R: Rng + ?Sized>(model: &SdeModel, x: &mut [f64], i: &mut usize, dt: f64, rng: &mut R) -> Result<(), SimError> {
    let d = model.dim;
    let rates: Vec<(usize, f64)> =
        (0..model.regimes()).filter(|&j| j != *i).map(|j| (j, model.switching.rate(x, *i, j))).collect();
    let exit: f64 = rates.iter().map(|(_, r)| r).sum();
    if exit * dt > MAX_SWITCH_PROB {
        return Err(SimError::StepTooLarge(exit * dt));
    }
    let drift = model.drift_at(x, *i, dt);
    let sq = dt.sqrt();
    let noise: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal) * sq).collect();
    match &model.diffusion {
        DiffusionSpec::Scalar(s) => {
            for k in 0..d {
                x[k] += drift[k] * dt + s[*i] * noise[k];
            }
        }
        DiffusionSpec::Custom(f) => {
            let sigma = f(x, *i);
            let inc: Vec<f64> = (0..d).map(|k| (0..d).map(|l| sigma[(k, l)] * noise[l]).sum()).collect();
            for k in 0..d {
                x[k] += drift[k] * dt + inc[k];
            }
        }
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, r) in rates {
        acc += r * dt;
        if u < acc {
            *i = j;
            break;
        }
    }
    if model.boundary == Boundary::ReflectAtZero {
        x[0] = x[0].abs();
    }
    Ok(())
}

/// Ensemble settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub x0: Vec<f64>,
    pub i0: usize,
    /// A path returns when `|x| <= r0`.
    pub r0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub trials: usize,
    pub seed: u64,
    /// A path escapes when `|x| >= escape_radius`.
    pub escape_radius: Option<f64>,
    /// Caps worker threads; `None` uses the global pool.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl EnsembleConfig {
    fn validate(&self, model: &SdeModel) -> Result<(), SimError> {
        let invalid = |m: String| Err(SimError::InvalidConfig(m));
        if self.x0.len() != model.dim || self.x0.iter().any(|v| !v.is_finite()) {
            return invalid(format!("x0 must be a finite vector of length {}", model.dim));
        }
        if self.i0 >= model.regimes() {
            return invalid(format!("initial regime {} out of range", self.i0));
        }
        if !(self.r0 >= 0.0 && self.r0.is_finite()) || norm(&self.x0) <= self.r0 {
            return invalid("need |x0| > r0 >= 0".into());
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return invalid("horizon must be positive".into());
        }
        if self.trials == 0 {
            return invalid("trials must be positive".into());
        }
        if let Some(r) = self.escape_radius {
            if !(r > norm(&self.x0)) {
                return invalid("escape radius must exceed |x0|".into());
            }
        }
        if self.threads == Some(0) {
            return invalid("threads must be positive".into());
        }
        if model.boundary == Boundary::ReflectAtZero && self.x0[0] < 0.0 {
            return invalid("half-line models start at x0 >= 0".into());
        }
        check_dt(model, self.dt)
    }

    fn steps(&self) -> usize {
        (self.horizon / self.dt).ceil() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PathOutcome {
    Returned { time: f64 },
    Escaped { time: f64, radius: f64 },
    Censored { radius: f64 },
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

fn run_path(model: &SdeModel, cfg: &EnsembleConfig, path: usize) -> Result<PathOutcome, SimError> {
    let mut rng = path_rng(cfg.seed, path);
    let mut x = cfg.x0.clone();
    let mut i = cfg.i0;
    for k in 1..=cfg.steps() {
        step(model, &mut x, &mut i, cfg.dt, &mut rng)?;
        let r = norm(&x);
        if !r.is_finite() {
            return Err(SimError::NonFinite { path });
        }
        let t = k as f64 * cfg.dt;
        if r <= cfg.r0 {
            return Ok(PathOutcome::Returned { time: t });
        }
        if cfg.escape_radius.is_some_and(|e| r >= e) {
            return Ok(PathOutcome::Escaped { time: t, radius: r });
        }
    }
    Ok(PathOutcome::Censored { radius: norm(&x) })
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, SimError> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| SimError::InvalidConfig(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Aggregate of an ensemble run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub trials: usize,
    pub returned: usize,
    /// Fraction of paths with `|x| <= r0` before the horizon.
    pub return_fraction: f64,
    /// 95% normal-approximation half-width; reported for at least 100 trials.
    pub return_ci: Option<f64>,
    /// Mean return time among returners.
    pub mean_hitting_time: Option<f64>,
    pub escaped: usize,
    pub escape_fraction: Option<f64>,
    pub escape_ci: Option<f64>,
    /// Paths that neither returned nor escaped.
    pub censored: usize,
    /// Mean of `ln(|x_end| / |x0|) / t_end` over non-returning paths.
    pub growth_exponent: Option<f64>,
    pub config: EnsembleConfig,
    pub notes: Vec<String>,
}

fn ci(p: f64, n: usize) -> Option<f64> {
    (n >= 100).then(|| 1.96 * (p * (1.0 - p) / n as f64).sqrt())
}

/// Runs `trials` independent paths; path `k` draws from stream `k` of the
/// seed, so the report is identical for any thread count.
pub fn run_ensemble(model: &SdeModel, cfg: &EnsembleConfig) -> Result<SimulationReport, SimError> {
    cfg.validate(model)?;
    let outcomes: Vec<Result<PathOutcome, SimError>> =
        with_pool(cfg.threads, || (0..cfg.trials).into_par_iter().map(|p| run_path(model, cfg, p)).collect())?;
    let n = cfg.trials;
    let r_start = norm(&cfg.x0);
    let (mut returned, mut escaped) = (0usize, 0usize);
    let mut hit_sum = 0.0;
    let (mut growth_sum, mut growth_n) = (0.0, 0usize);
    for o in outcomes {
        match o? {
            PathOutcome::Returned { time } => {
                returned += 1;
                hit_sum += time;
            }
            PathOutcome::Escaped { time, radius } => {
                escaped += 1;
                growth_sum += (radius / r_start).ln() / time;
                growth_n += 1;
            }
            PathOutcome::Censored { radius } => {
                if radius > 0.0 {
                    growth_sum += (radius / r_start).ln() / cfg.horizon;
                    growth_n += 1;
                }
            }
        }
    }
    let return_fraction = returned as f64 / n as f64;
    let escape_fraction = cfg.escape_radius.map(|_| escaped as f64 / n as f64);
    let mut notes = model.notes.clone();
    notes.push("finite-horizon Monte Carlo corroborates, it does not prove, recurrence or transience".into());
    Ok(SimulationReport {
        trials: n,
        returned,
        return_fraction,
        return_ci: ci(return_fraction, n),
        mean_hitting_time: (returned > 0).then(|| hit_sum / returned as f64),
        escaped,
        escape_fraction,
        escape_ci: escape_fraction.and_then(|p| ci(p, n)),
        censored: n - returned - escaped,
        growth_exponent: (growth_n > 0).then(|| growth_sum / growth_n as f64),
        config: cfg.clone(),
        notes,
    })
}

/// States at time `horizon` of `samples` unstopped paths.
pub fn terminal_samples(
    model: &SdeModel,
    x0: &[f64],
    i0: usize,
    horizon: f64,
    dt: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<(Vec<f64>, usize)>, SimError> {
    check_dt(model, dt)?;
    if x0.len() != model.dim || i0 >= model.regimes() {
        return Err(SimError::InvalidConfig("initial state does not match the model".into()));
    }
    let steps = (horizon / dt).ceil() as usize;
    (0..samples)
        .into_par_iter()
        .map(|p| {
            let mut rng = path_rng(seed, p);
            let mut x = x0.to_vec();
            let mut i = i0;
            for _ in 0..steps {
                step(model, &mut x, &mut i, dt, &mut rng)?;
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(SimError::NonFinite { path: p });
            }
            Ok((x, i))
        })
        .collect()
}

/// Time fractions spent in each regime by the discretised switching along one path.
pub fn occupation_fractions(model: &SdeModel, x0: &[f64], i0: usize, horizon: f64, dt: f64, seed: u64) -> Result<Vec<f64>, SimError> {
    check_dt(model, dt)?;
    let mut rng = path_rng(seed, 0);
    let mut x = x0.to_vec();
    let mut i = i0;
    let steps = (horizon / dt).ceil() as usize;
    let mut counts = vec![0usize; model.regimes()];
    for _ in 0..steps {
        counts[i] += 1;
        step(model, &mut x, &mut i, dt, &mut rng)?;
    }
    Ok(counts.iter().map(|c| *c as f64 / steps as f64).collect())
}

/// Exact-clock occupation fractions of a constant-rate chain, a cross-check
/// for the thinned switching.
pub fn jump_chain_occupation(q: &QMatrix, i0: usize, horizon: f64, seed: u64) -> Vec<f64> {
    let mut rng = path_rng(seed, 0);
    let n = q.n();
    let mut time = vec![0.0; n];
    let (mut t, mut i) = (0.0, i0);
    while t < horizon {
        let exit = q.exit_rate(i);
        let hold = if exit > 0.0 { rng.sample::<f64, _>(Exp1) / exit } else { f64::INFINITY };
        let stay = hold.min(horizon - t);
        time[i] += stay;
        t += stay;
        if t >= horizon {
            break;
        }
        let target = rng.random::<f64>() * exit;
        let mut acc = 0.0;
        for j in (0..n).filter(|&j| j != i) {
            acc += q.rate(i, j);
            if target < acc {
                i = j;
                break;
            }
        }
    }
    time.iter().map(|s| s / horizon).collect()
}

/// Birth–death generator on `{1, …, k}` with the upward rate out of `k` removed.
pub fn truncate_chain(chain: &TailHomogeneousChain, k: usize) -> Result<QMatrix, SimError> {
    if k < 2 {
        return Err(SimError::InvalidConfig(format!("truncation level must be at least 2, got {k}")));
    }
    let mut off = DMatrix::zeros(k, k);
    for j in 1..=k {
        if j < k {
            off[(j - 1, j)] = chain.up_rate(j);
        }
        if j > 1 {
            off[(j - 1, j - 2)] = chain.down_rate(j);
        }
    }
    Ok(QMatrix::from_off_diagonal(&off)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::invariant_measure;

    fn q2() -> QMatrix {
        QMatrix::from_rows(&[vec![-1.0, 1.0], vec![2.0, -2.0]]).unwrap()
    }

    fn ou(b: Vec<f64>, sigma: Vec<f64>, q: QMatrix, boundary: Boundary) -> SdeModel {
        SdeModel::new(1, DriftSpec::Linear { b }, DiffusionSpec::Scalar(sigma), SwitchingSpec::Constant(q), boundary)
            .unwrap()
    }

    #[test]
    fn frozen_state_only_switches() {
        let m = ou(vec![0.0, 0.0], vec![0.0, 0.0], q2(), Boundary::None);
        let mut rng = path_rng(1, 0);
        let (mut x, mut i) = (vec![3.0], 0);
        let mut switches = 0;
        for _ in 0..10_000 {
            let before = i;
            step(&m, &mut x, &mut i, 0.01, &mut rng).unwrap();
            switches += usize::from(before != i);
        }
        assert_eq!(x, vec![3.0]);
        assert!(switches > 0);
    }

    #[test]
    fn step_size_guard() {
        let m = ou(vec![-1.0, -1.0], vec![1.0, 1.0], q2(), Boundary::None);
        let cfg = EnsembleConfig {
            x0: vec![2.0],
            i0: 0,
            r0: 1.0,
            horizon: 1.0,
            dt: 0.1,
            trials: 10,
            seed: 0,
            escape_radius: None,
            threads: None,
        };
        assert!(matches!(run_ensemble(&m, &cfg), Err(SimError::StepTooLarge(_))));
    }

    #[test]
    fn truncation_by_hand() {
        let q = truncate_chain(&TailHomogeneousChain::constant(1.0, 2.0).unwrap(), 3).unwrap();
        assert_eq!(q.rows(), vec![vec![-1.0, 1.0, 0.0], vec![2.0, -3.0, 1.0], vec![0.0, 2.0, -2.0]]);
    }

    #[test]
    fn truncation_is_geometric() {
        let q = truncate_chain(&TailHomogeneousChain::constant(1.0, 2.0).unwrap(), 30).unwrap();
        let mu = invariant_measure(&q).unwrap();
        let p = mu.as_slice();
        for k in 1..20 {
            assert!((p[k] / p[k - 1] - 0.5).abs() < 1e-8, "k={k}");
        }
        assert!(p[10..].iter().sum::<f64>() < 1e-3);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let m = ou(vec![-0.5, 0.2], vec![1.0, 1.0], q2(), Boundary::ReflectAtZero);
        let mut cfg = EnsembleConfig {
            x0: vec![3.0],
            i0: 0,
            r0: 1.0,
            horizon: 5.0,
            dt: 1e-3,
            trials: 64,
            seed: 42,
            escape_radius: Some(20.0),
            threads: Some(1),
        };
        let a = run_ensemble(&m, &cfg).unwrap();
        cfg.threads = Some(4);
        let b = run_ensemble(&m, &cfg).unwrap();
        assert_eq!(a.returned, b.returned);
        assert_eq!(a.mean_hitting_time.map(f64::to_bits), b.mean_hitting_time.map(f64::to_bits));
        assert_eq!(a.growth_exponent.map(f64::to_bits), b.growth_exponent.map(f64::to_bits));
        assert_eq!(a.returned + a.escaped + a.censored, 64);
    }

    #[test]
    fn occupation_matches_invariant_measure() {
        let m = ou(vec![0.0, 0.0], vec![0.0, 0.0], q2(), Boundary::None);
        let occ = occupation_fractions(&m, &[0.0], 0, 2000.0, 1e-3, 7).unwrap();
        let exact = jump_chain_occupation(&q2(), 0, 2000.0, 7);
        for (o, e) in [(occ[0], 2.0 / 3.0), (exact[0], 2.0 / 3.0)] {
            assert!((o - e).abs() < 0.02, "{o}");
        }
    }

    #[test]
    fn power_drift_floor_keeps_paths_finite() {
        let m = SdeModel::new(
            1,
            DriftSpec::Power { b: vec![-1.0], delta: -1.0 },
            DiffusionSpec::Scalar(vec![1.0]),
            SwitchingSpec::Constant(QMatrix::from_rows(&[vec![0.0]]).unwrap()),
            Boundary::ReflectAtZero,
        )
        .unwrap();
        let s = terminal_samples(&m, &[0.5], 0, 1.0, 1e-3, 50, 3).unwrap();
        assert!(s.iter().all(|(x, _)| x[0].is_finite() && x[0] >= 0.0));
    }

    #[test]
    fn invalid_configs() {
        let m = ou(vec![-1.0, -1.0], vec![1.0, 1.0], q2(), Boundary::None);
        let base = EnsembleConfig {
            x0: vec![2.0],
            i0: 0,
            r0: 1.0,
            horizon: 1.0,
            dt: 1e-3,
            trials: 0,
            seed: 0,
            escape_radius: None,
            threads: None,
        };
        assert!(matches!(run_ensemble(&m, &base), Err(SimError::InvalidConfig(_))));
        let c = EnsembleConfig { trials: 5, r0: 3.0, ..base.clone() };
        assert!(matches!(run_ensemble(&m, &c), Err(SimError::InvalidConfig(_))));
        assert!(SdeModel::new(
            2,
            DriftSpec::Linear { b: vec![1.0] },
            DiffusionSpec::Scalar(vec![1.0]),
            SwitchingSpec::Constant(QMatrix::from_rows(&[vec![0.0]]).unwrap()),
            Boundary::ReflectAtZero
        )
        .is_err());
    }
}
