//! Generators of the switching component.
//!
//! Covers validation of finite Q-matrices, invariant probability measures,
//! the auxiliary "bounding" generator of a state-dependent chain (sup of the
//! downward rates, inf of the upward rates), and coarsening of a
//! tail-homogeneous birth–death chain on `{1, 2, ...}` into finitely many
//! classes.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::MarkovError;

/// Relative tolerance on row sums of a generator.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Rates below this fraction of the largest entry count as zero for irreducibility.
pub const ZERO_RATE_TOL: f64 = 1e-14;

/// A validated conservative, irreducible generator on a finite state space.
#[derive(Debug, Clone, PartialEq)]
pub struct QMatrix {
    m: DMatrix<f64>,
}

impl QMatrix {
    pub fn new(raw: DMatrix<f64>) -> Result<Self, MarkovError> {
        validate_qmatrix(raw)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MarkovError> {
        validate_qmatrix(matrix_from_rows(rows)?)
    }

    /// Builds a generator from off-diagonal rates, filling the diagonal so rows sum to zero.
    pub fn from_off_diagonal(rates: &DMatrix<f64>) -> Result<Self, MarkovError> {
        let mut m = rates.clone();
        conservative_diagonal(&mut m);
        validate_qmatrix(m)
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    /// Total jump rate `q_i = -q_ii`.
    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.m[(i, i)]
    }

    pub fn max_abs(&self) -> f64 {
        self.m.amax()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|i| self.m.row(i).iter().copied().collect())
            .collect()
    }

    /// Relabels states: new state `k` is old state `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> QMatrix {
        let n = self.n();
        let m = DMatrix::from_fn(n, n, |i, j| self.m[(perm[i], perm[j])]);
        QMatrix { m }
    }
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, MarkovError> {
    let n = rows.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(MarkovError::Shape { rows: n, cols: bad.len() });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn conservative_diagonal(m: &mut DMatrix<f64>) {
    for i in 0..m.nrows() {
        let off: f64 = (0..m.ncols()).filter(|&j| j != i).map(|j| m[(i, j)]).sum();
        m[(i, i)] = -off;
    }
}

/// Checks the standing assumptions on a generator: nonnegative off-diagonal
/// rates, zero row sums and strong connectivity of the positive-rate graph.
pub fn validate_qmatrix(raw: DMatrix<f64>) -> Result<QMatrix, MarkovError> {
    let (rows, cols) = raw.shape();
    if rows == 0 || rows != cols {
        return Err(MarkovError::Shape { rows, cols });
    }
    for i in 0..rows {
        for j in 0..cols {
            if !raw[(i, j)].is_finite() {
                return Err(MarkovError::NonFinite { row: i, col: j });
            }
        }
    }
    let scale = raw.amax();
    for i in 0..rows {
        for j in 0..cols {
            if i != j && raw[(i, j)] < 0.0 {
                return Err(MarkovError::NegativeOffDiagonal { row: i, col: j, value: raw[(i, j)] });
            }
        }
        let sum: f64 = raw.row(i).sum();
        if sum.abs() > ROW_SUM_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(MarkovError::RowSumNonzero { row: i, sum });
        }
    }
    if let Some(unreachable) = first_unreachable(&raw, ZERO_RATE_TOL * scale) {
        return Err(MarkovError::Reducible { unreachable });
    }
    Ok(QMatrix { m: raw })
}

/// Returns a state not strongly connected to state 0, if any.
fn first_unreachable(m: &DMatrix<f64>, threshold: f64) -> Option<usize> {
    let n = m.nrows();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let rate = if forward { m[(i, j)] } else { m[(j, i)] };
                if i != j && !seen[j] && rate > threshold {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    };
    let fwd = reach(true);
    let bwd = reach(false);
    (0..n).find(|&k| !(fwd[k] && bwd[k]))
}

/// Invariant probability vector `mu` of a generator (`mu Q = 0`, `sum mu = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantMeasure {
    mu: DVector<f64>,
}

impl InvariantMeasure {
    pub fn probabilities(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn as_slice(&self) -> &[f64] {
        self.mu.as_slice()
    }

    /// `sum_i mu_i v_i`.
    pub fn weighted_sum(&self, v: &[f64]) -> f64 {
        self.mu.iter().zip(v).map(|(m, x)| m * x).sum()
    }

    /// `||mu Q||_inf`.
    pub fn residual(&self, q: &QMatrix) -> f64 {
        (q.matrix().transpose() * &self.mu).amax()
    }
}

/// Solves the balance equations with the last one replaced by normalization.
pub fn invariant_measure(q: &QMatrix) -> Result<InvariantMeasure, MarkovError> {
    let n = q.n();
    let mut a = q.matrix().transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let lu = a.clone().lu();
    let mut mu = lu.solve(&rhs).ok_or(MarkovError::SingularSolve)?;
    // one step of iterative refinement
    let r = &rhs - &a * &mu;
    if let Some(d) = lu.solve(&r) {
        mu += d;
    }
    if mu.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(MarkovError::SingularSolve);
    }
    let total = mu.sum();
    mu /= total;
    Ok(InvariantMeasure { mu })
}

/// Closed-form bounds for one state-dependent rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBounds {
    pub inf: f64,
    pub sup: f64,
}

pub type RateFn = Arc<dyn Fn(&[f64], usize, usize) -> f64 + Send + Sync>;

/// Bounded, continuous state-dependent switching rates `q_ij(x)`.
#[derive(Clone)]
pub struct StateDependentRates {
    n: usize,
    dim: usize,
    rate_fn: RateFn,
    hints: Vec<Option<RateBounds>>,
}

impl fmt::Debug for StateDependentRates {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StateDependentRates")
            .field("n", &self.n)
            .field("dim", &self.dim)
            .field("hints", &self.hints)
            .finish_non_exhaustive()
    }
}

impl StateDependentRates {
    /// `rate_fn(x, i, j)` is only consulted for `i != j`.
    pub fn new(
        n: usize,
        dim: usize,
        rate_fn: impl Fn(&[f64], usize, usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        StateDependentRates { n, dim, rate_fn: Arc::new(rate_fn), hints: vec![None; n * n] }
    }

    /// Constant rates viewed as a state-dependent family.
    pub fn constant(q: &QMatrix) -> Self {
        let m = q.matrix().clone();
        StateDependentRates::new(q.n(), 1, move |_, i, j| m[(i, j)])
    }

    pub fn with_hint(mut self, i: usize, j: usize, bounds: RateBounds) -> Self {
        self.hints[i * self.n + j] = Some(bounds);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hint(&self, i: usize, j: usize) -> Option<RateBounds> {
        self.hints[i * self.n + j]
    }

    pub fn rate(&self, x: &[f64], i: usize, j: usize) -> f64 {
        (self.rate_fn)(x, i, j)
    }

    pub fn exit_rate(&self, x: &[f64], i: usize) -> f64 {
        (0..self.n).filter(|&j| j != i).map(|j| self.rate(x, i, j)).sum()
    }

    /// The generator `Q_x` at a fixed point.
    pub fn generator_at(&self, x: &[f64]) -> Result<QMatrix, MarkovError> {
        let off = DMatrix::from_fn(self.n, self.n, |i, j| if i == j { 0.0 } else { self.rate(x, i, j) });
        QMatrix::from_off_diagonal(&off)
    }
}

/// Radial scan domain for estimating `sup_x` / `inf_x` of a rate.
///
/// Points are `r * u` for every direction `u` and every radius `r` on a
/// geometric grid in `[r_min, r_max]`, plus the origin when requested.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanDomain {
    pub directions: Vec<Vec<f64>>,
    pub r_min: f64,
    pub r_max: f64,
    pub points_per_decade: usize,
    pub include_origin: bool,
    pub rate_cap: f64,
    pub max_extensions: usize,
}

impl ScanDomain {
    /// `[0, inf)` in one dimension.
    pub fn half_line() -> Self {
        ScanDomain::rays(vec![vec![1.0]])
    }

    /// The whole real line.
    pub fn real_line() -> Self {
        ScanDomain::rays(vec![vec![1.0], vec![-1.0]])
    }

    pub fn rays(directions: Vec<Vec<f64>>) -> Self {
        ScanDomain {
            directions,
            r_min: 1e-3,
            r_max: 1e3,
            points_per_decade: 40,
            include_origin: true,
            rate_cap: 1e12,
            max_extensions: 14,
        }
    }

    fn points(&self, r_max: f64, per_decade: usize) -> Vec<Vec<f64>> {
        let mut radii = Vec::new();
        if self.include_origin {
            radii.push(0.0);
        }
        if self.r_min > 0.0 && r_max >= self.r_min {
            let decades = (r_max / self.r_min).log10().max(0.0);
            let count = ((decades * per_decade as f64).ceil() as usize).max(1);
            for k in 0..=count {
                radii.push(self.r_min * (r_max / self.r_min).powf(k as f64 / count as f64));
            }
        }
        let mut out = Vec::with_capacity(radii.len() * self.directions.len());
        for u in &self.directions {
            for &r in &radii {
                out.push(u.iter().map(|c| c * r).collect());
            }
        }
        out
    }
}

/// Builds the auxiliary generator: `sup_x q_ik(x)` below the diagonal,
/// `inf_x q_ik(x)` above it, conservative diagonal.
///
/// Closed-form hints take precedence; otherwise the extremum is scanned on
/// `domain`, extending the radius a decade at a time (and doubling the
/// density) until it moves by at most `1e-6` relatively.
pub fn bound_rates(rates: &StateDependentRates, domain: &ScanDomain) -> Result<QMatrix, MarkovError> {
    let n = rates.n();
    let mut off = DMatrix::zeros(n, n);
    for i in 0..n {
        for k in 0..n {
            if i == k {
                continue;
            }
            let take_sup = k < i;
            off[(i, k)] = match rates.hint(i, k) {
                Some(h) => {
                    if take_sup {
                        h.sup
                    } else {
                        h.inf
                    }
                }
                None => scan_extremum(rates, domain, i, k, take_sup)?,
            };
        }
    }
    QMatrix::from_off_diagonal(&off)
}

fn scan_extremum(
    rates: &StateDependentRates,
    domain: &ScanDomain,
    i: usize,
    k: usize,
    take_sup: bool,
) -> Result<f64, MarkovError> {
    if domain.directions.is_empty() || domain.points_per_decade == 0 {
        return Err(MarkovError::EmptyGrid);
    }
    let eval = |r_max: f64, density: usize| -> Result<f64, MarkovError> {
        let pts = domain.points(r_max, density);
        if pts.is_empty() {
            return Err(MarkovError::EmptyGrid);
        }
        let mut best = if take_sup { f64::NEG_INFINITY } else { f64::INFINITY };
        for x in &pts {
            let v = rates.rate(x, i, k);
            if !v.is_finite() || v.abs() > domain.rate_cap {
                return Err(MarkovError::UnboundedRate { row: i, col: k, cap: domain.rate_cap });
            }
            best = if take_sup { best.max(v) } else { best.min(v) };
        }
        Ok(best)
    };
    let mut r_max = domain.r_max;
    let mut density = domain.points_per_decade;
    let mut prev = eval(r_max, density)?;
    for _ in 0..domain.max_extensions {
        r_max *= 10.0;
        density = (density * 2).min(640);
        let next = eval(r_max, density)?;
        if (next - prev).abs() <= 1e-6 * next.abs().max(prev.abs()).max(1e-300) {
            return Ok(next);
        }
        prev = next;
    }
    Err(MarkovError::ScanNotStabilized { row: i, col: k, radius: r_max })
}

/// Birth–death chain on `{1, 2, ...}` whose rates are constant from some index on.
///
/// `up[k]` is the rate `j -> j+1` for `j = k+1`; `down[k]` is the rate
/// `j -> j-1` for `j = k+2`. The last entry of each list repeats forever.
#[derive(Debug, Clone, PartialEq)]
pub struct TailHomogeneousChain {
    up: Vec<f64>,
    down: Vec<f64>,
}

impl TailHomogeneousChain {
    pub fn new(up: Vec<f64>, down: Vec<f64>) -> Result<Self, MarkovError> {
        if up.is_empty() || down.is_empty() {
            return Err(MarkovError::InvalidChain("rate lists must be non-empty".into()));
        }
        if up.iter().chain(&down).any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(MarkovError::InvalidChain("birth and death rates must be positive".into()));
        }
        Ok(TailHomogeneousChain { up, down })
    }

    /// Constant rates: `b` up, `a` down.
    pub fn constant(up: f64, down: f64) -> Result<Self, MarkovError> {
        TailHomogeneousChain::new(vec![up], vec![down])
    }

    /// Rate `j -> j+1` (states are 1-based).
    pub fn up_rate(&self, j: usize) -> f64 {
        assert!(j >= 1);
        self.up[(j - 1).min(self.up.len() - 1)]
    }

    /// Rate `j -> j-1`; zero at `j = 1`.
    pub fn down_rate(&self, j: usize) -> f64 {
        assert!(j >= 1);
        if j == 1 {
            0.0
        } else {
            self.down[(j - 2).min(self.down.len() - 1)]
        }
    }

    /// First index from which both rates are constant.
    pub fn tail_start(&self) -> usize {
        self.up.len().max(self.down.len() + 1)
    }

    pub fn tail_up(&self) -> f64 {
        *self.up.last().unwrap()
    }

    pub fn tail_down(&self) -> f64 {
        *self.down.last().unwrap()
    }

    /// Recurrent iff the tail death rate is at least the tail birth rate.
    pub fn is_recurrent(&self) -> bool {
        self.tail_down() >= self.tail_up()
    }

    pub fn up_rates(&self) -> &[f64] {
        &self.up
    }

    pub fn down_rates(&self) -> &[f64] {
        &self.down
    }

    /// Total rate from `r` into a set of states.
    fn flow_into(&self, r: usize, target: impl Fn(usize) -> bool) -> f64 {
        let mut total = 0.0;
        if target(r + 1) {
            total += self.up_rate(r);
        }
        if r >= 2 && target(r - 1) {
            total += self.down_rate(r);
        }
        total
    }
}

/// A sequence `beta_j`, `j >= 1`: explicit head values followed by the
/// monotone tail `limit + coeff * j^(-power)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaSequence {
    pub head: Vec<f64>,
    pub limit: f64,
    pub coeff: f64,
    pub power: f64,
}

impl BetaSequence {
    pub fn new(head: Vec<f64>, limit: f64, coeff: f64, power: f64) -> Result<Self, MarkovError> {
        let s = BetaSequence { head, limit, coeff, power };
        s.validate()?;
        Ok(s)
    }

    /// `limit + coeff / j`.
    pub fn harmonic(limit: f64, coeff: f64) -> Self {
        BetaSequence { head: Vec::new(), limit, coeff, power: 1.0 }
    }

    pub fn constant(value: f64) -> Self {
        BetaSequence { head: Vec::new(), limit: value, coeff: 0.0, power: 1.0 }
    }

    pub fn validate(&self) -> Result<(), MarkovError> {
        let finite = self.head.iter().all(|v| v.is_finite())
            && self.limit.is_finite()
            && self.coeff.is_finite()
            && self.power.is_finite();
        if !finite || (self.coeff != 0.0 && self.power <= 0.0) {
            return Err(MarkovError::UnboundedBeta);
        }
        Ok(())
    }

    pub fn value(&self, j: usize) -> f64 {
        assert!(j >= 1);
        if j <= self.head.len() {
            self.head[j - 1]
        } else {
            self.limit + self.coeff * (j as f64).powf(-self.power)
        }
    }

    /// `sup_{j >= from} beta_j`.
    pub fn sup_from(&self, from: usize) -> f64 {
        let first_tail = from.max(self.head.len() + 1);
        let tail_sup = if self.coeff > 0.0 { self.value(first_tail) } else { self.limit };
        (from..=self.head.len()).map(|j| self.head[j - 1]).fold(tail_sup, f64::max)
    }

    /// `K = sup_j beta_j`.
    pub fn sup(&self) -> f64 {
        self.sup_from(1)
    }

    /// `-beta_j + shift` as a sequence of the same form.
    pub fn negated_plus(&self, shift: f64) -> Self {
        BetaSequence {
            head: self.head.iter().map(|v| shift - v).collect(),
            limit: shift - self.limit,
            coeff: -self.coeff,
            power: self.power,
        }
    }
}

/// One class of a partition of `{1, 2, ...}`: finitely many listed states,
/// plus every `j >= tail_from` when present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegimeClass {
    pub members: BTreeSet<usize>,
    pub tail_from: Option<usize>,
}

impl RegimeClass {
    pub fn finite(members: impl IntoIterator<Item = usize>) -> Self {
        RegimeClass { members: members.into_iter().collect(), tail_from: None }
    }

    pub fn tail(from: usize) -> Self {
        RegimeClass { members: BTreeSet::new(), tail_from: Some(from) }
    }

    pub fn contains(&self, j: usize) -> bool {
        self.members.contains(&j) || self.tail_from.is_some_and(|t| j >= t)
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty() && self.tail_from.is_none()
    }
}

/// Finite partition `F_1, ..., F_m` of the countable regime space.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    classes: Vec<RegimeClass>,
    cutpoints: Option<Vec<f64>>,
}

impl Partition {
    /// Explicit classes; they must be nonempty, disjoint and exhaust `{1, 2, ...}`.
    pub fn from_classes(classes: Vec<RegimeClass>) -> Result<Self, MarkovError> {
        if classes.is_empty() {
            return Err(MarkovError::InvalidPartition("no classes".into()));
        }
        if let Some(index) = classes.iter().position(RegimeClass::is_empty) {
            return Err(MarkovError::EmptyClass { index });
        }
        if classes.iter().any(|c| c.members.contains(&0) || c.tail_from == Some(0)) {
            return Err(MarkovError::InvalidPartition("states are numbered from 1".into()));
        }
        let tails: Vec<usize> = classes.iter().filter_map(|c| c.tail_from).collect();
        if tails.len() != 1 {
            return Err(MarkovError::InvalidPartition(format!(
                "exactly one class must contain the tail, found {}",
                tails.len()
            )));
        }
        let horizon = classes
            .iter()
            .flat_map(|c| c.members.iter().copied().chain(c.tail_from))
            .max()
            .unwrap_or(1)
            + 1;
        for j in 1..=horizon {
            let owners = classes.iter().filter(|c| c.contains(j)).count();
            if owners != 1 {
                return Err(MarkovError::InvalidPartition(format!(
                    "state {j} belongs to {owners} classes"
                )));
            }
        }
        Ok(Partition { classes, cutpoints: None })
    }

    /// `F_i = { j : beta_j in (k_{i-1}, k_i] }` with `k_0 = -inf` and `k_m = sup beta`.
    /// `cuts` lists the interior points `k_1 < ... < k_{m-1}`.
    pub fn from_cutpoints(cuts: &[f64], beta: &BetaSequence) -> Result<Self, MarkovError> {
        beta.validate()?;
        let k_bar = beta.sup();
        if cuts.windows(2).any(|w| w[0] >= w[1]) || cuts.iter().any(|c| !c.is_finite()) {
            return Err(MarkovError::InvalidPartition("cutpoints must be finite and increasing".into()));
        }
        if cuts.last().is_some_and(|&c| c >= k_bar) {
            return Err(MarkovError::InvalidPartition(format!(
                "cutpoints must lie below sup beta = {k_bar}"
            )));
        }
        let m = cuts.len() + 1;
        let upper = |i: usize| if i + 1 == m { k_bar } else { cuts[i] };
        let lower = |i: usize| if i == 0 { f64::NEG_INFINITY } else { cuts[i - 1] };
        let class_of = |v: f64| (0..m).find(|&i| v > lower(i) && v <= upper(i));

        // class that absorbs the tail, from the side the tail approaches its limit
        let tail_class = if beta.coeff > 0.0 {
            (0..m).find(|&i| beta.limit >= lower(i) && beta.limit < upper(i))
        } else {
            class_of(beta.limit)
        }
        .ok_or(MarkovError::UnboundedBeta)?;

        const SCAN_CAP: usize = 10_000_000;
        let mut tail_from = None;
        for j in beta.head.len() + 1..=SCAN_CAP {
            if class_of(beta.value(j)) == Some(tail_class) {
                tail_from = Some(j);
                break;
            }
        }
        let tail_from = tail_from.ok_or_else(|| {
            MarkovError::InvalidPartition("tail does not settle into one class".into())
        })?;

        let mut classes: Vec<RegimeClass> = (0..m).map(|_| RegimeClass::finite([])).collect();
        for j in 1..tail_from {
            let c = class_of(beta.value(j)).ok_or(MarkovError::UnboundedBeta)?;
            classes[c].members.insert(j);
        }
        classes[tail_class].tail_from = Some(tail_from);
        if let Some(index) = classes.iter().position(RegimeClass::is_empty) {
            return Err(MarkovError::EmptyClass { index });
        }
        Ok(Partition { classes, cutpoints: Some(cuts.to_vec()) })
    }

    pub fn classes(&self) -> &[RegimeClass] {
        &self.classes
    }

    pub fn cutpoints(&self) -> Option<&[f64]> {
        self.cutpoints.as_deref()
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class_of(&self, j: usize) -> usize {
        self.classes.iter().position(|c| c.contains(j)).expect("partition is exhaustive")
    }

    /// Index past which every state sits in the tail class.
    fn settled_index(&self) -> usize {
        self.classes
            .iter()
            .flat_map(|c| c.members.iter().copied().chain(c.tail_from))
            .max()
            .unwrap_or(1)
    }
}

/// How `beta^F_i` is formed for each class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassBound {
    /// `sup_{j in F_i} beta_j`: the bound the finite-partition argument needs.
    #[default]
    Supremum,
    /// Like `Supremum`, except the tail class uses the limit of the sequence.
    TailLimit,
}

/// Coarsened data `(beta^F, Q^F)` for a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseModel {
    pub beta: DVector<f64>,
    pub q: DMatrix<f64>,
    pub partition: Partition,
}

impl CoarseModel {
    pub fn m(&self) -> usize {
        self.beta.len()
    }
}

/// Collapses an infinite birth–death chain onto the classes of `partition`.
///
/// `q^F_ik` is the sup over `r in F_i` of the rate from `r` into `F_k` when
/// `k < i` and the inf when `k > i`; the diagonal makes rows sum to zero.
pub fn coarsen(
    chain: &TailHomogeneousChain,
    beta: &BetaSequence,
    partition: &Partition,
) -> Result<CoarseModel, MarkovError> {
    coarsen_with(chain, beta, partition, ClassBound::Supremum)
}

pub fn coarsen_with(
    chain: &TailHomogeneousChain,
    beta: &BetaSequence,
    partition: &Partition,
    bound: ClassBound,
) -> Result<CoarseModel, MarkovError> {
    beta.validate()?;
    let m = partition.len();
    // beyond this index both rates are constant and every neighbour is in the tail class
    let horizon = partition.settled_index().max(chain.tail_start()) + 2;

    let mut beta_f = DVector::zeros(m);
    for (i, class) in partition.classes().iter().enumerate() {
        let mut sup = f64::NEG_INFINITY;
        for &j in &class.members {
            sup = sup.max(beta.value(j));
        }
        if let Some(t) = class.tail_from {
            let tail = match bound {
                ClassBound::Supremum => beta.sup_from(t),
                ClassBound::TailLimit => beta.limit,
            };
            sup = sup.max(tail);
        }
        beta_f[i] = sup;
    }

    let mut q = DMatrix::zeros(m, m);
    for (i, class) in partition.classes().iter().enumerate() {
        let mut states: Vec<usize> = class.members.iter().copied().collect();
        if let Some(t) = class.tail_from {
            states.extend(t..=horizon.max(t));
        }
        for k in 0..m {
            if k == i {
                continue;
            }
            let target = &partition.classes()[k];
            let flows = states.iter().map(|&r| chain.flow_into(r, |s| target.contains(s)));
            q[(i, k)] = if k < i {
                flows.fold(f64::NEG_INFINITY, f64::max)
            } else {
                flows.fold(f64::INFINITY, f64::min)
            };
        }
    }
    conservative_diagonal(&mut q);
    Ok(CoarseModel { beta: beta_f, q, partition: partition.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q2() -> QMatrix {
        QMatrix::from_rows(&[vec![-1.0, 1.0], vec![2.0, -2.0]]).unwrap()
    }

    #[test]
    fn validates_smallest_irreducible_chain() {
        assert_eq!(q2().n(), 2);
    }

    #[test]
    fn absorbing_state_is_reducible() {
        let err = QMatrix::from_rows(&[vec![-1.0, 1.0], vec![0.0, 0.0]]).unwrap_err();
        assert!(matches!(err, MarkovError::Reducible { .. }));
    }

    #[test]
    fn row_defect_is_rejected() {
        let err = QMatrix::from_rows(&[vec![-1.0, 0.5], vec![2.0, -2.0]]).unwrap_err();
        assert!(matches!(err, MarkovError::RowSumNonzero { row: 0, .. }));
    }

    #[test]
    fn negative_rate_is_rejected() {
        let err = QMatrix::from_rows(&[vec![1.0, -1.0], vec![2.0, -2.0]]).unwrap_err();
        assert!(matches!(err, MarkovError::NegativeOffDiagonal { row: 0, col: 1, .. }));
    }

    #[test]
    fn single_state_is_valid() {
        let q = QMatrix::from_rows(&[vec![0.0]]).unwrap();
        let mu = invariant_measure(&q).unwrap();
        assert_eq!(mu.as_slice(), &[1.0]);
    }

    #[test]
    fn two_state_measure() {
        let mu = invariant_measure(&q2()).unwrap();
        assert!((mu.as_slice()[0] - 2.0 / 3.0).abs() < 1e-14);
        assert!((mu.as_slice()[1] - 1.0 / 3.0).abs() < 1e-14);
        // detailed balance a*mu_2 = b*mu_1 with b = 1, a = 2
        let (a, b) = (2.0, 1.0);
        assert!((a * mu.as_slice()[1] - b * mu.as_slice()[0]).abs() < 1e-14);
    }

    #[test]
    fn symmetric_generator_has_uniform_measure() {
        let q = QMatrix::from_rows(&[
            vec![-3.0, 1.0, 2.0],
            vec![1.0, -1.5, 0.5],
            vec![2.0, 0.5, -2.5],
        ])
        .unwrap();
        let mu = invariant_measure(&q).unwrap();
        for p in mu.as_slice() {
            assert!((p - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn example_rates_bound_to_b_and_a() {
        let (a, b) = (2.0, 1.0);
        let rates = StateDependentRates::new(2, 1, move |x, i, _| {
            let r = x[0].abs();
            if i == 0 {
                b * (1.0 + 2.0 * r) / (1.0 + r)
            } else {
                a * (1.0 + 2.0 * r) / (2.0 * (1.0 + r))
            }
        });
        let qt = bound_rates(&rates, &ScanDomain::half_line()).unwrap();
        assert!((qt.rate(0, 1) - b).abs() < 1e-12);
        assert!((qt.rate(1, 0) - a).abs() < 1e-6 * a);

        let hinted = rates
            .with_hint(0, 1, RateBounds { inf: b, sup: 2.0 * b })
            .with_hint(1, 0, RateBounds { inf: a / 2.0, sup: a });
        let qt = bound_rates(&hinted, &ScanDomain::half_line()).unwrap();
        assert_eq!(qt.rate(0, 1), b);
        assert_eq!(qt.rate(1, 0), a);
    }

    #[test]
    fn decaying_rate_bounded_by_its_limit() {
        let rates = StateDependentRates::new(2, 1, |x, i, _| if i == 0 { 1.0 + (-x[0]).exp() } else { 1.0 });
        let qt = bound_rates(&rates, &ScanDomain::half_line()).unwrap();
        assert!((qt.rate(0, 1) - 1.0).abs() < 1e-9);
        assert_eq!(qt.rate(1, 0), 1.0);
    }

    #[test]
    fn constant_rates_bound_to_themselves() {
        let q = q2();
        let qt = bound_rates(&StateDependentRates::constant(&q), &ScanDomain::real_line()).unwrap();
        assert_eq!(qt, q);
    }

    #[test]
    fn unbounded_rate_is_detected() {
        let rates = StateDependentRates::new(2, 1, |x, _, _| 1.0 + x[0].abs());
        let err = bound_rates(&rates, &ScanDomain::half_line()).unwrap_err();
        assert!(matches!(err, MarkovError::UnboundedRate { .. }));
    }

    #[test]
    fn empty_grid_is_rejected() {
        let rates = StateDependentRates::constant(&q2());
        let err = bound_rates(&rates, &ScanDomain::rays(vec![])).unwrap_err();
        assert_eq!(err, MarkovError::EmptyGrid);
    }

    #[test]
    fn reducible_bound_is_reported() {
        // inf of the upward rate is zero, so the bounding chain cannot leave state 0
        let rates = StateDependentRates::new(2, 1, |x, i, _| if i == 0 { (-x[0]).exp() } else { 1.0 });
        let err = bound_rates(&rates, &ScanDomain::half_line()).unwrap_err();
        assert!(matches!(err, MarkovError::Reducible { .. }));
    }

    #[test]
    fn two_class_coarsening() {
        let (a, b, kappa) = (2.0, 1.0, 0.5);
        let chain = TailHomogeneousChain::constant(b, a).unwrap();
        let beta = BetaSequence::harmonic(kappa, -1.0);
        let p = Partition::from_classes(vec![RegimeClass::finite([1]), RegimeClass::tail(2)]).unwrap();
        let c = coarsen(&chain, &beta, &p).unwrap();
        assert_eq!(c.q[(0, 1)], b);
        assert_eq!(c.q[(1, 0)], a);
        assert_eq!(c.beta.as_slice(), &[kappa - 1.0, kappa]);
    }

    #[test]
    fn three_class_coarsening() {
        let (a, b, kappa) = (2.0, 1.0, 0.6);
        let chain = TailHomogeneousChain::constant(b, a).unwrap();
        let beta = BetaSequence::harmonic(kappa, -1.0);
        let p = Partition::from_classes(vec![
            RegimeClass::finite([1]),
            RegimeClass::finite([2]),
            RegimeClass::tail(3),
        ])
        .unwrap();
        let c = coarsen(&chain, &beta, &p).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[-b, b, 0.0, a, -(a + b), b, 0.0, a, -a]);
        assert_eq!(c.q, expected);
        for (got, want) in c.beta.iter().zip([kappa - 1.0, kappa - 0.5, kappa]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn single_class_has_no_transitions() {
        let chain = TailHomogeneousChain::constant(1.0, 2.0).unwrap();
        let beta = BetaSequence::harmonic(0.3, -1.0);
        let p = Partition::from_classes(vec![RegimeClass::tail(1)]).unwrap();
        let c = coarsen(&chain, &beta, &p).unwrap();
        assert_eq!(c.q, DMatrix::zeros(1, 1));
        assert_eq!(c.beta[0], 0.3);
    }

    #[test]
    fn cutpoints_reproduce_explicit_classes() {
        let beta = BetaSequence::harmonic(0.5, -1.0);
        let p = Partition::from_cutpoints(&[-0.5, 0.0], &beta).unwrap();
        let explicit = Partition::from_classes(vec![
            RegimeClass::finite([1]),
            RegimeClass::finite([2]),
            RegimeClass::tail(3),
        ])
        .unwrap();
        assert_eq!(p.classes(), explicit.classes());
    }

    #[test]
    fn empty_cut_interval_is_reported() {
        let beta = BetaSequence::harmonic(0.5, -1.0);
        // nothing in (-0.4, -0.3]
        let err = Partition::from_cutpoints(&[-0.4, -0.3], &beta).unwrap_err();
        assert_eq!(err, MarkovError::EmptyClass { index: 1 });
    }

    #[test]
    fn decreasing_tail_partition() {
        // beta_j = -0.8 + 1/j decreases to -0.8
        let beta = BetaSequence::harmonic(-0.8, 1.0);
        assert!((beta.sup() - 0.2).abs() < 1e-15);
        let p = Partition::from_cutpoints(&[-0.5], &beta).unwrap();
        // beta_j <= -0.5 iff j >= 4
        assert_eq!(p.classes()[0].tail_from, Some(4));
        assert_eq!(p.classes()[1].members, BTreeSet::from([1, 2, 3]));
    }

    #[test]
    fn overlapping_classes_are_rejected() {
        let err =
            Partition::from_classes(vec![RegimeClass::finite([1, 2]), RegimeClass::tail(2)]).unwrap_err();
        assert!(matches!(err, MarkovError::InvalidPartition(_)));
        let err = Partition::from_classes(vec![RegimeClass::finite([1]), RegimeClass::tail(3)]).unwrap_err();
        assert!(matches!(err, MarkovError::InvalidPartition(_)));
    }

    #[test]
    fn non_finite_beta_is_unbounded() {
        let beta = BetaSequence { head: vec![f64::INFINITY], limit: 0.0, coeff: 0.0, power: 1.0 };
        assert_eq!(beta.validate(), Err(MarkovError::UnboundedBeta));
    }

    #[test]
    fn tail_limit_bound_uses_sequence_limit() {
        let chain = TailHomogeneousChain::constant(1.0, 2.0).unwrap();
        // V = 1/x branch: beta_j = -kappa + 1/j
        let beta = BetaSequence::harmonic(-0.8, 1.0);
        let p = Partition::from_classes(vec![RegimeClass::finite([1]), RegimeClass::tail(2)]).unwrap();
        let sup = coarsen(&chain, &beta, &p).unwrap();
        let lim = coarsen_with(&chain, &beta, &p, ClassBound::TailLimit).unwrap();
        assert!((sup.beta[1] - (-0.3)).abs() < 1e-15);
        assert_eq!(lim.beta[1], -0.8);
        assert_eq!(sup.q, lim.q);
    }

    #[test]
    fn chain_recurrence_follows_tail_rates() {
        assert!(TailHomogeneousChain::constant(1.0, 2.0).unwrap().is_recurrent());
        assert!(TailHomogeneousChain::constant(1.0, 1.0).unwrap().is_recurrent());
        assert!(!TailHomogeneousChain::new(vec![1.0, 3.0], vec![2.0]).unwrap().is_recurrent());
    }
}
