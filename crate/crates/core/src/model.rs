//! JSON model files.
//!
//! Regime indices in files are 1-based. Unknown keys are rejected.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::criteria::{LimitBehavior, LyapunovBehavior, TwoFunctionData};
use crate::error::{Error, MarkovError};
use crate::markov::{
    bound_rates, BetaSequence, ClassBound, Partition, QMatrix, RateBounds, RegimeClass, ScanDomain,
    StateDependentRates, TailHomogeneousChain,
};
use crate::mmatrix::MMatrixTest;
use crate::simulator::{truncate_chain, Boundary, DiffusionSpec, DriftSpec, SdeModel, SwitchingSpec};

/// Default truncation level when simulating a countable regime space.
pub const DEFAULT_TRUNCATION: usize = 30;
/// Default `r0` for the `|x|^{±1}` presets.
pub const DEFAULT_PRESET_R0: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Countable {
    Countable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RegimeCount {
    Finite(usize),
    Countable(Countable),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    #[default]
    Whole,
    /// `[0, inf)` with reflection at zero.
    HalfLine,
}

/// A switching rate as a function of `r = |x|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateExpr {
    Constant { value: f64 },
    /// `(num[0] + num[1] r) / (den[0] + den[1] r)`.
    Rational { num: [f64; 2], den: [f64; 2] },
    /// `base + amplitude * exp(-r / scale)`.
    ExpDecay { base: f64, amplitude: f64, scale: f64 },
}

impl RateExpr {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RateExpr::Constant { value } => *value,
            RateExpr::Rational { num, den } => (num[0] + num[1] * r) / (den[0] + den[1] * r),
            RateExpr::ExpDecay { base, amplitude, scale } => base + amplitude * (-r / scale).exp(),
        }
    }

    /// Exact `inf` and `sup` over `r >= 0`; all three forms are monotone in `r`.
    pub fn bounds(&self) -> RateBounds {
        let (at0, at_inf) = match self {
            RateExpr::Constant { value } => (*value, *value),
            RateExpr::Rational { num, den } => {
                let lim = if den[1] == 0.0 { f64::INFINITY * num[1].signum() } else { num[1] / den[1] };
                let lim = if den[1] == 0.0 && num[1] == 0.0 { num[0] / den[0] } else { lim };
                (num[0] / den[0], lim)
            }
            RateExpr::ExpDecay { base, amplitude, .. } => (base + amplitude, *base),
        };
        RateBounds { inf: at0.min(at_inf), sup: at0.max(at_inf) }
    }

    fn validate(&self) -> Result<(), String> {
        let b = self.bounds();
        match self {
            RateExpr::Rational { den, .. } if !(den[0] > 0.0 && den[1] >= 0.0) => {
                Err("rational rate needs den[0] > 0 and den[1] >= 0".into())
            }
            RateExpr::ExpDecay { scale, .. } if !(*scale > 0.0) => Err("exp_decay scale must be positive".into()),
            _ if !(b.inf >= 0.0 && b.sup.is_finite()) => Err("rate must be nonnegative and bounded".into()),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateEntry {
    pub from: usize,
    pub to: usize,
    pub rate: RateExpr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDependentSpec {
    pub entries: Vec<RateEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BirthDeathSpec {
    /// Death rate `j -> j-1`.
    pub a: f64,
    /// Birth rate `j -> j+1`.
    pub b: f64,
    /// Truncation level used for simulation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncate: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum QSpec {
    Matrix(Vec<Vec<f64>>),
    StateDependent(StateDependentSpec),
    BirthDeath(BirthDeathSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub head: Vec<f64>,
    pub limit: f64,
    #[serde(default)]
    pub coeff: f64,
    #[serde(default = "one")]
    pub power: f64,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

impl SequenceSpec {
    pub fn to_sequence(&self) -> Result<BetaSequence, MarkovError> {
        BetaSequence::new(self.head.clone(), self.limit, self.coeff, self.power)
    }

    pub fn from_sequence(s: &BetaSequence) -> Self {
        SequenceSpec { head: s.head.clone(), limit: s.limit, coeff: s.coeff, power: s.power }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSample {
    pub phi: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriftModel {
    /// `b_i |x|^delta x/|x|`.
    Power { b: Vec<f64>, delta: f64 },
    /// `b_i x`.
    Ou { b: Vec<f64> },
    /// `|x|^delta b^(x/|x|, i)`, with `b^` taken from the nearest sampled direction.
    RadialProfile { delta: f64, samples: Vec<Vec<ProfileSample>> },
    /// `beta_j x` on a countable regime space.
    LinearSequence { beta: SequenceSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sigma {
    Scalar(f64),
    PerRegime(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `V = |x|`, tends to infinity.
    Abs,
    /// `V = 1/|x|`, tends to zero.
    Inverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetSpec {
    pub preset: Preset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitSpec {
    pub beta: Vec<f64>,
    pub tag: LimitBehavior,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceLyapunovSpec {
    pub sequence: SequenceSpec,
    pub tag: LimitBehavior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LyapunovSpec {
    Preset(PresetSpec),
    Explicit(ExplicitSpec),
    Sequence(SequenceLyapunovSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoFunctionSpec {
    pub beta: Vec<f64>,
    pub h_limit: LimitBehavior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailClassSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub members: Vec<usize>,
    pub from: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassSpec {
    Members(Vec<usize>),
    Tail(TailClassSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassesSpec {
    pub classes: Vec<ClassSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutpointsSpec {
    pub cutpoints: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PartitionSpec {
    Classes(ClassesSpec),
    Cutpoints(CutpointsSpec),
}

/// A parsed model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub regimes: RegimeCount,
    #[serde(default = "one_usize")]
    pub dimension: usize,
    #[serde(default)]
    pub domain: Domain,
    pub q: QSpec,
    pub drift: DriftModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Sigma>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lyapunov: Vec<LyapunovSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_function: Option<TwoFunctionSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub partition: Vec<PartitionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_bound: Option<ClassBound>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mmatrix_test: Option<MMatrixTest>,
}

/// Test-function data resolved against the model.
#[derive(Debug, Clone, PartialEq)]
pub enum LyapunovInput {
    Finite(LyapunovBehavior),
    Countable { beta: BetaSequence, limit: LimitBehavior },
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

/// Parses and validates a model document.
pub fn parse_model(text: &str) -> Result<ModelFile, Error> {
    let model: ModelFile = serde_json::from_str(text).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Syntax | Category::Eof | Category::Io => Error::Parse(e.to_string()),
            Category::Data => Error::Schema(e.to_string()),
        }
    })?;
    model.validate()?;
    Ok(model)
}

pub fn load_model(path: &std::path::Path) -> Result<ModelFile, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    parse_model(&text)
}

impl ModelFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialises")
    }

    /// Number of regimes; `None` for a countable space.
    pub fn finite_regimes(&self) -> Option<usize> {
        match self.regimes {
            RegimeCount::Finite(n) => Some(n),
            RegimeCount::Countable(_) => None,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.dimension == 0 {
            return Err(schema("dimension must be positive"));
        }
        if self.domain == Domain::HalfLine && self.dimension != 1 {
            return Err(schema("a half-line model must have dimension 1"));
        }
        match self.regimes {
            RegimeCount::Finite(n) => self.validate_finite(n)?,
            RegimeCount::Countable(_) => self.validate_countable()?,
        }
        if let Some(s) = &self.sigma {
            let vals: Vec<f64> = match s {
                Sigma::Scalar(v) => vec![*v],
                Sigma::PerRegime(v) => {
                    if Some(v.len()) != self.finite_regimes() {
                        return Err(schema("per-regime sigma needs one value per regime"));
                    }
                    v.clone()
                }
            };
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(schema("sigma must be finite"));
            }
        }
        for l in &self.lyapunov {
            match l {
                LyapunovSpec::Preset(p) => {
                    if p.r0.is_some_and(|r| !(r > 0.0 && r.is_finite())) {
                        return Err(schema("preset r0 must be positive"));
                    }
                    if !matches!(self.drift, DriftModel::Ou { .. } | DriftModel::LinearSequence { .. })
                        && !matches!(self.drift, DriftModel::Power { delta, .. } if delta == 1.0)
                    {
                        return Err(schema("lyapunov presets need a linear drift (ou, power with delta 1, linear-sequence)"));
                    }
                }
                LyapunovSpec::Explicit(e) => {
                    if Some(e.beta.len()) != self.finite_regimes() {
                        return Err(schema("explicit lyapunov beta needs one value per regime"));
                    }
                }
                LyapunovSpec::Sequence(s) => {
                    if self.finite_regimes().is_some() {
                        return Err(schema("a lyapunov sequence needs a countable regime space"));
                    }
                    s.sequence.to_sequence().map_err(|e| schema(e.to_string()))?;
                }
            }
        }
        if let Some(t) = &self.two_function {
            if Some(t.beta.len()) != self.finite_regimes() {
                return Err(schema("two_function beta needs one value per regime"));
            }
        }
        Ok(())
    }

    fn validate_finite(&self, n: usize) -> Result<(), Error> {
        if n == 0 {
            return Err(schema("regimes must be positive"));
        }
        match &self.q {
            QSpec::Matrix(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(schema(format!("q matrix must be {n}x{n}")));
                }
                QMatrix::from_rows(rows).map_err(|e| schema(e.to_string()))?;
            }
            QSpec::StateDependent(sd) => {
                for e in &sd.entries {
                    if e.from == 0 || e.to == 0 || e.from > n || e.to > n || e.from == e.to {
                        return Err(schema(format!("rate entry {}->{} is out of range", e.from, e.to)));
                    }
                    e.rate.validate().map_err(schema)?;
                }
                let mut seen = std::collections::BTreeSet::new();
                if !sd.entries.iter().all(|e| seen.insert((e.from, e.to))) {
                    return Err(schema("duplicate rate entry"));
                }
            }
            QSpec::BirthDeath(_) => return Err(schema("birth_death rates need regimes = \"countable\"")),
        }
        let check_len = |v: &[f64], what: &str| {
            if v.len() != n {
                Err(schema(format!("{what} needs {n} values")))
            } else {
                Ok(())
            }
        };
        match &self.drift {
            DriftModel::Power { b, delta } => {
                check_len(b, "drift b")?;
                if !(-1.0..=1.0).contains(delta) {
                    return Err(schema("power drift delta must lie in [-1, 1]"));
                }
            }
            DriftModel::Ou { b } => check_len(b, "drift b")?,
            DriftModel::RadialProfile { delta, samples } => {
                if !(-1.0..1.0).contains(delta) {
                    return Err(schema("radial-profile delta must lie in [-1, 1)"));
                }
                if samples.len() != n {
                    return Err(schema(format!("radial-profile needs {n} sample lists")));
                }
                for s in samples.iter().flatten() {
                    if s.phi.len() != self.dimension || s.b.len() != self.dimension {
                        return Err(schema("radial-profile samples must match the dimension"));
                    }
                    if s.phi.iter().map(|v| v * v).sum::<f64>() == 0.0 {
                        return Err(schema("radial-profile direction must be nonzero"));
                    }
                }
                if samples.iter().any(Vec::is_empty) {
                    return Err(schema("radial-profile needs at least one sample per regime"));
                }
            }
            DriftModel::LinearSequence { .. } => {
                return Err(schema("linear-sequence drift needs regimes = \"countable\""))
            }
        }
        if !self.partition.is_empty() {
            return Err(schema("partitions apply to countable regime spaces only"));
        }
        Ok(())
    }

    fn validate_countable(&self) -> Result<(), Error> {
        let QSpec::BirthDeath(bd) = &self.q else {
            return Err(schema("a countable regime space needs birth_death rates"));
        };
        if !(bd.a > 0.0 && bd.b > 0.0) {
            return Err(schema("birth_death rates must be positive"));
        }
        if bd.truncate.is_some_and(|k| k < 2) {
            return Err(schema("truncate must be at least 2"));
        }
        let DriftModel::LinearSequence { beta } = &self.drift else {
            return Err(schema("a countable regime space needs a linear-sequence drift"));
        };
        beta.to_sequence().map_err(|e| schema(e.to_string()))?;
        if matches!(self.sigma, Some(Sigma::PerRegime(_))) {
            return Err(schema("a countable regime space needs a scalar sigma"));
        }
        for p in &self.partition {
            if let PartitionSpec::Classes(c) = p {
                self.partition_from_classes(c)?;
            }
        }
        Ok(())
    }

    /// Per-regime sigma; defaults to 1.
    pub fn sigma_values(&self) -> Vec<f64> {
        let n = self.finite_regimes().unwrap_or(1);
        match &self.sigma {
            None => vec![1.0; n],
            Some(Sigma::Scalar(s)) => vec![*s; n],
            Some(Sigma::PerRegime(v)) => v.clone(),
        }
    }

    fn scalar_sigma(&self) -> f64 {
        match &self.sigma {
            Some(Sigma::Scalar(s)) => *s,
            _ => 1.0,
        }
    }

    /// Constant generator, when the file gives one.
    pub fn generator(&self) -> Result<Option<QMatrix>, Error> {
        match &self.q {
            QSpec::Matrix(rows) => Ok(Some(QMatrix::from_rows(rows)?)),
            _ => Ok(None),
        }
    }

    /// State-dependent rates, when the file gives them.
    pub fn rates(&self) -> Option<StateDependentRates> {
        let (QSpec::StateDependent(sd), Some(n)) = (&self.q, self.finite_regimes()) else {
            return None;
        };
        let mut table: Vec<Option<RateExpr>> = vec![None; n * n];
        for e in &sd.entries {
            table[(e.from - 1) * n + e.to - 1] = Some(e.rate.clone());
        }
        let table = Arc::new(table);
        let t = Arc::clone(&table);
        let mut rates = StateDependentRates::new(n, self.dimension, move |x: &[f64], i, j| {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            t[i * n + j].as_ref().map_or(0.0, |e| e.eval(r))
        });
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mut b = table[i * n + j].as_ref().map_or(RateBounds { inf: 0.0, sup: 0.0 }, RateExpr::bounds);
                if let Some(e) = sd.entries.iter().find(|e| e.from == i + 1 && e.to == j + 1) {
                    b.inf = e.inf.unwrap_or(b.inf);
                    b.sup = e.sup.unwrap_or(b.sup);
                }
                rates = rates.with_hint(i, j, b);
            }
        }
        Some(rates)
    }

    /// Bound on `q_i(x)` over all `x` and `i`.
    fn max_exit(&self) -> f64 {
        match &self.q {
            QSpec::StateDependent(sd) => {
                let n = self.finite_regimes().unwrap_or(0);
                (1..=n)
                    .map(|i| {
                        sd.entries.iter().filter(|e| e.from == i).map(|e| e.sup.unwrap_or(e.rate.bounds().sup)).sum::<f64>()
                    })
                    .fold(0.0, f64::max)
            }
            _ => 0.0,
        }
    }

    pub fn scan_domain(&self) -> ScanDomain {
        if self.domain == Domain::HalfLine {
            return ScanDomain::half_line();
        }
        let d = self.dimension;
        let dirs = (0..d)
            .flat_map(|k| {
                [1.0, -1.0].map(|s| {
                    let mut u = vec![0.0; d];
                    u[k] = s;
                    u
                })
            })
            .collect();
        ScanDomain::rays(dirs)
    }

    /// `Q~`: `sup_x` below the diagonal and `inf_x` above it.
    pub fn q_tilde(&self) -> Result<Option<QMatrix>, Error> {
        match self.rates() {
            Some(r) => Ok(Some(bound_rates(&r, &self.scan_domain())?)),
            None => Ok(None),
        }
    }

    pub fn chain(&self) -> Result<Option<TailHomogeneousChain>, Error> {
        match &self.q {
            QSpec::BirthDeath(bd) => Ok(Some(TailHomogeneousChain::constant(bd.b, bd.a)?)),
            _ => Ok(None),
        }
    }

    /// `beta_j` of a linear-sequence drift.
    pub fn drift_sequence(&self) -> Option<BetaSequence> {
        match &self.drift {
            DriftModel::LinearSequence { beta } => beta.to_sequence().ok(),
            _ => None,
        }
    }

    /// Linear drift coefficients for finite models, if the drift is linear.
    fn linear_coefficients(&self) -> Option<Vec<f64>> {
        match &self.drift {
            DriftModel::Ou { b } => Some(b.clone()),
            DriftModel::Power { b, delta } if *delta == 1.0 => Some(b.clone()),
            _ => None,
        }
    }

    /// Drift-inequality constants for each listed test function.
    ///
    /// `|x|` gives `beta_i = b_i + sigma_i^2 (d-1) / (2 r0^2)`; `1/|x|` gives
    /// `beta_i = -b_i + sigma_i^2 max(0, 3-d) / (2 r0^2)`.
    pub fn lyapunov_inputs(&self) -> Result<Vec<LyapunovInput>, Error> {
        let d = self.dimension as f64;
        let mut out = Vec::new();
        for l in &self.lyapunov {
            let input = match l {
                LyapunovSpec::Explicit(e) => LyapunovInput::Finite(LyapunovBehavior { limit: e.tag, r0: e.r0, beta: e.beta.clone() }),
                LyapunovSpec::Sequence(s) => {
                    LyapunovInput::Countable { beta: s.sequence.to_sequence()?, limit: s.tag }
                }
                LyapunovSpec::Preset(p) => {
                    let r0 = p.r0.unwrap_or(DEFAULT_PRESET_R0);
                    let (sign, curvature, limit) = match p.preset {
                        Preset::Abs => (1.0, (d - 1.0) / (2.0 * r0 * r0), LimitBehavior::ToInfinity),
                        Preset::Inverse => (-1.0, (3.0 - d).max(0.0) / (2.0 * r0 * r0), LimitBehavior::ToZero),
                    };
                    match (&self.drift, self.linear_coefficients()) {
                        (DriftModel::LinearSequence { beta }, _) => {
                            let s = beta.to_sequence()?;
                            let shift = self.scalar_sigma().powi(2) * curvature;
                            let seq = if sign > 0.0 {
                                BetaSequence::new(
                                    s.head.iter().map(|v| v + shift).collect(),
                                    s.limit + shift,
                                    s.coeff,
                                    s.power,
                                )?
                            } else {
                                s.negated_plus(shift)
                            };
                            LyapunovInput::Countable { beta: seq, limit }
                        }
                        (_, Some(b)) => {
                            let sig = self.sigma_values();
                            let beta = b.iter().zip(&sig).map(|(bi, s)| sign * bi + s * s * curvature).collect();
                            LyapunovInput::Finite(LyapunovBehavior { limit, r0: Some(r0), beta })
                        }
                        _ => return Err(schema("preset needs a linear drift")),
                    }
                }
            };
            out.push(input);
        }
        Ok(out)
    }

    pub fn two_function_data(&self) -> Option<TwoFunctionData> {
        self.two_function.as_ref().map(|t| TwoFunctionData { beta: t.beta.clone(), h_limit: t.h_limit })
    }

    fn partition_from_classes(&self, c: &ClassesSpec) -> Result<Partition, Error> {
        let classes = c
            .classes
            .iter()
            .map(|cs| match cs {
                ClassSpec::Members(m) => RegimeClass::finite(m.iter().copied()),
                ClassSpec::Tail(t) => {
                    let mut rc = RegimeClass::tail(t.from);
                    rc.members.extend(t.members.iter().copied());
                    rc
                }
            })
            .collect();
        Partition::from_classes(classes).map_err(|e| schema(e.to_string()))
    }

    /// Listed partitions, or `{1} | {2, 3, ...}` when none is given.
    pub fn partitions(&self, beta: &BetaSequence) -> Result<Vec<Partition>, Error> {
        if self.partition.is_empty() {
            return Ok(vec![Partition::from_classes(vec![RegimeClass::finite([1]), RegimeClass::tail(2)])?]);
        }
        self.partition
            .iter()
            .map(|p| match p {
                PartitionSpec::Classes(c) => self.partition_from_classes(c),
                PartitionSpec::Cutpoints(c) => Ok(Partition::from_cutpoints(&c.cutpoints, beta)?),
            })
            .collect()
    }

    /// Nearest-direction interpolation of a sampled angular drift.
    pub fn radial_profile(&self) -> Option<(f64, crate::criteria::DriftProfile, Vec<Vec<f64>>)> {
        let normalise = |v: &[f64]| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter().map(|x| x / n).collect::<Vec<f64>>()
        };
        match &self.drift {
            DriftModel::RadialProfile { delta, samples } => {
                let table: Vec<Vec<(Vec<f64>, Vec<f64>)>> = samples
                    .iter()
                    .map(|reg| reg.iter().map(|s| (normalise(&s.phi), s.b.clone())).collect())
                    .collect();
                let points: Vec<Vec<f64>> = table.iter().flatten().map(|(p, _)| p.clone()).collect();
                let profile: crate::criteria::DriftProfile = Arc::new(move |phi: &[f64], i: usize| {
                    let dot = |p: &[f64]| p.iter().zip(phi).map(|(a, b)| a * b).sum::<f64>();
                    table[i]
                        .iter()
                        .max_by(|a, b| dot(&a.0).total_cmp(&dot(&b.0)))
                        .map(|(_, b)| b.clone())
                        .unwrap_or_default()
                });
                Some((*delta, profile, points))
            }
            DriftModel::Power { b, delta } if *delta < 1.0 => {
                let b = b.clone();
                let profile: crate::criteria::DriftProfile =
                    Arc::new(move |phi: &[f64], i: usize| phi.iter().map(|p| b[i] * p).collect());
                Some((*delta, profile, Vec::new()))
            }
            _ => None,
        }
    }

    /// Simulation model; countable regime spaces are truncated.
    pub fn sde_model(&self) -> Result<SdeModel, Error> {
        let boundary = if self.domain == Domain::HalfLine { Boundary::ReflectAtZero } else { Boundary::None };
        let mut note = None;
        let (switching, n) = match &self.q {
            QSpec::Matrix(_) => {
                let q = self.generator()?.expect("matrix generator");
                let n = q.n();
                (SwitchingSpec::Constant(q), n)
            }
            QSpec::StateDependent(_) => {
                let rates = self.rates().expect("state-dependent rates");
                let n = rates.n();
                (SwitchingSpec::StateDependent { rates, max_exit: self.max_exit() }, n)
            }
            QSpec::BirthDeath(bd) => {
                let k = bd.truncate.unwrap_or(DEFAULT_TRUNCATION);
                let q = truncate_chain(&self.chain()?.expect("birth-death chain"), k)?;
                note = Some(format!("countable regime space truncated to {{1..{k}}} with a reflecting top"));
                (SwitchingSpec::Constant(q), k)
            }
        };
        let drift = match &self.drift {
            DriftModel::Power { b, delta } => DriftSpec::Power { b: b.clone(), delta: *delta },
            DriftModel::Ou { b } => DriftSpec::Linear { b: b.clone() },
            DriftModel::LinearSequence { beta } => {
                let s = beta.to_sequence()?;
                DriftSpec::Linear { b: (1..=n).map(|j| s.value(j)).collect() }
            }
            DriftModel::RadialProfile { .. } => {
                let (delta, profile, _) = self.radial_profile().expect("radial profile");
                DriftSpec::Custom(Arc::new(move |x: &[f64], i| {
                    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if r == 0.0 {
                        return vec![0.0; x.len()];
                    }
                    let phi: Vec<f64> = x.iter().map(|v| v / r).collect();
                    let scale = r.max(1e-3).powf(delta);
                    profile(&phi, i).iter().map(|v| v * scale).collect()
                }))
            }
        };
        let sigma = if self.finite_regimes().is_some() { self.sigma_values() } else { vec![self.scalar_sigma(); n] };
        let model = SdeModel::new(self.dimension, drift, DiffusionSpec::Scalar(sigma), switching, boundary)?;
        Ok(match note {
            Some(n) => model.with_note(n),
            None => model,
        })
    }

    /// Diffusion matrix `sigma_i^2 I`, as used by the radial criterion.
    pub fn diffusion_profile(&self) -> crate::criteria::DiffusionProfile {
        let sig = self.sigma_values();
        let d = self.dimension;
        Arc::new(move |_x: &[f64], i: usize| DMatrix::identity(d, d) * (sig[i] * sig[i]))
    }
}
