use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::CriteriaError;
use crate::markov::QMatrix;

use super::{sign_tol, weighted_average, Certificate, Classification, Criterion, Verdict};

/// Angular drift `b^(phi, i)` for a unit vector `phi` and regime `i`.
pub type DriftProfile = Arc<dyn Fn(&[f64], usize) -> Vec<f64> + Send + Sync>;
/// Diffusion matrix `a^(i)(x) = sigma sigma^T` at a point `x`.
pub type DiffusionProfile = Arc<dyn Fn(&[f64], usize) -> DMatrix<f64> + Send + Sync>;

/// `dX = |X|^delta b^(X/|X|, L) dt + sigma(X, L) dB` in `R^dim`.
#[derive(Clone)]
pub struct RadialModel {
    pub dim: usize,
    pub regimes: usize,
    pub delta: f64,
    pub drift: DriftProfile,
    /// Needed only for `delta = -1`, where the noise enters the radial balance.
    pub diffusion: Option<DiffusionProfile>,
}

impl fmt::Debug for RadialModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialModel")
            .field("dim", &self.dim)
            .field("regimes", &self.regimes)
            .field("delta", &self.delta)
            .field("diffusion", &self.diffusion.is_some())
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialMode {
    Limsup,
    Liminf,
}

/// Directions on the unit sphere over which the angular extremes are taken.
#[derive(Debug, Clone, PartialEq)]
pub enum SphereGrid {
    /// Equally spaced angles in 2-d, a Fibonacci lattice in 3-d and a
    /// normalised cube lattice above; `resolution` is the 2-d/3-d point count.
    Uniform { resolution: usize },
    Points(Vec<Vec<f64>>),
}

impl Default for SphereGrid {
    fn default() -> Self {
        SphereGrid::Uniform { resolution: 720 }
    }
}

impl SphereGrid {
    pub fn points(&self, dim: usize) -> Result<Vec<Vec<f64>>, CriteriaError> {
        if dim == 0 {
            return Err(CriteriaError::InvalidInput("dimension must be positive".into()));
        }
        let pts = match self {
            SphereGrid::Points(p) => {
                let mut out = Vec::with_capacity(p.len());
                for v in p {
                    if v.len() != dim {
                        return Err(CriteriaError::InvalidInput(format!(
                            "sphere point has length {}, expected {dim}",
                            v.len()
                        )));
                    }
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if !(norm > 0.0 && norm.is_finite()) {
                        return Err(CriteriaError::InvalidInput("sphere point must be nonzero".into()));
                    }
                    out.push(v.iter().map(|x| x / norm).collect());
                }
                out
            }
            SphereGrid::Uniform { resolution } => {
                let n = (*resolution).max(4);
                match dim {
                    1 => vec![vec![1.0], vec![-1.0]],
                    2 => (0..n)
                        .map(|k| {
                            let t = 2.0 * PI * k as f64 / n as f64;
                            vec![t.cos(), t.sin()]
                        })
                        .collect(),
                    3 => fibonacci_sphere(n),
                    _ => cube_lattice(dim, if dim <= 5 { 2 } else { 1 }),
                }
            }
        };
        if pts.is_empty() {
            return Err(CriteriaError::InvalidInput("sphere grid is empty".into()));
        }
        Ok(pts)
    }
}

/// Includes both poles so that axis-aligned extremes are hit exactly.
fn fibonacci_sphere(n: usize) -> Vec<Vec<f64>> {
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut pts: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * k as f64;
            vec![r * t.cos(), r * t.sin(), z]
        })
        .collect();
    pts.push(vec![0.0, 0.0, 1.0]);
    pts.push(vec![0.0, 0.0, -1.0]);
    pts
}

fn cube_lattice(dim: usize, m: i64) -> Vec<Vec<f64>> {
    let side = (2 * m + 1) as usize;
    let total = side.pow(dim as u32);
    let mut out = Vec::new();
    for mut code in 0..total {
        let mut v = Vec::with_capacity(dim);
        for _ in 0..dim {
            v.push((code % side) as f64 - m as f64);
            code /= side;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            out.push(v.iter().map(|x| x / norm).collect());
        }
    }
    out
}

const DEFAULT_RADII: [f64; 5] = [1e2, 1e3, 1e4, 1e5, 1e6];
const STABILIZATION_TOL: f64 = 1e-6;

fn radial_component(model: &RadialModel, phi: &[f64], i: usize) -> Result<f64, CriteriaError> {
    let b = (model.drift)(phi, i);
    if b.len() != model.dim {
        return Err(CriteriaError::InvalidInput(format!(
            "drift profile returned length {}, expected {}",
            b.len(),
            model.dim
        )));
    }
    Ok(b.iter().zip(phi).map(|(x, y)| x * y).sum())
}

/// `tr a / 2 - phi^T a phi / 2` at `x = r phi`.
fn noise_component(diffusion: &DiffusionProfile, dim: usize, phi: &[f64], r: f64, i: usize) -> Result<f64, CriteriaError> {
    let x: Vec<f64> = phi.iter().map(|p| p * r).collect();
    let a = diffusion(&x, i);
    if a.nrows() != dim || a.ncols() != dim {
        return Err(CriteriaError::InvalidInput("diffusion profile has the wrong shape".into()));
    }
    let mut quad = 0.0;
    for k in 0..dim {
        for l in 0..dim {
            quad += a[(k, l)] * phi[k] * phi[l];
        }
    }
    Ok(0.5 * a.trace() - 0.5 * quad)
}

fn extreme(values: impl Iterator<Item = f64>, mode: RadialMode) -> f64 {
    match mode {
        RadialMode::Limsup => values.fold(f64::NEG_INFINITY, f64::max),
        RadialMode::Liminf => values.fold(f64::INFINITY, f64::min),
    }
}

/// Per-regime limsup or liminf of the radial drift coefficient.
///
/// For `delta in (-1, 1)` the quantity depends on `x` only through `x/|x|`,
/// so the limit is an extreme over the sphere grid. For `delta = -1` the
/// noise term is evaluated along `radii` (default `1e2..1e6`) and must move
/// by at most `1e-6` between the last two radii.
pub fn radial_beta(
    model: &RadialModel,
    mode: RadialMode,
    grid: &SphereGrid,
    radii: Option<&[f64]>,
) -> Result<Vec<f64>, CriteriaError> {
    if !(-1.0..1.0).contains(&model.delta) {
        return Err(CriteriaError::InvalidInput(format!("delta must lie in [-1, 1), got {}", model.delta)));
    }
    if model.regimes == 0 {
        return Err(CriteriaError::InvalidInput("model has no regimes".into()));
    }
    let pts = grid.points(model.dim)?;
    let mut out = Vec::with_capacity(model.regimes);
    for i in 0..model.regimes {
        let drift: Vec<f64> = pts.iter().map(|p| radial_component(model, p, i)).collect::<Result<_, _>>()?;
        if model.delta > -1.0 {
            out.push(extreme(drift.into_iter(), mode));
            continue;
        }
        let diffusion = model
            .diffusion
            .as_ref()
            .ok_or_else(|| CriteriaError::InvalidInput("delta = -1 needs a diffusion profile".into()))?;
        let radii = radii.unwrap_or(&DEFAULT_RADII);
        if radii.len() < 2 || radii.windows(2).any(|w| !(w[1] > w[0])) || radii[0] <= 0.0 {
            return Err(CriteriaError::InvalidInput("radii must be positive, increasing, at least two".into()));
        }
        let mut per_radius = Vec::with_capacity(radii.len());
        for &r in radii {
            let vals = pts
                .iter()
                .zip(&drift)
                .map(|(p, d)| Ok(d + noise_component(diffusion, model.dim, p, r, i)?))
                .collect::<Result<Vec<f64>, CriteriaError>>()?;
            per_radius.push(extreme(vals.into_iter(), mode));
        }
        let last = per_radius[per_radius.len() - 1];
        let prev = per_radius[per_radius.len() - 2];
        if !last.is_finite() || (last - prev).abs() > STABILIZATION_TOL * last.abs().max(1.0) {
            return Err(CriteriaError::NonConvergent);
        }
        out.push(last);
    }
    Ok(out)
}

/// Recurrent if `sum mu_i beta_i < 0` for the limsup coefficients, transient
/// if `sum mu_i beta~_i > 0` for the liminf ones.
pub fn classify_radial(q: &QMatrix, model: &RadialModel, grid: &SphereGrid) -> Result<Classification, CriteriaError> {
    if model.regimes != q.n() {
        return Err(CriteriaError::InvalidInput(format!(
            "model has {} regimes, generator has {}",
            model.regimes,
            q.n()
        )));
    }
    let beta_sup = radial_beta(model, RadialMode::Limsup, grid, None)?;
    let beta_inf = radial_beta(model, RadialMode::Liminf, grid, None)?;
    let (mu, weighted_sup) = weighted_average(q, &beta_sup)?;
    let (_, weighted_inf) = weighted_average(q, &beta_inf)?;
    let rec = weighted_sup < -sign_tol(&beta_sup);
    let trans = weighted_inf > sign_tol(&beta_inf);
    let cert = Certificate::Radial { q: q.rows(), mu, beta_sup, beta_inf, weighted_sup, weighted_inf };
    Ok(if rec {
        Classification::conclusive(Verdict::Recurrent, Criterion::RadialDrift, cert)
    } else if trans {
        Classification::conclusive(Verdict::Transient, Criterion::RadialDrift, cert)
    } else {
        Classification::inconclusive(
            Criterion::RadialDrift,
            cert,
            format!(
                "averaged limsup {weighted_sup:.6e} is not negative and averaged liminf {weighted_inf:.6e} is not positive"
            ),
        )
    })
}
