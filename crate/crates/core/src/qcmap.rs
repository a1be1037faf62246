//! Quasiconformal diagnostics for sampled planar mappings.
//!
//! A mapping `w = (p, q)` is `K`-quasiconformal when
//! `p₁² + p₂² + q₁² + q₂² ≤ 2K (p₁q₂ − p₂q₁)`. Such maps are Hölder continuous
//! with exponent `K − √(K² − 1)` and tend to a limit at infinity at that rate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fit::{DecayFit, DecaySample};
use crate::grid::{jacobian, GridError, MappingJacobian, PlanarMapping};

/// Nodes whose gradient norm is below this fraction of the field maximum carry no angle information.
pub const DEGENERATE_GRADIENT_RTOL: f64 = 1e-9;

/// Relative floor below which a deviation from the limit counts as roundoff.
pub const DEVIATION_FLOOR_RTOL: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum QcError {
    #[error("K = {0} is below 1")]
    DomainError(f64),
    #[error("Jacobian is non-positive at {} interior node(s) (min J = {:e})", .0.orientation_failures.len(), .0.jacobian_min)]
    OrientationFailure(Box<DilatationReport>),
    #[error("need at least {need} window radii, got {got}")]
    InsufficientWindows { got: usize, need: usize },
    #[error("window radii must be increasing and inside [{r_inner}, {r_outer}]")]
    BadWindows { r_inner: f64, r_outer: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Source of the first derivatives of a mapping.
#[derive(Clone, Copy, Default)]
pub enum Derivatives<'a> {
    /// Finite-difference stencils of the grid.
    #[default]
    Stencil,
    /// `x ↦ [p₁, p₂, q₁, q₂]` in closed form.
    Exact(&'a (dyn Fn([f64; 2]) -> [f64; 4] + Sync)),
}

impl Derivatives<'_> {
    fn evaluate(&self, w: &PlanarMapping) -> MappingJacobian {
        match self {
            Derivatives::Stencil => jacobian(w),
            Derivatives::Exact(f) => MappingJacobian::from_fn(w.grid(), f),
        }
    }
}

/// Pointwise dilatation of a mapping.
///
/// `k_field[k]` is `None` at nodes with `J ≤ 0` or a vanishing gradient.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DilatationReport {
    pub k_min: f64,
    pub k_field: Vec<Option<f64>>,
    pub jacobian_min: f64,
    pub alpha: f64,
    pub degenerate_nodes: usize,
    pub orientation_failures: Vec<usize>,
}

/// `K − √(K² − 1)`, evaluated as `1 / (K + √(K² − 1))` to avoid cancellation.
pub fn holder_exponent(k: f64) -> Result<f64, QcError> {
    if !(k >= 1.0) || !k.is_finite() {
        return Err(QcError::DomainError(k));
    }
    Ok(1.0 / (k + (k * k - 1.0).sqrt()))
}

/// Dilatation bound for the gradient map of a solution of a linear equation with ellipticity ratio `γ`.
pub fn gradient_map_bound(gamma: f64) -> f64 {
    0.5 * (1.0 + gamma)
}

pub fn dilatation_field(w: &PlanarMapping, derivs: Derivatives<'_>) -> Result<DilatationReport, QcError> {
    let g = w.grid();
    let jac = derivs.evaluate(w);
    let norms: Vec<f64> = (0..jac.len())
        .map(|k| {
            let [p1, p2, q1, q2] = jac.node(k);
            p1 * p1 + p2 * p2 + q1 * q1 + q2 * q2
        })
        .collect();
    let scale = norms.iter().fold(0.0f64, |m, v| m.max(*v)).sqrt();
    let cutoff = DEGENERATE_GRADIENT_RTOL * scale;
    let mut k_field = vec![None; jac.len()];
    let mut k_min: f64 = 1.0;
    let mut jacobian_min = f64::INFINITY;
    let mut degenerate_nodes = 0;
    let mut orientation_failures = Vec::new();
    for k in 0..jac.len() {
        let [p1, p2, q1, q2] = jac.node(k);
        let det = p1 * q2 - p2 * q1;
        if norms[k].sqrt() <= cutoff {
            degenerate_nodes += 1;
            continue;
        }
        jacobian_min = jacobian_min.min(det);
        if det > 0.0 {
            let kk = (norms[k] / (2.0 * det)).max(1.0);
            k_field[k] = Some(kk);
            k_min = k_min.max(kk);
        } else if !g.is_boundary_ring(g.ring_angle(k).0) {
            orientation_failures.push(k);
        }
    }
    if !jacobian_min.is_finite() {
        jacobian_min = 0.0;
    }
    let report = DilatationReport {
        k_min,
        k_field,
        jacobian_min,
        alpha: holder_exponent(k_min)?,
        degenerate_nodes,
        orientation_failures,
    };
    if report.orientation_failures.is_empty() {
        Ok(report)
    } else {
        Err(QcError::OrientationFailure(Box::new(report)))
    }
}

/// `w̃ = (q̃, p̃)` with `p̃(y) = p(y/|y|²)` on the inverted annulus.
///
/// Ring `i` of the result is ring `n_r − 1 − i` of the input.
pub fn kelvin_conjugate(w: &PlanarMapping) -> Result<PlanarMapping, QcError> {
    // Origin is never a node, so any annulus inverts.
    let g = w.grid();
    let img = g.kelvin_image();
    let (n_r, n_t) = (g.n_r(), g.n_theta());
    let mut p = Vec::with_capacity(g.len());
    let mut q = Vec::with_capacity(g.len());
    for i in 0..n_r {
        for j in 0..n_t {
            let [pi, qi] = w.at(n_r - 1 - i, j);
            p.push(qi);
            q.push(pi);
        }
    }
    Ok(PlanarMapping::new(img, p, q)?)
}

/// Exact derivatives of `kelvin_conjugate(w)` from exact derivatives of `w`.
pub fn kelvin_conjugate_derivatives(exact: impl Fn([f64; 2]) -> [f64; 4]) -> impl Fn([f64; 2]) -> [f64; 4] {
    move |y| {
        let r2 = y[0] * y[0] + y[1] * y[1];
        let x = [y[0] / r2, y[1] / r2];
        let [p1, p2, q1, q2] = exact(x);
        // Dx/Dy = |y|⁻² I − 2 y yᵀ |y|⁻⁴ (symmetric).
        let r4 = r2 * r2;
        let j11 = 1.0 / r2 - 2.0 * y[0] * y[0] / r4;
        let j12 = -2.0 * y[0] * y[1] / r4;
        let j22 = 1.0 / r2 - 2.0 * y[1] * y[1] / r4;
        let pt = [j11 * p1 + j12 * p2, j12 * p1 + j22 * p2];
        let qt = [j11 * q1 + j12 * q2, j12 * q1 + j22 * q2];
        [qt[0], qt[1], pt[0], pt[1]]
    }
}

/// Max-norm residuals of the inversion identities at matched node pairs.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KelvinResiduals {
    /// `|∇p̃|² + |∇q̃|² − |x|⁻⁴(|∇p|² + |∇q|²)`.
    pub gradient_norm: f64,
    /// `p̃₁q̃₂ − p̃₂q̃₁ + |x|⁻⁴(p₁q₂ − p₂q₁)`, with `w̃` taken unswapped.
    pub jacobian: f64,
}

pub fn verify_kelvin_identities(w: &PlanarMapping, derivs: Derivatives<'_>) -> Result<KelvinResiduals, QcError> {
    let g = w.grid();
    // Unswapped transform (p̃, q̃) so the Jacobian identity carries the sign flip.
    let conj = kelvin_conjugate(w)?.swapped();
    let img = conj.grid().clone();
    let orig = derivs.evaluate(w);
    let trans = match derivs {
        Derivatives::Stencil => jacobian(&conj),
        Derivatives::Exact(f) => {
            let fk = kelvin_conjugate_derivatives(f);
            // fk returns (q̃, p̃) derivatives; swap back to (p̃, q̃).
            MappingJacobian::from_fn(&img, |y| {
                let [a, b, c, d] = fk(y);
                [c, d, a, b]
            })
        }
    };
    let (n_r, n_t) = (g.n_r(), g.n_theta());
    let mut res = KelvinResiduals { gradient_norm: 0.0, jacobian: 0.0 };
    for i in 0..n_r {
        for j in 0..n_t {
            let ko = g.index(i, j);
            let kt = img.index(n_r - 1 - i, j);
            let [p1, p2, q1, q2] = orig.node(ko);
            let [a1, a2, b1, b2] = trans.node(kt);
            // |y|⁻⁴ at the image point y.
            let x4 = img.radius(n_r - 1 - i).powi(-4);
            let lhs = a1 * a1 + a2 * a2 + b1 * b1 + b2 * b2;
            let rhs = x4 * (p1 * p1 + p2 * p2 + q1 * q1 + q2 * q2);
            res.gradient_norm = res.gradient_norm.max((lhs - rhs).abs());
            let jt = a1 * b2 - a2 * b1;
            res.jacobian = res.jacobian.max((jt + x4 * (p1 * q2 - p2 * q1)).abs());
        }
    }
    Ok(res)
}

/// Limit at infinity and the decay of `sup_{|x|=R} |w − w∞|`.
///
/// Each radius is snapped to the nearest ring; the limit is the angular mean on the outermost one.
pub fn limit_and_decay(w: &PlanarMapping, window_radii: &[f64]) -> Result<DecayFit, QcError> {
    const NEED: usize = 4;
    if window_radii.len() < NEED {
        return Err(QcError::InsufficientWindows { got: window_radii.len(), need: NEED });
    }
    let g = w.grid();
    let bad = || QcError::BadWindows { r_inner: g.r_inner(), r_outer: g.r_outer() };
    let rings: Vec<usize> = window_radii.iter().map(|&r| g.nearest_ring(r)).collect();
    let inside = window_radii.iter().all(|&r| r >= g.r_inner() * (1.0 - 1e-9) && r <= g.r_outer() * (1.0 + 1e-9));
    if !inside || rings.windows(2).any(|p| p[0] >= p[1]) {
        return Err(bad());
    }
    let n_t = g.n_theta();
    let outer = *rings.last().unwrap();
    let mut limit = [0.0, 0.0];
    for j in 0..n_t {
        let v = w.at(outer, j);
        limit[0] += v[0];
        limit[1] += v[1];
    }
    limit[0] /= n_t as f64;
    limit[1] /= n_t as f64;
    let samples = rings
        .iter()
        .map(|&i| {
            let dev = (0..n_t)
                .map(|j| {
                    let v = w.at(i, j);
                    (v[0] - limit[0]).hypot(v[1] - limit[1])
                })
                .fold(0.0, f64::max);
            DecaySample { radius: g.radius(i), deviation: dev }
        })
        .collect();
    let floor = DEVIATION_FLOOR_RTOL * limit[0].hypot(limit[1]).max(1.0);
    Ok(DecayFit::from_samples(limit.to_vec(), samples, floor))
}
