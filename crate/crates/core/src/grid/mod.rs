//! Annular polar grids, discrete derivatives, quadrature and Kelvin inversion.
//!
//! Radial derivatives use finite-difference weights computed on the actual
//! ring radii, so they are exact for polynomials in `r` up to the stencil
//! degree regardless of spacing. Angular derivatives use periodic centered
//! stencils. Cartesian components follow from the polar chain rule.

mod field;
mod ops;
mod quadrature;
mod snapshot;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::fornberg_weights;

pub use field::{MappingJacobian, PlanarMapping, ScalarField, SymMatrixField};
pub use ops::{gradient, hessian, jacobian, laplacian, HessianWeights};
pub use quadrature::{annulus_integral, circle_flux_integral, radial_weights};
pub use snapshot::{read_snapshot, write_mapping, write_scalar, Snapshot};

pub const MIN_RADIAL_NODES: usize = 8;
pub const MIN_ANGULAR_NODES: usize = 16;

/// Relative tolerance for matching a requested radius to a ring.
const RING_MATCH_RTOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GridError {
    #[error(
        "invalid dimension: n_r = {n_r} (min {MIN_RADIAL_NODES}), n_theta = {n_theta} (min {MIN_ANGULAR_NODES}, even)"
    )]
    InvalidDimension { n_r: usize, n_theta: usize },
    #[error("invalid radii: need 0 < r_inner < r_outer, got r_inner = {r_inner}, r_outer = {r_outer}")]
    InvalidRadii { r_inner: f64, r_outer: f64 },
    #[error("singular input: the origin has no Kelvin image")]
    SingularInput,
    #[error("radius {radius} is not a grid ring")]
    RadiusNotOnGrid { radius: f64 },
    #[error("window [{r_lo}, {r_hi}] lies outside the grid [{r_inner}, {r_outer}]")]
    WindowOutsideGrid { r_lo: f64, r_hi: f64, r_inner: f64, r_outer: f64 },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at node {index}")]
    NonFinite { index: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("malformed snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Radial node placement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    /// Constant ratio `r_{i+1}/r_i`.
    LogRadial,
    /// Constant difference `r_{i+1} - r_i`.
    UniformRadial,
    /// Constant difference in `1/r`; the Kelvin image of `UniformRadial`.
    InverseUniformRadial,
}

impl Spacing {
    pub fn token(self) -> &'static str {
        match self {
            Spacing::LogRadial => "log-radial",
            Spacing::UniformRadial => "uniform-radial",
            Spacing::InverseUniformRadial => "inverse-uniform-radial",
        }
    }

    fn kelvin(self) -> Spacing {
        match self {
            Spacing::LogRadial => Spacing::LogRadial,
            Spacing::UniformRadial => Spacing::InverseUniformRadial,
            Spacing::InverseUniformRadial => Spacing::UniformRadial,
        }
    }
}

impl fmt::Display for Spacing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Spacing {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "log-radial" => Ok(Spacing::LogRadial),
            "uniform-radial" => Ok(Spacing::UniformRadial),
            "inverse-uniform-radial" => Ok(Spacing::InverseUniformRadial),
            other => Err(GridError::Snapshot(format!("unknown spacing `{other}`"))),
        }
    }
}

/// Formal accuracy of the derivative stencils.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StencilOrder {
    Second,
    #[default]
    Fourth,
}

impl StencilOrder {
    fn width(self) -> usize {
        match self {
            StencilOrder::Second => 3,
            StencilOrder::Fourth => 5,
        }
    }
}

/// Parameters that determine a grid completely.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub r_inner: f64,
    pub r_outer: f64,
    pub n_r: usize,
    pub n_theta: usize,
    pub spacing: Spacing,
    #[serde(default)]
    pub order: StencilOrder,
}

#[derive(Debug)]
struct RadialStencil {
    start: usize,
    w: Vec<f64>,
}

#[derive(Debug)]
struct Stencils {
    d1: Vec<RadialStencil>,
    d2: Vec<RadialStencil>,
    t1: Vec<f64>,
    t2: Vec<f64>,
    half: usize,
}

/// Polar grid on `{r_inner ≤ |x| ≤ r_outer}`; node `(i, j)` sits at radius
/// `radii[i]` and angle `2πj/n_theta`, flattened as `i * n_theta + j`.
#[derive(Debug)]
pub struct AnnularGrid {
    spec: GridSpec,
    radii: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    stencils: Stencils,
}

impl PartialEq for AnnularGrid {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

/// Builds a grid with the default (fourth-order) stencils.
pub fn build_grid(
    r_inner: f64,
    r_outer: f64,
    n_r: usize,
    n_theta: usize,
    spacing: Spacing,
) -> Result<Arc<AnnularGrid>, GridError> {
    AnnularGrid::new(GridSpec { r_inner, r_outer, n_r, n_theta, spacing, order: StencilOrder::Fourth })
}

/// `x / |x|²`.
pub fn kelvin_point(x: [f64; 2]) -> Result<[f64; 2], GridError> {
    let r2 = x[0] * x[0] + x[1] * x[1];
    if r2 == 0.0 || !r2.is_finite() {
        return Err(GridError::SingularInput);
    }
    Ok([x[0] / r2, x[1] / r2])
}

impl AnnularGrid {
    pub fn new(spec: GridSpec) -> Result<Arc<Self>, GridError> {
        let GridSpec { r_inner, r_outer, n_r, n_theta, spacing, order } = spec;
        if n_r < MIN_RADIAL_NODES || n_theta < MIN_ANGULAR_NODES || n_theta % 2 != 0 {
            return Err(GridError::InvalidDimension { n_r, n_theta });
        }
        if !(r_inner > 0.0 && r_inner.is_finite() && r_outer.is_finite() && r_inner < r_outer) {
            return Err(GridError::InvalidRadii { r_inner, r_outer });
        }
        let last = (n_r - 1) as f64;
        let mut radii: Vec<f64> = (0..n_r)
            .map(|i| {
                let t = i as f64 / last;
                match spacing {
                    Spacing::LogRadial => r_inner * ((r_outer / r_inner).ln() * t).exp(),
                    Spacing::UniformRadial => r_inner + (r_outer - r_inner) * t,
                    Spacing::InverseUniformRadial => 1.0 / (1.0 / r_inner - (1.0 / r_inner - 1.0 / r_outer) * t),
                }
            })
            .collect();
        radii[0] = r_inner;
        radii[n_r - 1] = r_outer;
        let (sin, cos): (Vec<f64>, Vec<f64>) =
            (0..n_theta).map(|j| (2.0 * PI * j as f64 / n_theta as f64).sin_cos()).unzip();
        let stencils = Stencils::build(&radii, n_theta, order);
        Ok(Arc::new(AnnularGrid { spec, radii, cos, sin, stencils }))
    }

    /// Same geometry with a different stencil order.
    pub fn with_order(&self, order: StencilOrder) -> Arc<AnnularGrid> {
        AnnularGrid::new(GridSpec { order, ..self.spec }).expect("spec already validated")
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }
    pub fn r_inner(&self) -> f64 {
        self.spec.r_inner
    }
    pub fn r_outer(&self) -> f64 {
        self.spec.r_outer
    }
    pub fn n_r(&self) -> usize {
        self.spec.n_r
    }
    pub fn n_theta(&self) -> usize {
        self.spec.n_theta
    }
    pub fn spacing(&self) -> Spacing {
        self.spec.spacing
    }
    pub fn order(&self) -> StencilOrder {
        self.spec.order
    }
    pub fn len(&self) -> usize {
        self.spec.n_r * self.spec.n_theta
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }
    pub fn radius(&self, i: usize) -> f64 {
        self.radii[i]
    }
    pub fn theta(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.spec.n_theta as f64
    }
    pub fn cos_sin(&self, j: usize) -> (f64, f64) {
        (self.cos[j], self.sin[j])
    }
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.spec.n_theta + j
    }
    /// `(ring, angle)` of a flat index.
    pub fn ring_angle(&self, k: usize) -> (usize, usize) {
        (k / self.spec.n_theta, k % self.spec.n_theta)
    }
    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.radii[i] * self.cos[j], self.radii[i] * self.sin[j]]
    }
    pub fn is_boundary_ring(&self, i: usize) -> bool {
        i == 0 || i + 1 == self.spec.n_r
    }

    /// Step in the coordinate in which rings are equally spaced.
    pub fn radial_step(&self) -> f64 {
        let (a, b) = (self.radii[0], self.radii[1]);
        match self.spec.spacing {
            Spacing::LogRadial => (b / a).ln(),
            Spacing::UniformRadial => b - a,
            Spacing::InverseUniformRadial => 1.0 / a - 1.0 / b,
        }
    }

    /// Largest nodal spacing in physical length, a mesh-size proxy for convergence studies.
    pub fn mesh_size(&self) -> f64 {
        let dr = self.radii.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        dr.max(self.spec.r_outer * 2.0 * PI / self.spec.n_theta as f64)
    }

    /// Index of the ring with radius `r` (relative tolerance 1e-9).
    pub fn ring_index(&self, r: f64) -> Result<usize, GridError> {
        let pos = self.radii.partition_point(|&ri| ri < r);
        for cand in [pos.wrapping_sub(1), pos] {
            if let Some(&ri) = self.radii.get(cand) {
                if (ri - r).abs() <= RING_MATCH_RTOL * ri {
                    return Ok(cand);
                }
            }
        }
        Err(GridError::RadiusNotOnGrid { radius: r })
    }

    /// Index of the ring closest to `r` (in log distance).
    pub fn nearest_ring(&self, r: f64) -> usize {
        let pos = self.radii.partition_point(|&ri| ri < r);
        if pos == 0 {
            return 0;
        }
        if pos >= self.spec.n_r {
            return self.spec.n_r - 1;
        }
        if (r / self.radii[pos - 1]).ln() <= (self.radii[pos] / r).ln() {
            pos - 1
        } else {
            pos
        }
    }

    /// Ring index range `[lo, hi]` for a window whose ends are grid radii.
    pub fn window_rings(&self, r_lo: f64, r_hi: f64) -> Result<(usize, usize), GridError> {
        let outside =
            || GridError::WindowOutsideGrid { r_lo, r_hi, r_inner: self.spec.r_inner, r_outer: self.spec.r_outer };
        let tol = RING_MATCH_RTOL;
        if !(r_lo < r_hi) || r_lo < self.spec.r_inner * (1.0 - tol) || r_hi > self.spec.r_outer * (1.0 + tol) {
            return Err(outside());
        }
        let lo = self.ring_index(r_lo).unwrap_or_else(|_| self.nearest_ring(r_lo));
        let hi = self.ring_index(r_hi).unwrap_or_else(|_| self.nearest_ring(r_hi));
        if lo >= hi {
            return Err(outside());
        }
        Ok((lo, hi))
    }

    /// Grid on `{1/r_outer ≤ |x| ≤ 1/r_inner}` whose ring `n_r-1-i` is the
    /// inversion image of ring `i`, angles unchanged.
    pub fn kelvin_image(&self) -> Arc<AnnularGrid> {
        AnnularGrid::new(GridSpec {
            r_inner: 1.0 / self.spec.r_outer,
            r_outer: 1.0 / self.spec.r_inner,
            spacing: self.spec.spacing.kelvin(),
            ..self.spec
        })
        .expect("inversion preserves validity")
    }
}

impl Stencils {
    fn build(radii: &[f64], n_theta: usize, order: StencilOrder) -> Stencils {
        let n_r = radii.len();
        let w = order.width();
        let radial = |width: usize, deriv: usize| -> Vec<RadialStencil> {
            (0..n_r)
                .map(|i| {
                    let centered = i >= w / 2 && i + w / 2 < n_r;
                    let width = if centered { w } else { width };
                    let start = (i as isize - (width / 2) as isize).clamp(0, (n_r - width) as isize) as usize;
                    let nodes = &radii[start..start + width];
                    let weights = fornberg_weights(radii[i], nodes, deriv);
                    RadialStencil { start, w: weights[deriv].clone() }
                })
                .collect()
        };
        let d1 = radial(w, 1);
        let d2 = radial(w + 1, 2);
        let half = w / 2;
        let h = 2.0 * PI / n_theta as f64;
        let offsets: Vec<f64> = (0..w).map(|k| (k as f64 - half as f64) * h).collect();
        let tw = fornberg_weights(0.0, &offsets, 2);
        Stencils { d1, d2, t1: tw[1].clone(), t2: tw[2].clone(), half }
    }
}
