use std::sync::Arc;

use super::{AnnularGrid, GridError};
use crate::linalg::Sym2;

fn check_values(grid: &AnnularGrid, values: &[f64]) -> Result<(), GridError> {
    if values.len() != grid.len() {
        return Err(GridError::LengthMismatch { expected: grid.len(), got: values.len() });
    }
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(GridError::NonFinite { index }),
        None => Ok(()),
    }
}

/// Real values per node, radial-then-angular order.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Arc<AnnularGrid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<AnnularGrid>, values: Vec<f64>) -> Result<Self, GridError> {
        check_values(&grid, &values)?;
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: Arc<AnnularGrid>) -> Self {
        let values = vec![0.0; grid.len()];
        ScalarField { grid, values }
    }

    /// Samples `f(x)` at every node.
    pub fn from_fn(grid: Arc<AnnularGrid>, f: impl Fn([f64; 2]) -> f64) -> Result<Self, GridError> {
        let values = (0..grid.n_r())
            .flat_map(|i| (0..grid.n_theta()).map(move |j| (i, j)))
            .map(|(i, j)| f(grid.point(i, j)))
            .collect();
        Self::new(grid, values)
    }

    /// Samples `f(r, θ)` at every node.
    pub fn from_polar_fn(grid: Arc<AnnularGrid>, f: impl Fn(f64, f64) -> f64) -> Result<Self, GridError> {
        let values = (0..grid.n_r())
            .flat_map(|i| (0..grid.n_theta()).map(move |j| (i, j)))
            .map(|(i, j)| f(grid.radius(i), grid.theta(j)))
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<AnnularGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }
    pub fn ring(&self, i: usize) -> &[f64] {
        let n = self.grid.n_theta();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Pointwise `a·self + b·other`.
    pub fn axpby(&self, a: f64, other: &ScalarField, b: f64) -> Result<ScalarField, GridError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        ScalarField::new(self.grid.clone(), values)
    }

    /// Pointwise `self - f(x)`.
    pub fn minus_fn(&self, f: impl Fn([f64; 2]) -> f64) -> Result<ScalarField, GridError> {
        let g = &self.grid;
        let values = (0..g.len())
            .map(|k| {
                let (i, j) = g.ring_angle(k);
                self.values[k] - f(g.point(i, j))
            })
            .collect();
        ScalarField::new(g.clone(), values)
    }
}

/// `w = (p, q)` per node.
#[derive(Clone, Debug)]
pub struct PlanarMapping {
    grid: Arc<AnnularGrid>,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl PlanarMapping {
    pub fn new(grid: Arc<AnnularGrid>, p: Vec<f64>, q: Vec<f64>) -> Result<Self, GridError> {
        check_values(&grid, &p)?;
        check_values(&grid, &q)?;
        Ok(PlanarMapping { grid, p, q })
    }

    pub fn from_fn(grid: Arc<AnnularGrid>, f: impl Fn([f64; 2]) -> [f64; 2]) -> Result<Self, GridError> {
        let (p, q) = (0..grid.len())
            .map(|k| {
                let (i, j) = grid.ring_angle(k);
                let w = f(grid.point(i, j));
                (w[0], w[1])
            })
            .unzip();
        Self::new(grid, p, q)
    }

    pub fn grid(&self) -> &Arc<AnnularGrid> {
        &self.grid
    }
    pub fn p(&self) -> &[f64] {
        &self.p
    }
    pub fn q(&self) -> &[f64] {
        &self.q
    }
    pub fn at(&self, i: usize, j: usize) -> [f64; 2] {
        let k = self.grid.index(i, j);
        [self.p[k], self.q[k]]
    }

    /// `(q, p)`.
    pub fn swapped(&self) -> PlanarMapping {
        PlanarMapping { grid: self.grid.clone(), p: self.q.clone(), q: self.p.clone() }
    }

    /// Each component as a scalar field.
    pub fn components(&self) -> (ScalarField, ScalarField) {
        (
            ScalarField { grid: self.grid.clone(), values: self.p.clone() },
            ScalarField { grid: self.grid.clone(), values: self.q.clone() },
        )
    }
}

/// Symmetric 2×2 matrix per node.
#[derive(Clone, Debug)]
pub struct SymMatrixField {
    grid: Arc<AnnularGrid>,
    values: Vec<Sym2>,
}

impl SymMatrixField {
    pub fn new(grid: Arc<AnnularGrid>, values: Vec<Sym2>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(index) = values.iter().position(|m| !m.is_finite()) {
            return Err(GridError::NonFinite { index });
        }
        Ok(SymMatrixField { grid, values })
    }

    pub fn uniform(grid: Arc<AnnularGrid>, m: Sym2) -> Self {
        let values = vec![m; grid.len()];
        SymMatrixField { grid, values }
    }

    pub fn from_fn(grid: Arc<AnnularGrid>, f: impl Fn([f64; 2]) -> Sym2) -> Result<Self, GridError> {
        let values = (0..grid.len())
            .map(|k| {
                let (i, j) = grid.ring_angle(k);
                f(grid.point(i, j))
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<AnnularGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[Sym2] {
        &self.values
    }
    pub fn at(&self, i: usize, j: usize) -> Sym2 {
        self.values[self.grid.index(i, j)]
    }
    pub fn m11(&self) -> Vec<f64> {
        self.values.iter().map(|m| m.m11).collect()
    }
    pub fn m12(&self) -> Vec<f64> {
        self.values.iter().map(|m| m.m12).collect()
    }
    pub fn m22(&self) -> Vec<f64> {
        self.values.iter().map(|m| m.m22).collect()
    }
    pub fn trace(&self) -> ScalarField {
        ScalarField { grid: self.grid.clone(), values: self.values.iter().map(Sym2::trace).collect() }
    }
}

/// Derivatives `(p₁, p₂, q₁, q₂)` of a planar mapping per node.
#[derive(Clone, Debug)]
pub struct MappingJacobian {
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
}

impl MappingJacobian {
    pub fn from_fn(grid: &AnnularGrid, f: impl Fn([f64; 2]) -> [f64; 4]) -> Self {
        let mut jac = MappingJacobian {
            p1: Vec::with_capacity(grid.len()),
            p2: Vec::with_capacity(grid.len()),
            q1: Vec::with_capacity(grid.len()),
            q2: Vec::with_capacity(grid.len()),
        };
        for k in 0..grid.len() {
            let (i, j) = grid.ring_angle(k);
            let [a, b, c, d] = f(grid.point(i, j));
            jac.p1.push(a);
            jac.p2.push(b);
            jac.q1.push(c);
            jac.q2.push(d);
        }
        jac
    }

    pub fn len(&self) -> usize {
        self.p1.len()
    }
    pub fn is_empty(&self) -> bool {
        self.p1.is_empty()
    }
    pub fn node(&self, k: usize) -> [f64; 4] {
        [self.p1[k], self.p2[k], self.q1[k], self.q2[k]]
    }
}
