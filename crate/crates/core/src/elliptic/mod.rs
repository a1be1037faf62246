//! Linear uniformly elliptic Dirichlet problems `a_ij u_ij = f` on annuli and
//! the logarithmic Newtonian potential.

mod potential;
mod sparse;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GridError, ScalarField, SymMatrixField};
use crate::linalg::Sym2;

pub use potential::{newtonian_potential, potential_growth, GrowthFit, Potential};
pub use sparse::DirichletOperator;

#[derive(Debug, Error)]
pub enum EllipticError {
    #[error("not elliptic: minimum eigenvalue {min_eigenvalue:e} at node {node}")]
    NotElliptic { node: usize, min_eigenvalue: f64 },
    #[error("singular system: {detail}")]
    SingularSystem { detail: String },
    #[error("target ({x}, {y}) lies within one radial cell outside the source annulus")]
    TargetUnresolved { x: f64, y: f64 },
    #[error("boundary data has {got} values, expected {expected}")]
    BoundaryLength { expected: usize, got: usize },
    #[error("sparse backend: {0}")]
    Backend(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Global eigenvalue bounds of a coefficient field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticityConstants {
    pub lambda: f64,
    pub big_lambda: f64,
    /// `Λ / λ`.
    pub gamma: f64,
    /// Largest per-node eigenvalue ratio; never exceeds `gamma`.
    pub max_nodal_ratio: f64,
}

/// Per-node eigenvalue extremes reduced to global bounds.
pub fn ellipticity_constants(a: &[Sym2]) -> Result<EllipticityConstants, EllipticError> {
    let mut lambda = f64::INFINITY;
    let mut big_lambda = f64::NEG_INFINITY;
    let mut max_nodal_ratio: f64 = 1.0;
    for (node, m) in a.iter().enumerate() {
        let (lo, hi) = m.eigenvalues();
        if !(lo > 0.0) {
            return Err(EllipticError::NotElliptic { node, min_eigenvalue: lo });
        }
        lambda = lambda.min(lo);
        big_lambda = big_lambda.max(hi);
        max_nodal_ratio = max_nodal_ratio.max(hi / lo);
    }
    Ok(EllipticityConstants { lambda, big_lambda, gamma: big_lambda / lambda, max_nodal_ratio })
}

/// Coefficient field with its ellipticity constants.
#[derive(Clone, Debug)]
pub struct LinearCoefficients {
    a: SymMatrixField,
    constants: EllipticityConstants,
}

impl LinearCoefficients {
    pub fn new(a: SymMatrixField) -> Result<Self, EllipticError> {
        let constants = ellipticity_constants(a.values())?;
        Ok(LinearCoefficients { a, constants })
    }

    pub fn field(&self) -> &SymMatrixField {
        &self.a
    }
    pub fn constants(&self) -> EllipticityConstants {
        self.constants
    }
    pub fn lambda(&self) -> f64 {
        self.constants.lambda
    }
    pub fn big_lambda(&self) -> f64 {
        self.constants.big_lambda
    }
    pub fn gamma(&self) -> f64 {
        self.constants.gamma
    }
}

/// Solves `a_ij u_ij = f` with `u = g_inner` on the inner ring and `u = g_outer` on the outer ring.
///
/// Values of `f` on the boundary rings are ignored.
pub fn solve_linear_dirichlet(
    a: &LinearCoefficients,
    f: &ScalarField,
    g_inner: &[f64],
    g_outer: &[f64],
) -> Result<ScalarField, EllipticError> {
    let grid = a.field().grid();
    if f.grid() != grid {
        return Err(GridError::GridMismatch.into());
    }
    let op = DirichletOperator::new(grid)?;
    solve_with(&op, a.field().values(), f.values(), g_inner, g_outer)
}

/// Same as [`solve_linear_dirichlet`] with a prebuilt operator.
pub fn solve_with(
    op: &DirichletOperator,
    a: &[Sym2],
    f: &[f64],
    g_inner: &[f64],
    g_outer: &[f64],
) -> Result<ScalarField, EllipticError> {
    let grid = op.grid();
    let nt = grid.n_theta();
    for g in [g_inner, g_outer] {
        if g.len() != nt {
            return Err(EllipticError::BoundaryLength { expected: nt, got: g.len() });
        }
    }
    let mut rhs = f.to_vec();
    let last = grid.n_r() - 1;
    rhs[..nt].copy_from_slice(g_inner);
    rhs[last * nt..].copy_from_slice(g_outer);
    let x = op.solve(a, &rhs)?;
    Ok(ScalarField::new(grid.clone(), x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Spacing};

    #[test]
    fn constants_of_simple_fields() {
        let c = ellipticity_constants(&[Sym2::IDENTITY; 4]).unwrap();
        assert_eq!((c.lambda, c.big_lambda, c.gamma), (1.0, 1.0, 1.0));
        let c = ellipticity_constants(&[Sym2::diag(1.0, 3.0); 4]).unwrap();
        assert_eq!((c.lambda, c.big_lambda, c.gamma), (1.0, 3.0, 3.0));
        assert!(matches!(
            ellipticity_constants(&[Sym2::IDENTITY, Sym2::diag(1.0, 0.0)]),
            Err(EllipticError::NotElliptic { node: 1, .. })
        ));
    }

    #[test]
    fn laplace_recovers_quadratic() {
        let g = build_grid(1.0, 4.0, 24, 32, Spacing::LogRadial).unwrap();
        let exact = ScalarField::from_fn(g.clone(), |x| x[0] * x[0] + x[1] * x[1]).unwrap();
        let a = LinearCoefficients::new(SymMatrixField::uniform(g.clone(), Sym2::IDENTITY)).unwrap();
        let f = ScalarField::from_fn(g.clone(), |_| 4.0).unwrap();
        let u = solve_linear_dirichlet(&a, &f, exact.ring(0), exact.ring(g.n_r() - 1)).unwrap();
        let err = u.axpby(1.0, &exact, -1.0).unwrap().max_abs();
        assert!(err < 1e-11, "{err}");
    }

    #[test]
    fn boundary_length_is_checked() {
        let g = build_grid(1.0, 4.0, 8, 16, Spacing::LogRadial).unwrap();
        let a = LinearCoefficients::new(SymMatrixField::uniform(g.clone(), Sym2::IDENTITY)).unwrap();
        let f = ScalarField::zeros(g);
        assert!(matches!(
            solve_linear_dirichlet(&a, &f, &[0.0; 3], &[0.0; 16]),
            Err(EllipticError::BoundaryLength { .. })
        ));
    }
}
