//! Fully nonlinear operators `F(D²u)`, a damped Newton solver for Dirichlet
//! problems on annuli, and the radial Monge–Ampère reference family.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elliptic::{solve_with, DirichletOperator, EllipticError};
use crate::grid::{hessian, AnnularGrid, GridError, ScalarField, SymMatrixField};
use crate::linalg::Sym2;

/// Concrete operator families.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorKind {
    /// `det M − 1`.
    MongeAmpere,
    /// `arctan λ₁ + arctan λ₂ − θ`.
    SpecialLagrangian { theta: f64 },
    /// `tr M − rhs`.
    LinearTrace { rhs: f64 },
    /// `a : M − rhs` with constant symmetric `a`.
    LinearCustom { a: Sym2, rhs: f64 },
}

/// Operator with ellipticity constants valid for Hessians of norm at most `hessian_bound`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullyNonlinearSpec {
    pub kind: OperatorKind,
    pub lambda: f64,
    pub big_lambda: f64,
    pub hessian_bound: f64,
}

/// Default Hessian bound for the Monge–Ampère working range.
pub const MONGE_AMPERE_HESSIAN_BOUND: f64 = 4.0;

/// `det M = 1`; elliptic on the convex branch, where eigenvalues lie in `[1/M, M]`.
pub fn monge_ampere_spec() -> FullyNonlinearSpec {
    let m = MONGE_AMPERE_HESSIAN_BOUND;
    FullyNonlinearSpec { kind: OperatorKind::MongeAmpere, lambda: 1.0 / m, big_lambda: m, hessian_bound: m }
}

/// `arctan λ₁ + arctan λ₂ = θ`, `|θ| < π`.
pub fn special_lagrangian_spec(theta: f64) -> FullyNonlinearSpec {
    assert!(theta.abs() < PI, "special Lagrangian phase must satisfy |θ| < π");
    let m = MONGE_AMPERE_HESSIAN_BOUND;
    FullyNonlinearSpec {
        kind: OperatorKind::SpecialLagrangian { theta },
        lambda: 1.0 / (1.0 + m * m),
        big_lambda: 1.0,
        hessian_bound: m,
    }
}

pub fn linear_trace_spec(rhs: f64) -> FullyNonlinearSpec {
    FullyNonlinearSpec {
        kind: OperatorKind::LinearTrace { rhs },
        lambda: 1.0,
        big_lambda: 1.0,
        hessian_bound: f64::INFINITY,
    }
}

pub fn linear_custom_spec(a: Sym2, rhs: f64) -> FullyNonlinearSpec {
    let (lo, hi) = a.eigenvalues();
    FullyNonlinearSpec {
        kind: OperatorKind::LinearCustom { a, rhs },
        lambda: lo,
        big_lambda: hi,
        hessian_bound: f64::INFINITY,
    }
}

impl FullyNonlinearSpec {
    pub fn evaluate(&self, m: &Sym2) -> f64 {
        match self.kind {
            OperatorKind::MongeAmpere => m.det() - 1.0,
            // arg((1 + iλ₁)(1 + iλ₂)); both arctangents lie in (−π/2, π/2).
            OperatorKind::SpecialLagrangian { theta } => m.trace().atan2(1.0 - m.det()) - theta,
            OperatorKind::LinearTrace { rhs } => m.trace() - rhs,
            OperatorKind::LinearCustom { a, rhs } => a.m11 * m.m11 + 2.0 * a.m12 * m.m12 + a.m22 * m.m22 - rhs,
        }
    }

    /// Matrix of partial derivatives `∂F/∂M_ij`.
    pub fn derivative(&self, m: &Sym2) -> Sym2 {
        match self.kind {
            OperatorKind::MongeAmpere => m.cofactor(),
            // Σ vᵢvᵢᵀ/(1 + λᵢ²) = (I + M²)⁻¹, smooth through eigenvalue coalescence.
            OperatorKind::SpecialLagrangian { .. } => {
                Sym2::IDENTITY.add(&m.square()).inverse().expect("I + M² is positive definite")
            }
            OperatorKind::LinearTrace { .. } => Sym2::IDENTITY,
            OperatorKind::LinearCustom { a, .. } => a,
        }
    }

    /// Smallest eigenvalue of the linearization at `m`.
    pub fn min_ellipticity(&self, m: &Sym2) -> f64 {
        self.derivative(m).eigenvalues().0
    }
}

/// `(u, u′, u″)` of the radially symmetric convex solution of `det D²u = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialSample {
    pub u: f64,
    pub du: f64,
    pub d2u: f64,
}

/// `u′ = √(r² + a)`, `u″ = r/√(r² + a)`, `u = ½[r√(r² + a) + a log(r + √(r² + a))]`.
pub fn radial_ma_reference(a: f64, r: f64) -> RadialSample {
    let s = (r * r + a).sqrt();
    let log_term = if a == 0.0 { 0.0 } else { a * (r + s).ln() };
    RadialSample { u: 0.5 * (r * s + log_term), du: s, d2u: r / s }
}

/// Samples the radial reference on a grid.
pub fn radial_ma_field(grid: &Arc<AnnularGrid>, a: f64) -> ScalarField {
    ScalarField::from_polar_fn(grid.clone(), |r, _| radial_ma_reference(a, r).u).expect("finite reference")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-10, max_iters: 30, max_halvings: 30 }
    }
}

/// One accepted Newton step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonStep {
    pub iteration: usize,
    pub residual_before: f64,
    pub step_length: f64,
    pub residual_after: f64,
    pub min_ellipticity: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NewtonTrace {
    pub initial_residual: f64,
    pub final_residual: f64,
    pub steps: Vec<NewtonStep>,
    pub converged: bool,
}

impl NewtonTrace {
    pub fn iterations(&self) -> usize {
        self.steps.len()
    }
}

#[derive(Debug, Error)]
pub enum NewtonError {
    #[error("ellipticity lost at node {node} (min eigenvalue {min_eigenvalue:e}) after {} steps", .trace.steps.len())]
    EllipticityLost { node: usize, min_eigenvalue: f64, trace: NewtonTrace },
    #[error("no convergence in {} iterations (residual {:e})", .trace.steps.len(), .trace.final_residual)]
    MaxItersExceeded { trace: NewtonTrace },
    #[error("line search found no admissible decrease after {halvings} halvings (residual {:e})", .trace.final_residual)]
    LineSearchFailed { halvings: usize, trace: NewtonTrace },
    #[error("initial guess differs from the Dirichlet data by {mismatch:e}")]
    BoundaryMismatch { mismatch: f64 },
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Converged solution with its iteration history.
#[derive(Clone, Debug)]
pub struct NewtonSolution {
    pub u: ScalarField,
    pub trace: NewtonTrace,
}

fn interior(grid: &AnnularGrid) -> std::ops::Range<usize> {
    grid.n_theta()..grid.len() - grid.n_theta()
}

/// `F(D²u) − f` on interior rings, zero on boundary rings.
pub fn residual(spec: &FullyNonlinearSpec, u: &ScalarField, rhs: Option<&ScalarField>) -> Vec<f64> {
    let h = hessian(u);
    let g = u.grid();
    let mut r = vec![0.0; g.len()];
    for k in interior(g) {
        r[k] = spec.evaluate(&h.values()[k]) - rhs.map_or(0.0, |f| f.values()[k]);
    }
    r
}

/// Linearized coefficients `a_ij = F_{M_ij}(D²u)` at every node.
pub fn linearized_coefficients(spec: &FullyNonlinearSpec, u: &ScalarField) -> SymMatrixField {
    let h = hessian(u);
    let values = h.values().iter().map(|m| spec.derivative(m)).collect();
    SymMatrixField::new(u.grid().clone(), values).expect("derivative of finite Hessian is finite")
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// First interior node where the linearization fails to be positive definite.
fn ellipticity_violation(spec: &FullyNonlinearSpec, h: &SymMatrixField) -> Result<f64, (usize, f64)> {
    let mut min = f64::INFINITY;
    for k in interior(h.grid()) {
        let e = spec.min_ellipticity(&h.values()[k]);
        if !(e > 0.0) {
            return Err((k, e));
        }
        min = min.min(e);
    }
    Ok(min)
}

/// Damped Newton for `F(D²u) = f` with Dirichlet data; `u0` must match the data.
///
/// Each step solves `a_ij δ_ij = −(F(D²u) − f)` with zero boundary values and
/// takes the first `s ∈ {1, 1/2, …}` that keeps the linearization elliptic and
/// does not increase the residual max-norm.
pub fn newton_solve(
    spec: &FullyNonlinearSpec,
    g_inner: &[f64],
    g_outer: &[f64],
    u0: &ScalarField,
    rhs: Option<&ScalarField>,
    opts: &NewtonOptions,
) -> Result<NewtonSolution, NewtonError> {
    let grid = u0.grid().clone();
    let nt = grid.n_theta();
    let last = grid.n_r() - 1;
    let mismatch = u0
        .ring(0)
        .iter()
        .zip(g_inner)
        .chain(u0.ring(last).iter().zip(g_outer))
        .map(|(a, b)| (a - b).abs() / (1.0 + b.abs()))
        .fold(0.0, f64::max);
    if g_inner.len() != nt || g_outer.len() != nt || mismatch > 1e-12 {
        return Err(NewtonError::BoundaryMismatch { mismatch });
    }
    let op = DirichletOperator::new(&grid)?;
    let zeros = vec![0.0; nt];
    let mut u = u0.clone();
    let mut res = residual(spec, &u, rhs);
    let mut norm = max_abs(&res);
    let mut trace = NewtonTrace { initial_residual: norm, final_residual: norm, steps: Vec::new(), converged: false };
    loop {
        if norm <= opts.tol {
            trace.converged = true;
            return Ok(NewtonSolution { u, trace });
        }
        if trace.steps.len() >= opts.max_iters {
            return Err(NewtonError::MaxItersExceeded { trace });
        }
        let h = hessian(&u);
        let min_ellipticity = match ellipticity_violation(spec, &h) {
            Ok(e) => e,
            Err((node, min_eigenvalue)) => return Err(NewtonError::EllipticityLost { node, min_eigenvalue, trace }),
        };
        let a: Vec<Sym2> = h.values().iter().map(|m| spec.derivative(m)).collect();
        let neg: Vec<f64> = res.iter().map(|r| -r).collect();
        let delta = solve_with(&op, &a, &neg, &zeros, &zeros)?;
        let mut s = 1.0;
        let mut halvings = 0;
        loop {
            let trial = u.axpby(1.0, &delta, s)?;
            let th = hessian(&trial);
            if ellipticity_violation(spec, &th).is_ok() {
                let tres = residual(spec, &trial, rhs);
                let tnorm = max_abs(&tres);
                if tnorm <= norm {
                    trace.steps.push(NewtonStep {
                        iteration: trace.steps.len() + 1,
                        residual_before: norm,
                        step_length: s,
                        residual_after: tnorm,
                        min_ellipticity,
                    });
                    trace.final_residual = tnorm;
                    u = trial;
                    res = tres;
                    norm = tnorm;
                    break;
                }
            }
            halvings += 1;
            if halvings > opts.max_halvings {
                return Err(NewtonError::LineSearchFailed { halvings, trace });
            }
            s *= 0.5;
        }
    }
}

/// `base + h` with `h` harmonic and `base + h` equal to the Dirichlet data.
pub fn harmonic_lift(
    grid: &Arc<AnnularGrid>,
    base: impl Fn([f64; 2]) -> f64,
    g_inner: &[f64],
    g_outer: &[f64],
) -> Result<ScalarField, NewtonError> {
    let b = ScalarField::from_fn(grid.clone(), base)?;
    let last = grid.n_r() - 1;
    let hi: Vec<f64> = g_inner.iter().zip(b.ring(0)).map(|(g, v)| g - v).collect();
    let ho: Vec<f64> = g_outer.iter().zip(b.ring(last)).map(|(g, v)| g - v).collect();
    let op = DirichletOperator::new(grid)?;
    let ident = vec![Sym2::IDENTITY; grid.len()];
    let h = solve_with(&op, &ident, &vec![0.0; grid.len()], &hi, &ho)?;
    let mut u = b.axpby(1.0, &h, 1.0)?.into_values();
    // Boundary rings carry the data exactly.
    let nt = grid.n_theta();
    u[..nt].copy_from_slice(g_inner);
    u[last * nt..].copy_from_slice(g_outer);
    Ok(ScalarField::new(grid.clone(), u)?)
}

/// `½|x|²` lifted to the Dirichlet data.
pub fn default_initial_guess(
    grid: &Arc<AnnularGrid>,
    g_inner: &[f64],
    g_outer: &[f64],
) -> Result<ScalarField, NewtonError> {
    harmonic_lift(grid, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]), g_inner, g_outer)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eigen_sl(m: &Sym2, theta: f64) -> f64 {
        let (a, b) = m.eigenvalues();
        a.atan() + b.atan() - theta
    }

    #[test]
    fn monge_ampere_examples() {
        let s = monge_ampere_spec();
        assert_eq!(s.evaluate(&Sym2::IDENTITY), 0.0);
        assert_eq!(s.evaluate(&Sym2::diag(2.0, 0.5)), 0.0);
        assert_eq!(s.derivative(&Sym2::diag(2.0, 0.5)), Sym2::diag(0.5, 2.0));
    }

    #[test]
    fn special_lagrangian_examples() {
        let s = special_lagrangian_spec(PI / 2.0);
        assert!(s.evaluate(&Sym2::IDENTITY).abs() < 1e-15);
        assert!(s.evaluate(&Sym2::diag(2.0, 0.5)).abs() < 1e-15);
        let z = special_lagrangian_spec(0.0);
        for t in [0.0, 0.3, 5.0, -40.0] {
            assert!(z.evaluate(&Sym2::diag(t, -t)).abs() < 1e-15);
        }
        let m = Sym2::new(0.7, -1.3, 2.1);
        assert!((s.evaluate(&m) - eigen_sl(&m, PI / 2.0)).abs() < 1e-14);
    }

    #[test]
    fn special_lagrangian_derivative_matches_finite_difference() {
        let s = special_lagrangian_spec(1.0);
        for m in [Sym2::new(0.7, -1.3, 2.1), Sym2::IDENTITY, Sym2::new(1.0, 1e-12, 1.0)] {
            let d = s.derivative(&m);
            let h = 1e-6;
            let fd = |e: Sym2| (s.evaluate(&m.add(&e.scale(h))) - s.evaluate(&m.sub(&e.scale(h)))) / (2.0 * h);
            assert!((fd(Sym2::diag(1.0, 0.0)) - d.m11).abs() < 1e-8);
            assert!((fd(Sym2::diag(0.0, 1.0)) - d.m22).abs() < 1e-8);
            // Off-diagonal perturbation touches M12 and M21.
            assert!((fd(Sym2::new(0.0, 1.0, 0.0)) - 2.0 * d.m12).abs() < 1e-8);
        }
    }

    #[test]
    fn radial_reference_identities() {
        for a in [0.0, 1.0, 2.0, 7.5] {
            for r in [1.0, 1.7, 10.0, 300.0] {
                let s = radial_ma_reference(a, r);
                assert!((s.d2u * s.du / r - 1.0).abs() < 1e-14);
            }
        }
        assert_eq!(radial_ma_reference(0.0, 3.0).u, 4.5);
        let r: f64 = 1e4;
        let tail = radial_ma_reference(2.0, r).u - 0.5 * r * r - r.ln();
        assert!((tail - (0.5 + 2f64.ln())).abs() < 1e-7);
    }
}
