use std::sync::Arc;

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::linalg::LuError;
use faer::sparse::{Argsort, Pair, SparseColMat, SymbolicSparseColMat};

use super::EllipticError;
use crate::grid::{AnnularGrid, HessianWeights};
use crate::linalg::Sym2;

const MAX_REFINEMENTS: usize = 3;

/// Discrete Dirichlet operator `u ↦ a : D²u` on interior rings, identity on boundary rings.
///
/// The sparsity pattern and its symbolic factorization are computed once and
/// reused for every coefficient field.
pub struct DirichletOperator {
    grid: Arc<AnnularGrid>,
    rows: Vec<HessianWeights>,
    symbolic: SymbolicSparseColMat<usize>,
    argsort: Argsort<usize>,
    symbolic_lu: SymbolicLu<usize>,
}

impl DirichletOperator {
    pub fn new(grid: &Arc<AnnularGrid>) -> Result<Self, EllipticError> {
        let n = grid.len();
        let mut rows = Vec::with_capacity(n);
        let mut pairs = Vec::new();
        for k in 0..n {
            let (i, j) = grid.ring_angle(k);
            let hw = if grid.is_boundary_ring(i) {
                HessianWeights { entries: vec![(k, Sym2::IDENTITY)] }
            } else {
                grid.hessian_weights(i, j)
            };
            pairs.extend(hw.entries.iter().map(|(c, _)| Pair::new(k, *c)));
            rows.push(hw);
        }
        let (symbolic, argsort) = SymbolicSparseColMat::try_new_from_indices(n, n, &pairs)
            .map_err(|e| EllipticError::Backend(format!("{e:?}")))?;
        let symbolic_lu = SymbolicLu::try_new(symbolic.rb()).map_err(|e| EllipticError::Backend(format!("{e:?}")))?;
        Ok(DirichletOperator { grid: grid.clone(), rows, symbolic, argsort, symbolic_lu })
    }

    pub fn grid(&self) -> &Arc<AnnularGrid> {
        &self.grid
    }

    fn row_value(&self, k: usize, a: &Sym2, w: &Sym2) -> f64 {
        if self.grid.is_boundary_ring(self.grid.ring_angle(k).0) {
            1.0
        } else {
            a.m11 * w.m11 + 2.0 * a.m12 * w.m12 + a.m22 * w.m22
        }
    }

    /// `(A x)_k` and `Σ |A_kl x_l|` per row.
    fn apply_with_magnitude(&self, a: &[Sym2], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        self.rows
            .iter()
            .enumerate()
            .map(|(k, hw)| {
                let mut s = 0.0;
                let mut m = 0.0;
                for (c, w) in &hw.entries {
                    let t = self.row_value(k, &a[k], w) * x[*c];
                    s += t;
                    m += t.abs();
                }
                (s, m)
            })
            .unzip()
    }

    /// Applies the operator with coefficients `a` (one per node).
    pub fn apply(&self, a: &[Sym2], x: &[f64]) -> Vec<f64> {
        self.apply_with_magnitude(a, x).0
    }

    /// Solves `A x = rhs`; `rhs` holds the equation right-hand side on
    /// interior rings and the Dirichlet values on boundary rings.
    ///
    /// Accepted when every row residual is at most `1e-10·(1 + ‖f‖∞)` or at
    /// the floating-point floor `64ε Σ|A_kl x_l|` of that row.
    pub fn solve(&self, a: &[Sym2], rhs: &[f64]) -> Result<Vec<f64>, EllipticError> {
        let n = self.grid.len();
        assert_eq!(a.len(), n);
        assert_eq!(rhs.len(), n);
        let mut values = Vec::with_capacity(self.argsort_len());
        for (k, hw) in self.rows.iter().enumerate() {
            for (_, w) in &hw.entries {
                values.push(self.row_value(k, &a[k], w));
            }
        }
        let mat = SparseColMat::new_from_argsort(self.symbolic.clone(), &self.argsort, &values)
            .map_err(|e| EllipticError::Backend(format!("{e:?}")))?;
        let lu = Lu::try_new_with_symbolic(self.symbolic_lu.clone(), mat.rb()).map_err(|e| match e {
            LuError::SymbolicSingular { index } => self.singular(index, "structurally singular pivot"),
            LuError::Generic(err) => EllipticError::Backend(format!("{err:?}")),
        })?;
        let solve = |b: &[f64]| -> Vec<f64> {
            let col = Col::<f64>::from_fn(n, |i| b[i]);
            let x = lu.solve(&col);
            (0..n).map(|i| x[i]).collect()
        };
        let mut x = solve(rhs);
        if let Some(k) = x.iter().position(|v| !v.is_finite()) {
            return Err(self.singular(k, "non-finite solution entry"));
        }
        let f_norm = (0..n)
            .filter(|&k| !self.grid.is_boundary_ring(self.grid.ring_angle(k).0))
            .fold(0.0f64, |m, k| m.max(rhs[k].abs()));
        let tol = 1e-10 * (1.0 + f_norm);
        for pass in 0..=MAX_REFINEMENTS {
            let (ax, mag) = self.apply_with_magnitude(a, &x);
            let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, v)| b - v).collect();
            let worst = r
                .iter()
                .zip(&mag)
                .enumerate()
                .filter(|(_, (ri, mi))| ri.abs() > tol.max(64.0 * f64::EPSILON * **mi))
                .map(|(k, (ri, _))| (k, ri.abs()))
                .fold(None, |acc: Option<(usize, f64)>, (k, v)| match acc {
                    Some((_, best)) if best >= v => acc,
                    _ => Some((k, v)),
                });
            match worst {
                None => return Ok(x),
                Some((k, v)) if pass == MAX_REFINEMENTS => {
                    return Err(self.singular(k, &format!("residual {v:e} exceeds {tol:e} after refinement")));
                }
                Some(_) => {
                    let dx = solve(&r);
                    for (xi, d) in x.iter_mut().zip(dx) {
                        *xi += d;
                    }
                }
            }
        }
        unreachable!()
    }

    fn argsort_len(&self) -> usize {
        self.rows.iter().map(|r| r.entries.len()).sum()
    }

    fn singular(&self, k: usize, what: &str) -> EllipticError {
        let (i, j) = self.grid.ring_angle(k.min(self.grid.len() - 1));
        EllipticError::SingularSystem {
            detail: format!("{what} at unknown {k} (ring {i}, r = {:.6}, angle index {j})", self.grid.radius(i)),
        }
    }
}
