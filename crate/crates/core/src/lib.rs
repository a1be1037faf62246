//! Numerical laboratory for the asymptotics of solutions to fully nonlinear
//! elliptic equations outside a disk.

// Negated comparisons are NaN guards.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod elliptic;
pub mod expansion;
pub mod fit;
pub mod grid;
pub mod linalg;
pub mod nonlinear;
pub mod qcmap;

pub use expansion::{BootstrapSchedule, DivergenceEstimate, ExpansionCoefficients, LaurentCoefficients};
pub use fit::{DecayFit, DecaySample};
pub use grid::{
    build_grid, kelvin_point, AnnularGrid, GridError, GridSpec, PlanarMapping, ScalarField, Spacing, StencilOrder,
    SymMatrixField,
};
pub use linalg::Sym2;
