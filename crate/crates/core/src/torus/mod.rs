//! Grids, periodic fields and finite-difference operators on the flat torus.

mod field;
mod grid;
pub mod io;
mod ops;

pub use field::{convexity, convexity_with_tol, Convexity, QuasiPeriodicConvex, ScalarField, CONVEXITY_TOL};
pub use grid::PeriodicGrid;
pub use ops::{
    ddc, discrete_hessian, hessian_of, laplacian, monge_ampere, trace_norm, MatrixField, MongeAmpereMeasure, Sym2,
    DDC_SCALE, MA_CONVEXITY_TOL,
};
pub(crate) use field::curvature_resolution;
pub(crate) use ops::{hessian_at, monge_ampere_unchecked};
