use serde::{Deserialize, Serialize};

use super::grid::PeriodicGrid;
use crate::error::{Error, Result};

/// Absolute tolerance on second derivatives when deciding convexity.
pub const CONVEXITY_TOL: f64 = 1e-9;

/// Relative floating-point floor added to [`CONVEXITY_TOL`]: a second
/// difference of O(1) samples divided by h² cannot be resolved better than
/// a few ulps of the samples over h².
const ROUNDOFF_FLOOR: f64 = 64.0 * f64::EPSILON;

/// Smallest second difference of `u` distinguishable from roundoff.
pub(crate) fn curvature_resolution(u: &ScalarField) -> f64 {
    let h = u.grid().spacing();
    ROUNDOFF_FLOOR * (1.0 + u.sup_norm()) / (h * h)
}

/// Periodic samples, one per grid node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: PeriodicGrid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    /// Sample `f` at every node; `f` receives the node coordinates.
    pub fn from_fn(grid: PeriodicGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.coord(k))).collect();
        Self { grid, values }
    }

    /// Internal constructor for values produced by our own finite arithmetic.
    pub(crate) fn from_vec(grid: PeriodicGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at an axis multi-index with periodic wrap.
    #[inline]
    pub fn at(&self, i: isize, j: isize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &ScalarField) -> Self {
        assert_eq!(self.grid, other.grid, "axpy on mismatched grids");
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect();
        Self::from_vec(self.grid, values)
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    pub fn add_constant(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `‖self − other‖_∞`.
    pub fn sup_dist(&self, other: &ScalarField) -> f64 {
        assert_eq!(self.grid, other.grid, "distance between mismatched grids");
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Riemann sum `Σ v·hⁿ` in index order.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// A convex function of the form `φ(x) = |x|²/2 + u(x)` with `u` periodic.
///
/// Only `u` is stored; the quadratic part is handled analytically so that
/// quasi-periodicity is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiPeriodicConvex {
    periodic: ScalarField,
}

impl QuasiPeriodicConvex {
    /// Wrap `u`, checking that `|x|²/2 + u` is discretely convex.
    pub fn new(periodic: ScalarField) -> Result<Self> {
        let c = convexity(&periodic);
        if c.min < -c.tolerance {
            return Err(Error::NonConvexInput { node: c.node, value: c.min });
        }
        Ok(Self { periodic })
    }

    /// The quadratic `|x|²/2` itself.
    pub fn quadratic(grid: PeriodicGrid) -> Self {
        Self { periodic: ScalarField::zeros(grid) }
    }

    /// Wrap without checking; for outputs that are convex by construction
    /// (Legendre transforms, hulls) or states whose convexity is tracked
    /// separately.
    pub fn new_unchecked(periodic: ScalarField) -> Self {
        Self { periodic }
    }

    #[inline]
    pub fn periodic(&self) -> &ScalarField {
        &self.periodic
    }

    pub fn into_periodic(self) -> ScalarField {
        self.periodic
    }

    #[inline]
    pub fn grid(&self) -> &PeriodicGrid {
        self.periodic.grid()
    }

    /// Full value `|x|²/2 + u(x)` at node `k` of the fundamental domain.
    pub fn value(&self, k: usize) -> f64 {
        let x = self.grid().coord(k);
        0.5 * (x[0] * x[0] + x[1] * x[1]) + self.periodic.values()[k]
    }

    /// Add a constant to the potential.
    pub fn shifted(&self, c: f64) -> Self {
        Self { periodic: self.periodic.add_constant(c) }
    }
}

/// Outcome of the directional convexity scan.
#[derive(Debug, Clone, Copy)]
pub struct Convexity {
    /// Smallest normalized directional second derivative of `φ`.
    pub min: f64,
    /// Node where it occurs.
    pub node: usize,
    /// Threshold in force (absolute tolerance plus roundoff floor).
    pub tolerance: f64,
}

/// Directional convexity scan of `φ = |x|²/2 + u`.
///
/// Uses second differences along e₁ (1D) or e₁, e₂, e₁+e₂, e₁−e₂ (2D),
/// each normalized by the squared step so that the quadratic part
/// contributes exactly 1. Samples of a convex function always pass this
/// test, unlike a check on the eigenvalues of the centered Hessian, which
/// can be indefinite next to a crease.
pub fn convexity(u: &ScalarField) -> Convexity {
    convexity_with_tol(u, CONVEXITY_TOL)
}

pub fn convexity_with_tol(u: &ScalarField, tol: f64) -> Convexity {
    let g = u.grid();
    let h2 = g.spacing() * g.spacing();
    let tolerance = tol + curvature_resolution(u);
    let dirs: &[([isize; 2], f64)] = match g.dim() {
        1 => &[([1, 0], 1.0)],
        _ => &[([1, 0], 1.0), ([0, 1], 1.0), ([1, 1], 2.0), ([1, -1], 2.0)],
    };
    let v = u.values();
    let mut min = f64::INFINITY;
    let mut node = 0;
    for k in 0..g.len() {
        let [i, j] = g.multi_index(k);
        let (i, j) = (i as isize, j as isize);
        for &(d, len2) in dirs {
            let f = v[g.index(i + d[0], j + d[1])];
            let b = v[g.index(i - d[0], j - d[1])];
            let second = 1.0 + (f - 2.0 * v[k] + b) / (len2 * h2);
            if second < min {
                min = second;
                node = k;
            }
        }
    }
    Convexity { min, node, tolerance }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_wrong_length_and_nan() {
        let g = PeriodicGrid::line(8).unwrap();
        assert!(ScalarField::new(g, vec![0.0; 7]).is_err());
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(matches!(ScalarField::new(g, v), Err(Error::NonFinite(3))));
    }

    #[test]
    fn convexity_accepts_and_rejects() {
        let g = PeriodicGrid::line(64).unwrap();
        let ok = ScalarField::from_fn(g, |x| 0.02 * (2.0 * PI * x[0]).cos());
        assert!(QuasiPeriodicConvex::new(ok).is_ok());
        let bad = ScalarField::from_fn(g, |x| 0.05 * (2.0 * PI * x[0]).cos());
        assert!(matches!(QuasiPeriodicConvex::new(bad), Err(Error::NonConvexInput { .. })));
    }

    #[test]
    fn quadratic_is_convex_in_2d() {
        let g = PeriodicGrid::square(16).unwrap();
        let c = convexity(QuasiPeriodicConvex::quadratic(g).periodic());
        assert_eq!(c.min, 1.0);
    }
}
