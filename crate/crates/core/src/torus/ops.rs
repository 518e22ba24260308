//! Finite-difference operators on periodic fields.

use rayon::prelude::*;

use super::field::{convexity_with_tol, QuasiPeriodicConvex, ScalarField};
use super::grid::PeriodicGrid;
use crate::error::{Error, Result};

/// Eigenvalue floor below which [`monge_ampere`] refuses its input.
pub const MA_CONVEXITY_TOL: f64 = 1e-6;

/// Scale turning the plain 5-point Laplacian into the discrete `dd^c`:
/// a unit-mass density `ρ` and a potential `u` combine as `ρ + DDC_SCALE·Δu`.
pub const DDC_SCALE: f64 = 1.0 / (4.0 * std::f64::consts::PI);

/// Symmetric 2×2 matrix (only `xx` is meaningful in 1D).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

/// Per-node symmetric matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    grid: PeriodicGrid,
    entries: Vec<Sym2>,
}

impl MatrixField {
    pub fn new(grid: PeriodicGrid, entries: Vec<Sym2>) -> Result<Self> {
        if entries.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: entries.len() });
        }
        Ok(Self { grid, entries })
    }

    /// Identity at every node.
    pub fn identity(grid: PeriodicGrid) -> Self {
        let yy = if grid.dim() == 2 { 1.0 } else { 0.0 };
        Self { grid, entries: vec![Sym2 { xx: 1.0, xy: 0.0, yy }; grid.len()] }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn entries(&self) -> &[Sym2] {
        &self.entries
    }

    pub fn trace(&self, k: usize) -> f64 {
        let m = self.entries[k];
        match self.grid.dim() {
            1 => m.xx,
            _ => m.xx + m.yy,
        }
    }

    pub fn det(&self, k: usize) -> f64 {
        let m = self.entries[k];
        match self.grid.dim() {
            1 => m.xx,
            _ => m.xx * m.yy - m.xy * m.xy,
        }
    }

    pub fn min_eig(&self, k: usize) -> f64 {
        let m = self.entries[k];
        match self.grid.dim() {
            1 => m.xx,
            _ => {
                let mean = 0.5 * (m.xx + m.yy);
                let r = (0.25 * (m.xx - m.yy).powi(2) + m.xy * m.xy).sqrt();
                mean - r
            }
        }
    }

    pub fn max_eig(&self, k: usize) -> f64 {
        let m = self.entries[k];
        match self.grid.dim() {
            1 => m.xx,
            _ => {
                let mean = 0.5 * (m.xx + m.yy);
                let r = (0.25 * (m.xx - m.yy).powi(2) + m.xy * m.xy).sqrt();
                mean + r
            }
        }
    }

    /// Smallest eigenvalue over all nodes.
    pub fn min_eigenvalue(&self) -> f64 {
        (0..self.entries.len()).map(|k| self.min_eig(k)).fold(f64::INFINITY, f64::min)
    }
}

/// Second differences of `u` at node `k`: `(D₁₁u, D₁₂u, D₂₂u)`.
#[inline]
pub(crate) fn second_differences(u: &ScalarField, k: usize) -> Sym2 {
    let g = u.grid();
    let inv_h2 = (g.n() * g.n()) as f64;
    let [i, j] = g.multi_index(k);
    let (i, j) = (i as isize, j as isize);
    let c = u.values()[k];
    let xx = (u.at(i + 1, j) - 2.0 * c + u.at(i - 1, j)) * inv_h2;
    if g.dim() == 1 {
        return Sym2 { xx, xy: 0.0, yy: 0.0 };
    }
    let yy = (u.at(i, j + 1) - 2.0 * c + u.at(i, j - 1)) * inv_h2;
    let xy = (u.at(i + 1, j + 1) - u.at(i + 1, j - 1) - u.at(i - 1, j + 1) + u.at(i - 1, j - 1))
        * 0.25
        * inv_h2;
    Sym2 { xx, xy, yy }
}

/// Hessian of `|x|²/2 + u` at node `k`.
#[inline]
pub(crate) fn hessian_at(u: &ScalarField, k: usize) -> Sym2 {
    let d = second_differences(u, k);
    let yy = if u.grid().dim() == 2 { 1.0 + d.yy } else { 0.0 };
    Sym2 { xx: 1.0 + d.xx, xy: d.xy, yy }
}

/// Determinant of the Hessian of `|x|²/2 + u` at node `k`.
#[inline]
pub(crate) fn hessian_det_at(u: &ScalarField, k: usize) -> f64 {
    let m = hessian_at(u, k);
    match u.grid().dim() {
        1 => m.xx,
        _ => m.xx * m.yy - m.xy * m.xy,
    }
}

/// Discrete Hessian of `φ = |x|²/2 + u`: identity plus centered second
/// differences of `u`, with the centered cross difference off the diagonal.
pub fn discrete_hessian(phi: &QuasiPeriodicConvex) -> MatrixField {
    hessian_of(phi.periodic())
}

/// [`discrete_hessian`] for an arbitrary periodic part.
pub fn hessian_of(u: &ScalarField) -> MatrixField {
    let g = *u.grid();
    let entries = (0..g.len()).into_par_iter().map(|k| hessian_at(u, k)).collect();
    MatrixField { grid: g, entries }
}

/// Monge–Ampère cell masses `max(det D²φ, 0)·hⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MongeAmpereMeasure {
    grid: PeriodicGrid,
    masses: Vec<f64>,
}

impl MongeAmpereMeasure {
    pub fn new(grid: PeriodicGrid, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: masses.len() });
        }
        if let Some(k) = masses.iter().position(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidArgument(format!("cell mass at node {k} is negative or non-finite")));
        }
        Ok(Self { grid, masses })
    }

    /// Lebesgue measure: every cell carries `hⁿ`.
    pub fn uniform(grid: PeriodicGrid) -> Self {
        Self { grid, masses: vec![grid.cell_volume(); grid.len()] }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }
}

/// Monge–Ampère measure of `φ`.
///
/// Errors with `NonConvexInput` when some directional second derivative of
/// `φ` falls below `−1e−6`; determinants that are slightly negative next
/// to creases are clamped to zero.
pub fn monge_ampere(phi: &QuasiPeriodicConvex) -> Result<MongeAmpereMeasure> {
    let c = convexity_with_tol(phi.periodic(), MA_CONVEXITY_TOL);
    if c.min < -c.tolerance {
        return Err(Error::NonConvexInput { node: c.node, value: c.min });
    }
    Ok(monge_ampere_unchecked(phi.periodic()))
}

pub(crate) fn monge_ampere_unchecked(u: &ScalarField) -> MongeAmpereMeasure {
    let g = *u.grid();
    let vol = g.cell_volume();
    let masses = (0..g.len()).into_par_iter().map(|k| hessian_det_at(u, k).max(0.0) * vol).collect();
    MongeAmpereMeasure { grid: g, masses }
}

/// Largest trace over all nodes.
pub fn trace_norm(field: &MatrixField) -> f64 {
    (0..field.entries.len()).map(|k| field.trace(k)).fold(0.0, f64::max)
}

/// Plain 5-point (3-point in 1D) Laplacian, periodic.
pub fn laplacian(u: &ScalarField) -> ScalarField {
    let g = *u.grid();
    let values = (0..g.len())
        .into_par_iter()
        .map(|k| {
            let d = second_differences(u, k);
            d.xx + d.yy
        })
        .collect();
    ScalarField::from_vec(g, values)
}

/// `DDC_SCALE·Δu`: the density of `dd^c u`.
pub fn ddc(u: &ScalarField) -> ScalarField {
    laplacian(u).scaled(DDC_SCALE)
}
