use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on the unit torus ℝⁿ/ℤⁿ with `n` nodes per axis.
///
/// Nodes sit at `x = i·h` for `i ∈ [0, N)` on each axis. Storage is
/// row-major: in two dimensions node `(i, j)` lives at `i·N + j`, with `i`
/// indexing the first coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PeriodicGrid {
    dim: usize,
    n: usize,
}

impl PeriodicGrid {
    pub const MIN_RESOLUTION: usize = 8;

    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDim(dim));
        }
        if n < Self::MIN_RESOLUTION {
            return Err(Error::GridTooSmall(n));
        }
        Ok(Self { dim, n })
    }

    pub fn line(n: usize) -> Result<Self> {
        Self::new(1, n)
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(2, n)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nodes per axis.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Volume of one cell, `hⁿ`.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Total node count `Nⁿ`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Reduce an arbitrary axis index modulo N.
    #[inline]
    pub fn wrap(&self, i: isize) -> usize {
        i.rem_euclid(self.n as isize) as usize
    }

    /// Flat index of an axis multi-index; the second entry is ignored in 1D.
    #[inline]
    pub fn index(&self, i: isize, j: isize) -> usize {
        match self.dim {
            1 => self.wrap(i),
            _ => self.wrap(i) * self.n + self.wrap(j),
        }
    }

    /// Axis multi-index of a flat index (`[i, 0]` in 1D).
    #[inline]
    pub fn multi_index(&self, k: usize) -> [usize; 2] {
        match self.dim {
            1 => [k, 0],
            _ => [k / self.n, k % self.n],
        }
    }

    /// Coordinates of a node in the fundamental domain `[0,1)ⁿ`.
    #[inline]
    pub fn coord(&self, k: usize) -> [f64; 2] {
        let [i, j] = self.multi_index(k);
        let h = self.spacing();
        match self.dim {
            1 => [i as f64 * h, 0.0],
            _ => [i as f64 * h, j as f64 * h],
        }
    }

    /// Flat index of the node nearest to a point (coordinates taken mod 1).
    pub fn nearest_node(&self, p: [f64; 2]) -> usize {
        let n = self.n as f64;
        let i = (p[0] * n).round() as isize;
        let j = (p[1] * n).round() as isize;
        self.index(i, j)
    }

    /// Neighbour offsets along the coordinate axes.
    pub fn axis_offsets(&self) -> &'static [[isize; 2]] {
        match self.dim {
            1 => &[[1, 0]],
            _ => &[[1, 0], [0, 1]],
        }
    }

    /// Flat index of `k` shifted by an axis offset.
    #[inline]
    pub fn shifted(&self, k: usize, d: [isize; 2]) -> usize {
        let [i, j] = self.multi_index(k);
        self.index(i as isize + d[0], j as isize + d[1])
    }

    /// Squared flat-torus distance between two points.
    pub fn torus_dist2(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let mut s = 0.0;
        for ax in 0..self.dim {
            let d = a[ax] - b[ax];
            let d = d - d.round();
            s += d * d;
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_and_bad_dims() {
        assert!(matches!(PeriodicGrid::line(3), Err(Error::GridTooSmall(3))));
        assert!(matches!(PeriodicGrid::new(3, 16), Err(Error::UnsupportedDim(3))));
        assert!(PeriodicGrid::line(8).is_ok());
    }

    #[test]
    fn wrap_is_exact() {
        let g = PeriodicGrid::square(16).unwrap();
        assert_eq!(g.index(-1, 16), g.index(15, 0));
        assert_eq!(g.index(33, -17), g.index(1, 15));
        for k in 0..g.len() {
            let [i, j] = g.multi_index(k);
            assert_eq!(g.index(i as isize, j as isize), k);
        }
    }

    #[test]
    fn torus_distance_wraps() {
        let g = PeriodicGrid::square(16).unwrap();
        let d2 = g.torus_dist2([0.05, 0.95], [0.95, 0.05]);
        assert!((d2 - 0.02).abs() < 1e-14);
    }
}
