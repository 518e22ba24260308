//! Discrete Legendre–Fenchel transform on quasi-periodic functions.
//!
//! Primal samples live on the extended grid `[−1, 2)ⁿ` (one period of
//! padding per side, enough because every slope in `[0,1)ⁿ` of a
//! quasi-periodic convex function is attained there); dual samples live on
//! the fundamental domain. Lines are transformed in linear time by walking
//! the lower convex hull; 2D transforms factor axis by axis.

use rayon::prelude::*;

use crate::torus::{PeriodicGrid, QuasiPeriodicConvex, ScalarField};

/// Dual function plus the discrete subgradient selection.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreResult {
    pub dual: QuasiPeriodicConvex,
    /// Extended-domain index `[k₁, k₂]` (each in `[−N, 2N)`) of the primal
    /// node attaining the sup at every dual node; `k₂ = 0` in 1D. Ties go
    /// to the smallest index.
    pub argmax: Vec<[isize; 2]>,
}

/// Extended-grid line: abscissae `k·h`, `k ∈ [−N, 2N)`, ordinates
/// `x²/2 + u[k mod N]`.
struct ExtendedLine<'a> {
    u: &'a [f64],
    h: f64,
}

impl ExtendedLine<'_> {
    #[inline]
    fn n(&self) -> isize {
        self.u.len() as isize
    }

    #[inline]
    fn x(&self, k: isize) -> f64 {
        k as f64 * self.h
    }

    #[inline]
    fn y(&self, k: isize) -> f64 {
        let x = self.x(k);
        0.5 * x * x + self.u[k.rem_euclid(self.n()) as usize]
    }

    #[inline]
    fn slope(&self, a: isize, b: isize) -> f64 {
        (self.y(b) - self.y(a)) / (self.x(b) - self.x(a))
    }

    /// Vertices of the lower convex hull, ascending; collinear points dropped.
    fn lower_hull(&self) -> Vec<isize> {
        let n = self.n();
        let mut hull: Vec<isize> = Vec::with_capacity(3 * n as usize);
        for k in -n..2 * n {
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                if self.slope(a, b) >= self.slope(b, k) {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(k);
        }
        hull
    }
}

/// Transform one periodic line: returns the periodic part of the dual at
/// `y_j = j·h`, `j ∈ [0, N)`, and the maximizing extended index.
pub(crate) fn lft_line(u: &[f64], h: f64) -> (Vec<f64>, Vec<isize>) {
    let line = ExtendedLine { u, h };
    let hull = line.lower_hull();
    let n = u.len();
    let mut dual = Vec::with_capacity(n);
    let mut arg = Vec::with_capacity(n);
    let mut p = 0usize;
    for j in 0..n {
        let y = j as f64 * h;
        while p + 1 < hull.len() && line.slope(hull[p], hull[p + 1]) < y {
            p += 1;
        }
        let k = hull[p];
        let psi = line.x(k) * y - line.y(k);
        dual.push(psi - 0.5 * y * y);
        arg.push(k);
    }
    (dual, arg)
}

/// Lower hull of the extended samples evaluated back at the nodes of the
/// fundamental domain (periodic part returned).
fn hull_line(u: &[f64], h: f64) -> Vec<f64> {
    let line = ExtendedLine { u, h };
    let hull = line.lower_hull();
    let n = u.len() as isize;
    let mut out = Vec::with_capacity(u.len());
    let mut p = 0usize;
    for k in 0..n {
        while hull[p + 1] < k {
            p += 1;
        }
        let (a, b) = (hull[p], hull[p + 1]);
        let x = line.x(k);
        let v = if k == a {
            line.y(a)
        } else if k == b {
            line.y(b)
        } else {
            let w = (k - a) as f64 / (b - a) as f64;
            (1.0 - w) * line.y(a) + w * line.y(b)
        };
        out.push(v - 0.5 * x * x);
    }
    out
}

/// Legendre transform of samples `|x|²/2 + u` (convexity not required).
pub fn lft_samples(u: &ScalarField) -> LegendreResult {
    let g = *u.grid();
    let h = g.spacing();
    let n = g.n();
    match g.dim() {
        1 => {
            let (dual, arg) = lft_line(u.values(), h);
            LegendreResult {
                dual: QuasiPeriodicConvex::new_unchecked(ScalarField::from_vec(g, dual)),
                argmax: arg.into_iter().map(|k| [k, 0]).collect(),
            }
        }
        _ => {
            // rows: transform along the second axis for every first index
            let rows: Vec<(Vec<f64>, Vec<isize>)> =
                u.values().par_chunks(n).map(|row| lft_line(row, h)).collect();
            // columns: transform −w along the first axis for every dual y₂
            let cols: Vec<(Vec<f64>, Vec<isize>)> = (0..n)
                .into_par_iter()
                .map(|j2| {
                    let c: Vec<f64> = rows.iter().map(|(w, _)| -w[j2]).collect();
                    lft_line(&c, h)
                })
                .collect();
            let mut dual = vec![0.0; g.len()];
            let mut argmax = vec![[0isize; 2]; g.len()];
            for (j2, (z, a1)) in cols.iter().enumerate() {
                for j1 in 0..n {
                    let k = j1 * n + j2;
                    dual[k] = z[j1];
                    let k1 = a1[j1];
                    let k2 = rows[k1.rem_euclid(n as isize) as usize].1[j2];
                    argmax[k] = [k1, k2];
                }
            }
            LegendreResult { dual: QuasiPeriodicConvex::new_unchecked(ScalarField::from_vec(g, dual)), argmax }
        }
    }
}

/// Legendre transform `φ*(y) = max_x x·y − φ(x)` over the extended grid.
pub fn lft(phi: &QuasiPeriodicConvex) -> LegendreResult {
    lft_samples(phi.periodic())
}

/// Largest discretely convex function below `|x|²/2 + f`.
///
/// In 1D the exact lower hull of the extended samples is evaluated at the
/// nodes; in 2D the double transform over the grid is used, which agrees
/// with the hull up to O(h).
pub fn convexify(f: &ScalarField) -> QuasiPeriodicConvex {
    let g = *f.grid();
    match g.dim() {
        1 => QuasiPeriodicConvex::new_unchecked(ScalarField::from_vec(g, hull_line(f.values(), g.spacing()))),
        _ => lft(&lft_samples(f).dual).dual,
    }
}

/// `|‖φ₁* − φ₂*‖_∞ − ‖φ₁ − φ₂‖_∞|`.
pub fn isometry_defect(phi1: &QuasiPeriodicConvex, phi2: &QuasiPeriodicConvex) -> f64 {
    let d_primal = phi1.periodic().sup_dist(phi2.periodic());
    let d_dual = lft(phi1).dual.periodic().sup_dist(lft(phi2).dual.periodic());
    (d_dual - d_primal).abs()
}

/// Conjugate of `|y|²/2 + u` at an arbitrary point, by brute force over
/// the extended grid. Used where the evaluation point is off-grid.
pub fn conjugate_at(u: &ScalarField, x: [f64; 2]) -> f64 {
    let g: PeriodicGrid = *u.grid();
    let n = g.n() as isize;
    let h = g.spacing();
    let v = u.values();
    match g.dim() {
        1 => (-n..2 * n)
            .map(|k| {
                let y = k as f64 * h;
                x[0] * y - 0.5 * y * y - v[g.wrap(k)]
            })
            .fold(f64::NEG_INFINITY, f64::max),
        _ => (-n..2 * n)
            .into_par_iter()
            .map(|k1| {
                let y1 = k1 as f64 * h;
                let mut best = f64::NEG_INFINITY;
                for k2 in -n..2 * n {
                    let y2 = k2 as f64 * h;
                    let val = x[0] * y1 + x[1] * y2 - 0.5 * (y1 * y1 + y2 * y2) - v[g.index(k1, k2)];
                    best = best.max(val);
                }
                best
            })
            .reduce(|| f64::NEG_INFINITY, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::convexity;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// O(N²) reference: direct sup over the extended grid.
    fn brute(u: &ScalarField) -> Vec<f64> {
        let g = *u.grid();
        (0..g.len())
            .map(|k| {
                let y = g.coord(k);
                conjugate_at(u, y) - 0.5 * (y[0] * y[0] + y[1] * y[1])
            })
            .collect()
    }

    fn smooth_convex(g: PeriodicGrid, a: f64, b: f64, phase: f64) -> ScalarField {
        ScalarField::from_fn(g, |x| {
            a * (2.0 * PI * (x[0] + phase)).cos() + b * (4.0 * PI * (x[0] + x[1] - phase)).sin() / 4.0
        })
    }

    #[test]
    fn quadratic_is_self_dual() {
        let g = PeriodicGrid::line(64).unwrap();
        let r = lft(&QuasiPeriodicConvex::quadratic(g));
        assert!(r.dual.periodic().sup_norm() < 1e-15);
        for (j, a) in r.argmax.iter().enumerate() {
            assert_eq!(a[0], j as isize);
        }
    }

    #[test]
    fn constant_shift_moves_dual_down() {
        let g = PeriodicGrid::square(16).unwrap();
        let u = smooth_convex(g, 0.01, 0.01, 0.2);
        let a = lft_samples(&u);
        let b = lft_samples(&u.add_constant(0.75));
        for (x, y) in a.dual.periodic().values().iter().zip(b.dual.periodic().values()) {
            assert!((x - 0.75 - y).abs() < 1e-14);
        }
    }

    #[test]
    fn fast_matches_brute_force_2d() {
        let g = PeriodicGrid::square(16).unwrap();
        let u = smooth_convex(g, 0.015, 0.01, 0.37);
        let fast = lft_samples(&u);
        for (a, b) in fast.dual.periodic().values().iter().zip(brute(&u)) {
            assert!((a - b).abs() < 1e-12);
        }
        // the reported argmax attains the sup
        let n = g.n() as isize;
        for (k, am) in fast.argmax.iter().enumerate() {
            assert!(am.iter().all(|&c| (-n..2 * n).contains(&c)));
            let y = g.coord(k);
            let h = g.spacing();
            let x = [am[0] as f64 * h, am[1] as f64 * h];
            let val = x[0] * y[0] + x[1] * y[1] - 0.5 * (x[0] * x[0] + x[1] * x[1]) - u.at(am[0], am[1]);
            let psi = fast.dual.periodic().values()[k] + 0.5 * (y[0] * y[0] + y[1] * y[1]);
            assert!((val - psi).abs() < 1e-12);
        }
    }

    #[test]
    fn involution_defect_is_first_order() {
        let defect = |n: usize| {
            let g = PeriodicGrid::line(n).unwrap();
            let phi = QuasiPeriodicConvex::new(ScalarField::from_fn(g, |x| 0.02 * (2.0 * PI * x[0]).cos())).unwrap();
            let back = lft(&lft(&phi).dual).dual;
            back.periodic().sup_dist(phi.periodic())
        };
        let (d1, d2) = (defect(128), defect(256));
        assert!(d2 <= 5.0 / 256.0);
        // doubling N shrinks the defect by a factor between 1 and 4
        assert!(d2 <= d1 && d2 >= d1 / 4.0 - 1e-15, "{d1} {d2}");
    }

    #[test]
    fn dual_passes_convexity_check() {
        let g = PeriodicGrid::square(32).unwrap();
        let u = ScalarField::from_fn(g, |x| 0.3 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).sin());
        let dual = lft_samples(&u).dual;
        let c = convexity(dual.periodic());
        assert!(c.min >= -c.tolerance);
    }

    #[test]
    fn convexify_is_below_and_idempotent() {
        let g = PeriodicGrid::square(16).unwrap();
        let f = ScalarField::from_fn(g, |x| 0.2 * (2.0 * PI * x[0]).cos() + 0.1 * (2.0 * PI * x[1]).sin());
        let c = convexify(&f);
        for (a, b) in c.periodic().values().iter().zip(f.values()) {
            assert!(*a <= b + 1e-10);
        }
        let cc = convexify(c.periodic());
        assert!(cc.periodic().sup_dist(c.periodic()) < 1e-12);
    }

    proptest! {
        #[test]
        fn order_reversal(a in 0.0..0.02f64, shift in 0.0..0.5f64, bump in 0.0..0.01f64) {
            let g = PeriodicGrid::line(32).unwrap();
            let lo = ScalarField::from_fn(g, |x| a * (2.0 * PI * x[0]).cos());
            let hi = ScalarField::from_fn(g, |x| a * (2.0 * PI * x[0]).cos() + shift + bump * (2.0 * PI * x[0]).sin().powi(2));
            let dlo = lft_samples(&lo).dual;
            let dhi = lft_samples(&hi).dual;
            for (p, q) in dhi.periodic().values().iter().zip(dlo.periodic().values()) {
                prop_assert!(*p <= *q + 1e-15);
            }
        }

        #[test]
        fn fast_equals_brute_1d(c1 in -0.02..0.02f64, c2 in -0.004..0.004f64, s in 0.0..1.0f64) {
            let g = PeriodicGrid::line(48).unwrap();
            let u = ScalarField::from_fn(g, |x| c1 * (2.0 * PI * (x[0] + s)).cos() + c2 * (6.0 * PI * x[0]).sin());
            let fast = lft_samples(&u);
            for (a, b) in fast.dual.periodic().values().iter().zip(brute(&u)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
