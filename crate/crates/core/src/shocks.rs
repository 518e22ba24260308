//! Shock loci, the Zel'dovich displacement map, the large-time tropical
//! limit and grid Voronoi/Delaunay tessellations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::Chart;
use crate::legendre::conjugate_at;
use crate::torus::{hessian_at, PeriodicGrid, QuasiPeriodicConvex, ScalarField};

/// Shock threshold in units of `h`.
pub const SHOCK_FACTOR: f64 = 10.0;

/// Non-differentiability set of a convex function on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockSet {
    pub grid: PeriodicGrid,
    pub mask: Vec<bool>,
    /// Largest forward-minus-backward gradient jump over the axes.
    pub gradient_gap: Vec<f64>,
    pub tau: f64,
}

impl ShockSet {
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Per node, `max_a (D⁺_a ψ − D⁻_a ψ)` for `ψ` given in `chart`.
pub fn gradient_gaps(psi: &ScalarField, chart: Chart) -> Vec<f64> {
    let g = *psi.grid();
    let h = g.spacing();
    let v = psi.values();
    // the quadratic part contributes exactly h per axis
    let quad = if chart == Chart::QuasiPeriodic { h } else { 0.0 };
    (0..g.len())
        .into_par_iter()
        .map(|k| {
            g.axis_offsets()
                .iter()
                .map(|&[a, b]| {
                    let fwd = v[g.shifted(k, [a, b])];
                    let bwd = v[g.shifted(k, [-a, -b])];
                    (fwd - 2.0 * v[k] + bwd) / h + quad
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Shocks with the default threshold `τ = 10h`.
pub fn extract_shocks(psi: &QuasiPeriodicConvex) -> ShockSet {
    extract_shocks_with(psi, SHOCK_FACTOR * psi.grid().spacing())
}

pub fn extract_shocks_with(psi: &QuasiPeriodicConvex, tau: f64) -> ShockSet {
    let gradient_gap = gradient_gaps(psi.periodic(), Chart::QuasiPeriodic);
    let mask = gradient_gap.iter().map(|&g| g > tau).collect();
    ShockSet { grid: *psi.grid(), mask, gradient_gap, tau }
}

/// Neighbours used for one-cell dilation: two in 1D, eight in 2D.
fn dilation_offsets(g: &PeriodicGrid) -> &'static [[isize; 2]] {
    if g.dim() == 1 {
        &[[-1, 0], [1, 0]]
    } else {
        &[[-1, -1], [-1, 0], [-1, 1], [0, -1], [0, 1], [1, -1], [1, 0], [1, 1]]
    }
}

/// One-cell dilation of a node mask.
pub fn dilate(g: &PeriodicGrid, mask: &[bool]) -> Vec<bool> {
    (0..g.len())
        .map(|k| mask[k] || dilation_offsets(g).iter().any(|&d| mask[g.shifted(k, d)]))
        .collect()
}

/// `|A \ dil(B)| + |B \ dil(A)|`: zero iff each set lies within one cell
/// of the other.
pub fn dilation_mismatch(g: &PeriodicGrid, a: &[bool], b: &[bool]) -> usize {
    let da = dilate(g, a);
    let db = dilate(g, b);
    (0..g.len()).filter(|&k| (a[k] && !db[k]) || (b[k] && !da[k])).count()
}

/// Gradient map `x ↦ ∇φ(x)` and a fold diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeldovichMap {
    pub displacement: Vec<[f64; 2]>,
    /// Nodes where the map reverses orientation: in 1D consecutive images
    /// out of order, in 2D a non-positive discrete Jacobian.
    pub folds: usize,
}

impl ZeldovichMap {
    pub fn is_injective(&self) -> bool {
        self.folds == 0
    }
}

/// Zel'dovich map of `|x|²/2 + u` (`u` need not be convex: the map is
/// meant to be evaluated past the first caustic).
pub fn zeldovich_map(u: &ScalarField) -> ZeldovichMap {
    let g = *u.grid();
    let h = g.spacing();
    let v = u.values();
    let displacement: Vec<[f64; 2]> = (0..g.len())
        .map(|k| {
            let x = g.coord(k);
            let mut d = x;
            for (a, &off) in g.axis_offsets().iter().enumerate() {
                let fwd = v[g.shifted(k, off)];
                let bwd = v[g.shifted(k, [-off[0], -off[1]])];
                d[a] += (fwd - bwd) / (2.0 * h);
            }
            d
        })
        .collect();
    let folds = if g.dim() == 1 {
        let n = g.n();
        (0..n)
            .filter(|&i| {
                let next = if i + 1 == n { displacement[0][0] + 1.0 } else { displacement[i + 1][0] };
                next <= displacement[i][0]
            })
            .count()
    } else {
        (0..g.len())
            .filter(|&k| {
                let m = hessian_at(u, k);
                m.xx <= 0.0 || m.xx * m.yy - m.xy * m.xy <= 0.0
            })
            .count()
    };
    ZeldovichMap { displacement, folds }
}

fn translates(dim: usize) -> Vec<[f64; 2]> {
    let r = [-1.0, 0.0, 1.0];
    if dim == 1 {
        r.iter().map(|&m| [m, 0.0]).collect()
    } else {
        r.iter().flat_map(|&a| r.iter().map(move |&b| [a, b])).collect()
    }
}

fn check_sites(g: &PeriodicGrid, sites: &[[f64; 2]]) -> Result<()> {
    if sites.is_empty() {
        return Err(Error::EmptySiteSet);
    }
    for (i, s) in sites.iter().enumerate() {
        let bad = s.iter().take(g.dim()).any(|c| !(0.0..1.0).contains(c)) || (g.dim() == 1 && s[1] != 0.0);
        if bad {
            return Err(Error::InvalidArgument(format!("site {i} = {s:?} outside the fundamental domain")));
        }
        if sites[..i].contains(s) {
            return Err(Error::InvalidArgument(format!("site {i} = {s:?} repeated")));
        }
    }
    Ok(())
}

/// `ψ_∞(y) = max over sites s and translates m of (s+m)·y − ψ₀*(s+m)`,
/// the uniform large-time limit of the second Hopf solution when `H`
/// vanishes exactly on the sites (and is positive elsewhere).
pub fn tropical_limit(psi0: &QuasiPeriodicConvex, sites: &[[f64; 2]]) -> Result<QuasiPeriodicConvex> {
    let g = *psi0.grid();
    check_sites(&g, sites)?;
    // ψ₀*(s + m) = ψ₀*(s) + s·m + |m|²/2
    let duals: Vec<f64> = sites.iter().map(|&s| conjugate_at(psi0.periodic(), s)).collect();
    let shifts = translates(g.dim());
    let values = (0..g.len())
        .into_par_iter()
        .map(|k| {
            let y = g.coord(k);
            let mut best = f64::NEG_INFINITY;
            for (s, d) in sites.iter().zip(&duals) {
                for m in &shifts {
                    let x = [s[0] + m[0], s[1] + m[1]];
                    let val = x[0] * y[0] + x[1] * y[1] - d - s[0] * m[0] - s[1] * m[1] - 0.5 * (m[0] * m[0] + m[1] * m[1]);
                    best = best.max(val);
                }
            }
            best - 0.5 * (y[0] * y[0] + y[1] * y[1])
        })
        .collect();
    Ok(QuasiPeriodicConvex::new_unchecked(ScalarField::new(g, values)?))
}

/// Delaunay edge between two Voronoi cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelaunayEdge {
    pub a: usize,
    pub b: usize,
    /// Number of distinct lattice lifts of the edge (an edge can close up
    /// around the torus more than once).
    pub contacts: usize,
}

/// Grid Voronoi tessellation of the torus and its Delaunay dual.
#[derive(Debug, Clone, PartialEq)]
pub struct Tessellation {
    pub grid: PeriodicGrid,
    pub sites: Vec<[f64; 2]>,
    /// Nearest site per node (ties to the lowest index).
    pub cell: Vec<usize>,
    pub edges: Vec<DelaunayEdge>,
    boundary: Vec<bool>,
}

impl Tessellation {
    /// Nodes with an axis neighbour closer to a different lattice point.
    pub fn boundary(&self) -> &[bool] {
        &self.boundary
    }
}

/// Nearest lattice point `(site, translate)` of an unwrapped position.
fn nearest(sites: &[[f64; 2]], shifts: &[[f64; 2]], y: [f64; 2]) -> (usize, usize) {
    let mut best = (f64::INFINITY, 0, 0);
    for (i, s) in sites.iter().enumerate() {
        for (j, m) in shifts.iter().enumerate() {
            let d = (y[0] - s[0] - m[0]).powi(2) + (y[1] - s[1] - m[1]).powi(2);
            if d < best.0 {
                best = (d, i, j);
            }
        }
    }
    (best.1, best.2)
}

pub fn voronoi_delaunay(grid: &PeriodicGrid, sites: &[[f64; 2]]) -> Result<Tessellation> {
    let g = *grid;
    check_sites(&g, sites)?;
    let h = g.spacing();
    // padded shifts so that neighbours of nodes in [0,1)ⁿ are covered
    let r = [-2.0, -1.0, 0.0, 1.0];
    let shifts: Vec<[f64; 2]> = if g.dim() == 1 {
        r.iter().map(|&m| [m, 0.0]).collect()
    } else {
        r.iter().flat_map(|&a| r.iter().map(move |&b| [a, b])).collect()
    };
    let labels: Vec<(usize, usize)> = (0..g.len()).into_par_iter().map(|k| nearest(sites, &shifts, g.coord(k))).collect();
    let cell = labels.iter().map(|l| l.0).collect();
    let mut boundary = vec![false; g.len()];
    // distinct relative lifts per unordered site pair
    let mut lifts: std::collections::BTreeMap<(usize, usize), std::collections::BTreeSet<[i64; 2]>> = Default::default();
    for k in 0..g.len() {
        let y = g.coord(k);
        let (s0, m0) = labels[k];
        for off in g.axis_offsets() {
            for sign in [-1.0, 1.0] {
                let z = [y[0] + sign * off[0] as f64 * h, y[1] + sign * off[1] as f64 * h];
                let (s1, m1) = nearest(sites, &shifts, z);
                if (s1, m1) != (s0, m0) {
                    boundary[k] = true;
                    if s1 != s0 {
                        let rel = [
                            (shifts[m1][0] - shifts[m0][0]) as i64,
                            (shifts[m1][1] - shifts[m0][1]) as i64,
                        ];
                        let (key, rel) = if s0 < s1 { ((s0, s1), rel) } else { ((s1, s0), [-rel[0], -rel[1]]) };
                        lifts.entry(key).or_default().insert(rel);
                    }
                }
            }
        }
    }
    let edges = lifts.into_iter().map(|((a, b), set)| DelaunayEdge { a, b, contacts: set.len() }).collect();
    Ok(Tessellation { grid: g, sites: sites.to_vec(), cell, edges, boundary })
}

/// Mismatch between the shocks of `ψ_∞` and the Voronoi boundary, in nodes
/// (see [`dilation_mismatch`]).
pub fn shock_voronoi_agreement(psi_inf: &QuasiPeriodicConvex, tess: &Tessellation) -> Result<usize> {
    if psi_inf.grid() != &tess.grid {
        return Err(Error::GridMismatch("shock field vs tessellation".into()));
    }
    let shocks = extract_shocks(psi_inf);
    Ok(dilation_mismatch(&tess.grid, &shocks.mask, tess.boundary()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hj::second_hopf;
    use crate::torus::convexity;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn smooth_convex_function_has_no_shocks() {
        let g = PeriodicGrid::line(256).unwrap();
        let psi = QuasiPeriodicConvex::new(ScalarField::from_fn(g, |x| 0.02 * (2.0 * PI * x[0]).cos())).unwrap();
        let s = extract_shocks(&psi);
        assert_eq!(s.count(), 0);
        assert!(s.gradient_gap.iter().all(|&x| x >= -1e-12));
    }

    #[test]
    fn single_site_limit_has_shocks_at_the_half_period() {
        let g = PeriodicGrid::line(256).unwrap();
        let psi = tropical_limit(&QuasiPeriodicConvex::quadratic(g), &[[0.0, 0.0]]).unwrap();
        // ψ_∞(y) = |y|²/2 − min_k |y − k|²/2
        for k in 0..g.len() {
            let y = g.coord(k)[0];
            let d = y.min(1.0 - y);
            let expect = 0.5 * y * y - 0.5 * d * d;
            assert!((psi.value(k) - expect).abs() < 1e-12);
        }
        let s = extract_shocks(&psi);
        let nodes: Vec<usize> = (0..g.len()).filter(|&k| s.mask[k]).collect();
        assert!(!nodes.is_empty());
        assert!(nodes.iter().all(|&k| (k as isize - 128).abs() <= 1), "{nodes:?}");
    }

    #[test]
    fn two_site_bisectors() {
        let g = PeriodicGrid::line(256).unwrap();
        let sites = [[0.0, 0.0], [0.5, 0.0]];
        let psi = tropical_limit(&QuasiPeriodicConvex::quadratic(g), &sites).unwrap();
        let s = extract_shocks(&psi);
        for k in (0..g.len()).filter(|&k| s.mask[k]) {
            let y = g.coord(k)[0];
            assert!((y - 0.25).abs() <= g.spacing() || (y - 0.75).abs() <= g.spacing(), "{y}");
        }
        let tess = voronoi_delaunay(&g, &sites).unwrap();
        assert_eq!(tess.edges, vec![DelaunayEdge { a: 0, b: 1, contacts: 2 }]);
        assert_eq!(tess.cell[10], 0);
        assert_eq!(tess.cell[100], 1);
        assert_eq!(tess.cell[200], 0);
        assert_eq!(shock_voronoi_agreement(&psi, &tess).unwrap(), 0);
    }

    #[test]
    fn one_site_is_one_cell_without_edges_but_with_shocks() {
        let g = PeriodicGrid::square(32).unwrap();
        let sites = [[0.25, 0.5]];
        let tess = voronoi_delaunay(&g, &sites).unwrap();
        assert!(tess.cell.iter().all(|&c| c == 0));
        assert!(tess.edges.is_empty());
        let psi = tropical_limit(&QuasiPeriodicConvex::quadratic(g), &sites).unwrap();
        assert!(extract_shocks(&psi).count() > 0);
        assert_eq!(shock_voronoi_agreement(&psi, &tess).unwrap(), 0);
    }

    #[test]
    fn three_site_cells_follow_bisectors() {
        let g = PeriodicGrid::square(128).unwrap();
        let sites = [[0.1875, 0.25], [0.6875, 0.375], [0.4375, 0.8125]];
        let tess = voronoi_delaunay(&g, &sites).unwrap();
        let h = g.spacing();
        // analytic check: a node labelled a is not farther from a than from
        // any other site by more than the grid can resolve
        for k in 0..g.len() {
            let y = g.coord(k);
            let da = g.torus_dist2(y, sites[tess.cell[k]]).sqrt();
            for s in &sites {
                assert!(da <= g.torus_dist2(y, *s).sqrt() + 1e-12);
            }
            // boundary nodes lie within one cell of a bisector
            if tess.boundary()[k] {
                let mut d: Vec<f64> = sites.iter().map(|s| g.torus_dist2(y, *s).sqrt()).collect();
                d.sort_by(f64::total_cmp);
                let self_gap = {
                    // same site through two translates
                    let s = sites[tess.cell[k]];
                    let m = (y[0] - s[0]).abs().min(1.0 - (y[0] - s[0]).abs());
                    let n = (y[1] - s[1]).abs().min(1.0 - (y[1] - s[1]).abs());
                    (0.5 - m).abs().min((0.5 - n).abs())
                };
                assert!(d[1] - d[0] <= 2.0 * h || self_gap <= h, "{y:?}");
            }
        }
        assert!(tess.edges.iter().all(|e| e.a < e.b && e.contacts >= 1));
        let psi = tropical_limit(&QuasiPeriodicConvex::quadratic(g), &sites).unwrap();
        assert_eq!(shock_voronoi_agreement(&psi, &tess).unwrap(), 0);
    }

    #[test]
    fn crease_is_detected_as_a_line() {
        let g = PeriodicGrid::square(64).unwrap();
        // two sites on a vertical line through x₁: crease along x₂ = const
        let psi = tropical_limit(&QuasiPeriodicConvex::quadratic(g), &[[0.5, 0.25], [0.5, 0.75]]).unwrap();
        let s = extract_shocks(&psi);
        for k in (0..g.len()).filter(|&k| s.mask[k]) {
            let y = g.coord(k);
            let near = [0.0, 0.5, 1.0].iter().any(|c| (y[1] - c).abs() <= g.spacing())
                || [0.0, 1.0].iter().any(|c| (y[0] - c).abs() <= g.spacing());
            assert!(near, "{y:?}");
        }
    }

    #[test]
    fn zeldovich_map_folds_after_the_caustic() {
        let g = PeriodicGrid::line(256).unwrap();
        let h = ScalarField::from_fn(g, |x| (2.0 * PI * x[0]).cos());
        let t_star = 1.0 / (4.0 * PI * PI);
        assert!(zeldovich_map(&ScalarField::zeros(g)).is_injective());
        let pre = zeldovich_map(&h.scaled(0.5 * t_star));
        assert!(pre.is_injective());
        assert!(zeldovich_map(&h.scaled(2.0 * t_star)).folds > 0);
        // identity for the quadratic
        let id = zeldovich_map(&ScalarField::zeros(g));
        assert!((0..g.len()).all(|k| (id.displacement[k][0] - g.coord(k)[0]).abs() < 1e-15));
        let g2 = PeriodicGrid::square(32).unwrap();
        let h2 = ScalarField::from_fn(g2, |x| (2.0 * PI * x[0]).cos() + (2.0 * PI * x[1]).cos());
        assert!(zeldovich_map(&h2.scaled(0.5 * t_star)).is_injective());
        assert!(!zeldovich_map(&h2.scaled(2.0 * t_star)).is_injective());
    }

    #[test]
    fn large_time_hopf_matches_the_tropical_limit() {
        let g = PeriodicGrid::line(256).unwrap();
        let sites = [[0.25, 0.0], [0.625, 0.0]];
        let h = ScalarField::from_fn(g, |x| {
            sites.iter().map(|s| ((PI * (x[0] - s[0])).sin() / PI).powi(2)).fold(f64::INFINITY, f64::min)
        });
        let q = QuasiPeriodicConvex::quadratic(g);
        let psi_t = second_hopf(&q, &h, 50.0).unwrap().into_convex().unwrap();
        let psi_inf = tropical_limit(&q, &sites).unwrap();
        assert!(psi_t.periodic().sup_dist(psi_inf.periodic()) <= 0.05);
    }

    #[test]
    fn empty_sites_rejected() {
        let g = PeriodicGrid::line(16).unwrap();
        assert!(matches!(tropical_limit(&QuasiPeriodicConvex::quadratic(g), &[]), Err(Error::EmptySiteSet)));
        assert!(voronoi_delaunay(&g, &[[0.5, 0.0], [0.5, 0.0]]).is_err());
    }

    proptest! {
        #[test]
        fn convex_input_has_nonnegative_gaps(a in -0.02..0.02f64, b in -0.01..0.01f64) {
            let g = PeriodicGrid::square(16).unwrap();
            let u = ScalarField::from_fn(g, |x| a * (2.0 * PI * x[0]).cos() + b * (2.0 * PI * (x[0] + x[1])).sin());
            prop_assume!(convexity(&u).min >= 0.0);
            let s = extract_shocks(&QuasiPeriodicConvex::new(u).unwrap());
            prop_assert!(s.gradient_gap.iter().all(|&x| x >= -1e-12));
        }

        #[test]
        fn tropical_shocks_ignore_constant_shifts(c in -1.0..1.0f64, x0 in 0.0..0.5f64) {
            let g = PeriodicGrid::line(64).unwrap();
            let sites = [[x0, 0.0], [x0 + 0.4, 0.0]];
            let q = QuasiPeriodicConvex::quadratic(g);
            let a = tropical_limit(&q, &sites).unwrap();
            let b = tropical_limit(&q.shifted(c), &sites).unwrap();
            prop_assert_eq!(extract_shocks(&a).mask, extract_shocks(&b).mask);
            prop_assert!((b.periodic().axpy(-1.0, a.periodic()).max() - c).abs() < 1e-12);
        }

        #[test]
        fn voronoi_is_permutation_invariant(x in 0.0..1.0f64, y in 0.0..1.0f64) {
            let g = PeriodicGrid::square(16).unwrap();
            let sites = [[0.1, 0.2], [x, y], [0.7, 0.9]];
            prop_assume!(sites[1] != sites[0] && sites[1] != sites[2]);
            let perm = [sites[2], sites[0], sites[1]];
            let a = voronoi_delaunay(&g, &sites).unwrap();
            let b = voronoi_delaunay(&g, &perm).unwrap();
            let relabel = [1usize, 2, 0];
            // identical partitions away from exact ties
            for k in 0..g.len() {
                let p = g.coord(k);
                let d: Vec<f64> = sites.iter().map(|s| g.torus_dist2(p, *s)).collect();
                let mut sorted = d.clone();
                sorted.sort_by(f64::total_cmp);
                if sorted[1] - sorted[0] > 1e-12 {
                    prop_assert_eq!(relabel[a.cell[k]], b.cell[k]);
                }
            }
        }
    }
}
