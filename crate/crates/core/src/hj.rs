//! Closed-form solutions of `∂ψ/∂t + H(∇ψ) = 0`.
//!
//! * second Hopf formula `ψ_t = (ψ₀* + tH)*` for convex `ψ₀` and periodic `H`;
//! * Hopf–Lax inf-convolution `ψ_t(y) = inf_x ψ₀(x) + t·L((x − y)/t)` for
//!   convex `L = H*`.
//!
//! With `ψ₀ = |y|²/2` the two are related by `ψ_t = |y|²/2 − t·Φ_t`, where
//! `Φ_t` is the Hopf–Lax solution with quadratic cost and data `Φ₀ = H`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::Chart;
use crate::legendre::{lft, lft_samples};
use crate::shocks::{dilation_mismatch, extract_shocks, gradient_gaps, SHOCK_FACTOR};
use crate::torus::{PeriodicGrid, QuasiPeriodicConvex, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HopfKind {
    HopfLax,
    SecondHopf,
}

/// `ψ_t` sampled on the fundamental domain.
#[derive(Debug, Clone, PartialEq)]
pub struct HopfSolution {
    pub t: f64,
    pub kind: HopfKind,
    /// In the quasi-periodic chart `values` holds `ψ_t(y) − |y|²/2`.
    pub chart: Chart,
    pub values: ScalarField,
}

impl HopfSolution {
    /// Total value `ψ_t` at node `k`.
    pub fn value(&self, k: usize) -> f64 {
        let g = self.values.grid();
        match self.chart {
            Chart::Plain => self.values.values()[k],
            Chart::QuasiPeriodic => {
                let y = g.coord(k);
                self.values.values()[k] + 0.5 * (y[0] * y[0] + y[1] * y[1])
            }
        }
    }

    /// Reinterpret as a quasi-periodic convex function (checked).
    pub fn into_convex(self) -> Result<QuasiPeriodicConvex> {
        if self.chart != Chart::QuasiPeriodic {
            return Err(Error::InvalidArgument("only quasi-periodic solutions are convex".into()));
        }
        QuasiPeriodicConvex::new(self.values)
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("t={t} must be finite and nonnegative")));
    }
    Ok(())
}

/// `ψ_t = (ψ₀* + tH)*`.
pub fn second_hopf(psi0: &QuasiPeriodicConvex, hamiltonian: &ScalarField, t: f64) -> Result<HopfSolution> {
    check_time(t)?;
    if hamiltonian.grid() != psi0.grid() {
        return Err(Error::GridMismatch("hamiltonian vs initial data".into()));
    }
    if t == 0.0 {
        let values = psi0.periodic().clone();
        return Ok(HopfSolution { t, kind: HopfKind::SecondHopf, chart: Chart::QuasiPeriodic, values });
    }
    let dual = lft(psi0).dual.into_periodic();
    let lifted = dual.axpy(t, hamiltonian);
    let psi = lft_samples(&lifted).dual.into_periodic();
    Ok(HopfSolution { t, kind: HopfKind::SecondHopf, chart: Chart::QuasiPeriodic, values: psi })
}

/// Value of the data at extended index `k ∈ [−N, 2N)ⁿ`.
#[inline]
fn extended(values: &[f64], g: &PeriodicGrid, chart: Chart, k: [isize; 2]) -> f64 {
    let h = g.spacing();
    let base = values[g.index(k[0], k[1])];
    match chart {
        Chart::Plain => base,
        Chart::QuasiPeriodic => {
            let x = [k[0] as f64 * h, k[1] as f64 * h];
            base + 0.5 * (x[0] * x[0] + x[1] * x[1])
        }
    }
}

/// Store a total value in the requested chart.
#[inline]
fn to_chart(total: f64, y: [f64; 2], chart: Chart) -> f64 {
    match chart {
        Chart::Plain => total,
        Chart::QuasiPeriodic => total - 0.5 * (y[0] * y[0] + y[1] * y[1]),
    }
}

/// Hopf–Lax solution for a general convex Lagrangian `cost(p) = H*(p)`,
/// by brute force over the one-period-padded domain. `O(N²)` per node in
/// 2D; use [`hopf_lax_quadratic`] for the quadratic cost.
pub fn hopf_lax<L>(psi0: &ScalarField, chart: Chart, cost: L, t: f64) -> Result<HopfSolution>
where
    L: Fn([f64; 2]) -> f64 + Sync,
{
    check_time(t)?;
    if t == 0.0 {
        return Ok(HopfSolution { t, kind: HopfKind::HopfLax, chart, values: psi0.clone() });
    }
    let g = *psi0.grid();
    let n = g.n() as isize;
    let h = g.spacing();
    let v = psi0.values();
    let k2_range = if g.dim() == 2 { -n..2 * n } else { 0..1 };
    let out: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|k| {
            let y = g.coord(k);
            let mut best = f64::INFINITY;
            for k1 in -n..2 * n {
                for k2 in k2_range.clone() {
                    let x = [k1 as f64 * h, k2 as f64 * h];
                    let p = [(x[0] - y[0]) / t, (x[1] - y[1]) / t];
                    best = best.min(extended(v, &g, chart, [k1, k2]) + t * cost(p));
                }
            }
            to_chart(best, y, chart)
        })
        .collect();
    Ok(HopfSolution { t, kind: HopfKind::HopfLax, chart, values: ScalarField::new(g, out)? })
}

/// Hopf–Lax solution for `H*(p) = |p|²/2`; the quadratic cost separates,
/// so the 2D inf is taken axis by axis.
pub fn hopf_lax_quadratic(psi0: &ScalarField, chart: Chart, t: f64) -> Result<HopfSolution> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(HopfSolution { t, kind: HopfKind::HopfLax, chart, values: psi0.clone() });
    }
    let g = *psi0.grid();
    let n = g.n();
    let h = g.spacing();
    let v = psi0.values();
    // inf over x₁ of data(x₁, ·) + |x₁ − y₁|²/2t on the line [−1, 2)
    let line_inf = |data: &dyn Fn(isize) -> f64, y: f64| -> f64 {
        (-(n as isize)..2 * n as isize)
            .map(|k| {
                let d = k as f64 * h - y;
                data(k) + 0.5 * d * d / t
            })
            .fold(f64::INFINITY, f64::min)
    };
    let out: Vec<f64> = match g.dim() {
        1 => (0..n)
            .into_par_iter()
            .map(|i| {
                let y = g.coord(i);
                let total = line_inf(&|k| extended(v, &g, chart, [k, 0]), y[0]);
                to_chart(total, y, chart)
            })
            .collect(),
        _ => {
            // inner inf along the second axis for every extended first index
            // (the data only depends on k₁ mod N up to the chart term)
            let inner: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|i1| {
                    (0..n)
                        .map(|j2| {
                            let y2 = j2 as f64 * h;
                            line_inf(&|k2| extended(v, &g, Chart::Plain, [i1 as isize, k2]) + quad(chart, k2, h), y2)
                        })
                        .collect()
                })
                .collect();
            (0..g.len())
                .into_par_iter()
                .map(|k| {
                    let [j1, j2] = g.multi_index(k);
                    let y = g.coord(k);
                    let total = line_inf(&|k1| inner[g.wrap(k1)][j2] + quad(chart, k1, h), j1 as f64 * h);
                    to_chart(total, y, chart)
                })
                .collect()
        }
    };
    Ok(HopfSolution { t, kind: HopfKind::HopfLax, chart, values: ScalarField::new(g, out)? })
}

#[inline]
fn quad(chart: Chart, k: isize, h: f64) -> f64 {
    match chart {
        Chart::Plain => 0.0,
        Chart::QuasiPeriodic => {
            let x = k as f64 * h;
            0.5 * x * x
        }
    }
}

/// Outcome of comparing the second Hopf and Hopf–Lax pictures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfDuality {
    /// `sup |ψ_t − (|y|²/2 − tΦ_t)|`.
    pub value_defect: f64,
    /// Shock nodes of one side not within one cell of the other's, summed
    /// both ways.
    pub shock_mismatch: usize,
}

/// Build `ψ_t` by the second Hopf formula (`H = Φ₀`, `ψ₀ = |y|²/2`) and
/// `Φ_t` by Hopf–Lax with quadratic cost, then compare values and shock
/// sets. `Φ_t` is semiconcave, so its shocks are where the backward
/// gradient exceeds the forward one; jumps are scaled by `t` to compare
/// with the displacement jumps of `ψ_t`.
pub fn hopf_duality_check(phi0: &ScalarField, t: f64) -> Result<HopfDuality> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t={t} must be positive")));
    }
    let g = *phi0.grid();
    let psi = second_hopf(&QuasiPeriodicConvex::quadratic(g), phi0, t)?;
    let lax = hopf_lax_quadratic(phi0, Chart::Plain, t)?;
    let value_defect = psi
        .values
        .values()
        .iter()
        .zip(lax.values.values())
        .map(|(p, l)| (p + t * l).abs())
        .fold(0.0, f64::max);
    let tau = SHOCK_FACTOR * g.spacing();
    let psi_shocks = extract_shocks(&QuasiPeriodicConvex::new_unchecked(psi.values));
    let lax_mask: Vec<bool> = gradient_gaps(&lax.values.scaled(-t), Chart::Plain)
        .into_iter()
        .map(|gap| gap > tau)
        .collect();
    let shock_mismatch = dilation_mismatch(&g, &psi_shocks.mask, &lax_mask);
    Ok(HopfDuality { value_defect, shock_mismatch })
}

/// One-sided velocities `∇ψ` of a 1D solution; their gap marks shocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BurgersVelocity {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl BurgersVelocity {
    /// `right − left` per node.
    pub fn gap(&self) -> Vec<f64> {
        self.right.iter().zip(&self.left).map(|(r, l)| r - l).collect()
    }
}

pub fn burgers_velocity(psi: &ScalarField, chart: Chart) -> Result<BurgersVelocity> {
    let g = *psi.grid();
    if g.dim() != 1 {
        return Err(Error::UnsupportedDim(g.dim()));
    }
    let n = g.n() as isize;
    let h = g.spacing();
    let v = psi.values();
    let diff = |i: isize, j: isize| {
        (extended(v, &g, chart, [j, 0]) - extended(v, &g, chart, [i, 0])) / (j - i) as f64 / h
    };
    let left = (0..n).map(|i| diff(i - 1, i)).collect();
    let right = (0..n).map(|i| diff(i, i + 1)).collect();
    Ok(BurgersVelocity { left, right })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::project_convex;
    use crate::legendre::lft;
    use crate::torus::convexity;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cosine(g: PeriodicGrid, a: f64) -> ScalarField {
        ScalarField::from_fn(g, |x| a * (2.0 * PI * x[0]).cos())
    }

    #[test]
    fn zero_hamiltonian_and_zero_time_return_initial_data() {
        let g = PeriodicGrid::line(128).unwrap();
        let psi0 = QuasiPeriodicConvex::new(ScalarField::from_fn(g, |x| 0.01 * (2.0 * PI * x[0]).sin())).unwrap();
        let a = second_hopf(&psi0, &ScalarField::zeros(g), 3.0).unwrap();
        // the double transform over grid slopes is exact only up to O(h²)
        let e = a.values.sup_dist(psi0.periodic());
        assert!(e < g.spacing().powi(2), "{e}");
        let b = second_hopf(&psi0, &cosine(g, 1.0), 0.0).unwrap();
        assert!(b.values.sup_dist(psi0.periodic()) < 1e-12);
    }

    #[test]
    fn second_hopf_is_dual_to_the_envelope() {
        let g = PeriodicGrid::line(256).unwrap();
        let q = QuasiPeriodicConvex::quadratic(g);
        let h = cosine(g, 1.0);
        let psi = second_hopf(&q, &h, 1.0).unwrap();
        let env = project_convex(&q, &h, 1.0);
        let dual = lft(&QuasiPeriodicConvex::new_unchecked(env.projected)).dual;
        assert!(psi.values.sup_dist(dual.periodic()) <= 5.0 * g.spacing());
        assert!(psi.into_convex().is_ok());
    }

    #[test]
    fn hopf_lax_of_quadratic_data_is_a_shrunk_quadratic() {
        let g = PeriodicGrid::line(128).unwrap();
        let sol = hopf_lax_quadratic(&ScalarField::zeros(g), Chart::QuasiPeriodic, 1.0).unwrap();
        for k in 0..g.len() {
            let y = g.coord(k)[0];
            assert!((sol.value(k) - 0.25 * y * y).abs() <= g.spacing(), "{k}");
        }
    }

    #[test]
    fn short_time_hopf_lax_stays_close_to_the_data() {
        let g = PeriodicGrid::line(256).unwrap();
        let data = cosine(g, 0.3);
        let t = 1e-3;
        let sol = hopf_lax_quadratic(&data, Chart::Plain, t).unwrap();
        // |∇Φ₀| ≤ 0.6π, so the inf moves by at most t·|∇Φ₀|²/2
        let bound = t * 0.5 * (0.6 * PI).powi(2);
        assert!(sol.values.sup_dist(&data) <= bound);
        assert!(sol.values.values().iter().zip(data.values()).all(|(s, d)| s <= d));
    }

    #[test]
    fn inf_convolution_of_convex_inputs_is_convex_inside() {
        let g = PeriodicGrid::line(128).unwrap();
        let data = ScalarField::from_fn(g, |x| 0.01 * (2.0 * PI * x[0]).cos());
        let sol = hopf_lax_quadratic(&data, Chart::QuasiPeriodic, 0.5).unwrap();
        let n = g.n();
        for i in 1..n - 1 {
            let d2 = sol.value(i + 1) - 2.0 * sol.value(i) + sol.value(i - 1);
            assert!(d2 >= -1e-12, "{i}: {d2}");
        }
    }

    #[test]
    fn separable_quadratic_matches_brute_force() {
        for g in [PeriodicGrid::line(32).unwrap(), PeriodicGrid::square(12).unwrap()] {
            let data = ScalarField::from_fn(g, |x| 0.2 * (2.0 * PI * x[0]).cos() * (1.0 + 0.5 * (2.0 * PI * x[1]).sin()));
            for chart in [Chart::Plain, Chart::QuasiPeriodic] {
                let fast = hopf_lax_quadratic(&data, chart, 0.7).unwrap();
                let brute = hopf_lax(&data, chart, |p| 0.5 * (p[0] * p[0] + p[1] * p[1]), 0.7).unwrap();
                assert!(fast.values.sup_dist(&brute.values) < 1e-13);
            }
        }
    }

    #[test]
    fn duality_is_exact_for_flat_data() {
        let g = PeriodicGrid::line(64).unwrap();
        let d = hopf_duality_check(&ScalarField::zeros(g), 1.0).unwrap();
        assert!(d.value_defect <= 1e-12);
        assert_eq!(d.shock_mismatch, 0);
    }

    #[test]
    fn duality_before_and_after_the_shock() {
        let g = PeriodicGrid::line(256).unwrap();
        let phi0 = cosine(g, 0.2);
        let pre = hopf_duality_check(&phi0, 0.1).unwrap();
        assert!(pre.value_defect <= 3.0 * g.spacing());
        let post = hopf_duality_check(&phi0, 1.0).unwrap();
        assert!(post.value_defect <= 3.0 * g.spacing());
        assert!(post.shock_mismatch <= 2, "{post:?}");
    }

    #[test]
    fn semigroup_defect_is_one_sided_after_the_shock() {
        let g = PeriodicGrid::line(256).unwrap();
        let q = QuasiPeriodicConvex::quadratic(g);
        let h = cosine(g, 1.0);
        // pre-shock (T* = 1/4π²): composition is exact up to resampling
        let (t, s) = (0.005, 0.01);
        let direct = second_hopf(&q, &h, t + s).unwrap().values;
        let mid = second_hopf(&q, &h, t).unwrap().into_convex().unwrap();
        let composed = second_hopf(&mid, &h, s).unwrap().values;
        assert!(direct.sup_dist(&composed) < 1e-10);
        // post-shock: ψ_{t+s} ≤ composed
        let (t, s) = (0.5, 0.5);
        let direct = second_hopf(&q, &h, t + s).unwrap().values;
        let mid = second_hopf(&q, &h, t).unwrap().into_convex().unwrap();
        let composed = second_hopf(&mid, &h, s).unwrap().values;
        let defect = composed.axpy(-1.0, &direct).min();
        assert!(defect >= -1e-12, "{defect}");
    }

    #[test]
    fn tent_velocity_jumps_by_the_slope_change() {
        let g = PeriodicGrid::line(64).unwrap();
        // periodic tent with slopes ±1, kink at 0.5
        let tent = ScalarField::from_fn(g, |x| 0.5 - (x[0] - 0.5).abs());
        let v = burgers_velocity(&tent, Chart::Plain).unwrap();
        let gap = v.gap();
        assert!((gap[32] + 2.0).abs() < 1e-12);
        assert!((gap[0] - 2.0).abs() < 1e-12);
        for (i, gi) in gap.iter().enumerate() {
            if i != 0 && i != 32 {
                assert!(gi.abs() < 1e-12);
            }
        }
        let flat = burgers_velocity(&ScalarField::constant(g, 2.0), Chart::Plain).unwrap();
        assert!(flat.gap().iter().all(|x| *x == 0.0) && flat.left.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn smooth_velocity_has_small_gap() {
        let g = PeriodicGrid::line(256).unwrap();
        let psi = ScalarField::from_fn(g, |x| 0.02 * (2.0 * PI * x[0]).cos());
        let v = burgers_velocity(&psi, Chart::QuasiPeriodic).unwrap();
        let max_gap = v.gap().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        // gap = h·ψ'' ≤ h(1 + 0.02·4π²)
        assert!(max_gap <= g.spacing() * (1.0 + 0.02 * 4.0 * PI * PI) * 1.01);
        assert!(v.gap().iter().all(|x| *x > 0.0));
    }

    proptest! {
        #[test]
        fn second_hopf_is_monotone_in_initial_data(
            amp in 0.0..0.01f64, lift in 0.0..0.5f64, t in 0.0..2.0f64
        ) {
            let g = PeriodicGrid::line(64).unwrap();
            let lo = QuasiPeriodicConvex::new(ScalarField::from_fn(g, |x| amp * (2.0 * PI * x[0]).sin())).unwrap();
            let hi = QuasiPeriodicConvex::new(lo.periodic().map(|v| v + lift)
                .axpy(1.0, &ScalarField::from_fn(g, |x| 0.002 * (4.0 * PI * x[0]).cos() + 0.002))).unwrap();
            prop_assume!(convexity(hi.periodic()).min >= 0.0);
            let h = cosine(g, 0.5);
            let a = second_hopf(&lo, &h, t).unwrap().values;
            let b = second_hopf(&hi, &h, t).unwrap().values;
            prop_assert!(a.values().iter().zip(b.values()).all(|(x, y)| *x <= *y + 1e-12));
        }
    }
}
