//! Weak Hele-Shaw flow on the 2-torus with injection at one node.
//!
//! For each injected area `λ` the free region is `Ω^{(λ)} = {φ_λ < 0}`,
//! `φ_λ` the envelope of [`heleshaw_obstacle`]; it should carry `ρ₀`-area
//! `λ`. The same regions arise from the envelopes `P(t·f)` of the scaled
//! potential `f` of `ρ₀ − δ_p` with `λ = t/(1+t)`, and as the vanishing
//! set of the density of the log-diffusion flow driven by `ρ₀ − δ_p`.

use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::envelope::{
    heleshaw_obstacle, project_psh_2d, project_psh_2d_with, smoothed_point_mass, ObstacleProblem2D, PsorConfig,
    TOL_CONTACT,
};
use crate::error::{Error, Result};
use crate::flow::{advance_log_diffusion_2d, LogDensity, LogDiffusionConfig};
use crate::shocks::dilate;
use crate::torus::{PeriodicGrid, ScalarField, DDC_SCALE};

/// Injection point and regularization shared by a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Injection {
    pub rho0: ScalarField,
    pub pole: usize,
    /// Width of the smoothed point mass (`h²` by default).
    pub epsilon: f64,
}

impl Injection {
    pub fn new(rho0: ScalarField, pole: usize, epsilon: f64) -> Result<Self> {
        let g = rho0.grid();
        if g.dim() != 2 {
            return Err(Error::UnsupportedDim(g.dim()));
        }
        if pole >= g.len() {
            return Err(Error::InvalidArgument(format!("pole node {pole} out of range")));
        }
        if !(epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon={epsilon} must be positive")));
        }
        Ok(Self { rho0, pole, epsilon })
    }

    /// Flat density, pole at the centre node, `ε = h²`.
    pub fn flat(grid: PeriodicGrid) -> Result<Self> {
        let h = grid.spacing();
        let n = grid.n() as isize;
        Self::new(ScalarField::constant(grid, 1.0), grid.index(n / 2, n / 2), h * h)
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.rho0.grid()
    }
}

/// One point of a Hele-Shaw sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct HSState {
    pub lambda: f64,
    pub phi: ScalarField,
    /// `Ω^{(λ)}`: nodes where `φ_λ < −tol_contact`.
    pub omega: Vec<bool>,
    /// `Σ_Ω ρ₀·h²`.
    pub area: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl HSState {
    /// Smallest distance from the pole of a node outside `Ω`, and largest
    /// distance of a node inside it.
    pub fn radial_extent(&self, pole: usize) -> (f64, f64) {
        let g = self.phi.grid();
        let p = g.coord(pole);
        let mut inner = f64::INFINITY;
        let mut outer = 0.0f64;
        for k in 0..g.len() {
            let d = g.torus_dist2(g.coord(k), p).sqrt();
            if self.omega[k] {
                outer = outer.max(d);
            } else {
                inner = inner.min(d);
            }
        }
        (inner, outer)
    }
}

fn free_region(phi: &ScalarField) -> Vec<bool> {
    phi.values().iter().map(|v| *v < -TOL_CONTACT).collect()
}

fn area_of(rho0: &ScalarField, mask: &[bool]) -> f64 {
    let vol = rho0.grid().cell_volume();
    rho0.values().iter().zip(mask).filter(|(_, m)| **m).map(|(r, _)| r * vol).sum()
}

fn state_from(problem_rho0: &ScalarField, lambda: f64, r: crate::envelope::EnvelopeResult) -> HSState {
    let omega = free_region(&r.projected);
    let area = area_of(problem_rho0, &omega);
    HSState { lambda, phi: r.projected, omega, area, iterations: r.iterations, residual: r.residual }
}

/// Solve the envelope problem at a single `λ`.
pub fn hs_solve(injection: &Injection, lambda: f64) -> Result<HSState> {
    let g = *injection.grid();
    let problem = heleshaw_obstacle(&g, &injection.rho0, injection.pole, lambda, injection.epsilon)?;
    Ok(state_from(&injection.rho0, lambda, project_psh_2d(&problem)?))
}

/// Solve along an increasing list of `λ ∈ [0, 1)`. Entries are
/// independent and solved in parallel.
pub fn hs_sweep(injection: &Injection, lambdas: &[f64]) -> Result<Vec<HSState>> {
    if lambdas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("lambda list must be strictly increasing".into()));
    }
    if lambdas.iter().any(|l| !(0.0..1.0).contains(l)) {
        return Err(Error::InvalidArgument("lambda must lie in [0, 1)".into()));
    }
    lambdas.par_iter().map(|&l| hs_solve(injection, l)).collect()
}

/// Whether the free regions of a sweep are nested.
pub fn is_nested(states: &[HSState]) -> bool {
    states.windows(2).all(|w| w[0].omega.iter().zip(&w[1].omega).all(|(a, b)| !*a || *b))
}

/// Solve `DDC·Δf = s` (5-point Laplacian) for mean-zero `s` by FFT;
/// the result is shifted so that `min f = 0`.
pub fn solve_ddc_poisson(source: &ScalarField) -> Result<ScalarField> {
    let g = *source.grid();
    if g.dim() != 2 {
        return Err(Error::UnsupportedDim(g.dim()));
    }
    let n = g.n();
    let mean = source.mean();
    if mean.abs() > 1e-10 * (1.0 + source.sup_norm()) {
        return Err(Error::InvalidArgument(format!("source has nonzero mean {mean:e}")));
    }
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut data: Vec<Complex<f64>> = source.values().iter().map(|&v| Complex::new(v, 0.0)).collect();
    let transform_2d = |data: &mut Vec<Complex<f64>>, plan: &std::sync::Arc<dyn rustfft::Fft<f64>>| {
        for row in data.chunks_mut(n) {
            plan.process(row);
        }
        let mut col = vec![Complex::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = data[i * n + j];
            }
            plan.process(&mut col);
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
    };
    transform_2d(&mut data, &fwd);
    let h = g.spacing();
    let s2 = |k: usize| (std::f64::consts::PI * k as f64 / n as f64).sin().powi(2);
    for i in 0..n {
        for j in 0..n {
            let k = i * n + j;
            if i == 0 && j == 0 {
                data[k] = Complex::new(0.0, 0.0);
                continue;
            }
            let symbol = -4.0 * (s2(i) + s2(j)) / (h * h) * DDC_SCALE;
            data[k] /= symbol;
        }
    }
    transform_2d(&mut data, &inv);
    let scale = 1.0 / (n * n) as f64;
    let f = ScalarField::new(g, data.iter().map(|c| c.re * scale).collect())?;
    Ok(f.add_constant(-f.min()))
}

/// Regularized potential of `ρ₀ − δ_p`: `DDC·Δf_ε = ρ₀ − δ_ε`, `min f_ε = 0`.
pub fn log_potential(injection: &Injection) -> Result<ScalarField> {
    let g = *injection.grid();
    let delta = smoothed_point_mass(&g, injection.pole, injection.epsilon);
    solve_ddc_poisson(&injection.rho0.axpy(-1.0, &delta))
}

/// Comparison of `{P(t·f_ε) < t·f_ε}` with `Ω^{(t/(1+t))}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeComparison {
    pub t: f64,
    pub lambda: f64,
    /// Symmetric-difference node count.
    pub defect: usize,
    /// Nodes within one cell of `∂Ω` (the resolution of either mask).
    pub boundary_band: usize,
}

pub fn hs_vs_envelope_curve(injection: &Injection, t_list: &[f64]) -> Result<Vec<EnvelopeComparison>> {
    if t_list.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidArgument("t values must be finite and nonnegative".into()));
    }
    let g = *injection.grid();
    let f = log_potential(injection)?;
    t_list
        .par_iter()
        .map(|&t| {
            let lambda = t / (1.0 + t);
            let obstacle = f.scaled(t);
            let problem = ObstacleProblem2D::new(injection.rho0.clone(), obstacle.clone())?;
            let env = project_psh_2d(&problem)?;
            let env_mask: Vec<bool> =
                env.projected.values().iter().zip(obstacle.values()).map(|(u, o)| *u < o - TOL_CONTACT).collect();
            let hs = hs_solve(injection, lambda)?;
            let defect = env_mask.iter().zip(&hs.omega).filter(|(a, b)| a != b).count();
            Ok(EnvelopeComparison { t, lambda, defect, boundary_band: boundary_band(&g, &hs.omega) })
        })
        .collect()
}

/// Nodes within one cell of the boundary of `mask`.
pub fn boundary_band(g: &PeriodicGrid, mask: &[bool]) -> usize {
    let inside = dilate(g, mask);
    let complement: Vec<bool> = mask.iter().map(|m| !m).collect();
    let outside = dilate(g, &complement);
    inside.iter().zip(&outside).filter(|(a, b)| **a && **b).count()
}

/// Large-β density of the log-diffusion flow against `(t+1)·ρ₀` on
/// `X \ Ω^{(λ(t))}` (and 0 on `Ω`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityComparison {
    pub t: f64,
    pub beta: f64,
    /// Sup of `|ρ − target|` off a band of width `band` cells about `∂Ω`.
    pub defect: f64,
    /// Range of `ρ/ρ₀` over interior nodes of `X \ Ω`.
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Largest `ρ/sup ρ₀` away from the pole neighbourhood.
    pub peak_ratio: f64,
    pub area_defect: f64,
}

/// Width of the excluded band about `∂Ω`, and of the pole neighbourhood.
pub const DENSITY_BAND: usize = 3;

/// Run the log-diffusion flow from `ρ₀` with source `ρ₀ − δ_ε` up to `t`
/// and compare with the Hele-Shaw region at `λ = t/(t+1)`.
pub fn hs_density_limit(injection: &Injection, beta: f64, t: f64, dt: f64) -> Result<(LogDensity, DensityComparison)> {
    let g = *injection.grid();
    let delta = smoothed_point_mass(&g, injection.pole, injection.epsilon);
    let source = injection.rho0.axpy(-1.0, &delta);
    let start = LogDensity::from_density(&injection.rho0)?;
    let end = if t > 0.0 {
        advance_log_diffusion_2d(&start, &source, beta, dt, t, &LogDiffusionConfig::default())?
    } else {
        start
    };
    let hs = hs_solve(injection, t / (1.0 + t))?;
    let cmp = compare_density(injection, &end, &hs, beta, t);
    Ok((end, cmp))
}

/// Compare a density with the Hele-Shaw target of `hs` at time `t`.
pub fn compare_density(injection: &Injection, density: &LogDensity, hs: &HSState, beta: f64, t: f64) -> DensityComparison {
    let g = *injection.grid();
    let rho = density.density();
    let rho0 = &injection.rho0;
    // band about ∂Ω
    let mut near_boundary = vec![false; g.len()];
    let b = boundary_mask(&g, &hs.omega);
    for k in 0..g.len() {
        if b[k] {
            near_boundary[k] = true;
        }
    }
    for _ in 1..DENSITY_BAND {
        near_boundary = dilate(&g, &near_boundary);
    }
    let p = g.coord(injection.pole);
    let reach = DENSITY_BAND as f64 * g.spacing() + 1e-12;
    let sup_rho0 = rho0.max();
    let mut defect = 0.0f64;
    let mut ratio_min = f64::INFINITY;
    let mut ratio_max = 0.0f64;
    let mut peak_ratio = 0.0f64;
    let mut dense = vec![false; g.len()];
    for k in 0..g.len() {
        let near_pole = g.torus_dist2(g.coord(k), p).sqrt() <= reach;
        if !near_pole {
            peak_ratio = peak_ratio.max(rho.values()[k] / sup_rho0);
        }
        dense[k] = rho.values()[k] > 0.5 * rho0.values()[k];
        if near_boundary[k] {
            continue;
        }
        let target = if hs.omega[k] { 0.0 } else { (t + 1.0) * rho0.values()[k] };
        defect = defect.max((rho.values()[k] - target).abs());
        if !hs.omega[k] && rho0.values()[k] > 0.0 {
            let r = rho.values()[k] / rho0.values()[k];
            ratio_min = ratio_min.min(r);
            ratio_max = ratio_max.max(r);
        }
    }
    // the flow's own vacated region against the Hele-Shaw area
    let vacated: Vec<bool> = dense.iter().map(|d| !d).collect();
    let area_defect = (area_of(rho0, &vacated) - hs.area).abs();
    DensityComparison { t, beta, defect, ratio_min, ratio_max, peak_ratio, area_defect }
}

/// Nodes of `mask` with a neighbour outside it, and vice versa.
fn boundary_mask(g: &PeriodicGrid, mask: &[bool]) -> Vec<bool> {
    (0..g.len())
        .map(|k| g.axis_offsets().iter().any(|&[a, b]| mask[g.shifted(k, [a, b])] != mask[k] || mask[g.shifted(k, [-a, -b])] != mask[k]))
        .collect()
}

/// Warm-started sweep: each `λ` starts from the previous envelope, which
/// lies above the new one. Sequential, hence deterministic.
pub fn hs_sweep_warm(injection: &Injection, lambdas: &[f64], cfg: &PsorConfig) -> Result<Vec<HSState>> {
    if lambdas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("lambda list must be strictly increasing".into()));
    }
    let g = *injection.grid();
    let mut prev: Option<ScalarField> = None;
    let mut out = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let problem = heleshaw_obstacle(&g, &injection.rho0, injection.pole, l, injection.epsilon)?;
        let r = project_psh_2d_with(&problem, prev.as_ref(), cfg)?;
        prev = Some(r.projected.clone());
        out.push(state_from(&injection.rho0, l, r));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::ddc;
    use std::f64::consts::PI;

    #[test]
    fn poisson_solver_inverts_the_discrete_operator() {
        let g = PeriodicGrid::square(32).unwrap();
        let s = ScalarField::from_fn(g, |x| (2.0 * PI * x[0]).cos() * (4.0 * PI * x[1]).sin() + 0.3 * (2.0 * PI * x[1]).cos());
        let f = solve_ddc_poisson(&s).unwrap();
        assert!(ddc(&f).sup_dist(&s) < 1e-10);
        assert!(f.min().abs() < 1e-15);
        assert!(solve_ddc_poisson(&s.add_constant(1.0)).is_err());
    }

    #[test]
    fn zero_injection_has_empty_region() {
        let inj = Injection::flat(PeriodicGrid::square(16).unwrap()).unwrap();
        let s = hs_solve(&inj, 0.0).unwrap();
        assert_eq!(s.area, 0.0);
        assert!(s.omega.iter().all(|o| !o));
    }

    #[test]
    fn flat_injection_grows_a_disc_of_the_injected_area() {
        let g = PeriodicGrid::square(64).unwrap();
        let inj = Injection::flat(g).unwrap();
        let states = hs_sweep(&inj, &[0.05, 0.1, 0.2]).unwrap();
        assert!(is_nested(&states));
        let h = g.spacing();
        for s in &states {
            assert!((s.area - s.lambda).abs() <= 3.0 * h + 5.0 * inj.epsilon.sqrt(), "{} {}", s.lambda, s.area);
            assert!(s.omega[inj.pole]);
        }
        let r = (0.1 / PI).sqrt();
        let (inner, outer) = states[1].radial_extent(inj.pole);
        assert!((inner - r).abs() <= 2.0 * h && (outer - r).abs() <= 2.0 * h, "{inner} {outer} {r}");
    }

    #[test]
    fn warm_sweep_matches_cold_sweep() {
        let inj = Injection::flat(PeriodicGrid::square(32).unwrap()).unwrap();
        let lambdas = [0.1, 0.3, 0.5];
        let cold = hs_sweep(&inj, &lambdas).unwrap();
        let warm = hs_sweep_warm(&inj, &lambdas, &PsorConfig::default()).unwrap();
        for (a, b) in cold.iter().zip(&warm) {
            assert_eq!(a.omega, b.omega);
        }
    }

    #[test]
    fn envelope_picture_reproduces_the_regions() {
        let inj = Injection::flat(PeriodicGrid::square(32).unwrap()).unwrap();
        let cmp = hs_vs_envelope_curve(&inj, &[0.0, 1.0]).unwrap();
        assert_eq!(cmp[0].defect, 0);
        assert!(cmp[1].defect <= cmp[1].boundary_band, "{cmp:?}");
    }

    #[test]
    fn density_starts_at_the_background() {
        let inj = Injection::flat(PeriodicGrid::square(16).unwrap()).unwrap();
        let (_, cmp) = hs_density_limit(&inj, 100.0, 0.0, 0.1).unwrap();
        assert!(cmp.defect < 1e-12);
    }
}
