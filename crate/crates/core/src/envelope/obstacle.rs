//! Envelopes of ω₀-subharmonic functions on the 2-torus by projected SOR.
//!
//! Discrete convention: `u` is admissible when `DDC_SCALE·Δu + ρ ≥ 0`,
//! with `Δ` the plain 5-point Laplacian and `ρ` the effective density
//! (background density minus an optional sink).

use serde::{Deserialize, Serialize};

use super::{EnvelopeResult, TOL_CONTACT};
use crate::error::{Error, Result};
use crate::torus::{PeriodicGrid, ScalarField, DDC_SCALE};

/// Tolerance on the unit mass of a background density.
pub const MASS_TOL: f64 = 1e-8;

/// Obstacle problem `sup{u ≤ obstacle : DDC·Δu + ρ₀ − sink ≥ 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleProblem2D {
    grid: PeriodicGrid,
    rho0: ScalarField,
    obstacle: ScalarField,
    sink: ScalarField,
}

impl ObstacleProblem2D {
    /// `rho0` must be nonnegative with unit mass; no sink.
    pub fn new(rho0: ScalarField, obstacle: ScalarField) -> Result<Self> {
        let grid = *rho0.grid();
        if grid.dim() != 2 {
            return Err(Error::UnsupportedDim(grid.dim()));
        }
        if *obstacle.grid() != grid {
            return Err(Error::GridMismatch("obstacle vs density".into()));
        }
        check_density(&rho0)?;
        let sink = ScalarField::zeros(grid);
        Ok(Self { grid, rho0, obstacle, sink })
    }

    /// Attach a nonnegative sink density subtracted from `rho0`.
    pub fn with_sink(mut self, sink: ScalarField) -> Result<Self> {
        if *sink.grid() != self.grid {
            return Err(Error::GridMismatch("sink vs density".into()));
        }
        if sink.min() < 0.0 {
            return Err(Error::InvalidArgument("sink must be nonnegative".into()));
        }
        self.sink = sink;
        Ok(self)
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn rho0(&self) -> &ScalarField {
        &self.rho0
    }

    pub fn obstacle(&self) -> &ScalarField {
        &self.obstacle
    }

    pub fn sink(&self) -> &ScalarField {
        &self.sink
    }

    /// `ρ₀ − sink`.
    pub fn effective_density(&self) -> ScalarField {
        self.rho0.axpy(-1.0, &self.sink)
    }
}

pub(crate) fn check_density(rho0: &ScalarField) -> Result<()> {
    if rho0.min() < 0.0 {
        return Err(Error::InvalidArgument("density must be nonnegative".into()));
    }
    let mass = rho0.integral();
    if (mass - 1.0).abs() > MASS_TOL {
        return Err(Error::InvalidArgument(format!("density has mass {mass}, expected 1")));
    }
    Ok(())
}

/// Projected SOR parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsorConfig {
    pub omega: f64,
    pub tol: f64,
    pub max_sweeps: usize,
    pub check_every: usize,
}

impl Default for PsorConfig {
    fn default() -> Self {
        Self { omega: 1.5, tol: 1e-8, max_sweeps: 1_000_000, check_every: 50 }
    }
}

/// Solve with default settings, starting from the obstacle.
pub fn project_psh_2d(problem: &ObstacleProblem2D) -> Result<EnvelopeResult> {
    project_psh_2d_with(problem, None, &PsorConfig::default())
}

/// Solve, optionally warm-started from `initial` (clipped to the obstacle).
pub fn project_psh_2d_with(
    problem: &ObstacleProblem2D,
    initial: Option<&ScalarField>,
    cfg: &PsorConfig,
) -> Result<EnvelopeResult> {
    let g = problem.grid;
    let n = g.n();
    let h = g.spacing();
    let obstacle = problem.obstacle.values();
    let rho = problem.effective_density();
    // Gauss–Seidel target: u = (Σ neighbours + 4πh²ρ)/4
    let source: Vec<f64> = rho.values().iter().map(|r| h * h * r / DDC_SCALE).collect();
    let mut u: Vec<f64> = match initial {
        Some(init) => init.values().iter().zip(obstacle).map(|(a, b)| a.min(*b)).collect(),
        None => obstacle.to_vec(),
    };
    let omega = cfg.omega;
    let mut sweeps = 0usize;
    loop {
        for _ in 0..cfg.check_every {
            for i in 0..n {
                let up = if i + 1 == n { 0 } else { i + 1 } * n;
                let dn = if i == 0 { n - 1 } else { i - 1 } * n;
                let row = i * n;
                for j in 0..n {
                    let jl = if j == 0 { n - 1 } else { j - 1 };
                    let jr = if j + 1 == n { 0 } else { j + 1 };
                    let k = row + j;
                    let nb = u[up + j] + u[dn + j] + u[row + jl] + u[row + jr];
                    let gs = 0.25 * (nb + source[k]);
                    let relaxed = u[k] + omega * (gs - u[k]);
                    u[k] = relaxed.min(obstacle[k]);
                }
            }
            sweeps += 1;
        }
        let field = ScalarField::from_vec(g, u);
        let residual = complementarity_residual(problem, &field);
        if residual <= cfg.tol {
            let coincidence =
                field.values().iter().zip(obstacle).map(|(a, b)| *a >= b - TOL_CONTACT).collect();
            return Ok(EnvelopeResult { projected: field, coincidence, residual, iterations: sweeps });
        }
        if !residual.is_finite() || sweeps >= cfg.max_sweeps {
            return Err(Error::MaxIterations { iterations: sweeps, residual });
        }
        u = field.into_values();
    }
}

/// `max |min(obstacle − u, DDC·Δu + ρ_eff)|` over all nodes.
pub fn complementarity_residual(problem: &ObstacleProblem2D, u: &ScalarField) -> f64 {
    let g = problem.grid;
    let lap = crate::torus::ddc(u);
    let rho0 = problem.rho0.values();
    let sink = problem.sink.values();
    let obstacle = problem.obstacle.values();
    (0..g.len())
        .map(|k| {
            let gap = obstacle[k] - u.values()[k];
            let pde = lap.values()[k] + rho0[k] - sink[k];
            gap.min(pde).abs()
        })
        .fold(0.0, f64::max)
}

/// Regularized unit point mass `ε / (π(d² + ε)²)` at node `pole`,
/// renormalized so that its Riemann sum is exactly one.
pub fn smoothed_point_mass(grid: &PeriodicGrid, pole: usize, epsilon: f64) -> ScalarField {
    let p = grid.coord(pole);
    let raw = ScalarField::from_fn(*grid, |x| {
        let d2 = grid.torus_dist2(x, p);
        epsilon / (std::f64::consts::PI * (d2 + epsilon).powi(2))
    });
    let mass = raw.integral();
    raw.scaled(1.0 / mass)
}

/// Regularized log barrier `λ·log(d² + ε)` about the pole.
pub fn log_barrier(grid: &PeriodicGrid, pole: usize, lambda: f64, epsilon: f64) -> ScalarField {
    let p = grid.coord(pole);
    ScalarField::from_fn(*grid, |x| lambda * (grid.torus_dist2(x, p) + epsilon).ln())
}

/// Single-point Hele-Shaw envelope problem at injection strength `λ`.
///
/// The pole is not imposed through the obstacle: the log barrier is
/// subharmonic away from its pole, so on the torus it cannot be glued to
/// the constraint `u ≤ 0` with a fixed constant. Instead the singular part
/// is moved to the density, which loses a smoothed point mass of weight λ
/// at the pole, and the obstacle is identically zero. The free region is
/// then the set where the solution is strictly negative.
pub fn heleshaw_obstacle(
    grid: &PeriodicGrid,
    rho0: &ScalarField,
    pole: usize,
    lambda: f64,
    epsilon: f64,
) -> Result<ObstacleProblem2D> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!("lambda={lambda} outside [0,1]")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon={epsilon} must be positive")));
    }
    if pole >= grid.len() {
        return Err(Error::InvalidArgument(format!("pole node {pole} out of range")));
    }
    if rho0.grid() != grid {
        return Err(Error::GridMismatch("density vs grid".into()));
    }
    let sink = smoothed_point_mass(grid, pole, epsilon).scaled(lambda);
    ObstacleProblem2D::new(rho0.clone(), ScalarField::zeros(*grid))?.with_sink(sink)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(n: usize) -> (PeriodicGrid, ScalarField) {
        let g = PeriodicGrid::square(n).unwrap();
        (g, ScalarField::constant(g, 1.0))
    }

    #[test]
    fn admissible_obstacle_is_its_own_envelope() {
        let (g, rho) = flat(16);
        let p = ObstacleProblem2D::new(rho, ScalarField::zeros(g)).unwrap();
        let r = project_psh_2d(&p).unwrap();
        assert!(r.projected.sup_norm() == 0.0);
        assert!(r.coincidence.iter().all(|&c| c));
    }

    #[test]
    fn pit_opens_an_annulus() {
        let (g, rho) = flat(32);
        let pit = g.index(16, 16);
        let mut obs = vec![1.0; g.len()];
        obs[pit] = -1.0;
        let p = ObstacleProblem2D::new(rho, ScalarField::new(g, obs).unwrap()).unwrap();
        let r = project_psh_2d(&p).unwrap();
        assert!(r.residual <= 1e-8);
        assert!(r.coincidence[pit]);
        let nb = g.index(17, 16);
        assert!(!r.coincidence[nb]);
        assert!(r.projected.values().iter().zip(p.obstacle().values()).all(|(u, o)| *u <= o + TOL_CONTACT));
        assert!(complementarity_residual(&p, &r.projected) <= 1e-8);
    }

    #[test]
    fn zero_strength_is_trivial() {
        let (g, rho) = flat(16);
        let p = heleshaw_obstacle(&g, &rho, g.index(8, 8), 0.0, 1e-3).unwrap();
        let r = project_psh_2d(&p).unwrap();
        assert!(r.projected.sup_norm() == 0.0);
    }

    #[test]
    fn barrier_at_pole_is_log_eps() {
        let g = PeriodicGrid::square(64).unwrap();
        let h = g.spacing();
        let pole = g.index(10, 20);
        let b = log_barrier(&g, pole, 1.0, h * h);
        assert!((b.values()[pole] - 2.0 * h.ln()).abs() < 1e-14);
        let b2 = log_barrier(&g, pole, 0.5, h * h);
        assert!(b.values().iter().zip(b2.values()).all(|(x, y)| *x <= *y || *x > 0.0));
    }

    #[test]
    fn point_mass_is_normalized() {
        let g = PeriodicGrid::square(32).unwrap();
        let d = smoothed_point_mass(&g, 5, 1e-3);
        assert!((d.integral() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_density() {
        let g = PeriodicGrid::square(16).unwrap();
        let rho = ScalarField::constant(g, 2.0);
        assert!(ObstacleProblem2D::new(rho, ScalarField::zeros(g)).is_err());
    }
}
