//! Explicit solver for `∂ψ/∂t + H(∇ψ) = (1/β)·Δψ`.
//!
//! Upwinding: the exact Godunov flux of the piecewise-linear Hamiltonian in
//! 1D, local Lax–Friedrichs in 2D.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::{PeriodicGrid, ScalarField};

/// How stored samples relate to the function they represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    /// Samples are the (periodic) function itself.
    Plain,
    /// Samples are the periodic part `w` of `|y|²/2 + w`.
    QuasiPeriodic,
}

/// Hamiltonian `H(p)` of the first-order term.
#[derive(Debug, Clone, PartialEq)]
pub enum Hamiltonian {
    Zero,
    /// `|p|²/2`.
    Quadratic,
    /// A periodic function of `p` given by samples, interpolated
    /// (bi)linearly.
    Periodic(ScalarField),
}

impl Hamiltonian {
    pub fn eval(&self, p: [f64; 2], dim: usize) -> f64 {
        match self {
            Hamiltonian::Zero => 0.0,
            Hamiltonian::Quadratic => 0.5 * (p[0] * p[0] + if dim == 2 { p[1] * p[1] } else { 0.0 }),
            Hamiltonian::Periodic(f) => interpolate(f, p),
        }
    }

    /// Bound on `|∂H/∂p_a|` over gradients with `|p_a| ≤ p_max[a]`.
    fn lipschitz(&self, p_max: [f64; 2]) -> [f64; 2] {
        match self {
            Hamiltonian::Zero => [0.0; 2],
            Hamiltonian::Quadratic => p_max,
            Hamiltonian::Periodic(f) => {
                let g = f.grid();
                let n = g.n() as f64;
                let mut l = [0.0f64; 2];
                for k in 0..g.len() {
                    for (a, d) in g.axis_offsets().iter().enumerate() {
                        let s = (f.values()[g.shifted(k, *d)] - f.values()[k]).abs() * n;
                        l[a] = l[a].max(s);
                    }
                }
                l
            }
        }
    }

    /// `min` (if `p⁻ ≤ p⁺`) or `max` of `H` between the one-sided slopes.
    fn godunov_1d(&self, pm: f64, pp: f64) -> f64 {
        let (lo, hi) = if pm <= pp { (pm, pp) } else { (pp, pm) };
        let pick = |a: f64, b: f64| if pm <= pp { a.min(b) } else { a.max(b) };
        let mut best = pick(self.eval([lo, 0.0], 1), self.eval([hi, 0.0], 1));
        match self {
            Hamiltonian::Zero => 0.0,
            Hamiltonian::Quadratic => {
                if pm <= pp && lo <= 0.0 && hi >= 0.0 {
                    0.0
                } else {
                    best
                }
            }
            Hamiltonian::Periodic(f) => {
                // interior breakpoints of the piecewise-linear interpolant
                let n = f.grid().n() as f64;
                let mut m = (lo * n).ceil();
                while m < hi * n {
                    best = pick(best, self.eval([m / n, 0.0], 1));
                    m += 1.0;
                }
                best
            }
        }
    }
}

fn interpolate(f: &ScalarField, p: [f64; 2]) -> f64 {
    let g = f.grid();
    let n = g.n() as f64;
    let s = p[0] * n;
    let i = s.floor();
    let a = s - i;
    let i = i as isize;
    if g.dim() == 1 {
        return (1.0 - a) * f.at(i, 0) + a * f.at(i + 1, 0);
    }
    let t = p[1] * n;
    let j = t.floor();
    let b = t - j;
    let j = j as isize;
    (1.0 - a) * ((1.0 - b) * f.at(i, j) + b * f.at(i, j + 1)) + a * ((1.0 - b) * f.at(i + 1, j) + b * f.at(i + 1, j + 1))
}

/// Result of one explicit step.
#[derive(Debug, Clone, PartialEq)]
pub struct ViscosityStep {
    pub psi: ScalarField,
    /// Mean of the numerical Hamiltonian over the nodes.
    pub mean_hamiltonian: f64,
}

/// Largest stable step for the given state.
pub fn viscosity_dt_limit(psi: &ScalarField, chart: Chart, hamiltonian: &Hamiltonian, beta: f64) -> f64 {
    let g = psi.grid();
    let h = g.spacing();
    let grads = one_sided_gradients(psi, chart);
    let mut p_max = [0.0f64; 2];
    for (m, p) in &grads {
        for a in 0..g.dim() {
            p_max[a] = p_max[a].max(m[a].abs()).max(p[a].abs());
        }
    }
    let lip = hamiltonian.lipschitz(p_max);
    let n = g.dim() as f64;
    let rate = 2.0 * n / (beta * h * h) + (lip[0] + lip[1]) / h;
    0.9 / rate
}

/// Backward and forward gradients of the represented function at each node.
fn one_sided_gradients(psi: &ScalarField, chart: Chart) -> Vec<([f64; 2], [f64; 2])> {
    let g: &PeriodicGrid = psi.grid();
    let n = g.n() as f64;
    let h = g.spacing();
    let v = psi.values();
    (0..g.len())
        .map(|k| {
            let x = g.coord(k);
            let mut back = [0.0; 2];
            let mut fwd = [0.0; 2];
            for (a, d) in g.axis_offsets().iter().enumerate() {
                let kp = g.shifted(k, *d);
                let km = g.shifted(k, [-d[0], -d[1]]);
                fwd[a] = (v[kp] - v[k]) * n;
                back[a] = (v[k] - v[km]) * n;
                if chart == Chart::QuasiPeriodic {
                    fwd[a] += x[a] + 0.5 * h;
                    back[a] += x[a] - 0.5 * h;
                }
            }
            (back, fwd)
        })
        .collect()
}

/// One explicit step of size `dt`.
pub fn step_linear_viscosity(
    psi: &ScalarField,
    chart: Chart,
    hamiltonian: &Hamiltonian,
    beta: f64,
    dt: f64,
) -> Result<ViscosityStep> {
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("beta={beta} must be positive")));
    }
    let g = *psi.grid();
    if let Hamiltonian::Periodic(f) = hamiltonian {
        if f.grid().dim() != g.dim() {
            return Err(Error::GridMismatch("hamiltonian dimension vs field".into()));
        }
    }
    let limit = viscosity_dt_limit(psi, chart, hamiltonian, beta);
    if dt > limit {
        return Err(Error::CflViolation { dt, limit });
    }
    let dim = g.dim();
    let grads = one_sided_gradients(psi, chart);
    let numerical: Vec<f64> = if dim == 1 {
        grads.iter().map(|(m, p)| hamiltonian.godunov_1d(m[0], p[0])).collect()
    } else {
        let mut p_max = [0.0f64; 2];
        for (m, p) in &grads {
            for a in 0..2 {
                p_max[a] = p_max[a].max(m[a].abs()).max(p[a].abs());
            }
        }
        let alpha = hamiltonian.lipschitz(p_max);
        grads
            .iter()
            .map(|(m, p)| {
                let c = [0.5 * (m[0] + p[0]), 0.5 * (m[1] + p[1])];
                hamiltonian.eval(c, 2) - 0.5 * alpha[0] * (p[0] - m[0]) - 0.5 * alpha[1] * (p[1] - m[1])
            })
            .collect()
    };
    let lap = crate::torus::laplacian(psi);
    let quad_lap = if chart == Chart::QuasiPeriodic { dim as f64 } else { 0.0 };
    let values = (0..g.len())
        .map(|k| psi.values()[k] + dt * ((lap.values()[k] + quad_lap) / beta - numerical[k]))
        .collect();
    let mean_hamiltonian = numerical.iter().sum::<f64>() / numerical.len() as f64;
    Ok(ViscosityStep { psi: ScalarField::from_vec(g, values), mean_hamiltonian })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn heat_flow_obeys_maximum_principle() {
        let g = PeriodicGrid::line(64).unwrap();
        let mut psi = ScalarField::from_fn(g, |x| (2.0 * PI * x[0]).sin() + 0.3 * (6.0 * PI * x[0]).cos());
        let beta = 10.0;
        let dt = viscosity_dt_limit(&psi, Chart::Plain, &Hamiltonian::Zero, beta);
        let mut last = psi.max();
        for _ in 0..200 {
            psi = step_linear_viscosity(&psi, Chart::Plain, &Hamiltonian::Zero, beta, dt).unwrap().psi;
            assert!(psi.max() <= last + 1e-15);
            last = psi.max();
        }
    }

    #[test]
    fn cfl_is_enforced() {
        let g = PeriodicGrid::line(64).unwrap();
        let psi = ScalarField::zeros(g);
        let lim = viscosity_dt_limit(&psi, Chart::Plain, &Hamiltonian::Zero, 1.0);
        assert!((lim - 0.9 * g.spacing().powi(2) / 2.0).abs() < 1e-15);
        assert!(matches!(
            step_linear_viscosity(&psi, Chart::Plain, &Hamiltonian::Zero, 1.0, 2.0 * lim),
            Err(Error::CflViolation { .. })
        ));
    }

    #[test]
    fn mean_changes_only_through_hamiltonian() {
        for (dim, chart) in [(1, Chart::Plain), (1, Chart::QuasiPeriodic), (2, Chart::QuasiPeriodic), (2, Chart::Plain)] {
            let g = PeriodicGrid::new(dim, 32).unwrap();
            let psi = ScalarField::from_fn(g, |x| 0.05 * (2.0 * PI * (x[0] + 0.5 * x[1])).sin());
            let ham = Hamiltonian::Periodic(ScalarField::from_fn(g, |p| (2.0 * PI * p[0]).cos() + p[1].sin()));
            let beta = 20.0;
            let dt = 0.5 * viscosity_dt_limit(&psi, chart, &ham, beta);
            let out = step_linear_viscosity(&psi, chart, &ham, beta, dt).unwrap();
            let quad = if chart == Chart::QuasiPeriodic { dim as f64 / beta } else { 0.0 };
            let expected = dt * (quad - out.mean_hamiltonian);
            assert!((out.psi.mean() - psi.mean() - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn godunov_quadratic_picks_entropy_value() {
        let h = Hamiltonian::Quadratic;
        // expansion fan through zero: minimum is 0
        assert_eq!(h.godunov_1d(-1.0, 2.0), 0.0);
        // shock: maximum of the endpoints
        assert_eq!(h.godunov_1d(1.0, -3.0), 4.5);
    }
}
