//! Logarithmic diffusion on the 2-torus:
//! `∂ρ/∂t = (1/β)·DDC_SCALE·Δ log ρ + s`.
//!
//! This is the density form of the log-Hessian flow in complex dimension
//! one, with `s = dd^c` of the twisting potential. The density is carried
//! as `w = log ρ`, since at large β it becomes exponentially small on the
//! free region and would underflow as a plain density.
//!
//! A backward Euler step solves `e^w − κ·dt·Δw = ρⁿ + dt·s` with
//! `κ = DDC_SCALE/β`. The left side is the gradient of the strictly convex
//! functional `Σ e^w + (κ·dt/2)·Σ|∇w|² − Σ b·w`, so Newton with an Armijo
//! line search converges; the Laplacian sums to zero, so mass changes by
//! exactly `dt·Σ s·h²`.

use serde::{Deserialize, Serialize};

use super::linalg::conjugate_gradient;
use crate::error::{Error, Result};
use crate::torus::{laplacian, ScalarField, DDC_SCALE};

/// Positive density stored through its logarithm.
#[derive(Debug, Clone, PartialEq)]
pub struct LogDensity {
    log_rho: ScalarField,
}

impl LogDensity {
    pub fn from_density(rho: &ScalarField) -> Result<Self> {
        if rho.grid().dim() != 2 {
            return Err(Error::UnsupportedDim(rho.grid().dim()));
        }
        if rho.min() <= 0.0 {
            return Err(Error::PositivityLoss { t: 0.0 });
        }
        Ok(Self { log_rho: rho.map(f64::ln) })
    }

    pub fn from_log(log_rho: ScalarField) -> Self {
        Self { log_rho }
    }

    pub fn log_values(&self) -> &ScalarField {
        &self.log_rho
    }

    pub fn density(&self) -> ScalarField {
        self.log_rho.map(f64::exp)
    }

    /// `Σ ρ·h²`.
    pub fn mass(&self) -> f64 {
        self.density().integral()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogDiffusionConfig {
    /// Newton stops when `max|G| ≤ tol·max(1, max|b|)`.
    pub tol: f64,
    pub max_newton: usize,
    pub max_halvings: usize,
}

impl Default for LogDiffusionConfig {
    fn default() -> Self {
        Self { tol: 1e-13, max_newton: 100, max_halvings: 40 }
    }
}

/// One backward Euler step of size `dt`.
pub fn step_log_diffusion_2d(
    state: &LogDensity,
    source: &ScalarField,
    beta: f64,
    dt: f64,
    cfg: &LogDiffusionConfig,
) -> Result<LogDensity> {
    let w0 = &state.log_rho;
    let g = *w0.grid();
    if source.grid() != &g {
        return Err(Error::GridMismatch("source vs density".into()));
    }
    if !(beta > 0.0 && dt > 0.0) {
        return Err(Error::InvalidArgument("beta and dt must be positive".into()));
    }
    let kdt = DDC_SCALE / beta * dt;
    let n = g.len();
    let inv_h2 = (g.n() * g.n()) as f64;
    let b: Vec<f64> = (0..n).map(|k| w0.values()[k].exp() + dt * source.values()[k]).collect();
    let b_scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = cfg.tol * b_scale;

    let objective = |w: &ScalarField| -> f64 {
        let lap = laplacian(w);
        (0..n).map(|k| w.values()[k].exp() - b[k] * w.values()[k] - 0.5 * kdt * w.values()[k] * lap.values()[k]).sum()
    };
    let gradient = |w: &ScalarField| -> Vec<f64> {
        let lap = laplacian(w);
        (0..n).map(|k| w.values()[k].exp() - kdt * lap.values()[k] - b[k]).collect()
    };

    let mut w = w0.clone();
    let mut grad = gradient(&w);
    let mut obj = objective(&w);
    for _ in 0..cfg.max_newton {
        let gmax = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax <= tol {
            return Ok(LogDensity { log_rho: w });
        }
        let ew: Vec<f64> = w.values().iter().map(|v| v.exp()).collect();
        let diag: Vec<f64> = ew.iter().map(|e| e + 4.0 * kdt * inv_h2).collect();
        let apply = |x: &[f64], out: &mut [f64]| {
            let lx = laplacian(&ScalarField::from_vec(g, x.to_vec()));
            for k in 0..n {
                out[k] = ew[k] * x[k] - kdt * lx.values()[k];
            }
        };
        let rhs: Vec<f64> = grad.iter().map(|v| -v).collect();
        let mut delta = vec![0.0; n];
        let out = conjugate_gradient(apply, &diag, &rhs, &mut delta, 1e-13, 10 * n);
        if !out.converged && out.iterations == 0 {
            return Err(Error::PositivityLoss { t: f64::NAN });
        }
        let slope: f64 = grad.iter().zip(&delta).map(|(a, d)| a * d).sum();
        if !(slope < 0.0) {
            // search direction lost descent through roundoff: done if close
            if gmax <= 1e3 * tol {
                return Ok(LogDensity { log_rho: w });
            }
            return Err(Error::PositivityLoss { t: f64::NAN });
        }
        let step = ScalarField::from_vec(g, delta);
        let mut theta = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let trial = w.axpy(theta, &step);
            if trial.values().iter().all(|v| v.is_finite()) {
                let t_obj = objective(&trial);
                if t_obj <= obj + 1e-4 * theta * slope || (t_obj - obj).abs() <= 1e-15 * obj.abs() {
                    w = trial;
                    obj = t_obj;
                    moved = true;
                    break;
                }
            }
            theta *= 0.5;
        }
        if !moved {
            return Err(Error::PositivityLoss { t: f64::NAN });
        }
        grad = gradient(&w);
    }
    Err(Error::PositivityLoss { t: f64::NAN })
}

/// Integrate to `t_end` with steps of at most `dt`, halving on failure.
pub fn advance_log_diffusion_2d(
    state: &LogDensity,
    source: &ScalarField,
    beta: f64,
    dt: f64,
    t_end: f64,
    cfg: &LogDiffusionConfig,
) -> Result<LogDensity> {
    let mut s = state.clone();
    let mut t = 0.0;
    while t_end - t > 1e-12 * t_end.max(1.0) {
        let mut h = dt.min(t_end - t);
        let mut halvings = 0;
        loop {
            match step_log_diffusion_2d(&s, source, beta, h, cfg) {
                Ok(next) => {
                    s = next;
                    t += h;
                    break;
                }
                Err(Error::PositivityLoss { .. }) if halvings < cfg.max_halvings => {
                    h *= 0.5;
                    halvings += 1;
                }
                Err(Error::PositivityLoss { .. }) => return Err(Error::PositivityLoss { t }),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(s)
}
