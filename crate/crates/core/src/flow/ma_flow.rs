//! Log-Hessian flows of `φ = |x|²/2 + u`:
//!
//! * non-normalized: `∂u/∂t = (1/β)·log det(I + D²u) + H`
//! * normalized:     `∂u/∂t = (1/β)·log(MA(φ)/dV) − u + f`
//!
//! The implicit scheme is backward Euler. Past the first shock the exact
//! determinant is of order `e^{−β}` on the degenerate set, far below what
//! second differences can resolve, so the floor `delta_min` is imposed as a
//! constraint rather than a mere clamp: each step solves the complementarity
//! problem
//!
//! ```text
//! min( −R(u), det(D²φ) − floor ) = 0,   R = (u − uⁿ)/dt − rhs(u)
//! ```
//!
//! with a primal-dual active-set Newton iteration. Nodes on the floor are
//! the clamp events.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linalg::{bicgstab, solve_cyclic_tridiagonal};
use crate::error::{Error, Result};
use crate::torus::{convexity_with_tol, curvature_resolution, hessian_at, hessian_of, MongeAmpereMeasure, QuasiPeriodicConvex, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Forward Euler with `dt ≤ 0.4·β·h²·λ_min(D²φ)`.
    ExplicitAdaptive,
    /// Backward Euler with a monotone Newton solve.
    SemiImplicitNewton,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub dt_initial: f64,
    pub dt_min: f64,
    pub scheme: Scheme,
    /// Floor applied inside the logarithm; every node below it is counted.
    pub delta_min: f64,
    /// Newton stops once the largest update falls below this.
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    /// Accepted states must be convex up to this tolerance.
    pub tol_conv: f64,
    pub max_halvings: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt_initial: 1e-2,
            dt_min: 1e-12,
            scheme: Scheme::SemiImplicitNewton,
            delta_min: 1e-12,
            newton_tol: 1e-12,
            newton_max_iters: 200,
            tol_conv: 1e-9,
            max_halvings: 40,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.dt_min > 0.0) {
            return bad("dt_min must be positive");
        }
        if !(self.dt_initial >= self.dt_min) {
            return bad("dt_initial must be at least dt_min");
        }
        if !(self.delta_min > 0.0 && self.delta_min <= 1e-6) {
            return bad("delta_min must lie in (0, 1e-6]");
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iters == 0 {
            return bad("newton_tol and newton_max_iters must be positive");
        }
        Ok(())
    }
}

/// A point on a finite-β trajectory together with step diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub beta: f64,
    pub phi: QuasiPeriodicConvex,
    /// Smallest eigenvalue of the discrete Hessian of `φ`.
    pub min_hess_eig: f64,
    /// Largest trace of the discrete Hessian of `φ`.
    pub max_hess_trace: f64,
    /// Running count of node-steps where the Hessian fell below `delta_min`.
    pub clamp_events: u64,
    /// Size of the last accepted step (0 before the first).
    pub last_dt: f64,
    /// `sup |∂u/∂t|` over the last accepted step.
    pub rate: f64,
}

impl FlowState {
    pub fn new(phi: QuasiPeriodicConvex, beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidArgument(format!("beta={beta} must be positive")));
        }
        let hess = hessian_of(phi.periodic());
        if hess.min_eigenvalue() <= 0.0 {
            return Err(Error::NonConvexInput { node: 0, value: hess.min_eigenvalue() });
        }
        let mut s = Self {
            t: 0.0,
            beta,
            phi,
            min_hess_eig: 0.0,
            max_hess_trace: 0.0,
            clamp_events: 0,
            last_dt: 0.0,
            rate: 0.0,
        };
        s.refresh_diagnostics();
        Ok(s)
    }

    fn refresh_diagnostics(&mut self) {
        let hess = hessian_of(self.phi.periodic());
        self.min_hess_eig = hess.min_eigenvalue();
        self.max_hess_trace = crate::torus::trace_norm(&hess);
    }
}

/// Right-hand side data: `∂u/∂t = (1/β)(log v − log_ref) + forcing − relax·u`.
struct Forcing<'a> {
    forcing: &'a [f64],
    log_ref: Option<Vec<f64>>,
    relax: f64,
}

impl Forcing<'_> {
    #[inline]
    fn log_ref(&self, k: usize) -> f64 {
        self.log_ref.as_ref().map_or(0.0, |l| l[k])
    }
}

enum Attempt {
    Accepted { u: ScalarField, clamps: u64 },
    /// `None`: Newton did not converge; `Some`: the update lost convexity.
    Rejected { min_eig: Option<f64> },
}

/// One step of the non-normalized flow of size `cfg.dt_initial`
/// (halved on rejection).
pub fn step_nonnormalized(state: &FlowState, hamiltonian: &ScalarField, cfg: &FlowConfig) -> Result<FlowState> {
    let forcing = nonnormalized(state, hamiltonian)?;
    step_with(state, &forcing, cfg.dt_initial, cfg)
}

/// One step of the normalized flow with reference measure `dv`.
pub fn step_normalized(
    state: &FlowState,
    f: &ScalarField,
    dv: &MongeAmpereMeasure,
    cfg: &FlowConfig,
) -> Result<FlowState> {
    let forcing = normalized(state, f, dv)?;
    step_with(state, &forcing, cfg.dt_initial, cfg)
}

/// Integrate the non-normalized flow up to `t_end`, calling `observe`
/// after every accepted step.
pub fn advance_nonnormalized(
    state: &FlowState,
    hamiltonian: &ScalarField,
    t_end: f64,
    cfg: &FlowConfig,
    observe: impl FnMut(&FlowState),
) -> Result<FlowState> {
    let forcing = nonnormalized(state, hamiltonian)?;
    advance(state, &forcing, t_end, cfg, observe)
}

/// Integrate the normalized flow up to `t_end`.
pub fn advance_normalized(
    state: &FlowState,
    f: &ScalarField,
    dv: &MongeAmpereMeasure,
    t_end: f64,
    cfg: &FlowConfig,
    observe: impl FnMut(&FlowState),
) -> Result<FlowState> {
    let forcing = normalized(state, f, dv)?;
    advance(state, &forcing, t_end, cfg, observe)
}

fn nonnormalized<'a>(state: &FlowState, hamiltonian: &'a ScalarField) -> Result<Forcing<'a>> {
    if hamiltonian.grid() != state.phi.grid() {
        return Err(Error::GridMismatch("hamiltonian vs state".into()));
    }
    Ok(Forcing { forcing: hamiltonian.values(), log_ref: None, relax: 0.0 })
}

fn normalized<'a>(state: &FlowState, f: &'a ScalarField, dv: &MongeAmpereMeasure) -> Result<Forcing<'a>> {
    let g = state.phi.grid();
    if f.grid() != g || dv.grid() != g {
        return Err(Error::GridMismatch("normalized flow data vs state".into()));
    }
    let vol = g.cell_volume();
    if let Some(k) = dv.masses().iter().position(|&m| m <= 0.0) {
        return Err(Error::InvalidArgument(format!("reference measure vanishes at node {k}")));
    }
    let log_ref = dv.masses().iter().map(|m| (m / vol).ln()).collect();
    Ok(Forcing { forcing: f.values(), log_ref: Some(log_ref), relax: 1.0 })
}

fn advance(
    state: &FlowState,
    forcing: &Forcing,
    t_end: f64,
    cfg: &FlowConfig,
    mut observe: impl FnMut(&FlowState),
) -> Result<FlowState> {
    cfg.validate()?;
    let mut s = state.clone();
    let mut dt = cfg.dt_initial;
    while t_end - s.t > 1e-12 * t_end.max(1.0) {
        let want = dt.min(t_end - s.t);
        s = step_with(&s, forcing, want, cfg)?;
        observe(&s);
        // grow back after a rejection
        dt = (2.0 * s.last_dt).min(cfg.dt_initial);
    }
    Ok(s)
}

fn step_with(state: &FlowState, forcing: &Forcing, dt: f64, cfg: &FlowConfig) -> Result<FlowState> {
    cfg.validate()?;
    let mut dt = dt;
    let mut last_eig = None;
    for _ in 0..=cfg.max_halvings {
        if dt < cfg.dt_min {
            return Err(Error::StepUnderflow { t: state.t, dt });
        }
        let (attempt, used) = match cfg.scheme {
            Scheme::SemiImplicitNewton => (implicit(state, forcing, dt, cfg), dt),
            Scheme::ExplicitAdaptive => explicit(state, forcing, dt, cfg)?,
        };
        match attempt {
            Attempt::Accepted { u, clamps } => {
                let rate = u.sup_dist(state.phi.periodic()) / used;
                let mut next = FlowState {
                    t: state.t + used,
                    beta: state.beta,
                    phi: QuasiPeriodicConvex::new_unchecked(u),
                    min_hess_eig: 0.0,
                    max_hess_trace: 0.0,
                    clamp_events: state.clamp_events + clamps,
                    last_dt: used,
                    rate,
                };
                next.refresh_diagnostics();
                return Ok(next);
            }
            Attempt::Rejected { min_eig } => {
                last_eig = min_eig;
                dt = 0.5 * used;
            }
        }
    }
    Err(match last_eig {
        Some(value) => Error::NonConvexState { t: state.t, value },
        None => Error::NewtonStall { t: state.t, dt: 2.0 * dt },
    })
}

#[inline]
fn det(m: &crate::torus::Sym2, two_d: bool) -> f64 {
    if two_d {
        m.xx * m.yy - m.xy * m.xy
    } else {
        m.xx
    }
}

fn implicit(state: &FlowState, forcing: &Forcing, dt: f64, cfg: &FlowConfig) -> Attempt {
    let un = state.phi.periodic();
    let g = *un.grid();
    let two_d = g.dim() == 2;
    let n_nodes = g.len();
    let inv_beta = 1.0 / state.beta;
    let diag_coef = 1.0 / dt + forcing.relax;
    // the floor must stay resolvable by second differences of u
    let mut floor = cfg.delta_min.max(curvature_resolution(un));
    if two_d {
        floor *= state.max_hess_trace.max(2.0);
    }
    // weight making the constraint comparable to the equation near the floor
    let weight = inv_beta / floor;

    let hessians = |u: &ScalarField| -> Vec<crate::torus::Sym2> {
        (0..n_nodes).into_par_iter().map(|k| hessian_at(u, k)).collect()
    };
    // equation residual R (≤ 0 where the floor binds)
    let residual = |u: &ScalarField, hs: &[crate::torus::Sym2]| -> Vec<f64> {
        (0..n_nodes)
            .map(|k| {
                let logv = det(&hs[k], two_d).max(floor).ln();
                diag_coef * u.values()[k]
                    - inv_beta * (logv - forcing.log_ref(k))
                    - forcing.forcing[k]
                    - un.values()[k] / dt
            })
            .collect()
    };

    // supersolution start: uⁿ + c
    let h0 = hessians(un);
    let c = residual(un, &h0).iter().fold(f64::NEG_INFINITY, |m, r| m.max(-r)) / diag_coef;
    let mut u = un.add_constant(c.max(0.0));
    let mut hs = hessians(&u);
    let mut active = vec![false; n_nodes];

    let mut converged = false;
    for _ in 0..cfg.newton_max_iters {
        let r = residual(&u, &hs);
        // active set of min(−R, w·(v − floor)) = 0
        for k in 0..n_nodes {
            active[k] = weight * (det(&hs[k], two_d) - floor) < -r[k];
        }
        let rows: Vec<Row> = (0..n_nodes)
            .map(|k| {
                let v = det(&hs[k], two_d);
                if active[k] {
                    // w·(v + cof:D²δ − floor) = 0, sign flipped to keep the stencil elliptic
                    Row { mass: 0.0, scale: weight, rhs: weight * (v - floor) }
                } else {
                    Row { mass: diag_coef, scale: inv_beta / v.max(floor), rhs: -r[k] }
                }
            })
            .collect();
        let delta = match newton_direction(&g, &hs, &rows) {
            Some(d) => d,
            None => return Attempt::Rejected { min_eig: None },
        };
        let step_size = delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        if !step_size.is_finite() {
            return Attempt::Rejected { min_eig: None };
        }
        u = u.axpy(1.0, &ScalarField::from_vec(g, delta));
        hs = hessians(&u);
        // nodes sitting exactly on the floor may flip in and out of the
        // active set at roundoff level; only the update size matters
        if step_size <= cfg.newton_tol * (1.0 + u.sup_norm()) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Attempt::Rejected { min_eig: None };
    }
    accept(u, active.iter().filter(|&&a| a).count() as u64, cfg)
}

/// One linearized row: `mass·δ − scale·cof(D²φ):D²δ = rhs`.
struct Row {
    mass: f64,
    scale: f64,
    rhs: f64,
}

/// Solve the linearized step: cyclic tridiagonal in 1D, BiCGSTAB in 2D.
fn newton_direction(g: &crate::torus::PeriodicGrid, hs: &[crate::torus::Sym2], rows: &[Row]) -> Option<Vec<f64>> {
    let n = g.n();
    let inv_h2 = (n * n) as f64;
    let rhs: Vec<f64> = rows.iter().map(|r| r.rhs).collect();
    if g.dim() == 1 {
        let off: Vec<f64> = rows.iter().map(|r| -r.scale * inv_h2).collect();
        let dia: Vec<f64> = rows.iter().map(|r| r.mass + 2.0 * r.scale * inv_h2).collect();
        return Some(solve_cyclic_tridiagonal(&off, &dia, &off, &rhs));
    }
    // cofactor coefficients of the 2×2 Hessian
    let coef: Vec<[f64; 3]> = hs
        .iter()
        .zip(rows)
        .map(|(m, r)| [r.scale * m.yy, r.scale * m.xx, -2.0 * r.scale * m.xy])
        .collect();
    if coef.iter().any(|c| !(c[0] > 0.0 && c[1] > 0.0)) {
        return None;
    }
    let diag: Vec<f64> = rows.iter().zip(&coef).map(|(r, c)| r.mass + 2.0 * inv_h2 * (c[0] + c[1])).collect();
    let apply = |x: &[f64], out: &mut [f64]| {
        out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let ip = (i + 1) % n;
            let im = (i + n - 1) % n;
            for (j, o) in row.iter_mut().enumerate() {
                let jp = (j + 1) % n;
                let jm = (j + n - 1) % n;
                let k = i * n + j;
                let c = x[k];
                let dxx = (x[ip * n + j] - 2.0 * c + x[im * n + j]) * inv_h2;
                let dyy = (x[i * n + jp] - 2.0 * c + x[i * n + jm]) * inv_h2;
                let dxy = (x[ip * n + jp] - x[ip * n + jm] - x[im * n + jp] + x[im * n + jm]) * 0.25 * inv_h2;
                let cf = coef[k];
                *o = rows[k].mass * c - (cf[0] * dxx + cf[1] * dyy + cf[2] * dxy);
            }
        });
    };
    let mut x = vec![0.0; rhs.len()];
    let out = bicgstab(apply, &diag, &rhs, &mut x, 1e-12, 20 * rhs.len());
    out.converged.then_some(x)
}

fn accept(u: ScalarField, clamps: u64, cfg: &FlowConfig) -> Attempt {
    let conv = convexity_with_tol(&u, cfg.tol_conv);
    if conv.min < -conv.tolerance {
        return Attempt::Rejected { min_eig: Some(conv.min) };
    }
    Attempt::Accepted { u, clamps }
}

fn explicit(state: &FlowState, forcing: &Forcing, dt: f64, cfg: &FlowConfig) -> Result<(Attempt, f64)> {
    let un = state.phi.periodic();
    let g = *un.grid();
    let h = g.spacing();
    let hess = hessian_of(un);
    let lam = hess.min_eigenvalue().max(cfg.delta_min);
    let limit = 0.4 * state.beta * h * h * lam;
    let dt = dt.min(limit);
    if dt < cfg.dt_min {
        return Err(Error::StepUnderflow { t: state.t, dt });
    }
    let inv_beta = 1.0 / state.beta;
    let mut clamps = 0u64;
    let values: Vec<f64> = (0..g.len())
        .map(|k| {
            let v = hess.det(k);
            if v < cfg.delta_min {
                clamps += 1;
            }
            let rate = inv_beta * (v.max(cfg.delta_min).ln() - forcing.log_ref(k)) + forcing.forcing[k]
                - forcing.relax * un.values()[k];
            un.values()[k] + dt * rate
        })
        .collect();
    let u = ScalarField::from_vec(g, values);
    Ok((accept(u, clamps, cfg), dt))
}

/// `max(sup tr D²φ₀, sup tr|D²H|)`; times `(t + 1)` it bounds the Hessian
/// trace of the flow at time `t`.
pub fn trace_bound_constant(phi0: &QuasiPeriodicConvex, hamiltonian: &ScalarField) -> f64 {
    let dim = hamiltonian.grid().dim();
    let data = crate::torus::trace_norm(&hessian_of(phi0.periodic()));
    let forcing = hessian_of(hamiltonian)
        .entries()
        .iter()
        .map(|m| {
            let a = m.xx - 1.0;
            if dim == 1 {
                return a.abs();
            }
            let c = m.yy - 1.0;
            // |λ₁| + |λ₂| = max(|λ₁ + λ₂|, |λ₁ − λ₂|)
            (a + c).abs().max((a - c).hypot(2.0 * m.xy))
        })
        .fold(0.0, f64::max);
    data.max(forcing)
}

/// Non-normalized time `s` corresponding to normalized time `t`: `e^t = s + 1`.
pub fn nonnormalized_time(t: f64) -> f64 {
    t.exp_m1()
}

/// Normalized time `t` corresponding to non-normalized time `s`.
pub fn normalized_time(s: f64) -> f64 {
    s.ln_1p()
}

/// Constant separating the two normalizations,
/// `c_β(t) = (n/β)(t − 1 + e^{−t})`.
///
/// If `U_s` solves `∂U/∂s = (1/β)·log det((1+s)I + D²U) + f` (the
/// non-normalized flow in the growing class), then
/// `U_s/(1+s) − c_β(t)` with `s = e^t − 1` solves the normalized flow with
/// uniform `dV`.
pub fn normalization_shift(dim: usize, beta: f64, t: f64) -> f64 {
    dim as f64 / beta * (t - 1.0 + (-t).exp())
}

/// Map a periodic part of the growing-class flow at time `s` to the
/// normalized chart.
pub fn to_normalized(u_s: &ScalarField, beta: f64, s: f64) -> ScalarField {
    let t = normalized_time(s);
    let shift = normalization_shift(u_s.grid().dim(), beta, t);
    u_s.scaled(1.0 / (1.0 + s)).add_constant(-shift)
}
