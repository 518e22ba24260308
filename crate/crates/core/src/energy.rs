//! Energy functionals of torus-invariant potentials `φ = |x|²/2 + u`.
//!
//! The Aubin–Mabuchi energy is the mixed-determinant sum
//!
//! ```text
//! E(u) = 1/(n+1) · Σ_j Σ_nodes u · MA_j(u) · hⁿ
//! ```
//!
//! where `MA_j` mixes `j` copies of `I + D²u` with `n − j` identities. On the
//! continuum torus `∫ det D²u = 0`, so `E(u + c) = E(u) + c`; the 2D
//! centered cross difference only gives that to `O(h²)`. We therefore
//! evaluate the mixed sum on the mean-free part and add `ū·∫MA(u)`, which
//! makes `E(u + c) = E(u) + c·∫MA(u)` hold to roundoff in both dimensions
//! and leaves `E_θ` exactly shift invariant.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::{hessian_at, monge_ampere_unchecked, MongeAmpereMeasure, QuasiPeriodicConvex, ScalarField};

/// `Σ_j MA_j(u)` per node, without the cell volume.
fn mixed_sum(u: &ScalarField, k: usize) -> f64 {
    let m = hessian_at(u, k);
    match u.grid().dim() {
        // 1 + (1 + u'')
        1 => 1.0 + m.xx,
        // 1 + ½tr(I + D²u) + det(I + D²u)
        _ => 1.0 + 0.5 * (m.xx + m.yy) + (m.xx * m.yy - m.xy * m.xy),
    }
}

fn check_grids(a: &ScalarField, b: &ScalarField, what: &str) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch(what.into()));
    }
    Ok(())
}

/// Aubin–Mabuchi energy of `φ`, normalized so that `E(c) = c`.
pub fn aubin_mabuchi(phi: &QuasiPeriodicConvex) -> f64 {
    let u = phi.periodic();
    let g = *u.grid();
    let mean = u.mean();
    let centered = u.add_constant(-mean);
    let n1 = (g.dim() + 1) as f64;
    // parallel map, sequential sum: the result must not depend on the pool size
    let terms: Vec<f64> = (0..g.len()).into_par_iter().map(|k| centered.values()[k] * mixed_sum(&centered, k)).collect();
    let mixed = terms.iter().sum::<f64>() * g.cell_volume() / n1;
    mixed + mean * monge_ampere_unchecked(u).total()
}

/// `Σ a·μ` for a field and a measure on the same grid.
fn pair(a: &ScalarField, mu: &MongeAmpereMeasure) -> f64 {
    a.values().iter().zip(mu.masses()).map(|(x, m)| x * m).sum()
}

/// `E_θ(φ) = E(φ) − ∫ u·MA(φ) + ∫ f·MA(φ)`.
pub fn e_theta(phi: &QuasiPeriodicConvex, f: &ScalarField) -> Result<f64> {
    check_grids(phi.periodic(), f, "twisting potential vs potential")?;
    let ma = monge_ampere_unchecked(phi.periodic());
    // subtract the mean before pairing so the cancellation is exact
    let u = phi.periodic();
    let centered = u.add_constant(-u.mean());
    let e = aubin_mabuchi(&QuasiPeriodicConvex::new_unchecked(centered.clone()));
    Ok(e - pair(&centered, &ma) + pair(f, &ma))
}

/// `I(u, v) = ∫ (u − v)(MA(v) − MA(u))`, symmetric and nonnegative.
///
/// `u − v` is paired after removing its mean: the two measures have equal
/// mass on the continuum, and centering keeps `I(u + c, v) = I(u, v)` exact
/// where the 2D discrete masses differ at `O(h²)`.
pub fn i_functional(u: &QuasiPeriodicConvex, v: &QuasiPeriodicConvex) -> Result<f64> {
    check_grids(u.periodic(), v.periodic(), "I-functional arguments")?;
    let mu = monge_ampere_unchecked(u.periodic());
    let mv = monge_ampere_unchecked(v.periodic());
    let w: Vec<f64> = u.periodic().values().iter().zip(v.periodic().values()).map(|(a, b)| a - b).collect();
    let w_mean = w.iter().sum::<f64>() / w.len() as f64;
    Ok(w.iter().zip(mu.masses().iter().zip(mv.masses())).map(|(d, (ma, mb))| (d - w_mean) * (mb - ma)).sum())
}

/// Relative entropy `Σ μ·log(μ/μ₀)`; `+∞` when `μ` charges a `μ₀`-null cell.
pub fn entropy(mu: &MongeAmpereMeasure, mu0: &MongeAmpereMeasure) -> Result<f64> {
    if mu.grid() != mu0.grid() {
        return Err(Error::GridMismatch("entropy arguments".into()));
    }
    let mut acc = 0.0;
    for (&m, &m0) in mu.masses().iter().zip(mu0.masses()) {
        if m == 0.0 {
            continue;
        }
        if m0 == 0.0 {
            return Ok(f64::INFINITY);
        }
        acc += m * (m / m0).ln();
    }
    Ok(acc)
}

/// `F_β = E_θ + H_{dV}(MA(φ))/β` with uniform reference measure.
pub fn free_energy(phi: &QuasiPeriodicConvex, f: &ScalarField, beta: f64) -> Result<f64> {
    let ma = monge_ampere_unchecked(phi.periodic());
    let h = entropy(&ma, &MongeAmpereMeasure::uniform(*phi.grid()))?;
    Ok(e_theta(phi, f)? + h / beta)
}

/// One row of an energy trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub t: f64,
    pub energy: f64,
    pub e_theta: f64,
    pub entropy: f64,
    /// `+∞` when the entropy is.
    pub free_energy: f64,
    /// `I(φ_t, φ_prev)`; `0` on the first row.
    pub i_vs_prev: f64,
}

/// Energies along a stored trajectory, `β = ∞` giving `F = E_θ`.
pub fn energy_trajectory(states: &[(f64, QuasiPeriodicConvex)], f: &ScalarField, beta: f64) -> Result<Vec<EnergyReport>> {
    let mut out = Vec::with_capacity(states.len());
    for (i, (t, phi)) in states.iter().enumerate() {
        let ma = monge_ampere_unchecked(phi.periodic());
        let ent = entropy(&ma, &MongeAmpereMeasure::uniform(*phi.grid()))?;
        let et = e_theta(phi, f)?;
        let free_energy = if beta.is_infinite() { et } else { et + ent / beta };
        let i_vs_prev = if i == 0 { 0.0 } else { i_functional(phi, &states[i - 1].1)? };
        out.push(EnergyReport { t: *t, energy: aubin_mabuchi(phi), e_theta: et, entropy: ent, free_energy, i_vs_prev });
    }
    Ok(out)
}

/// Number of steps where `values` grows by more than `tol`.
pub fn count_increases(values: impl IntoIterator<Item = f64>, tol: f64) -> usize {
    let v: Vec<f64> = values.into_iter().collect();
    v.windows(2).filter(|w| w[1] > w[0] + tol).count()
}

/// Slack in `E_θ(φ_{t+s}) − E_θ(φ_t) ≤ −I(φ_{t+s}, φ_t)/(eˢ − 1)` along the
/// normalized envelope curve; nonnegative when the inequality holds.
pub fn theta_decrease_slack(
    phi_t: &QuasiPeriodicConvex,
    phi_ts: &QuasiPeriodicConvex,
    f: &ScalarField,
    s: f64,
) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::InvalidArgument("time increment must be positive".into()));
    }
    let drop = e_theta(phi_ts, f)? - e_theta(phi_t, f)?;
    let bound = -i_functional(phi_ts, phi_t)? / s.exp_m1();
    Ok(bound - drop)
}
