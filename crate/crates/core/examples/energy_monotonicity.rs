//! Energies along the two curves: E_θ decreases along the envelope curve and
//! the free energy F_β along the normalized flow.
//!
//! `cargo run --release --example energy_monotonicity`

use std::f64::consts::PI;

use rshock::energy::{count_increases, energy_trajectory, theta_decrease_slack};
use rshock::envelope::project_convex;
use rshock::flow::{advance_normalized, FlowConfig, FlowState};
use rshock::torus::{MongeAmpereMeasure, PeriodicGrid, QuasiPeriodicConvex, ScalarField};

fn main() -> rshock::Result<()> {
    let g = PeriodicGrid::line(128)?;
    let f = ScalarField::from_fn(g, |x| (2.0 * PI * x[0]).cos());
    let phi0 = QuasiPeriodicConvex::quadratic(g);
    let along = |t: f64| QuasiPeriodicConvex::new_unchecked(project_convex(&phi0, &f, -(-t).exp_m1()).projected);

    let states: Vec<(f64, QuasiPeriodicConvex)> = (0..=20).map(|i| 0.1 * i as f64).map(|t| (t, along(t))).collect();
    let curve = energy_trajectory(&states, &f, f64::INFINITY)?;
    for r in curve.iter().step_by(5) {
        println!("t = {:.1}: E = {:+.6}  E_θ = {:+.6}", r.t, r.energy, r.e_theta);
    }
    println!("E_θ increases: {}", count_increases(curve.iter().map(|r| r.e_theta), 1e-8));
    println!("strict-decrease slack at (t, s) = (0.5, 0.5): {:.3e}", theta_decrease_slack(&along(0.5), &along(1.0), &f, 0.5)?);

    let beta = 100.0;
    let cfg = FlowConfig { dt_initial: 0.02, ..FlowConfig::default() };
    let s0 = FlowState::new(phi0.clone(), beta)?;
    let mut traj = vec![(0.0, s0.phi.clone())];
    advance_normalized(&s0, &f, &MongeAmpereMeasure::uniform(g), 2.0, &cfg, |s| traj.push((s.t, s.phi.clone())))?;
    let flow = energy_trajectory(&traj, &f, beta)?;
    println!(
        "β = {beta}: F_β from {:.6} to {:.6} over {} steps, increases: {}",
        flow[0].free_energy,
        flow.last().unwrap().free_energy,
        flow.len() - 1,
        count_increases(flow.iter().map(|r| r.free_energy), 1e-8)
    );
    Ok(())
}
