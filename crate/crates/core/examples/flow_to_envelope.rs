//! The log-Hessian flow at inverse temperature β converges to the envelope
//! as β → ∞, at roughly log β / β.
//!
//! `cargo run --release --example flow_to_envelope`

use std::f64::consts::PI;

use rshock::envelope::project_convex;
use rshock::flow::{advance_nonnormalized, trace_bound_constant, FlowConfig, FlowState};
use rshock::torus::{PeriodicGrid, QuasiPeriodicConvex, ScalarField};

fn main() -> rshock::Result<()> {
    let g = PeriodicGrid::line(256)?;
    let h = ScalarField::from_fn(g, |x| (2.0 * PI * x[0]).cos());
    let phi0 = QuasiPeriodicConvex::quadratic(g);
    let t = 1.0;
    let target = project_convex(&phi0, &h, t).projected;
    let bound = trace_bound_constant(&phi0, &h);
    let cfg = FlowConfig { dt_initial: 2e-3, ..FlowConfig::default() };

    println!("{:>8} {:>12} {:>12} {:>8}", "beta", "sup error", "logβ/β", "clamps");
    for beta in [10.0, 100.0, 1000.0, 10000.0] {
        let mut worst = 0.0f64;
        let end = advance_nonnormalized(&FlowState::new(phi0.clone(), beta)?, &h, t, &cfg, |s| {
            worst = worst.max(s.max_hess_trace / ((s.t + 1.0) * bound));
        })?;
        let err = end.phi.periodic().sup_dist(&target);
        println!("{beta:>8} {err:>12.4e} {:>12.4e} {:>8}   (trace/bound ≤ {worst:.3})", beta.ln() / beta, end.clamp_events);
    }
    Ok(())
}
