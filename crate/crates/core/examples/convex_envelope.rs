//! The envelope curve t ↦ P(φ₀ + tH): past the first shock time the linear
//! curve leaves the convex cone and the projection opens a free region.
//!
//! `cargo run --example convex_envelope`

use std::f64::consts::PI;

use rshock::envelope::{curve_laws, envelope_curve, project_convex};
use rshock::torus::{PeriodicGrid, QuasiPeriodicConvex, ScalarField};

fn main() -> rshock::Result<()> {
    let g = PeriodicGrid::line(256)?;
    let a = 1.0;
    let h = ScalarField::from_fn(g, |x| a * (2.0 * PI * x[0]).cos());
    let phi0 = QuasiPeriodicConvex::quadratic(g);
    println!("first shock time T* = 1/(4π²a) = {:.5}", 1.0 / (4.0 * PI * PI * a));

    for t in [0.01, 0.05, 0.2, 1.0] {
        let r = project_convex(&phi0, &h, t);
        println!("t = {t:<5} free nodes {:>4}  MA residual {:.1e}", r.free_count(), r.residual);
    }

    let ts: Vec<f64> = (1..=20).map(|i| 0.05 * i as f64).collect();
    let curve = envelope_curve(&phi0, &h, &ts)?;
    let laws = curve_laws(&curve, &h, &ts);
    println!(
        "concavity defect {:.1e}, monotonicity defect {:.1e}, nesting violations {}",
        laws.concavity, laws.monotonicity, laws.nesting
    );
    Ok(())
}
