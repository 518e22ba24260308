//! The subharmonic envelope on the 2-torus: largest u ≤ obstacle with
//! ρ₀ + dd^c u ≥ 0, solved by projected SOR.
//!
//! `cargo run --release --example obstacle_solver`

use rshock::envelope::{complementarity_residual, project_psh_2d, ObstacleProblem2D};
use rshock::torus::{PeriodicGrid, ScalarField};

fn main() -> rshock::Result<()> {
    let g = PeriodicGrid::square(64)?;
    let rho = ScalarField::constant(g, 1.0);
    // a paraboloid cap whose rim is a concave kink: the envelope has to
    // leave the obstacle there
    let obstacle = ScalarField::from_fn(g, |x| {
        let d2 = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2);
        0.05 * (d2 / 0.02).min(1.0)
    });
    let problem = ObstacleProblem2D::new(rho, obstacle)?;
    let r = project_psh_2d(&problem)?;
    println!("PSOR sweeps: {}", r.iterations);
    println!("complementarity residual: {:.2e}", complementarity_residual(&problem, &r.projected));
    println!("coincidence nodes: {} of {}", r.coincidence.iter().filter(|&&c| c).count(), g.len());
    Ok(())
}
