//! Discrete Legendre–Fenchel transform on quasi-periodic convex functions.
//!
//! `cargo run --example legendre_transform`

use std::f64::consts::PI;

use rshock::legendre::{convexify, isometry_defect, lft};
use rshock::torus::{PeriodicGrid, QuasiPeriodicConvex, ScalarField};

fn main() -> rshock::Result<()> {
    let g = PeriodicGrid::line(512)?;
    let phi = QuasiPeriodicConvex::new(ScalarField::from_fn(g, |x| 0.02 * (2.0 * PI * x[0]).cos()))?;

    let dual = lft(&phi).dual;
    let back = lft(&dual).dual;
    println!("‖φ** − φ‖∞ = {:.3e}  (O(h²) for smooth φ)", back.periodic().sup_dist(phi.periodic()));

    // The transform is an isometry for the sup norm between convex functions.
    let psi = QuasiPeriodicConvex::new(ScalarField::from_fn(g, |x| 0.005 * (4.0 * PI * x[0]).sin()))?;
    println!("isometry defect: {:.3e}", isometry_defect(&phi, &psi));

    // Of a non-convex obstacle the double transform is the convex hull.
    let rough = ScalarField::from_fn(g, |x| 0.5 * (2.0 * PI * x[0]).cos());
    let hull = convexify(&rough);
    let touching = hull.periodic().values().iter().zip(rough.values()).filter(|(a, b)| (*a - *b).abs() < 1e-12).count();
    println!("convex hull of |x|²/2 + 0.5cos 2πx touches the obstacle at {touching} of {} nodes", g.len());
    Ok(())
}
