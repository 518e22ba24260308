//! Grids, periodic fields and the finite-difference operators everything
//! else is built on.
//!
//! `cargo run --example fields_and_operators`

use std::f64::consts::PI;

use rshock::torus::{convexity, hessian_of, monge_ampere, PeriodicGrid, QuasiPeriodicConvex, ScalarField};

fn main() -> rshock::Result<()> {
    let g = PeriodicGrid::square(64)?;
    println!("grid: dim {} N {} h {:.5} nodes {}", g.dim(), g.n(), g.spacing(), g.len());

    // A convex function |x|²/2 + u is stored through its periodic part u.
    let u = ScalarField::from_fn(g, |x| 0.01 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).cos());
    let phi = QuasiPeriodicConvex::new(u.clone())?;
    let c = convexity(&u);
    println!("min Hessian eigenvalue of |x|²/2 + u: {:.4} (tolerance {:.1e})", c.min, c.tolerance);

    // D²u of the periodic part; the Hessian of φ adds the identity
    let hess = hessian_of(phi.periodic());
    println!("D²u at node 0: {:?}, trace {:.4}", hess.entries()[0], hess.trace(0));

    // Monge–Ampère masses sum to one: exactly in 1D, up to O(h²) in 2D.
    let ma = monge_ampere(&phi)?;
    println!("total Monge–Ampère mass: {:.12}", ma.total());

    // Too much curvature and the constructor refuses.
    let steep = ScalarField::from_fn(g, |x| 0.1 * (2.0 * PI * x[0]).cos());
    match QuasiPeriodicConvex::new(steep) {
        Ok(_) => println!("unexpectedly convex"),
        Err(e) => println!("rejected: {e}"),
    }

    let mut buf = Vec::new();
    rshock::torus::io::write_field(&u, &mut buf)?;
    println!("CSV export: {} bytes, first line `{}`", buf.len(), String::from_utf8_lossy(&buf).lines().next().unwrap_or(""));
    Ok(())
}
