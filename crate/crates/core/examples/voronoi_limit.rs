//! Large-time shocks of a Hamiltonian with isolated zero wells settle on the
//! Voronoi tessellation of the wells; the limit potential is tropical.
//!
//! `cargo run --release --example voronoi_limit`

use rshock::experiment::builtins::{wells, WELLS3_SITES};
use rshock::hj::second_hopf;
use rshock::shocks::{dilation_mismatch, extract_shocks, tropical_limit, voronoi_delaunay};
use rshock::torus::{PeriodicGrid, QuasiPeriodicConvex};

fn main() -> rshock::Result<()> {
    let g = PeriodicGrid::square(128)?;
    let h = wells(&g, &WELLS3_SITES)?;
    let q = QuasiPeriodicConvex::quadratic(g);
    let tess = voronoi_delaunay(&g, &WELLS3_SITES)?;
    let limit = tropical_limit(&q, &WELLS3_SITES)?;
    println!("Delaunay edges:");
    for e in &tess.edges {
        println!("  {} – {} ({} boundary contacts)", e.a, e.b, e.contacts);
    }
    for t in [1.0, 10.0, 50.0] {
        let psi = second_hopf(&q, &h, t)?.into_convex()?;
        let shocks = extract_shocks(&psi);
        println!(
            "t = {t:>4}: shock nodes {:>4}, off the dilated Voronoi boundary {:>4}, ‖ψ_t − tropical‖∞ = {:.2e}",
            shocks.count(),
            dilation_mismatch(&g, &shocks.mask, tess.boundary()),
            psi.periodic().sup_dist(limit.periodic())
        );
    }
    Ok(())
}
