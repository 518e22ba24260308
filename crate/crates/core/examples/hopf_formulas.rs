//! Hamilton–Jacobi in two pictures: the second Hopf formula for convex data
//! and the Hopf–Lax inf-convolution, their agreement, and the shocks and
//! Zel'dovich folds that appear after the first caustic.
//!
//! `cargo run --example hopf_formulas`

use std::f64::consts::PI;

use rshock::flow::Chart;
use rshock::hj::{burgers_velocity, hopf_duality_check, second_hopf};
use rshock::shocks::{extract_shocks, zeldovich_map};
use rshock::torus::{PeriodicGrid, QuasiPeriodicConvex, ScalarField};

fn main() -> rshock::Result<()> {
    let g = PeriodicGrid::line(512)?;
    let h = ScalarField::from_fn(g, |x| 0.2 * (2.0 * PI * x[0]).cos());
    let t_star = 1.0 / (4.0 * PI * PI * 0.2);
    println!("first caustic at T* = {t_star:.4}");

    for t in [0.5 * t_star, 2.0 * t_star, 10.0 * t_star] {
        let psi = second_hopf(&QuasiPeriodicConvex::quadratic(g), &h, t)?;
        let shocks = extract_shocks(&QuasiPeriodicConvex::new_unchecked(psi.values.clone()));
        let v = burgers_velocity(&psi.values, Chart::QuasiPeriodic)?;
        let jump = v.gap().into_iter().fold(0.0, f64::max);
        let folds = zeldovich_map(&h.scaled(t)).folds;
        let d = hopf_duality_check(&h, t)?;
        println!(
            "t = {t:.3}: shock nodes {:>2}, max velocity jump {jump:.3}, Zel'dovich folds {folds:>3}, Hopf vs Hopf–Lax defect {:.1e}",
            shocks.count(),
            d.value_defect
        );
    }
    Ok(())
}
