//! Weak Hele-Shaw growth from a point injection on the flat torus: the
//! domains Ω^(λ) are nested and their area grows linearly in λ.
//!
//! `cargo run --release --example hele_shaw`

use std::f64::consts::PI;

use rshock::envelope::PsorConfig;
use rshock::heleshaw::{hs_sweep_warm, is_nested, Injection};
use rshock::torus::PeriodicGrid;

fn main() -> rshock::Result<()> {
    let g = PeriodicGrid::square(64)?;
    let inj = Injection::flat(g)?;
    let lambdas = [0.05, 0.1, 0.2, 0.4];
    let states = hs_sweep_warm(&inj, &lambdas, &PsorConfig::default())?;
    println!("{:>6} {:>8} {:>10} {:>10}", "λ", "area", "r_inner", "r_outer");
    for s in &states {
        let (inner, outer) = s.radial_extent(inj.pole);
        println!("{:>6} {:>8.4} {:>10.4} {:>10.4}", s.lambda, s.area, inner, outer);
    }
    println!("disc radius √(0.1/π) = {:.4}; nested: {}", (0.1 / PI).sqrt(), is_nested(&states));
    Ok(())
}
