//! Random forcing with Hölder exponent h: the Monge–Ampère support of the
//! envelope becomes a fractal set whose box dimension tracks h.
//!
//! `cargo run --release --example random_dimension`

use rshock::stochastic::{crossover_amplitude, dimension_ensemble, RandomFieldSpec};
use rshock::torus::PeriodicGrid;

fn main() -> rshock::Result<()> {
    let g = PeriodicGrid::line(2048)?;
    let seeds: Vec<u64> = (0..8).collect();
    for h_exponent in [0.25, 0.5, 0.75] {
        let k_max = g.n() / 2;
        let spec = RandomFieldSpec { h_exponent, k_max, amplitude: crossover_amplitude(h_exponent, k_max, 1.0), seed: 0 };
        let ens = dimension_ensemble(&spec, &seeds, &g, 1.0)?;
        let cells: Vec<usize> = ens.samples.iter().map(|s| s.support_cells).collect();
        println!("h = {h_exponent}: median box dimension {:.3}, support cells {cells:?}", ens.median);
    }
    Ok(())
}
