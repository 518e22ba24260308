//! Drive a full experiment from code: preset, overrides, run, and verify
//! the hashed manifest, the same path the `rshock` binary takes.
//!
//! `cargo run --release --example experiment_runner [experiment]`

use rshock::experiment::{parse_override, run, ExperimentConfig, ExperimentKind};

fn main() -> rshock::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "envelope_curve".into());
    let kind = ExperimentKind::from_name(&name)?;
    let dir = std::env::temp_dir().join(format!("rshock-example-{name}"));
    let overrides = vec![parse_override(&format!("output_dir={}", dir.display()))?];
    let preset = ExperimentConfig::preset(kind).to_json_pretty();
    let cfg = ExperimentConfig::from_json(&preset, &overrides)?;

    let report = run(&cfg)?;
    for c in &report.manifest.checks {
        println!("{c}");
    }
    for f in &report.manifest.files {
        println!("  {:<24} {:<20} {:>9} B  {}", f.name, f.kind, f.bytes, &f.sha256[..12]);
    }
    let tampered = report.manifest.verify(&report.dir)?;
    println!("manifest verifies: {}", tampered.is_empty());
    Ok(())
}
