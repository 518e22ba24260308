//! Command-line runner: `rshock run <config.json> [--assert] [--set k=v]...`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rshock::experiment::{parse_override, run, ExperimentConfig, ExperimentKind, CATALOGUE, MANIFEST_NAME};

#[derive(Parser)]
#[command(name = "rshock", version, about = "Zero-temperature limits of log-Hessian flows on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Exit with status 3 if any hard check fails.
        #[arg(long)]
        assert: bool,
        /// Override a config field by dotted path, e.g. `grid.n=512`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// List the named benchmark fields.
    ListBuiltins,
    /// Print the default config of an experiment.
    Preset { experiment: String },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_ASSERT: u8 = 3;

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("RSHOCK_THREADS") else { return Ok(()) };
    let n: usize = v.parse().map_err(|_| format!("RSHOCK_THREADS=`{v}` is not a thread count"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    match cli.command {
        Command::ListBuiltins => {
            for (usage, what) in CATALOGUE {
                println!("{usage:<40} {what}");
            }
            ExitCode::SUCCESS
        }
        Command::Preset { experiment } => match ExperimentKind::from_name(&experiment) {
            Ok(kind) => {
                println!("{}", ExperimentConfig::preset(kind).to_json_pretty());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::Run { config, assert, set } => {
            let cfg = set
                .iter()
                .map(|s| parse_override(s))
                .collect::<Result<Vec<_>, _>>()
                .and_then(|ov| ExperimentConfig::load(&config, &ov));
            let cfg = match cfg {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let report = match run(&cfg) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {} failed: {e}", cfg.experiment.name());
                    return ExitCode::from(EXIT_SOLVER);
                }
            };
            for c in &report.manifest.checks {
                println!("{c}");
            }
            println!("wrote {}", report.dir.join(MANIFEST_NAME).display());
            if assert && report.manifest.any_failed() {
                ExitCode::from(EXIT_ASSERT)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
