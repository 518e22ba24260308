//! Reproducible experiment runs: JSON config in, CSVs plus a hashed
//! manifest out.

pub mod builtins;
pub mod config;
pub mod output;
pub mod runner;

pub use builtins::{builtin_hamiltonian, Builtin, CATALOGUE};
pub use config::{parse_override, ExperimentConfig, ExperimentKind, GridSpec, Numerics, Physics};
pub use output::{Check, CheckStatus, FileEntry, Manifest, MANIFEST_NAME, PARAMS_NAME};
pub use runner::{configured_field, run, RunReport};
