//! Experiment configuration: one JSON document merged over a per-experiment
//! preset, with `--set a.b.c=value` overrides applied before the merge.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::envelope::PsorConfig;
use crate::error::{Error, Result};
use crate::flow::{FlowConfig, LogDiffusionConfig};
use crate::torus::PeriodicGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    FlowConvergence,
    EnvelopeCurve,
    HopfDuality,
    TropicalVoronoi,
    HeleshawSweep,
    HeleshawDensity,
    RandomDimension,
    EnergyMonotone,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        Self::FlowConvergence,
        Self::EnvelopeCurve,
        Self::HopfDuality,
        Self::TropicalVoronoi,
        Self::HeleshawSweep,
        Self::HeleshawDensity,
        Self::RandomDimension,
        Self::EnergyMonotone,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::FlowConvergence => "flow_convergence",
            Self::EnvelopeCurve => "envelope_curve",
            Self::HopfDuality => "hopf_duality",
            Self::TropicalVoronoi => "tropical_voronoi",
            Self::HeleshawSweep => "heleshaw_sweep",
            Self::HeleshawDensity => "heleshaw_density",
            Self::RandomDimension => "random_dimension",
            Self::EnergyMonotone => "energy_monotone",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{name}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<PeriodicGrid> {
        PeriodicGrid::new(self.dim, self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Physics {
    /// Builtin spec (see `rshock list-builtins`); ignored when `field_file` is set.
    pub hamiltonian: String,
    /// A torus-field v1 dump used instead of the builtin.
    pub field_file: Option<PathBuf>,
    pub beta_list: Vec<f64>,
    pub t_list: Vec<f64>,
    pub lambda_list: Vec<f64>,
    /// Voronoi sites; defaults to the wells of the builtin.
    pub sites: Option<Vec<[f64; 2]>>,
    pub seed: u64,
    /// Ensemble size (consecutive seeds from `seed`).
    pub seeds: usize,
    pub h_exponent: f64,
    /// Defaults to `N/2`.
    pub k_max: Option<usize>,
    /// Defaults to the crossover amplitude at the first `t`.
    pub amplitude: Option<f64>,
    /// Point-mass width; defaults to `h²`.
    pub epsilon: Option<f64>,
}

impl Default for Physics {
    fn default() -> Self {
        Self {
            hamiltonian: "zero".into(),
            field_file: None,
            beta_list: Vec::new(),
            t_list: Vec::new(),
            lambda_list: Vec::new(),
            sites: None,
            seed: 0,
            seeds: 20,
            h_exponent: 0.5,
            k_max: None,
            amplitude: None,
            epsilon: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub flow: FlowConfig,
    pub psor: PsorConfig,
    pub log_diffusion: LogDiffusionConfig,
    /// Time step of the log-diffusion runs.
    pub density_dt: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            flow: FlowConfig::default(),
            psor: PsorConfig::default(),
            log_diffusion: LogDiffusionConfig::default(),
            density_dt: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub grid: GridSpec,
    pub physics: Physics,
    pub numerics: Numerics,
    pub output_dir: PathBuf,
}

fn range(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| start + step * i as f64).collect()
}

impl ExperimentConfig {
    /// Desk-scale defaults for each experiment.
    pub fn preset(kind: ExperimentKind) -> Self {
        let mut cfg = Self {
            experiment: kind,
            grid: GridSpec { dim: 1, n: 256 },
            physics: Physics { hamiltonian: "cosine:a=1".into(), ..Physics::default() },
            numerics: Numerics::default(),
            output_dir: PathBuf::from("out").join(kind.name()),
        };
        let p = &mut cfg.physics;
        match kind {
            ExperimentKind::FlowConvergence => {
                cfg.grid.n = 512;
                p.beta_list = vec![10.0, 1e2, 1e3, 1e4];
                p.t_list = vec![1.0];
                cfg.numerics.flow.dt_initial = 1e-3;
            }
            ExperimentKind::EnvelopeCurve => {
                p.t_list = range(0.05, 0.05, 20);
            }
            ExperimentKind::HopfDuality => {
                p.beta_list = vec![1e4];
                p.t_list = vec![0.1, 1.0, 5.0];
                cfg.numerics.flow.dt_initial = 1e-3;
            }
            ExperimentKind::TropicalVoronoi => {
                cfg.grid = GridSpec { dim: 2, n: 128 };
                p.hamiltonian = "wells3".into();
                p.t_list = vec![50.0];
            }
            ExperimentKind::HeleshawSweep => {
                cfg.grid = GridSpec { dim: 2, n: 128 };
                p.hamiltonian = "flat".into();
                p.lambda_list = range(0.05, 0.05, 19);
                p.t_list = vec![0.25, 1.0, 3.0];
            }
            ExperimentKind::HeleshawDensity => {
                cfg.grid = GridSpec { dim: 2, n: 128 };
                p.hamiltonian = "flat".into();
                p.beta_list = vec![1e2, 1e3];
                p.t_list = vec![1.0];
            }
            ExperimentKind::RandomDimension => {
                cfg.grid.n = 4096;
                p.hamiltonian = "zero".into();
                p.t_list = vec![1.0];
            }
            ExperimentKind::EnergyMonotone => {
                p.beta_list = vec![1e2];
                p.t_list = range(0.0, 0.05, 41);
                cfg.numerics.flow.dt_initial = 0.02;
            }
        }
        cfg
    }

    /// Parse a JSON document, apply `overrides` and fill everything missing
    /// from the preset of the named experiment.
    pub fn from_json(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let cfg = Self::parse_unvalidated(text, overrides)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// As [`Self::from_json`]; a relative `field_file` is resolved against
    /// the config's directory.
    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse_unvalidated(&text, overrides)?;
        if let Some(f) = cfg.physics.field_file.as_mut() {
            if f.is_relative() {
                *f = path.parent().unwrap_or(Path::new(".")).join(&*f);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn parse_unvalidated(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut user: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
        if !user.is_object() {
            return Err(Error::Config("top level must be an object".into()));
        }
        for (path, raw) in overrides {
            set_path(&mut user, path, raw)?;
        }
        let kind = match user.get("experiment") {
            Some(Value::String(s)) => ExperimentKind::from_name(s)?,
            Some(_) => return Err(Error::Config("`experiment` must be a string".into())),
            None => return Err(Error::Config("missing field `experiment`".into())),
        };
        let mut merged = serde_json::to_value(Self::preset(kind))?;
        merge(&mut merged, user);
        serde_json::from_value(merged).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.grid.build()?;
        let p = &self.physics;
        let need_dim = |d: usize| {
            if g.dim() != d {
                Err(Error::Config(format!("{} requires grid.dim = {d}", self.experiment.name())))
            } else {
                Ok(())
            }
        };
        match self.experiment {
            ExperimentKind::FlowConvergence | ExperimentKind::HopfDuality | ExperimentKind::RandomDimension => need_dim(1)?,
            ExperimentKind::TropicalVoronoi | ExperimentKind::HeleshawSweep | ExperimentKind::HeleshawDensity => need_dim(2)?,
            ExperimentKind::EnvelopeCurve | ExperimentKind::EnergyMonotone => {}
        }
        if let Some(b) = p.beta_list.iter().find(|b| !(**b > 0.0) || !b.is_finite()) {
            return Err(Error::Config(format!("beta_list entries must be positive and finite (got {b})")));
        }
        if p.t_list.is_empty() {
            return Err(Error::Config("t_list must not be empty".into()));
        }
        if p.t_list.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) || p.t_list.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("t_list must be nonnegative and strictly increasing".into()));
        }
        if p.lambda_list.iter().any(|l| !(0.0..1.0).contains(l)) || p.lambda_list.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("lambda_list must be strictly increasing in [0, 1)".into()));
        }
        let needs_beta = matches!(
            self.experiment,
            ExperimentKind::FlowConvergence | ExperimentKind::HopfDuality | ExperimentKind::HeleshawDensity | ExperimentKind::EnergyMonotone
        );
        if needs_beta && p.beta_list.is_empty() {
            return Err(Error::Config(format!("{} needs a nonempty beta_list", self.experiment.name())));
        }
        if self.experiment == ExperimentKind::HeleshawSweep && p.lambda_list.is_empty() {
            return Err(Error::Config("heleshaw_sweep needs a nonempty lambda_list".into()));
        }
        if self.experiment == ExperimentKind::RandomDimension && p.seeds == 0 {
            return Err(Error::Config("seeds must be positive".into()));
        }
        if let Some(f) = &p.field_file {
            if !f.is_file() {
                return Err(Error::Config(format!("field file {} does not exist", f.display())));
            }
        } else {
            super::builtins::parse(&p.hamiltonian)?;
        }
        if let Some(e) = p.epsilon {
            if !(e > 0.0) {
                return Err(Error::Config("epsilon must be positive".into()));
            }
        }
        if !(self.numerics.density_dt > 0.0) {
            return Err(Error::Config("density_dt must be positive".into()));
        }
        self.numerics.flow.validate().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Everything that determines a run's content. The output location is
    /// left out so that a manifest does not depend on where it was written.
    pub fn params_echo(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(m) = &mut v {
            m.remove("output_dir");
        }
        v
    }
}

/// Split `a.b.c=value`.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s.split_once('=').ok_or_else(|| Error::Config(format!("override `{s}` is not key=value")))?;
    if k.is_empty() || k.split('.').any(str::is_empty) {
        return Err(Error::Config(format!("override `{s}` has an empty path segment")));
    }
    Ok((k.to_string(), v.to_string()))
}

/// Set a dotted path, creating objects as needed. The value is parsed as
/// JSON when possible and kept as a string otherwise.
fn set_path(root: &mut Value, path: &str, raw: &str) -> Result<()> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = root;
    let mut parts = path.split('.').peekable();
    while let Some(key) = parts.next() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override `{path}`: `{key}` is not inside an object")))?;
        if parts.peek().is_none() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// Recursive object merge; non-objects in `patch` replace.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for kind in ExperimentKind::ALL {
            let cfg = ExperimentConfig::preset(kind);
            cfg.validate().unwrap();
            let back = ExperimentConfig::from_json(&cfg.to_json_pretty(), &[]).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn partial_documents_take_preset_values() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment": "hopf_duality", "grid": {"n": 128}}"#, &[]).unwrap();
        assert_eq!(cfg.grid, GridSpec { dim: 1, n: 128 });
        assert_eq!(cfg.physics.t_list, vec![0.1, 1.0, 5.0]);
    }

    #[test]
    fn overrides_parse_json_or_fall_back_to_strings() {
        let ov = vec![
            parse_override("physics.beta_list=[5, 50]").unwrap(),
            parse_override("physics.hamiltonian=cosine:a=0.5").unwrap(),
            parse_override("numerics.flow.dt_initial=0.002").unwrap(),
        ];
        let cfg = ExperimentConfig::from_json(r#"{"experiment": "flow_convergence"}"#, &ov).unwrap();
        assert_eq!(cfg.physics.beta_list, vec![5.0, 50.0]);
        assert_eq!(cfg.physics.hamiltonian, "cosine:a=0.5");
        assert_eq!(cfg.numerics.flow.dt_initial, 0.002);
        assert!(parse_override("novalue").is_err());
        assert!(parse_override("a..b=1").is_err());
    }

    #[test]
    fn small_grid_names_the_bound() {
        let err = ExperimentConfig::from_json(r#"{"experiment": "envelope_curve", "grid": {"n": 3}}"#, &[]).unwrap_err();
        assert!(err.to_string().contains("N ≥ 8"), "{err}");
    }

    #[test]
    fn invalid_documents_are_config_errors() {
        for doc in [
            r#"{"grid": {"n": 64}}"#,
            r#"{"experiment": "nope"}"#,
            r#"{"experiment": "flow_convergence", "physics": {"beta_list": [-1]}}"#,
            r#"{"experiment": "tropical_voronoi", "grid": {"dim": 1}}"#,
            r#"{"experiment": "envelope_curve", "physics": {"t_list": [1, 0.5]}}"#,
            r#"{"experiment": "envelope_curve", "physics": {"hamiltonian": "bogus"}}"#,
            r#"{"experiment": "envelope_curve", "typo": 1}"#,
            "[1, 2]",
        ] {
            assert!(matches!(ExperimentConfig::from_json(doc, &[]), Err(Error::Config(_)) | Err(Error::UnknownBuiltin(_))), "{doc}");
        }
    }
}
