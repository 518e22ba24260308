//! Run artifacts: CSV/JSON files hashed into a manifest, plus the checks a
//! run evaluated.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::torus::io::{fmt_f64, write_field, write_mask};
use crate::torus::{PeriodicGrid, ScalarField};

pub const MANIFEST_FORMAT: &str = "rshock-manifest v1";
pub const MANIFEST_NAME: &str = "manifest.json";
pub const PARAMS_NAME: &str = "params.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Path relative to the manifest.
    pub name: String,
    /// What the file holds (`trajectory`, `field`, `mask`, ...).
    pub kind: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// A failed soft check.
    Warn,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Warn => "WARN",
        })
    }
}

/// JSON has no infinities or NaN: write those as strings.
mod extended_f64 {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        match *v {
            v if v.is_finite() => s.serialize_f64(v),
            v if v.is_nan() => s.serialize_str("nan"),
            v if v > 0.0 => s.serialize_str("inf"),
            _ => s.serialize_str("-inf"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::Number(n) => n.as_f64().ok_or_else(|| D::Error::custom("bad number")),
            serde_json::Value::String(s) => match s.as_str() {
                "nan" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(D::Error::custom(format!("bad float `{s}`"))),
            },
            other => Err(D::Error::custom(format!("expected a float, got {other}"))),
        }
    }
}

/// One evaluated criterion: `lo ≤ value ≤ hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(with = "extended_f64")]
    pub value: f64,
    #[serde(with = "extended_f64")]
    pub lo: f64,
    #[serde(with = "extended_f64")]
    pub hi: f64,
    pub soft: bool,
    pub status: CheckStatus,
}

impl Check {
    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        let ok = value >= lo && value <= hi;
        Self { name: name.into(), value, lo, hi, soft: false, status: if ok { CheckStatus::Pass } else { CheckStatus::Fail } }
    }

    pub fn at_most(name: impl Into<String>, value: f64, hi: f64) -> Self {
        Self::within(name, value, f64::NEG_INFINITY, hi)
    }

    pub fn at_least(name: impl Into<String>, value: f64, lo: f64) -> Self {
        Self::within(name, value, lo, f64::INFINITY)
    }

    /// `1` for true; passes when true.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::within(name, if ok { 1.0 } else { 0.0 }, 1.0, 1.0)
    }

    /// Failure downgrades to a warning.
    pub fn soft(mut self) -> Self {
        self.soft = true;
        if self.status == CheckStatus::Fail {
            self.status = CheckStatus::Warn;
        }
        self
    }

    pub fn failed(&self) -> bool {
        self.status == CheckStatus::Fail
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let range = match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) if self.lo == self.hi => format!("= {}", self.lo),
            (true, true) => format!("in [{:.3e}, {:.3e}]", self.lo, self.hi),
            (false, true) => format!("≤ {:.3e}", self.hi),
            (true, false) => format!("≥ {:.3e}", self.lo),
            _ => "unbounded".into(),
        };
        write!(f, "{} {}: {:.6e} {}", self.status, self.name, self.value, range)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub experiment: String,
    pub files: Vec<FileEntry>,
    pub checks: Vec<Check>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn any_failed(&self) -> bool {
        self.checks.iter().any(Check::failed)
    }

    /// Re-hash every listed file under `dir`; names of mismatches.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for f in &self.files {
            let bytes = std::fs::read(dir.join(&f.name))?;
            if hex::encode(Sha256::digest(&bytes)) != f.sha256 {
                bad.push(f.name.clone());
            }
        }
        Ok(bad)
    }
}

/// Writes files into an output directory and records their hashes.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn bytes(&mut self, name: &str, kind: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.files.push(FileEntry {
            name: name.to_string(),
            kind: kind.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// Header line plus rows of already formatted cells.
    pub fn csv(&mut self, name: &str, kind: &str, header: &str, rows: &[Vec<String>]) -> Result<()> {
        let mut buf = Vec::new();
        writeln!(buf, "{header}")?;
        for r in rows {
            writeln!(buf, "{}", r.join(","))?;
        }
        self.bytes(name, kind, &buf)
    }

    pub fn field(&mut self, name: &str, kind: &str, field: &ScalarField) -> Result<()> {
        let mut buf = Vec::new();
        write_field(field, &mut buf)?;
        self.bytes(name, kind, &buf)
    }

    pub fn mask(&mut self, name: &str, kind: &str, grid: &PeriodicGrid, mask: &[bool]) -> Result<()> {
        let mut buf = Vec::new();
        write_mask(grid, mask, &mut buf)?;
        self.bytes(name, kind, &buf)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, kind: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.bytes(name, kind, text.as_bytes())
    }

    /// Write `manifest.json` and return it.
    pub fn finish(self, experiment: &str, checks: Vec<Check>) -> Result<Manifest> {
        let manifest = Manifest { format: MANIFEST_FORMAT.into(), experiment: experiment.into(), files: self.files, checks };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(self.dir.join(MANIFEST_NAME), text)?;
        Ok(manifest)
    }
}

/// CSV cell for a float.
pub fn cell(v: f64) -> String {
    fmt_f64(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_hashes_verify() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::create(dir.path()).unwrap();
        a.csv("x.csv", "table", "a,b", &[vec![cell(1.0), cell(0.1)]]).unwrap();
        let m = a.finish("demo", vec![Check::at_most("err", 0.5, 1.0)]).unwrap();
        assert_eq!(m.files[0].sha256.len(), 64);
        assert!(m.verify(dir.path()).unwrap().is_empty());
        assert_eq!(Manifest::load(&dir.path().join(MANIFEST_NAME)).unwrap(), m);
        let text = serde_json::to_string(&Check::at_most("h", f64::INFINITY, 0.0)).unwrap();
        assert!(text.contains("\"inf\"") && text.contains("\"-inf\""), "{text}");
        let back: Check = serde_json::from_str(&text).unwrap();
        assert_eq!(back.value, f64::INFINITY);
        std::fs::write(dir.path().join("x.csv"), "tampered").unwrap();
        assert_eq!(m.verify(dir.path()).unwrap(), vec!["x.csv".to_string()]);
    }

    #[test]
    fn soft_failures_warn() {
        assert_eq!(Check::within("d", 0.2, 0.35, 0.65).soft().status, CheckStatus::Warn);
        assert_eq!(Check::within("d", 0.5, 0.35, 0.65).soft().status, CheckStatus::Pass);
        assert!(Check::holds("nested", false).failed());
        assert!(!Check::at_least("x", f64::NAN, 0.0).soft().failed());
        assert!(Check::at_least("x", f64::NAN, 0.0).failed());
    }
}
