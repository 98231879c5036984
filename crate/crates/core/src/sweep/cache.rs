//! Content-addressed store of per-point outcomes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::Value;
use sha2::{Digest, Sha256};

use super::config::{PointParams, SweepSpec};
use super::run::PointOutcome;
use crate::error::Result;
use crate::spectra::Model;

/// Environment variable that overrides the configured cache directory.
pub const CACHE_ENV: &str = "RABI_LAB_CACHE";

/// Bumped whenever a change alters what a cached point would contain.
pub const VERSION_TAG: &str = concat!("rabi-lab/", env!("CARGO_PKG_VERSION"), "/outcome-v1");

fn bits(x: f64) -> Value {
    Value::String(format!("{:016x}", x.to_bits()))
}

/// Digest over the resolved physical parameters of `point` and every numeric
/// setting of `spec` that can change the outcome. Independent of how the
/// point was reached (axis order, `g` versus `g_tilde`).
pub fn cache_key(spec: &SweepSpec, point: &PointParams) -> String {
    let p = &point.params;
    let mut m: BTreeMap<&str, Value> = BTreeMap::new();
    m.insert("version", Value::from(VERSION_TAG));
    m.insert("model", Value::from(spec.model.as_str()));
    m.insert("omega_a", bits(p.omega_a()));
    m.insert("omega_q", bits(p.omega_q()));
    m.insert("g", bits(p.g()));
    match point.model {
        Model::Anisotropic { j1, j2 } => {
            m.insert("j1", bits(j1));
            m.insert("j2", bits(j2));
        }
        Model::EffectiveA2 { d_tilde } => {
            m.insert("j", bits(p.j()));
            m.insert("d_tilde", bits(d_tilde));
        }
        _ => {
            m.insert("j", bits(p.j()));
        }
    }
    let schedule: Vec<Value> = spec
        .schedule()
        .iter()
        .map(|t| Value::from(vec![t.n_a_max() as u64, t.n_b_max() as u64]))
        .collect();
    m.insert("schedule", Value::from(schedule));
    let n = &spec.numerics;
    m.insert("solver_tol", bits(n.solver_tol));
    m.insert("observable_tol", bits(n.observable_tol));
    m.insert("boundary_tol", bits(n.boundary_tol));
    m.insert("analytic_form", serde_json::to_value(n.analytic_form).expect("enum serializes"));
    let mut obs = spec.observables.clone();
    obs.sort();
    obs.dedup();
    m.insert("observables", serde_json::to_value(obs).expect("enum serializes"));
    let canonical = serde_json::to_string(&m).expect("map serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

#[derive(Clone, Debug)]
pub struct Cache {
    dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CacheStats {
    pub entries: usize,
    pub bytes: u64,
}

impl Cache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    /// `RABI_LAB_CACHE` if set, else `configured`, else [`default_dir`](Self::default_dir).
    pub fn resolve_dir(configured: Option<&Path>) -> PathBuf {
        match std::env::var_os(CACHE_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => configured.map(Path::to_path_buf).unwrap_or_else(Self::default_dir),
        }
    }

    /// `$XDG_CACHE_HOME/rabi-lab`, `~/.cache/rabi-lab`, or `.rabi-lab-cache`.
    pub fn default_dir() -> PathBuf {
        let from = |var: &str| std::env::var_os(var).filter(|v| !v.is_empty()).map(PathBuf::from);
        if let Some(x) = from("XDG_CACHE_HOME") {
            x.join("rabi-lab")
        } else if let Some(h) = from("HOME") {
            h.join(".cache").join("rabi-lab")
        } else {
            PathBuf::from(".rabi-lab-cache")
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Unreadable or corrupt entries count as misses.
    pub fn get(&self, key: &str) -> Option<PointOutcome> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        serde_json::from_str(&text).ok()
    }

    /// Writes to a temporary file and renames it into place.
    pub fn put(&self, key: &str, outcome: &PointOutcome) -> Result<()> {
        let body = serde_json::to_vec(outcome)?;
        let tmp = self.dir.join(format!(
            ".{key}.{}.{:?}.tmp",
            std::process::id(),
            std::thread::current().id()
        ));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&body)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, self.path(key))?;
        Ok(())
    }

    fn entries(&self) -> Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        for e in fs::read_dir(&self.dir)? {
            let p = e?.path();
            if p.extension().is_some_and(|x| x == "json") {
                out.push(p);
            }
        }
        Ok(out)
    }

    pub fn stats(&self) -> Result<CacheStats> {
        let entries = self.entries()?;
        let mut bytes = 0;
        for p in &entries {
            bytes += fs::metadata(p)?.len();
        }
        Ok(CacheStats {
            entries: entries.len(),
            bytes,
        })
    }

    /// Removes every entry; returns how many were removed.
    pub fn clear(&self) -> Result<usize> {
        let entries = self.entries()?;
        for p in &entries {
            fs::remove_file(p)?;
        }
        Ok(entries.len())
    }
}
