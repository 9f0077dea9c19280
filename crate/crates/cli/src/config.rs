//! Layered run configuration: defaults, then a JSON file, then the
//! environment, then command line flags.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const OUT_DIR_ENV: &str = "MAXLAB_OUT_DIR";

/// Output formats written next to each other in the output directory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

/// Settings that affect where and how a run executes but not its results.
#[derive(Clone, Debug, PartialEq)]
pub struct Execution {
    pub out_dir: PathBuf,
    pub workers: usize,
    pub formats: Vec<Format>,
}

/// The reproducible part of a run, embedded verbatim in its report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: String,
    pub version: String,
    pub params: Value,
    pub thresholds: Value,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    out_dir: Option<PathBuf>,
    workers: Option<usize>,
    formats: Option<Vec<Format>>,
    #[serde(default)]
    params: Map<String, Value>,
    #[serde(default)]
    thresholds: Map<String, Value>,
}

/// Overrides gathered from the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub formats: Option<Vec<Format>>,
    pub params: Vec<(String, Value)>,
    pub thresholds: Vec<(String, Value)>,
}

/// Recursively overlays `top` onto `base`. Keys of `top` must already exist
/// in `base`. An object with a `kind` tag replaces the old value whole.
pub fn overlay(base: &mut Value, top: &Value, path: &str) -> Result<()> {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                let here = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match b.get_mut(k) {
                    // a tagged enum may switch variant, so its fields are checked on deserialization
                    Some(slot) if v.get("kind").is_some() => *slot = v.clone(),
                    Some(slot) if slot.is_object() && v.is_object() => overlay(slot, v, &here)?,
                    Some(slot) => *slot = v.clone(),
                    None => bail!("unknown parameter `{here}`"),
                }
            }
            Ok(())
        }
        (b, t) => {
            *b = t.clone();
            Ok(())
        }
    }
}

/// Sets a dotted key such as `family.seed`.
pub fn set_path(base: &mut Value, key: &str, v: Value) -> Result<()> {
    let mut nested = v;
    for part in key.rsplit('.') {
        let mut m = Map::new();
        m.insert(part.to_string(), nested);
        nested = Value::Object(m);
    }
    overlay(base, &nested, "")
}

/// Parses `KEY=VALUE`, reading VALUE as JSON and falling back to a string.
pub fn parse_assignment(s: &str) -> Result<(String, Value)> {
    let (k, v) = s.split_once('=').ok_or_else(|| anyhow!("expected KEY=VALUE, got `{s}`"))?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.trim().to_string(), value))
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Resolves the final configuration for one experiment.
pub fn resolve(
    experiment: &str,
    params_default: Value,
    thresholds_default: Value,
    file: Option<&Path>,
    env_out_dir: Option<PathBuf>,
    flags: &Overrides,
) -> Result<(RunConfig, Execution)> {
    let mut params = params_default;
    let mut thresholds = thresholds_default;
    let mut exec = Execution { out_dir: PathBuf::from("maxlab-out"), workers: default_workers(), formats: vec![Format::Json, Format::Csv] };
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let fc: FileConfig = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        overlay(&mut params, &Value::Object(fc.params), "").context("in config file params")?;
        overlay(&mut thresholds, &Value::Object(fc.thresholds), "").context("in config file thresholds")?;
        if let Some(d) = fc.out_dir {
            exec.out_dir = d;
        }
        if let Some(w) = fc.workers {
            exec.workers = w;
        }
        if let Some(f) = fc.formats {
            exec.formats = f;
        }
    }
    if let Some(d) = env_out_dir {
        exec.out_dir = d;
    }
    for (k, v) in &flags.params {
        set_path(&mut params, k, v.clone())?;
    }
    for (k, v) in &flags.thresholds {
        set_path(&mut thresholds, k, v.clone()).context("in thresholds")?;
    }
    if let Some(d) = &flags.out_dir {
        exec.out_dir = d.clone();
    }
    if let Some(w) = flags.workers {
        exec.workers = w;
    }
    if let Some(f) = &flags.formats {
        exec.formats = f.clone();
    }
    if exec.workers == 0 {
        bail!("workers must be at least 1");
    }
    let run = RunConfig { experiment: experiment.to_string(), version: env!("CARGO_PKG_VERSION").to_string(), params, thresholds };
    Ok((run, exec))
}
