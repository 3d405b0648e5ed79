//! Run configuration: one TOML key-value file plus command-line overrides.
//!
//! ```toml
//! model = "simhyd"
//! forcing = "catchment.csv"      # date,precip_mm,pet_mm[,flow_mm]
//! metrics = ["nse", "kgess", "wia"]
//! size = 10000
//! seed = 42
//! warmup = 365
//! deltas = [0.05, 0.10]
//! out = "results"
//!
//! [sce]
//! repeats = 10
//!
//! [ranges]
//! smsc = [100.0, 400.0]
//!
//! [params]                       # one parameter set, for `simulate`
//! insc = 2.0
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricId;
use crate::models::{ModelId, ModelParams};
use crate::sampling::{ParameterSpace, SceConfig};

pub const DEFAULT_SIZE: usize = 1_000_000;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_WARMUP: usize = 365;
pub const DEFAULT_DELTAS: [f64; 2] = [0.05, 0.10];
pub const DEFAULT_BATCH_SIZE: usize = 10_000;
pub const DEFAULT_SCE_REPEATS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SceSettings {
    pub repeats: Option<usize>,
    pub complexes: Option<usize>,
    pub points_per_complex: Option<usize>,
    pub subcomplex_size: Option<usize>,
    pub evolution_steps: Option<usize>,
    pub max_evals: Option<usize>,
    pub tolerance: Option<f64>,
    pub window: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_model")]
    pub model: ModelId,
    /// Forcing file, optionally carrying a `flow_mm` column.
    pub forcing: Option<PathBuf>,
    /// Separate observed-flow file (`date,flow_mm`), overriding the
    /// forcing file's flow column.
    pub obs: Option<PathBuf>,
    /// Extra parameter sets (`run_id,<names>`) evaluated after the LHS sets.
    pub params_file: Option<PathBuf>,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<MetricId>,
    #[serde(default = "default_size")]
    pub size: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub threads: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Initial store levels, keyed by store name; missing stores start empty.
    #[serde(default)]
    pub initial_stores: BTreeMap<String, f64>,
    #[serde(default)]
    pub sce: SceSettings,
    #[serde(default)]
    pub ranges: BTreeMap<String, [f64; 2]>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

fn default_model() -> ModelId {
    ModelId::Simhyd
}
fn default_metrics() -> Vec<MetricId> {
    MetricId::ALL.to_vec()
}
fn default_size() -> usize {
    DEFAULT_SIZE
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_warmup() -> usize {
    DEFAULT_WARMUP
}
fn default_deltas() -> Vec<f64> {
    DEFAULT_DELTAS.to_vec()
}
fn default_batch_size() -> usize {
    DEFAULT_BATCH_SIZE
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config is valid")
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file and resolves its relative paths against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.forcing, &mut cfg.obs, &mut cfg.params_file]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.out.is_relative() {
            cfg.out = base.join(&cfg.out);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks sizes, deltas, metric list, range names and referenced files.
    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::Config("size must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::Config("metrics list is empty".into()));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::Config(format!("delta {d} must be positive")));
        }
        for p in [&self.forcing, &self.obs, &self.params_file].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::Config(format!("file {} does not exist", p.display())));
            }
        }
        self.space()?;
        self.sce_config(0)?.validate(self.model.parameter_names().len())?;
        Ok(())
    }

    /// Default feasible space with `[ranges]` overrides applied.
    pub fn space(&self) -> Result<ParameterSpace> {
        let mut space = self.model.default_space();
        for (name, [lo, hi]) in &self.ranges {
            space.set_range(name, *lo, *hi)?;
        }
        Ok(space)
    }

    pub fn sce_repeats(&self) -> usize {
        self.sce.repeats.unwrap_or(DEFAULT_SCE_REPEATS)
    }

    pub fn sce_config(&self, seed: u64) -> Result<SceConfig> {
        let mut cfg = SceConfig::for_model(self.model, seed);
        let s = &self.sce;
        if let Some(v) = s.complexes {
            cfg.n_complexes = v;
        }
        if let Some(v) = s.points_per_complex {
            cfg.points_per_complex = v;
        }
        if let Some(v) = s.subcomplex_size {
            cfg.subcomplex_size = v;
        }
        if let Some(v) = s.evolution_steps {
            cfg.evolution_steps = v;
        }
        if let Some(v) = s.max_evals {
            cfg.max_evals = v;
        }
        if let Some(v) = s.tolerance {
            cfg.convergence_tol = v;
        }
        if let Some(v) = s.window {
            cfg.convergence_window = v;
        }
        Ok(cfg)
    }

    /// The single parameter set in `[params]`; every name must be given.
    pub fn model_params(&self) -> Result<ModelParams> {
        let names = self.model.parameter_names();
        if let Some(extra) = self.params.keys().find(|k| !names.contains(&k.as_str())) {
            return Err(Error::Config(format!(
                "unknown {} parameter `{extra}`",
                self.model
            )));
        }
        let values = names
            .iter()
            .map(|n| {
                self.params
                    .get(*n)
                    .copied()
                    .ok_or_else(|| Error::Config(format!("[params] is missing `{n}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        ModelParams::from_values(self.model, &values)
    }

    pub fn initial_store_levels(&self) -> Result<Option<Vec<f64>>> {
        if self.initial_stores.is_empty() {
            return Ok(None);
        }
        let names = self.model.store_names();
        if let Some(extra) = self
            .initial_stores
            .keys()
            .find(|k| !names.contains(&k.as_str()))
        {
            return Err(Error::Config(format!("unknown store `{extra}`")));
        }
        Ok(Some(
            names
                .iter()
                .map(|n| self.initial_stores.get(*n).copied().unwrap_or(0.0))
                .collect(),
        ))
    }
}

/// Reads a parameter-set CSV `run_id,<names>`. Column order must match the
/// model's parameter order.
pub fn read_parameter_sets(path: &Path, model: ModelId) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::data(path, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::data(path, e.to_string()))?
        .clone();
    let names = model.parameter_names();
    let expected: Vec<&str> = std::iter::once("run_id").chain(names.iter().copied()).collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::data(
            path,
            format!("header must be `{}`", expected.join(",")),
        ));
    }
    let mut sets = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::data(path, e.to_string()))?;
        let values = row
            .iter()
            .skip(1)
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::data(path, format!("non-numeric cell at row {}", i + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        sets.push(values);
    }
    Ok(sets)
}

pub fn write_parameter_sets(path: &Path, model: ModelId, sets: &[Vec<f64>]) -> Result<()> {
    let mut out = String::from("run_id");
    for n in model.parameter_names() {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for (i, s) in sets.iter().enumerate() {
        out.push_str(&i.to_string());
        for v in s {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
