//! Experiment configuration files: TOML with sections. A config names one
//! experiment kind plus the grid, data, evolution, probe and ladder it uses;
//! kind-specific knobs go under `[params]` and are overlaid onto defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use bivirial::data::DatumSpec;
use bivirial::manifest::{Manifest, MANIFEST_VERSION};
use bivirial::nls::EvolutionConfig;
use bivirial::{Direction, Grid};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::kinds::ExperimentKind;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    pub half_length: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid, ConfigError> {
        Grid::new(self.dim, self.n, self.half_length).map_err(|e| invalid(format!("[grid]: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSpec {
    #[serde(default)]
    pub epsilon: i8,
    #[serde(default = "cubic")]
    pub p: f64,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "one")]
    pub sample_stride: usize,
}

fn cubic() -> f64 {
    3.0
}

fn one() -> usize {
    1
}

impl EvolutionSpec {
    pub fn build(&self) -> Result<EvolutionConfig, ConfigError> {
        EvolutionConfig::new(self.epsilon, self.p, self.dt, self.t_final, self.sample_stride)
            .map_err(|e| invalid(format!("[evolution]: {e}")))
    }
}

/// Direction and weight selections shared by several kinds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    /// Unnormalised direction; only the first `dim` components are used.
    pub direction: Option<[f64; 2]>,
    /// Named weight: `quadratic`, `japanese-bracket` or `distance`.
    pub weight: Option<String>,
}

impl ProbeSpec {
    pub fn direction(&self, dim: usize) -> Result<Option<Direction>, ConfigError> {
        self.direction
            .map(|d| Direction::normalized(&d[..dim]).map_err(|e| invalid(format!("[probe] direction: {e}"))))
            .transpose()
    }
}

/// How a ladder value maps to the step size used for the order fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resolution {
    /// The value is the step (dt, dx).
    Value,
    /// The value is a count (N, N_omega); the step is its reciprocal.
    Inverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSpec {
    /// Dotted path of the config entry being refined, e.g. `evolution.dt`.
    pub key: String,
    pub values: Vec<f64>,
    pub resolution: Option<Resolution>,
    /// Aggregate FAIL when the fitted order falls below this.
    pub min_order: Option<f64>,
}

impl LadderSpec {
    pub fn resolution(&self) -> Resolution {
        self.resolution.unwrap_or(if self.key.ends_with("dt") { Resolution::Value } else { Resolution::Inverse })
    }

    pub fn step(&self, value: f64) -> f64 {
        match self.resolution() {
            Resolution::Value => value,
            Resolution::Inverse => 1.0 / value,
        }
    }
}

/// Which tolerance manifest the verdicts are judged against. A pinned hash
/// that differs from the built-in manifest is a configuration error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRef {
    pub version: u32,
    pub hash: Option<String>,
}

impl Default for ManifestRef {
    fn default() -> Self {
        Self { version: MANIFEST_VERSION, hash: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Seed for randomized suites; overrides `params.seed` when set.
    pub seed: Option<u64>,
    /// Relative paths resolve against the working directory.
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub manifest: ManifestRef,
    pub grid: Option<GridSpec>,
    pub datum: Option<DatumSpec>,
    /// Second datum for two-solution kinds; defaults to `datum`.
    pub partner: Option<DatumSpec>,
    pub evolution: Option<EvolutionSpec>,
    #[serde(default)]
    pub probe: ProbeSpec,
    pub ladder: Option<LadderSpec>,
    #[serde(default)]
    pub params: toml::Table,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        cfg.check_manifest()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialise")
    }

    fn check_manifest(&self) -> Result<(), ConfigError> {
        let m = Manifest::current();
        if self.manifest.version != m.version {
            return Err(invalid(format!("manifest version {} is not the built-in {}", self.manifest.version, m.version)));
        }
        if let Some(h) = &self.manifest.hash {
            if *h != m.hash() {
                return Err(invalid(format!("manifest hash {h} does not match the built-in {}", m.hash())));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, ConfigError> {
        self.grid.ok_or_else(|| invalid(format!("{} needs a [grid] section", self.kind.name())))?.build()
    }

    pub fn evolution(&self) -> Result<EvolutionConfig, ConfigError> {
        self.evolution.ok_or_else(|| invalid(format!("{} needs an [evolution] section", self.kind.name())))?.build()
    }

    pub fn datum(&self) -> Result<&DatumSpec, ConfigError> {
        self.datum.as_ref().ok_or_else(|| invalid(format!("{} needs a [datum] section", self.kind.name())))
    }

    pub fn partner(&self) -> Result<&DatumSpec, ConfigError> {
        self.partner.as_ref().map_or_else(|| self.datum(), Ok)
    }

    /// `default` with `[params]` overlaid key by key (tables recursively).
    pub fn params<T: Serialize + DeserializeOwned>(&self, default: T) -> Result<T, ConfigError> {
        let mut base = toml::Value::try_from(default).map_err(|e| invalid(format!("[params]: {e}")))?;
        overlay(&mut base, &toml::Value::Table(self.params.clone()));
        T::deserialize(base).map_err(|e| invalid(format!("[params]: {e}")))
    }

    /// A copy with the dotted `key` set to `value`, re-validated.
    pub fn with_value(&self, key: &str, value: f64) -> Result<Self, ConfigError> {
        let mut root = toml::Value::try_from(self).map_err(|e| invalid(e.to_string()))?;
        let parts: Vec<&str> = key.split('.').collect();
        let (last, path) = parts.split_last().ok_or_else(|| invalid("empty ladder key"))?;
        let mut node = &mut root;
        for p in path {
            let table = node.as_table_mut().ok_or_else(|| invalid(format!("ladder key {key}: {p} is not a table")))?;
            node = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        }
        let table = node.as_table_mut().ok_or_else(|| invalid(format!("ladder key {key} is not inside a table")))?;
        let v = match table.get(*last) {
            Some(toml::Value::Integer(_)) => {
                if value.fract() != 0.0 {
                    return Err(invalid(format!("ladder key {key} is an integer, got {value}")));
                }
                toml::Value::Integer(value as i64)
            }
            _ if key == "grid.n" || last.starts_with("n_") || *last == "n" => toml::Value::Integer(value as i64),
            _ => toml::Value::Float(value),
        };
        table.insert(last.to_string(), v);
        let mut out: Self = root.try_into().map_err(|e: toml::de::Error| invalid(format!("ladder key {key}: {e}")))?;
        out.ladder = None;
        Ok(out)
    }
}

fn overlay(base: &mut toml::Value, top: &toml::Value) {
    match (base, top) {
        (toml::Value::Table(b), toml::Value::Table(t)) => {
            for (k, v) in t {
                match b.get_mut(k) {
                    Some(slot) if slot.is_table() && v.is_table() => overlay(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, t) => *b = t.clone(),
    }
}
