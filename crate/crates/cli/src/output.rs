//! Report assembly and the files a run leaves behind.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use bivirial::data::RNG_ALGORITHM;
use bivirial::manifest::Manifest;
use bivirial::verify::VerificationReport;

use crate::config::ExperimentConfig;
use crate::runner::Outcome;

/// Overrides the output root; a config's `output_dir` is then taken
/// relative to it.
pub const OUTPUT_ROOT_ENV: &str = "BIVIRIAL_OUTPUT_ROOT";

/// Where a config's artifacts go: `output_dir`, or `out/<kind>`, placed
/// under `$BIVIRIAL_OUTPUT_ROOT` when that is set.
pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    let rel = cfg.output_dir.clone().unwrap_or_else(|| Path::new("out").join(cfg.kind.name()));
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if !root.is_empty() => {
            let stripped: PathBuf = rel.components().filter(|c| matches!(c, std::path::Component::Normal(_))).collect();
            PathBuf::from(root).join(stripped)
        }
        _ => rel,
    }
}

/// Embeds the config echo, the seed and generator, and wall-clock data;
/// the engine's own config block is kept under `engine`.
pub fn stamp(report: &mut VerificationReport, cfg: &ExperimentConfig, started: Instant) {
    let engine = std::mem::take(&mut report.config);
    let unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(f64::NAN);
    report.config = serde_json::json!({
        "experiment": cfg,
        "rng": { "algorithm": RNG_ALGORITHM, "seed": cfg.seed },
        "engine": engine,
    });
    report.manifest_hash = Manifest::current().hash();
    report.set("wall_clock_seconds", started.elapsed().as_secs_f64());
    report.set("finished_unix_seconds", unix);
}

/// `report.json`, `series.csv`, `convergence.csv`, one `<name>.csv` per
/// diagnostic series, `manifest.json`, `manifest.sha256` and `config.toml`.
pub fn write_outcome(dir: &Path, cfg: &ExperimentConfig, outcome: &Outcome) -> io::Result<()> {
    outcome.report.write(dir).map_err(|e| io::Error::other(e.to_string()))?;
    for s in &outcome.diagnostics {
        fs::write(dir.join(format!("{}.csv", s.name)), s.to_csv())?;
    }
    write_meta(dir, cfg)
}

pub fn write_meta(dir: &Path, cfg: &ExperimentConfig) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = Manifest::current();
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    fs::write(dir.join("manifest.sha256"), format!("{}\n", manifest.hash()))?;
    fs::write(dir.join("config.toml"), cfg.to_toml())?;
    Ok(())
}
