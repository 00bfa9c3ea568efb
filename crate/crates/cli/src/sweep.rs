//! Refinement ladders: one run per level, concurrently, then a serial
//! assembly of the convergence table and the fitted order.

use std::path::Path;
use std::time::Instant;

use bivirial::verify::{fit_order, ConvergenceRow, Verdict, VerificationReport};

use crate::config::{invalid, ConfigError, ExperimentConfig};
use crate::output;
use crate::runner::{check_config, run_config, Outcome, RunError};

/// One finished level of a sweep.
#[derive(Debug)]
pub struct Level {
    pub value: f64,
    pub step: f64,
    pub config: ExperimentConfig,
    pub result: Result<Outcome, RunError>,
}

/// Level configs in ladder order, each validated up front.
pub fn level_configs(cfg: &ExperimentConfig) -> Result<Vec<(f64, f64, ExperimentConfig)>, ConfigError> {
    let ladder = cfg.ladder.as_ref().ok_or_else(|| invalid("sweep needs a [ladder] section"))?;
    if ladder.values.len() < 2 {
        return Err(invalid(format!("a ladder needs at least two levels, got {}", ladder.values.len())));
    }
    ladder
        .values
        .iter()
        .map(|&v| {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("ladder values must be positive, got {v}")));
            }
            let c = cfg.with_value(&ladder.key, v)?;
            check_config(&c)?;
            Ok((v, ladder.step(v), c))
        })
        .collect()
}

/// Runs every level on its own thread.
pub fn run_levels(levels: Vec<(f64, f64, ExperimentConfig)>) -> Vec<Level> {
    std::thread::scope(|s| {
        let handles: Vec<_> = levels
            .into_iter()
            .map(|(value, step, config)| {
                s.spawn(move || {
                    let started = Instant::now();
                    let mut result = run_config(&config);
                    if let Ok(o) = &mut result {
                        output::stamp(&mut o.report, &config, started);
                    }
                    Level { value, step, config, result }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("level thread panicked")).collect()
    })
}

/// Aggregate report: one convergence row per level, the least-squares order
/// of `ln measured` against `ln step`, and the worst level verdict. A level
/// that errored or blew up counts as FAIL.
pub fn aggregate(cfg: &ExperimentConfig, levels: &[Level], started: Instant) -> VerificationReport {
    let ladder = cfg.ladder.as_ref().expect("validated ladder");
    let mut rep = VerificationReport::new(format!("sweep-{}", cfg.kind.name()), f64::NAN);
    let mut worst = Verdict::Pass;
    for (k, l) in levels.iter().enumerate() {
        let (residual, verdict) = match &l.result {
            Ok(o) if o.blow_up.is_none() => (o.report.measured, o.report.verdict),
            Ok(_) => (f64::NAN, Verdict::Fail),
            Err(e) => {
                rep.note(format!("level {k} ({} = {}): {e}", ladder.key, l.value));
                (f64::NAN, Verdict::Fail)
            }
        };
        if let Ok(o) = &l.result {
            if rep.grid.is_none() {
                rep.grid = o.report.grid;
            }
            rep.tolerance = o.report.tolerance;
        }
        worst = worst.max(verdict);
        rep.convergence.push(ConvergenceRow { label: format!("{}={}", ladder.key, l.value), resolution: l.step, residual, verdict });
    }
    let mut rows = rep.convergence.clone();
    rows.sort_by(|a, b| b.resolution.total_cmp(&a.resolution));
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.resolution, r.residual)).collect();
    rep.observed_order = fit_order(&pts);
    if let Some(q) = rep.observed_order {
        rep.set("observed_order", q);
        rep.measured = q;
    }
    // non-increasing up to roundoff in the last digits
    let monotone = pts.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-9));
    rep.set("monotone_decrease", f64::from(u8::from(monotone)));
    if let Some(min) = ladder.min_order {
        rep.set("min_order", min);
        if !rep.observed_order.is_some_and(|q| q >= min) {
            rep.note(format!("observed order below the required {min}"));
            worst = Verdict::Fail;
        }
    }
    rep.verdict = worst;
    output::stamp(&mut rep, cfg, started);
    rep.runtime_seconds = started.elapsed().as_secs_f64();
    rep
}

/// Per-level artifacts under `dir/level_NN`.
pub fn write_levels(dir: &Path, levels: &[Level]) -> std::io::Result<()> {
    for (k, l) in levels.iter().enumerate() {
        let sub = dir.join(format!("level_{k:02}"));
        match &l.result {
            Ok(o) => output::write_outcome(&sub, &l.config, o)?,
            Err(e) => {
                output::write_meta(&sub, &l.config)?;
                std::fs::write(sub.join("error.txt"), format!("{e}\n"))?;
            }
        }
    }
    Ok(())
}
