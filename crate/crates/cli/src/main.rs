use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use bivirial_cli::config::ExperimentConfig;
use bivirial_cli::runner::{self, RunError};
use bivirial_cli::{kinds, output, sweep, EXIT_BLOW_UP, EXIT_FAIL, EXIT_OK, EXIT_USAGE};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bivirial", version, about = "Run bivirial verification experiments from config files")]
struct Cli {
    /// Print notes and file locations to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment a config describes.
    Run { config: PathBuf },
    /// Run every level of the config's [ladder] and fit the convergence order.
    Sweep { config: PathBuf },
    /// List experiment kinds.
    ListExperiments,
}

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    ExperimentConfig::load(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_USAGE)
    })
}

fn run(path: &Path, verbose: bool) -> ExitCode {
    let cfg = match load(path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let dir = output::output_dir(&cfg);
    let started = Instant::now();
    let outcome = match runner::run_config(&cfg) {
        Ok(o) => o,
        Err(RunError::Config(e)) => {
            eprintln!("error: invalid config: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
        Err(RunError::Numerical(e)) => {
            eprintln!("error: {e}");
            let blow_up = runner::is_blow_up(&e);
            let mut rep = bivirial::verify::VerificationReport::new(cfg.kind.name(), f64::NAN);
            rep.verdict = bivirial::verify::Verdict::Fail;
            rep.note(format!("run aborted: {e}"));
            let partial = runner::Outcome { report: rep, diagnostics: Vec::new(), blow_up: None };
            return finish(&dir, &cfg, partial, started, verbose, if blow_up { EXIT_BLOW_UP } else { EXIT_FAIL });
        }
    };
    let code = if outcome.blow_up.is_some() {
        EXIT_BLOW_UP
    } else if outcome.report.verdict.is_success() {
        EXIT_OK
    } else {
        EXIT_FAIL
    };
    finish(&dir, &cfg, outcome, started, verbose, code)
}

fn finish(dir: &Path, cfg: &ExperimentConfig, mut outcome: runner::Outcome, started: Instant, verbose: bool, code: u8) -> ExitCode {
    output::stamp(&mut outcome.report, cfg, started);
    if let Err(e) = output::write_outcome(dir, cfg, &outcome) {
        eprintln!("error: writing {}: {e}", dir.display());
        return ExitCode::from(EXIT_FAIL);
    }
    let r = &outcome.report;
    println!("{} {}: measured {:e} (tolerance {:e}) -> {}", r.experiment, r.verdict, r.measured, r.tolerance, dir.display());
    if verbose {
        for n in &r.notes {
            eprintln!("note: {n}");
        }
    }
    ExitCode::from(code)
}

fn sweep(path: &Path, verbose: bool) -> ExitCode {
    let cfg = match load(path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let levels = match sweep::level_configs(&cfg) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: invalid config: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let dir = output::output_dir(&cfg);
    let started = Instant::now();
    let done = sweep::run_levels(levels);
    let rep = sweep::aggregate(&cfg, &done, started);
    let written = sweep::write_levels(&dir, &done)
        .and_then(|_| rep.write(&dir).map_err(|e| std::io::Error::other(e.to_string())))
        .and_then(|_| output::write_meta(&dir, &cfg));
    if let Err(e) = written {
        eprintln!("error: writing {}: {e}", dir.display());
        return ExitCode::from(EXIT_FAIL);
    }
    for row in &rep.convergence {
        println!("{:<32} step {:<12e} residual {:<12e} {}", row.label, row.resolution, row.residual, row.verdict);
    }
    println!(
        "{} {}: observed order {} -> {}",
        rep.experiment,
        rep.verdict,
        rep.observed_order.map_or("n/a".to_string(), |q| format!("{q:.3}")),
        dir.display()
    );
    if verbose {
        for n in &rep.notes {
            eprintln!("note: {n}");
        }
    }
    let blown = done.iter().any(|l| match &l.result {
        Ok(o) => o.blow_up.is_some(),
        Err(RunError::Numerical(e)) => runner::is_blow_up(e),
        Err(_) => false,
    });
    ExitCode::from(if blown {
        EXIT_BLOW_UP
    } else if rep.verdict.is_success() {
        EXIT_OK
    } else {
        EXIT_FAIL
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match cli.command {
        Command::Run { config } => run(&config, cli.verbose),
        Command::Sweep { config } => sweep(&config, cli.verbose),
        Command::ListExperiments => {
            print!("{}", kinds::listing());
            ExitCode::from(EXIT_OK)
        }
    }
}
