use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bivirial_cli::config::ExperimentConfig;
use bivirial_cli::kinds::ExperimentKind;
use bivirial_cli::output::OUTPUT_ROOT_ENV;
use bivirial_cli::runner::check_config;
use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn bivirial(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bivirial"))
        .args(args)
        .env(OUTPUT_ROOT_ENV, root)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

const SMALL_T2: &str = r#"
kind = "verify-t2"
output_dir = "t2"
[grid]
dim = 1
n = 128
half_length = 12.0
[datum]
kind = "gaussian"
center = [-1.0, 0.0]
xi0 = [0.4, 0.0]
sigma = 1.0
[partner]
kind = "gaussian"
center = [1.5, 0.0]
xi0 = [-0.3, 0.0]
sigma = 1.2
[evolution]
epsilon = 1
p = 3.0
dt = 1e-3
t_final = 0.2
"#;

#[test]
fn listing_covers_the_registry_in_a_stable_order() {
    let tmp = tempfile::tempdir().unwrap();
    let a = bivirial(tmp.path(), &["list-experiments"]);
    let b = bivirial(tmp.path(), &["list-experiments"]);
    assert_eq!(code(&a), 0);
    let text = stdout(&a);
    assert_eq!(text, stdout(&b));
    assert!(text.contains("verify-t1d"));
    let names: Vec<&str> = text.lines().map(|l| l.split_whitespace().next().unwrap()).collect();
    let expected: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
    assert_eq!(names, expected);
}

#[test]
fn every_bundled_config_plans() {
    let mut n = 0;
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        check_config(&cfg).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= ExperimentKind::ALL.len());
}

#[test]
fn bundled_verify_t2_passes_and_records_provenance() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("verify-t2.toml");
    let o = bivirial(tmp.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("verify-t2 PASS"));
    let dir = tmp.path().join("out/verify-t2");
    let r = report(&dir);
    assert_eq!(r["experiment"], "verify-t2");
    assert_eq!(r["verdict"], "PASS");
    assert!(r["schema_version"].is_u64());
    assert_eq!(r["config"]["experiment"]["grid"]["n"], 512);
    assert!(r["config"]["rng"]["algorithm"].is_string());
    assert!(r["grid"].is_object());
    assert!(r["metrics"]["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    let hash = fs::read_to_string(dir.join("manifest.sha256")).unwrap();
    assert_eq!(r["manifest_hash"].as_str().unwrap(), hash.trim());
    for f in ["series.csv", "convergence.csv", "manifest.json", "config.toml"] {
        assert!(dir.join(f).exists(), "{f}");
    }
}

#[test]
fn malformed_configs_exit_with_usage_code() {
    let tmp = tempfile::tempdir().unwrap();
    let bad_toml = write_config(tmp.path(), "a.toml", "kind = \n");
    let bad_kind = write_config(tmp.path(), "b.toml", "kind = \"verify-t9\"\n");
    let bad_key = write_config(tmp.path(), "c.toml", &format!("{SMALL_T2}\nunknown = 1\n"));
    let bad_dim = write_config(tmp.path(), "d.toml", &SMALL_T2.replace("dim = 1", "dim = 2"));
    for p in [&bad_toml, &bad_kind, &bad_key, &bad_dim] {
        let o = bivirial(tmp.path(), &["run", p.to_str().unwrap()]);
        assert_eq!(code(&o), 2, "{}", p.display());
    }
    let missing = bivirial(tmp.path(), &["run", "/nonexistent/config.toml"]);
    assert_eq!(code(&missing), 2);
    assert_eq!(code(&bivirial(tmp.path(), &["frobnicate"])), 2);
}

#[test]
fn diagnostic_runs_exit_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("scattering-diagnostic.toml");
    let o = bivirial(tmp.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("DIAGNOSTIC"));
}

#[test]
fn blow_up_exits_three_with_a_partial_report() {
    let tmp = tempfile::tempdir().unwrap();
    let body = SMALL_T2.replace("sigma = 1.0", "sigma = 1.0\namplitude = 1e200").replace("p = 3.0", "p = 5.0");
    let p = write_config(tmp.path(), "blow.toml", &body);
    let o = bivirial(tmp.path(), &["run", p.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let r = report(&tmp.path().join("t2"));
    assert_eq!(r["verdict"], "FAIL");
    assert!(r["config"]["experiment"].is_object());
}

#[test]
fn identical_configs_give_identical_series() {
    let tmp = tempfile::tempdir().unwrap();
    let a = write_config(tmp.path(), "a.toml", SMALL_T2);
    let b = write_config(tmp.path(), "b.toml", &SMALL_T2.replace("output_dir = \"t2\"", "output_dir = \"t2b\""));
    assert_eq!(code(&bivirial(tmp.path(), &["run", a.to_str().unwrap()])), 0);
    assert_eq!(code(&bivirial(tmp.path(), &["run", b.to_str().unwrap()])), 0);
    for f in ["series.csv", "convergence.csv"] {
        let x = fs::read(tmp.path().join("t2").join(f)).unwrap();
        let y = fs::read(tmp.path().join("t2b").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn seeded_random_runs_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let body = |dir: &str| {
        format!(
            "kind = \"brute-force\"\nseed = 7\noutput_dir = \"{dir}\"\n[grid]\ndim = 2\nn = 16\nhalf_length = 4.0\n[datum]\nkind = \"gaussian\"\nsigma = 1.0\n[params]\ntrials = 2\n"
        )
    };
    let a = write_config(tmp.path(), "a.toml", &body("r1"));
    let b = write_config(tmp.path(), "b.toml", &body("r2"));
    assert_eq!(code(&bivirial(tmp.path(), &["run", a.to_str().unwrap()])), 0);
    assert_eq!(code(&bivirial(tmp.path(), &["run", b.to_str().unwrap()])), 0);
    let x = report(&tmp.path().join("r1"));
    let y = report(&tmp.path().join("r2"));
    assert_eq!(x["measured"], y["measured"]);
    assert_eq!(x["config"]["rng"]["seed"], 7);
}

#[test]
fn single_level_ladder_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(tmp.path(), "s.toml", &format!("{SMALL_T2}\n[ladder]\nkey = \"evolution.dt\"\nvalues = [1e-3]\n"));
    assert_eq!(code(&bivirial(tmp.path(), &["sweep", p.to_str().unwrap()])), 2);
    let no_ladder = write_config(tmp.path(), "n.toml", SMALL_T2);
    assert_eq!(code(&bivirial(tmp.path(), &["sweep", no_ladder.to_str().unwrap()])), 2);
}

#[test]
fn time_step_sweep_is_second_order() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("verify-t2-sweep.toml");
    let o = bivirial(tmp.path(), &["sweep", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let dir = tmp.path().join("out/verify-t2");
    let r = report(&dir);
    let q = r["observed_order"].as_f64().unwrap();
    assert!((q - 2.0).abs() < 0.1, "order {q}");
    assert_eq!(r["convergence"].as_array().unwrap().len(), 2);
    assert!(dir.join("level_00/report.json").exists());
    assert!(dir.join("level_01/report.json").exists());
}

#[test]
fn plancherel_residual_decreases_along_the_ladder() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("radon-plancherel-sweep.toml");
    let o = bivirial(tmp.path(), &["sweep", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let r = report(&tmp.path().join("out/radon-plancherel"));
    assert_eq!(r["metrics"]["monotone_decrease"], 1.0);
    let rows = r["convergence"].as_array().unwrap();
    let res: Vec<f64> = rows.iter().map(|row| row["residual"].as_f64().unwrap()).collect();
    assert!(res.windows(2).all(|w| w[1] < w[0]), "{res:?}");
}
