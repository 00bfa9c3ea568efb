//! Turns a config into a fully validated job, then executes it. Planning
//! errors are configuration errors; execution errors are numerical.

use bivirial::data::RandomSpec;
use bivirial::diagnostics::DiagnosticSeries;
use bivirial::domain::{
    boundary_brute_force_suite, cross_engine_oracle, domain_virial_residual, frequency_localized_l4,
    l4_ratio_spread, trace_control_measurement, verify_t1d, CrossEngineParams, DirichletBox, DiskStudyParams,
    DomainGrid, L4Datum, VirialWeight,
};
use bivirial::manifest::Manifest;
use bivirial::nls::{evolve, EvolutionConfig, Probe, Trajectory};
use bivirial::verify::{
    self, apriori_bound_check, bilinear_radon_bound, bourgain_scaling, brute_force_suite, convexity_sweep,
    momentum_bound_trials, ozawa_tsutsumi_check, plancherel_study, scattering_diagnostic, smoothing_check_1d,
    t3_consistency_suite, verify_identity, BilinearOptions, BourgainParams, ConvexityParams, IdentityOptions,
    MomentumTrialParams, OtOptions, PairT1, PairT2, PairT3, Verdict, VerificationReport,
};
use bivirial::virial::Weight;
use bivirial::{ComplexField, Direction, Error, Grid};
use serde::{Deserialize, Serialize};

use crate::config::{invalid, ConfigError, ExperimentConfig};
use crate::kinds::ExperimentKind;

/// The result of one experiment: the report plus any free-form series.
#[derive(Debug)]
pub struct Outcome {
    pub report: VerificationReport,
    pub diagnostics: Vec<DiagnosticSeries>,
    /// Set when the evolution produced a non-finite state; the report is partial.
    pub blow_up: Option<f64>,
}

impl Outcome {
    fn of(report: VerificationReport) -> Self {
        Self { report, diagnostics: Vec::new(), blow_up: None }
    }
}

/// Kind-specific `[params]` of the periodic kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PeriodicParams {
    /// Overrides the manifest tolerance of the identity kinds.
    tolerance: Option<f64>,
    rhs_stride: usize,
    /// Window `[-T, T]` (or `[0, T]`) of the free-solution kinds.
    t: f64,
    time_samples: usize,
    x_probe_count: usize,
    n_omegas: Vec<usize>,
    trials: usize,
    pairs: usize,
    weights: Vec<String>,
    budget: u64,
    random: RandomSpec,
}

impl Default for PeriodicParams {
    fn default() -> Self {
        Self {
            tolerance: None,
            rhs_stride: 1,
            t: 1.0,
            time_samples: 401,
            x_probe_count: 9,
            n_omegas: vec![16, 32, 64],
            trials: 5,
            pairs: 20,
            weights: vec!["quadratic".into(), "japanese-bracket".into()],
            budget: 1 << 24,
            random: RandomSpec { packets: 3, max_frequency: 0.6, ..RandomSpec::default() },
        }
    }
}

/// Obstacle, datum and measurement window of the domain kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DomainParams {
    disk_center: [f64; 2],
    radius: f64,
    datum_center: [f64; 2],
    xi0: [f64; 2],
    sigma: f64,
    amplitude: f64,
    collar_offset: f64,
    collar_width: f64,
    tolerance: Option<f64>,
    /// `[x0, x1, y0, y1]` for trace-control.
    window: [f64; 4],
    lambdas: Vec<f64>,
    samples_per_window: usize,
    n: usize,
    trials: usize,
    random: RandomSpec,
}

impl Default for DomainParams {
    fn default() -> Self {
        let d = DiskStudyParams::default();
        Self {
            disk_center: d.disk_center,
            radius: d.radius,
            datum_center: d.datum_center,
            xi0: d.xi0,
            sigma: d.sigma,
            amplitude: d.amplitude,
            collar_offset: d.collar_offset,
            collar_width: d.collar_width,
            tolerance: None,
            window: [-3.0, -1.2, -1.0, 1.0],
            lambdas: vec![2.0, 4.0, 8.0],
            samples_per_window: 8,
            n: 32,
            trials: 5,
            random: RandomSpec { packets: 3, max_frequency: 0.6, ..RandomSpec::default() },
        }
    }
}

enum Job {
    Identity { u0: ComplexField, v0: Option<ComplexField>, evo: EvolutionConfig, pair: Box<dyn verify::IdentityPair + Send>, opts: IdentityOptions },
    Convexity(ConvexityParams),
    T3Consistency { grid: Grid, weights: Vec<Weight>, pairs: usize, seed: u64, spec: RandomSpec },
    Ot { u0: ComplexField, v0: ComplexField, t: f64, opts: OtOptions },
    Apriori { u0: ComplexField, evo: EvolutionConfig },
    Bourgain(BourgainParams),
    BilinearRadon { u0: ComplexField, v0: ComplexField, t: f64, omega: Direction, opts: BilinearOptions },
    Smoothing { u0: ComplexField, probes: usize, t: f64, samples: usize },
    Scattering { u0: ComplexField, evo: EvolutionConfig },
    Momentum(MomentumTrialParams),
    Plancherel { grid: Grid, f: Vec<f64>, n_omegas: Vec<usize> },
    BruteForce { grid: Grid, trials: usize, seed: u64, spec: RandomSpec },
    BoundaryBruteForce { n: usize, trials: usize, seed: u64, spec: RandomSpec },
    CrossEngine(CrossEngineParams),
    T1d { study: DiskStudyParams, n: usize, omegas: Vec<Direction>, tolerance: f64 },
    DomainVirial { study: DiskStudyParams, n: usize, weight: VirialWeight, tolerance: f64 },
    TraceControl { study: DiskStudyParams, n: usize, window: [f64; 4] },
    L4 { grid: Grid, lambdas: Vec<f64>, center: [f64; 2], samples: usize },
}

fn tol(key: &str) -> Result<f64, ConfigError> {
    Manifest::current().tolerance(key).map_err(|e| invalid(e.to_string()))
}

fn datum(cfg: &ExperimentConfig, grid: &Grid, partner: bool) -> Result<ComplexField, ConfigError> {
    let spec = if partner { cfg.partner()? } else { cfg.datum()? };
    spec.build(grid).map_err(|e| invalid(format!("[{}]: {e}", if partner { "partner" } else { "datum" })))
}

fn periodic_weight(name: &str) -> Result<Weight, ConfigError> {
    match name {
        "quadratic" => Ok(Weight::quadratic()),
        "japanese-bracket" => Ok(Weight::japanese_bracket()),
        other => Err(invalid(format!("unknown interaction weight `{other}` (quadratic, japanese-bracket)"))),
    }
}

fn need_dim(grid: &Grid, dim: usize, kind: ExperimentKind) -> Result<(), ConfigError> {
    if grid.dim() != dim {
        return Err(invalid(format!("{} needs a {dim}D grid, got {}D", kind.name(), grid.dim())));
    }
    Ok(())
}

fn disk_study(cfg: &ExperimentConfig, p: &DomainParams) -> Result<(DiskStudyParams, usize), ConfigError> {
    let g = cfg.grid()?;
    need_dim(&g, 2, cfg.kind)?;
    let evo = cfg.evolution()?;
    let study = DiskStudyParams {
        half_length: g.half_length(),
        disk_center: p.disk_center,
        radius: p.radius,
        datum_center: p.datum_center,
        xi0: p.xi0,
        sigma: p.sigma,
        amplitude: p.amplitude,
        collar_offset: p.collar_offset,
        collar_width: p.collar_width,
        epsilon: evo.epsilon,
        p: evo.p,
        dt: evo.dt,
        t_final: evo.t_final,
        sample_stride: evo.sample_stride,
        levels: vec![g.n()],
    };
    study.domain(g.n()).map_err(|e| invalid(format!("domain: {e}")))?;
    Ok((study, g.n()))
}

fn plan(cfg: &ExperimentConfig) -> Result<Job, ConfigError> {
    use ExperimentKind as K;
    let kind = cfg.kind;
    Ok(match kind {
        K::VerifyT1 | K::VerifyT2 | K::VerifyT3 => {
            let p: PeriodicParams = cfg.params(PeriodicParams::default())?;
            let g = cfg.grid()?;
            let evo = cfg.evolution()?;
            let u0 = datum(cfg, &g, false)?;
            let (pair, v0, key): (Box<dyn verify::IdentityPair + Send>, _, _) = match kind {
                K::VerifyT1 => {
                    let omega = cfg.probe.direction(g.dim())?.unwrap_or(Direction::axis(g.dim(), 0));
                    (Box::new(PairT1 { omega, epsilon: evo.epsilon, p: evo.p }), None, "t1.residual")
                }
                K::VerifyT2 => {
                    need_dim(&g, 1, kind)?;
                    (Box::new(PairT2 { epsilon: evo.epsilon, p: evo.p }), Some(datum(cfg, &g, true)?), "t2.residual")
                }
                _ => {
                    let weight = periodic_weight(cfg.probe.weight.as_deref().unwrap_or("quadratic"))?;
                    let pair = PairT3 { weight, epsilon: evo.epsilon, p: evo.p, budget: p.budget as u128 };
                    (Box::new(pair), Some(datum(cfg, &g, true)?), "t1.residual")
                }
            };
            let opts = IdentityOptions {
                tolerance: p.tolerance.map_or_else(|| tol(key), Ok)?,
                rhs_stride: p.rhs_stride,
                wrap_limit: tol("wrap.limit")?,
            };
            Job::Identity { u0, v0, evo, pair, opts }
        }
        K::ConvexitySweep => {
            let mut p = cfg.params(ConvexityParams::default())?;
            if let Some(s) = cfg.seed {
                p.seed = s;
            }
            Job::Convexity(p)
        }
        K::T3Consistency => {
            let p: PeriodicParams = cfg.params(PeriodicParams::default())?;
            let grid = cfg.grid()?;
            need_dim(&grid, 2, kind)?;
            let weights = p.weights.iter().map(|w| periodic_weight(w)).collect::<Result<_, _>>()?;
            Job::T3Consistency { grid, weights, pairs: p.pairs, seed: cfg.seed.unwrap_or(0), spec: p.random }
        }
        K::OzawaTsutsumi => {
            let p: PeriodicParams = cfg.params(PeriodicParams::default())?;
            let g = cfg.grid()?;
            need_dim(&g, 1, kind)?;
            let u0 = datum(cfg, &g, false)?;
            let v0 = datum(cfg, &g, true)?;
            // a centred unmodulated Gaussian has a closed-form tail
            let gaussian = match (cfg.datum()?, &cfg.partner) {
                (bivirial::data::DatumSpec::Gaussian { center, xi0, sigma, amplitude }, None)
                    if center[0] == 0.0 && xi0[0] == 0.0 =>
                {
                    Some((*sigma, *amplitude))
                }
                _ => None,
            };
            let opts = OtOptions { time_samples: p.time_samples, gaussian, wrap_limit: tol("wrap.limit")? };
            Job::Ot { u0, v0, t: p.t, opts }
        }
        K::AprioriBound => {
            let g = cfg.grid()?;
            let evo = cfg.evolution()?;
            if evo.epsilon != 1 {
                return Err(invalid("apriori-bound needs the defocusing equation (epsilon = 1)"));
            }
            Job::Apriori { u0: datum(cfg, &g, false)?, evo }
        }
        K::BourgainScaling => Job::Bourgain(cfg.params(BourgainParams::default())?),
        K::BilinearRadon => {
            let p: PeriodicParams = cfg.params(PeriodicParams::default())?;
            let g = cfg.grid()?;
            let omega = cfg.probe.direction(g.dim())?.unwrap_or(Direction::axis(g.dim(), 0));
            let opts = BilinearOptions { time_samples: p.time_samples, wrap_limit: tol("wrap.limit")? };
            Job::BilinearRadon { u0: datum(cfg, &g, false)?, v0: datum(cfg, &g, true)?, t: p.t, omega, opts }
        }
        K::Smoothing1d => {
            let p: PeriodicParams = cfg.params(PeriodicParams::default())?;
            let g = cfg.grid()?;
            need_dim(&g, 1, kind)?;
            Job::Smoothing { u0: datum(cfg, &g, false)?, probes: p.x_probe_count, t: p.t, samples: p.time_samples }
        }
        K::ScatteringDiagnostic => {
            let g = cfg.grid()?;
            let evo = cfg.evolution()?;
            let critical = 1.0 + 4.0 / g.dim() as f64;
            if evo.epsilon != 1 || evo.p <= critical {
                return Err(invalid(format!("scattering-diagnostic needs epsilon = 1 and p > {critical}")));
            }
            Job::Scattering { u0: datum(cfg, &g, false)?, evo }
        }
        K::MomentumBound => {
            let mut p = cfg.params(MomentumTrialParams::default())?;
            if let Some(s) = cfg.seed {
                p.seed = s;
            }
            Job::Momentum(p)
        }
        K::RadonPlancherel => {
            let p: PeriodicParams = cfg.params(PeriodicParams::default())?;
            let grid = cfg.grid()?;
            need_dim(&grid, 2, kind)?;
            let f = datum(cfg, &grid, false)?.values().iter().map(|z| z.re).collect();
            if p.n_omegas.is_empty() {
                return Err(invalid("radon-plancherel needs at least one entry in params.n_omegas"));
            }
            Job::Plancherel { grid, f, n_omegas: p.n_omegas }
        }
        K::BruteForce => {
            let p: PeriodicParams = cfg.params(PeriodicParams::default())?;
            let grid = cfg.grid()?;
            if grid.n() > 64 {
                return Err(invalid("brute-force runs the O(N^2) sums; keep grid.n <= 64"));
            }
            Job::BruteForce { grid, trials: p.trials, seed: cfg.seed.unwrap_or(0), spec: p.random }
        }
        K::BoundaryBruteForce => {
            let p: DomainParams = cfg.params(DomainParams::default())?;
            if p.n > 64 {
                return Err(invalid("boundary-brute-force runs the O(N^2) sums; keep params.n <= 64"));
            }
            Job::BoundaryBruteForce { n: p.n, trials: p.trials, seed: cfg.seed.unwrap_or(0), spec: p.random }
        }
        K::CrossEngine => Job::CrossEngine(cfg.params(CrossEngineParams::default())?),
        K::VerifyT1d => {
            let p: DomainParams = cfg.params(DomainParams::default())?;
            let (study, n) = disk_study(cfg, &p)?;
            let omegas = match cfg.probe.direction(2)? {
                Some(d) => vec![d],
                None => vec![Direction::axis(2, 0), Direction::axis(2, 1)],
            };
            if let Some(bad) = omegas.iter().find(|d| !d.is_exact()) {
                return Err(invalid(format!("verify-t1d needs an exact lattice direction, got {:?}", bad.components())));
            }
            Job::T1d { study, n, omegas, tolerance: p.tolerance.map_or_else(|| tol("t1d.residual"), Ok)? }
        }
        K::DomainVirial => {
            let p: DomainParams = cfg.params(DomainParams::default())?;
            let (study, n) = disk_study(cfg, &p)?;
            let weight = match cfg.probe.weight.as_deref().unwrap_or("distance") {
                "distance" => VirialWeight::distance_to_point(p.disk_center),
                "japanese-bracket" => VirialWeight::japanese_bracket(p.disk_center),
                other => return Err(invalid(format!("unknown domain weight `{other}` (distance, japanese-bracket)"))),
            };
            Job::DomainVirial { study, n, weight, tolerance: p.tolerance.map_or_else(|| tol("domain_virial.residual"), Ok)? }
        }
        K::TraceControl => {
            let p: DomainParams = cfg.params(DomainParams::default())?;
            let (study, n) = disk_study(cfg, &p)?;
            Job::TraceControl { study, n, window: p.window }
        }
        K::FrequencyLocalizedL4 => {
            let p: DomainParams = cfg.params(DomainParams::default())?;
            let grid = cfg.grid()?;
            need_dim(&grid, 2, kind)?;
            if p.lambdas.is_empty() || p.lambdas.iter().any(|l| !(*l > 0.0)) {
                return Err(invalid("frequency-localized-l4 needs positive params.lambdas"));
            }
            Job::L4 { grid, lambdas: p.lambdas, center: p.datum_center, samples: p.samples_per_window }
        }
    })
}

/// Evolution with mass and energy probes. A blow-up yields the partial
/// trajectory together with the time it happened.
fn evolve_probed(u0: &ComplexField, evo: &EvolutionConfig) -> bivirial::Result<(Trajectory, DiagnosticSeries, Option<f64>)> {
    let run = evolve(u0, evo, &[Probe::mass(), Probe::energy(evo.epsilon, evo.p)])?;
    Ok((run.trajectory, run.series, run.blow_up))
}

fn blown_up(kind: ExperimentKind, t: f64, series: DiagnosticSeries) -> Outcome {
    let mut rep = VerificationReport::new(kind.name(), f64::NAN);
    rep.verdict = Verdict::Fail;
    rep.set("blow_up_time", t);
    rep.note(format!("non-finite state at t = {t}; the report covers the samples before it"));
    Outcome { report: rep, diagnostics: vec![series], blow_up: Some(t) }
}

/// Worst of several reports by `measured`, with each residual recorded.
fn worst_of(name: &str, reports: Vec<(String, VerificationReport)>) -> VerificationReport {
    let mut out = reports.iter().max_by(|a, b| a.1.measured.total_cmp(&b.1.measured)).expect("non-empty").1.clone();
    out.experiment = name.to_string();
    for (label, r) in &reports {
        out.set(&format!("{label}.residual"), r.measured);
        out.verdict = out.verdict.max(r.verdict);
    }
    out
}

fn domain_of(study: &DiskStudyParams, n: usize) -> bivirial::Result<(DomainGrid, Trajectory)> {
    let dom = study.domain(n)?;
    let traj = study.trajectory(&dom)?;
    Ok((dom, traj))
}

fn execute(kind: ExperimentKind, job: Job) -> bivirial::Result<Outcome> {
    Ok(match job {
        Job::Identity { u0, v0, evo, pair, opts } => {
            let (tu, su, bu) = evolve_probed(&u0, &evo)?;
            if let Some(t) = bu {
                return Ok(blown_up(kind, t, su));
            }
            let mut diagnostics = vec![su];
            let tv = match v0 {
                Some(v0) => {
                    let (tv, sv, bv) = evolve_probed(&v0, &evo)?;
                    if let Some(t) = bv {
                        return Ok(blown_up(kind, t, sv));
                    }
                    diagnostics.push(DiagnosticSeries { name: "partner_probes".into(), ..sv });
                    Some(tv)
                }
                None => None,
            };
            let mut rep = verify_identity(&tu, tv.as_ref(), pair.as_ref(), &opts)?;
            rep.experiment = kind.name().into();
            Outcome { report: rep, diagnostics, blow_up: None }
        }
        Job::Convexity(p) => Outcome::of(convexity_sweep(&p)?),
        Job::T3Consistency { grid, weights, pairs, seed, spec } => {
            Outcome::of(t3_consistency_suite(&grid, &weights, pairs, seed, &spec)?)
        }
        Job::Ot { u0, v0, t, opts } => Outcome::of(ozawa_tsutsumi_check(&u0, &v0, t, &opts)?),
        Job::Apriori { u0, evo } => {
            let (traj, series, b) = evolve_probed(&u0, &evo)?;
            if let Some(t) = b {
                return Ok(blown_up(kind, t, series));
            }
            Outcome { report: apriori_bound_check(&traj, evo.p)?, diagnostics: vec![series], blow_up: None }
        }
        Job::Bourgain(p) => Outcome::of(bourgain_scaling(&p)?),
        Job::BilinearRadon { u0, v0, t, omega, opts } => Outcome::of(bilinear_radon_bound(&u0, &v0, t, &omega, &opts)?),
        Job::Smoothing { u0, probes, t, samples } => Outcome::of(smoothing_check_1d(&u0, probes, t, samples)?),
        Job::Scattering { u0, evo } => {
            let (traj, series, b) = evolve_probed(&u0, &evo)?;
            if let Some(t) = b {
                return Ok(blown_up(kind, t, series));
            }
            let s = scattering_diagnostic(&traj)?;
            let mut rep = VerificationReport::new(kind.name(), f64::NAN);
            rep.grid = Some(*traj.grid());
            rep.config = serde_json::to_value(evo).map_err(Error::Json)?;
            if let Some(f) = s.metadata.get("decreasing_fraction").and_then(|v| v.parse().ok()) {
                rep.set("decreasing_fraction", f);
                rep.measured = f;
            }
            if let Some(last) = s.rows.last() {
                rep.set("final_h1_decrement", last.1[1]);
            }
            rep.verdict = Verdict::Diagnostic;
            Outcome { report: rep, diagnostics: vec![series, s], blow_up: None }
        }
        Job::Momentum(p) => Outcome::of(momentum_bound_trials(&p)?),
        Job::Plancherel { grid, f, n_omegas } => Outcome::of(plancherel_study(&grid, &f, &n_omegas)?),
        Job::BruteForce { grid, trials, seed, spec } => Outcome::of(brute_force_suite(&grid, trials, seed, &spec)?),
        Job::BoundaryBruteForce { n, trials, seed, spec } => Outcome::of(boundary_brute_force_suite(n, trials, seed, &spec)?),
        Job::CrossEngine(p) => Outcome::of(cross_engine_oracle(&p)?),
        Job::T1d { study, n, omegas, tolerance } => {
            let (dom, traj) = domain_of(&study, n)?;
            let opts = IdentityOptions { tolerance, rhs_stride: 1, wrap_limit: f64::INFINITY };
            let reports = omegas
                .iter()
                .map(|om| Ok((om.label(), verify_t1d(&dom, &traj, om, &opts)?)))
                .collect::<bivirial::Result<Vec<_>>>()?;
            Outcome::of(worst_of(kind.name(), reports))
        }
        Job::DomainVirial { study, n, weight, tolerance } => {
            let (dom, traj) = domain_of(&study, n)?;
            let opts = IdentityOptions { tolerance, rhs_stride: 1, wrap_limit: f64::INFINITY };
            let mut rep = domain_virial_residual(&dom, &traj, &weight, &opts)?;
            rep.experiment = kind.name().into();
            Outcome::of(rep)
        }
        Job::TraceControl { study, n, window } => {
            let (dom, traj) = domain_of(&study, n)?;
            let s = trace_control_measurement(&dom, &traj, window)?;
            let mut rep = VerificationReport::new(kind.name(), f64::NAN);
            rep.grid = Some(*dom.base());
            for col in ["ratio_boundary", "ratio_local"] {
                let m = s.column(col).unwrap_or_default().into_iter().fold(0.0, f64::max);
                rep.set(&format!("max_{col}"), m);
            }
            rep.measured = rep.metric("max_ratio_boundary").unwrap_or(f64::NAN);
            rep.verdict = Verdict::Diagnostic;
            Outcome { report: rep, diagnostics: vec![s], blow_up: None }
        }
        Job::L4 { grid, lambdas, center, samples } => {
            let bx = DirichletBox::new(grid)?;
            let s = frequency_localized_l4(&bx, &lambdas, L4Datum::Packet { center }, samples)?;
            let mut rep = VerificationReport::new(kind.name(), Manifest::current().tolerance("l4.ratio_spread")?);
            rep.grid = Some(grid);
            let spread = l4_ratio_spread(&s);
            rep.set("ratio_spread", spread);
            rep.measured = spread;
            rep.verdict = Verdict::Diagnostic;
            Outcome { report: rep, diagnostics: vec![s], blow_up: None }
        }
    })
}

/// Why a run did not produce an outcome.
#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Numerical(Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "invalid config: {e}"),
            RunError::Numerical(e) => write!(f, "{e}"),
        }
    }
}

/// Validates the whole config, then runs it.
pub fn run_config(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let job = plan(cfg).map_err(RunError::Config)?;
    let mut out = execute(cfg.kind, job).map_err(RunError::Numerical)?;
    out.report.experiment = cfg.kind.name().to_string();
    Ok(out)
}

/// Validation only.
pub fn check_config(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    plan(cfg).map(|_| ())
}

/// Numerical failures of the engines that end a run with exit code 3.
pub fn is_blow_up(e: &Error) -> bool {
    matches!(e, Error::BlowUp { .. } | Error::StepRejected { .. } | Error::SolverDiverged { .. })
}
