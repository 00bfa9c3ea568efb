//! Strang-split spectral evolution of `i u_t + Delta u = eps |u|^{p-1} u`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticSeries;
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid;
use crate::spectral::{self, dft_in_place, idft_normalized};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub epsilon: i8,
    pub p: f64,
    /// Step magnitude; the sign of `t_final` sets the direction of time.
    pub dt: f64,
    pub t_final: f64,
    pub sample_stride: usize,
}

impl EvolutionConfig {
    pub fn new(epsilon: i8, p: f64, dt: f64, t_final: f64, sample_stride: usize) -> Result<Self> {
        let cfg = Self { epsilon, p, dt, t_final, sample_stride };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn linear(dt: f64, t_final: f64, sample_stride: usize) -> Result<Self> {
        Self::new(0, 1.0, dt, t_final, sample_stride)
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.epsilon, -1..=1) {
            return Err(Error::Precondition(format!("epsilon must be -1, 0 or 1, got {}", self.epsilon)));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::Precondition(format!("p must be >= 1, got {}", self.p)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Precondition(format!("dt must be positive, got {}", self.dt)));
        }
        if self.sample_stride == 0 {
            return Err(Error::Precondition("sample_stride must be >= 1".into()));
        }
        let steps = self.t_final.abs() / self.dt;
        if !steps.is_finite() || (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
            return Err(Error::Precondition(format!(
                "t_final = {} is not a whole number of steps of {}",
                self.t_final, self.dt
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_final.abs() / self.dt).round() as usize
    }

    /// Signed step.
    pub fn signed_dt(&self) -> f64 {
        if self.t_final < 0.0 {
            -self.dt
        } else {
            self.dt
        }
    }

    /// Linear phase advanced per step at the Nyquist corner of `grid`.
    pub fn phase_per_step(&self, grid: &Grid) -> f64 {
        grid.max_phase_per_step(self.dt)
    }

    /// Step with `phase_per_step <= pi / 4` on `grid`, rounded down so that
    /// `t_final` is a whole number of steps.
    pub fn default_dt(grid: &Grid, t_final: f64) -> f64 {
        let cap = 0.25 * PI / grid.max_phase_per_step(1.0);
        let steps = (t_final.abs() / cap).ceil().max(1.0);
        t_final.abs() / steps
    }
}

/// `M = int |u|^2`.
pub fn mass(u: &ComplexField) -> f64 {
    u.mass()
}

/// `int |grad u|^2`, evaluated on the Fourier side.
pub fn kinetic(u: &ComplexField) -> f64 {
    let f = spectral::fourier_transform(u);
    let g = *u.grid();
    f.values()
        .iter()
        .enumerate()
        .map(|(idx, z)| {
            let r = 2.0 * PI * g.frequency_norm(idx);
            r * r * z.norm_sqr()
        })
        .sum::<f64>()
        * g.frequency_cell_volume()
}

/// `E = 1/2 int |grad u|^2 + eps / (p + 1) int |u|^{p+1}`.
pub fn energy(u: &ComplexField, epsilon: i8, p: f64) -> f64 {
    let potential = if epsilon == 0 {
        0.0
    } else {
        u.modulus_power(p + 1.0).iter().sum::<f64>() * u.grid().cell_volume()
    };
    0.5 * kinetic(u) + epsilon as f64 / (p + 1.0) * potential
}

/// Precomputed kinetic symbols for one `(grid, dt)` pair.
#[derive(Debug, Clone)]
pub struct StrangStepper {
    grid: Grid,
    cfg: EvolutionConfig,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    buf: Vec<Complex64>,
}

impl StrangStepper {
    pub fn new(grid: Grid, cfg: EvolutionConfig) -> Result<Self> {
        cfg.validate()?;
        let h = cfg.signed_dt();
        let sym = |tau: f64| -> Vec<Complex64> {
            (0..grid.len())
                .map(|idx| {
                    let r = grid.frequency_norm(idx);
                    Complex64::from_polar(1.0, -4.0 * PI * PI * tau * r * r)
                })
                .collect()
        };
        Ok(Self { grid, cfg, half: sym(0.5 * h), full: sym(h), buf: vec![Complex64::new(0.0, 0.0); grid.len()] })
    }

    fn kinetic(&mut self, which_full: bool) {
        let symbol = if which_full { &self.full } else { &self.half };
        dft_in_place(&self.grid, &mut self.buf, false);
        self.buf.iter_mut().zip(symbol).for_each(|(z, m)| *z *= m);
        idft_normalized(&self.grid, &mut self.buf);
    }

    fn potential(&mut self) {
        let c = -(self.cfg.epsilon as f64) * self.cfg.signed_dt();
        let q = 0.5 * (self.cfg.p - 1.0);
        for z in self.buf.iter_mut() {
            let a = z.norm_sqr().powf(q);
            *z *= Complex64::from_polar(1.0, c * a);
        }
    }

    /// One step in place; `t` is only used to label a blow-up.
    pub fn step(&mut self, u: &mut ComplexField, t: f64) -> Result<()> {
        self.buf.copy_from_slice(u.values());
        if self.cfg.epsilon == 0 {
            self.kinetic(true);
        } else {
            self.kinetic(false);
            self.potential();
            self.kinetic(false);
        }
        if self.buf.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::BlowUp { t: t + self.cfg.signed_dt() });
        }
        u.values_mut().copy_from_slice(&self.buf);
        Ok(())
    }
}

/// One Strang step: half kinetic, full potential, half kinetic.
pub fn step_strang(u: &ComplexField, cfg: &EvolutionConfig) -> Result<ComplexField> {
    let mut stepper = StrangStepper::new(*u.grid(), *cfg)?;
    let mut out = u.clone();
    stepper.step(&mut out, 0.0)?;
    Ok(out)
}

/// Drives the stepper, calling `visit(step_index, t, u)` at every sampled
/// step (index 0, every `sample_stride`-th, and the last).
pub fn evolve_with(
    u0: &ComplexField,
    cfg: &EvolutionConfig,
    mut visit: impl FnMut(usize, f64, &ComplexField),
) -> Result<ComplexField> {
    let mut stepper = StrangStepper::new(*u0.grid(), *cfg)?;
    let steps = cfg.steps();
    let h = cfg.signed_dt();
    let mut u = u0.clone();
    visit(0, 0.0, &u);
    for k in 1..=steps {
        stepper.step(&mut u, (k - 1) as f64 * h)?;
        if k % cfg.sample_stride == 0 || k == steps {
            visit(k, k as f64 * h, &u);
        }
    }
    Ok(u)
}

pub type ProbeFn = dyn Fn(f64, &ComplexField) -> f64 + Send + Sync;

/// A named scalar functional evaluated at every sample.
pub struct Probe {
    pub name: String,
    pub f: Box<ProbeFn>,
}

impl Probe {
    pub fn new(name: impl Into<String>, f: impl Fn(f64, &ComplexField) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), f: Box::new(f) }
    }

    pub fn mass() -> Self {
        Self::new("mass", |_, u| u.mass())
    }

    pub fn energy(epsilon: i8, p: f64) -> Self {
        Self::new("energy", move |_, u| energy(u, epsilon, p))
    }

    pub fn wrap_fraction() -> Self {
        Self::new("wrap_fraction", |_, u| u.wrap_fraction())
    }
}

impl std::fmt::Debug for Probe {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Probe({})", self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub config: EvolutionConfig,
    pub samples: Vec<(f64, ComplexField)>,
}

impl Trajectory {
    pub fn grid(&self) -> &Grid {
        self.samples[0].1.grid()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.0).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> &(f64, ComplexField) {
        self.samples.last().expect("trajectory has the initial sample")
    }

    /// Indices `k` whose neighbours `k - 1, k + 1` are equally spaced in time.
    pub fn interior_uniform(&self) -> Vec<usize> {
        (1..self.samples.len().saturating_sub(1))
            .filter(|&k| {
                let a = self.samples[k].0 - self.samples[k - 1].0;
                let b = self.samples[k + 1].0 - self.samples[k].0;
                (a - b).abs() <= 1e-9 * a.abs()
            })
            .collect()
    }

    /// Writes `sample_NNNNN.bin` records and an `index.txt` with one line per
    /// sample: `t filename probe...`.
    pub fn export(&self, dir: &Path, series: Option<&DiagnosticSeries>) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut index = String::from("# t file");
        if let Some(s) = series {
            for c in &s.columns {
                index.push(' ');
                index.push_str(c);
            }
        }
        index.push('\n');
        for (k, (t, u)) in self.samples.iter().enumerate() {
            let name = format!("sample_{k:05}.bin");
            let mut meta = BTreeMap::new();
            meta.insert("t".to_string(), format!("{t:e}"));
            meta.insert("epsilon".to_string(), self.config.epsilon.to_string());
            meta.insert("p".to_string(), self.config.p.to_string());
            u.write_record(&dir.join(&name), &meta)?;
            index.push_str(&format!("{t:.17e} {name}"));
            if let Some(row) = series.and_then(|s| s.rows.get(k)) {
                for v in &row.1 {
                    index.push_str(&format!(" {v:.17e}"));
                }
            }
            index.push('\n');
        }
        fs::write(dir.join("index.txt"), index)?;
        Ok(())
    }
}

#[derive(Debug)]
pub struct Evolution {
    pub trajectory: Trajectory,
    pub series: DiagnosticSeries,
    /// Time at which a non-finite state appeared; the trajectory stops before it.
    pub blow_up: Option<f64>,
}

/// Samples the run every `sample_stride` steps and evaluates `probes` there.
pub fn evolve(u0: &ComplexField, cfg: &EvolutionConfig, probes: &[Probe]) -> Result<Evolution> {
    let names: Vec<&str> = probes.iter().map(|p| p.name.as_str()).collect();
    let mut series = DiagnosticSeries::new("probes", &names);
    series.annotate("epsilon", cfg.epsilon);
    series.annotate("p", cfg.p);
    series.annotate("dt", cfg.dt);
    series.annotate("phase_per_step", cfg.phase_per_step(u0.grid()));
    let mut samples = Vec::new();
    let res = evolve_with(u0, cfg, |_, t, u| {
        series.push(t, probes.iter().map(|p| (p.f)(t, u)).collect());
        samples.push((t, u.clone()));
    });
    let blow_up = match res {
        Ok(_) => None,
        Err(Error::BlowUp { t }) => Some(t),
        Err(e) => return Err(e),
    };
    Ok(Evolution { trajectory: Trajectory { config: *cfg, samples }, series, blow_up })
}

/// Whole-space free solution from `exp(-pi |x - x0|^2 / sigma^2) e^{2 pi i x.xi0}`
/// at one point.
pub fn free_gaussian_point(x: [f64; 2], dim: usize, x0: [f64; 2], xi0: [f64; 2], sigma: f64, t: f64) -> Complex64 {
    let a = Complex64::new(sigma * sigma, 4.0 * PI * t);
    let mut out = Complex64::new(1.0, 0.0);
    for ax in 0..dim {
        let y = x[ax] - x0[ax] - 4.0 * PI * xi0[ax] * t;
        let phase = 2.0 * PI * xi0[ax] * x[ax] - 4.0 * PI * PI * xi0[ax] * xi0[ax] * t;
        out *= (sigma / a.sqrt()) * (-(PI * y * y) / a).exp() * Complex64::from_polar(1.0, phase);
    }
    out
}

/// Exact free evolution of a Gaussian datum on the periodic box: the sum of
/// periodic images of the whole-space solution. Requires `xi0` on the
/// lattice whenever image contributions are not negligible.
pub fn free_gaussian_exact(grid: &Grid, x0: [f64; 2], xi0: [f64; 2], sigma: f64, t: f64) -> Result<ComplexField> {
    if !(sigma > 0.0) {
        return Err(Error::Precondition(format!("sigma must be positive, got {sigma}")));
    }
    let period = 2.0 * grid.half_length();
    let a = Complex64::new(sigma * sigma, 4.0 * PI * t);
    // |exp(-pi y^2 / a)| = exp(-pi y^2 sigma^2 / |a|^2); images with decay below 1e-20 are dropped
    let width = a.norm() / sigma;
    let reach = width * (20.0 * 10f64.ln() / PI).sqrt();
    let m_max = (reach / period).ceil() as i64 + 1;
    let dim = grid.dim();
    Ok(ComplexField::from_fn(*grid, |x| {
        let mut acc = Complex64::new(0.0, 0.0);
        match dim {
            1 => {
                for m in -m_max..=m_max {
                    acc += free_gaussian_point([x[0] + m as f64 * period, 0.0], 1, x0, xi0, sigma, t);
                }
            }
            _ => {
                for m in -m_max..=m_max {
                    for n in -m_max..=m_max {
                        let y = [x[0] + m as f64 * period, x[1] + n as f64 * period];
                        acc += free_gaussian_point(y, 2, x0, xi0, sigma, t);
                    }
                }
            }
        }
        acc
    }))
}

/// The densities of the local conservation laws at one instant.
#[derive(Debug, Clone)]
pub struct LocalDensities {
    /// `N = |u|^2`.
    pub n: Vec<f64>,
    /// `J = 2 Im(conj(u) grad u)`, one array per axis.
    pub j: Vec<Vec<f64>>,
    /// 1D only: `T = 4 |u'|^2 - N'' + eps (2 - 4 / (p + 1)) N^{(p+1)/2}`.
    pub t: Option<Vec<f64>>,
}

pub fn local_conservation(u: &ComplexField, epsilon: i8, p: f64) -> LocalDensities {
    let grid = *u.grid();
    let n = u.density();
    let grads = spectral::gradient(u);
    let j: Vec<Vec<f64>> = grads
        .iter()
        .map(|g| u.values().iter().zip(g.values()).map(|(a, b)| 2.0 * (a.conj() * b).im).collect())
        .collect();
    let t = (grid.dim() == 1).then(|| {
        let nxx = spectral::partial_real(&grid, &spectral::partial_real(&grid, &n, 0), 0);
        let c = epsilon as f64 * (2.0 - 4.0 / (p + 1.0));
        (0..grid.len())
            .map(|k| 4.0 * grads[0].values()[k].norm_sqr() - nxx[k] + c * n[k].powf(0.5 * (p + 1.0)))
            .collect()
    });
    LocalDensities { n, j, t }
}

/// `L^2` norms of `r1 = N_t + div J` and (1D) `r2 = J_t + T_x` at sample `k`,
/// with central differences over samples `k - 1, k + 1`.
pub fn conservation_residuals(traj: &Trajectory, k: usize) -> Result<(f64, Option<f64>)> {
    if k == 0 || k + 1 >= traj.len() {
        return Err(Error::Precondition(format!("sample {k} has no two neighbours")));
    }
    let cfg = traj.config;
    let grid = *traj.grid();
    let (t0, u0) = &traj.samples[k - 1];
    let (t2, u2) = &traj.samples[k + 1];
    let h = t2 - t0;
    let a = local_conservation(u0, cfg.epsilon, cfg.p);
    let b = local_conservation(&traj.samples[k].1, cfg.epsilon, cfg.p);
    let c = local_conservation(u2, cfg.epsilon, cfg.p);
    let mut div = vec![0.0; grid.len()];
    for (axis, jx) in b.j.iter().enumerate() {
        let d = spectral::partial_real(&grid, jx, axis);
        div.iter_mut().zip(d).for_each(|(s, v)| *s += v);
    }
    let l2 = |r: &[f64]| (r.iter().map(|x| x * x).sum::<f64>() * grid.cell_volume()).sqrt();
    let r1: Vec<f64> = (0..grid.len()).map(|i| (c.n[i] - a.n[i]) / h + div[i]).collect();
    let r2 = b.t.as_ref().map(|tt| {
        let tx = spectral::partial_real(&grid, tt, 0);
        let r: Vec<f64> = (0..grid.len()).map(|i| (c.j[0][i] - a.j[0][i]) / h + tx[i]).collect();
        l2(&r)
    });
    Ok((l2(&r1), r2))
}

/// Exact linear flow `e^{it Delta}` from a fixed datum, evaluated at any time
/// with one inverse transform.
#[derive(Debug, Clone)]
pub struct FreePropagator {
    grid: Grid,
    spectrum: Vec<Complex64>,
    quadratic: Vec<f64>,
}

impl FreePropagator {
    pub fn new(u0: &ComplexField) -> Self {
        let grid = *u0.grid();
        let mut spectrum = u0.values().to_vec();
        dft_in_place(&grid, &mut spectrum, false);
        let quadratic = (0..grid.len())
            .map(|idx| {
                let r = grid.frequency_norm(idx);
                4.0 * PI * PI * r * r
            })
            .collect();
        Self { grid, spectrum, quadratic }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn at(&self, t: f64) -> ComplexField {
        let mut data: Vec<Complex64> = self
            .spectrum
            .iter()
            .zip(&self.quadratic)
            .map(|(z, q)| z * Complex64::from_polar(1.0, -q * t))
            .collect();
        idft_normalized(&self.grid, &mut data);
        ComplexField::from_values(self.grid, data).expect("length preserved")
    }
}

pub fn free_propagate(u: &ComplexField, t: f64) -> ComplexField {
    FreePropagator::new(u).at(t)
}


#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: Grid, sigma: f64) -> ComplexField {
        ComplexField::from_real(grid, |x| (-PI * (x[0] * x[0] + x[1] * x[1]) / (sigma * sigma)).exp())
    }

    #[test]
    fn zero_and_plane_wave_invariants() {
        let g = Grid::new(1, 64, 2.0).unwrap();
        let z = ComplexField::zeros(g);
        assert_eq!(mass(&z), 0.0);
        assert_eq!(energy(&z, 1, 3.0), 0.0);
        let amp = 0.7;
        let xi0 = 3.0 * g.dxi();
        let w = ComplexField::from_fn(g, |x| Complex64::from_polar(amp, 2.0 * PI * xi0 * x[0]));
        let v = g.volume();
        assert!((mass(&w) - amp * amp * v).abs() < 1e-12);
        let e = 0.5 * amp * amp * v * (2.0 * PI * xi0).powi(2);
        assert!((energy(&w, 0, 3.0) - e).abs() < 1e-10 * e);
    }

    #[test]
    fn gaussian_mass() {
        let g = Grid::new(1, 256, 8.0).unwrap();
        assert!((mass(&gaussian(g, 1.0)) - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn free_propagator_round_trip() {
        let g = Grid::new(1, 128, 8.0).unwrap();
        let u = free_gaussian_exact(&g, [0.5, 0.0], [0.25, 0.0], 1.0, 0.0).unwrap();
        let prop = FreePropagator::new(&u);
        let exact = free_gaussian_exact(&g, [0.5, 0.0], [0.25, 0.0], 1.0, 0.3).unwrap();
        assert!(prop.at(0.3).max_abs_diff(&exact) < 1e-10);
        assert!(free_propagate(&prop.at(0.3), -0.3).max_abs_diff(&u) < 1e-12);
    }

    #[test]
    fn linear_step_is_exact_propagator() {
        let g = Grid::new(1, 256, 12.0).unwrap();
        let u0 = gaussian(g, 1.0);
        let cfg = EvolutionConfig::linear(0.05, 0.05, 1).unwrap();
        let u1 = step_strang(&u0, &cfg).unwrap();
        let oracle = free_gaussian_exact(&g, [0.0; 2], [0.0; 2], 1.0, 0.05).unwrap();
        assert!(u1.max_abs_diff(&oracle) < 1e-12);
    }

    #[test]
    fn nonlinear_step_preserves_mass() {
        let g = Grid::new(1, 256, 8.0).unwrap();
        let u0 = gaussian(g, 1.0).scaled(Complex64::new(2.0, 0.0));
        let cfg = EvolutionConfig::new(1, 3.0, 1e-3, 1e-3, 1).unwrap();
        let u1 = step_strang(&u0, &cfg).unwrap();
        assert!((u1.mass() - u0.mass()).abs() / u0.mass() < 1e-12);
    }

    #[test]
    fn zero_time_trajectory() {
        let g = Grid::new(1, 32, 4.0).unwrap();
        let u0 = gaussian(g, 1.0);
        let ev = evolve(&u0, &EvolutionConfig::linear(0.1, 0.0, 1).unwrap(), &[Probe::mass()]).unwrap();
        assert_eq!(ev.trajectory.len(), 1);
        assert_eq!(ev.trajectory.samples[0].1, u0);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(EvolutionConfig::new(2, 3.0, 0.1, 1.0, 1).is_err());
        assert!(EvolutionConfig::new(1, 0.5, 0.1, 1.0, 1).is_err());
        assert!(EvolutionConfig::new(1, 3.0, 0.3, 1.0, 1).is_err());
        assert!(EvolutionConfig::new(1, 3.0, 0.1, 1.0, 0).is_err());
    }

    #[test]
    fn default_dt_caps_phase() {
        let g = Grid::new(1, 512, 16.0).unwrap();
        let dt = EvolutionConfig::default_dt(&g, 1.0);
        assert!(g.max_phase_per_step(dt) <= 0.25 * PI + 1e-12);
        assert!(EvolutionConfig::linear(dt, 1.0, 1).is_ok());
    }

    #[test]
    fn plane_wave_local_conservation() {
        let g = Grid::new(1, 64, 2.0).unwrap();
        let xi0 = 2.0 * g.dxi();
        let w = ComplexField::from_fn(g, |x| Complex64::from_polar(1.3, 2.0 * PI * xi0 * x[0]));
        let d = local_conservation(&w, 0, 3.0);
        assert!(d.n.iter().all(|n| (n - 1.69).abs() < 1e-12));
        let j0 = 2.0 * 1.69 * 2.0 * PI * xi0;
        assert!(d.j[0].iter().all(|j| (j - j0).abs() < 1e-10));
        let cfg = EvolutionConfig::linear(0.01, 0.02, 1).unwrap();
        let ev = evolve(&w, &cfg, &[]).unwrap();
        let (r1, _) = conservation_residuals(&ev.trajectory, 1).unwrap();
        assert!(r1 < 1e-9);
    }

    #[test]
    fn blow_up_is_reported_with_partial_trajectory() {
        let g = Grid::new(1, 16, 1.0).unwrap();
        let mut u0 = gaussian(g, 0.5);
        u0.values_mut()[3] = Complex64::new(f64::NAN, 0.0);
        let cfg = EvolutionConfig::new(-1, 3.0, 0.01, 0.05, 1).unwrap();
        let ev = evolve(&u0, &cfg, &[Probe::mass()]).unwrap();
        assert_eq!(ev.blow_up, Some(0.01));
        assert_eq!(ev.trajectory.len(), 1);
    }
}
