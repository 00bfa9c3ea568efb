//! Measured-constant studies on domains: the Dirichlet box spectrum, the
//! frequency-localised space-time `L^4`-type bound, trace control, and the
//! obstacle-free comparison of the CN and spectral engines.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::boundary;
use super::cn::evolve_domain;
use super::geometry::{DomainGrid, GeometrySpec, OuterBoundary};
use crate::diagnostics::DiagnosticSeries;
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid;
use crate::manifest::Manifest;
use crate::nls::{self, EvolutionConfig, Trajectory};
use crate::spectral;
use crate::verify::{fit_order, simpson, ConvergenceRow, Verdict, VerificationReport};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Walled box `[-L, L]^d` with its exact discrete Dirichlet spectrum. Modes
/// are `sin(k pi i / N)` per axis, `k = 1..N-1`, on cell index `i`.
#[derive(Clone)]
pub struct DirichletBox {
    domain: DomainGrid,
    fft: Arc<dyn Fft<f64>>,
    /// `mu_k = (4 / dx^2) sin^2(k pi / 2N)`, indexed by `k` (entry 0 unused).
    axis_eigenvalues: Vec<f64>,
}

impl std::fmt::Debug for DirichletBox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirichletBox").field("grid", self.domain.base()).finish()
    }
}

impl DirichletBox {
    pub fn new(base: Grid) -> Result<Self> {
        let domain = DomainGrid::new(base, GeometrySpec::free(OuterBoundary::Dirichlet))?;
        let n = base.n();
        let dx = base.dx();
        let axis_eigenvalues = (0..n).map(|k| 4.0 / (dx * dx) * (k as f64 * PI / (2.0 * n as f64)).sin().powi(2)).collect();
        let fft = FftPlanner::new().plan_fft_forward(2 * n);
        Ok(Self { domain, fft, axis_eigenvalues })
    }

    pub fn domain(&self) -> &DomainGrid {
        &self.domain
    }

    pub fn grid(&self) -> &Grid {
        self.domain.base()
    }

    /// Eigenvalue of `-L` for the mode `k` (second index ignored in 1D).
    pub fn eigenvalue(&self, k: [usize; 2]) -> f64 {
        let g = self.grid();
        (0..g.dim()).map(|a| self.axis_eigenvalues[k[a]]).sum()
    }

    /// All mode indices, flattened like the grid.
    fn modes(&self) -> Vec<[usize; 2]> {
        let g = self.grid();
        (0..g.len()).map(|idx| g.unflatten(idx)).collect()
    }

    fn norm_factor(&self) -> f64 {
        // sum_i sin^2(k pi i / N) dx = L for every k
        self.grid().half_length().powf(-0.5 * self.grid().dim() as f64)
    }

    /// `L^2`-normalised eigenmode; zero on the walls.
    pub fn mode(&self, k: [usize; 2]) -> Result<ComplexField> {
        let g = *self.grid();
        let n = g.n();
        if (0..g.dim()).any(|a| k[a] == 0 || k[a] >= n) {
            return Err(Error::Precondition(format!("mode index {k:?} outside 1..{n}")));
        }
        let c = self.norm_factor();
        Ok(ComplexField::from_fn(g, |x| {
            let mut v = c;
            for a in 0..g.dim() {
                let i = ((x[a] + g.half_length()) / g.dx()).round();
                v *= (k[a] as f64 * PI * i / n as f64).sin();
            }
            Complex64::new(v, 0.0)
        }))
    }

    /// In-place `y_k = sum_i x_i sin(k pi i / N)` on each line along `axis`.
    fn sine_transform(&self, data: &mut [Complex64], axis: usize) {
        let g = self.grid();
        let n = g.n();
        let lines: Vec<Vec<usize>> = if g.dim() == 1 {
            vec![(0..n).collect()]
        } else if axis == 0 {
            (0..n).map(|j| (0..n).map(|i| g.flatten(i, j)).collect()).collect()
        } else {
            (0..n).map(|i| (0..n).map(|j| g.flatten(i, j)).collect()).collect()
        };
        let out: Vec<Vec<Complex64>> = lines
            .par_iter()
            .map(|line| {
                // odd extension of length 2N; the FFT gives -2i times the sine sum
                let mut buf = vec![ZERO; 2 * n];
                for i in 1..n {
                    buf[i] = data[line[i]];
                    buf[2 * n - i] = -data[line[i]];
                }
                self.fft.process(&mut buf);
                (0..n).map(|k| if k == 0 { ZERO } else { buf[k] * Complex64::new(0.0, 0.5) }).collect()
            })
            .collect();
        for (line, vals) in lines.iter().zip(out) {
            for (&idx, v) in line.iter().zip(vals) {
                data[idx] = v;
            }
        }
    }

    /// Expansion coefficients `a_k = <u, phi_k>`, flattened like the grid.
    pub fn coefficients(&self, u: &ComplexField) -> Result<Vec<Complex64>> {
        if u.grid() != self.grid() {
            return Err(Error::GridMismatch);
        }
        let mut d = self.domain.pinned(u).into_values();
        for a in 0..self.grid().dim() {
            self.sine_transform(&mut d, a);
        }
        let c = self.norm_factor() * self.grid().cell_volume();
        for z in &mut d {
            *z *= c;
        }
        Ok(d)
    }

    pub fn synthesize(&self, coeffs: &[Complex64]) -> ComplexField {
        let mut d = coeffs.to_vec();
        for a in 0..self.grid().dim() {
            self.sine_transform(&mut d, a);
        }
        let c = self.norm_factor();
        for z in &mut d {
            *z *= c;
        }
        let mut u = ComplexField::from_values(*self.grid(), d).expect("grid length");
        self.domain.pin(&mut u);
        u
    }

    /// Exact discrete free evolution `sum a_k e^{-i mu_k t} phi_k`.
    pub fn evolve(&self, coeffs: &[Complex64], t: f64) -> ComplexField {
        let rot: Vec<Complex64> =
            self.modes().iter().zip(coeffs).map(|(k, a)| a * Complex64::from_polar(1.0, -self.eigenvalue(*k) * t)).collect();
        self.synthesize(&rot)
    }

    /// `|| u ||^2_{H_0^s} = sum mu_k^s |a_k|^2` on the discrete spectrum.
    pub fn dirichlet_sobolev_sq(&self, coeffs: &[Complex64], s: f64) -> f64 {
        self.modes()
            .iter()
            .zip(coeffs)
            .filter(|(k, _)| (0..self.grid().dim()).all(|a| k[a] != 0))
            .map(|(k, a)| self.eigenvalue(*k).powf(s) * a.norm_sqr())
            .sum()
    }

    /// Coefficients of the projection of `u` onto modes with
    /// `lo <= sqrt(mu) < hi`.
    pub fn band_project(&self, u: &ComplexField, lo: f64, hi: f64) -> Result<Vec<Complex64>> {
        let mut c = self.coefficients(u)?;
        for (k, a) in self.modes().iter().zip(c.iter_mut()) {
            let s = self.eigenvalue(*k).sqrt();
            if !(lo..hi).contains(&s) || (0..self.grid().dim()).any(|d| k[d] == 0) {
                *a = ZERO;
            }
        }
        Ok(c)
    }
}

/// `|| |grad|^{1/2} f ||^2` of a density on the box, extended by zero to the
/// doubled box and differentiated there.
pub fn zero_padded_half_derivative_sq(grid: &Grid, f: &[f64]) -> f64 {
    let n = grid.n();
    let big = Grid::new(grid.dim(), 2 * n, 2.0 * grid.half_length()).expect("doubled grid");
    let off = n / 2;
    let mut padded = vec![0.0; big.len()];
    for (idx, &v) in f.iter().enumerate() {
        let [i, j] = grid.unflatten(idx);
        let t = if grid.dim() == 1 { big.flatten(i + off, 0) } else { big.flatten(i + off, j + off) };
        padded[t] = v;
    }
    spectral::homogeneous_sobolev_sq_real(&big, &padded, 0.5)
}

/// Initial data for [`frequency_localized_l4`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum L4Datum {
    /// Band projection onto `lambda <= sqrt(mu) < 2 lambda` of the Gaussian
    /// `exp(-pi |x - center|^2 lambda^2 / pi^2)`, normalised in `L^2`.
    Packet { center: [f64; 2] },
    /// A single normalised eigenmode; the density is stationary.
    Mode([usize; 2]),
    Zero,
}

/// For each `lambda`, `LHS = (int_0^1 || |grad|^{1/2} |u|^2 ||^2 dt)^{1/2}`
/// over `ceil(lambda)` windows of length `<= 1/lambda`, and
/// `RHS = || u0 ||^2_{H_0^{1/2}}`. The ratio's spread across `lambda` is
/// the quantity of interest.
pub fn frequency_localized_l4(
    bx: &DirichletBox,
    lambdas: &[f64],
    datum: L4Datum,
    samples_per_window: usize,
) -> Result<DiagnosticSeries> {
    let g = *bx.grid();
    let mut series = DiagnosticSeries::new("l4", &["lhs", "rhs", "ratio", "windows", "samples", "max_phase_per_sample"]);
    series.annotate("abscissa", "lambda");
    series.annotate("datum", format!("{datum:?}"));
    for &lam in lambdas {
        let coeffs = match datum {
            L4Datum::Packet { center } => {
                let sigma = PI / lam;
                let bump = crate::data::gaussian(&g, center, [0.0; 2], sigma, 1.0);
                let mut c = bx.band_project(&bump, lam, 2.0 * lam)?;
                let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return Err(Error::Precondition(format!("no Dirichlet mode in [{lam}, {})", 2.0 * lam)));
                }
                c.iter_mut().for_each(|z| *z /= norm);
                c
            }
            L4Datum::Mode(k) => bx.coefficients(&bx.mode(k)?)?,
            L4Datum::Zero => vec![ZERO; g.len()],
        };
        let rhs = bx.dirichlet_sobolev_sq(&coeffs, 0.5);
        let windows = lam.ceil().max(1.0) as usize;
        let samples = 2 * ((windows * samples_per_window.max(2)) / 2) + 1;
        let times: Vec<f64> = (0..samples).map(|k| k as f64 / (samples - 1) as f64).collect();
        let vals: Vec<f64> = times
            .par_iter()
            .map(|&t| {
                let u = bx.evolve(&coeffs, t);
                zero_padded_half_derivative_sq(&g, &u.density())
            })
            .collect();
        let lhs = simpson(&vals, 1.0 / (samples - 1) as f64).max(0.0).sqrt();
        // the density oscillates at differences of occupied eigenvalues
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (idx, a) in coeffs.iter().enumerate() {
            if a.norm_sqr() > 1e-14 {
                let mu = bx.eigenvalue(g.unflatten(idx));
                lo = lo.min(mu);
                hi = hi.max(mu);
            }
        }
        let spread = if hi > 0.0 { hi - lo } else { 0.0 };
        let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
        series.push(lam, vec![lhs, rhs, ratio, windows as f64, samples as f64, spread / (samples - 1) as f64]);
    }
    Ok(series)
}

/// `max ratio / min ratio` over the sweep.
pub fn l4_ratio_spread(series: &DiagnosticSeries) -> f64 {
    let r = series.column("ratio").unwrap_or_default();
    let max = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = r.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

/// Running space-time integrals along a trajectory, every sample time
/// serving as a horizon `T`: `int_0^T int_dOmega |d_n u|^2`,
/// `int_0^T int_K (|grad u|^2 + |u|^2)` with `K = [x0, x1] x [y0, y1]`,
/// `sup_t || u ||^2_{H^{1/2}}`, and their ratios to
/// `sup_t || u ||^2_{H^{1/2}} + || u0 ||^2_{L^2}`.
pub fn trace_control_measurement(dom: &DomainGrid, traj: &Trajectory, window: [f64; 4]) -> Result<DiagnosticSeries> {
    let g = *dom.base();
    if traj.grid() != &g {
        return Err(Error::GridMismatch);
    }
    let mut series = DiagnosticSeries::new(
        "trace_control",
        &["boundary_integral", "local_energy", "sup_h_half", "mass0", "ratio_boundary", "ratio_local"],
    );
    series.annotate("window", format!("{window:?}"));
    series.annotate("epsilon", traj.config.epsilon);
    let per: Vec<(f64, f64, f64)> = traj
        .samples
        .par_iter()
        .map(|(_, u)| {
            let flux = boundary::boundary_flux(dom, u)?;
            let grad = boundary::gradient(dom, u)?;
            let mut loc = 0.0;
            for idx in 0..g.len() {
                let x = g.point(idx);
                let inside = x[0] >= window[0] && x[0] <= window[1] && (g.dim() == 1 || (x[1] >= window[2] && x[1] <= window[3]));
                if inside && dom.is_active(idx) {
                    loc += u.values()[idx].norm_sqr() + grad.iter().map(|d| d.values()[idx].norm_sqr()).sum::<f64>();
                }
            }
            Ok((flux, loc * g.cell_volume(), spectral::homogeneous_sobolev_sq(u, 0.5)))
        })
        .collect::<Result<_>>()?;
    let mass0 = traj.samples[0].1.mass();
    let (mut bi, mut li, mut sup) = (0.0, 0.0, 0.0f64);
    for k in 0..per.len() {
        if k > 0 {
            let dt = traj.samples[k].0 - traj.samples[k - 1].0;
            bi += 0.5 * dt.abs() * (per[k].0 + per[k - 1].0);
            li += 0.5 * dt.abs() * (per[k].1 + per[k - 1].1);
        }
        sup = sup.max(per[k].2);
        let denom = sup + mass0;
        let (rb, rl) = if denom > 0.0 { (bi / denom, li / denom) } else { (0.0, 0.0) };
        series.push(traj.samples[k].0, vec![bi, li, sup, mass0, rb, rl]);
    }
    Ok(series)
}

/// One level of the engine comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossEngineLevel {
    pub n: usize,
    pub dt: f64,
}

/// Parameters of [`cross_engine_oracle`]. The spectral reference runs with
/// `dt / reference_substeps` (exact propagator when `epsilon = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossEngineParams {
    pub dim: usize,
    pub half_length: f64,
    pub center: [f64; 2],
    pub xi0: [f64; 2],
    pub sigma: f64,
    pub amplitude: f64,
    pub epsilon: i8,
    pub p: f64,
    pub t_final: f64,
    pub levels: Vec<CrossEngineLevel>,
    pub reference_substeps: usize,
}

impl Default for CrossEngineParams {
    fn default() -> Self {
        Self {
            dim: 2,
            half_length: 4.0,
            center: [-0.3, 0.2],
            xi0: [0.2, -0.1],
            sigma: 1.2,
            amplitude: 1.0,
            epsilon: 1,
            p: 3.0,
            t_final: 0.2,
            levels: vec![
                CrossEngineLevel { n: 32, dt: 0.005 },
                CrossEngineLevel { n: 64, dt: 0.0025 },
                CrossEngineLevel { n: 128, dt: 0.00125 },
            ],
            reference_substeps: 4,
        }
    }
}

/// Obstacle-free periodic CN against the Strang spectral engine from the
/// same datum: sup-norm difference at `t_final` per level and the fitted
/// order in `dx`. PASS iff the order reaches `cross_engine.min_order`.
pub fn cross_engine_oracle(params: &CrossEngineParams) -> Result<VerificationReport> {
    let start = Instant::now();
    let tol = Manifest::current().tolerance("cross_engine.min_order")?;
    if params.levels.len() < 2 {
        return Err(Error::Precondition("cross-engine study needs at least two levels".into()));
    }
    let mut rep = VerificationReport::new("cross-engine", tol);
    let rows: Vec<(f64, f64)> = params
        .levels
        .par_iter()
        .map(|lv| {
            let g = Grid::new(params.dim, lv.n, params.half_length)?;
            let dom = DomainGrid::new(g, GeometrySpec::free(OuterBoundary::Periodic))?;
            let u0 = crate::data::gaussian(&g, params.center, params.xi0, params.sigma, params.amplitude);
            let cfg = EvolutionConfig::new(params.epsilon, params.p, lv.dt, params.t_final, usize::MAX)?;
            let cn = evolve_domain(&dom, &u0, &cfg)?.last().1.clone();
            let reference = if params.epsilon == 0 {
                nls::free_propagate(&u0, params.t_final)
            } else {
                let sub = lv.dt / params.reference_substeps.max(1) as f64;
                let rcfg = EvolutionConfig::new(params.epsilon, params.p, sub, params.t_final, usize::MAX)?;
                nls::evolve_with(&u0, &rcfg, |_, _, _| {})?
            };
            Ok((g.dx(), cn.max_abs_diff(&reference)))
        })
        .collect::<Result<_>>()?;
    rep.convergence = rows
        .iter()
        .zip(&params.levels)
        .map(|(&(dx, e), lv)| ConvergenceRow {
            label: format!("N={} dt={:e}", lv.n, lv.dt),
            resolution: dx,
            residual: e,
            verdict: Verdict::Diagnostic,
        })
        .collect();
    rep.observed_order = fit_order(&rows);
    let q = rep.observed_order.unwrap_or(f64::NAN);
    rep.measured = q;
    rep.set("observed_order", q);
    for w in rows.windows(2) {
        rep.set(&format!("ratio_dx{:e}", w[1].0), w[0].1 / w[1].1);
    }
    rep.set("finest_sup_difference", rows.last().map_or(f64::NAN, |r| r.1));
    rep.grid = Some(Grid::new(params.dim, params.levels.last().map_or(32, |l| l.n), params.half_length)?);
    rep.config = serde_json::json!({
        "dim": params.dim, "half_length": params.half_length, "center": params.center, "xi0": params.xi0,
        "sigma": params.sigma, "amplitude": params.amplitude, "epsilon": params.epsilon, "p": params.p,
        "t_final": params.t_final, "reference_substeps": params.reference_substeps,
        "levels": params.levels.iter().map(|l| [l.n as f64, l.dt]).collect::<Vec<_>>(),
    });
    rep.verdict = if q >= tol { Verdict::Pass } else { Verdict::Fail };
    Ok(rep.finish(start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::cn::step_crank_nicolson;

    #[test]
    fn sine_mode_rotates_with_its_eigenvalue() {
        let bx = DirichletBox::new(Grid::new(1, 64, 1.0).unwrap()).unwrap();
        let k = [3, 0];
        let phi = bx.mode(k).unwrap();
        assert!((phi.mass() - 1.0).abs() < 1e-12);
        let mu = bx.eigenvalue(k);
        let mut errs = Vec::new();
        for dt in [2e-3, 1e-3] {
            let t = 0.2;
            let cfg = EvolutionConfig::linear(dt, t, 1).unwrap();
            let traj = evolve_domain(bx.domain(), &phi, &cfg).unwrap();
            let exact = phi.scaled(Complex64::from_polar(1.0, -mu * t));
            errs.push(traj.last().1.max_abs_diff(&exact));
        }
        let ratio = errs[0] / errs[1];
        assert!((ratio - 4.0).abs() < 0.2, "{errs:?}");
        let one = step_crank_nicolson(bx.domain(), &phi, &EvolutionConfig::linear(1e-3, 1e-3, 1).unwrap()).unwrap();
        let z = Complex64::new(1.0, -0.5e-3 * mu) / Complex64::new(1.0, 0.5e-3 * mu);
        assert!(one.max_abs_diff(&phi.scaled(z)) < 1e-12);
    }

    #[test]
    fn sine_transform_round_trips() {
        let g = Grid::new(2, 32, 2.0).unwrap();
        let bx = DirichletBox::new(g).unwrap();
        let u = bx.domain().pinned(&crate::data::gaussian(&g, [0.3, -0.2], [0.5, 0.1], 0.7, 1.0));
        let c = bx.coefficients(&u).unwrap();
        assert!(bx.synthesize(&c).max_abs_diff(&u) < 1e-12);
        let parseval: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        assert!((parseval - u.mass()).abs() < 1e-12 * u.mass());
        let m = bx.mode([2, 5]).unwrap();
        let cm = bx.coefficients(&m).unwrap();
        assert!((cm[g.flatten(2, 5)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_mode_density_is_stationary() {
        let bx = DirichletBox::new(Grid::new(2, 32, 2.0).unwrap()).unwrap();
        let s = frequency_localized_l4(&bx, &[3.0], L4Datum::Mode([3, 2]), 4).unwrap();
        let u = bx.mode([3, 2]).unwrap();
        let direct = zero_padded_half_derivative_sq(bx.grid(), &u.density()).sqrt();
        let lhs = s.column("lhs").unwrap()[0];
        assert!((lhs - direct).abs() < 1e-10 * direct);
        let z = frequency_localized_l4(&bx, &[3.0], L4Datum::Zero, 4).unwrap();
        assert_eq!(z.column("lhs").unwrap()[0], 0.0);
    }

    #[test]
    fn obstacle_free_domain_has_no_flux() {
        let g = Grid::new(2, 32, 4.0).unwrap();
        let dom = DomainGrid::new(g, GeometrySpec::free(OuterBoundary::Periodic)).unwrap();
        let u0 = crate::data::gaussian(&g, [0.0, 0.0], [0.3, 0.0], 1.0, 1.0);
        let traj = evolve_domain(&dom, &u0, &EvolutionConfig::linear(0.01, 0.1, 2).unwrap()).unwrap();
        let s = trace_control_measurement(&dom, &traj, [-1.0, 1.0, -1.0, 1.0]).unwrap();
        assert!(s.column("boundary_integral").unwrap().iter().all(|v| *v == 0.0));
        assert!(s.column("local_energy").unwrap().last().unwrap() > &0.0);
    }
}
