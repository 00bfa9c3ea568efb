//! Crank-Nicolson stepping on the masked 5-point (3-point in 1D) Dirichlet
//! Laplacian. Excluded cells hold zero and are never written; an excluded
//! neighbour enters through its ghost value, the linear extrapolation from
//! the cell through the boundary zero. That closure only changes diagonal
//! entries, so the operator stays real symmetric.
//!
//! `(I - i dt/2 L) u' = (I + i dt/2 L) u - i dt eps N((u + u')/2)` with
//! `N(w) = |w|^{p-1} w`. The midpoint nonlinearity keeps the discrete mass
//! exactly conserved up to solver tolerance.

use num_complex::Complex64;

use super::geometry::DomainGrid;
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::nls::{EvolutionConfig, Trajectory};

pub const FIXED_POINT_MAX_ITERATIONS: usize = 5;
pub const FIXED_POINT_TOLERANCE: f64 = 1e-12;
/// Relative residual at which the linear solve stops.
pub const SOLVER_TOLERANCE: f64 = 1e-14;
pub const SOLVER_MAX_ITERATIONS: usize = 2000;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Masked Laplacian with homogeneous Dirichlet data on the boundary.
/// Inactive entries of `out` are set to zero.
pub fn masked_laplacian(dom: &DomainGrid, u: &[Complex64], out: &mut [Complex64]) {
    let g = dom.base();
    let dim = g.dim();
    let inv = 1.0 / (g.dx() * g.dx());
    for idx in 0..u.len() {
        if !dom.is_active(idx) {
            out[idx] = ZERO;
            continue;
        }
        let mut acc = -2.0 * dim as f64 * u[idx];
        for axis in 0..dim {
            for d in [-1, 1] {
                acc += dom.neighbour_value(u, idx, axis, d);
            }
        }
        out[idx] = acc * inv;
    }
}

/// Unconjugated bilinear form `x^T y`, the natural inner product for the
/// complex-symmetric CN matrix.
fn bilinear(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Active cells with their active face neighbours.
#[derive(Debug, Clone)]
struct Stencil {
    /// Cell, active neighbours, their count, diagonal coefficient.
    cells: Vec<(usize, [usize; 4], usize, f64)>,
    inv_dx2: f64,
}

impl Stencil {
    fn new(dom: &DomainGrid) -> Self {
        let g = dom.base();
        let mut cells = Vec::with_capacity(dom.active_count());
        for idx in 0..g.len() {
            if !dom.is_active(idx) {
                continue;
            }
            let mut nb = [0; 4];
            let mut k = 0;
            let mut diag = -2.0 * g.dim() as f64;
            for axis in 0..g.dim() {
                for d in [-1, 1] {
                    let j = dom.neighbour(idx, axis, d);
                    if dom.is_active(j) {
                        nb[k] = j;
                        k += 1;
                    } else {
                        diag += dom.ghost_factor(idx, axis, d);
                    }
                }
            }
            cells.push((idx, nb, k, diag));
        }
        Self { cells, inv_dx2: 1.0 / (g.dx() * g.dx()) }
    }

    /// `y = x + c L x` on active cells; inactive entries of `y` are untouched.
    fn shifted(&self, x: &[Complex64], c: Complex64, y: &mut [Complex64]) {
        let cs = c * self.inv_dx2;
        for &(i, nb, k, diag) in &self.cells {
            let mut acc = diag * x[i];
            for &j in &nb[..k] {
                acc += x[j];
            }
            y[i] = x[i] + cs * acc;
        }
    }
}

/// Assembled once per `(domain, dt)`: the operator `I - i dt/2 L` and its
/// explicit counterpart.
#[derive(Debug, Clone)]
pub struct CrankNicolson {
    dom: DomainGrid,
    stencil: Stencil,
    cfg: EvolutionConfig,
    h: f64,
}

/// Work done by one step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub fixed_point_iterations: usize,
    pub solver_iterations: usize,
    pub increment: f64,
}

impl CrankNicolson {
    pub fn new(dom: DomainGrid, cfg: EvolutionConfig) -> Result<Self> {
        cfg.validate()?;
        let h = cfg.signed_dt();
        Ok(Self { stencil: Stencil::new(&dom), dom, cfg, h })
    }

    pub fn domain(&self) -> &DomainGrid {
        &self.dom
    }

    /// `y = (I + c L) x` with `c = sign * i dt / 2`; `y` is zero off the domain.
    fn apply(&self, x: &[Complex64], sign: f64, y: &mut [Complex64]) {
        self.stencil.shifted(x, Complex64::new(0.0, sign * 0.5 * self.h), y);
    }

    /// COCG for `(I - i dt/2 L) x = b`, warm-started from `x`.
    fn solve(&self, b: &[Complex64], x: &mut [Complex64]) -> Result<usize> {
        let n = b.len();
        let mut q = vec![ZERO; n];
        self.apply(x, -1.0, &mut q);
        let mut r: Vec<Complex64> = (0..n).map(|i| b[i] - q[i]).collect();
        let bn = norm(b).max(f64::MIN_POSITIVE);
        if norm(&r) <= SOLVER_TOLERANCE * bn {
            return Ok(0);
        }
        let mut p = r.clone();
        let mut rho = bilinear(&r, &r);
        for it in 1..=SOLVER_MAX_ITERATIONS {
            self.apply(&p, -1.0, &mut q);
            let alpha = rho / bilinear(&p, &q);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            let rn = norm(&r);
            if !rn.is_finite() {
                return Err(Error::SolverDiverged { residual: rn, iterations: it });
            }
            if rn <= SOLVER_TOLERANCE * bn {
                return Ok(it);
            }
            let rho_new = bilinear(&r, &r);
            let beta = rho_new / rho;
            rho = rho_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
        let mut y = vec![ZERO; n];
        self.apply(x, -1.0, &mut y);
        let res = (0..n).map(|i| (b[i] - y[i]).norm_sqr()).sum::<f64>().sqrt() / bn;
        Err(Error::SolverDiverged { residual: res, iterations: SOLVER_MAX_ITERATIONS })
    }

    /// Advances `u` by one step from time `t`; `u` must be pinned.
    pub fn step(&self, u: &mut ComplexField, t: f64) -> Result<StepStats> {
        self.step_from(u, None, t)
    }

    /// [`Self::step`] with a warm start for the first linear solve,
    /// typically the extrapolation `2 u - u_prev`. The fixed point itself
    /// always starts from the predictor.
    pub fn step_from(&self, u: &mut ComplexField, guess: Option<&[Complex64]>, t: f64) -> Result<StepStats> {
        let n = u.grid().len();
        let mut explicit = vec![ZERO; n];
        self.apply(u.values(), 1.0, &mut explicit);
        let mut next = guess.map_or_else(|| u.values().to_vec(), <[Complex64]>::to_vec);
        let mut stats = StepStats::default();
        if self.cfg.epsilon == 0 {
            stats.solver_iterations = self.solve(&explicit, &mut next)?;
            u.values_mut().copy_from_slice(&next);
            return Ok(stats);
        }
        let eps = self.cfg.epsilon as f64;
        let half_p = 0.5 * (self.cfg.p - 1.0);
        // predictor: linear step, then the exact nonlinear phase; O(dt^2)
        // from the fixed point, unlike extrapolation of stiff modes
        stats.solver_iterations += self.solve(&explicit, &mut next)?;
        for (z, w) in next.iter_mut().zip(u.values()) {
            *z *= Complex64::from_polar(1.0, -self.h * eps * w.norm_sqr().powf(half_p));
        }
        let c = Complex64::new(0.0, -self.h * eps);
        let mut b = vec![ZERO; n];
        let mut last_inc = f64::INFINITY;
        for k in 1..=FIXED_POINT_MAX_ITERATIONS {
            let cur = u.values();
            for i in 0..n {
                if !self.dom.is_active(i) {
                    b[i] = ZERO;
                    continue;
                }
                let w = 0.5 * (cur[i] + next[i]);
                b[i] = explicit[i] + c * w * w.norm_sqr().powf(half_p);
            }
            if b.iter().any(|z| !z.is_finite()) {
                return Err(Error::StepRejected { t, increment: f64::INFINITY });
            }
            let prev = next.clone();
            stats.solver_iterations += self.solve(&b, &mut next).map_err(|e| match e {
                Error::SolverDiverged { residual, .. } if !residual.is_finite() => {
                    Error::StepRejected { t, increment: f64::INFINITY }
                }
                e => e,
            })?;
            let scale = next.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            let inc = next.iter().zip(&prev).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
            stats.fixed_point_iterations = k;
            stats.increment = inc;
            // a non-contracting iteration will not reach the tolerance
            if !inc.is_finite() || (k > 1 && inc >= last_inc) {
                return Err(Error::StepRejected { t, increment: inc });
            }
            last_inc = inc;
            if inc <= FIXED_POINT_TOLERANCE {
                u.values_mut().copy_from_slice(&next);
                return Ok(stats);
            }
        }
        Err(Error::StepRejected { t, increment: stats.increment })
    }
}

/// One CN step of a pinned copy of `u`.
pub fn step_crank_nicolson(dom: &DomainGrid, u: &ComplexField, cfg: &EvolutionConfig) -> Result<ComplexField> {
    if u.grid() != dom.base() {
        return Err(Error::GridMismatch);
    }
    let cn = CrankNicolson::new(dom.clone(), *cfg)?;
    let mut out = dom.pinned(u);
    cn.step(&mut out, 0.0)?;
    Ok(out)
}

/// Evolves the pinned datum, sampling at step 0, every `sample_stride`-th
/// step and the last.
pub fn evolve_domain(dom: &DomainGrid, u0: &ComplexField, cfg: &EvolutionConfig) -> Result<Trajectory> {
    if u0.grid() != dom.base() {
        return Err(Error::GridMismatch);
    }
    let cn = CrankNicolson::new(dom.clone(), *cfg)?;
    let mut u = dom.pinned(u0);
    let h = cfg.signed_dt();
    let steps = cfg.steps();
    let mut samples = vec![(0.0, u.clone())];
    let mut prev: Option<Vec<Complex64>> = None;
    for k in 1..=steps {
        let cur = u.values().to_vec();
        let guess: Option<Vec<Complex64>> =
            prev.as_ref().map(|p| cur.iter().zip(p).map(|(a, b)| 2.0 * a - b).collect());
        cn.step_from(&mut u, guess.as_deref(), (k - 1) as f64 * h)?;
        prev = Some(cur);
        if u.has_non_finite() {
            return Err(Error::BlowUp { t: k as f64 * h });
        }
        if k % cfg.sample_stride == 0 || k == steps {
            samples.push((k as f64 * h, u.clone()));
        }
    }
    Ok(Trajectory { config: *cfg, samples })
}
