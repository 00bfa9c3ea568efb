//! Interaction functionals `I_rho(u, v) = int rho(x - y) |u|^2(x) |v|^2(y)`,
//! the one-sided directional `I_omega`, its time derivative, and the
//! right-hand sides of the bilinear virial identities.
//!
//! Directional weights are only ever handled through marginals; their
//! Hessian is a measure on `x.omega = y.omega` and has no pointwise value.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::{Direction, Grid};
use crate::radon::{self, LineLayout, Profile1D};
use crate::spectral::{self, dft_in_place, idft_normalized};

type ScalarFn = dyn Fn([f64; 2]) -> f64 + Send + Sync;
type VectorFn = dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync;
type MatrixFn = dyn Fn([f64; 2]) -> [[f64; 2]; 2] + Send + Sync;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightKind {
    /// `rho(z) = |z.omega|`.
    Directional(Direction),
    Smooth { convex: bool },
    Custom { convex: bool },
}

/// Interaction weight with derivative evaluators. `grad` and `hessian` are
/// absent for directional weights.
#[derive(Clone)]
pub struct Weight {
    pub name: String,
    pub kind: WeightKind,
    rho: Arc<ScalarFn>,
    grad: Option<Arc<VectorFn>>,
    hessian: Option<Arc<MatrixFn>>,
}

impl std::fmt::Debug for Weight {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Weight").field("name", &self.name).field("kind", &self.kind).finish()
    }
}

impl Weight {
    pub fn custom(
        name: impl Into<String>,
        convex: bool,
        rho: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static,
        grad: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static,
        hessian: impl Fn([f64; 2]) -> [[f64; 2]; 2] + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            kind: WeightKind::Custom { convex },
            rho: Arc::new(rho),
            grad: Some(Arc::new(grad)),
            hessian: Some(Arc::new(hessian)),
        }
    }

    fn smooth(
        name: &str,
        convex: bool,
        rho: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static,
        grad: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static,
        hessian: impl Fn([f64; 2]) -> [[f64; 2]; 2] + Send + Sync + 'static,
    ) -> Self {
        let mut w = Self::custom(name, convex, rho, grad, hessian);
        w.kind = WeightKind::Smooth { convex };
        w
    }

    pub fn constant(c: f64) -> Self {
        Self::smooth("constant", c == 0.0, move |_| c, |_| [0.0; 2], |_| [[0.0; 2]; 2])
    }

    /// `|z|^2`.
    pub fn quadratic() -> Self {
        Self::smooth(
            "quadratic",
            true,
            |z| z[0] * z[0] + z[1] * z[1],
            |z| [2.0 * z[0], 2.0 * z[1]],
            |_| [[2.0, 0.0], [0.0, 2.0]],
        )
    }

    /// `sqrt(1 + |z|^2)`.
    pub fn japanese_bracket() -> Self {
        Self::smooth(
            "japanese_bracket",
            true,
            |z| (1.0 + z[0] * z[0] + z[1] * z[1]).sqrt(),
            |z| {
                let b = (1.0 + z[0] * z[0] + z[1] * z[1]).sqrt();
                [z[0] / b, z[1] / b]
            },
            |z| {
                let b2 = 1.0 + z[0] * z[0] + z[1] * z[1];
                let b = b2.sqrt();
                let c = 1.0 / (b * b2);
                [[c * (b2 - z[0] * z[0]), -c * z[0] * z[1]], [-c * z[0] * z[1], c * (b2 - z[1] * z[1])]]
            },
        )
    }

    pub fn directional(omega: Direction) -> Self {
        let w = omega.components();
        Self {
            name: format!("directional{}", omega.label()),
            kind: WeightKind::Directional(omega),
            rho: Arc::new(move |z| (z[0] * w[0] + z[1] * w[1]).abs()),
            grad: None,
            hessian: None,
        }
    }

    pub fn rho(&self, z: [f64; 2]) -> f64 {
        (self.rho)(z)
    }

    pub fn grad(&self, z: [f64; 2]) -> Option<[f64; 2]> {
        self.grad.as_ref().map(|g| g(z))
    }

    pub fn hessian(&self, z: [f64; 2]) -> Option<[[f64; 2]; 2]> {
        self.hessian.as_ref().map(|h| h(z))
    }

    /// Trace of the Hessian in the first `dim` coordinates.
    pub fn laplacian(&self, z: [f64; 2], dim: usize) -> Option<f64> {
        self.hessian(z).map(|h| (0..dim).map(|a| h[a][a]).sum())
    }

    pub fn is_directional(&self) -> bool {
        matches!(self.kind, WeightKind::Directional(_))
    }

    pub fn declared_convex(&self) -> bool {
        match self.kind {
            WeightKind::Directional(_) => true,
            WeightKind::Smooth { convex } | WeightKind::Custom { convex } => convex,
        }
    }
}

/// One evaluation of an interaction functional and the matching identity's right side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirialRecord {
    pub t: f64,
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "dI_dt")]
    pub di_dt: f64,
    pub rhs_terms: BTreeMap<String, f64>,
    /// The identity's claimed `d^2 I / dt^2`.
    pub total: f64,
    pub residual: Option<f64>,
}

impl VirialRecord {
    pub fn term(&self, name: &str) -> f64 {
        self.rhs_terms.get(name).copied().unwrap_or(0.0)
    }

    pub fn csv_header(&self) -> String {
        let mut s = String::from("t,I,dI_dt");
        for k in self.rhs_terms.keys() {
            s.push(',');
            s.push_str(k);
        }
        s.push_str(",total,residual");
        s
    }

    pub fn csv_row(&self) -> String {
        let mut s = format!("{:.17e},{:.17e},{:.17e}", self.t, self.i, self.di_dt);
        for v in self.rhs_terms.values() {
            let _ = write!(s, ",{v:.17e}");
        }
        let _ = write!(s, ",{:.17e},", self.total);
        if let Some(r) = self.residual {
            let _ = write!(s, "{r:.17e}");
        }
        s
    }
}

/// CSV of records sharing one term set.
pub fn records_to_csv(records: &[VirialRecord]) -> String {
    let mut out = String::new();
    if let Some(first) = records.first() {
        out.push_str(&first.csv_header());
        out.push('\n');
    }
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

fn marginals(u: &ComplexField, omega: &Direction) -> Result<Profile1D> {
    radon::radon(u.grid(), &u.density(), omega)
}

/// Offset corrections `w(k)`, `k = a - b`, added to the one-sided ramp
/// kernel `(s - s')_+ / h = max(k, 0)`. They cancel the `h^2, h^4, h^6`
/// Euler-Maclaurin terms of the kink at `s = s'` for smooth marginals.
pub const RAMP_CORRECTION: [(i64, f64); 5] = [
    (-2, 31.0 / 60480.0),
    (-1, -47.0 / 7560.0),
    (0, 191.0 / 2016.0),
    (1, -47.0 / 7560.0),
    (2, 31.0 / 60480.0),
];

/// Offset corrections added to the Heaviside kernel `H(s - s') = [k >= 1]`;
/// `w(k) + w(-k) = 1` is kept for every `k`, the jump error is `O(h^6)`.
pub const STEP_CORRECTION: [(i64, f64); 5] = [
    (-2, 11.0 / 1440.0),
    (-1, -41.0 / 720.0),
    (0, 0.5),
    (1, 41.0 / 720.0),
    (2, -11.0 / 1440.0),
];

/// Full weight of the one-sided ramp kernel at offset `k` (in units of `h`).
pub fn ramp_weight(k: i64) -> f64 {
    let base = if k > 0 { k as f64 } else { 0.0 };
    base + RAMP_CORRECTION.iter().find(|c| c.0 == k).map_or(0.0, |c| c.1)
}

/// Full weight of the Heaviside kernel at offset `k`.
pub fn step_weight(k: i64) -> f64 {
    let base = if k > 0 { 1.0 } else { 0.0 };
    base + STEP_CORRECTION.iter().find(|c| c.0 == k).map_or(0.0, |c| c.1)
}

fn local_correction(x: &[f64], y: &[f64], table: &[(i64, f64)]) -> f64 {
    let n = x.len() as i64;
    let mut acc = 0.0;
    for a in 0..n {
        for &(k, w) in table {
            let b = a - k;
            if (0..n).contains(&b) {
                acc += w * x[a as usize] * y[b as usize];
            }
        }
    }
    acc
}

/// `sum_{a, b} ramp_weight(a - b) mu[a] mv[b]` with running sums.
pub fn one_sided_pair_sum(mu: &[f64], mv: &[f64]) -> f64 {
    let mut below = 0.0; // sum_{b < a} mv[b]
    let mut q = 0.0; // sum_{b < a} (a - b) mv[b]
    let mut acc = 0.0;
    for a in 0..mu.len() {
        q += below;
        acc += mu[a] * q;
        below += mv[a];
    }
    acc + local_correction(mu, mv, &RAMP_CORRECTION)
}

/// `sum_{a, b} step_weight(a - b) x[a] y[b]`.
fn heaviside_pair_sum(x: &[f64], y: &[f64]) -> f64 {
    let mut below = 0.0; // sum_{b < a} y[b]
    let mut acc = 0.0;
    for a in 0..x.len() {
        acc += x[a] * below;
        below += y[a];
    }
    acc + local_correction(x, y, &STEP_CORRECTION)
}

/// `I_omega(u, v) = int int_{s > s'} (s - s') m_u(s) m_v(s')`, with the
/// corrected ramp kernel on the marginals.
pub fn interaction_directional(u: &ComplexField, v: &ComplexField, omega: &Direction) -> Result<f64> {
    u.same_grid(v)?;
    let mu = marginals(u, omega)?;
    let mv = marginals(v, omega)?;
    Ok(one_sided_pair_sum(&mu.values, &mv.values) * mu.ds.powi(3))
}

/// `I_omega` for densities already sampled on a common profile layout.
pub fn interaction_from_marginals(mu: &Profile1D, mv: &Profile1D) -> f64 {
    one_sided_pair_sum(&mu.values, &mv.values) * mu.ds.powi(3)
}

/// Radon transform of `Im(conj(u) d_omega u)`.
pub fn current_marginal(u: &ComplexField, omega: &Direction) -> Result<Profile1D> {
    let du = spectral::directional_derivative(u, omega.components());
    let j: Vec<f64> = u.values().iter().zip(du.values()).map(|(a, b)| (a.conj() * b).im).collect();
    radon::radon(u.grid(), &j, omega)
}

/// `d/dt I_omega = 2 int int_{s > s'} [j_u(s) m_v(s') - m_u(s) j_v(s')]` from
/// the instantaneous state, with the corrected step kernel.
pub fn d_dt_interaction_directional(u: &ComplexField, v: &ComplexField, omega: &Direction) -> Result<f64> {
    u.same_grid(v)?;
    let mu = marginals(u, omega)?;
    let mv = marginals(v, omega)?;
    let ju = current_marginal(u, omega)?;
    let jv = current_marginal(v, omega)?;
    let ds = mu.ds;
    Ok(2.0 * ds * ds * (heaviside_pair_sum(&ju.values, &mv.values) - heaviside_pair_sum(&mu.values, &jv.values)))
}

/// Quadrature strategy for non-directional pair integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairQuadrature {
    /// Every grid pair; errors when the pair count exceeds the budget.
    Brute { budget: u128 },
    /// Zero-padded FFT convolution, exact for the same midpoint sum.
    Convolution,
    /// Brute force within the budget, convolution beyond it.
    Auto { budget: u128 },
}

impl Default for PairQuadrature {
    fn default() -> Self {
        PairQuadrature::Auto { budget: 1 << 24 }
    }
}

fn pair_count(grid: &Grid) -> u128 {
    (grid.len() as u128) * (grid.len() as u128)
}

/// Midpoint sum `sum_{x, y} K(x - y) a(x) b(y) dV^2`.
pub fn pair_integral(grid: &Grid, a: &[f64], b: &[f64], kernel: &ScalarFn, quad: PairQuadrature) -> Result<f64> {
    let pairs = pair_count(grid);
    let brute = match quad {
        PairQuadrature::Brute { budget } => {
            if pairs > budget {
                return Err(Error::CostBudget { pairs, budget });
            }
            true
        }
        PairQuadrature::Convolution => false,
        PairQuadrature::Auto { budget } => pairs <= budget,
    };
    let dv = grid.cell_volume();
    if brute {
        let s: f64 = (0..grid.len())
            .into_par_iter()
            .map(|ix| {
                if a[ix] == 0.0 {
                    return 0.0;
                }
                let x = grid.point(ix);
                let mut acc = 0.0;
                for (iy, &by) in b.iter().enumerate() {
                    let y = grid.point(iy);
                    acc += kernel([x[0] - y[0], x[1] - y[1]]) * by;
                }
                a[ix] * acc
            })
            .sum();
        Ok(s * dv * dv)
    } else {
        Ok(convolve_pair(grid, a, b, kernel) * dv * dv)
    }
}

/// `sum_x a(x) sum_y K(x - y) b(y)` by a linear convolution of size `2N`.
fn convolve_pair(grid: &Grid, a: &[f64], b: &[f64], kernel: &ScalarFn) -> f64 {
    let n = grid.n();
    let m = 2 * n;
    let dim = grid.dim();
    let big = Grid::new(dim, m, 1.0).expect("even size");
    let dx = grid.dx();
    let offset = |k: usize| -> f64 {
        // slot k of the size-2N circle holds difference index k or k - 2N
        if k < n {
            k as f64 * dx
        } else {
            (k as f64 - m as f64) * dx
        }
    };
    let mut kern: Vec<Complex64> = (0..big.len())
        .map(|idx| {
            let [i, j] = big.unflatten(idx);
            let z = if dim == 1 { [offset(i), 0.0] } else { [offset(i), offset(j)] };
            Complex64::new(kernel(z), 0.0)
        })
        .collect();
    let mut bb = vec![Complex64::new(0.0, 0.0); big.len()];
    for (idx, &v) in b.iter().enumerate() {
        let [i, j] = grid.unflatten(idx);
        bb[big.flatten(i, j)] = Complex64::new(v, 0.0);
    }
    dft_in_place(&big, &mut kern, false);
    dft_in_place(&big, &mut bb, false);
    kern.iter_mut().zip(&bb).for_each(|(k, v)| *k *= v);
    idft_normalized(&big, &mut kern);
    a.iter()
        .enumerate()
        .map(|(idx, &av)| {
            let [i, j] = grid.unflatten(idx);
            av * kern[big.flatten(i, j)].re
        })
        .sum()
}

/// `I_rho(u, v)`. Directional weights use `I_omega(u, v) + I_omega(v, u)`.
pub fn interaction_general(u: &ComplexField, v: &ComplexField, w: &Weight, quad: PairQuadrature) -> Result<f64> {
    u.same_grid(v)?;
    if let WeightKind::Directional(omega) = w.kind {
        return Ok(interaction_directional(u, v, &omega)? + interaction_directional(v, u, &omega)?);
    }
    let rho = w.rho.clone();
    pair_integral(u.grid(), &u.density(), &v.density(), &*rho, quad)
}

pub(crate) fn nonlinear_coefficient(epsilon: i8, p: f64) -> f64 {
    epsilon as f64 * (p - 1.0) / (p + 1.0)
}

/// Right side for two 1D solutions, with `I = I_omega(u, v)` for `omega = +1`:
/// `4 int |d_x(u conj v)|^2 + 2 eps (p-1)/(p+1) int (|u|^2 |v|^{p+1} + |v|^2 |u|^{p+1})`.
pub fn rhs_theorem_t2(u: &ComplexField, v: &ComplexField, epsilon: i8, p: f64) -> Result<VirialRecord> {
    u.same_grid(v)?;
    let g = *u.grid();
    if g.dim() != 1 {
        return Err(Error::Dimension { expected: "1".into(), got: g.dim() });
    }
    let omega = Direction::axis(1, 0);
    let w = u.mul(&v.conj());
    let dw = spectral::partial(&w, 0);
    let dv = g.cell_volume();
    let mut terms = BTreeMap::new();
    terms.insert("product_gradient_term".to_string(), 4.0 * dw.mass());
    let c = 2.0 * nonlinear_coefficient(epsilon, p);
    let nu = u.density();
    let nv = v.density();
    let pu = u.modulus_power(p + 1.0);
    let pv = v.modulus_power(p + 1.0);
    let nx: f64 = nu.iter().zip(&pv).map(|(a, b)| a * b).sum::<f64>() * dv;
    let ny: f64 = nv.iter().zip(&pu).map(|(a, b)| a * b).sum::<f64>() * dv;
    terms.insert("nonlinear_term_x".to_string(), c * nx);
    terms.insert("nonlinear_term_y".to_string(), c * ny);
    let total = terms.values().sum();
    Ok(VirialRecord {
        t: 0.0,
        i: interaction_directional(u, v, &omega)?,
        di_dt: d_dt_interaction_directional(u, v, &omega)?,
        rhs_terms: terms,
        total,
        residual: None,
    })
}

/// Line-measure weight and bins of an exact direction, grouped per slice.
fn slices(grid: &Grid, lay: &LineLayout) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); lay.bins];
    for idx in 0..grid.len() {
        let [i, j] = grid.unflatten(idx);
        out[lay.bin(i, j)].push(idx);
    }
    out
}

/// Two-point trace term `int ds int int_{slice^2} |u(x) d u(y) - u(y) d u(x)|^2`
/// by the per-slice double sum.
pub fn trace_term(u: &ComplexField, omega: &Direction) -> Result<f64> {
    let du = spectral::directional_derivative(u, omega.components());
    trace_term_with(u, &du, omega)
}

/// [`trace_term`] with a caller-supplied directional derivative `du`.
pub fn trace_term_with(u: &ComplexField, du: &ComplexField, omega: &Direction) -> Result<f64> {
    u.same_grid(du)?;
    let g = *u.grid();
    let lay = LineLayout::new(&g, omega)?;
    let (uv, dv) = (u.values(), du.values());
    let groups = slices(&g, &lay);
    let s: f64 = groups
        .par_iter()
        .map(|pts| {
            let mut acc = 0.0;
            for (n, &x) in pts.iter().enumerate() {
                for &y in &pts[n + 1..] {
                    acc += (uv[x] * dv[y] - uv[y] * dv[x]).norm_sqr();
                }
            }
            // ordered pairs; the diagonal vanishes
            2.0 * acc
        })
        .sum();
    Ok(s * lay.weight * lay.weight * lay.ds)
}

/// Right side for one 2D solution and an exact direction. `total` is the
/// sum `term1 + term2 + term3`, which equals `factor * d^2 I_omega(u, u)`
/// with the factor pinned in the constants manifest.
pub fn rhs_theorem_t1(u: &ComplexField, omega: &Direction, epsilon: i8, p: f64) -> Result<VirialRecord> {
    let g = *u.grid();
    if g.dim() != 2 {
        return Err(Error::Dimension { expected: "2".into(), got: g.dim() });
    }
    let m = marginals(u, omega)?;
    let dm = profile_derivative(&m);
    let term1 = dm.iter().map(|x| x * x).sum::<f64>() * m.ds;
    let mp = radon::radon(&g, &u.modulus_power(p + 1.0), omega)?;
    let term2 = nonlinear_coefficient(epsilon, p) * m.values.iter().zip(&mp.values).map(|(a, b)| a * b).sum::<f64>() * m.ds;
    let term3 = trace_term(u, omega)?;
    let mut terms = BTreeMap::new();
    terms.insert("radon_gradient_term".to_string(), term1);
    terms.insert("nonlinear_radon_term".to_string(), term2);
    terms.insert("trace_term".to_string(), term3);
    Ok(VirialRecord {
        t: 0.0,
        i: interaction_directional(u, u, omega)?,
        di_dt: d_dt_interaction_directional(u, u, omega)?,
        rhs_terms: terms,
        total: term1 + term2 + term3,
        residual: None,
    })
}

/// `d_s` of a marginal. Axis profiles are periodic with the grid and use the
/// spectral derivative; diagonal profiles are zero-padded first.
pub fn profile_derivative(m: &Profile1D) -> Vec<f64> {
    let len = m.len();
    if len % 2 == 0 && matches!(m.omega.exact(), Some(crate::grid::ExactDirection::Axis { .. })) {
        let g = Grid::new(1, len, 0.5 * len as f64 * m.ds).expect("valid profile grid");
        return spectral::partial_real(&g, &m.values, 0);
    }
    let n = (2 * len).next_power_of_two();
    let g = Grid::new(1, n, 0.5 * n as f64 * m.ds).expect("valid profile grid");
    let mut padded = vec![0.0; n];
    padded[..len].copy_from_slice(&m.values);
    let d = spectral::partial_real(&g, &padded, 0);
    d[..len].to_vec()
}

/// `hessian_F_term = 4 int H(F, conj F)`, `hessian_G_term = 4 int H(G, conj G)`,
/// `grad_coupling_term = 4 int Delta rho grad|u|^2 . grad|v|^2`, and
/// `hessian_coupling_term = 4 int H(grad|u|^2, grad|v|^2)`, with
/// `F = conj v(y) grad u(x) + u(x) grad conj v(y)` and
/// `G = v(y) grad u(x) - u(x) grad v(y)`. The nonlinear terms are
/// `2 eps (p-1)/(p+1) int Delta rho(x-y) |u|^{p+1}(x) |v|^2(y)` and the mirror.
pub fn rhs_theorem_t3(u: &ComplexField, v: &ComplexField, w: &Weight, epsilon: i8, p: f64, budget: u128) -> Result<VirialRecord> {
    u.same_grid(v)?;
    let g = *u.grid();
    let hess = w.hessian.clone().ok_or_else(|| Error::Precondition(format!("weight {} has no pointwise Hessian", w.name)))?;
    let pairs = pair_count(&g);
    if pairs > budget {
        return Err(Error::CostBudget { pairs, budget });
    }
    let dim = g.dim();
    let gu = spectral::gradient(u);
    let gv = spectral::gradient(v);
    let nu = u.density();
    let nv = v.density();
    // product rule, so that the F/G/Hessian-coupling relation is algebraic
    let grad_n = |w: &ComplexField, gw: &[ComplexField]| -> Vec<Vec<f64>> {
        gw.iter().map(|d| w.values().iter().zip(d.values()).map(|(a, b)| 2.0 * (a.conj() * b).re).collect()).collect()
    };
    let gnu = grad_n(u, &gu);
    let gnv = grad_n(v, &gv);
    let (uv, vv) = (u.values(), v.values());
    let sums: [f64; 4] = (0..g.len())
        .into_par_iter()
        .map(|ix| {
            let x = g.point(ix);
            let mut acc = [0.0; 4];
            let mut f = [Complex64::new(0.0, 0.0); 2];
            let mut gg = [Complex64::new(0.0, 0.0); 2];
            for iy in 0..g.len() {
                let y = g.point(iy);
                let h = hess([x[0] - y[0], x[1] - y[1]]);
                for a in 0..dim {
                    f[a] = vv[iy].conj() * gu[a].values()[ix] + uv[ix] * gv[a].values()[iy].conj();
                    gg[a] = vv[iy] * gu[a].values()[ix] - uv[ix] * gv[a].values()[iy];
                }
                let mut lap = 0.0;
                for a in 0..dim {
                    lap += h[a][a];
                    for b in 0..dim {
                        acc[0] += h[a][b] * (f[a] * f[b].conj()).re;
                        acc[1] += h[a][b] * (gg[a] * gg[b].conj()).re;
                        acc[3] += h[a][b] * gnu[a][ix] * gnv[b][iy];
                    }
                }
                let dot: f64 = (0..dim).map(|a| gnu[a][ix] * gnv[a][iy]).sum();
                acc[2] += lap * dot;
            }
            acc
        })
        .reduce(|| [0.0; 4], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]);
    let dv2 = g.cell_volume().powi(2);
    let mut terms = BTreeMap::new();
    terms.insert("hessian_F_term".to_string(), 4.0 * sums[0] * dv2);
    terms.insert("hessian_G_term".to_string(), 4.0 * sums[1] * dv2);
    terms.insert("grad_coupling_term".to_string(), 4.0 * sums[2] * dv2);
    terms.insert("hessian_coupling_term".to_string(), 4.0 * sums[3] * dv2);
    let c = 2.0 * nonlinear_coefficient(epsilon, p);
    let (nlx, nly) = if c == 0.0 {
        (0.0, 0.0)
    } else {
        let lap = move |z: [f64; 2]| -> f64 {
            let h = hess(z);
            (0..dim).map(|a| h[a][a]).sum()
        };
        let quad = PairQuadrature::Brute { budget };
        // x carries |u|^{p+1}, y carries |v|^2, and the mirror
        let x = pair_integral(&g, &u.modulus_power(p + 1.0), &nv, &lap, quad)?;
        let y = pair_integral(&g, &nu, &v.modulus_power(p + 1.0), &lap, quad)?;
        (c * x, c * y)
    };
    terms.insert("nonlinear_term_x".to_string(), nlx);
    terms.insert("nonlinear_term_y".to_string(), nly);
    let total = terms["hessian_F_term"] + nlx + nly;
    let rho = w.rho.clone();
    Ok(VirialRecord {
        t: 0.0,
        i: pair_integral(&g, &nu, &nv, &*rho, PairQuadrature::Auto { budget })?,
        di_dt: f64::NAN,
        rhs_terms: terms,
        total,
        residual: None,
    })
}

/// F-form total minus G-form total (with the Laplacian coupling), and minus
/// G-form with the Hessian coupling, both relative to the F-form scale.
pub fn t3_consistency(rec: &VirialRecord) -> (f64, f64) {
    let f = rec.term("hessian_F_term");
    let gform = rec.term("hessian_G_term");
    let scale = f.abs().max(gform.abs()).max(f64::MIN_POSITIVE);
    (
        (f - gform - rec.term("grad_coupling_term")).abs() / scale,
        (f - gform - rec.term("hessian_coupling_term")).abs() / scale,
    )
}

/// `||u||^2_{H^{1/2}}`, homogeneous: `int 2 pi |xi| |u^|^2`.
pub fn h_half_sq(u: &ComplexField) -> f64 {
    spectral::homogeneous_sobolev_sq(u, 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumBound {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub residual: f64,
}

/// `|d_t I_omega| <= ||u||^2 ||v||^2_{H^{1/2}} + ||v||^2 ||u||^2_{H^{1/2}}`.
pub fn momentum_bound(u: &ComplexField, v: &ComplexField, omega: &Direction) -> Result<MomentumBound> {
    let lhs = d_dt_interaction_directional(u, v, omega)?.abs();
    let rhs = u.mass() * h_half_sq(v) + v.mass() * h_half_sq(u);
    Ok(MomentumBound { lhs, rhs, residual: rhs - lhs })
}

pub fn momentum_bound_residual(u: &ComplexField, v: &ComplexField, omega: &Direction) -> Result<f64> {
    Ok(momentum_bound(u, v, omega)?.residual)
}

/// Frequency-side `I_omega(u^, v^)`: the one-sided interaction of `|u^|^2`
/// and `|v^|^2` on the frequency lattice.
pub fn frequency_interaction(u: &ComplexField, v: &ComplexField, omega: &Direction) -> Result<f64> {
    u.same_grid(v)?;
    let g = *u.grid();
    let fg = frequency_grid(&g);
    let a = spectral::fourier_transform(u).centered_density();
    let b = spectral::fourier_transform(v).centered_density();
    let ma = radon::radon(&fg, &a, omega)?;
    let mb = radon::radon(&fg, &b, omega)?;
    Ok(interaction_from_marginals(&ma, &mb))
}

/// The frequency lattice viewed as a sample grid: point `k` of the centred
/// density sits at `(k - N/2) / (2L)`.
pub fn frequency_grid(g: &Grid) -> Grid {
    Grid::new(g.dim(), g.n(), g.nyquist()).expect("valid grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bumps(grid: Grid, seed: u64, count: usize) -> ComplexField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = grid.half_length();
        let centers: Vec<([f64; 2], [f64; 2], f64, Complex64)> = (0..count)
            .map(|_| {
                let c = [rng.gen_range(-0.2..0.2) * l, rng.gen_range(-0.2..0.2) * l];
                let k = [rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)];
                let s = rng.gen_range(0.9..1.1);
                let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                (c, k, s, a)
            })
            .collect();
        let dim = grid.dim();
        ComplexField::from_fn(grid, |x| {
            centers
                .iter()
                .map(|(c, k, s, a)| {
                    let mut r2 = (x[0] - c[0]).powi(2);
                    let mut ph = k[0] * x[0];
                    if dim == 2 {
                        r2 += (x[1] - c[1]).powi(2);
                        ph += k[1] * x[1];
                    }
                    a * (-PI * r2 / (s * s)).exp() * Complex64::from_polar(1.0, 2.0 * PI * ph)
                })
                .sum()
        })
    }

    #[test]
    fn weights_are_symmetric_and_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for w in [Weight::quadratic(), Weight::japanese_bracket(), Weight::directional(Direction::from_angle(0.3))] {
            for _ in 0..200 {
                let z = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
                assert!((w.rho(z) - w.rho([-z[0], -z[1]])).abs() < 1e-10);
                if let Some(h) = w.hessian(z) {
                    let tr = h[0][0] + h[1][1];
                    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
                    let lmin = 0.5 * tr - (0.25 * tr * tr - det).max(0.0).sqrt();
                    assert!(lmin >= -1e-10, "{}", w.name);
                }
            }
        }
        assert!(Weight::directional(Direction::axis(2, 0)).hessian([1.0, 0.0]).is_none());
    }

    #[test]
    fn japanese_bracket_derivatives_match_finite_differences() {
        let w = Weight::japanese_bracket();
        let z = [0.7, -1.3];
        let h = 1e-5;
        let g = w.grad(z).unwrap();
        for a in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[a] += h;
            zm[a] -= h;
            assert!(((w.rho(zp) - w.rho(zm)) / (2.0 * h) - g[a]).abs() < 1e-8);
            let gp = w.grad(zp).unwrap();
            let gm = w.grad(zm).unwrap();
            for b in 0..2 {
                assert!(((gp[b] - gm[b]) / (2.0 * h) - w.hessian(z).unwrap()[a][b]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn zero_fields_give_zero() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        let z = ComplexField::zeros(g);
        let u = bumps(g, 3, 2);
        let d = Direction::axis(2, 0);
        assert_eq!(interaction_directional(&z, &u, &d).unwrap(), 0.0);
        assert_eq!(d_dt_interaction_directional(&u, &z, &d).unwrap(), 0.0);
        assert_eq!(momentum_bound_residual(&z, &u, &d).unwrap(), 0.0);
        assert_eq!(rhs_theorem_t1(&z, &d, 1, 3.0).unwrap().total, 0.0);
    }

    #[test]
    fn one_sided_sum_matches_definition() {
        let mu = [1.0, 0.5, 2.0, 0.0, 3.0];
        let mv = [0.2, 1.0, 0.0, 4.0, 1.0];
        let mut brute = 0.0;
        let mut step = 0.0;
        for a in 0..5 {
            for b in 0..5 {
                brute += ramp_weight(a as i64 - b as i64) * mu[a] * mv[b];
                step += step_weight(a as i64 - b as i64) * mu[a] * mv[b];
            }
        }
        assert!((one_sided_pair_sum(&mu, &mv) - brute).abs() < 1e-14);
        assert!((heaviside_pair_sum(&mu, &mv) - step).abs() < 1e-14);
        assert_eq!(ramp_weight(3), 3.0);
        assert_eq!(step_weight(-3), 0.0);
    }

    #[test]
    fn real_fields_have_no_current() {
        let g = Grid::new(2, 32, 3.0).unwrap();
        let u = ComplexField::from_real(g, |x| (-PI * (x[0] * x[0] + 2.0 * x[1] * x[1])).exp());
        let v = ComplexField::from_real(g, |x| (-PI * ((x[0] - 0.5).powi(2) + x[1] * x[1])).exp());
        for d in Direction::exact_2d() {
            assert!(d_dt_interaction_directional(&u, &v, &d).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn direction_independence_for_isotropic_gaussian() {
        let g = Grid::new(2, 256, 6.0).unwrap();
        let u = ComplexField::from_real(g, |x| (-PI * (x[0] * x[0] + x[1] * x[1])).exp());
        let vals: Vec<f64> = Direction::exact_2d().iter().map(|d| interaction_directional(&u, &u, d).unwrap()).collect();
        for v in &vals {
            assert!((v - vals[0]).abs() < 1e-8 * vals[0], "{vals:?}");
        }
    }

    #[test]
    fn constant_weights() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        let u = bumps(g, 5, 2);
        let v = bumps(g, 6, 2);
        let zero = interaction_general(&u, &v, &Weight::constant(0.0), PairQuadrature::default()).unwrap();
        assert_eq!(zero, 0.0);
        for quad in [PairQuadrature::Brute { budget: 1 << 20 }, PairQuadrature::Convolution] {
            let one = interaction_general(&u, &v, &Weight::constant(1.0), quad).unwrap();
            assert!((one - u.mass() * v.mass()).abs() < 1e-12 * one);
        }
        let over = interaction_general(&u, &v, &Weight::quadratic(), PairQuadrature::Brute { budget: 10 });
        assert!(matches!(over, Err(Error::CostBudget { .. })));
    }

    #[test]
    fn convolution_matches_brute_force() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        let u = bumps(g, 7, 3);
        let v = bumps(g, 8, 3);
        let w = Weight::japanese_bracket();
        let a = interaction_general(&u, &v, &w, PairQuadrature::Brute { budget: 1 << 20 }).unwrap();
        let b = interaction_general(&u, &v, &w, PairQuadrature::Convolution).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
        let ba = interaction_general(&v, &u, &w, PairQuadrature::Brute { budget: 1 << 20 }).unwrap();
        assert!((a - ba).abs() < 1e-12 * a);
    }

    #[test]
    fn plane_wave_t1_and_t2_terms_vanish() {
        let g = Grid::new(2, 32, 2.0).unwrap();
        let xi = [2.0 * g.dxi(), -3.0 * g.dxi()];
        let w = ComplexField::from_fn(g, |x| Complex64::from_polar(0.8, 2.0 * PI * (xi[0] * x[0] + xi[1] * x[1])));
        for d in Direction::exact_2d() {
            let r = rhs_theorem_t1(&w, &d, 0, 3.0).unwrap();
            let scale = w.mass().powi(2) * crate::nls::kinetic(&w);
            if matches!(d.exact(), Some(crate::grid::ExactDirection::Axis { .. })) {
                assert!(r.term("radon_gradient_term").abs() < 1e-12 * scale, "{}", d.label());
            }
            assert!(r.term("trace_term").abs() < 1e-12 * scale, "{}", d.label());
        }
        let g1 = Grid::new(1, 64, 2.0).unwrap();
        let k = 3.0 * g1.dxi();
        let pw = ComplexField::from_fn(g1, |x| Complex64::from_polar(1.1, 2.0 * PI * k * x[0]));
        let r = rhs_theorem_t2(&pw, &pw, 0, 3.0).unwrap();
        assert!(r.total.abs() < 1e-10);
    }

    #[test]
    fn trace_term_matches_lagrange_form() {
        let g = Grid::new(2, 32, 3.0).unwrap();
        let u = bumps(g, 9, 3);
        for d in Direction::exact_2d() {
            let lay = LineLayout::new(&g, &d).unwrap();
            let du = spectral::directional_derivative(&u, d.components());
            let m = radon::radon(&g, &u.density(), &d).unwrap();
            let k = radon::radon(&g, &du.density(), &d).unwrap();
            let c: Vec<Complex64> = u.values().iter().zip(du.values()).map(|(a, b)| a.conj() * b).collect();
            let r = radon::radon_complex(&g, &c, &d).unwrap();
            let lagrange: f64 = (0..lay.bins).map(|s| 2.0 * (m.values[s] * k.values[s] - r.values[s].norm_sqr())).sum::<f64>() * lay.ds;
            let direct = trace_term(&u, &d).unwrap();
            assert!((direct - lagrange).abs() < 1e-10 * direct, "{}: {direct} vs {lagrange}", d.label());
        }
    }

    #[test]
    fn t3_forms_agree_on_smooth_data() {
        let g = Grid::new(2, 32, 4.0).unwrap();
        let u = bumps(g, 10, 2);
        let v = bumps(g, 11, 2);
        for w in [Weight::quadratic(), Weight::japanese_bracket()] {
            let r = rhs_theorem_t3(&u, &v, &w, 1, 3.0, 1 << 21).unwrap();
            let (lap, hess) = t3_consistency(&r);
            assert!(hess < 1e-12, "{}: {hess}", w.name);
            assert!(lap < 1e-4, "{}: {lap}", w.name);
        }
    }

    #[test]
    fn t3_one_dimensional_quadratic_specialisation() {
        let g = Grid::new(1, 32, 4.0).unwrap();
        let u = bumps(g, 12, 2);
        let r = rhs_theorem_t3(&u, &u, &Weight::quadratic(), 0, 3.0, 1 << 20).unwrap();
        let du = spectral::partial(&u, 0);
        let dv = g.cell_volume();
        let mut gamma = 0.0;
        for x in 0..g.len() {
            for y in 0..g.len() {
                let f = u.values()[y].conj() * du.values()[x] + u.values()[x] * du.values()[y].conj();
                gamma += 2.0 * f.norm_sqr();
            }
        }
        gamma *= dv * dv;
        assert!((r.term("hessian_F_term") - 4.0 * gamma).abs() < 1e-12 * gamma);
    }

    #[test]
    fn record_csv() {
        let g = Grid::new(1, 64, 4.0).unwrap();
        let u = bumps(g, 13, 1);
        let rec = rhs_theorem_t2(&u, &u, 1, 3.0).unwrap();
        let csv = records_to_csv(&[rec.clone(), rec]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,I,dI_dt,nonlinear_term_x,nonlinear_term_y,product_gradient_term,total,residual");
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].split(',').count(), 8);
    }

    #[test]
    fn directional_general_is_two_sided() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        let u = bumps(g, 14, 2);
        let v = bumps(g, 15, 2);
        let d = Direction::diagonal(1, -1);
        let total = interaction_general(&u, &v, &Weight::directional(d), PairQuadrature::default()).unwrap();
        let h = g.dx() / std::f64::consts::SQRT_2;
        let kernel = move |z: [f64; 2]| {
            let k = (d.dot(&z) / h).round() as i64;
            h * (ramp_weight(k) + ramp_weight(-k))
        };
        let brute = pair_integral(&g, &u.density(), &v.density(), &kernel, PairQuadrature::Brute { budget: 1 << 20 }).unwrap();
        assert!((total - brute).abs() < 1e-12 * brute);
    }
}
