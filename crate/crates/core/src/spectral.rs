//! Fourier-side operators on periodic grids.
//!
//! Transforms are normalised to approximate `f^(xi) = int e^{-2 pi i x.xi} f dx`,
//! so `d/dx <-> 2 pi i xi` and `Delta <-> -4 pi^2 |xi|^2` everywhere downstream.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Unnormalised in-place DFT over every axis of `grid`.
pub(crate) fn dft_in_place(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    let n = grid.n();
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(data, &mut scratch);
    if grid.dim() == 2 {
        let mut t = vec![Complex64::new(0.0, 0.0); data.len()];
        transpose(data, &mut t, n);
        fft.process_with_scratch(&mut t, &mut scratch);
        transpose(&t, data, n);
    }
}

/// Normalised inverse: `dft_in_place(.., true)` followed by `1 / N^dim`.
pub(crate) fn idft_normalized(grid: &Grid, data: &mut [Complex64]) {
    dft_in_place(grid, data, true);
    let s = 1.0 / grid.len() as f64;
    data.iter_mut().for_each(|z| *z *= s);
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const B: usize = 32;
    for ib in (0..n).step_by(B) {
        for jb in (0..n).step_by(B) {
            for i in ib..(ib + B).min(n) {
                for j in jb..(jb + B).min(n) {
                    dst[j * n + i] = src[i * n + j];
                }
            }
        }
    }
}

/// `(-1)^k` per axis: the phase from `x_0 = -L` in the continuous normalisation.
#[inline]
fn lattice_phase(grid: &Grid, idx: usize) -> f64 {
    let [i, j] = grid.unflatten(idx);
    if (i + j) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Samples of `u^` on the frequency lattice, in FFT slot order.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl FourierField {
    pub fn from_values(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `int |u^|^2 dxi` on the lattice.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.frequency_cell_volume()
    }

    /// Value at signed lattice indices, if representable.
    pub fn at(&self, m: [i64; 2]) -> Option<Complex64> {
        let i = self.grid.freq_slot(m[0])?;
        let j = if self.grid.dim() == 2 { self.grid.freq_slot(m[1])? } else { 0 };
        Some(self.values[self.grid.flatten(i, j)])
    }

    /// `|u^|^2` rearranged so that index `k` holds lattice frequency
    /// `(k - N/2) / (2L)` on each axis; a density on the "frequency box".
    pub fn centered_density(&self) -> Vec<f64> {
        let n = self.grid.n();
        let h = n / 2;
        let mut out = vec![0.0; self.values.len()];
        for (idx, z) in self.values.iter().enumerate() {
            let [i, j] = self.grid.unflatten(idx);
            let ci = (i + h) % n;
            let cj = if self.grid.dim() == 2 { (j + h) % n } else { 0 };
            out[self.grid.flatten(ci, cj)] = z.norm_sqr();
        }
        out
    }
}

pub fn fourier_transform(u: &ComplexField) -> FourierField {
    let grid = *u.grid();
    let mut data = u.values().to_vec();
    dft_in_place(&grid, &mut data, false);
    let vol = grid.cell_volume();
    for (idx, z) in data.iter_mut().enumerate() {
        *z *= vol * lattice_phase(&grid, idx);
    }
    FourierField { grid, values: data }
}

pub fn inverse_fourier_transform(f: &FourierField) -> ComplexField {
    let grid = f.grid;
    let vol = grid.cell_volume();
    let mut data: Vec<Complex64> =
        f.values.iter().enumerate().map(|(idx, z)| z * (lattice_phase(&grid, idx) / vol)).collect();
    idft_normalized(&grid, &mut data);
    ComplexField::from_values(grid, data).expect("length preserved")
}

/// Evaluates a symbol on the lattice, rejecting non-finite values.
pub fn symbol_on_lattice(
    grid: &Grid,
    m: impl Fn([f64; 2]) -> Complex64,
) -> Result<Vec<Complex64>> {
    (0..grid.len())
        .map(|idx| {
            let xi = grid.frequency(idx);
            let v = m(xi);
            if v.re.is_finite() && v.im.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFiniteMultiplier { xi })
            }
        })
        .collect()
}

/// `u -> F^{-1}[ symbol * F u ]` with a symbol already laid out in slot order.
pub fn apply_symbol(u: &ComplexField, symbol: &[Complex64]) -> ComplexField {
    let grid = *u.grid();
    let mut data = u.values().to_vec();
    dft_in_place(&grid, &mut data, false);
    data.iter_mut().zip(symbol).for_each(|(z, m)| *z *= m);
    idft_normalized(&grid, &mut data);
    ComplexField::from_values(grid, data).expect("length preserved")
}

pub fn apply_multiplier(
    u: &ComplexField,
    m: impl Fn([f64; 2]) -> Complex64,
) -> Result<ComplexField> {
    let symbol = symbol_on_lattice(u.grid(), m)?;
    Ok(apply_symbol(u, &symbol))
}

/// Signed frequency used by odd-order derivatives: the unpaired Nyquist mode
/// is dropped so derivatives of real fields stay real.
#[inline]
fn odd_freq(grid: &Grid, k: usize) -> f64 {
    if k == grid.n() / 2 {
        0.0
    } else {
        grid.freq(k)
    }
}

/// Symbol of `omega . grad`, i.e. `2 pi i omega.xi`.
pub fn directional_derivative_symbol(grid: &Grid, omega: [f64; 2]) -> Vec<Complex64> {
    (0..grid.len())
        .map(|idx| {
            let [i, j] = grid.unflatten(idx);
            let mut s = omega[0] * odd_freq(grid, i);
            if grid.dim() == 2 {
                s += omega[1] * odd_freq(grid, j);
            }
            Complex64::new(0.0, 2.0 * PI * s)
        })
        .collect()
}

pub fn partial(u: &ComplexField, axis: usize) -> ComplexField {
    let mut omega = [0.0; 2];
    omega[axis] = 1.0;
    apply_symbol(u, &directional_derivative_symbol(u.grid(), omega))
}

pub fn directional_derivative(u: &ComplexField, omega: [f64; 2]) -> ComplexField {
    apply_symbol(u, &directional_derivative_symbol(u.grid(), omega))
}

/// All first partials of `u`, one per axis.
pub fn gradient(u: &ComplexField) -> Vec<ComplexField> {
    (0..u.grid().dim()).map(|a| partial(u, a)).collect()
}

pub fn laplacian(u: &ComplexField) -> ComplexField {
    let g = *u.grid();
    let symbol: Vec<Complex64> = (0..g.len())
        .map(|idx| {
            let r = g.frequency_norm(idx);
            Complex64::new(-4.0 * PI * PI * r * r, 0.0)
        })
        .collect();
    apply_symbol(u, &symbol)
}

/// Real-valued derivative of a real sample array on `grid`.
pub fn partial_real(grid: &Grid, f: &[f64], axis: usize) -> Vec<f64> {
    let u = real_field(grid, f);
    partial(&u, axis).values().iter().map(|z| z.re).collect()
}

pub(crate) fn real_field(grid: &Grid, f: &[f64]) -> ComplexField {
    ComplexField::from_values(*grid, f.iter().map(|&x| Complex64::new(x, 0.0)).collect())
        .expect("length matches grid")
}

#[derive(Debug, Clone)]
pub struct FractionalDerivative {
    pub field: ComplexField,
    /// Set when `s < 0` forced the `xi = 0` mode to zero.
    pub zero_mode_removed: bool,
    /// The discarded `u^(0)` (continuous normalisation).
    pub removed_zero_mode: Complex64,
}

/// `u^ -> (2 pi |xi|)^s u^`; for `s < 0` the zero mode is mapped to 0.
pub fn fractional_derivative(u: &ComplexField, s: f64) -> FractionalDerivative {
    let g = *u.grid();
    let symbol: Vec<Complex64> = (0..g.len())
        .map(|idx| {
            let r = 2.0 * PI * g.frequency_norm(idx);
            let v = if r == 0.0 {
                if s == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                r.powf(s)
            };
            Complex64::new(v, 0.0)
        })
        .collect();
    let (zero_mode_removed, removed_zero_mode) = if s < 0.0 {
        let m0: Complex64 = u.values().iter().sum::<Complex64>() * g.cell_volume();
        (true, m0)
    } else {
        (false, Complex64::new(0.0, 0.0))
    };
    FractionalDerivative { field: apply_symbol(u, &symbol), zero_mode_removed, removed_zero_mode }
}

/// `|| |grad|^s u ||_{L^2}^2 = int (2 pi |xi|)^{2s} |u^|^2 dxi`.
pub fn homogeneous_sobolev_sq(u: &ComplexField, s: f64) -> f64 {
    let f = fourier_transform(u);
    let g = *u.grid();
    f.values()
        .iter()
        .enumerate()
        .map(|(idx, z)| {
            let r = 2.0 * PI * g.frequency_norm(idx);
            let w = if r == 0.0 {
                if s == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                r.powf(2.0 * s)
            };
            w * z.norm_sqr()
        })
        .sum::<f64>()
        * g.frequency_cell_volume()
}

/// Same as [`homogeneous_sobolev_sq`] for a real sample array.
pub fn homogeneous_sobolev_sq_real(grid: &Grid, f: &[f64], s: f64) -> f64 {
    homogeneous_sobolev_sq(&real_field(grid, f), s)
}

#[derive(Debug, Clone)]
pub struct LpProjection {
    pub field: ComplexField,
    /// No lattice frequency fell in the annulus.
    pub empty: bool,
    /// The annulus extends past the largest lattice frequency.
    pub truncated: bool,
}

fn project_by(u: &ComplexField, keep: impl Fn(f64) -> bool) -> (ComplexField, usize) {
    let g = *u.grid();
    let mut kept = 0;
    let symbol: Vec<Complex64> = (0..g.len())
        .map(|idx| {
            if keep(g.frequency_norm(idx)) {
                kept += 1;
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    (apply_symbol(u, &symbol), kept)
}

/// Sharp dyadic projection onto `2^j <= |xi| < 2^{j+1}`.
pub fn lp_project(u: &ComplexField, j: i32) -> LpProjection {
    let lo = 2f64.powi(j);
    let hi = 2.0 * lo;
    let (field, kept) = project_by(u, |r| r >= lo && r < hi);
    let truncated = hi > u.grid().nyquist();
    if kept == 0 {
        log::warn!("dyadic annulus [{lo}, {hi}) holds no lattice frequency; projection is zero");
    }
    LpProjection { field, empty: kept == 0, truncated }
}

/// Projection onto `|xi| < 2^j`, the block left over by `lp_project(.., j' >= j)`.
pub fn lp_low_block(u: &ComplexField, j: i32) -> ComplexField {
    let hi = 2f64.powi(j);
    project_by(u, |r| r < hi).0
}

/// Smallest `j_max` such that every lattice frequency satisfies `|xi| < 2^{j_max + 1}`.
pub fn lp_top_index(grid: &Grid) -> i32 {
    grid.max_frequency().log2().floor() as i32
}

/// `u^(xi) -> u^(xi - xi0)` for a lattice vector `xi0`.
pub fn shift_frequency(u: &ComplexField, xi0: &[f64]) -> Result<ComplexField> {
    let g = *u.grid();
    let mut padded = [0.0; 2];
    padded[..xi0.len().min(2)].copy_from_slice(&xi0[..xi0.len().min(2)]);
    if g.lattice_indices(xi0).is_none() {
        return Err(Error::OffLattice { xi: padded });
    }
    Ok(ComplexField::from_values(
        g,
        u.values()
            .iter()
            .enumerate()
            .map(|(idx, z)| {
                let x = g.point(idx);
                let phase = 2.0 * PI * (x[0] * padded[0] + x[1] * padded[1]);
                z * Complex64::from_polar(1.0, phase)
            })
            .collect(),
    )
    .expect("length preserved"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: Grid, seed: u64) -> ComplexField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexField::from_values(
            grid,
            (0..grid.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
        )
        .unwrap()
    }

    fn plane_wave(grid: Grid, m: [i64; 2]) -> (ComplexField, [f64; 2]) {
        let xi = [m[0] as f64 * grid.dxi(), m[1] as f64 * grid.dxi()];
        (ComplexField::from_fn(grid, |x| Complex64::from_polar(1.0, 2.0 * PI * (x[0] * xi[0] + x[1] * xi[1]))), xi)
    }

    #[test]
    fn transform_round_trip() {
        for (dim, n) in [(1, 64), (2, 32)] {
            let g = Grid::new(dim, n, 2.5).unwrap();
            let u = random_field(g, 7);
            let back = inverse_fourier_transform(&fourier_transform(&u));
            let rel = u.max_abs_diff(&back) / u.sup_norm();
            assert!(rel < 1e-12, "dim {dim}: {rel}");
        }
    }

    #[test]
    fn parseval() {
        let g = Grid::new(2, 32, 3.0).unwrap();
        let u = random_field(g, 3);
        let f = fourier_transform(&u);
        assert!((u.mass() - f.mass()).abs() / u.mass() < 1e-10);
    }

    #[test]
    fn gaussian_transform_matches_closed_form() {
        // e^{-pi x^2} is its own transform under this convention
        let g = Grid::new(1, 128, 8.0).unwrap();
        let u = ComplexField::from_real(g, |x| (-PI * x[0] * x[0]).exp());
        let f = fourier_transform(&u);
        for (idx, z) in f.values().iter().enumerate() {
            let xi = g.freq(idx);
            assert!((z - Complex64::new((-PI * xi * xi).exp(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn identity_multiplier() {
        let g = Grid::new(1, 32, 1.0).unwrap();
        let u = random_field(g, 1);
        let v = apply_multiplier(&u, |_| Complex64::new(1.0, 0.0)).unwrap();
        assert!(u.max_abs_diff(&v) < 1e-13);
    }

    #[test]
    fn derivative_symbol_on_plane_wave() {
        let g = Grid::new(2, 32, 2.0).unwrap();
        let (u, xi) = plane_wave(g, [3, -2]);
        let v = apply_multiplier(&u, |k| Complex64::new(0.0, 2.0 * PI * k[0])).unwrap();
        let expect = u.scaled(Complex64::new(0.0, 2.0 * PI * xi[0]));
        assert!(v.max_abs_diff(&expect) < 1e-11);
    }

    #[test]
    fn non_finite_multiplier_is_rejected() {
        let g = Grid::new(1, 16, 1.0).unwrap();
        let u = random_field(g, 2);
        let r = apply_multiplier(&u, |k| Complex64::new(1.0 / k[0].abs(), 0.0));
        assert!(matches!(r, Err(Error::NonFiniteMultiplier { .. })));
    }

    #[test]
    fn free_propagator_matches_gaussian_oracle() {
        // u0 = e^{-pi x^2}: u(t) = (1 + 4 pi i t)^{-1/2} exp(-pi x^2 / (1 + 4 pi i t))
        let g = Grid::new(1, 256, 12.0).unwrap();
        let u0 = ComplexField::from_real(g, |x| (-PI * x[0] * x[0]).exp());
        let t = 0.3;
        let v = apply_multiplier(&u0, |k| Complex64::from_polar(1.0, -4.0 * PI * PI * t * k[0] * k[0])).unwrap();
        let a = Complex64::new(1.0, 4.0 * PI * t);
        let exact = ComplexField::from_fn(g, |x| (-(PI * x[0] * x[0]) / a).exp() / a.sqrt());
        assert!(v.max_abs_diff(&exact) < 1e-8);
    }

    #[test]
    fn fractional_identity_and_eigenfunction() {
        let g = Grid::new(2, 32, 2.0).unwrap();
        let u = random_field(g, 9);
        let d0 = fractional_derivative(&u, 0.0);
        assert!(d0.field.max_abs_diff(&u) < 1e-12);
        let (w, xi) = plane_wave(g, [4, 1]);
        let d2 = fractional_derivative(&w, 2.0);
        let k = 2.0 * PI * xi[0].hypot(xi[1]);
        assert!(d2.field.max_abs_diff(&w.scaled(Complex64::new(k * k, 0.0))) < 1e-9);
    }

    #[test]
    fn fractional_round_trip_on_mean_zero() {
        let g = Grid::new(2, 32, 2.0).unwrap();
        let mut u = random_field(g, 4);
        let mean: Complex64 = u.values().iter().sum::<Complex64>() / g.len() as f64;
        u.values_mut().iter_mut().for_each(|z| *z -= mean);
        let up = fractional_derivative(&u, 0.5);
        assert!(!up.zero_mode_removed);
        let down = fractional_derivative(&up.field, -0.5);
        assert!(down.zero_mode_removed);
        assert!(down.field.max_abs_diff(&u) / u.sup_norm() < 1e-10);
    }

    #[test]
    fn lp_single_plane_wave() {
        let g = Grid::new(2, 64, 2.0).unwrap();
        // |xi| = 20 / 4 = 5 lies in [4, 8)
        let (u, _) = plane_wave(g, [12, 16]);
        let p = lp_project(&u, 2);
        assert!(p.field.max_abs_diff(&u) < 1e-12);
        for j in [-1, 0, 1, 3] {
            assert!(lp_project(&u, j).field.sup_norm() < 1e-12);
        }
    }

    #[test]
    fn lp_partition_of_mass() {
        let g = Grid::new(2, 32, 2.0).unwrap();
        let u = random_field(g, 11);
        let j0 = -2;
        let mut total = lp_low_block(&u, j0).mass();
        let mut sum = lp_low_block(&u, j0);
        for j in j0..=lp_top_index(&g) {
            let p = lp_project(&u, j);
            total += p.field.mass();
            sum = &sum + &p.field;
        }
        assert!((total - u.mass()).abs() / u.mass() < 1e-10);
        assert!(sum.max_abs_diff(&u) < 1e-12);
    }

    #[test]
    fn lp_outside_lattice_is_empty() {
        let g = Grid::new(1, 16, 1.0).unwrap();
        let u = random_field(g, 5);
        let p = lp_project(&u, 10);
        assert!(p.empty && p.truncated);
        assert_eq!(p.field.sup_norm(), 0.0);
    }

    #[test]
    fn shift_relocates_peak_and_keeps_mass() {
        let g = Grid::new(2, 256, 2.0).unwrap();
        let u = ComplexField::from_real(g, |x| (-PI * (x[0] * x[0] + x[1] * x[1])).exp());
        assert!(shift_frequency(&u, &[0.0, 0.0]).unwrap().max_abs_diff(&u) < 1e-15);
        let v = shift_frequency(&u, &[16.0, 0.0]).unwrap();
        assert!((v.mass() - u.mass()).abs() / u.mass() < 1e-12);
        let f = fourier_transform(&v);
        let (peak, _) = f
            .values()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .unwrap();
        assert_eq!(g.frequency(peak), [16.0, 0.0], "{:?}", f.values()[peak]);
        assert!(matches!(shift_frequency(&u, &[0.1, 0.0]), Err(Error::OffLattice { .. })));
    }

    #[test]
    fn multiplier_composition() {
        let g = Grid::new(1, 64, 3.0).unwrap();
        let u = random_field(g, 13);
        let m1 = |k: [f64; 2]| Complex64::new((-k[0] * k[0]).exp(), 0.3 * k[0]);
        let m2 = |k: [f64; 2]| Complex64::from_polar(1.0, k[0]);
        let two = apply_multiplier(&apply_multiplier(&u, m1).unwrap(), m2).unwrap();
        let one = apply_multiplier(&u, |k| m1(k) * m2(k)).unwrap();
        assert!(two.max_abs_diff(&one) < 1e-12);
    }

    #[test]
    fn lp_projections_are_orthogonal_and_idempotent() {
        let g = Grid::new(2, 32, 2.0).unwrap();
        let u = random_field(g, 17);
        let p1 = lp_project(&u, 0).field;
        let p2 = lp_project(&u, 1).field;
        assert!(p1.inner(&p2).norm() / u.mass() < 1e-10);
        let pp = lp_project(&p1, 0).field;
        assert!(pp.max_abs_diff(&p1) < 1e-12);
    }
}
