//! Directional marginals `R(f)(s, omega) = int_{x.omega = s} f` and their
//! Fourier slices.
//!
//! Exact directions (axes, and diagonals in 2D) are computed by summing grid
//! lines. Other directions go through an interpolated Fourier slice and
//! carry `interpolated = true`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Direction, ExactDirection, Grid};
use crate::spectral::dft_in_place;

/// Uniformly sampled function of one variable tied to a direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile1D<T = f64> {
    pub omega: Direction,
    /// First abscissa.
    pub s0: f64,
    /// Sample spacing, positive.
    pub ds: f64,
    pub values: Vec<T>,
    pub interpolated: bool,
}

impl<T: Copy> Profile1D<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn s(&self, k: usize) -> f64 {
        self.s0 + k as f64 * self.ds
    }

    pub fn abscissae(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.s(k)).collect()
    }
}

impl Profile1D<f64> {
    /// `int R ds` by the rectangle rule.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.ds
    }

    /// `int g(s) e^{-2 pi i s rho} ds` at each `rho`, by direct summation.
    pub fn fourier_at(&self, rhos: &[f64]) -> Vec<Complex64> {
        rhos.par_iter()
            .map(|&rho| {
                self.values
                    .iter()
                    .enumerate()
                    .map(|(k, &g)| g * Complex64::from_polar(1.0, -2.0 * PI * self.s(k) * rho))
                    .sum::<Complex64>()
                    * self.ds
            })
            .collect()
    }

    /// Two-column text `(s, value)` with a header naming the direction.
    pub fn to_text(&self) -> String {
        let mut out = format!("# omega = {}\n# interpolated = {}\n", self.omega.label(), self.interpolated);
        for (k, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{:.17e} {:.17e}", self.s(k), v);
        }
        out
    }

    pub fn export(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

impl Profile1D<Complex64> {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# omega = {}\n# interpolated = {}\n# columns: rho re im\n",
            self.omega.label(),
            self.interpolated
        );
        for (k, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{:.17e} {:.17e} {:.17e}", self.s(k), v.re, v.im);
        }
        out
    }
}

fn check_len(grid: &Grid, f: &[f64]) -> Result<()> {
    if f.len() != grid.len() {
        return Err(Error::Format(format!("density has {} samples, grid has {}", f.len(), grid.len())));
    }
    Ok(())
}

fn check_dims(grid: &Grid, omega: &Direction) -> Result<()> {
    if grid.dim() != omega.dim() {
        return Err(Error::Dimension { expected: format!("{}", grid.dim()), got: omega.dim() });
    }
    Ok(())
}

/// Line-sum layout of an exact direction: `s_m = s0 + m ds` and the bin of
/// each grid index.
#[derive(Debug, Clone, Copy)]
pub struct LineLayout {
    pub exact: ExactDirection,
    pub bins: usize,
    pub s0: f64,
    pub ds: f64,
    /// Line-measure weight: `R(s_m) = weight * sum_{bin = m} f`.
    pub weight: f64,
    n: usize,
    dim: usize,
}

impl LineLayout {
    pub fn new(grid: &Grid, omega: &Direction) -> Result<Self> {
        check_dims(grid, omega)?;
        let exact = omega.exact().ok_or(Error::InexactDirection { omega: omega.components() })?;
        let n = grid.n();
        let l = grid.half_length();
        let dx = grid.dx();
        let dim = grid.dim();
        let layout = match exact {
            ExactDirection::Axis { sign, .. } => {
                // s = sign * x_k; for sign < 0 bins run in reverse
                let s0 = if sign > 0 { -l } else { -l + dx };
                let weight = if dim == 2 { dx } else { 1.0 };
                LineLayout { exact, bins: n, s0, ds: dx, weight, n, dim }
            }
            ExactDirection::Diagonal { a, b } => {
                // a x_i = -L + (delta_a + bin_i) dx with delta = 1 for a reversed axis
                let delta = (a < 0) as usize as f64 + (b < 0) as usize as f64;
                let s0 = (-2.0 * l + delta * dx) / std::f64::consts::SQRT_2;
                LineLayout {
                    exact,
                    bins: 2 * n - 1,
                    s0,
                    ds: dx / std::f64::consts::SQRT_2,
                    weight: std::f64::consts::SQRT_2 * dx,
                    n,
                    dim,
                }
            }
        };
        Ok(layout)
    }

    /// Bin of grid point `(i, j)`.
    #[inline]
    pub fn bin(&self, i: usize, j: usize) -> usize {
        let n = self.n;
        match self.exact {
            ExactDirection::Axis { axis, sign } => {
                let k = if axis == 0 || self.dim == 1 { i } else { j };
                if sign > 0 {
                    k
                } else {
                    n - 1 - k
                }
            }
            ExactDirection::Diagonal { a, b } => {
                let ai = if a > 0 { i } else { n - 1 - i };
                let bj = if b > 0 { j } else { n - 1 - j };
                ai + bj
            }
        }
    }

    pub fn s(&self, m: usize) -> f64 {
        self.s0 + m as f64 * self.ds
    }

    /// Bins of every flat grid index.
    pub fn bin_map(&self, grid: &Grid) -> Vec<usize> {
        (0..grid.len())
            .map(|idx| {
                let [i, j] = grid.unflatten(idx);
                self.bin(i, j)
            })
            .collect()
    }
}

/// Radon transform along an exact direction.
pub fn radon(grid: &Grid, f: &[f64], omega: &Direction) -> Result<Profile1D> {
    check_len(grid, f)?;
    let lay = LineLayout::new(grid, omega)?;
    let mut values = vec![0.0; lay.bins];
    for (idx, &v) in f.iter().enumerate() {
        let [i, j] = grid.unflatten(idx);
        values[lay.bin(i, j)] += v;
    }
    values.iter_mut().for_each(|v| *v *= lay.weight);
    Ok(Profile1D { omega: *omega, s0: lay.s0, ds: lay.ds, values, interpolated: false })
}

/// Same for complex densities (used for `R(u conj v)`).
pub fn radon_complex(grid: &Grid, f: &[Complex64], omega: &Direction) -> Result<Profile1D<Complex64>> {
    let lay = LineLayout::new(grid, omega)?;
    if f.len() != grid.len() {
        return Err(Error::Format("density length does not match grid".into()));
    }
    let mut values = vec![Complex64::new(0.0, 0.0); lay.bins];
    for (idx, &v) in f.iter().enumerate() {
        let [i, j] = grid.unflatten(idx);
        values[lay.bin(i, j)] += v;
    }
    values.iter_mut().for_each(|v| *v *= lay.weight);
    Ok(Profile1D { omega: *omega, s0: lay.s0, ds: lay.ds, values, interpolated: false })
}

/// Continuous-normalised 2D (or 1D) transform of a real density, in slot order.
fn density_transform(grid: &Grid, f: &[f64]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    dft_in_place(grid, &mut data, false);
    let vol = grid.cell_volume();
    for (idx, z) in data.iter_mut().enumerate() {
        let [i, j] = grid.unflatten(idx);
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        *z *= vol * sign;
    }
    data
}

/// Options for the interpolated slice path.
#[derive(Debug, Clone, Copy)]
pub struct SliceOptions {
    /// Zero-padding factor per axis; a power of two.
    pub padding: usize,
}

impl Default for SliceOptions {
    fn default() -> Self {
        Self { padding: 4 }
    }
}

/// `f^(rho omega)` along the ray. Exact directions return the lattice slice,
/// ordered by increasing `rho`; other directions interpolate bilinearly in a
/// zero-padded transform and are flagged.
pub fn central_slice(grid: &Grid, f: &[f64], omega: &Direction, opts: SliceOptions) -> Result<Profile1D<Complex64>> {
    check_len(grid, f)?;
    check_dims(grid, omega)?;
    match omega.exact() {
        Some(ex) => Ok(lattice_slice(grid, &density_transform(grid, f), omega, ex)),
        None => {
            let padded = PaddedSpectrum::new(grid, f, opts.padding)?;
            Ok(padded.slice(omega))
        }
    }
}

fn lattice_slice(grid: &Grid, fhat: &[Complex64], omega: &Direction, ex: ExactDirection) -> Profile1D<Complex64> {
    let n = grid.n() as i64;
    let dxi = grid.dxi();
    let at = |m: [i64; 2]| -> Option<Complex64> {
        let i = grid.freq_slot(m[0])?;
        let j = if grid.dim() == 2 { grid.freq_slot(m[1])? } else { 0 };
        Some(fhat[grid.flatten(i, j)])
    };
    match ex {
        ExactDirection::Axis { axis, sign } => {
            // rho e_axis * sign; rho runs over the signed lattice
            let ms: Vec<i64> = if sign > 0 { (-n / 2..n / 2).collect() } else { (-n / 2 + 1..=n / 2).collect() };
            let values = ms
                .iter()
                .map(|&m| {
                    let mut idx = [0i64; 2];
                    idx[if grid.dim() == 1 { 0 } else { axis }] = sign as i64 * m;
                    at(idx).expect("in range")
                })
                .collect();
            Profile1D { omega: *omega, s0: ms[0] as f64 * dxi, ds: dxi, values, interpolated: false }
        }
        ExactDirection::Diagonal { a, b } => {
            // rho omega = m (a, b) dxi with rho = sqrt 2 m dxi
            let ms: Vec<i64> = (-n / 2..n / 2).filter(|&m| at([a as i64 * m, b as i64 * m]).is_some()).collect();
            let values = ms.iter().map(|&m| at([a as i64 * m, b as i64 * m]).unwrap()).collect();
            let step = std::f64::consts::SQRT_2 * dxi;
            Profile1D { omega: *omega, s0: ms[0] as f64 * step, ds: step, values, interpolated: false }
        }
    }
}

/// Transform of a zero-padded density, for bilinear evaluation off lattice.
#[derive(Debug, Clone)]
pub struct PaddedSpectrum {
    grid: Grid,
    base: Grid,
    fhat: Vec<Complex64>,
}

impl PaddedSpectrum {
    pub fn new(base: &Grid, f: &[f64], padding: usize) -> Result<Self> {
        if base.dim() != 2 {
            return Err(Error::Dimension { expected: "2".into(), got: base.dim() });
        }
        if padding == 0 || !padding.is_power_of_two() {
            return Err(Error::Precondition(format!("padding must be a power of two, got {padding}")));
        }
        let grid = Grid::new(2, base.n() * padding, base.half_length() * padding as f64)?;
        let offset = (grid.n() - base.n()) / 2;
        let mut big = vec![0.0; grid.len()];
        for (idx, &v) in f.iter().enumerate() {
            let [i, j] = base.unflatten(idx);
            big[grid.flatten(i + offset, j + offset)] = v;
        }
        Ok(Self { grid, base: *base, fhat: density_transform(&grid, &big) })
    }

    pub fn padded_grid(&self) -> &Grid {
        &self.grid
    }

    /// Bilinear interpolation of `f^` at an arbitrary frequency; 0 outside
    /// the padded lattice.
    pub fn eval(&self, xi: [f64; 2]) -> Complex64 {
        let h = self.grid.dxi();
        let half = (self.grid.n() / 2) as i64;
        let (a, b) = (xi[0] / h, xi[1] / h);
        let (i0, j0) = (a.floor() as i64, b.floor() as i64);
        let (ta, tb) = (a - i0 as f64, b - j0 as f64);
        let get = |m: i64, k: i64| -> Complex64 {
            if m < -half || m >= half || k < -half || k >= half {
                return Complex64::new(0.0, 0.0);
            }
            let i = self.grid.freq_slot(m).unwrap();
            let j = self.grid.freq_slot(k).unwrap();
            self.fhat[self.grid.flatten(i, j)]
        };
        get(i0, j0) * ((1.0 - ta) * (1.0 - tb))
            + get(i0 + 1, j0) * (ta * (1.0 - tb))
            + get(i0, j0 + 1) * ((1.0 - ta) * tb)
            + get(i0 + 1, j0 + 1) * (ta * tb)
    }

    /// Slice with the padded lattice spacing, `|rho|` up to the base Nyquist.
    pub fn slice(&self, omega: &Direction) -> Profile1D<Complex64> {
        self.slice_with_step(omega, self.grid.dxi())
    }

    /// Slice sampled every `h` in `rho`, `|rho|` up to the base Nyquist.
    pub fn slice_with_step(&self, omega: &Direction, h: f64) -> Profile1D<Complex64> {
        let kmax = (self.base.nyquist() / h).floor() as i64;
        let w = omega.components();
        let values = (-kmax..=kmax)
            .map(|k| {
                let rho = k as f64 * h;
                self.eval([rho * w[0], rho * w[1]])
            })
            .collect();
        Profile1D { omega: *omega, s0: -(kmax as f64) * h, ds: h, values, interpolated: true }
    }
}

/// Radon transform along any 2D direction via the interpolated slice and a
/// direct inverse 1D transform; samples `s` with the base grid spacing.
pub fn radon_interpolated(grid: &Grid, f: &[f64], omega: &Direction, opts: SliceOptions) -> Result<Profile1D> {
    check_len(grid, f)?;
    check_dims(grid, omega)?;
    let slice = PaddedSpectrum::new(grid, f, opts.padding)?.slice(omega);
    let dx = grid.dx();
    let reach = std::f64::consts::SQRT_2 * grid.half_length();
    let m = (reach / dx).floor() as i64;
    let values = (-m..=m)
        .into_par_iter()
        .map(|k| {
            let s = k as f64 * dx;
            slice
                .values
                .iter()
                .enumerate()
                .map(|(q, z)| (z * Complex64::from_polar(1.0, 2.0 * PI * s * slice.s(q))).re)
                .sum::<f64>()
                * slice.ds
        })
        .collect();
    Ok(Profile1D { omega: *omega, s0: -(m as f64) * dx, ds: dx, values, interpolated: true })
}

/// Constant `C` in `int_{S^1} int_R |rho| 2 pi |f^(rho omega)|^2 = C ||f||^2`
/// for unnormalised arclength on `S^1`.
pub const PLANCHEREL_CONSTANT_2D: f64 = 4.0 * PI;

#[derive(Debug, Clone, PartialEq)]
pub struct PlancherelReport {
    /// `|| |d_s|^{1/2} R f ||^2_{L^2(ds d omega)}`.
    pub lhs: f64,
    /// `||f||^2_{L^2}`.
    pub norm_sq: f64,
    /// `lhs / norm_sq`.
    pub measured_constant: f64,
    /// `|lhs / C - norm_sq| / norm_sq` with the pinned `C`.
    pub residual: f64,
    pub directions: usize,
    pub padding: usize,
    pub quadrature: &'static str,
}

/// Padding of the spectrum the Plancherel slices interpolate in.
pub const PLANCHEREL_PADDING: usize = 8;

/// `rho` step of the Plancherel quadrature in units of the base `dxi`. It is
/// fixed separately from the padding so that the interpolation error stays
/// below the `|rho|` quadrature error, which is the same in every direction.
pub const PLANCHEREL_RHO_STEP: f64 = 0.25;

/// Relative Plancherel residual for a real 2D density using `n_omega`
/// uniform angles (trapezoidal on the periodic circle) and interpolated
/// slices sampled every `PLANCHEREL_RHO_STEP * dxi`. Returns residual 0 for
/// `f = 0`.
pub fn radon_plancherel(grid: &Grid, f: &[f64], n_omega: usize, opts: SliceOptions, constant: f64) -> Result<PlancherelReport> {
    check_len(grid, f)?;
    if grid.dim() != 2 {
        return Err(Error::Dimension { expected: "2".into(), got: grid.dim() });
    }
    if n_omega == 0 {
        return Err(Error::Precondition("need at least one direction".into()));
    }
    let norm_sq = f.iter().map(|x| x * x).sum::<f64>() * grid.cell_volume();
    let quadrature = "uniform angles, trapezoidal in theta and rho";
    if norm_sq == 0.0 {
        return Ok(PlancherelReport {
            lhs: 0.0,
            norm_sq: 0.0,
            measured_constant: 0.0,
            residual: 0.0,
            directions: n_omega,
            padding: opts.padding,
            quadrature,
        });
    }
    let spec = PaddedSpectrum::new(grid, f, opts.padding)?;
    let dtheta = 2.0 * PI / n_omega as f64;
    let lhs: f64 = (0..n_omega)
        .into_par_iter()
        .map(|k| {
            let s = spec.slice_with_step(&Direction::from_angle(k as f64 * dtheta), PLANCHEREL_RHO_STEP * grid.dxi());
            s.values
                .iter()
                .enumerate()
                .map(|(q, z)| 2.0 * PI * s.s(q).abs() * z.norm_sqr())
                .sum::<f64>()
                * s.ds
        })
        .sum::<f64>()
        * dtheta;
    Ok(PlancherelReport {
        lhs,
        norm_sq,
        measured_constant: lhs / norm_sq,
        residual: (lhs / constant - norm_sq).abs() / norm_sq,
        directions: n_omega,
        padding: opts.padding,
        quadrature,
    })
}

/// [`radon_plancherel`] with the pinned constant, returning the residual only.
pub fn radon_plancherel_residual(grid: &Grid, f: &[f64], n_omega: usize) -> Result<f64> {
    Ok(radon_plancherel(grid, f, n_omega, SliceOptions { padding: PLANCHEREL_PADDING }, PLANCHEREL_CONSTANT_2D)?.residual)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian2(grid: &Grid, sigma: f64) -> Vec<f64> {
        (0..grid.len())
            .map(|idx| {
                let [x, y] = grid.point(idx);
                (-PI * (x * x + y * y) / (sigma * sigma)).exp()
            })
            .collect()
    }

    #[test]
    fn constant_density_on_axis() {
        let g = Grid::new(2, 16, 1.5).unwrap();
        let f = vec![2.0; g.len()];
        let r = radon(&g, &f, &Direction::axis(2, 0)).unwrap();
        assert!(r.values.iter().all(|v| (v - 2.0 * 3.0).abs() < 1e-12));
    }

    #[test]
    fn separable_density() {
        let g = Grid::new(2, 32, 3.0).unwrap();
        let f: Vec<f64> = (0..g.len())
            .map(|idx| {
                let [x, y] = g.point(idx);
                (x.sin() + 2.0) * (-y * y).exp()
            })
            .collect();
        let r = radon(&g, &f, &Direction::axis(2, 0)).unwrap();
        let hint: f64 = (0..g.n()).map(|j| (-g.coord(j).powi(2)).exp()).sum::<f64>() * g.dx();
        for k in 0..g.n() {
            assert!((r.values[k] - (g.coord(k).sin() + 2.0) * hint).abs() < 1e-12);
            assert!((r.s(k) - g.coord(k)).abs() < 1e-14);
        }
    }

    #[test]
    fn mass_compatibility_and_abscissae() {
        let g = Grid::new(2, 32, 3.0).unwrap();
        let f: Vec<f64> = (0..g.len()).map(|k| ((k * 7919) % 13) as f64).collect();
        let total = f.iter().sum::<f64>() * g.cell_volume();
        let dirs = [Direction::axis(2, 0), Direction::axis(2, 1), Direction::axis(2, 0).flipped()];
        for d in dirs.iter().chain(Direction::exact_2d().iter()).chain([Direction::diagonal(-1, -1), Direction::diagonal(-1, 1)].iter()) {
            let r = radon(&g, &f, d).unwrap();
            assert!((r.integral() - total).abs() < 1e-10 * total, "{}", d.label());
            // each bin's s equals x.omega for one of its grid points
            let lay = LineLayout::new(&g, d).unwrap();
            for idx in [0, 5, 77, g.len() - 1] {
                let [i, j] = g.unflatten(idx);
                let s = d.dot(&g.point(idx));
                assert!((lay.s(lay.bin(i, j)) - s).abs() < 1e-12, "{} {idx}", d.label());
            }
        }
    }

    #[test]
    fn one_dimensional_radon_is_the_density() {
        let g = Grid::new(1, 16, 2.0).unwrap();
        let f: Vec<f64> = (0..16).map(|k| k as f64).collect();
        let r = radon(&g, &f, &Direction::axis(1, 0)).unwrap();
        assert_eq!(r.values, f);
        let back = radon(&g, &f, &Direction::axis(1, 0).flipped()).unwrap();
        assert_eq!(back.values[0], 15.0);
        assert!((back.s(0) + g.coord(15)).abs() < 1e-14);
    }

    #[test]
    fn gaussian_marginal_matches_closed_form_on_all_exact_directions() {
        let g = Grid::new(2, 128, 6.0).unwrap();
        let f = gaussian2(&g, 1.0);
        for d in Direction::exact_2d() {
            let r = radon(&g, &f, &d).unwrap();
            for k in 0..r.len() {
                let s = r.s(k);
                if s.abs() < 4.0 {
                    assert!((r.values[k] - (-PI * s * s).exp()).abs() < 1e-8, "{} s={s}", d.label());
                }
            }
        }
    }

    #[test]
    fn inexact_direction_is_rejected() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let f = vec![1.0; g.len()];
        assert!(matches!(radon(&g, &f, &Direction::from_angle(0.4)), Err(Error::InexactDirection { .. })));
    }

    #[test]
    fn slice_theorem_exact_directions() {
        let g = Grid::new(2, 32, 2.0).unwrap();
        let f: Vec<f64> = (0..g.len())
            .map(|idx| {
                let [x, y] = g.point(idx);
                (-(x - 0.3).powi(2) - 2.0 * (y + 0.1).powi(2)).exp() * (1.0 + x * y)
            })
            .collect();
        for d in Direction::exact_2d().iter().chain([Direction::axis(2, 1).flipped(), Direction::diagonal(-1, 1)].iter()) {
            let slice = central_slice(&g, &f, d, SliceOptions::default()).unwrap();
            assert!(!slice.interpolated);
            let r = radon(&g, &f, d).unwrap();
            let ft = r.fourier_at(&slice.abscissae());
            let err = ft.iter().zip(&slice.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10, "{}: {err}", d.label());
        }
    }

    #[test]
    fn slice_of_gaussian_and_hermitian_symmetry() {
        let g = Grid::new(2, 64, 4.0).unwrap();
        let f = gaussian2(&g, 1.0);
        let s = central_slice(&g, &f, &Direction::axis(2, 0), SliceOptions::default()).unwrap();
        for (k, z) in s.values.iter().enumerate() {
            let rho = s.s(k);
            assert!((z - Complex64::new((-PI * rho * rho).exp(), 0.0)).norm() < 1e-10);
        }
        let g2: Vec<f64> = f.iter().enumerate().map(|(k, v)| v * (1.0 + 0.1 * (k % 5) as f64)).collect();
        let s = central_slice(&g, &g2, &Direction::diagonal(1, 1), SliceOptions::default()).unwrap();
        let n = s.len();
        // rho = 0 sits at index n/2 when the slice is symmetric, else at (n-1)/2
        let zero = s.values.iter().enumerate().position(|(k, _)| s.s(k).abs() < 1e-12).unwrap();
        for k in 1..zero.min(n - 1 - zero) {
            assert!((s.values[zero + k] - s.values[zero - k].conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn interpolated_slice_is_flagged_and_close() {
        let g = Grid::new(2, 64, 4.0).unwrap();
        let f = gaussian2(&g, 1.0);
        let d = Direction::from_angle(0.37);
        let s = central_slice(&g, &f, &d, SliceOptions::default()).unwrap();
        assert!(s.interpolated);
        let err = s
            .values
            .iter()
            .enumerate()
            .map(|(k, z)| (z - Complex64::new((-PI * s.s(k).powi(2)).exp(), 0.0)).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-2, "{err}");
        let r = radon_interpolated(&g, &f, &d, SliceOptions::default()).unwrap();
        assert!(r.interpolated);
        let mid = r.len() / 2;
        assert!((r.values[mid] - 1.0).abs() < 1e-2);
    }

    #[test]
    fn plancherel_zero_field() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        assert_eq!(radon_plancherel_residual(&g, &vec![0.0; g.len()], 8).unwrap(), 0.0);
    }

    #[test]
    fn profile_export_header() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        let r = radon(&g, &[1.0; 8], &Direction::axis(1, 0)).unwrap();
        let t = r.to_text();
        assert!(t.starts_with("# omega = (+1.000000)\n# interpolated = false\n"));
        assert_eq!(t.lines().count(), 10);
    }
}
