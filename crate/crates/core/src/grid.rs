//! Periodic boxes `[-L, L)^dim` and the frequency lattice that goes with them.
//!
//! Sample `k` on an axis sits at `x_k = -L + k dx` with `dx = 2L / N`. The
//! frequency lattice is `{k / (2L) : k = -N/2 .. N/2 - 1}`, matching the
//! transform `f^(xi) = int e^{-2 pi i x.xi} f(x) dx`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    points_per_axis: usize,
    half_length: f64,
}

impl Grid {
    pub fn new(dim: usize, points_per_axis: usize, half_length: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if points_per_axis < 4 || points_per_axis % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and >= 4, got {points_per_axis}"
            )));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidGrid(format!("half length must be positive, got {half_length}")));
        }
        Ok(Self { dim, points_per_axis, half_length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.points_per_axis
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    /// Total number of samples, `N^dim`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / self.points_per_axis as f64
    }

    /// Frequency lattice spacing `1 / (2L)`.
    pub fn dxi(&self) -> f64 {
        0.5 / self.half_length
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    pub fn frequency_cell_volume(&self) -> f64 {
        self.dxi().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        (2.0 * self.half_length).powi(self.dim as i32)
    }

    /// Largest representable frequency magnitude per axis, `N / (4L)`.
    pub fn nyquist(&self) -> f64 {
        self.points_per_axis as f64 / (4.0 * self.half_length)
    }

    pub fn coord(&self, k: usize) -> f64 {
        -self.half_length + k as f64 * self.dx()
    }

    /// Signed lattice index of FFT slot `k`.
    pub fn freq_index(&self, k: usize) -> i64 {
        let n = self.points_per_axis as i64;
        let k = k as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// FFT slot holding signed lattice index `m`, if representable.
    pub fn freq_slot(&self, m: i64) -> Option<usize> {
        let n = self.points_per_axis as i64;
        if m < -n / 2 || m >= n / 2 {
            return None;
        }
        Some(m.rem_euclid(n) as usize)
    }

    pub fn freq(&self, k: usize) -> f64 {
        self.freq_index(k) as f64 * self.dxi()
    }

    /// Axis indices of flat index `idx`; the second entry is 0 in 1D.
    #[inline]
    pub fn unflatten(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx / self.points_per_axis, idx % self.points_per_axis]
        }
    }

    #[inline]
    pub fn flatten(&self, i: usize, j: usize) -> usize {
        if self.dim == 1 {
            i
        } else {
            i * self.points_per_axis + j
        }
    }

    /// Physical position of flat index `idx`; the second entry is 0 in 1D.
    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let [i, j] = self.unflatten(idx);
        if self.dim == 1 {
            [self.coord(i), 0.0]
        } else {
            [self.coord(i), self.coord(j)]
        }
    }

    /// Lattice frequency at FFT slot `idx`.
    #[inline]
    pub fn frequency(&self, idx: usize) -> [f64; 2] {
        let [i, j] = self.unflatten(idx);
        if self.dim == 1 {
            [self.freq(i), 0.0]
        } else {
            [self.freq(i), self.freq(j)]
        }
    }

    pub fn frequency_norm(&self, idx: usize) -> f64 {
        let [a, b] = self.frequency(idx);
        a.hypot(b)
    }

    /// Largest `|xi|` on the lattice.
    pub fn max_frequency(&self) -> f64 {
        self.nyquist() * (self.dim as f64).sqrt()
    }

    /// Stability/accuracy figure `dt * (2 pi * nyquist)^2 * dim`, the largest
    /// linear phase advanced by one time step.
    pub fn max_phase_per_step(&self, dt: f64) -> f64 {
        let k = 2.0 * std::f64::consts::PI * self.nyquist();
        dt * k * k * self.dim as f64
    }

    /// Whether `xi` lies on the frequency lattice, returning the signed indices.
    pub fn lattice_indices(&self, xi: &[f64]) -> Option<[i64; 2]> {
        let mut out = [0i64; 2];
        if xi.len() != self.dim {
            return None;
        }
        for (axis, &c) in xi.iter().enumerate() {
            let m = c / self.dxi();
            let r = m.round();
            if (m - r).abs() > 1e-9 * m.abs().max(1.0) {
                return None;
            }
            out[axis] = r as i64;
        }
        Some(out)
    }
}

/// Unit vector in `R^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    omega: [f64; 2],
    dim: usize,
}

/// Directions along which grid hyperplanes are exact lattice lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactDirection {
    /// `omega = sign * e_axis`.
    Axis { axis: usize, sign: i8 },
    /// `omega = (a, b) / sqrt 2` with `a, b` in `{-1, 1}`.
    Diagonal { a: i8, b: i8 },
}

impl Direction {
    pub fn new(components: &[f64]) -> Result<Self> {
        let dim = components.len();
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidDirection(format!("dimension {dim}")));
        }
        let norm = components.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDirection(format!("|omega| = {norm}, expected 1")));
        }
        let mut omega = [0.0; 2];
        omega[..dim].copy_from_slice(components);
        Ok(Self { omega, dim })
    }

    /// Normalizes a nonzero vector.
    pub fn normalized(components: &[f64]) -> Result<Self> {
        let norm = components.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidDirection("zero vector".into()));
        }
        let v: Vec<f64> = components.iter().map(|c| c / norm).collect();
        Self::new(&v)
    }

    pub fn axis(dim: usize, axis: usize) -> Self {
        assert!(axis < dim && dim <= 2);
        let mut omega = [0.0; 2];
        omega[axis] = 1.0;
        Self { omega, dim }
    }

    pub fn from_angle(theta: f64) -> Self {
        Self { omega: [theta.cos(), theta.sin()], dim: 2 }
    }

    pub fn diagonal(a: i8, b: i8) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { omega: [a.signum() as f64 * h, b.signum() as f64 * h], dim: 2 }
    }

    /// The four exact 2D directions used by symmetry checks.
    pub fn exact_2d() -> [Direction; 4] {
        [
            Direction::axis(2, 0),
            Direction::axis(2, 1),
            Direction::diagonal(1, 1),
            Direction::diagonal(1, -1),
        ]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> [f64; 2] {
        self.omega
    }

    pub fn dot(&self, x: &[f64; 2]) -> f64 {
        self.omega[0] * x[0] + self.omega[1] * x[1]
    }

    pub fn flipped(&self) -> Self {
        Self { omega: [-self.omega[0], -self.omega[1]], dim: self.dim }
    }

    pub fn exact(&self) -> Option<ExactDirection> {
        let [a, b] = self.omega;
        let tol = 1e-12;
        if self.dim == 1 {
            return Some(ExactDirection::Axis { axis: 0, sign: a.signum() as i8 });
        }
        if b.abs() < tol {
            return Some(ExactDirection::Axis { axis: 0, sign: a.signum() as i8 });
        }
        if a.abs() < tol {
            return Some(ExactDirection::Axis { axis: 1, sign: b.signum() as i8 });
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        if (a.abs() - h).abs() < tol && (b.abs() - h).abs() < tol {
            return Some(ExactDirection::Diagonal { a: a.signum() as i8, b: b.signum() as i8 });
        }
        None
    }

    pub fn is_exact(&self) -> bool {
        self.exact().is_some()
    }

    pub fn label(&self) -> String {
        if self.dim == 1 {
            format!("({:+.6})", self.omega[0])
        } else {
            format!("({:+.6},{:+.6})", self.omega[0], self.omega[1])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_layout() {
        let g = Grid::new(1, 8, 2.0).unwrap();
        assert_eq!(g.dx(), 0.5);
        assert_eq!(g.coord(0), -2.0);
        assert_eq!(g.freq_index(3), 3);
        assert_eq!(g.freq_index(4), -4);
        assert_eq!(g.freq_slot(-4), Some(4));
        assert_eq!(g.freq_slot(4), None);
        assert!((g.nyquist() - 1.0).abs() < 1e-15);
        assert!(g.freq(4).abs() <= g.nyquist());
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(3, 8, 1.0).is_err());
        assert!(Grid::new(2, 13, 1.0).is_err());
        assert!(Grid::new(2, 48, 1.0).is_ok());
        assert!(Grid::new(1, 8, 0.0).is_err());
    }

    #[test]
    fn exact_directions() {
        assert!(Direction::axis(2, 1).is_exact());
        assert!(Direction::diagonal(-1, 1).is_exact());
        assert!(!Direction::from_angle(0.3).is_exact());
        assert!(Direction::new(&[0.6, 0.8]).is_ok());
        assert!(Direction::new(&[0.6, 0.9]).is_err());
        let d = Direction::normalized(&[3.0, 4.0]).unwrap();
        assert!((d.components()[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn lattice_membership() {
        let g = Grid::new(2, 16, 4.0).unwrap();
        assert_eq!(g.lattice_indices(&[0.375, -0.125]), Some([3, -1]));
        assert_eq!(g.lattice_indices(&[0.3, 0.0]), None);
    }
}
