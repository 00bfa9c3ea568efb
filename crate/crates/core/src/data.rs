//! Seeded initial data. Every random generator is `ChaCha8Rng` so a
//! `(seed, spec)` pair replays bit-identically on any platform.

use std::f64::consts::PI;
use std::path::PathBuf;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid;
use crate::spectral::{self, FourierField};

pub const RNG_ALGORITHM: &str = "ChaCha8Rng";

/// `amplitude * exp(-pi |x - center|^2 / sigma^2) * e^{2 pi i x.xi0}`, no periodisation.
pub fn gaussian(grid: &Grid, center: [f64; 2], xi0: [f64; 2], sigma: f64, amplitude: f64) -> ComplexField {
    let dim = grid.dim();
    ComplexField::from_fn(*grid, |x| {
        let mut r2 = 0.0;
        let mut ph = 0.0;
        for a in 0..dim {
            r2 += (x[a] - center[a]).powi(2);
            ph += x[a] * xi0[a];
        }
        Complex64::from_polar(amplitude * (-PI * r2 / (sigma * sigma)).exp(), 2.0 * PI * ph)
    })
}

/// `amplitude * e^{2 pi i x.m / 2L}` for an integer lattice index `m`.
pub fn plane_wave(grid: &Grid, m: [i64; 2], amplitude: f64) -> ComplexField {
    let dim = grid.dim();
    let d = grid.dxi();
    ComplexField::from_fn(*grid, |x| {
        let mut ph = 0.0;
        for a in 0..dim {
            ph += x[a] * m[a] as f64 * d;
        }
        Complex64::from_polar(amplitude, 2.0 * PI * ph)
    })
}

/// A field whose transform is `exp(-pi |xi|^2 / sigma_xi^2)` on `|xi| < radius`
/// and zero elsewhere, centred in space at the origin.
pub fn fourier_ball_bump(grid: &Grid, radius: f64, sigma_xi: f64) -> ComplexField {
    let values: Vec<Complex64> = (0..grid.len())
        .map(|idx| {
            let r = grid.frequency_norm(idx);
            if r < radius {
                Complex64::new((-PI * r * r / (sigma_xi * sigma_xi)).exp(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    spectral::inverse_fourier_transform(&FourierField::from_values(*grid, values).expect("grid length"))
}

/// Parameters of [`random_smooth`]: a sum of Gaussian wave packets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub seed: u64,
    pub packets: usize,
    /// Centres are uniform in `[-center_fraction * L, center_fraction * L]^d`.
    pub center_fraction: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Frequencies are uniform in `[-max_frequency, max_frequency]^d`.
    pub max_frequency: f64,
    /// Complex amplitudes have modulus uniform in `[0.5, 1] * amplitude`.
    pub amplitude: f64,
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self { seed: 0, packets: 3, center_fraction: 0.2, sigma_min: 0.9, sigma_max: 1.1, max_frequency: 0.2, amplitude: 1.0 }
    }
}

pub fn random_smooth(grid: &Grid, spec: &RandomSpec) -> ComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let l = grid.half_length();
    let dim = grid.dim();
    let mut acc = ComplexField::zeros(*grid);
    for _ in 0..spec.packets {
        let mut c = [0.0; 2];
        let mut k = [0.0; 2];
        for a in 0..dim {
            c[a] = rng.gen_range(-1.0..=1.0) * spec.center_fraction * l;
            k[a] = rng.gen_range(-1.0..=1.0) * spec.max_frequency;
        }
        let sigma = rng.gen_range(spec.sigma_min..=spec.sigma_max);
        let modulus = spec.amplitude * rng.gen_range(0.5..=1.0);
        let phase = rng.gen_range(0.0..2.0 * PI);
        let g = gaussian(grid, c, k, sigma, modulus).scaled(Complex64::from_polar(1.0, phase));
        acc = &acc + &g;
    }
    acc
}

/// Serialisable description of an initial datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DatumSpec {
    Gaussian {
        #[serde(default)]
        center: [f64; 2],
        #[serde(default)]
        xi0: [f64; 2],
        sigma: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    PlaneWave {
        m: [i64; 2],
        #[serde(default = "one")]
        amplitude: f64,
    },
    Random(RandomSpec),
    FourierBall {
        radius: f64,
        sigma_xi: f64,
        #[serde(default)]
        shift: [f64; 2],
    },
    File { path: PathBuf },
}

fn one() -> f64 {
    1.0
}

impl DatumSpec {
    pub fn build(&self, grid: &Grid) -> Result<ComplexField> {
        match self {
            DatumSpec::Gaussian { center, xi0, sigma, amplitude } => {
                if !(*sigma > 0.0) {
                    return Err(Error::Precondition(format!("sigma must be positive, got {sigma}")));
                }
                Ok(gaussian(grid, *center, *xi0, *sigma, *amplitude))
            }
            DatumSpec::PlaneWave { m, amplitude } => Ok(plane_wave(grid, *m, *amplitude)),
            DatumSpec::Random(spec) => Ok(random_smooth(grid, spec)),
            DatumSpec::FourierBall { radius, sigma_xi, shift } => {
                let b = fourier_ball_bump(grid, *radius, *sigma_xi);
                spectral::shift_frequency(&b, &shift[..grid.dim()])
            }
            DatumSpec::File { path } => {
                let u = ComplexField::read_record(path)?;
                if u.grid() != grid {
                    return Err(Error::GridMismatch);
                }
                Ok(u)
            }
        }
    }
}
