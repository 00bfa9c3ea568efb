//! Complex fields sampled on a [`Grid`] and their on-disk record format.
//!
//! A record is a little-endian header `dim: u64, N: u64, L: f64` followed by
//! `N^dim` interleaved `(re, im)` f64 pairs in row-major order. A sidecar
//! `<record>.meta` text file carries `key = value` lines.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::ops::{Add, Sub};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Cells within this many samples of the box edge count as "wrapping".
pub const WRAP_LAYER_CELLS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_values(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Format(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every grid point; in 1D the second coordinate is 0.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.point(idx))).collect();
        Self { grid, values }
    }

    pub fn from_real(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn same_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `M(u) = int |u|^2` by the rectangle rule.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `|u|^2` pointwise.
    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `|u|^q` pointwise.
    pub fn modulus_power(&self, q: f64) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr().powf(0.5 * q)).collect()
    }

    /// Mass inside the layer of [`WRAP_LAYER_CELLS`] samples along the box edge.
    pub fn wrap_mass(&self) -> f64 {
        let n = self.grid.n();
        let w = WRAP_LAYER_CELLS.min(n / 2);
        let near = |k: usize| k < w || k >= n - w;
        let dim = self.grid.dim();
        let s: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(idx, _)| {
                let [i, j] = self.grid.unflatten(*idx);
                near(i) || (dim == 2 && near(j))
            })
            .map(|(_, z)| z.norm_sqr())
            .sum();
        s * self.grid.cell_volume()
    }

    /// `wrap_mass / mass`, 0 for the zero field.
    pub fn wrap_fraction(&self) -> f64 {
        let m = self.mass();
        if m == 0.0 {
            0.0
        } else {
            self.wrap_mass() / m
        }
    }

    pub fn inner(&self, other: &ComplexField) -> Complex64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum::<Complex64>()
            * self.grid.cell_volume()
    }

    pub fn scaled(&self, c: Complex64) -> ComplexField {
        Self { grid: self.grid, values: self.values.iter().map(|z| z * c).collect() }
    }

    pub fn conj(&self) -> ComplexField {
        Self { grid: self.grid, values: self.values.iter().map(|z| z.conj()).collect() }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> ComplexField {
        Self { grid: self.grid, values: self.values.iter().map(|&z| f(z)).collect() }
    }

    /// Pointwise product `self * other`.
    pub fn mul(&self, other: &ComplexField) -> ComplexField {
        Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &ComplexField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn has_non_finite(&self) -> bool {
        self.values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite()))
    }

    pub fn write_record(&self, path: &Path, metadata: &BTreeMap<String, String>) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        w.write_all(&(self.grid.dim() as u64).to_le_bytes())?;
        w.write_all(&(self.grid.n() as u64).to_le_bytes())?;
        w.write_all(&self.grid.half_length().to_le_bytes())?;
        for z in &self.values {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        w.flush()?;

        let mut meta = String::new();
        meta.push_str(&format!("dim = {}\n", self.grid.dim()));
        meta.push_str(&format!("points_per_axis = {}\n", self.grid.n()));
        meta.push_str(&format!("half_length = {:e}\n", self.grid.half_length()));
        meta.push_str(&format!("mass = {:e}\n", self.mass()));
        for (k, v) in metadata {
            meta.push_str(&format!("{k} = {v}\n"));
        }
        fs::write(sidecar_path(path), meta)?;
        Ok(())
    }

    pub fn read_record(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < 24 {
            return Err(Error::Format("truncated header".into()));
        }
        let word = |k: usize| -> [u8; 8] { bytes[8 * k..8 * k + 8].try_into().unwrap() };
        let dim = u64::from_le_bytes(word(0)) as usize;
        let n = u64::from_le_bytes(word(1)) as usize;
        let half_length = f64::from_le_bytes(word(2));
        let grid = Grid::new(dim, n, half_length)?;
        let payload = &bytes[24..];
        if payload.len() != 16 * grid.len() {
            return Err(Error::Format(format!(
                "payload has {} bytes, expected {}",
                payload.len(),
                16 * grid.len()
            )));
        }
        let values = payload
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        Ok(Self { grid, values })
    }
}

pub fn sidecar_path(record: &Path) -> PathBuf {
    let mut s = record.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Parses a sidecar written by [`ComplexField::write_record`].
pub fn read_sidecar(record: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(sidecar_path(record))?;
    let mut out = BTreeMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("bad metadata line {line:?}")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

impl Add for &ComplexField {
    type Output = ComplexField;
    fn add(self, rhs: &ComplexField) -> ComplexField {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        ComplexField {
            grid: self.grid,
            values: self.values.iter().zip(&rhs.values).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexField {
    type Output = ComplexField;
    fn sub(self, rhs: &ComplexField) -> ComplexField {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        ComplexField {
            grid: self.grid,
            values: self.values.iter().zip(&rhs.values).map(|(a, b)| a - b).collect(),
        }
    }
}
