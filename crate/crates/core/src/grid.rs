//! Periodic sampling grids, multi-dimensional FFTs and the sampled-field file formats.
//!
//! A grid covers the box `[-L/2, L/2)^n` with `N` points per axis at
//! `x_i = -L/2 + i L / N`. Values are stored row-major, last axis fastest.
//! Frequencies are `m / L` in FFT order: `m = 0, 1, ..., N/2 - 1, -N/2, ..., -1`.

use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_N_LOW_DIM: usize = 1024;
pub const MAX_N_3D: usize = 128;

/// Geometry of a periodic grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Spatial dimension, 1 to 3.
    pub n: usize,
    /// Points per axis, a power of two.
    #[serde(rename = "N")]
    pub size: usize,
    /// Box side length.
    #[serde(rename = "L")]
    pub length: f64,
}

impl GridSpec {
    pub fn new(n: usize, size: usize, length: f64) -> Result<Self> {
        let spec = Self { n, size, length };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.n) {
            return Err(Error::InvalidGrid(format!(
                "dimension {} not in 1..=3",
                self.n
            )));
        }
        let cap = if self.n == 3 { MAX_N_3D } else { MAX_N_LOW_DIM };
        if !self.size.is_power_of_two() || self.size < 2 || self.size > cap {
            return Err(Error::InvalidGrid(format!(
                "N = {} must be a power of two in 2..={cap}",
                self.size
            )));
        }
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "L = {} must be positive",
                self.length
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.size.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.size as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.n as i32)
    }

    /// Multi-index of a flat index.
    pub fn unravel(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        for axis in (0..self.n).rev() {
            idx[axis] = flat % self.size;
            flat /= self.size;
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx[..self.n].iter().fold(0, |acc, &i| acc * self.size + i)
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -0.5 * self.length + i as f64 * self.spacing()
    }

    /// Spatial point of a flat index.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let idx = self.unravel(flat);
        (0..self.n).map(|a| self.coordinate(idx[a])).collect()
    }

    /// Signed frequency index of FFT bin `i`.
    pub fn frequency_index(&self, i: usize) -> i64 {
        if i < self.size / 2 {
            i as i64
        } else {
            i as i64 - self.size as i64
        }
    }

    /// Frequency vector of a flat FFT bin.
    pub fn frequency(&self, flat: usize) -> Vec<f64> {
        let idx = self.unravel(flat);
        (0..self.n)
            .map(|a| self.frequency_index(idx[a]) as f64 / self.length)
            .collect()
    }

    /// All frequencies in FFT order.
    pub fn frequencies(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.frequency(i)).collect()
    }

    /// Whether a flat bin lies on the Nyquist shell (some index equal to `-N/2`).
    pub fn is_nyquist(&self, flat: usize) -> bool {
        let idx = self.unravel(flat);
        idx[..self.n].contains(&(self.size / 2))
    }
}

/// Complex samples on a grid, with optional free-form metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub spec: GridSpec,
    pub values: Vec<Complex64>,
    pub meta: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    n: usize,
    #[serde(rename = "N")]
    size: usize,
    #[serde(rename = "L")]
    length: f64,
    dtype: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    meta: Option<serde_json::Value>,
}

impl SampledField {
    pub fn new(spec: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(Error::DimensionMismatch {
                expected: spec.len(),
                found: values.len(),
            });
        }
        if values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            spec,
            values,
            meta: None,
        })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            values: vec![Complex64::new(0.0, 0.0); spec.len()],
            meta: None,
        }
    }

    /// Samples a function of position.
    pub fn from_fn<F>(spec: GridSpec, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Complex64 + Sync,
    {
        let values = (0..spec.len())
            .into_par_iter()
            .map(|i| f(&spec.point(i)))
            .collect();
        Self::new(spec, values)
    }

    pub fn with_meta(mut self, meta: serde_json::Value) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.values.len() as f64
    }

    /// `sum f conj(g) * cell volume`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum::<Complex64>()
            * self.spec.cell_volume())
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::InvalidGrid(format!(
                "grid mismatch: {:?} vs {:?}",
                self.spec, other.spec
            )));
        }
        Ok(())
    }

    /// Writes the header line and little-endian `(re, im)` pairs.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let header = Header {
            n: self.spec.n,
            size: self.spec.size,
            length: self.spec.length,
            dtype: "c128".into(),
            meta: self.meta.clone(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        let mut buf = Vec::with_capacity(16 * self.values.len());
        for v in &self.values {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(mut r: R) -> Result<Self> {
        let mut line = Vec::new();
        r.read_until(b'\n', &mut line)?;
        if line.last() != Some(&b'\n') {
            return Err(Error::Format("missing header line".into()));
        }
        let header: Header = serde_json::from_slice(&line[..line.len() - 1])?;
        if header.dtype != "c128" {
            return Err(Error::Format(format!("unsupported dtype {}", header.dtype)));
        }
        let spec = GridSpec::new(header.n, header.size, header.length)?;
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        if body.len() != 16 * spec.len() {
            return Err(Error::Format(format!(
                "expected {} bytes of samples, found {}",
                16 * spec.len(),
                body.len()
            )));
        }
        let values = body
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        let mut field = Self::new(spec, values)?;
        field.meta = header.meta;
        Ok(field)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }

    /// CSV with one row per grid point: coordinates, then `re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        if self.spec.n > 2 {
            return Err(Error::Format("CSV export supports n <= 2".into()));
        }
        let names = ["x0", "x1"];
        writeln!(w, "{},re,im", names[..self.spec.n].join(","))?;
        for (i, v) in self.values.iter().enumerate() {
            let coords: Vec<String> = self.spec.point(i).iter().map(|x| format!("{x}")).collect();
            writeln!(w, "{},{},{}", coords.join(","), v.re, v.im)?;
        }
        Ok(())
    }
}

/// Planned transforms for one grid, reused across calls.
pub struct Fourier {
    spec: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fourier {
    pub fn new(spec: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            spec,
            forward: planner.plan_fft_forward(spec.size),
            inverse: planner.plan_fft_inverse(spec.size),
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let size = self.spec.size;
        let n = self.spec.n;
        // Last axis: contiguous rows.
        data.par_chunks_mut(size).for_each(|row| fft.process(row));
        // Remaining axes: gather strided lines.
        for axis in (0..n - 1).rev() {
            let stride = size.pow((n - 1 - axis) as u32);
            let block = stride * size;
            data.par_chunks_mut(block).for_each(|chunk| {
                let mut line = vec![Complex64::new(0.0, 0.0); size];
                for offset in 0..stride {
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = chunk[offset + i * stride];
                    }
                    fft.process(&mut line);
                    for (i, v) in line.iter().enumerate() {
                        chunk[offset + i * stride] = *v;
                    }
                }
            });
        }
    }

    /// Unnormalized forward DFT, in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse DFT scaled by `1 / N^n`, in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / self.spec.len() as f64;
        data.par_iter_mut().for_each(|v| *v *= scale);
    }

    /// `IFFT(multiplier * FFT(values))` given the transformed input.
    pub fn apply_multiplier(&self, spectrum: &[Complex64], multiplier: &[f64]) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = spectrum
            .par_iter()
            .zip(multiplier.par_iter())
            .map(|(s, m)| s * m)
            .collect();
        self.inverse(&mut out);
        out
    }
}
