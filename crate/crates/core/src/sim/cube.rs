use num_complex::Complex64;

use super::RadarParams;
use crate::error::{config, Result};

/// One radar frame of complex baseband samples: fast-time × slow-time × channel.
///
/// Samples are stored channel-major, then chirp-major, then sample order,
/// the same order the RDC1 file uses.
#[derive(Debug, Clone, PartialEq)]
pub struct DataCube {
    params: RadarParams,
    data: Vec<Complex64>,
}

impl DataCube {
    pub fn zeros(params: RadarParams) -> Self {
        let len = params.n_samples * params.n_chirps * params.n_channels;
        Self { params, data: vec![Complex64::new(0.0, 0.0); len] }
    }

    pub fn from_vec(params: RadarParams, data: Vec<Complex64>) -> Result<Self> {
        let len = params.n_samples * params.n_chirps * params.n_channels;
        if data.len() != len {
            return Err(config(format!("cube needs {len} samples, got {}", data.len())));
        }
        Ok(Self { params, data })
    }

    pub fn params(&self) -> &RadarParams {
        &self.params
    }

    #[inline]
    pub fn index(&self, n: usize, m: usize, l: usize) -> usize {
        (l * self.params.n_chirps + m) * self.params.n_samples + n
    }

    #[inline]
    pub fn get(&self, n: usize, m: usize, l: usize) -> Complex64 {
        self.data[self.index(n, m, l)]
    }

    #[inline]
    pub fn set(&mut self, n: usize, m: usize, l: usize, v: Complex64) {
        let i = self.index(n, m, l);
        self.data[i] = v;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Samples of channel `l`, chirp-major.
    pub fn channel(&self, l: usize) -> &[Complex64] {
        let len = self.params.n_samples * self.params.n_chirps;
        &self.data[l * len..(l + 1) * len]
    }

    /// Mean of |s|² over every sample.
    pub fn mean_power(&self) -> f64 {
        self.data.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.data.len() as f64
    }

    /// Multiplies every sample by `c`.
    pub fn scale(&mut self, c: Complex64) {
        self.data.iter_mut().for_each(|s| *s *= c);
    }
}
