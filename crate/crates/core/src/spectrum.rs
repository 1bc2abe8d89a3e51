//! Range-Doppler transform and non-coherent accumulation.
//!
//! Transforms are unnormalized and unwindowed, so a unit tone sitting on a
//! grid bin produces a peak of exactly `N·M` and off-grid tones spread along
//! the 2D Dirichlet kernel. Doppler bins are stored unshifted (bin 0 is zero
//! Doppler).

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{config, Result};
use crate::sim::{DataCube, RadarParams};

/// Per-channel complex range-Doppler spectra, laid out like [`DataCube`]
/// with (range bin `p`, Doppler bin `q`) in place of (sample, chirp).
#[derive(Debug, Clone, PartialEq)]
pub struct RdStack {
    params: RadarParams,
    data: Vec<Complex64>,
}

impl RdStack {
    pub fn params(&self) -> &RadarParams {
        &self.params
    }

    pub fn n_range(&self) -> usize {
        self.params.n_samples
    }

    pub fn n_doppler(&self) -> usize {
        self.params.n_chirps
    }

    pub fn n_channels(&self) -> usize {
        self.params.n_channels
    }

    #[inline]
    pub fn get(&self, p: usize, q: usize, l: usize) -> Complex64 {
        self.data[(l * self.params.n_chirps + q) * self.params.n_samples + p]
    }

    /// Bin value with circular wrap of signed indices.
    #[inline]
    pub fn get_wrapped(&self, p: isize, q: isize, l: usize) -> Complex64 {
        let p = p.rem_euclid(self.params.n_samples as isize) as usize;
        let q = q.rem_euclid(self.params.n_chirps as isize) as usize;
        self.get(p, q, l)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn from_vec(params: RadarParams, data: Vec<Complex64>) -> Result<Self> {
        let len = params.n_samples * params.n_chirps * params.n_channels;
        if data.len() != len {
            return Err(config(format!("stack needs {len} bins, got {}", data.len())));
        }
        Ok(Self { params, data })
    }

    pub fn channel(&self, l: usize) -> &[Complex64] {
        let len = self.params.n_samples * self.params.n_chirps;
        &self.data[l * len..(l + 1) * len]
    }
}

/// Real non-negative power map over (range bin, Doppler bin).
///
/// Stored Doppler-column-major: all range bins of Doppler bin 0 first.
#[derive(Debug, Clone, PartialEq)]
pub struct NcaMap {
    n_range: usize,
    n_doppler: usize,
    data: Vec<f64>,
}

impl NcaMap {
    pub fn zeros(n_range: usize, n_doppler: usize) -> Self {
        Self { n_range, n_doppler, data: vec![0.0; n_range * n_doppler] }
    }

    pub fn filled(n_range: usize, n_doppler: usize, value: f64) -> Self {
        Self { n_range, n_doppler, data: vec![value; n_range * n_doppler] }
    }

    /// Builds a map from values in storage order (Doppler-column-major).
    pub fn from_vec(n_range: usize, n_doppler: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_range * n_doppler {
            return Err(config(format!(
                "map needs {} cells, got {}",
                n_range * n_doppler,
                data.len()
            )));
        }
        Ok(Self { n_range, n_doppler, data })
    }

    /// Builds a map from a function of (range bin, Doppler bin).
    pub fn from_fn(n_range: usize, n_doppler: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n_range * n_doppler);
        for q in 0..n_doppler {
            for p in 0..n_range {
                data.push(f(p, q));
            }
        }
        Self { n_range, n_doppler, data }
    }

    pub fn n_range(&self) -> usize {
        self.n_range
    }

    pub fn n_doppler(&self) -> usize {
        self.n_doppler
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, p: usize, q: usize) -> usize {
        q * self.n_range + p
    }

    /// (range bin, Doppler bin) of a storage index.
    #[inline]
    pub fn cell_of(&self, i: usize) -> (usize, usize) {
        (i % self.n_range, i / self.n_range)
    }

    #[inline]
    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.data[q * self.n_range + p]
    }

    #[inline]
    pub fn set(&mut self, p: usize, q: usize, v: f64) {
        self.data[q * self.n_range + p] = v;
    }

    #[inline]
    pub fn get_wrapped(&self, p: isize, q: isize) -> f64 {
        let p = p.rem_euclid(self.n_range as isize) as usize;
        let q = q.rem_euclid(self.n_doppler as isize) as usize;
        self.get(p, q)
    }

    /// Range bins of Doppler column `q`.
    pub fn column(&self, q: usize) -> &[f64] {
        &self.data[q * self.n_range..(q + 1) * self.n_range]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_dims(&self, other: &NcaMap) -> bool {
        self.n_range == other.n_range && self.n_doppler == other.n_doppler
    }

    /// Storage index and value of the largest cell; the lowest index wins ties.
    pub fn argmax(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.data.iter().enumerate() {
            match best {
                Some((_, b)) if v <= b => {}
                _ => best = Some((i, v)),
            }
        }
        best
    }

    pub fn scaled(&self, c: f64) -> NcaMap {
        NcaMap {
            n_range: self.n_range,
            n_doppler: self.n_doppler,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }
}

/// Unnormalized 2D DFT of every channel slice: fast time → range bins,
/// slow time → Doppler bins.
pub fn rd_transform(cube: &DataCube) -> RdStack {
    let params = *cube.params();
    let (n, m) = (params.n_samples, params.n_chirps);
    let mut planner = FftPlanner::<f64>::new();
    let fast = planner.plan_fft_forward(n);
    let slow = planner.plan_fft_forward(m);

    let mut data = cube.as_slice().to_vec();
    let mut scratch = vec![Complex64::new(0.0, 0.0); fast.get_inplace_scratch_len().max(slow.get_inplace_scratch_len())];
    // every chirp of every channel is contiguous
    fast.process_with_scratch(&mut data, &mut scratch);

    let mut column = vec![Complex64::new(0.0, 0.0); m];
    for l in 0..params.n_channels {
        let slab = &mut data[l * n * m..(l + 1) * n * m];
        for p in 0..n {
            for (q, c) in column.iter_mut().enumerate() {
                *c = slab[q * n + p];
            }
            slow.process_with_scratch(&mut column, &mut scratch);
            for (q, c) in column.iter().enumerate() {
                slab[q * n + p] = *c;
            }
        }
    }
    RdStack { params, data }
}

/// Non-coherent accumulation: `Σ_l |S_l[p, q]|²`.
pub fn nca(stack: &RdStack) -> NcaMap {
    let (n, m) = (stack.n_range(), stack.n_doppler());
    let cells = n * m;
    let mut data = vec![0.0; cells];
    for l in 0..stack.n_channels() {
        for (acc, s) in data.iter_mut().zip(stack.channel(l)) {
            *acc += s.norm_sqr();
        }
    }
    NcaMap { n_range: n, n_doppler: m, data }
}

/// `Σ_{n=0}^{len-1} exp(j2π·n·x/len)`, the DFT footprint of a unit tone `x`
/// bins away from the evaluated bin.
///
/// Evaluated in closed form; exact integers return exactly `len` (multiples
/// of `len`) or `0`.
pub fn dirichlet(len: usize, x: f64) -> Complex64 {
    let lf = len as f64;
    // reduce to [-len/2, len/2]; rem_euclid of a tiny negative rounds up to len
    let y = x - lf * (x / lf).round();
    if y.fract() == 0.0 {
        return if y == 0.0 { Complex64::new(lf, 0.0) } else { Complex64::new(0.0, 0.0) };
    }
    let magnitude = (PI * y).sin() / (PI * y / lf).sin();
    Complex64::from_polar(magnitude, PI * y * (lf - 1.0) / lf)
}
