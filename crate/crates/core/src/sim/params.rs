use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// FMCW front-end and frame geometry.
///
/// Bandwidth and wavelength are not stored; they follow from the sweep
/// slope, the chirp duration and the start frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadarParams {
    /// Chirp start frequency (Hz).
    pub start_freq_hz: f64,
    /// Sweep slope (Hz/s).
    pub slope_hz_per_s: f64,
    /// ADC sampling rate (samples/s).
    pub sample_rate_hz: f64,
    /// Samples per chirp (fast-time length).
    pub n_samples: usize,
    /// Chirps per frame (slow-time length).
    pub n_chirps: usize,
    /// Chirp duration (s).
    pub chirp_duration_s: f64,
    /// Chirp repetition interval (s).
    pub chirp_interval_s: f64,
    /// Receive channels of the uniform linear array.
    pub n_channels: usize,
    /// Element spacing (m).
    pub element_spacing_m: f64,
}

impl RadarParams {
    /// The 77 GHz simulation setup used throughout the evaluation: 256 samples
    /// per chirp, 128 chirps, 4 channels at half-wavelength spacing. The chirp
    /// interval equals the chirp duration (no idle time).
    pub fn table1() -> Self {
        let start_freq_hz = 77e9;
        let slope_hz_per_s = 120.023e12;
        let bandwidth_hz = 3.413e9;
        let chirp_duration_s = bandwidth_hz / slope_hz_per_s;
        Self {
            start_freq_hz,
            slope_hz_per_s,
            sample_rate_hz: 9e6,
            n_samples: 256,
            n_chirps: 128,
            chirp_duration_s,
            chirp_interval_s: chirp_duration_s,
            n_channels: 4,
            element_spacing_m: 0.5 * SPEED_OF_LIGHT / start_freq_hz,
        }
    }

    /// The cascaded-array measurement configuration, reused as a parameter
    /// preset (64 chirps).
    pub fn measurement_preset() -> Self {
        let start_freq_hz = 77e9;
        let slope_hz_per_s = 100e12;
        let chirp_duration_s = 3.2e9 / slope_hz_per_s;
        Self {
            start_freq_hz,
            slope_hz_per_s,
            sample_rate_hz: 8e6,
            n_samples: 256,
            n_chirps: 64,
            chirp_duration_s,
            chirp_interval_s: chirp_duration_s,
            n_channels: 4,
            element_spacing_m: 0.5 * SPEED_OF_LIGHT / start_freq_hz,
        }
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.slope_hz_per_s * self.chirp_duration_s
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.start_freq_hz
    }

    /// Range covered by one fast-time bin (m).
    pub fn range_resolution_m(&self) -> f64 {
        SPEED_OF_LIGHT * self.sample_rate_hz / (2.0 * self.slope_hz_per_s * self.n_samples as f64)
    }

    /// Radial velocity covered by one Doppler bin (m/s).
    pub fn velocity_resolution_mps(&self) -> f64 {
        self.wavelength_m() / (2.0 * self.n_chirps as f64 * self.chirp_interval_s)
    }

    /// Largest range the simulator places targets at (half the complex
    /// beat-frequency span).
    pub fn max_range_m(&self) -> f64 {
        self.sample_rate_hz * SPEED_OF_LIGHT / (2.0 * self.slope_hz_per_s) * 0.5
    }

    pub fn max_velocity_mps(&self) -> f64 {
        self.wavelength_m() / (4.0 * self.chirp_interval_s)
    }

    pub fn n_cells(&self) -> usize {
        self.n_samples * self.n_chirps
    }

    pub fn beat_frequency_hz(&self, range_m: f64) -> f64 {
        2.0 * self.slope_hz_per_s * range_m / SPEED_OF_LIGHT
    }

    pub fn doppler_frequency_hz(&self, velocity_mps: f64) -> f64 {
        2.0 * velocity_mps * self.start_freq_hz / SPEED_OF_LIGHT
    }

    /// Fractional fast-time bin of a target, including range-Doppler coupling.
    pub fn range_bin(&self, range_m: f64, velocity_mps: f64) -> f64 {
        let f = self.beat_frequency_hz(range_m) + self.doppler_frequency_hz(velocity_mps);
        self.n_samples as f64 * f / self.sample_rate_hz
    }

    /// Fractional Doppler bin of a target, wrapped into `[0, M)`.
    pub fn doppler_bin(&self, velocity_mps: f64) -> f64 {
        let m = self.n_chirps as f64;
        let x = m * self.doppler_frequency_hz(velocity_mps) * self.chirp_interval_s;
        x.rem_euclid(m)
    }

    /// Physical range of a fractional (range, Doppler) bin pair, with the
    /// Doppler share of the beat frequency removed. Range bins in the upper
    /// half of the spectrum are negative beat frequencies.
    pub fn bins_to_range_m(&self, r_hat: f64, v_hat: f64) -> f64 {
        let n = self.n_samples as f64;
        let mut r = r_hat.rem_euclid(n);
        if r >= n / 2.0 {
            r -= n;
        }
        let f_b = r * self.sample_rate_hz / n - self.doppler_frequency_hz(self.bin_to_velocity_mps(v_hat));
        f_b * SPEED_OF_LIGHT / (2.0 * self.slope_hz_per_s)
    }

    /// Signed radial velocity of a fractional Doppler bin. Bins in the upper
    /// half of the spectrum map to negative velocities.
    pub fn bin_to_velocity_mps(&self, v_hat: f64) -> f64 {
        let m = self.n_chirps as f64;
        let mut v = v_hat.rem_euclid(m);
        if v >= m / 2.0 {
            v -= m;
        }
        v * self.velocity_resolution_mps()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 4 || self.n_chirps < 4 {
            return Err(config(format!(
                "frame must be at least 4x4, got {}x{}",
                self.n_samples, self.n_chirps
            )));
        }
        if self.n_channels < 1 {
            return Err(config("at least one channel is required"));
        }
        let positive = [
            ("start_freq_hz", self.start_freq_hz),
            ("slope_hz_per_s", self.slope_hz_per_s),
            ("sample_rate_hz", self.sample_rate_hz),
            ("chirp_duration_s", self.chirp_duration_s),
            ("chirp_interval_s", self.chirp_interval_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.element_spacing_m.is_finite() && self.element_spacing_m >= 0.0) {
            return Err(config("element_spacing_m must be non-negative"));
        }
        if self.chirp_interval_s < self.chirp_duration_s {
            return Err(config("chirp interval shorter than chirp duration"));
        }
        Ok(())
    }
}

impl Default for RadarParams {
    fn default() -> Self {
        Self::table1()
    }
}
