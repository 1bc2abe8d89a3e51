//! FMCW echo simulation.
//!
//! Frames follow the discrete multi-channel echo model: every point target
//! contributes a separable 2D tone, fast-time frequency `f_b + f_d` sampled
//! at `1/f_s` and slow-time frequency `f_d` sampled at `T_PRI`, weighted by a
//! uniform-linear-array steering phase. Circular complex Gaussian noise is
//! added on top.

mod cube;
mod params;
pub mod rdc1;

use std::collections::HashSet;
use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use cube::DataCube;
pub use params::{RadarParams, SPEED_OF_LIGHT};

use crate::error::{config, Result};

/// Signal power used as the 0 dB reference when a scene has no targets.
pub const EMPTY_SCENE_REFERENCE_POWER: f64 = 1.0;

const NOISE_STREAM: u64 = 1;
const SCENE_STREAM: u64 = 2;

/// Ground truth for one point target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetTruth {
    pub range_m: f64,
    /// Signed radial velocity, positive moving away.
    pub velocity_mps: f64,
    /// Angle of arrival from broadside (rad).
    pub angle_rad: f64,
    /// Complex-envelope magnitude.
    pub amplitude: f64,
}

impl TargetTruth {
    pub fn validate(&self, params: &RadarParams) -> Result<()> {
        if !(self.range_m > 0.0 && self.range_m < params.max_range_m()) {
            return Err(config(format!(
                "target range {} m outside (0, {}) m",
                self.range_m,
                params.max_range_m()
            )));
        }
        if !(self.velocity_mps.abs() < params.max_velocity_mps()) {
            return Err(config(format!(
                "target velocity {} m/s exceeds ±{} m/s",
                self.velocity_mps,
                params.max_velocity_mps()
            )));
        }
        if !(self.angle_rad.abs() < FRAC_PI_2) {
            return Err(config(format!("target angle {} rad outside (-π/2, π/2)", self.angle_rad)));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(config("target amplitude must be finite and non-negative"));
        }
        Ok(())
    }

    /// Target whose tone lands exactly on fractional bins `(r_bin, v_bin)`.
    /// `v_bin` is signed and must stay inside `(-M/2, M/2)`.
    pub fn at_bins(params: &RadarParams, r_bin: f64, v_bin: f64, angle_rad: f64, amplitude: f64) -> Self {
        let f_d = v_bin / (params.n_chirps as f64 * params.chirp_interval_s);
        let velocity_mps = f_d * SPEED_OF_LIGHT / (2.0 * params.start_freq_hz);
        let f_b = r_bin * params.sample_rate_hz / params.n_samples as f64 - f_d;
        let range_m = f_b * SPEED_OF_LIGHT / (2.0 * params.slope_hz_per_s);
        Self { range_m, velocity_mps, angle_rad, amplitude }
    }

    /// Fractional (range, Doppler) bin this target lands on.
    pub fn bins(&self, params: &RadarParams) -> (f64, f64) {
        (
            params.range_bin(self.range_m, self.velocity_mps).rem_euclid(params.n_samples as f64),
            params.doppler_bin(self.velocity_mps),
        )
    }

    /// Nearest integer (range, Doppler) cell, wrapped onto the map.
    pub fn cell(&self, params: &RadarParams) -> (usize, usize) {
        let (r, v) = self.bins(params);
        (
            (r.round() as usize) % params.n_samples,
            (v.round() as usize) % params.n_chirps,
        )
    }
}

/// A frame description: geometry, targets, noise level and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub params: RadarParams,
    pub targets: Vec<TargetTruth>,
    /// σ² per complex sample.
    pub noise_var: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        for t in &self.targets {
            t.validate(&self.params)?;
        }
        if !(self.noise_var.is_finite() && self.noise_var >= 0.0) {
            return Err(config(format!("noise variance must be >= 0, got {}", self.noise_var)));
        }
        Ok(())
    }

    /// A scene whose noise variance puts the mean noiseless sample power
    /// `snr_db` above σ². Empty scenes use unit reference power.
    pub fn with_snr(params: RadarParams, targets: Vec<TargetTruth>, snr_db: f64, seed: u64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(config("snr_db must be finite"));
        }
        let signal_power = if targets.is_empty() {
            EMPTY_SCENE_REFERENCE_POWER
        } else {
            mean_signal_power(&params, &targets, seed)
        };
        let scene = Scenario { params, targets, noise_var: signal_power / 10f64.powf(snr_db / 10.0), seed };
        scene.validate()?;
        Ok(scene)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Initial phase of a target. The RNG is keyed by the scenario seed and the
/// target's own parameters, so a target keeps its phase regardless of where
/// it sits in the target list.
fn target_phase(seed: u64, t: &TargetTruth) -> f64 {
    let key = [t.range_m, t.velocity_mps, t.angle_rad, t.amplitude]
        .iter()
        .fold(splitmix(seed), |h, x| splitmix(h ^ x.to_bits()));
    ChaCha8Rng::seed_from_u64(key).gen::<f64>() * TAU
}

/// Separable factors of one target: fast-time tone, slow-time tone and the
/// per-channel complex weight.
struct TargetTones {
    fast: Vec<Complex64>,
    slow: Vec<Complex64>,
    channel: Vec<Complex64>,
}

fn target_tones(params: &RadarParams, t: &TargetTruth, seed: u64) -> TargetTones {
    let f_b = params.beat_frequency_hz(t.range_m);
    let f_d = params.doppler_frequency_hz(t.velocity_mps);
    let fast_cycles = (f_b + f_d) / params.sample_rate_hz;
    let slow_cycles = f_d * params.chirp_interval_s;
    let fast = (0..params.n_samples)
        .map(|n| Complex64::cis(TAU * fast_cycles * n as f64))
        .collect();
    let slow = (0..params.n_chirps)
        .map(|m| Complex64::cis(TAU * slow_cycles * m as f64))
        .collect();
    let base = Complex64::from_polar(t.amplitude, target_phase(seed, t));
    let spatial = params.element_spacing_m * t.angle_rad.sin() / params.wavelength_m();
    let channel = (0..params.n_channels)
        .map(|l| base * Complex64::cis(-TAU * l as f64 * spatial))
        .collect();
    TargetTones { fast, slow, channel }
}

/// Synthesizes one frame of the scenario. Deterministic in `scenario.seed`.
pub fn synthesize_cube(scenario: &Scenario) -> Result<DataCube> {
    scenario.validate()?;
    let p = scenario.params;
    let mut cube = DataCube::zeros(p);
    let n = p.n_samples;
    for t in &scenario.targets {
        let tones = target_tones(&p, t, scenario.seed);
        let data = cube.as_mut_slice();
        for (l, w) in tones.channel.iter().enumerate() {
            for (m, v) in tones.slow.iter().enumerate() {
                let coef = w * v;
                let start = (l * p.n_chirps + m) * n;
                for (s, u) in data[start..start + n].iter_mut().zip(&tones.fast) {
                    *s += coef * u;
                }
            }
        }
    }
    if scenario.noise_var > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        rng.set_stream(NOISE_STREAM);
        let sd = (scenario.noise_var / 2.0).sqrt();
        for s in cube.as_mut_slice() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *s += Complex64::new(sd * re, sd * im);
        }
    }
    Ok(cube)
}

/// Mean |s|² of the noiseless frame, computed from pairwise tone inner
/// products instead of synthesizing the cube.
pub fn mean_signal_power(params: &RadarParams, targets: &[TargetTruth], seed: u64) -> f64 {
    let tones: Vec<_> = targets.iter().map(|t| target_tones(params, t, seed)).collect();
    let inner = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
    };
    let mut total = 0.0;
    for a in &tones {
        for b in &tones {
            let fast = inner(&a.fast, &b.fast);
            let slow = inner(&a.slow, &b.slow);
            let chan = inner(&a.channel, &b.channel);
            total += (fast * slow * chan).re;
        }
    }
    total / (params.n_samples * params.n_chirps * params.n_channels) as f64
}

/// Draws a random scene: targets uniform over the unambiguous range, velocity
/// and angle intervals, each on its own integer cell, with up to
/// `stationary_fraction_max · n_targets` of them forced to zero velocity. The
/// noise variance is set so that mean noiseless sample power over σ² equals
/// the requested SNR.
pub fn random_scenario(
    params: &RadarParams,
    n_targets: usize,
    snr_db: f64,
    stationary_fraction_max: f64,
    seed: u64,
) -> Result<Scenario> {
    params.validate()?;
    if !(0.0..=1.0).contains(&stationary_fraction_max) {
        return Err(config("stationary_fraction_max must lie in [0, 1]"));
    }
    if n_targets > params.n_cells() {
        return Err(config(format!(
            "{n_targets} targets exceed the {} distinct cells of the map",
            params.n_cells()
        )));
    }
    if !snr_db.is_finite() {
        return Err(config("snr_db must be finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SCENE_STREAM);

    let max_stationary = (stationary_fraction_max * n_targets as f64).floor() as usize;
    let n_stationary = rng.gen_range(0..=max_stationary);
    // open intervals: shrink the bounds by a relative hair
    let shrink = 1.0 - 1e-9;
    let r_max = params.max_range_m() * shrink;
    let v_max = params.max_velocity_mps() * shrink;
    let a_max = FRAC_PI_2 * shrink;

    let mut targets = Vec::with_capacity(n_targets);
    let mut occupied = HashSet::new();
    let mut attempts = 0usize;
    let max_attempts = 1000 + 100 * n_targets;
    while targets.len() < n_targets {
        attempts += 1;
        if attempts > max_attempts {
            return Err(config(format!(
                "could not place {n_targets} targets on distinct cells"
            )));
        }
        let range_m = rng.gen_range(0.0..r_max);
        if range_m <= 0.0 {
            continue;
        }
        let velocity_mps = if targets.len() < n_stationary {
            0.0
        } else {
            rng.gen_range(-v_max..v_max)
        };
        let t = TargetTruth {
            range_m,
            velocity_mps,
            angle_rad: rng.gen_range(-a_max..a_max),
            amplitude: 1.0,
        };
        if occupied.insert(t.cell(params)) {
            targets.push(t);
        }
    }

    Scenario::with_snr(*params, targets, snr_db, seed)
}
