//! The CT-CFAR loop: fit the background once, then repeatedly take the
//! strongest residual cell, compare it with a threshold that includes the
//! sidelobe energy already removed, and CLEAN it out of the map.

use serde::{Deserialize, Serialize};

use crate::clean::{
    build_template, extract_patch, fit_gains, reconstruct_pcut, refine_peak, subtract_and_update, RefinedPeak,
    DEFAULT_PATCH_HALF_WIDTH,
};
use crate::error::{config, Error, Result};
use crate::noise_est::{estimate_noise, invert_gamma_cdf, GammaNoiseModel, TruncConfig};
use crate::spectrum::{nca, NcaMap, RdStack};

/// Divisor used when averaging the threshold window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdNorm {
    /// Divide by the number of summed cells, `N·(2r+1)`.
    #[default]
    Normalized,
    /// Divide by `N + 2r + 1`.
    Eq32Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    /// Detection false-alarm probability.
    pub p_fa: f64,
    pub trunc: TruncConfig,
    /// Half-width `r` of the Doppler window averaged by the threshold.
    pub slow_half_window: usize,
    /// Half-width `r_t` of the CLEAN patch.
    pub patch_half_width: usize,
    pub k_max: usize,
    pub threshold_norm: ThresholdNorm,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            p_fa: 1e-3,
            trunc: TruncConfig::default(),
            slow_half_window: 2,
            patch_half_width: DEFAULT_PATCH_HALF_WIDTH,
            k_max: 64,
            threshold_norm: ThresholdNorm::Normalized,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_fa > 0.0 && self.p_fa < 1.0) {
            return Err(config(format!("p_fa must lie in (0, 1), got {}", self.p_fa)));
        }
        if self.k_max < 1 {
            return Err(config("k_max must be at least 1"));
        }
        if self.patch_half_width < 1 {
            return Err(config("patch_half_width must be at least 1"));
        }
        self.trunc.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub peak: RefinedPeak,
    /// Value that crossed the threshold.
    pub power: f64,
    pub threshold: f64,
    /// Extraction pass, starting at 0.
    pub iteration: usize,
}

/// Why a detector stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The strongest remaining cell fell below its threshold.
    Threshold,
    /// `k_max` detections were extracted.
    KMax,
    /// The residual map was exhausted.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSet {
    /// In extraction order.
    pub detections: Vec<Detection>,
    /// Background fit, for detectors that make one.
    pub noise_model: Option<GammaNoiseModel>,
    pub terminated_by: Termination,
}

impl DetectionSet {
    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }

    /// Integer cells of all detections, sorted.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        let mut c: Vec<_> = self.detections.iter().map(|d| (d.peak.r_ind, d.peak.v_ind)).collect();
        c.sort_unstable();
        c
    }
}

/// Threshold multiplier `α = u_q/L − 1`: a noise cell `Z ~ Gamma(L, μ/L)`
/// exceeds `μ + α·μ` with probability `p_fa`.
pub fn alpha_from_pfa(shape_l: usize, p_fa: f64) -> Result<f64> {
    Ok(invert_gamma_cdf(shape_l, p_fa)? / shape_l as f64 - 1.0)
}

/// `α` times the mean of `N_G + N_s` over every range row and the Doppler
/// columns `v_ind ± r` (wrapped).
pub fn adaptive_threshold(
    noise: &NcaMap,
    sidelobe: &NcaMap,
    v_ind: usize,
    alpha: f64,
    r: usize,
    mode: ThresholdNorm,
) -> f64 {
    let n = noise.n_range();
    let m = noise.n_doppler() as isize;
    let mut sum = 0.0;
    for j in -(r as isize)..=(r as isize) {
        let q = (v_ind as isize + j).rem_euclid(m) as usize;
        sum += noise.column(q).iter().sum::<f64>() + sidelobe.column(q).iter().sum::<f64>();
    }
    let divisor = match mode {
        ThresholdNorm::Normalized => (n * (2 * r + 1)) as f64,
        ThresholdNorm::Eq32Literal => (n + 2 * r + 1) as f64,
    };
    alpha * sum / divisor
}

/// Runs CT-CFAR on a range-Doppler stack.
pub fn detect(stack: &RdStack, cfg: &DetectorConfig) -> Result<DetectionSet> {
    detect_observed(stack, cfg, |_, _| {})
}

/// [`detect`], calling `observe(residual, sidelobe_history)` after every
/// CLEAN pass.
pub fn detect_observed(
    stack: &RdStack,
    cfg: &DetectorConfig,
    mut observe: impl FnMut(&NcaMap, &NcaMap),
) -> Result<DetectionSet> {
    cfg.validate()?;
    let params = stack.params();
    let (n, m) = (stack.n_range(), stack.n_doppler());
    let shape_l = stack.n_channels();
    let map = nca(stack);
    if map.as_slice().iter().all(|&x| x == 0.0) {
        return Err(Error::Degenerate("all-zero range-Doppler stack".into()));
    }
    let model = estimate_noise(&map, shape_l, &cfg.trunc)?;
    let alpha = alpha_from_pfa(shape_l, cfg.p_fa)?;

    let noise = model.noise_matrix(n, m);
    let mut residual = map;
    for x in residual.as_mut_slice() {
        *x = (*x - model.mu_z).max(0.0);
    }
    let mut sidelobe = NcaMap::zeros(n, m);
    let mut detections = Vec::new();

    let mut terminated_by = Termination::KMax;
    for iteration in 0..cfg.k_max {
        let Some((i, value)) = residual.argmax() else {
            terminated_by = Termination::Degenerate;
            break;
        };
        let (r_ind, v_ind) = residual.cell_of(i);
        let threshold =
            adaptive_threshold(&noise, &sidelobe, v_ind, alpha, cfg.slow_half_window, cfg.threshold_norm);
        if !(value > threshold) {
            terminated_by = Termination::Threshold;
            break;
        }
        if value == 0.0 {
            terminated_by = Termination::Degenerate;
            break;
        }
        let peak = refine_peak(stack, r_ind, v_ind)?;
        let template = build_template(params, peak.r_hat, peak.v_hat, cfg.patch_half_width)?;
        let g2: f64 = template.values.iter().map(|g| g.norm_sqr()).sum();
        let gains = fit_gains(&extract_patch(stack, &template), &template, 1e-12 * g2)?;
        let pcut = reconstruct_pcut(&template, &gains, n, m);
        subtract_and_update(&mut residual, &pcut, &mut sidelobe, (r_ind, v_ind))?;
        detections.push(Detection { peak, power: value, threshold, iteration });
        observe(&residual, &sidelobe);
    }
    Ok(DetectionSet { detections, noise_model: Some(model), terminated_by })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{synthesize_cube, RadarParams, Scenario, TargetTruth};
    use crate::spectrum::rd_transform;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Gamma};

    fn stack_of(params: RadarParams, targets: Vec<TargetTruth>, noise_var: f64, seed: u64) -> RdStack {
        rd_transform(&synthesize_cube(&Scenario { params, targets, noise_var, seed }).unwrap())
    }

    #[test]
    fn alpha_closed_form() {
        let a = alpha_from_pfa(1, 1e-3).unwrap();
        assert!((a - (1000f64.ln() - 1.0)).abs() < 1e-10);
        assert!((a - 5.907755).abs() < 1e-6);
        assert!((alpha_from_pfa(4, 1.0 - 1e-12).unwrap() + 1.0).abs() < 1e-3);
    }

    #[test]
    fn alpha_gives_nominal_exceedance() {
        let l = 4;
        let mu = 3.0;
        let alpha = alpha_from_pfa(l, 1e-3).unwrap();
        let t = mu * (1.0 + alpha);
        let dist = Gamma::new(l as f64, mu / l as f64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 1_000_000;
        let hits = (0..n).filter(|_| dist.sample(&mut rng) > t).count();
        let rate = hits as f64 / n as f64;
        assert!((0.5e-3..=2e-3).contains(&rate), "{rate}");
    }

    #[test]
    fn threshold_arithmetic() {
        let (n, m) = (256, 32);
        let mu = 2.0;
        let noise = NcaMap::filled(n, m, mu);
        let zero = NcaMap::zeros(n, m);
        let t = adaptive_threshold(&noise, &zero, 5, 1.5, 2, ThresholdNorm::Normalized);
        assert!((t - 1.5 * mu).abs() < 1e-12);

        let mut side = NcaMap::zeros(n, m);
        side.set(10, 6, 100.0);
        side.set(200, 3, 28.0);
        side.set(7, 8, 1e6); // outside the window
        let t = adaptive_threshold(&noise, &side, 5, 1.5, 2, ThresholdNorm::Normalized);
        assert!((t - 1.5 * (mu + 128.0 / (256.0 * 5.0))).abs() < 1e-12);

        let t = adaptive_threshold(&noise, &zero, 5, 1.5, 2, ThresholdNorm::Eq32Literal);
        assert!((t - 1.5 * mu * 1280.0 / 261.0).abs() < 1e-9);
    }

    #[test]
    fn threshold_window_wraps() {
        let noise = NcaMap::zeros(8, 8);
        let mut side = NcaMap::zeros(8, 8);
        side.set(0, 7, 40.0);
        let t = adaptive_threshold(&noise, &side, 0, 1.0, 1, ThresholdNorm::Normalized);
        assert!((t - 40.0 / 24.0).abs() < 1e-12);
    }

    #[test]
    fn all_zero_stack_is_degenerate() {
        let p = RadarParams { n_samples: 32, n_chirps: 16, n_channels: 2, ..RadarParams::table1() };
        let stack = stack_of(p, vec![], 0.0, 0);
        assert!(matches!(detect(&stack, &DetectorConfig::default()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn invalid_config_rejected() {
        let bad = DetectorConfig { p_fa: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = DetectorConfig { k_max: 0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn noise_only_false_alarm_count() {
        let p = RadarParams::table1();
        let total: usize = (0..100)
            .map(|seed| detect(&stack_of(p, vec![], 1.0, seed), &DetectorConfig::default()).unwrap().len())
            .sum();
        let mean = total as f64 / 100.0;
        assert!((16.0..=66.0).contains(&mean), "{mean}");
    }

    #[test]
    fn strong_target_detected_once_near_truth() {
        let p = RadarParams::table1();
        let mut good = 0;
        for seed in 0..100u64 {
            let t = TargetTruth::at_bins(&p, 10.0 + (seed % 110) as f64 + 0.37, -20.0 + (seed % 40) as f64 + 0.21, 0.2, 1.0);
            let (r, v) = t.cell(&p);
            let set = detect(&stack_of(p, vec![t], 0.01, seed), &DetectorConfig::default()).unwrap();
            let near = set
                .detections
                .iter()
                .filter(|d| {
                    let dr = (d.peak.r_ind as isize - r as isize).rem_euclid(256).min((r as isize - d.peak.r_ind as isize).rem_euclid(256));
                    let dv = (d.peak.v_ind as isize - v as isize).rem_euclid(128).min((v as isize - d.peak.v_ind as isize).rem_euclid(128));
                    dr <= 1 && dv <= 1
                })
                .count();
            if near == 1 {
                good += 1;
            }
        }
        assert!(good >= 99, "{good}/100");
    }

    #[test]
    fn powers_nonincreasing_and_history_monotone() {
        let p = RadarParams { n_samples: 128, n_chirps: 64, n_channels: 4, ..RadarParams::table1() };
        let targets = vec![
            TargetTruth::at_bins(&p, 20.3, 5.4, 0.1, 1.0),
            TargetTruth::at_bins(&p, 40.7, -10.2, -0.3, 0.5),
            TargetTruth::at_bins(&p, 58.1, 20.45, 0.5, 0.25),
        ];
        let stack = stack_of(p, targets, 0.0, 3);
        let mut prev: Option<NcaMap> = None;
        let set = detect_observed(&stack, &DetectorConfig::default(), |_, hist| {
            if let Some(old) = &prev {
                assert!(old.as_slice().iter().zip(hist.as_slice()).all(|(a, b)| b >= a));
            }
            prev = Some(hist.clone());
        })
        .unwrap();
        assert!(set.len() >= 3);
        for w in set.detections.windows(2) {
            assert!(w[1].power <= w[0].power);
        }
    }

    #[test]
    fn halts_within_k_max() {
        let p = RadarParams { n_samples: 64, n_chirps: 32, n_channels: 2, ..RadarParams::table1() };
        let stack = stack_of(p, vec![], 1.0, 9);
        let cfg = DetectorConfig { p_fa: 0.5, k_max: 7, ..Default::default() };
        let set = detect(&stack, &cfg).unwrap();
        assert_eq!(set.len(), 7);
        assert_eq!(set.terminated_by, Termination::KMax);
    }

    #[test]
    fn decisions_invariant_to_scaling() {
        let p = RadarParams { n_samples: 128, n_chirps: 64, n_channels: 4, ..RadarParams::table1() };
        let targets = vec![TargetTruth::at_bins(&p, 30.3, 9.6, 0.2, 1.0), TargetTruth::at_bins(&p, 50.0, -4.3, 0.0, 0.1)];
        let cube = synthesize_cube(&Scenario { params: p, targets, noise_var: 1.0, seed: 12 }).unwrap();
        let base = detect(&rd_transform(&cube), &DetectorConfig::default()).unwrap();
        for c in [0.25, 8.0, 1024.0] {
            let mut scaled = cube.clone();
            scaled.scale(num_complex::Complex64::new(c, 0.0));
            let set = detect(&rd_transform(&scaled), &DetectorConfig::default()).unwrap();
            assert_eq!(set.cells(), base.cells(), "c = {c}");
        }
    }
}
