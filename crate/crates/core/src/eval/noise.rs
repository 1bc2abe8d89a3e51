use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::noise_est::{estimate_noise, GammaNoiseModel, TruncConfig};
use crate::sim::{random_scenario, synthesize_cube, RadarParams};
use crate::spectrum::{nca, rd_transform};

/// Background-fit error at one SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmseRow {
    pub snr_db: f64,
    pub trials: usize,
    /// The shape is fixed to the channel count, so this is always 0.
    pub rmse_shape: f64,
    pub rmse_scale: f64,
    pub rmse_mean: f64,
    pub rmse_var: f64,
    /// `rmse_mean` over the true mean.
    pub rel_rmse_mean: f64,
    /// Mean of `(μ̂ − μ)/μ`.
    pub rel_bias_mean: f64,
}

/// RMSE of the fitted background against the true `Gamma(L, N·M·σ²)`
/// over `trials` frames of `n_targets` random targets per SNR.
///
/// Trial `t` uses seed `seed ^ t` at every SNR, so SNR points differ only in
/// the noise level.
pub fn noise_rmse(
    params: &RadarParams,
    n_targets: usize,
    snr_grid: &[f64],
    trials: usize,
    seed: u64,
    trunc: &TruncConfig,
) -> Result<Vec<RmseRow>> {
    if trials < 1 {
        return Err(config("trials must be at least 1"));
    }
    let l = params.n_channels;
    let cells = params.n_cells() as f64;
    snr_grid
        .iter()
        .map(|&snr_db| {
            let errs: Vec<[f64; 4]> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let scene = random_scenario(params, n_targets, snr_db, 0.0, seed ^ t as u64)?;
                    let theta = cells * scene.noise_var;
                    let mu = l as f64 * theta;
                    let var = l as f64 * theta * theta;
                    let model = estimate_noise(&nca(&rd_transform(&synthesize_cube(&scene)?)), l, trunc)?;
                    Ok([model.theta - theta, model.mu_z - mu, model.variance() - var, (model.mu_z - mu) / mu])
                })
                .collect::<Result<_>>()?;
            let rms = |k: usize| (errs.iter().map(|e| e[k] * e[k]).sum::<f64>() / trials as f64).sqrt();
            let rel: Vec<f64> = errs.iter().map(|e| e[3]).collect();
            Ok(RmseRow {
                snr_db,
                trials,
                rmse_shape: 0.0,
                rmse_scale: rms(0),
                rmse_mean: rms(1),
                rmse_var: rms(2),
                rel_rmse_mean: (rel.iter().map(|r| r * r).sum::<f64>() / trials as f64).sqrt(),
                rel_bias_mean: rel.iter().sum::<f64>() / trials as f64,
            })
        })
        .collect()
}

/// Pairs `(model quantile, empirical quantile)` at levels `(i − ½)/n_points`.
/// Empirical quantiles interpolate linearly between order statistics.
pub fn qq_data(samples: &[f64], model: &GammaNoiseModel, n_points: usize) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(config("Q-Q data needs at least one sample"));
    }
    if n_points < 1 {
        return Err(config("n_points must be at least 1"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let last = (sorted.len() - 1) as f64;
    (1..=n_points)
        .map(|i| {
            let p = (i as f64 - 0.5) / n_points as f64;
            let h = p * last;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            let emp = sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]);
            Ok((model.quantile(p)?, emp))
        })
        .collect()
}
