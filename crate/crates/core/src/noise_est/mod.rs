//! Background-noise estimation by iterated truncated statistics.
//!
//! Under H₀ every cell of an `L`-channel NCA map is `Gamma(L, μ/L)`. Cutting
//! the map at `T = u_q·μ/L` removes the strong target cells, and the mean of
//! what survives relates to `μ` through the constant gain
//! `g_u = γ(L+1, u_q) / (L·γ(L, u_q))`. Iterating `μ ← mean(x ≤ T(μ)) / g_u`
//! converges to the background mean.

pub mod gamma;

use serde::{Deserialize, Serialize};

pub use gamma::{invert_gamma_cdf, truncated_mean_expected, truncation_gain};

use crate::error::{config, Error, Result};
use crate::spectrum::NcaMap;

/// Initial estimate of the background mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitStrategy {
    /// Median of all cells over the Gamma(L) median-to-mean ratio.
    Median,
    /// Plain mean of all cells.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncConfig {
    /// Tail probability that fixes the truncation point `u_q`.
    pub p_fa_internal: f64,
    /// Relative change between iterates that counts as converged.
    pub tol: f64,
    /// Regularizer of the convergence test, relative to the initial estimate.
    pub eps: f64,
    pub max_iter: usize,
    pub init: InitStrategy,
}

impl Default for TruncConfig {
    fn default() -> Self {
        Self { p_fa_internal: 1e-3, tol: 1e-5, eps: 1e-12, max_iter: 100, init: InitStrategy::Median }
    }
}

impl TruncConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_fa_internal > 0.0 && self.p_fa_internal < 1.0) {
            return Err(config("p_fa_internal must lie in (0, 1)"));
        }
        if !(self.tol > 0.0) || !(self.eps > 0.0) {
            return Err(config("tol and eps must be positive"));
        }
        if self.max_iter < 1 {
            return Err(config("max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// Fitted background model `Gamma(L, μ/L)` with its truncation point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaNoiseModel {
    pub shape_l: usize,
    /// Mean of the background power.
    pub mu_z: f64,
    /// Scale, `mu_z / L`.
    pub theta: f64,
    /// Truncation threshold `u_q·mu_z/L`.
    pub trunc_threshold: f64,
    pub u_q: f64,
    pub g_u: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl GammaNoiseModel {
    pub fn variance(&self) -> f64 {
        self.shape_l as f64 * self.theta * self.theta
    }

    /// CDF of the fitted model.
    pub fn cdf(&self, x: f64) -> f64 {
        gamma::gamma_cdf(self.shape_l as f64, self.theta, x)
    }

    /// Inverse CDF of the fitted model at probability `p`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        Ok(invert_gamma_cdf(self.shape_l, 1.0 - p)? * self.theta)
    }

    /// Estimated noise matrix: every cell holds `mu_z`.
    pub fn noise_matrix(&self, n_range: usize, n_doppler: usize) -> NcaMap {
        NcaMap::filled(n_range, n_doppler, self.mu_z)
    }
}

/// Minimum number of cells `estimate_noise` accepts.
pub const MIN_CELLS: usize = 100;

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    let mid = v.len() / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    *m
}

/// Fits the background Gamma model of an NCA map by iterated truncation.
///
/// Hitting `max_iter` is not an error: the last iterate is returned with
/// `converged = false`.
pub fn estimate_noise(map: &NcaMap, shape_l: usize, cfg: &TruncConfig) -> Result<GammaNoiseModel> {
    cfg.validate()?;
    if shape_l < 1 {
        return Err(config("shape must be at least 1"));
    }
    let cells = map.as_slice();
    if cells.len() < MIN_CELLS {
        return Err(config(format!("noise estimation needs >= {MIN_CELLS} cells, got {}", cells.len())));
    }
    if cells.iter().all(|&x| x == 0.0) {
        return Err(Error::Degenerate("all-zero map".into()));
    }
    let l = shape_l as f64;
    let u_q = invert_gamma_cdf(shape_l, cfg.p_fa_internal)?;
    let g_u = truncation_gain(shape_l, u_q);

    let initial = match cfg.init {
        InitStrategy::Median => median(cells) / gamma::median_to_mean_ratio(shape_l)?,
        InitStrategy::Mean => cells.iter().sum::<f64>() / cells.len() as f64,
    };
    if !(initial > 0.0 && initial.is_finite()) {
        return Err(Error::Degenerate(format!("initial background estimate is {initial}")));
    }
    let eps = cfg.eps * initial;

    let mut mu_prev = initial;
    let mut mu = initial;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let t = u_q * mu_prev / l;
        let (sum, kept) = cells
            .iter()
            .filter(|&&x| x <= t)
            .fold((0.0, 0usize), |(s, n), &x| (s + x, n + 1));
        if kept == 0 {
            return Err(Error::Estimation(format!("truncation at {t} keeps no samples")));
        }
        mu = sum / kept as f64 / g_u;
        if !(mu > 0.0) {
            return Err(Error::Estimation("truncated samples are all zero".into()));
        }
        let change = (mu - mu_prev).abs() / (mu_prev + eps);
        mu_prev = mu;
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(GammaNoiseModel {
        shape_l,
        mu_z: mu,
        theta: mu / l,
        trunc_threshold: u_q * mu / l,
        u_q,
        g_u,
        iterations,
        converged,
    })
}
