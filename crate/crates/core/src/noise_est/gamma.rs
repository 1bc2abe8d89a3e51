//! Gamma-distribution helpers for integer shape `L` (the channel count).

use statrs::function::gamma::{gamma_lr, gamma_ur};

use crate::error::{config, Error, Result};

const ROOT_RESIDUAL: f64 = 1e-12;

/// Regularized lower incomplete gamma `γ(a, x)/Γ(a)`.
pub fn regularized_lower(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else {
        gamma_lr(a, x)
    }
}

/// Regularized upper incomplete gamma `Γ(a, x)/Γ(a)`.
pub fn regularized_upper(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else {
        gamma_ur(a, x)
    }
}

/// CDF of Gamma(shape, scale) at `x`.
pub fn gamma_cdf(shape: f64, scale: f64, x: f64) -> f64 {
    regularized_lower(shape, x / scale)
}

/// Normalized truncation point `u_q` with `P(Z > u_q·μ/L) = p_fa` for
/// `Z ~ Gamma(L, μ/L)`, i.e. `γ(L, u_q)/Γ(L) = 1 − p_fa`.
///
/// Solved by bisection on the upper tail, which keeps full relative accuracy
/// for small `p_fa`.
pub fn invert_gamma_cdf(shape_l: usize, p_fa: f64) -> Result<f64> {
    if shape_l < 1 {
        return Err(config("shape must be at least 1"));
    }
    if !(p_fa > 0.0 && p_fa < 1.0) {
        return Err(config(format!("p_fa must lie in (0, 1), got {p_fa}")));
    }
    let a = shape_l as f64;
    let tail = |u: f64| regularized_upper(a, u) - p_fa;

    let mut lo = 0.0;
    let mut hi = a.max(1.0);
    while tail(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Numerical(format!("no bracket for p_fa = {p_fa}")));
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if tail(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u = if tail(lo).abs() < tail(hi).abs() { lo } else { hi };
    let residual = (regularized_lower(a, u) - (1.0 - p_fa)).abs();
    if residual >= ROOT_RESIDUAL {
        return Err(Error::Numerical(format!(
            "gamma quantile residual {residual:e} for L = {shape_l}, p_fa = {p_fa}"
        )));
    }
    Ok(u)
}

/// Ratio of the truncated to the untruncated mean, `γ(L+1, u)/(L·γ(L, u))`.
///
/// Written as a ratio of regularized functions: `Γ(L+1) = L·Γ(L)` cancels
/// the `L`.
pub fn truncation_gain(shape_l: usize, u_q: f64) -> f64 {
    let a = shape_l as f64;
    regularized_lower(a + 1.0, u_q) / regularized_lower(a, u_q)
}

/// `E[Z | Z ≤ t]` for `Z ~ Gamma(L, μ/L)`.
pub fn truncated_mean_expected(mu_z: f64, shape_l: usize, t: f64) -> f64 {
    mu_z * truncation_gain(shape_l, shape_l as f64 * t / mu_z)
}

/// Median over mean of Gamma(L, θ); independent of θ.
pub fn median_to_mean_ratio(shape_l: usize) -> Result<f64> {
    Ok(invert_gamma_cdf(shape_l, 0.5)? / shape_l as f64)
}
