//! CLEAN step: sub-bin peak refinement, multichannel footprint
//! reconstruction and subtraction.
//!
//! A point target appears in every channel as the same 2D Dirichlet
//! footprint scaled by a channel-specific complex gain. Once the peak is
//! located to a fraction of a bin, the footprint is known up to those gains,
//! which a per-channel least-squares fit recovers in closed form.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::sim::RadarParams;
use crate::spectrum::{dirichlet, NcaMap, RdStack};

/// Default patch half-width `r_t` (an 11×11 patch).
pub const DEFAULT_PATCH_HALF_WIDTH: usize = 5;

/// Peak position refined to fractional bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinedPeak {
    pub r_ind: usize,
    pub v_ind: usize,
    pub delta_r: f64,
    pub delta_v: f64,
    /// `r_ind + delta_r`.
    pub r_hat: f64,
    /// `v_ind + delta_v`.
    pub v_hat: f64,
    pub range_m: f64,
    pub velocity_mps: f64,
}

impl RefinedPeak {
    /// Peak with no sub-bin correction.
    pub fn on_grid(params: &RadarParams, r_ind: usize, v_ind: usize) -> Self {
        Self::new(params, r_ind, v_ind, 0.0, 0.0)
    }

    pub fn new(params: &RadarParams, r_ind: usize, v_ind: usize, delta_r: f64, delta_v: f64) -> Self {
        let r_hat = r_ind as f64 + delta_r;
        let v_hat = v_ind as f64 + delta_v;
        Self {
            r_ind,
            v_ind,
            delta_r,
            delta_v,
            r_hat,
            v_hat,
            range_m: params.bins_to_range_m(r_hat, v_hat),
            velocity_mps: params.bin_to_velocity_mps(v_hat),
        }
    }
}

/// Unit-gain footprint of a tone over a `(2r_t+1)²` patch, row-major in the
/// range offset.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplatePatch {
    pub values: Vec<Complex64>,
    /// Patch centre `(range bin, Doppler bin)`, wrapped onto the map.
    pub center: (usize, usize),
    pub half_width: usize,
}

impl TemplatePatch {
    pub fn side(&self) -> usize {
        2 * self.half_width + 1
    }

    /// Value at offset `(a, b)` from the centre, `|a|, |b| ≤ r_t`.
    pub fn at(&self, a: isize, b: isize) -> Complex64 {
        let r = self.half_width as isize;
        self.values[((a + r) * (2 * r + 1) + b + r) as usize]
    }

    /// Map cells covered by the patch, in the order of `values`.
    pub fn cells(&self, n_range: usize, n_doppler: usize) -> impl Iterator<Item = (usize, usize)> {
        let r = self.half_width as isize;
        let (p0, q0) = (self.center.0 as isize, self.center.1 as isize);
        (-r..=r).flat_map(move |a| {
            (-r..=r).map(move |b| {
                (
                    (p0 + a).rem_euclid(n_range as isize) as usize,
                    (q0 + b).rem_euclid(n_doppler as isize) as usize,
                )
            })
        })
    }
}

/// Per-channel complex gains of a reconstructed target.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGains {
    pub gains: Vec<Complex64>,
}

/// Three-sample fractional-bin estimate around a DFT peak.
///
/// Returns the offset of the true tone from the centre sample, positive
/// towards `y_plus`, with the rectangular-window bias correction
/// `tan(π/len)/(π/len)`. A flat neighbourhood returns 0.
pub fn candan_delta(y_minus: Complex64, y0: Complex64, y_plus: Complex64, len: usize) -> f64 {
    let den = 2.0 * y0 - y_plus - y_minus;
    if den.norm() < 1e-12 * y0.norm() || den.norm() == 0.0 {
        return 0.0;
    }
    let x = PI / len as f64;
    let c = x.tan() / x;
    (c * ((y_minus - y_plus) / den).re).clamp(-0.5, 0.5)
}

/// Refines a peak cell to fractional bins by averaging the per-channel
/// three-sample estimates along each axis. Neighbours wrap circularly.
pub fn refine_peak(stack: &RdStack, r_ind: usize, v_ind: usize) -> Result<RefinedPeak> {
    let (n, m) = (stack.n_range(), stack.n_doppler());
    if n < 3 || m < 3 {
        return Err(config("refinement needs at least 3 bins per axis"));
    }
    if r_ind >= n || v_ind >= m {
        return Err(config(format!("peak ({r_ind}, {v_ind}) outside {n}×{m} map")));
    }
    let (p, q) = (r_ind as isize, v_ind as isize);
    let n_ch = stack.n_channels();
    let (mut dr, mut dv) = (0.0, 0.0);
    for l in 0..n_ch {
        let y0 = stack.get(r_ind, v_ind, l);
        dr += candan_delta(stack.get_wrapped(p - 1, q, l), y0, stack.get_wrapped(p + 1, q, l), n);
        dv += candan_delta(stack.get_wrapped(p, q - 1, l), y0, stack.get_wrapped(p, q + 1, l), m);
    }
    Ok(RefinedPeak::new(stack.params(), r_ind, v_ind, dr / n_ch as f64, dv / n_ch as f64))
}

/// Unit-gain 2D Dirichlet footprint of a tone at fractional bins
/// `(r_hat, v_hat)`, centred on the nearest integer cell.
pub fn build_template(params: &RadarParams, r_hat: f64, v_hat: f64, r_t: usize) -> Result<TemplatePatch> {
    if r_t < 1 {
        return Err(config("patch half-width must be at least 1"));
    }
    let (n, m) = (params.n_samples, params.n_chirps);
    if 2 * r_t + 1 > n || 2 * r_t + 1 > m {
        return Err(config(format!("patch of half-width {r_t} does not fit a {n}×{m} map")));
    }
    let (pc, qc) = (r_hat.round(), v_hat.round());
    let r = r_t as isize;
    let range: Vec<Complex64> = (-r..=r).map(|a| dirichlet(n, r_hat - (pc + a as f64))).collect();
    let doppler: Vec<Complex64> = (-r..=r).map(|b| dirichlet(m, v_hat - (qc + b as f64))).collect();
    let values = range.iter().flat_map(|x| doppler.iter().map(move |y| x * y)).collect();
    let center = (
        (pc as i64).rem_euclid(n as i64) as usize,
        (qc as i64).rem_euclid(m as i64) as usize,
    );
    Ok(TemplatePatch { values, center, half_width: r_t })
}

/// Observed spectra over the template's footprint, channel after channel.
pub fn extract_patch(stack: &RdStack, template: &TemplatePatch) -> Vec<Complex64> {
    let cells: Vec<_> = template.cells(stack.n_range(), stack.n_doppler()).collect();
    (0..stack.n_channels())
        .flat_map(|l| cells.iter().map(move |&(p, q)| stack.get(p, q, l)))
        .collect()
}

/// Least-squares channel gains: `a_l = ⟨g, y_l⟩ / (‖g‖² + eps)`.
///
/// `observed` holds one template-sized block per channel.
pub fn fit_gains(observed: &[Complex64], template: &TemplatePatch, eps: f64) -> Result<ChannelGains> {
    let g = &template.values;
    let energy: f64 = g.iter().map(|x| x.norm_sqr()).sum();
    if energy == 0.0 {
        return Err(Error::Numerical("cannot fit gains to an all-zero template".into()));
    }
    if observed.is_empty() || observed.len() % g.len() != 0 {
        return Err(config(format!(
            "observed patch of {} samples is not a multiple of the template size {}",
            observed.len(),
            g.len()
        )));
    }
    let gains = observed
        .chunks(g.len())
        .map(|y| g.iter().zip(y).map(|(gi, yi)| gi.conj() * yi).sum::<Complex64>() / (energy + eps))
        .collect();
    Ok(ChannelGains { gains })
}

/// Non-coherent power of the reconstructed target, `Σ_l |g·a_l|²`, embedded
/// in an otherwise zero `n_range × n_doppler` map.
pub fn reconstruct_pcut(template: &TemplatePatch, gains: &ChannelGains, n_range: usize, n_doppler: usize) -> NcaMap {
    let power: f64 = gains.gains.iter().map(|a| a.norm_sqr()).sum();
    let mut map = NcaMap::zeros(n_range, n_doppler);
    for ((p, q), g) in template.cells(n_range, n_doppler).zip(&template.values) {
        map.set(p, q, g.norm_sqr() * power);
    }
    map
}

/// Subtracts `pcut` from the residual (clamping at 0), forces the centre
/// cell to 0 and adds `pcut` minus its centre cell to the sidelobe history.
pub fn subtract_and_update(
    residual: &mut NcaMap,
    pcut: &NcaMap,
    sidelobe_hist: &mut NcaMap,
    center: (usize, usize),
) -> Result<()> {
    if !residual.same_dims(pcut) || !residual.same_dims(sidelobe_hist) {
        return Err(config("residual, P_CUT and sidelobe maps differ in size"));
    }
    let c = residual.index(center.0, center.1);
    for (x, cut) in residual.as_mut_slice().iter_mut().zip(pcut.as_slice()) {
        *x = (*x - cut).max(0.0);
    }
    residual.as_mut_slice()[c] = 0.0;
    for (i, (h, cut)) in sidelobe_hist.as_mut_slice().iter_mut().zip(pcut.as_slice()).enumerate() {
        if i != c {
            *h += cut;
        }
    }
    Ok(())
}
