//! Classical CFAR detectors used as comparison points.
//!
//! The sliding-window family (CA, CAGO, CASO, OS, TM) estimates the local
//! background from a 2D reference ring around every cell. Their scale
//! factors are calibrated by Monte Carlo on Gamma(L) noise maps, because a
//! closed form exists only for exponential backgrounds. TS thresholds the
//! whole map against one truncated-statistics background estimate.

mod calibrate;
mod window;

use serde::{Deserialize, Serialize};

pub use calibrate::{calibrate_scale, CALIBRATION_MAPS};

use crate::clean::RefinedPeak;
use crate::detector::{alpha_from_pfa, Detection, DetectionSet, Termination};
use crate::error::{config, Result};
use crate::noise_est::{estimate_noise, TruncConfig};
use crate::sim::RadarParams;
use crate::spectrum::NcaMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Ca,
    Cago,
    Caso,
    Os,
    Tm,
    Ts,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 6] = [Self::Ca, Self::Cago, Self::Caso, Self::Os, Self::Tm, Self::Ts];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ca => "ca",
            Self::Cago => "cago",
            Self::Caso => "caso",
            Self::Os => "os",
            Self::Tm => "tm",
            Self::Ts => "ts",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowConfig {
    /// Reference cells per side along range.
    pub train_fast: usize,
    /// Reference cells per side along Doppler.
    pub train_slow: usize,
    /// Guard cells per side, both axes.
    pub guard: usize,
    /// 1-based rank for OS; `None` selects `ceil(count/2)`.
    pub os_rank: Option<usize>,
    /// Cells discarded at each extreme by TM.
    pub tm_trim: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self { train_fast: 10, train_slow: 6, guard: 5, os_rank: None, tm_trim: 3 }
    }
}

impl WindowConfig {
    /// Number of reference cells.
    pub fn ring_len(&self) -> usize {
        window::ring_len(self)
    }

    pub fn os_rank_resolved(&self) -> usize {
        self.os_rank.unwrap_or_else(|| self.ring_len().div_ceil(2))
    }

    pub fn validate(&self, n_range: usize, n_doppler: usize) -> Result<()> {
        let rows = 2 * (self.guard + self.train_fast) + 1;
        let cols = 2 * (self.guard + self.train_slow) + 1;
        if rows > n_range || cols > n_doppler {
            return Err(config(format!("{rows}×{cols} window does not fit a {n_range}×{n_doppler} map")));
        }
        let n = self.ring_len();
        if n == 0 {
            return Err(config("reference ring is empty"));
        }
        if 2 * self.tm_trim >= n {
            return Err(config(format!("tm_trim {} leaves no cells of {n}", self.tm_trim)));
        }
        let k = self.os_rank_resolved();
        if k < 1 || k > n {
            return Err(config(format!("os_rank {k} outside 1..={n}")));
        }
        Ok(())
    }
}

/// Background statistic `g` of every cell for a sliding-window kind.
pub fn window_statistic(map: &NcaMap, kind: BaselineKind, w: &WindowConfig) -> Result<Vec<f64>> {
    w.validate(map.n_range(), map.n_doppler())?;
    let n = w.ring_len() as f64;
    let sum_kinds = || window::half_sums(map, w);
    Ok(match kind {
        BaselineKind::Ca => {
            let h = sum_kinds();
            h.leading.iter().zip(&h.lagging).map(|(a, b)| (a + b) / n).collect()
        }
        BaselineKind::Cago => {
            let h = sum_kinds();
            h.leading.iter().zip(&h.lagging).map(|(a, b)| 2.0 * a.max(*b) / n).collect()
        }
        BaselineKind::Caso => {
            let h = sum_kinds();
            h.leading.iter().zip(&h.lagging).map(|(a, b)| 2.0 * a.min(*b) / n).collect()
        }
        BaselineKind::Os => {
            let k = w.os_rank_resolved() - 1;
            per_cell(map, w, |buf| *buf.select_nth_unstable_by(k, f64::total_cmp).1)
        }
        BaselineKind::Tm => {
            let h = sum_kinds();
            let t = w.tm_trim;
            if t == 0 {
                h.leading.iter().zip(&h.lagging).map(|(a, b)| (a + b) / n).collect()
            } else {
                let kept = n - 2.0 * t as f64;
                let extremes = per_cell(map, w, |buf| {
                    buf.select_nth_unstable_by(t, f64::total_cmp);
                    let low: f64 = buf[..t].iter().sum();
                    let upper = &mut buf[t..];
                    let split = upper.len() - t;
                    upper.select_nth_unstable_by(split, f64::total_cmp);
                    low + upper[split..].iter().sum::<f64>()
                });
                h.leading
                    .iter()
                    .zip(&h.lagging)
                    .zip(&extremes)
                    .map(|((a, b), e)| (a + b - e) / kept)
                    .collect()
            }
        }
        BaselineKind::Ts => return Err(config("TS has no sliding-window statistic")),
    })
}

fn per_cell(map: &NcaMap, w: &WindowConfig, mut f: impl FnMut(&mut [f64]) -> f64) -> Vec<f64> {
    let offsets = window::ring_offsets(w);
    let mut buf = Vec::with_capacity(offsets.len());
    let mut out = vec![0.0; map.len()];
    for q in 0..map.n_doppler() {
        for p in 0..map.n_range() {
            window::gather(map, &offsets, p, q, &mut buf);
            out[map.index(p, q)] = f(&mut buf);
        }
    }
    out
}

/// Detections sorted by descending power, ties by cell index.
fn collect(
    map: &NcaMap,
    params: &RadarParams,
    mut threshold: impl FnMut(usize) -> f64,
) -> Vec<Detection> {
    let mut hits: Vec<(usize, f64, f64)> = map
        .as_slice()
        .iter()
        .enumerate()
        .filter_map(|(i, &x)| {
            let t = threshold(i);
            (x > t).then_some((i, x, t))
        })
        .collect();
    hits.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    hits.into_iter()
        .map(|(i, power, threshold)| {
            let (p, q) = map.cell_of(i);
            Detection { peak: RefinedPeak::on_grid(params, p, q), power, threshold, iteration: 0 }
        })
        .collect()
}

/// Sliding-window CFAR: a cell is detected when it exceeds `scale·g`.
pub fn sliding_cfar(
    map: &NcaMap,
    params: &RadarParams,
    kind: BaselineKind,
    w: &WindowConfig,
    scale: f64,
) -> Result<DetectionSet> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(config(format!("scale must be positive, got {scale}")));
    }
    let g = window_statistic(map, kind, w)?;
    let detections = collect(map, params, |i| scale * g[i]);
    Ok(DetectionSet { detections, noise_model: None, terminated_by: Termination::Threshold })
}

/// Global truncated-statistics CFAR: every cell against `μ̂·(1 + α)`.
pub fn ts_cfar(
    map: &NcaMap,
    params: &RadarParams,
    shape_l: usize,
    p_fa: f64,
    trunc: &TruncConfig,
) -> Result<DetectionSet> {
    let model = estimate_noise(map, shape_l, trunc)?;
    let t = model.mu_z * (1.0 + alpha_from_pfa(shape_l, p_fa)?);
    let detections = collect(map, params, |_| t);
    Ok(DetectionSet { detections, noise_model: Some(model), terminated_by: Termination::Threshold })
}

/// TS-CFAR that re-fits the background after each detection: take the
/// strongest cell, compare with `μ̂·(1 + α)` from the current map, censor it
/// to 0 and repeat. Used as the per-detection cost reference.
pub fn ts_cfar_rerun(
    map: &NcaMap,
    params: &RadarParams,
    shape_l: usize,
    p_fa: f64,
    trunc: &TruncConfig,
    k_max: usize,
) -> Result<DetectionSet> {
    let alpha = alpha_from_pfa(shape_l, p_fa)?;
    let mut work = map.clone();
    let mut detections = Vec::new();
    let mut model = estimate_noise(&work, shape_l, trunc)?;
    let mut terminated_by = Termination::KMax;
    for iteration in 0..k_max {
        if iteration > 0 {
            model = estimate_noise(&work, shape_l, trunc)?;
        }
        let threshold = model.mu_z * (1.0 + alpha);
        let (i, power) = work.argmax().expect("map is non-empty");
        if !(power > threshold) {
            terminated_by = Termination::Threshold;
            break;
        }
        let (p, q) = work.cell_of(i);
        detections.push(Detection { peak: RefinedPeak::on_grid(params, p, q), power, threshold, iteration });
        work.as_mut_slice()[i] = 0.0;
    }
    Ok(DetectionSet { detections, noise_model: Some(model), terminated_by })
}

/// Runs a baseline with its calibrated scale (or, for TS, the analytic
/// threshold).
pub fn run_baseline(
    kind: BaselineKind,
    map: &NcaMap,
    params: &RadarParams,
    w: &WindowConfig,
    p_fa: f64,
    trunc: &TruncConfig,
    calibration_seed: u64,
) -> Result<DetectionSet> {
    let shape_l = params.n_channels;
    match kind {
        BaselineKind::Ts => ts_cfar(map, params, shape_l, p_fa, trunc),
        _ => {
            let scale = calibrate_scale(kind, w, shape_l, p_fa, calibration_seed)?;
            sliding_cfar(map, params, kind, w, scale)
        }
    }
}
