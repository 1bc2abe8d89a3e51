//! Scoring detectors against ground truth.

mod montecarlo;
mod noise;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use montecarlo::{monte_carlo, McConfig, McRow};
pub use noise::{noise_rmse, qq_data, RmseRow};

use crate::baselines::{run_baseline, ts_cfar_rerun, BaselineKind, WindowConfig};
use crate::detector::{detect, DetectionSet, DetectorConfig};
use crate::error::{config, Result};
use crate::sim::{RadarParams, TargetTruth};
use crate::spectrum::{nca, RdStack};

/// Any detector the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DetectorKind {
    Ct,
    Baseline(BaselineKind),
    /// TS re-fitting the background after every detection.
    TsRerun,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 8] = [
        Self::Ct,
        Self::Baseline(BaselineKind::Ca),
        Self::Baseline(BaselineKind::Cago),
        Self::Baseline(BaselineKind::Caso),
        Self::Baseline(BaselineKind::Os),
        Self::Baseline(BaselineKind::Tm),
        Self::Baseline(BaselineKind::Ts),
        Self::TsRerun,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ct => "ct",
            Self::Baseline(b) => b.name(),
            Self::TsRerun => "ts_rerun",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| config(format!("unknown detector `{s}`")))
    }
}

impl TryFrom<String> for DetectorKind {
    type Error = crate::Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DetectorKind> for String {
    fn from(k: DetectorKind) -> String {
        k.name().to_string()
    }
}

/// Settings shared by every detector in a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSuite {
    pub ct: DetectorConfig,
    pub window: WindowConfig,
    pub calibration_seed: u64,
}

/// Runs `kind` at false-alarm rate `p_fa` (overriding `suite.ct.p_fa`).
pub fn run_detector(kind: DetectorKind, stack: &RdStack, p_fa: f64, suite: &DetectorSuite) -> Result<DetectionSet> {
    let cfg = DetectorConfig { p_fa, ..suite.ct };
    match kind {
        DetectorKind::Ct => detect(stack, &cfg),
        DetectorKind::Baseline(b) => {
            run_baseline(b, &nca(stack), stack.params(), &suite.window, p_fa, &cfg.trunc, suite.calibration_seed)
        }
        DetectorKind::TsRerun => {
            ts_cfar_rerun(&nca(stack), stack.params(), stack.n_channels(), p_fa, &cfg.trunc, cfg.k_max)
        }
    }
}

/// Which cells count as positives when sizing the negative population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositiveCells {
    /// One cell per truth.
    #[default]
    Truth,
    /// Every cell inside some truth's tolerance box.
    ToleranceBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatchConfig {
    pub range_tol: usize,
    pub doppler_tol: usize,
    pub positive_cells: PositiveCells,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self { range_tol: 1, doppler_tol: 1, positive_cells: PositiveCells::Truth }
    }
}

impl MatchConfig {
    /// Cells of the map that are not positives.
    pub fn negative_cells(&self, truths: &[TargetTruth], params: &RadarParams) -> usize {
        let (n, m) = (params.n_samples, params.n_chirps);
        let positives = match self.positive_cells {
            PositiveCells::Truth => truths.len(),
            PositiveCells::ToleranceBox => {
                let (rt, dt) = (self.range_tol.min(n / 2) as isize, self.doppler_tol.min(m / 2) as isize);
                let mut cells = HashSet::new();
                for t in truths {
                    let (p, q) = t.cell(params);
                    for a in -rt..=rt {
                        for b in -dt..=dt {
                            cells.insert(((p as isize + a).rem_euclid(n as isize), (q as isize + b).rem_euclid(m as isize)));
                        }
                    }
                }
                cells.len()
            }
        };
        (n * m).saturating_sub(positives)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MatchCounts {
    pub n_tp: usize,
    pub n_fp: usize,
    pub n_fn: usize,
}

fn circular_distance(a: usize, b: usize, len: usize) -> usize {
    let d = a.abs_diff(b) % len;
    d.min(len - d)
}

/// Greedy one-to-one matching.
///
/// Detections are visited in descending power, ties broken by `(r_ind,
/// v_ind)`. Each takes the nearest unmatched truth cell inside the
/// tolerance box (Chebyshev distance, then truth order).
pub fn match_detections(
    dets: &DetectionSet,
    truths: &[TargetTruth],
    params: &RadarParams,
    cfg: &MatchConfig,
) -> MatchCounts {
    let (n, m) = (params.n_samples, params.n_chirps);
    let cells: Vec<(usize, usize)> = truths.iter().map(|t| t.cell(params)).collect();
    let mut taken = vec![false; cells.len()];
    let mut order: Vec<_> = dets.detections.iter().collect();
    order.sort_by(|a, b| {
        b.power
            .total_cmp(&a.power)
            .then((a.peak.r_ind, a.peak.v_ind).cmp(&(b.peak.r_ind, b.peak.v_ind)))
    });
    let mut n_tp = 0;
    for d in order {
        let best = cells
            .iter()
            .enumerate()
            .filter(|(j, _)| !taken[*j])
            .filter_map(|(j, &(p, q))| {
                let dr = circular_distance(d.peak.r_ind, p, n);
                let dv = circular_distance(d.peak.v_ind, q, m);
                (dr <= cfg.range_tol && dv <= cfg.doppler_tol).then_some((dr.max(dv), j))
            })
            .min();
        if let Some((_, j)) = best {
            taken[j] = true;
            n_tp += 1;
        }
    }
    MatchCounts { n_tp, n_fp: dets.len() - n_tp, n_fn: truths.len() - n_tp }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_tp: usize,
    pub n_fp: usize,
    pub n_fn: usize,
    /// Positive cells: one per truth.
    pub n_p: usize,
    /// Negative cells, per [`MatchConfig::negative_cells`].
    pub n_n: usize,
    /// Recall; absent without truths.
    pub pd: Option<f64>,
    pub pfa: f64,
    /// Precision; 0 without detections.
    pub pa: f64,
}

pub fn metrics(n_tp: usize, n_fp: usize, truths: usize, n_n: usize) -> MetricsReport {
    MetricsReport {
        n_tp,
        n_fp,
        n_fn: truths.saturating_sub(n_tp),
        n_p: truths,
        n_n,
        pd: (truths > 0).then(|| n_tp as f64 / truths as f64),
        pfa: if n_n > 0 { n_fp as f64 / n_n as f64 } else { 0.0 },
        pa: if n_tp + n_fp > 0 { n_tp as f64 / (n_tp + n_fp) as f64 } else { 0.0 },
    }
}
