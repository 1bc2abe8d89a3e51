//! Run configuration: one TOML document covering every command.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ctcfar::baselines::WindowConfig;
use ctcfar::eval::{DetectorKind, DetectorSuite, MatchConfig, McConfig};
use ctcfar::sim::{random_scenario, Scenario, TargetTruth};
use ctcfar::{DetectorConfig, Error, RadarParams, Result};

/// Presets shipped with the binary, by name.
pub const PRESETS: [(&str, &str); 3] = [
    ("table1", include_str!("../presets/table1.cfg")),
    ("fig6_sweep", include_str!("../presets/fig6_sweep.cfg")),
    ("fig8_targets", include_str!("../presets/fig8_targets.cfg")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    pub radar: RadarParams,
    pub scenario: ScenarioConfig,
    pub detector: DetectorConfig,
    pub window: WindowConfig,
    pub calibration_seed: u64,
    pub matching: MatchConfig,
    pub montecarlo: SweepConfig,
    pub noise_eval: NoiseEvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            radar: RadarParams::table1(),
            scenario: ScenarioConfig::default(),
            detector: DetectorConfig::default(),
            window: WindowConfig::default(),
            calibration_seed: 0,
            matching: MatchConfig::default(),
            montecarlo: SweepConfig::default(),
            noise_eval: NoiseEvalConfig::default(),
        }
    }
}

/// The frame written by `simulate`. Explicit `targets` take precedence over
/// `n_targets` random ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub snr_db: f64,
    pub n_targets: usize,
    pub stationary_fraction_max: f64,
    pub targets: Option<Vec<TargetTruth>>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self { seed: 0, snr_db: 10.0, n_targets: 1, stationary_fraction_max: 0.0, targets: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub trials: usize,
    pub snr_grid: Vec<f64>,
    pub pfa_grid: Vec<f64>,
    pub target_counts: Vec<usize>,
    pub base_seed: u64,
    pub detectors: Vec<DetectorKind>,
    pub stationary_fraction_max: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let mc = McConfig::default();
        Self {
            trials: mc.trials,
            snr_grid: mc.snr_grid,
            pfa_grid: mc.pfa_grid,
            target_counts: mc.target_counts,
            base_seed: mc.base_seed,
            detectors: mc.detectors,
            stationary_fraction_max: mc.stationary_fraction_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseEvalConfig {
    pub trials: usize,
    pub snr_grid: Vec<f64>,
    pub n_targets: usize,
    pub seed: u64,
    /// Quantile pairs in the Q-Q table.
    pub qq_points: usize,
    /// SNR of the single frame behind the Q-Q table.
    pub qq_snr_db: f64,
}

impl Default for NoiseEvalConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            snr_grid: vec![-10.0, -5.0, 0.0, 5.0, 10.0],
            n_targets: 20,
            seed: 0,
            qq_points: 50,
            qq_snr_db: 0.0,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
            .map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
                other => other,
            })
    }

    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| {
                let names: Vec<_> = PRESETS.iter().map(|(n, _)| *n).collect();
                Error::Config(format!("unknown preset `{name}` (available: {})", names.join(", ")))
            })?;
        Self::parse(text)
    }

    pub fn validate(&self) -> Result<()> {
        self.radar.validate()?;
        self.detector.validate()?;
        self.window.validate(self.radar.n_samples, self.radar.n_chirps)?;
        self.mc_config().validate()?;
        if let Some(targets) = &self.scenario.targets {
            for t in targets {
                t.validate(&self.radar)?;
            }
        }
        let ne = &self.noise_eval;
        if ne.trials < 1 || ne.qq_points < 1 || ne.snr_grid.is_empty() {
            return Err(Error::Config("noise_eval needs trials, qq_points and snr_grid".into()));
        }
        Ok(())
    }

    /// Overrides every seed in the document.
    pub fn reseed(&mut self, seed: u64) {
        self.scenario.seed = seed;
        self.montecarlo.base_seed = seed;
        self.noise_eval.seed = seed;
        self.calibration_seed = seed;
    }

    pub fn suite(&self) -> DetectorSuite {
        DetectorSuite { ct: self.detector, window: self.window, calibration_seed: self.calibration_seed }
    }

    pub fn mc_config(&self) -> McConfig {
        let s = &self.montecarlo;
        McConfig {
            trials: s.trials,
            snr_grid: s.snr_grid.clone(),
            pfa_grid: s.pfa_grid.clone(),
            target_counts: s.target_counts.clone(),
            base_seed: s.base_seed,
            detectors: s.detectors.clone(),
            params: self.radar,
            suite: self.suite(),
            matching: self.matching,
            stationary_fraction_max: s.stationary_fraction_max,
        }
    }

    pub fn scene(&self) -> Result<Scenario> {
        let s = &self.scenario;
        match &s.targets {
            Some(targets) => Scenario::with_snr(self.radar, targets.clone(), s.snr_db, s.seed),
            None => random_scenario(&self.radar, s.n_targets, s.snr_db, s.stationary_fraction_max, s.seed),
        }
    }
}
