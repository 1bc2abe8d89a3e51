//! Constant-false-alarm-rate detection for FMCW radar range-Doppler maps.
//!
//! The pipeline is [`sim`] → [`spectrum`] → [`noise_est`] → [`detector`],
//! with [`clean`] supplying the per-target reconstruction, [`baselines`]
//! providing classical CFAR detectors for comparison and [`eval`] scoring
//! them.

pub mod baselines;
pub mod clean;
pub mod detector;
pub mod error;
pub mod eval;
pub mod noise_est;
pub mod sim;
pub mod spectrum;

pub use detector::{detect, DetectionSet, DetectorConfig};
pub use error::{Error, Result};
pub use noise_est::{estimate_noise, GammaNoiseModel, TruncConfig};
pub use sim::{DataCube, RadarParams, Scenario, TargetTruth};
pub use spectrum::{nca, rd_transform, NcaMap, RdStack};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/spectrum.md")]
    mod spectrum {}
    #[doc = include_str!("../../../book/src/noise.md")]
    mod noise {}
    #[doc = include_str!("../../../book/src/clean.md")]
    mod clean {}
    #[doc = include_str!("../../../book/src/detector.md")]
    mod detector {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
