use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use ctcfar::eval::{monte_carlo, noise_rmse, qq_data, run_detector, DetectorKind, McRow, RmseRow};
use ctcfar::sim::rdc1::{read_cube, write_cube};
use ctcfar::sim::{random_scenario, synthesize_cube, TargetTruth};
use ctcfar::{estimate_noise, nca, rd_transform, DetectionSet, GammaNoiseModel, Result};

use crate::config::RunConfig;

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(create(path)?);
    w.write_record(header).map_err(io::Error::from)?;
    for r in rows {
        w.serialize(r).map_err(io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TruthRow {
    range_m: f64,
    velocity_mps: f64,
    angle_rad: f64,
    amplitude: f64,
}

const TRUTH_HEADER: [&str; 4] = ["range_m", "velocity_mps", "angle_rad", "amplitude"];

/// Writes the configured frame as RDC1 and prints its targets to `stdout`.
pub fn simulate(cfg: &RunConfig, cube_path: &Path, stdout: impl Write) -> Result<()> {
    let scene = cfg.scene()?;
    let cube = synthesize_cube(&scene)?;
    let mut w = create(cube_path)?;
    write_cube(&cube, &mut w)?;
    w.flush()?;

    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(stdout);
    out.write_record(TRUTH_HEADER).map_err(io::Error::from)?;
    for &TargetTruth { range_m, velocity_mps, angle_rad, amplitude } in &scene.targets {
        out.serialize(TruthRow { range_m, velocity_mps, angle_rad, amplitude }).map_err(io::Error::from)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct DetectionRow {
    detector: &'static str,
    r_ind: usize,
    v_ind: usize,
    r_hat: f64,
    v_hat: f64,
    range_m: f64,
    velocity_mps: f64,
    power: f64,
    iteration: usize,
}

const DETECTION_HEADER: [&str; 9] =
    ["detector", "r_ind", "v_ind", "r_hat", "v_hat", "range_m", "velocity_mps", "power", "iteration"];

#[derive(Serialize)]
struct NoiseRow {
    shape_l: usize,
    mu_z: f64,
    theta: f64,
    trunc_threshold: f64,
    iterations: usize,
    converged: bool,
}

const NOISE_HEADER: [&str; 6] = ["L", "mu_z", "theta", "T_hat", "iterations", "converged"];

pub struct DetectOutputs {
    pub detections: PathBuf,
    pub noise: PathBuf,
}

/// Runs one detector on a cube file. Writes the detections and, when the
/// detector fits one, the background model (header only otherwise).
pub fn detect(cfg: &RunConfig, cube_path: &Path, kind: DetectorKind, out_dir: &Path) -> Result<(DetectionSet, DetectOutputs)> {
    let cube = read_cube(File::open(cube_path)?)?;
    let stack = rd_transform(&cube);
    let set = run_detector(kind, &stack, cfg.detector.p_fa, &cfg.suite())?;

    let rows: Vec<DetectionRow> = set
        .detections
        .iter()
        .map(|d| DetectionRow {
            detector: kind.name(),
            r_ind: d.peak.r_ind,
            v_ind: d.peak.v_ind,
            r_hat: d.peak.r_hat,
            v_hat: d.peak.v_hat,
            range_m: d.peak.range_m,
            velocity_mps: d.peak.velocity_mps,
            power: d.power,
            iteration: d.iteration,
        })
        .collect();
    let outputs = DetectOutputs { detections: out_dir.join("detections.csv"), noise: out_dir.join("noise.csv") };
    write_csv(&outputs.detections, &rows, &DETECTION_HEADER)?;
    let noise: Vec<NoiseRow> = set.noise_model.iter().map(noise_row).collect();
    write_csv(&outputs.noise, &noise, &NOISE_HEADER)?;
    Ok((set, outputs))
}

fn noise_row(m: &GammaNoiseModel) -> NoiseRow {
    NoiseRow {
        shape_l: m.shape_l,
        mu_z: m.mu_z,
        theta: m.theta,
        trunc_threshold: m.trunc_threshold,
        iterations: m.iterations,
        converged: m.converged,
    }
}

#[derive(Serialize)]
struct SweepRow {
    detector: &'static str,
    snr_db: f64,
    p_fa: f64,
    n_targets: usize,
    trials: usize,
    pd: Option<f64>,
    pd_se: Option<f64>,
    pfa_emp: f64,
    pa: f64,
    runtime_ms_mean: f64,
    pfa_se: f64,
    pa_se: f64,
    n_tp: usize,
    n_fp: usize,
    n_fn: usize,
    n_n: usize,
    failed_trials: usize,
}

pub const SWEEP_HEADER: [&str; 17] = [
    "detector",
    "snr_db",
    "p_fa",
    "n_targets",
    "trials",
    "pd",
    "pd_se",
    "pfa_emp",
    "pa",
    "runtime_ms_mean",
    "pfa_se",
    "pa_se",
    "n_tp",
    "n_fp",
    "n_fn",
    "n_n",
    "failed_trials",
];

impl From<&McRow> for SweepRow {
    fn from(r: &McRow) -> Self {
        Self {
            detector: r.detector.name(),
            snr_db: r.snr_db,
            p_fa: r.p_fa,
            n_targets: r.n_targets,
            trials: r.trials,
            pd: r.pd,
            pd_se: r.pd_se,
            pfa_emp: r.pfa_emp,
            pa: r.pa,
            runtime_ms_mean: r.runtime_ms_mean,
            pfa_se: r.pfa_se,
            pa_se: r.pa_se,
            n_tp: r.n_tp,
            n_fp: r.n_fp,
            n_fn: r.n_fn,
            n_n: r.n_n,
            failed_trials: r.failed_trials,
        }
    }
}

pub fn montecarlo(cfg: &RunConfig, out_dir: &Path) -> Result<PathBuf> {
    let rows = monte_carlo(&cfg.mc_config())?;
    let path = out_dir.join("montecarlo.csv");
    write_csv(&path, &rows.iter().map(SweepRow::from).collect::<Vec<_>>(), &SWEEP_HEADER)?;
    Ok(path)
}

#[derive(Serialize)]
struct QqRow {
    level: f64,
    model: f64,
    empirical: f64,
}

const RMSE_HEADER: [&str; 8] =
    ["snr_db", "trials", "rmse_shape", "rmse_scale", "rmse_mean", "rmse_var", "rel_rmse_mean", "rel_bias_mean"];

/// Background-fit RMSE per SNR, plus a Q-Q table for one frame.
pub fn noise_eval(cfg: &RunConfig, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let ne = &cfg.noise_eval;
    let trunc = &cfg.detector.trunc;
    let rows: Vec<RmseRow> = noise_rmse(&cfg.radar, ne.n_targets, &ne.snr_grid, ne.trials, ne.seed, trunc)?;
    let rmse_path = out_dir.join("noise_rmse.csv");
    write_csv(&rmse_path, &rows, &RMSE_HEADER)?;

    let scene = random_scenario(&cfg.radar, ne.n_targets, ne.qq_snr_db, 0.0, ne.seed)?;
    let map = nca(&rd_transform(&synthesize_cube(&scene)?));
    let model = estimate_noise(&map, cfg.radar.n_channels, trunc)?;
    let qq: Vec<QqRow> = qq_data(map.as_slice(), &model, ne.qq_points)?
        .into_iter()
        .enumerate()
        .map(|(i, (model, empirical))| QqRow { level: (i as f64 + 0.5) / ne.qq_points as f64, model, empirical })
        .collect();
    let qq_path = out_dir.join("qq.csv");
    write_csv(&qq_path, &qq, &["level", "model", "empirical"])?;
    Ok((rmse_path, qq_path))
}
