//! Monte Carlo calibration of sliding-window scale factors.
//!
//! For noise-only Gamma(L) maps the detector fires where `x/g > scale`, so
//! the scale that yields a false-alarm rate `p_fa` is the `(1 − p_fa)`
//! quantile of the pooled ratios `x/g`. Taking that order statistic solves
//! the root-finding problem exactly for the calibration sample.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use super::{window_statistic, BaselineKind, WindowConfig};
use crate::error::{config, Error, Result};
use crate::spectrum::NcaMap;

/// Number of noise maps pooled per calibration.
pub const CALIBRATION_MAPS: usize = 16;
const MAP_RANGE: usize = 256;
const MAP_DOPPLER: usize = 128;

type Key = (BaselineKind, WindowConfig, usize, u64, u64);

fn cache() -> &'static Mutex<HashMap<Key, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, f64>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Scale factor giving false-alarm rate `p_fa` on Gamma(`shape_l`) noise.
///
/// Deterministic in `seed`; results are memoized per process.
pub fn calibrate_scale(kind: BaselineKind, w: &WindowConfig, shape_l: usize, p_fa: f64, seed: u64) -> Result<f64> {
    if kind == BaselineKind::Ts {
        return Err(config("TS uses an analytic threshold and needs no calibration"));
    }
    if shape_l < 1 {
        return Err(config("shape must be at least 1"));
    }
    if !(p_fa > 0.0 && p_fa < 1.0) {
        return Err(config(format!("p_fa must lie in (0, 1), got {p_fa}")));
    }
    w.validate(MAP_RANGE, MAP_DOPPLER)?;
    let key = (kind, *w, shape_l, p_fa.to_bits(), seed);
    if let Some(&s) = cache().lock().unwrap().get(&key) {
        return Ok(s);
    }

    let total = CALIBRATION_MAPS * MAP_RANGE * MAP_DOPPLER;
    let exceed = (p_fa * total as f64).round() as usize;
    if exceed < 1 || exceed >= total {
        return Err(Error::Numerical(format!("{total} calibration cells cannot resolve p_fa = {p_fa}")));
    }
    let dist = Gamma::new(shape_l as f64, 1.0).expect("shape is positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratios = Vec::with_capacity(total);
    for _ in 0..CALIBRATION_MAPS {
        let map = NcaMap::from_fn(MAP_RANGE, MAP_DOPPLER, |_, _| dist.sample(&mut rng));
        let g = window_statistic(&map, kind, w)?;
        ratios.extend(map.as_slice().iter().zip(&g).map(|(x, g)| x / g));
    }
    if ratios.iter().any(|r| !r.is_finite()) {
        return Err(Error::Numerical("non-finite calibration ratio".into()));
    }
    // exactly `exceed` ratios lie strictly above the (exceed)-th largest
    let (_, s, _) = ratios.select_nth_unstable_by(exceed, |a, b| b.total_cmp(a));
    let scale = *s;
    cache().lock().unwrap().insert(key, scale);
    Ok(scale)
}
