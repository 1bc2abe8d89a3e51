//! Reference-ring statistics for sliding-window detectors.
//!
//! The ring around a cell is the box of half-widths
//! `(guard + train_fast, guard + train_slow)` minus the `(2·guard+1)²` guard
//! box, wrapped circularly. Its leading half holds the cells before the CUT
//! in raster order (negative range offset, or equal range and negative
//! Doppler offset); the lagging half holds the rest. The halves are mirror
//! images and have equal size.

use crate::spectrum::NcaMap;

use super::WindowConfig;

/// Leading- and lagging-half sums for every cell, indexed like the map.
pub struct HalfSums {
    pub leading: Vec<f64>,
    pub lagging: Vec<f64>,
}

/// Summed-area table over the circularly padded map.
struct Sat {
    pad_r: usize,
    pad_d: usize,
    width: usize,
    table: Vec<f64>,
}

impl Sat {
    fn new(map: &NcaMap, pad_r: usize, pad_d: usize) -> Self {
        let (n, m) = (map.n_range() as isize, map.n_doppler() as isize);
        let h = map.n_range() + 2 * pad_r;
        let w = map.n_doppler() + 2 * pad_d;
        let width = w + 1;
        let mut table = vec![0.0; (h + 1) * width];
        for i in 0..h {
            let p = (i as isize - pad_r as isize).rem_euclid(n);
            let mut row = 0.0;
            for j in 0..w {
                let q = (j as isize - pad_d as isize).rem_euclid(m);
                row += map.get_wrapped(p, q);
                table[(i + 1) * width + j + 1] = table[i * width + j + 1] + row;
            }
        }
        Self { pad_r, pad_d, width, table }
    }

    /// Sum over range offsets `a0..=a1` and Doppler offsets `b0..=b1` from
    /// cell `(p, q)`. Empty ranges sum to 0.
    fn box_sum(&self, p: usize, q: usize, a0: isize, a1: isize, b0: isize, b1: isize) -> f64 {
        if a1 < a0 || b1 < b0 {
            return 0.0;
        }
        let i0 = (p + self.pad_r) as isize + a0;
        let i1 = (p + self.pad_r) as isize + a1 + 1;
        let j0 = (q + self.pad_d) as isize + b0;
        let j1 = (q + self.pad_d) as isize + b1 + 1;
        let at = |i: isize, j: isize| self.table[i as usize * self.width + j as usize];
        at(i1, j1) - at(i0, j1) - at(i1, j0) + at(i0, j0)
    }
}

pub fn half_sums(map: &NcaMap, w: &WindowConfig) -> HalfSums {
    let f = (w.guard + w.train_fast) as isize;
    let s = (w.guard + w.train_slow) as isize;
    let g = w.guard as isize;
    let sat = Sat::new(map, f as usize, s as usize);
    let cells = map.len();
    let mut leading = vec![0.0; cells];
    let mut lagging = vec![0.0; cells];
    for q in 0..map.n_doppler() {
        for p in 0..map.n_range() {
            let i = map.index(p, q);
            leading[i] = sat.box_sum(p, q, -f, -1, -s, s) - sat.box_sum(p, q, -g, -1, -g, g)
                + sat.box_sum(p, q, 0, 0, -s, -g - 1);
            lagging[i] = sat.box_sum(p, q, 1, f, -s, s) - sat.box_sum(p, q, 1, g, -g, g)
                + sat.box_sum(p, q, 0, 0, g + 1, s);
        }
    }
    HalfSums { leading, lagging }
}

/// Offsets `(range, Doppler)` of every ring cell.
pub fn ring_offsets(w: &WindowConfig) -> Vec<(isize, isize)> {
    let f = (w.guard + w.train_fast) as isize;
    let s = (w.guard + w.train_slow) as isize;
    let g = w.guard as isize;
    let mut out = Vec::new();
    for a in -f..=f {
        for b in -s..=s {
            if a.abs() > g || b.abs() > g {
                out.push((a, b));
            }
        }
    }
    out
}

pub fn ring_len(w: &WindowConfig) -> usize {
    let outer = (2 * (w.guard + w.train_fast) + 1) * (2 * (w.guard + w.train_slow) + 1);
    outer - (2 * w.guard + 1).pow(2)
}

/// Copies the ring values around `(p, q)` into `buf`.
pub fn gather(map: &NcaMap, offsets: &[(isize, isize)], p: usize, q: usize, buf: &mut Vec<f64>) {
    buf.clear();
    let (n, m) = (map.n_range() as isize, map.n_doppler() as isize);
    let data = map.as_slice();
    for &(a, b) in offsets {
        let pp = (p as isize + a).rem_euclid(n) as usize;
        let qq = (q as isize + b).rem_euclid(m) as usize;
        buf.push(data[qq * n as usize + pp]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(tf: usize, ts: usize, g: usize) -> WindowConfig {
        WindowConfig { train_fast: tf, train_slow: ts, guard: g, ..Default::default() }
    }

    #[test]
    fn default_ring_size() {
        let w = WindowConfig::default();
        assert_eq!(ring_len(&w), 31 * 23 - 121);
        assert_eq!(ring_offsets(&w).len(), ring_len(&w));
    }

    #[test]
    fn half_sums_match_brute_force() {
        let map = NcaMap::from_fn(20, 14, |p, q| ((p * 31 + q * 17) % 23) as f64 + 0.5);
        let w = cfg(3, 2, 1);
        let sums = half_sums(&map, &w);
        let offsets = ring_offsets(&w);
        for q in 0..14 {
            for p in 0..20 {
                let (mut lead, mut lag) = (0.0, 0.0);
                for &(a, b) in &offsets {
                    let v = map.get_wrapped(p as isize + a, q as isize + b);
                    if a < 0 || (a == 0 && b < 0) {
                        lead += v;
                    } else {
                        lag += v;
                    }
                }
                let i = map.index(p, q);
                assert!((sums.leading[i] - lead).abs() < 1e-9, "({p},{q})");
                assert!((sums.lagging[i] - lag).abs() < 1e-9, "({p},{q})");
            }
        }
    }

    #[test]
    fn halves_have_equal_size() {
        let w = cfg(4, 3, 2);
        let lead = ring_offsets(&w).iter().filter(|(a, b)| *a < 0 || (*a == 0 && *b < 0)).count();
        assert_eq!(2 * lead, ring_len(&w));
    }
}
