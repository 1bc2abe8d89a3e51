//! RDC1 cube files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "RDC1" | u32 N | u32 M | u32 L
//!        | f64 f_c | f64 slope | f64 f_s | f64 T_c | f64 T_PRI | f64 d
//!        | N·M·L × (f32 re, f32 im)   channel-major, then chirp, then sample
//! ```
//!
//! Samples are narrowed to `f32` on write.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::{DataCube, RadarParams};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"RDC1";
pub const HEADER_LEN: usize = 4 + 3 * 4 + 6 * 8;

pub fn write_cube<W: Write>(cube: &DataCube, mut w: W) -> Result<()> {
    let p = cube.params();
    let mut buf = Vec::with_capacity(HEADER_LEN + cube.as_slice().len() * 8);
    buf.extend_from_slice(MAGIC);
    for dim in [p.n_samples, p.n_chirps, p.n_channels] {
        let dim = u32::try_from(dim).map_err(|_| Error::Config("dimension exceeds u32".into()))?;
        buf.extend_from_slice(&dim.to_le_bytes());
    }
    for v in [
        p.start_freq_hz,
        p.slope_hz_per_s,
        p.sample_rate_hz,
        p.chirp_duration_s,
        p.chirp_interval_s,
        p.element_spacing_m,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for s in cube.as_slice() {
        buf.extend_from_slice(&(s.re as f32).to_le_bytes());
        buf.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_cube<R: Read>(mut r: R) -> Result<DataCube> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Parse {
                offset: self.pos as u64,
                message: format!("unexpected end of file reading {what}"),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

/// Decodes an in-memory RDC1 image.
pub fn decode(bytes: &[u8]) -> Result<DataCube> {
    let mut c = Cursor { bytes, pos: 0 };
    let magic = c.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::Parse { offset: 0, message: format!("bad magic {magic:?}") });
    }
    let n = c.u32("N")? as usize;
    let m = c.u32("M")? as usize;
    let l = c.u32("L")? as usize;
    let params = RadarParams {
        start_freq_hz: c.f64("f_c")?,
        slope_hz_per_s: c.f64("slope")?,
        sample_rate_hz: c.f64("f_s")?,
        n_samples: n,
        n_chirps: m,
        chirp_duration_s: c.f64("T_c")?,
        chirp_interval_s: c.f64("T_PRI")?,
        n_channels: l,
        element_spacing_m: c.f64("d")?,
    };
    params.validate().map_err(|e| Error::Parse { offset: 4, message: e.to_string() })?;

    let count = n
        .checked_mul(m)
        .and_then(|x| x.checked_mul(l))
        .ok_or_else(|| Error::Parse { offset: 4, message: "dimensions overflow".into() })?;
    let expected = HEADER_LEN as u64 + count as u64 * 8;
    if bytes.len() as u64 != expected {
        let offset = bytes.len().min(expected as usize) as u64;
        return Err(Error::Parse {
            offset,
            message: format!("file is {} bytes, header implies {expected}", bytes.len()),
        });
    }
    let mut data = Vec::with_capacity(count);
    for _ in 0..count {
        let re = c.f32("sample")?;
        let im = c.f32("sample")?;
        data.push(Complex64::new(re as f64, im as f64));
    }
    DataCube::from_vec(params, data)
}
