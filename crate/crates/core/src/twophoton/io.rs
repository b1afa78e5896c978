//! `EE2P` binary grids: magic, `u16` version, `u32` M, `f64` dx, `f64` x0,
//! `f64` t, then M*M little-endian `(f64 re, f64 im)` pairs of the continuum
//! amplitude `chi(x1, x2)`, row-major in `x1`.

use std::io::{Read, Write};
use std::path::Path;

use super::state::{PulseDescriptor, TwoPhotonPulse};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::scalar::{cx, Real};

pub const EE2P_MAGIC: &[u8; 4] = b"EE2P";
pub const EE2P_VERSION: u16 = 1;

pub fn write_ee2p<T: Real, W: Write>(pulse: &TwoPhotonPulse<T>, t: f64, mut out: W) -> Result<()> {
    let g = &pulse.grid;
    let m = u32::try_from(g.n_cells).map_err(|_| Error::Format("grid too large for EE2P".into()))?;
    let dx = g.dx.as_f64();
    out.write_all(EE2P_MAGIC)?;
    out.write_all(&EE2P_VERSION.to_le_bytes())?;
    out.write_all(&m.to_le_bytes())?;
    out.write_all(&dx.to_le_bytes())?;
    out.write_all(&g.x0.as_f64().to_le_bytes())?;
    out.write_all(&t.to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * g.n_cells);
    for row in pulse.chi.chunks(g.n_cells) {
        buf.clear();
        for z in row {
            buf.extend_from_slice(&(z.re.as_f64() / dx).to_le_bytes());
            buf.extend_from_slice(&(z.im.as_f64() / dx).to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_ee2p<T: Real>(pulse: &TwoPhotonPulse<T>, t: f64, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_ee2p(pulse, t, std::io::BufWriter::new(f))
}

/// Reads a grid; returns the packet and the stored time.
pub fn read_ee2p<T: Real, R: Read>(mut input: R, source: &str) -> Result<(TwoPhotonPulse<T>, f64)> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic).map_err(|_| Error::Format("truncated EE2P header".into()))?;
    if &magic != EE2P_MAGIC {
        return Err(Error::Format("not an EE2P file".into()));
    }
    let mut b2 = [0u8; 2];
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    let header = |e: std::io::Error| Error::Format(format!("truncated EE2P header: {e}"));
    input.read_exact(&mut b2).map_err(header)?;
    let version = u16::from_le_bytes(b2);
    if version != EE2P_VERSION {
        return Err(Error::Format(format!("unsupported EE2P version {version}")));
    }
    input.read_exact(&mut b4).map_err(header)?;
    let m = u32::from_le_bytes(b4) as usize;
    let mut f64s = [0.0; 3];
    for v in f64s.iter_mut() {
        input.read_exact(&mut b8).map_err(header)?;
        *v = f64::from_le_bytes(b8);
    }
    let [dx, x0, t] = f64s;
    if !(dx > 0.0) || !dx.is_finite() {
        return Err(Error::Format(format!("invalid cell size {dx}")));
    }
    let ci = (-x0 / dx).round();
    if !(ci >= 0.0) || (ci * dx + x0).abs() > 1e-9 * dx.max(x0.abs()) {
        return Err(Error::Format(format!("x0 = {x0} is not on the cell lattice")));
    }
    let grid = GridSpec::new(m, T::lit(dx), ci as usize)?;
    let mut raw = vec![0u8; 16 * m];
    let mut chi = Vec::with_capacity(m * m);
    for _ in 0..m {
        input.read_exact(&mut raw).map_err(|_| Error::Format("truncated EE2P body".into()))?;
        for pair in raw.chunks_exact(16) {
            let re = f64::from_le_bytes(pair[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(pair[8..].try_into().expect("8 bytes"));
            chi.push(cx(T::lit(re * dx), T::lit(im * dx)));
        }
    }
    let pulse = TwoPhotonPulse { grid, chi, descriptor: PulseDescriptor::Grid { source: source.to_string() }, discarded: 0.0 };
    Ok((pulse, t))
}

pub fn load_ee2p<T: Real>(path: &Path) -> Result<(TwoPhotonPulse<T>, f64)> {
    let f = std::fs::File::open(path)?;
    read_ee2p(std::io::BufReader::new(f), &path.display().to_string())
}
