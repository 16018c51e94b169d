//! Binary velocity snapshots.
//!
//! Layout, all little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4 | magic `TNSF` |
//! | 4 | format version, `u32` |
//! | 4 | `M`, `u32` |
//! | 8 | viscosity, `f64` |
//! | 8 | time, `f64` |
//! | `3 * 8 * M^3` | physical samples of `u_1`, `u_2`, `u_3`, each x-fastest |
//!
//! The dealiasing fraction is not stored; readers get the default.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{PhysicalField, SpectralField};
use crate::grid::GridSpec;
use crate::transform::{forward_transform, inverse_transform};

pub const MAGIC: &[u8; 4] = b"TNSF";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 28;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub field: SpectralField,
}

pub fn write_snapshot<W: Write>(mut w: W, u: &SpectralField, time: f64) -> Result<()> {
    let grid = u.grid();
    let m = u32::try_from(grid.modes())
        .map_err(|_| Error::Format("grid too large for the header".into()))?;
    let p = inverse_transform(u)?;
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&m.to_le_bytes())?;
    w.write_all(&grid.viscosity().to_le_bytes())?;
    w.write_all(&time.to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * grid.len());
    for c in p.samples() {
        buf.clear();
        for x in c {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<Snapshot> {
    let mut head = [0u8; HEADER_LEN];
    r.read_exact(&mut head)
        .map_err(|_| Error::Format("truncated header".into()))?;
    if &head[..4] != MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", &head[..4])));
    }
    let version = u32_at(&head, 4);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let m = u32_at(&head, 8) as usize;
    let nu = f64_at(&head, 12);
    let time = f64_at(&head, 20);
    let grid = if nu == 0.0 {
        GridSpec::inviscid(m)
    } else {
        GridSpec::new(m, nu)
    }
    .map_err(|e| Error::Format(format!("header: {e}")))?;
    if !time.is_finite() {
        return Err(Error::Format(format!("header: time {time} is not finite")));
    }
    let n = grid.len();
    let mut bytes = vec![0u8; 8 * n];
    let mut comps: [Vec<f64>; 3] = Default::default();
    for c in comps.iter_mut() {
        r.read_exact(&mut bytes)
            .map_err(|_| Error::Format("truncated payload".into()))?;
        *c = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    let p = PhysicalField::new(grid, comps)?;
    Ok(Snapshot {
        time,
        field: forward_transform(&p),
    })
}

pub fn save_snapshot(path: &Path, u: &SpectralField, time: f64) -> Result<()> {
    write_snapshot(BufWriter::new(File::create(path)?), u, time)
}

pub fn load_snapshot(path: &Path) -> Result<Snapshot> {
    read_snapshot(BufReader::new(File::open(path)?))
}
