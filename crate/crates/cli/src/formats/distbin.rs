//! Binary distance matrix layout, all integers and floats little-endian:
//!
//! | bytes        | content                                   |
//! |--------------|-------------------------------------------|
//! | 8            | magic `CSQDIST\0`                         |
//! | 4            | format version (`u32`, currently 1)       |
//! | 8            | `n` (`u64`)                               |
//! | 8·n          | labels: `col: u32`, `row: u32` per entry  |
//! | 8·n(n−1)/2   | distances (`f64`) in condensed row order  |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use conflict_seq_core::om::{condensed_len, DistanceMatrix};
use conflict_seq_core::CellId;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"CSQDIST\0";
pub const VERSION: u32 = 1;

pub fn encode<W: Write>(dm: &DistanceMatrix, mut w: W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(dm.n() as u64).to_le_bytes())?;
    for c in dm.labels() {
        w.write_all(&c.col.to_le_bytes())?;
        w.write_all(&c.row.to_le_bytes())?;
    }
    for v in dm.condensed() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()
}

pub fn write(path: &Path, dm: &DistanceMatrix) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    encode(dm, BufWriter::with_capacity(1 << 20, f)).map_err(|e| Error::io(path, e))
}

fn take<const N: usize>(r: &mut impl Read) -> std::io::Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

pub fn decode<R: Read>(mut r: R) -> std::result::Result<DistanceMatrix, String> {
    let io = |e: std::io::Error| format!("truncated distance file: {e}");
    if &take::<8>(&mut r).map_err(io)? != MAGIC {
        return Err("not a distance matrix file (bad magic)".into());
    }
    let version = u32::from_le_bytes(take(&mut r).map_err(io)?);
    if version != VERSION {
        return Err(format!("unsupported distance file version {version}"));
    }
    let n = u64::from_le_bytes(take(&mut r).map_err(io)?);
    let n = usize::try_from(n).map_err(|_| format!("n = {n} does not fit in memory"))?;
    let mut labels = Vec::with_capacity(n.min(1 << 24));
    for _ in 0..n {
        let col = u32::from_le_bytes(take(&mut r).map_err(io)?);
        let row = u32::from_le_bytes(take(&mut r).map_err(io)?);
        labels.push(CellId::new(col, row));
    }
    let m = condensed_len(n);
    let mut d = Vec::with_capacity(m.min(1 << 28));
    for _ in 0..m {
        d.push(f64::from_le_bytes(take(&mut r).map_err(io)?));
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra).map_err(io)? != 0 {
        return Err("trailing bytes after distance data".into());
    }
    DistanceMatrix::new(labels, d).map_err(|e| e.to_string())
}

pub fn read(path: &Path) -> Result<DistanceMatrix> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    decode(BufReader::with_capacity(1 << 20, f)).map_err(|m| Error::format(path, m))
}
