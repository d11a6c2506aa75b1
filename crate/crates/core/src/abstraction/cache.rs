//! Binary abstraction cache.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "KAW1"
//! u32 len, utf-8          system fingerprint
//! grid                    state grid
//! grid                    input grid
//! f64                     tau
//! u64                     number of (state, input) pairs
//! per pair: varint tag    0 = blocked, otherwise successor count + 1
//!           varint * len  successor ids, first absolute then gaps
//! u64                     total transition count
//! ```
//!
//! A grid is `u32 dim` followed per dimension by `f64 lower, f64 upper,
//! f64 eta, u8 periodic, u64 count`.

use std::io::{self, Read, Write};

use fixedbitset::FixedBitSet;
use thiserror::Error;

use super::Abstraction;
use crate::grid::{CellId, Grid, HyperRect};

const MAGIC: &[u8; 4] = b"KAW1";

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not an abstraction cache (bad magic or unsupported version)")]
    BadMagic,
    #[error("corrupt cache: {0}")]
    Corrupt(String),
}

fn corrupt(msg: impl Into<String>) -> CacheError {
    CacheError::Corrupt(msg.into())
}

fn write_varint<W: Write>(w: &mut W, mut v: u64) -> io::Result<()> {
    let mut buf = [0u8; 10];
    let mut i = 0;
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            buf[i] = byte;
            i += 1;
            break;
        }
        buf[i] = byte | 0x80;
        i += 1;
    }
    w.write_all(&buf[..i])
}

fn read_varint<R: Read>(r: &mut R) -> Result<u64, CacheError> {
    let mut v = 0u64;
    for shift in (0..64).step_by(7) {
        let byte = read_array::<R, 1>(r)?[0];
        v |= u64::from(byte & 0x7f) << shift;
        if byte & 0x80 == 0 {
            return Ok(v);
        }
    }
    Err(corrupt("varint overflow"))
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N], CacheError> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, CacheError> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, CacheError> {
    Ok(u64::from_le_bytes(read_array(r)?))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64, CacheError> {
    Ok(f64::from_le_bytes(read_array(r)?))
}

fn write_grid<W: Write>(w: &mut W, g: &Grid) -> io::Result<()> {
    w.write_all(&(g.dim() as u32).to_le_bytes())?;
    for d in 0..g.dim() {
        w.write_all(&g.bounds().lower[d].to_le_bytes())?;
        w.write_all(&g.bounds().upper[d].to_le_bytes())?;
        w.write_all(&g.eta()[d].to_le_bytes())?;
        w.write_all(&[g.periodic()[d] as u8])?;
        w.write_all(&(g.counts()[d] as u64).to_le_bytes())?;
    }
    Ok(())
}

fn read_grid<R: Read>(r: &mut R) -> Result<Grid, CacheError> {
    let dim = read_u32(r)? as usize;
    if dim == 0 || dim > 64 {
        return Err(corrupt(format!("implausible grid dimension {dim}")));
    }
    let (mut lower, mut upper, mut eta, mut periodic, mut counts) = (vec![], vec![], vec![], vec![], vec![]);
    for _ in 0..dim {
        lower.push(read_f64(r)?);
        upper.push(read_f64(r)?);
        eta.push(read_f64(r)?);
        periodic.push(read_array::<R, 1>(r)?[0] != 0);
        counts.push(read_u64(r)? as usize);
    }
    let bounds = HyperRect::new(lower, upper).map_err(|e| corrupt(e.to_string()))?;
    let grid = Grid::new(bounds, eta, periodic).map_err(|e| corrupt(e.to_string()))?;
    if grid.counts() != counts.as_slice() {
        return Err(corrupt("grid point counts disagree with the grid convention"));
    }
    Ok(grid)
}

impl Abstraction {
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<(), CacheError> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.fingerprint.len() as u32).to_le_bytes())?;
        w.write_all(self.fingerprint.as_bytes())?;
        write_grid(w, &self.grid_x)?;
        write_grid(w, &self.grid_u)?;
        w.write_all(&self.tau.to_le_bytes())?;
        let pairs = self.offsets.len() - 1;
        w.write_all(&(pairs as u64).to_le_bytes())?;
        for p in 0..pairs {
            if self.blocked.contains(p) {
                write_varint(w, 0)?;
                continue;
            }
            let list = self.post_unchecked(p);
            write_varint(w, list.len() as u64 + 1)?;
            let mut prev = 0u64;
            for (i, c) in list.iter().enumerate() {
                let v = u64::from(c.0);
                write_varint(w, if i == 0 { v } else { v - prev })?;
                prev = v;
            }
        }
        w.write_all(&(self.successors.len() as u64).to_le_bytes())?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self, CacheError> {
        if &read_array::<R, 4>(r)? != MAGIC {
            return Err(CacheError::BadMagic);
        }
        let len = read_u32(r)? as usize;
        if len > 1 << 20 {
            return Err(corrupt("fingerprint too long"));
        }
        let mut fp = vec![0u8; len];
        r.read_exact(&mut fp)?;
        let fingerprint = String::from_utf8(fp).map_err(|_| corrupt("fingerprint is not utf-8"))?;
        let grid_x = read_grid(r)?;
        let grid_u = read_grid(r)?;
        let tau = read_f64(r)?;
        let nx = grid_x.len();
        let nu = grid_u.len();
        let pairs = read_u64(r)? as usize;
        if pairs != nx * nu {
            return Err(corrupt(format!("expected {} pairs, header says {pairs}", nx * nu)));
        }
        let mut offsets = Vec::with_capacity(pairs + 1);
        offsets.push(0u64);
        let mut successors = Vec::new();
        let mut blocked = FixedBitSet::with_capacity(pairs);
        for p in 0..pairs {
            let tag = read_varint(r)?;
            if tag == 0 {
                blocked.insert(p);
            } else {
                let mut prev = 0u64;
                for i in 0..tag - 1 {
                    let v = read_varint(r)?;
                    let id = if i == 0 { v } else { prev + v };
                    if id as usize >= nx || (i > 0 && v == 0) {
                        return Err(corrupt(format!("bad successor list for pair {p}")));
                    }
                    successors.push(CellId(id as u32));
                    prev = id;
                }
            }
            offsets.push(successors.len() as u64);
        }
        if read_u64(r)? != successors.len() as u64 {
            return Err(corrupt("transition count mismatch"));
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(corrupt("trailing bytes"));
        }
        Ok(Abstraction { grid_x, grid_u, tau, fingerprint, offsets, successors, blocked })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), CacheError> {
        let mut w = io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CacheError> {
        let mut r = io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut r)
    }
}
