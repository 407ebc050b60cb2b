//! Binary tensor archive.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   8 bytes  "LPDOTNA1"
//! kind    u8       0 = LPDO, 1 = MPO, 2 = dense matrix
//! n       u32      number of sites
//! d_p     u32      physical dimension
//! n times (once for a dense matrix):
//!   rank  u32
//!   shape rank × u64
//!   data  (re f64, im f64) per entry, row-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use super::{AnyState, DensityMatrix, Lpdo, MixedState, Mpo, StateView};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const ARCHIVE_MAGIC: &[u8; 8] = b"LPDOTNA1";

const KIND_LPDO: u8 = 0;
const KIND_MPO: u8 = 1;
const KIND_DENSE: u8 = 2;

/// Sanity bound on a single site's entry count when reading.
const MAX_SITE_ENTRIES: u64 = 1 << 28;

pub fn write_archive<S: MixedState + ?Sized>(path: impl AsRef<Path>, state: &S) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_to(&mut w, state.view())?;
    w.flush()?;
    Ok(())
}

pub fn read_archive(path: impl AsRef<Path>) -> Result<AnyState> {
    let mut r = BufReader::new(File::open(path)?);
    read_from(&mut r)
}

pub(crate) fn write_to(w: &mut impl Write, view: StateView<'_>) -> Result<()> {
    let dense;
    let (kind, sites, d) = match view {
        StateView::Lpdo(l) => (KIND_LPDO, l.sites(), l.phys_dim()),
        StateView::Mpo(m) => (KIND_MPO, m.sites(), m.phys_dim()),
        StateView::Dense(rho) => {
            dense = [Tensor::from_matrix(rho.matrix())];
            (KIND_DENSE, &dense[..], rho.phys_dim())
        }
    };
    w.write_all(ARCHIVE_MAGIC)?;
    w.write_all(&[kind])?;
    w.write_all(&(view.n_sites() as u32).to_le_bytes())?;
    w.write_all(&(d as u32).to_le_bytes())?;
    for t in sites {
        w.write_all(&(t.rank() as u32).to_le_bytes())?;
        for &e in t.shape() {
            w.write_all(&(e as u64).to_le_bytes())?;
        }
        for z in t.data() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

pub(crate) fn read_from(r: &mut impl Read) -> Result<AnyState> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != ARCHIVE_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut kind = [0u8; 1];
    r.read_exact(&mut kind)?;
    let n = read_u32(r)? as usize;
    let d = read_u32(r)? as usize;
    if n == 0 {
        return Err(Error::Format("archive holds no sites".into()));
    }
    let (count, want_rank) = if kind[0] == KIND_DENSE { (1, 2) } else { (n, 4) };
    let mut sites = Vec::with_capacity(count);
    for j in 0..count {
        let rank = read_u32(r)? as usize;
        if rank != want_rank {
            return Err(Error::Format(format!("site {j} has rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank);
        let mut entries: u64 = 1;
        for _ in 0..rank {
            let e = read_u64(r)?;
            entries = entries.saturating_mul(e);
            shape.push(e as usize);
        }
        if entries == 0 || entries > MAX_SITE_ENTRIES {
            return Err(Error::Format(format!("site {j} has {entries} entries")));
        }
        let mut data = Vec::with_capacity(entries as usize);
        for _ in 0..entries {
            let re = read_f64(r)?;
            let im = read_f64(r)?;
            data.push(C64::new(re, im));
        }
        sites.push(Tensor::new(shape, data)?);
    }
    let state = match kind[0] {
        KIND_LPDO => AnyState::Lpdo(Lpdo::new(sites)?),
        KIND_MPO => AnyState::Mpo(Mpo::new(sites)?),
        KIND_DENSE => {
            let t = sites.pop().expect("one tensor");
            let dim = t.shape()[0];
            let m = Array2::from_shape_vec((dim, t.shape()[1]), t.into_data()).expect("rank 2");
            AnyState::Dense(DensityMatrix::new(n, d, m)?)
        }
        k => return Err(Error::Format(format!("unknown representation kind {k}"))),
    };
    if state.phys_dim() != d {
        return Err(Error::Format(format!(
            "header says d_p = {d}, tensors have {}",
            state.phys_dim()
        )));
    }
    Ok(state)
}
