//! Flat binary parameter container.
//!
//! Layout (little-endian): magic `GBNN`, `u32` version, `u8` arch
//! (0 = GCN, 1 = GraphSAGE), `u64` seed, `u32` layer count, then per layer a
//! `u32` tensor count and `u32 rows, u32 cols` per tensor, then every tensor's
//! values as `f64` in declared order, row-major.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

use super::params::{Arch, ModelParams};

const MAGIC: &[u8; 4] = b"GBNN";
const VERSION: u32 = 1;

pub fn write_params(params: &ModelParams, mut w: impl Write) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[match params.arch {
        Arch::Gcn => 0u8,
        Arch::Sage => 1u8,
    }])?;
    w.write_all(&params.seed.to_le_bytes())?;
    w.write_all(&(params.layers.len() as u32).to_le_bytes())?;
    for layer in &params.layers {
        w.write_all(&(layer.len() as u32).to_le_bytes())?;
        for t in layer {
            let (r, c) = t.shape();
            w.write_all(&(r as u32).to_le_bytes())?;
            w.write_all(&(c as u32).to_le_bytes())?;
        }
    }
    for t in params.tensors() {
        for v in t.data.as_slice() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::format(None, format!("truncated parameter file: {e}")))?;
    Ok(buf)
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

pub fn read_params(mut r: impl Read) -> Result<ModelParams> {
    if &read_array::<4>(&mut r)? != MAGIC {
        return Err(Error::format(None, "not a parameter file"));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::format(None, format!("unsupported version {version}")));
    }
    let arch = match read_array::<1>(&mut r)?[0] {
        0 => Arch::Gcn,
        1 => Arch::Sage,
        other => return Err(Error::format(None, format!("unknown architecture tag {other}"))),
    };
    let seed = u64::from_le_bytes(read_array(&mut r)?);
    let n_layers = read_u32(&mut r)? as usize;
    let mut shapes = Vec::with_capacity(n_layers.min(1024));
    for _ in 0..n_layers {
        let n_tensors = read_u32(&mut r)? as usize;
        let mut layer = Vec::with_capacity(n_tensors.min(16));
        for _ in 0..n_tensors {
            layer.push((read_u32(&mut r)? as usize, read_u32(&mut r)? as usize));
        }
        shapes.push(layer);
    }
    let mut layers = Vec::with_capacity(shapes.len());
    for layer in shapes {
        let mut tensors = Vec::with_capacity(layer.len());
        for (rows, cols) in layer {
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                data.push(f64::from_le_bytes(read_array(&mut r)?));
            }
            tensors.push(Matrix::from_vec(rows, cols, data)?);
        }
        layers.push(tensors);
    }
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(Error::format(None, "trailing bytes after parameters"));
    }
    ModelParams::from_tensors(arch, seed, layers)
}
