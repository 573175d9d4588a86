//! Binary snapshot format.
//!
//! A fixed 64-byte little-endian header followed by the field values,
//! component-major, each value stored as `(re, im)` doubles:
//!
//! | offset | type   | content            |
//! |--------|--------|--------------------|
//! | 0      | [u8;4] | magic `DNLS`       |
//! | 4      | u32    | format version (1) |
//! | 8      | u64    | components `N`     |
//! | 16     | u64    | grid points `Nx`   |
//! | 24     | f64    | box length `L`     |
//! | 32     | f64    | time `t`           |
//! | 40     | —      | zero padding       |

use std::io::{Read, Write};

use num_complex::Complex64;

use super::state::FieldState;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"DNLS";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 64;

pub fn write_snapshot<W: Write>(mut w: W, state: &FieldState, length: f64) -> Result<()> {
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(MAGIC);
    header[4..8].copy_from_slice(&VERSION.to_le_bytes());
    header[8..16].copy_from_slice(&(state.components() as u64).to_le_bytes());
    header[16..24].copy_from_slice(&(state.points() as u64).to_le_bytes());
    header[24..32].copy_from_slice(&length.to_le_bytes());
    header[32..40].copy_from_slice(&state.t.to_le_bytes());
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(state.points() * 16);
    for comp in &state.values {
        buf.clear();
        for z in comp {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

/// Reads a snapshot, returning the state and the box length.
pub fn read_snapshot<R: Read>(mut r: R) -> Result<(FieldState, f64)> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if &header[0..4] != MAGIC {
        return Err(Error::Parse("snapshot magic mismatch".into()));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::Parse(format!("unsupported snapshot version {version}")));
    }
    let n = u64::from_le_bytes(header[8..16].try_into().expect("8 bytes")) as usize;
    let nx = u64::from_le_bytes(header[16..24].try_into().expect("8 bytes")) as usize;
    let length = f64::from_le_bytes(header[24..32].try_into().expect("8 bytes"));
    let t = f64::from_le_bytes(header[32..40].try_into().expect("8 bytes"));
    if n == 0 || nx == 0 || n > 1 << 16 || nx > 1 << 30 {
        return Err(Error::Parse(format!("implausible snapshot shape {n}x{nx}")));
    }
    let mut values = Vec::with_capacity(n);
    let mut buf = vec![0u8; nx * 16];
    for _ in 0..n {
        r.read_exact(&mut buf)?;
        let comp = buf
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[0..8].try_into().expect("8 bytes")),
                    f64::from_le_bytes(c[8..16].try_into().expect("8 bytes")),
                )
            })
            .collect();
        values.push(comp);
    }
    Ok((FieldState::new(t, values)?, length))
}
