//! The .dfield on-disk format.
//!
//! Layout (all little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "DFLD"
//! 4       4     version (u32) = 1
//! 8       1     dim (u8, 1..=3)
//! 9       1     boundary (u8: 0 = zero_outside, 1 = periodic)
//! 10      6     reserved, must be zero
//! 16      8*d   shape per axis (u64)
//! ..      8     spacing (f64)
//! ..      8*d   origin per axis (f64)
//! ..      8*n   values (f64, row major, axis 0 slowest)
//! ```
//!
//! The loader is strict: any structural problem is `bad_field_file`, any
//! out-of-range value is `invariant_violation`. Round trips are bit-exact.

use crate::error::{Error, Result};
use crate::field::{Boundary, DensityField, Grid, MAX_DIM};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"DFLD";
const VERSION: u32 = 1;
/// Hard cap on the number of cells accepted from a file (2^27 ~ 1 GiB of f64).
const MAX_CELLS: u64 = 1 << 27;

pub fn save(field: &DensityField, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    let mut buf = Vec::with_capacity(64 + field.values().len() * 8);
    encode(field, &mut buf);
    f.write_all(&buf)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<DensityField> {
    let mut f = std::fs::File::open(path)?;
    let mut buf = Vec::new();
    f.read_to_end(&mut buf)?;
    decode(&buf)
}

pub fn encode(field: &DensityField, out: &mut Vec<u8>) {
    let g = field.grid();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(g.dim as u8);
    out.push(match field.boundary() {
        Boundary::ZeroOutside => 0,
        Boundary::Periodic => 1,
    });
    out.extend_from_slice(&[0u8; 6]);
    for a in 0..g.dim {
        out.extend_from_slice(&(g.shape[a] as u64).to_le_bytes());
    }
    out.extend_from_slice(&g.spacing.to_le_bytes());
    for a in 0..g.dim {
        out.extend_from_slice(&g.origin[a].to_le_bytes());
    }
    for &v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn decode(buf: &[u8]) -> Result<DensityField> {
    let mut cur = Cursor { buf, pos: 0 };
    let magic = cur.take(4)?;
    if magic != MAGIC {
        return Err(Error::BadFieldFile("bad magic".into()));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(Error::BadFieldFile(format!("unsupported version {version}")));
    }
    let dim = cur.u8()? as usize;
    if !(1..=MAX_DIM).contains(&dim) {
        return Err(Error::BadFieldFile(format!("dim {dim} out of range")));
    }
    let boundary = match cur.u8()? {
        0 => Boundary::ZeroOutside,
        1 => Boundary::Periodic,
        b => return Err(Error::BadFieldFile(format!("unknown boundary tag {b}"))),
    };
    let reserved = cur.take(6)?;
    if reserved.iter().any(|&b| b != 0) {
        return Err(Error::BadFieldFile("reserved bytes must be zero".into()));
    }
    let mut shape = [1usize; MAX_DIM];
    let mut cells: u64 = 1;
    for s in shape.iter_mut().take(dim) {
        let n = cur.u64()?;
        if n < 2 {
            return Err(Error::BadFieldFile(format!("shape entry {n} below 2")));
        }
        cells = cells.checked_mul(n).ok_or_else(|| Error::BadFieldFile("shape overflow".into()))?;
        if cells > MAX_CELLS {
            return Err(Error::BadFieldFile(format!("grid too large ({cells} cells)")));
        }
        *s = n as usize;
    }
    let spacing = cur.f64()?;
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::BadFieldFile(format!("bad spacing {spacing}")));
    }
    let mut origin = [0.0f64; MAX_DIM];
    for o in origin.iter_mut().take(dim) {
        let v = cur.f64()?;
        if !v.is_finite() {
            return Err(Error::BadFieldFile("non-finite origin".into()));
        }
        *o = v;
    }
    let expected = (cells as usize).checked_mul(8).ok_or_else(|| Error::BadFieldFile("size overflow".into()))?;
    if cur.remaining() != expected {
        return Err(Error::BadFieldFile(format!(
            "value payload is {} bytes, expected {expected}",
            cur.remaining()
        )));
    }
    let mut values = Vec::with_capacity(cells as usize);
    for _ in 0..cells {
        let v = cur.f64()?;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvariantViolation(format!("value {v} outside [0, 1]")));
        }
        values.push(v);
    }
    let grid = Grid::new(dim, shape, spacing, origin).map_err(|e| Error::BadFieldFile(e.to_string()))?;
    DensityField::new(grid, boundary, values)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::BadFieldFile("truncated file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_field() -> DensityField {
        let grid = Grid::centered(2, 8, 4.0).unwrap();
        let vals: Vec<f64> = (0..grid.len()).map(|k| ((k * 13) % 7) as f64 / 7.0).collect();
        DensityField::new(grid, Boundary::Periodic, vals).unwrap()
    }

    #[test]
    fn round_trip_bit_exact() {
        let f = sample_field();
        let mut buf = Vec::new();
        encode(&f, &mut buf);
        let g = decode(&buf).unwrap();
        assert_eq!(f, g);
        let mut buf2 = Vec::new();
        encode(&g, &mut buf2);
        assert_eq!(buf, buf2);
    }

    #[test]
    fn save_load_file() {
        let f = sample_field();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.dfield");
        save(&f, &p).unwrap();
        let g = load(&p).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn out_of_range_value_rejected() {
        let f = sample_field();
        let mut buf = Vec::new();
        encode(&f, &mut buf);
        let n = buf.len();
        buf[n - 8..].copy_from_slice(&1.5f64.to_le_bytes());
        assert_eq!(decode(&buf).unwrap_err().code(), "invariant_violation");
    }

    #[test]
    fn truncated_file_rejected() {
        let f = sample_field();
        let mut buf = Vec::new();
        encode(&f, &mut buf);
        buf.truncate(buf.len() - 5);
        assert_eq!(decode(&buf).unwrap_err().code(), "bad_field_file");
        assert_eq!(decode(&buf[..10]).unwrap_err().code(), "bad_field_file");
        assert_eq!(decode(b"").unwrap_err().code(), "bad_field_file");
    }

    #[test]
    fn bad_magic_rejected() {
        let mut buf = Vec::new();
        encode(&sample_field(), &mut buf);
        buf[0] = b'X';
        assert_eq!(decode(&buf).unwrap_err().code(), "bad_field_file");
    }

    #[test]
    fn oversized_shape_rejected_before_allocation() {
        let mut buf = Vec::new();
        buf.extend_from_slice(b"DFLD");
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.push(2);
        buf.push(0);
        buf.extend_from_slice(&[0u8; 6]);
        buf.extend_from_slice(&u64::MAX.to_le_bytes());
        buf.extend_from_slice(&u64::MAX.to_le_bytes());
        buf.extend_from_slice(&1.0f64.to_le_bytes());
        assert_eq!(decode(&buf).unwrap_err().code(), "bad_field_file");
    }
}
