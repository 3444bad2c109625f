//! Binary field snapshots.
//!
//! Layout, all little-endian:
//! - 8 bytes magic `WNLSFLD\0`
//! - u32 format version
//! - u32 domain tag (0 physical, 1 spectral)
//! - u32 points per side `n`
//! - f64 box length `L`
//! - `n*n` pairs of f64 `(re, im)`, row-major

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{Domain, Field, GridSpec};
use crate::error::{Error, Result};
use crate::C64;

pub const MAGIC: [u8; 8] = *b"WNLSFLD\0";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 16 + 4 + 8;

pub fn encode(field: &Field) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * grid.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let tag: u32 = match field.domain() {
        Domain::Physical => 0,
        Domain::Spectral => 1,
    };
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    out.extend_from_slice(&grid.box_length().to_le_bytes());
    for z in field.values() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Field> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format("snapshot shorter than its header".into()));
    }
    if bytes[..8] != MAGIC {
        return Err(Error::Format("bad snapshot magic".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let f64_at = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
    let version = u32_at(8);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    let domain = match u32_at(12) {
        0 => Domain::Physical,
        1 => Domain::Spectral,
        t => return Err(Error::Format(format!("unknown domain tag {t}"))),
    };
    let n = u32_at(16) as usize;
    let box_length = f64_at(20);
    let grid = GridSpec::new(box_length, n).map_err(|e| Error::Format(e.to_string()))?;
    let expected = HEADER_LEN + 16 * grid.len();
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "snapshot payload is {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| {
            C64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    Field::from_values(grid, values, domain)
}

pub fn write(path: &Path, field: &Field) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode(field))?;
    Ok(())
}

pub fn read(path: &Path) -> Result<Field> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let grid = GridSpec::new(3.5, 16).unwrap();
        let f = Field::from_fn(grid, |x, y| C64::new((x * 7.1).sin() / 3.0, y.exp() * 1e-300));
        let g = decode(&encode(&f)).unwrap();
        for (a, b) in f.values().iter().zip(g.values()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        assert_eq!(g.grid(), f.grid());
        let s = f.forward().unwrap();
        assert_eq!(decode(&encode(&s)).unwrap().domain(), Domain::Spectral);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.bin");
        let grid = GridSpec::new(2.0, 8).unwrap();
        let f = Field::from_real_fn(grid, |x, y| x - 2.0 * y);
        write(&path, &f).unwrap();
        assert_eq!(read(&path).unwrap(), f);
        assert_eq!(fs::metadata(&path).unwrap().len() as usize, 28 + 16 * 64);
    }

    #[test]
    fn corrupt_input_rejected() {
        let grid = GridSpec::new(2.0, 8).unwrap();
        let mut bytes = encode(&Field::zeros(grid, Domain::Physical));
        assert!(matches!(decode(&bytes[..20]), Err(Error::Format(_))));
        bytes.pop();
        assert!(matches!(decode(&bytes), Err(Error::Format(_))));
        let mut bad = encode(&Field::zeros(grid, Domain::Physical));
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(Error::Format(_))));
    }
}
