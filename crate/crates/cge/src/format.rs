//! The `CGE1` field file format and the field content hash.
//!
//! Layout: a 16-byte header (`"CGE1"`, `u8` dimension, `u8` level, `u16`
//! reserved, `u32` component count `d(d+1)/2`, `u32` reserved), then
//! `3^{dN}·d(d+1)/2` little-endian `f64` values, cells row-major with the last
//! coordinate fastest and each matrix as its row-major upper triangle, then
//! the descriptor as a `u32` byte length followed by UTF-8 bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use cge_core::symmat::n_components;
use cge_core::{CoefficientField, GridSpec, SymMat};
use sha2::{Digest, Sha256};

pub const MAGIC: [u8; 4] = *b"CGE1";
pub const HEADER_LEN: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a CGE1 file (magic {0:?})")]
    Magic([u8; 4]),
    #[error("bad header: {0}")]
    Header(String),
    #[error("file truncated: need {need} bytes, have {have}")]
    Truncated { need: usize, have: usize },
    #[error("{0} trailing bytes after descriptor")]
    Trailing(usize),
    #[error("descriptor is not UTF-8")]
    Utf8,
    #[error("invalid field: {0}")]
    Field(#[from] cge_core::Error),
}

fn payload(field: &CoefficientField) -> Vec<u8> {
    let grid = field.grid();
    let d = grid.dim();
    let comps = n_components(d);
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * comps * grid.cell_count());
    out.extend_from_slice(&MAGIC);
    out.push(d as u8);
    out.push(grid.level() as u8);
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&(comps as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for m in field.cells() {
        for c in m.components() {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    out
}

/// Serializes a field to `CGE1` bytes.
pub fn encode(field: &CoefficientField) -> Vec<u8> {
    let mut out = payload(field);
    let desc = field.descriptor().as_bytes();
    out.extend_from_slice(&(desc.len() as u32).to_le_bytes());
    out.extend_from_slice(desc);
    out
}

fn take<'a>(bytes: &'a [u8], at: &mut usize, n: usize) -> Result<&'a [u8], FormatError> {
    let end = *at + n;
    if end > bytes.len() {
        return Err(FormatError::Truncated { need: end, have: bytes.len() });
    }
    let s = &bytes[*at..end];
    *at = end;
    Ok(s)
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

/// Parses `CGE1` bytes, validating the header and every cell.
pub fn decode(bytes: &[u8]) -> Result<CoefficientField, FormatError> {
    let mut at = 0;
    let header = take(bytes, &mut at, HEADER_LEN)?;
    let magic: [u8; 4] = header[..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(FormatError::Magic(magic));
    }
    let (d, level) = (header[4] as usize, header[5] as u32);
    let reserved = u16::from_le_bytes([header[6], header[7]]);
    let comps = u32_at(header, 8) as usize;
    if reserved != 0 || u32_at(header, 12) != 0 {
        return Err(FormatError::Header("reserved fields must be zero".into()));
    }
    let grid = GridSpec::new(d, level)?;
    if comps != n_components(d) {
        return Err(FormatError::Header(format!("component count {comps} does not match d = {d}")));
    }
    let data = take(bytes, &mut at, 8 * comps * grid.cell_count())?;
    let mut cells = Vec::with_capacity(grid.cell_count());
    let mut buf = vec![0.0; comps];
    for chunk in data.chunks_exact(8 * comps) {
        for (v, b) in buf.iter_mut().zip(chunk.chunks_exact(8)) {
            *v = f64::from_le_bytes(b.try_into().unwrap());
        }
        cells.push(SymMat::from_upper(d, &buf)?);
    }
    let len = u32_at(take(bytes, &mut at, 4)?, 0) as usize;
    let desc = std::str::from_utf8(take(bytes, &mut at, len)?).map_err(|_| FormatError::Utf8)?;
    if at != bytes.len() {
        return Err(FormatError::Trailing(bytes.len() - at));
    }
    Ok(CoefficientField::new(grid, cells, desc)?)
}

/// Hex SHA-256 of the header and cell data; the descriptor is not hashed.
pub fn content_hash(field: &CoefficientField) -> String {
    hex::encode(Sha256::digest(payload(field)))
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.{:?}.tmp", std::process::id(), std::thread::current().id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

pub fn write_field(path: &Path, field: &CoefficientField) -> Result<(), FormatError> {
    Ok(write_atomic(path, &encode(field))?)
}

pub fn read_field(path: &Path) -> Result<CoefficientField, FormatError> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cge_core::generators::{gen_cascade_field, gen_random_spd, CascadeParams};

    #[test]
    fn round_trip_bit_exact() {
        for d in 1..=3 {
            let g = GridSpec::new(d, 2).unwrap();
            let f = gen_random_spd(g, 1e-3, 1e3, false, 11).unwrap();
            let bytes = encode(&f);
            assert_eq!(bytes.len(), HEADER_LEN + 8 * n_components(d) * g.cell_count() + 4 + f.descriptor().len());
            let back = decode(&bytes).unwrap();
            assert_eq!(back.descriptor(), f.descriptor());
            assert!(back.cells().iter().zip(f.cells()).all(|(a, b)| {
                a.components().iter().zip(b.components()).all(|(x, y)| x.to_bits() == y.to_bits())
            }));
            assert_eq!(encode(&back), bytes);
        }
    }

    #[test]
    fn header_layout() {
        let g = GridSpec::new(2, 1).unwrap();
        let f = gen_random_spd(g, 0.5, 2.0, true, 1).unwrap();
        let b = encode(&f);
        assert_eq!(&b[..4], b"CGE1");
        assert_eq!((b[4], b[5]), (2, 1));
        assert_eq!(u32_at(&b, 8), 3);
        let first = f64::from_le_bytes(b[16..24].try_into().unwrap());
        assert_eq!(first, f.cell(0).get(0, 0));
    }

    #[test]
    fn rejects_corruption() {
        let g = GridSpec::new(2, 1).unwrap();
        let f = gen_random_spd(g, 0.5, 2.0, false, 2).unwrap();
        let good = encode(&f);
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(FormatError::Magic(_))));
        assert!(matches!(decode(&good[..good.len() - 1]), Err(FormatError::Truncated { .. })));
        let mut long = good.clone();
        long.push(0);
        assert!(matches!(decode(&long), Err(FormatError::Trailing(1))));
        let mut neg = good.clone();
        neg[16..24].copy_from_slice(&(-1.0f64).to_le_bytes());
        assert!(matches!(decode(&neg), Err(FormatError::Field(_))));
        let mut comps = good;
        comps[8] = 4;
        assert!(matches!(decode(&comps), Err(FormatError::Header(_))));
    }

    #[test]
    fn hash_ignores_descriptor() {
        let g = GridSpec::new(2, 3).unwrap();
        let f = gen_cascade_field(g, &CascadeParams { gamma: 0.5, generation: 3, seed: 42 }).unwrap();
        let mut renamed = f.clone();
        renamed.set_descriptor("other");
        assert_eq!(content_hash(&f), content_hash(&renamed));
        let other = gen_cascade_field(g, &CascadeParams { gamma: 0.5, generation: 3, seed: 43 }).unwrap();
        assert_ne!(content_hash(&f), content_hash(&other));
        assert_eq!(content_hash(&f).len(), 64);
    }

    proptest::proptest! {
        #[test]
        fn arbitrary_fields_round_trip(d in 1usize..=3, seed: u64, lo_exp in -6.0f64..0.0, hi_exp in 0.0f64..6.0, desc in "\\PC{0,40}") {
            let g = GridSpec::new(d, 1).unwrap();
            let mut f = gen_random_spd(g, 10f64.powf(lo_exp), 10f64.powf(hi_exp), false, seed).unwrap();
            f.set_descriptor(desc.clone());
            let bytes = encode(&f);
            let back = decode(&bytes).unwrap();
            proptest::prop_assert_eq!(back.descriptor(), desc.as_str());
            proptest::prop_assert_eq!(encode(&back), bytes);
            proptest::prop_assert_eq!(content_hash(&back), content_hash(&f));
        }
    }
}
