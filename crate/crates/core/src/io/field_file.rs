//! Binary field files.
//!
//! Layout, all little-endian: magic `CSGS`, version `u32`, dim `u32`,
//! points per dim `u32`, half-width `f64`, boundary `u8` (0 periodic,
//! 1 dirichlet), then `u` and `v`, each `n^d` `f64` values in row-major order
//! with the last axis fastest.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::FieldPair;
use crate::grid::{Boundary, GridShape};

pub const MAGIC: &[u8; 4] = b"CSGS";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8 + 1;

pub fn encode_field(fp: &FieldPair) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * fp.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(fp.shape.dim as u32).to_le_bytes());
    out.extend_from_slice(&(fp.shape.points_per_dim as u32).to_le_bytes());
    out.extend_from_slice(&fp.shape.half_width.to_le_bytes());
    out.push(match fp.shape.boundary {
        Boundary::Periodic => 0,
        Boundary::Dirichlet => 1,
    });
    for x in fp.u.iter().chain(&fp.v) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn decode_field(bytes: &[u8], path: &Path) -> Result<FieldPair> {
    let err = |msg: String| Error::FieldFile { path: path.to_path_buf(), msg };
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        let head: Vec<u8> = bytes.iter().take(4).copied().collect();
        return Err(err(format!(
            "bad magic {:?} ({}), expected \"CSGS\"",
            String::from_utf8_lossy(&head),
            head.iter().map(|b| format!("{b:02x}")).collect::<Vec<_>>().join(" ")
        )));
    }
    if bytes.len() < HEADER_LEN {
        return Err(err(format!("header short: {} of {HEADER_LEN} bytes", bytes.len())));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(err(format!("unsupported version {version} (this build reads {VERSION})")));
    }
    let dim = u32_at(8) as usize;
    let n = u32_at(12) as usize;
    let half_width = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let boundary = match bytes[24] {
        0 => Boundary::Periodic,
        1 => Boundary::Dirichlet,
        b => return Err(err(format!("unknown boundary code {b}"))),
    };
    if !(1..=3).contains(&dim) || n == 0 {
        return Err(err(format!("bad header: dim {dim}, n {n}")));
    }
    let count = n.pow(dim as u32);
    let need = 2 * count * 8;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < need {
        return Err(err(format!(
            "payload short: expected {need} bytes (2*n^d*8 with n = {n}, d = {dim}), found {}",
            payload.len()
        )));
    }
    if payload.len() > need {
        return Err(err(format!("{} trailing bytes after payload", payload.len() - need)));
    }
    let vals: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let (u, v) = vals.split_at(count);
    Ok(FieldPair {
        u: u.to_vec(),
        v: v.to_vec(),
        shape: GridShape { dim, half_width, points_per_dim: n, boundary },
    })
}

/// Write atomically: a temporary file in the target directory is renamed over `path`.
pub fn write_field(fp: &FieldPair, path: &Path) -> Result<()> {
    write_atomic(path, &encode_field(fp))
}

pub fn read_field(path: &Path) -> Result<FieldPair> {
    let bytes = fs::read(path).map_err(|e| Error::FieldFile { path: path.to_path_buf(), msg: e.to_string() })?;
    decode_field(&bytes, path)
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, GridSpec};

    fn sample() -> FieldPair {
        let g = Grid::new(GridSpec::periodic(2, 1.5, 8)).unwrap();
        FieldPair::from_fn(&g, |x| x[0].sin() * 1e-300, |x| (x[1] * 7.0).exp()).unwrap()
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csgs");
        let fp = sample();
        write_field(&fp, &p).unwrap();
        let back = read_field(&p).unwrap();
        assert_eq!(back.shape, fp.shape);
        assert!(back.u.iter().zip(&fp.u).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert!(back.v.iter().zip(&fp.v).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn rejects_damage() {
        let p = Path::new("mem");
        let bytes = encode_field(&sample());
        let e = decode_field(&bytes[..bytes.len() - 1], p).unwrap_err().to_string();
        assert!(e.contains("payload short: expected 1024 bytes"), "{e}");
        let mut bad = bytes.clone();
        bad[..4].copy_from_slice(b"XYZW");
        let e = decode_field(&bad, p).unwrap_err().to_string();
        assert!(e.contains("XYZW"), "{e}");
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(decode_field(&v2, p).unwrap_err().to_string().contains("unsupported version 2"));
    }
}
