//! On-disk spectrum cache.
//!
//! Layout, all numbers little-endian:
//!
//! | field        | type                       |
//! |--------------|----------------------------|
//! | magic        | `b"SQSPEC01"`              |
//! | sites        | `u32`                      |
//! | boundary     | `u8` (0 periodic, 1 open)  |
//! | basis kind   | `u8` (0 complex, 1 gauged) |
//! | reserved     | `u16`                      |
//! | J, g         | `f64`, `f64`               |
//! | dimension    | `u64`                      |
//! | residual     | `f64`                      |
//! | eigenvalues  | `dim × f64`                |
//!
//! followed by, for a gauged basis, `dim` phases as `(re, im)` pairs and the
//! real `dim × dim` eigenvector matrix in column-major order; for a complex
//! basis, the `dim × dim` eigenvector matrix column-major as `(re, im)`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use faer::{c64, Mat};
use sha2::{Digest, Sha256};

use super::{EigenBasis, Spectrum};
use crate::error::{Error, Result};
use crate::hilbert::{Boundary, ChainSpec};

const MAGIC: &[u8; 8] = b"SQSPEC01";
const HEADER_LEN: usize = 8 + 4 + 1 + 1 + 2 + 8 + 8 + 8 + 8;

fn header(spec: &ChainSpec, kind: u8, dim: usize, residual: f64) -> Vec<u8> {
    let mut h = Vec::with_capacity(HEADER_LEN);
    h.extend_from_slice(MAGIC);
    h.extend_from_slice(&(spec.n as u32).to_le_bytes());
    h.push(match spec.boundary {
        Boundary::Periodic => 0,
        Boundary::Open => 1,
    });
    h.push(kind);
    h.extend_from_slice(&0u16.to_le_bytes());
    h.extend_from_slice(&spec.j.to_le_bytes());
    h.extend_from_slice(&spec.g.to_le_bytes());
    h.extend_from_slice(&(dim as u64).to_le_bytes());
    h.extend_from_slice(&residual.to_le_bytes());
    h
}

/// Hex digest identifying a chain; the first 16 characters name the file.
pub fn cache_key(spec: &ChainSpec) -> String {
    let mut hasher = Sha256::new();
    // sites, boundary, J and g
    hasher.update(&header(spec, 0, 0, 0.0)[8..32]);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn cache_path(dir: &Path, spec: &ChainSpec) -> PathBuf {
    dir.join(format!(
        "spectrum-n{}-{}-{}.bin",
        spec.n,
        spec.boundary,
        &cache_key(spec)[..16]
    ))
}

/// Writes `spectrum` atomically (temp file, then rename).
pub fn save(path: &Path, spec: &ChainSpec, spectrum: &Spectrum) -> Result<()> {
    let dim = spectrum.dim();
    let kind = match spectrum.basis() {
        EigenBasis::Complex(_) => 0,
        EigenBasis::Gauged { .. } => 1,
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        w.write_all(&header(spec, kind, dim, spectrum.residual()))?;
        for e in spectrum.eigenvalues() {
            w.write_all(&e.to_le_bytes())?;
        }
        match spectrum.basis() {
            EigenBasis::Gauged { phases, vectors } => {
                for u in phases {
                    w.write_all(&u.re.to_le_bytes())?;
                    w.write_all(&u.im.to_le_bytes())?;
                }
                for n in 0..dim {
                    for x in vectors.col_as_slice(n) {
                        w.write_all(&x.to_le_bytes())?;
                    }
                }
            }
            EigenBasis::Complex(v) => {
                for n in 0..dim {
                    for z in v.col_as_slice(n) {
                        w.write_all(&z.re.to_le_bytes())?;
                        w.write_all(&z.im.to_le_bytes())?;
                    }
                }
            }
        }
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos + n;
        if end > self.buf.len() {
            return Err(Error::Cache("file truncated".into()));
        }
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Loads a cached spectrum, checking that it was computed for `spec`.
pub fn load(path: &Path, spec: &ChainSpec) -> Result<Spectrum> {
    let buf = fs::read(path)?;
    let mut r = Reader { buf: &buf, pos: 0 };
    let head = r.take(HEADER_LEN)?.to_vec();
    if &head[..8] != MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let kind = head[13];
    let dim = u64::from_le_bytes(head[32..40].try_into().unwrap()) as usize;
    let residual = f64::from_le_bytes(head[40..48].try_into().unwrap());
    if head != header(spec, kind, dim, residual) || dim != spec.dimension() {
        return Err(Error::Cache(format!(
            "{} was written for a different chain",
            path.display()
        )));
    }
    let eigenvalues = (0..dim).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let basis = match kind {
        1 => {
            let phases = (0..dim)
                .map(|_| Ok(c64::new(r.f64()?, r.f64()?)))
                .collect::<Result<Vec<_>>>()?;
            let raw = r.take(dim * dim * 8)?;
            let vectors = Mat::from_fn(dim, dim, |a, n| {
                let k = (n * dim + a) * 8;
                f64::from_le_bytes(raw[k..k + 8].try_into().unwrap())
            });
            EigenBasis::Gauged { phases, vectors }
        }
        0 => {
            let raw = r.take(dim * dim * 16)?;
            EigenBasis::Complex(Mat::from_fn(dim, dim, |a, n| {
                let k = (n * dim + a) * 16;
                c64::new(
                    f64::from_le_bytes(raw[k..k + 8].try_into().unwrap()),
                    f64::from_le_bytes(raw[k + 8..k + 16].try_into().unwrap()),
                )
            }))
        }
        other => return Err(Error::Cache(format!("unknown basis kind {other}"))),
    };
    if r.pos != buf.len() {
        return Err(Error::Cache("trailing bytes".into()));
    }
    Spectrum::from_parts(eigenvalues, basis, residual)
}
