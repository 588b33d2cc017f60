//! Binary checkpoints: the magic `ETSCKPT1`, a little-endian `u64` header
//! length, a JSON header and the coefficients as little-endian `f64` pairs.

use std::fs;
use std::io::Write;
use std::path::Path;

use ets_core::{StateVector, C64};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{io_err, DriverError, Result};

const MAGIC: &[u8; 8] = b"ETSCKPT1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub fingerprint: String,
    pub step: usize,
    pub t: f64,
    pub n_blocks: usize,
    pub n_basis: usize,
    /// Configuration the run was started with, in canonical text form.
    pub config: String,
    /// `(t, a, F)` samples recorded so far.
    pub dipole: Vec<[f64; 3]>,
    pub ground_energy: f64,
    /// Smallest and largest Krylov dimension so far, and their sum.
    pub k_min: usize,
    pub k_max: usize,
    pub k_total: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: Header,
    pub state: StateVector,
}

/// Hash of everything that fixes the basis: grid layout and `l_max`.
pub fn fingerprint(cfg: &RunConfig) -> String {
    let key = format!(
        "n_dvr={};n_fe_inner={};n_fe_outer={};delta_xi={:016x};l_max={}",
        cfg.n_dvr,
        cfg.n_fe_inner,
        cfg.n_fe_outer,
        cfg.delta_xi.to_bits(),
        cfg.l_max
    );
    Sha256::digest(key.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Writes through a temporary file and renames it into place.
pub fn write(path: &Path, ck: &Checkpoint) -> Result<()> {
    let header =
        serde_json::to_vec(&ck.header).map_err(|e| DriverError::Checkpoint(e.to_string()))?;
    let mut buf = Vec::with_capacity(16 + header.len() + 16 * ck.state.coeffs.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(header.len() as u64).to_le_bytes());
    buf.extend_from_slice(&header);
    for c in &ck.state.coeffs {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(&buf).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn read(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let corrupt = |m: &str| DriverError::Checkpoint(format!("{}: {m}", path.display()));
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(corrupt("not a checkpoint file"));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let body = bytes
        .get(16..16 + hlen)
        .ok_or_else(|| corrupt("truncated header"))?;
    let header: Header = serde_json::from_slice(body).map_err(|e| corrupt(&e.to_string()))?;
    let data = &bytes[16 + hlen..];
    let n = header.n_blocks * header.n_basis;
    if data.len() != 16 * n {
        return Err(corrupt("coefficient section has the wrong length"));
    }
    let coeffs = data
        .chunks_exact(16)
        .map(|c| {
            C64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    let state = StateVector::from_coeffs(coeffs, header.n_basis, header.t)?;
    Ok(Checkpoint { header, state })
}

/// Reads a checkpoint and checks that it belongs to the basis of `cfg`.
pub fn restore(path: &Path, cfg: &RunConfig) -> Result<Checkpoint> {
    let ck = read(path)?;
    let want = fingerprint(cfg);
    if ck.header.fingerprint != want {
        return Err(DriverError::Checkpoint(format!(
            "{} was written for a different grid (fingerprint {} vs {want})",
            path.display(),
            ck.header.fingerprint
        )));
    }
    Ok(ck)
}
