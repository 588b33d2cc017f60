//! Plot-ready CSV files and run metadata.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ets_core::observables::{DensitySnapshot, Spectrum};
use serde::Serialize;

use crate::error::{io_err, Result};

pub fn write_rows(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
    let f = File::create(path).map_err(io_err(path))?;
    let w = BufWriter::new(f);
    let go = |mut w: BufWriter<File>| -> std::io::Result<()> {
        writeln!(w, "{header}")?;
        for r in rows {
            writeln!(w, "{r}")?;
        }
        w.flush()
    };
    go(w).map_err(io_err(path))
}

/// File name of the density snapshot at time `t`.
pub fn density_name(t: f64) -> String {
    format!("density_{t:.4}.csv")
}

pub fn write_density(dir: &Path, snap: &DensitySnapshot) -> Result<PathBuf> {
    let path = dir.join(density_name(snap.t));
    write_rows(
        &path,
        "r,rho",
        snap.samples.iter().map(|(r, p)| format!("{r:e},{p:e}")),
    )?;
    Ok(path)
}

pub fn write_dipole(dir: &Path, trace: &[[f64; 3]]) -> Result<()> {
    write_rows(
        &dir.join("dipole.csv"),
        "t,a,F",
        trace.iter().map(|[t, a, f]| format!("{t:e},{a:e},{f:e}")),
    )
}

pub fn write_spectrum(dir: &Path, s: &Spectrum) -> Result<()> {
    write_rows(
        &dir.join("spectrum.csv"),
        "omega,omega_over_Up,S",
        (0..s.omega.len())
            .map(|k| format!("{:e},{:e},{:e}", s.omega[k], s.omega_over_up[k], s.s[k])),
    )
}

/// Per-step Krylov log, opened for appending so resumed runs continue it.
pub struct KLog {
    path: PathBuf,
    w: BufWriter<File>,
}

impl KLog {
    pub fn open(dir: &Path, append: bool) -> Result<Self> {
        let path = dir.join("klog.csv");
        let fresh = !append || !path.exists();
        let f = OpenOptions::new()
            .create(true)
            .write(true)
            .append(!fresh)
            .truncate(fresh)
            .open(&path)
            .map_err(io_err(&path))?;
        let mut w = BufWriter::new(f);
        if fresh {
            writeln!(w, "t,K,err").map_err(io_err(&path))?;
        }
        Ok(KLog { path, w })
    }

    pub fn push(&mut self, t: f64, k: usize, err: f64) -> Result<()> {
        writeln!(self.w, "{t:e},{k},{err:e}").map_err(io_err(&self.path))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.w.flush().map_err(io_err(&self.path))
    }
}

/// Serializes `value` to `path` through a temporary file and a rename.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("metadata is serializable");
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, text + "\n").map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}
