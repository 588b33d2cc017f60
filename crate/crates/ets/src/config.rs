//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Every key must be known and may
//! appear once; lists are comma separated. Times are given in optical
//! cycles of the carrier.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ets_core::pulse::{Gauge, PulseShape, PulseSpec};
use ets_core::{FilterSpec, GridSpec, ScalingSchedule};

use crate::error::{io_err, DriverError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_dvr: usize,
    pub n_fe_inner: usize,
    pub n_fe_outer: usize,
    pub delta_xi: f64,
    pub l_max: usize,
    pub wavelength_nm: f64,
    pub intensity_w_cm2: f64,
    pub cycles: f64,
    pub pulse: PulseShape,
    pub gauge: Gauge,
    /// `0` disables time scaling.
    pub r_inf: f64,
    pub dt: f64,
    pub eps: f64,
    pub max_k: usize,
    pub filter: bool,
    pub filter_n_fe: usize,
    pub e_cut: f64,
    /// Propagation time in optical cycles, at least `cycles`.
    pub total_cycles: f64,
    pub snapshot_cycles: Vec<f64>,
    /// Largest radius of the density samples; `0` follows the simulated radius.
    pub density_r_max: f64,
    pub density_points: usize,
    pub hhg: bool,
    /// Upper end of the spectrum in units of the ponderomotive energy.
    pub spectrum_up_max: f64,
    pub spectrum_points: usize,
    pub spectrum_window: bool,
    /// Steps between checkpoints; `0` writes only the final one.
    pub checkpoint_every: usize,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub scan_dt: Vec<f64>,
    pub scan_l_max: Vec<usize>,
    pub scan_trials: usize,
}

const REQUIRED: &[&str] = &[
    "n_dvr",
    "n_fe_inner",
    "n_fe_outer",
    "delta_xi",
    "l_max",
    "wavelength_nm",
    "intensity_w_cm2",
    "cycles",
    "dt",
];

const OPTIONAL: &[&str] = &[
    "pulse",
    "gauge",
    "r_inf",
    "eps",
    "max_k",
    "filter",
    "filter_n_fe",
    "e_cut",
    "total_cycles",
    "snapshot_cycles",
    "density_r_max",
    "density_points",
    "hhg",
    "spectrum_up_max",
    "spectrum_points",
    "spectrum_window",
    "checkpoint_every",
    "output_dir",
    "seed",
    "scan_dt",
    "scan_l_max",
    "scan_trials",
];

fn bad(key: &str, value: &str, what: &str) -> DriverError {
    DriverError::Config(format!("{key} = {value:?}: expected {what}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value, what))
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value {
        "on" | "true" | "yes" => Ok(true),
        "off" | "false" | "no" => Ok(false),
        _ => Err(bad(key, value, "on or off")),
    }
}

fn list<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<Vec<T>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| num(key, v.trim(), what)).collect()
}

fn fmt_list<T: ToString>(v: &[T]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn shape_name(s: PulseShape) -> &'static str {
    match s {
        PulseShape::VectorPotential => "vector_potential",
        PulseShape::Field => "field",
        PulseShape::None => "none",
    }
}

fn gauge_name(g: Gauge) -> &'static str {
    match g {
        Gauge::Length => "length",
        Gauge::Velocity => "velocity",
    }
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

fn split_lines(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| DriverError::Config(format!("line {}: expected key = value", no + 1)))?;
        let k = k.trim().to_string();
        if !REQUIRED.contains(&k.as_str()) && !OPTIONAL.contains(&k.as_str()) {
            return Err(DriverError::Config(format!(
                "line {}: unknown key {k:?}",
                no + 1
            )));
        }
        if map.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(DriverError::Config(format!(
                "line {}: duplicate key {k:?}",
                no + 1
            )));
        }
    }
    for k in REQUIRED {
        if !map.contains_key(*k) {
            return Err(DriverError::Config(format!("missing required key {k:?}")));
        }
    }
    Ok(map)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let map = split_lines(text)?;
        let get = |k: &str| map.get(k).map(String::as_str);
        let req = |k: &str| map[k].as_str();

        let cycles: f64 = num("cycles", req("cycles"), "a number")?;
        let l_max: usize = num("l_max", req("l_max"), "a non-negative integer")?;
        let cfg = RunConfig {
            n_dvr: num("n_dvr", req("n_dvr"), "an integer")?,
            n_fe_inner: num("n_fe_inner", req("n_fe_inner"), "an integer")?,
            n_fe_outer: num("n_fe_outer", req("n_fe_outer"), "an integer")?,
            delta_xi: num("delta_xi", req("delta_xi"), "a number")?,
            l_max,
            wavelength_nm: num("wavelength_nm", req("wavelength_nm"), "a number")?,
            intensity_w_cm2: num("intensity_w_cm2", req("intensity_w_cm2"), "a number")?,
            cycles,
            pulse: match get("pulse").unwrap_or("vector_potential") {
                "vector_potential" => PulseShape::VectorPotential,
                "field" => PulseShape::Field,
                "none" => PulseShape::None,
                v => return Err(bad("pulse", v, "vector_potential, field or none")),
            },
            gauge: match get("gauge").unwrap_or("length") {
                "length" => Gauge::Length,
                "velocity" => Gauge::Velocity,
                v => return Err(bad("gauge", v, "length or velocity")),
            },
            r_inf: get("r_inf").map_or(Ok(0.0), |v| num("r_inf", v, "a number"))?,
            dt: num("dt", req("dt"), "a number")?,
            eps: get("eps").map_or(Ok(ets_core::propagator::DEFAULT_EPS), |v| {
                num("eps", v, "a number")
            })?,
            max_k: get("max_k").map_or(Ok(ets_core::propagator::DEFAULT_MAX_K), |v| {
                num("max_k", v, "an integer")
            })?,
            filter: get("filter").map_or(Ok(false), |v| flag("filter", v))?,
            filter_n_fe: get("filter_n_fe")
                .map_or(Ok(10), |v| num("filter_n_fe", v, "an integer"))?,
            e_cut: get("e_cut").map_or(Ok(900.0), |v| num("e_cut", v, "a number"))?,
            total_cycles: get("total_cycles")
                .map_or(Ok(cycles), |v| num("total_cycles", v, "a number"))?,
            snapshot_cycles: get("snapshot_cycles")
                .map_or(Ok(Vec::new()), |v| list("snapshot_cycles", v, "numbers"))?,
            density_r_max: get("density_r_max")
                .map_or(Ok(0.0), |v| num("density_r_max", v, "a number"))?,
            density_points: get("density_points")
                .map_or(Ok(2000), |v| num("density_points", v, "an integer"))?,
            hhg: get("hhg").map_or(Ok(true), |v| flag("hhg", v))?,
            spectrum_up_max: get("spectrum_up_max")
                .map_or(Ok(4.0), |v| num("spectrum_up_max", v, "a number"))?,
            spectrum_points: get("spectrum_points")
                .map_or(Ok(2000), |v| num("spectrum_points", v, "an integer"))?,
            spectrum_window: get("spectrum_window")
                .map_or(Ok(false), |v| flag("spectrum_window", v))?,
            checkpoint_every: get("checkpoint_every")
                .map_or(Ok(0), |v| num("checkpoint_every", v, "an integer"))?,
            output_dir: PathBuf::from(get("output_dir").unwrap_or(".")),
            seed: get("seed").map_or(Ok(0), |v| num("seed", v, "an integer"))?,
            scan_dt: get("scan_dt").map_or(Ok(Vec::new()), |v| list("scan_dt", v, "numbers"))?,
            scan_l_max: get("scan_l_max")
                .map_or(Ok(vec![l_max]), |v| list("scan_l_max", v, "integers"))?,
            scan_trials: get("scan_trials")
                .map_or(Ok(100), |v| num("scan_trials", v, "an integer"))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        let err = |m: String| Err(DriverError::Config(m));
        self.grid_spec()?;
        let pulse = self.pulse_spec()?;
        pulse.check_gauge(self.gauge)?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return err(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return err(format!("eps must lie in (0, 1), got {}", self.eps));
        }
        if self.max_k < 2 {
            return err("max_k must be at least 2".into());
        }
        if !(self.total_cycles >= self.cycles) {
            return err(format!(
                "total_cycles = {} is shorter than the pulse ({} cycles)",
                self.total_cycles, self.cycles
            ));
        }
        if let Some(c) = self
            .snapshot_cycles
            .iter()
            .find(|&&c| !(0.0..=self.total_cycles).contains(&c))
        {
            return err(format!("snapshot at {c} cycles lies outside the run"));
        }
        if self.density_points < 2 {
            return err("density_points must be at least 2".into());
        }
        if self.hhg && self.spectrum_points == 0 {
            return err("spectrum_points must be positive".into());
        }
        if self.filter {
            if self.n_fe_inner == 0 {
                return err("filtering needs an unscaled inner region (n_fe_inner > 0)".into());
            }
            if self.filter_n_fe == 0 || self.filter_n_fe > self.n_fe_inner {
                return err(format!("filter_n_fe must lie in 1..={}", self.n_fe_inner));
            }
        }
        if self.r_inf > 0.0 && self.n_fe_outer == 0 {
            return err("time scaling needs outer elements (n_fe_outer > 0)".into());
        }
        if let Some(&l) = self.scan_l_max.iter().find(|&&l| l > self.l_max) {
            return err(format!(
                "scan_l_max entry {l} exceeds l_max = {}",
                self.l_max
            ));
        }
        if self.scan_dt.iter().any(|&d| !(d > 0.0)) {
            return err("scan_dt entries must be positive".into());
        }
        ScalingSchedule::new(self.r_inf, pulse.duration().max(f64::MIN_POSITIVE))?;
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        Ok(GridSpec::uniform(
            self.n_dvr,
            self.n_fe_inner,
            self.n_fe_outer,
            self.delta_xi,
        )?)
    }

    pub fn pulse_spec(&self) -> Result<PulseSpec> {
        Ok(PulseSpec::from_lab(
            self.wavelength_nm,
            self.intensity_w_cm2,
            self.cycles,
            self.pulse,
        )?)
    }

    pub fn schedule(&self) -> Result<ScalingSchedule> {
        if self.r_inf == 0.0 {
            return Ok(ScalingSchedule::disabled());
        }
        Ok(ScalingSchedule::new(
            self.r_inf,
            self.pulse_spec()?.duration(),
        )?)
    }

    pub fn filter_spec(&self) -> Option<FilterSpec> {
        self.filter.then_some(FilterSpec {
            n_fe_filter: self.filter_n_fe,
            e_cut: self.e_cut,
        })
    }

    /// Number of time steps covering `total_cycles`.
    pub fn n_steps(&self) -> Result<usize> {
        let t = self.total_cycles * self.pulse_spec()?.optical_cycle();
        Ok((t / self.dt).round() as usize)
    }

    /// Canonical text form; parsing it gives back the same configuration.
    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("n_dvr", self.n_dvr.to_string()),
            ("n_fe_inner", self.n_fe_inner.to_string()),
            ("n_fe_outer", self.n_fe_outer.to_string()),
            ("delta_xi", format!("{:?}", self.delta_xi)),
            ("l_max", self.l_max.to_string()),
            ("wavelength_nm", format!("{:?}", self.wavelength_nm)),
            ("intensity_w_cm2", format!("{:?}", self.intensity_w_cm2)),
            ("cycles", format!("{:?}", self.cycles)),
            ("pulse", shape_name(self.pulse).into()),
            ("gauge", gauge_name(self.gauge).into()),
            ("r_inf", format!("{:?}", self.r_inf)),
            ("dt", format!("{:?}", self.dt)),
            ("eps", format!("{:?}", self.eps)),
            ("max_k", self.max_k.to_string()),
            ("filter", on_off(self.filter).into()),
            ("filter_n_fe", self.filter_n_fe.to_string()),
            ("e_cut", format!("{:?}", self.e_cut)),
            ("total_cycles", format!("{:?}", self.total_cycles)),
            (
                "snapshot_cycles",
                fmt_list(
                    &self
                        .snapshot_cycles
                        .iter()
                        .map(|c| format!("{c:?}"))
                        .collect::<Vec<_>>(),
                ),
            ),
            ("density_r_max", format!("{:?}", self.density_r_max)),
            ("density_points", self.density_points.to_string()),
            ("hhg", on_off(self.hhg).into()),
            ("spectrum_up_max", format!("{:?}", self.spectrum_up_max)),
            ("spectrum_points", self.spectrum_points.to_string()),
            ("spectrum_window", on_off(self.spectrum_window).into()),
            ("checkpoint_every", self.checkpoint_every.to_string()),
            ("output_dir", self.output_dir.display().to_string()),
            ("seed", self.seed.to_string()),
            (
                "scan_dt",
                fmt_list(
                    &self
                        .scan_dt
                        .iter()
                        .map(|c| format!("{c:?}"))
                        .collect::<Vec<_>>(),
                ),
            ),
            ("scan_l_max", fmt_list(&self.scan_l_max)),
            ("scan_trials", self.scan_trials.to_string()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "n_dvr = 6\nn_fe_inner = 4\nn_fe_outer = 2\ndelta_xi = 2\nl_max = 3\n\
                           wavelength_nm = 800\nintensity_w_cm2 = 1e14\ncycles = 3\ndt = 0.05\n";

    #[test]
    fn canonical_text_roundtrips() {
        let text = format!(
            "{MINIMAL}snapshot_cycles = 1, 2.5 # two snapshots\nfilter = on\nfilter_n_fe = 2\n"
        );
        let cfg = RunConfig::parse(&text).unwrap();
        assert_eq!(cfg.snapshot_cycles, vec![1.0, 2.5]);
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_duplicate_and_missing_keys() {
        assert!(RunConfig::parse(&format!("{MINIMAL}r_infinity = 0.1\n")).is_err());
        assert!(RunConfig::parse(&format!("{MINIMAL}dt = 0.1\n")).is_err());
        assert!(RunConfig::parse("n_dvr = 6\n").is_err());
        assert!(RunConfig::parse(&format!("{MINIMAL}total_cycles = 2\n")).is_err());
        assert!(RunConfig::parse(&format!("{MINIMAL}pulse = field\ngauge = velocity\n")).is_err());
    }
}
