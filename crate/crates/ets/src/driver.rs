//! Run orchestration: setup, ground state, the time loop and diagnostics.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ets_core::grid::build_grid;
use ets_core::ground::{ground_state, GroundState};
use ets_core::hamiltonian::TimeFactors;
use ets_core::observables::{density, dipole_acceleration, hhg_spectrum, DensitySnapshot};
use ets_core::propagator::{estimate_kmax, kmax_scan};
use ets_core::scaling::Scale;
use ets_core::{
    AngularCoupling, Hamiltonian, LanczosPropagator, StateVector, StiffnessFilter, C64,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::checkpoint::{self, Checkpoint, Header};
use crate::config::RunConfig;
use crate::error::{io_err, DriverError, Result};
use crate::output::{self, KLog};

pub const FINAL_CHECKPOINT: &str = "final.ckpt";
pub const ROLLING_CHECKPOINT: &str = "state.ckpt";

/// Assembles the Hamiltonian of a configuration at `t = 0`, with the
/// stiffness filter attached when enabled. The filter's localization table
/// is returned alongside and written before the localization check runs.
pub fn build_hamiltonian(
    cfg: &RunConfig,
    report_dir: Option<&Path>,
) -> Result<(Hamiltonian, Option<f64>)> {
    let grid = build_grid(cfg.grid_spec()?)?;
    let angular = AngularCoupling::new(cfg.l_max);
    let mut h = Hamiltonian::new(grid, angular, cfg.schedule()?, cfg.pulse_spec()?, cfg.gauge)?;
    let mut worst = None;
    if let Some(spec) = cfg.filter_spec() {
        let f = StiffnessFilter::build_unchecked(h.grid(), h.angular(), cfg.gauge, spec)?;
        if let Some(dir) = report_dir {
            let path = dir.join("localization.txt");
            fs::write(&path, f.report_table()).map_err(io_err(&path))?;
        }
        f.check_localization()?;
        worst = Some(f.report.iter().map(|e| e.edge_fraction).fold(0.0, f64::max));
        h.attach_filter(f)?;
    }
    Ok((h, worst))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub assemble_s: f64,
    pub ground_state_s: f64,
    pub propagate_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KStats {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub config: BTreeMap<String, String>,
    pub version: String,
    pub threads: usize,
    pub timings: Timings,
    pub n_basis: usize,
    pub dimension: usize,
    pub nonzeros: usize,
    pub ground_energy: f64,
    pub max_edge_fraction: Option<f64>,
    pub steps: usize,
    pub t_final: f64,
    pub final_norm: f64,
    pub k: KStats,
    pub resumed_from_step: Option<usize>,
}

/// A run in progress; can be advanced in pieces and checkpointed.
pub struct Simulation {
    cfg: RunConfig,
    config_text: String,
    dir: PathBuf,
    h: Hamiltonian,
    prop: LanczosPropagator,
    state: StateVector,
    step: usize,
    n_steps: usize,
    trace: Vec<[f64; 3]>,
    snapshots: BTreeSet<usize>,
    klog: KLog,
    ground_energy: f64,
    k_min: usize,
    k_max: usize,
    k_total: u64,
    max_edge_fraction: Option<f64>,
    timings: Timings,
    resumed_from: Option<usize>,
}

impl Simulation {
    /// Builds the system, prepares the ground state and records `t = 0`.
    pub fn start(cfg: RunConfig) -> Result<Self> {
        let dir = cfg.output_dir.clone();
        ensure_dir(&dir)?;
        let clock = Instant::now();
        let (h, worst) = build_hamiltonian(&cfg, Some(&dir))?;
        let assemble_s = clock.elapsed().as_secs_f64();
        let clock = Instant::now();
        let GroundState {
            energy, mut state, ..
        } = ground_state(&h)?;
        let ground_state_s = clock.elapsed().as_secs_f64();
        state.t = 0.0;
        let klog = KLog::open(&dir, false)?;
        let mut sim = Simulation::assemble(cfg, dir, h, state, 0, Vec::new(), klog, energy, worst)?;
        sim.timings.assemble_s = assemble_s;
        sim.timings.ground_state_s = ground_state_s;
        sim.record(0)?;
        Ok(sim)
    }

    /// Continues a run from a checkpoint written by [`Simulation::checkpoint`].
    pub fn resume(path: &Path) -> Result<Self> {
        let ck = checkpoint::read(path)?;
        let cfg = RunConfig::parse(&ck.header.config)?;
        let ck = checkpoint::restore(path, &cfg)?;
        let dir = cfg.output_dir.clone();
        ensure_dir(&dir)?;
        let clock = Instant::now();
        let (h, worst) = build_hamiltonian(&cfg, Some(&dir))?;
        let assemble_s = clock.elapsed().as_secs_f64();
        let klog = KLog::open(&dir, true)?;
        let Header {
            step,
            dipole,
            ground_energy,
            k_min,
            k_max,
            k_total,
            ..
        } = ck.header;
        let mut sim = Simulation::assemble(
            cfg,
            dir,
            h,
            ck.state,
            step,
            dipole,
            klog,
            ground_energy,
            worst,
        )?;
        sim.timings.assemble_s = assemble_s;
        sim.k_min = k_min;
        sim.k_max = k_max;
        sim.k_total = k_total;
        sim.resumed_from = Some(step);
        Ok(sim)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        cfg: RunConfig,
        dir: PathBuf,
        h: Hamiltonian,
        state: StateVector,
        step: usize,
        trace: Vec<[f64; 3]>,
        klog: KLog,
        ground_energy: f64,
        max_edge_fraction: Option<f64>,
    ) -> Result<Self> {
        let n_steps = cfg.n_steps()?;
        let t0 = h.pulse().optical_cycle();
        let snapshots = cfg
            .snapshot_cycles
            .iter()
            .map(|c| ((c * t0) / cfg.dt).round() as usize)
            .collect();
        if state.coeffs.len() != h.n_blocks() * h.n_basis() {
            return Err(DriverError::Checkpoint(
                "state size does not match the Hamiltonian".into(),
            ));
        }
        Ok(Simulation {
            config_text: cfg.to_text(),
            prop: LanczosPropagator::new(cfg.eps, cfg.max_k),
            cfg,
            dir,
            h,
            state,
            step,
            n_steps,
            trace,
            snapshots,
            klog,
            ground_energy,
            k_min: usize::MAX,
            k_max: 0,
            k_total: 0,
            max_edge_fraction,
            timings: Timings::default(),
            resumed_from: None,
        })
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.cfg.dt
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.h
    }

    pub fn ground_energy(&self) -> f64 {
        self.ground_energy
    }

    pub fn dipole_trace(&self) -> &[[f64; 3]] {
        &self.trace
    }

    /// Density on the configured radii at the current time, restricted to
    /// the simulated radius.
    pub fn density_now(&self) -> Result<DensitySnapshot> {
        let t = self.time();
        let rs = self.h.grid().r_sigma();
        let top = self
            .h
            .schedule()
            .map_xi_to_r(self.h.grid().spec.xi_max, t, rs);
        let r_max = if self.cfg.density_r_max > 0.0 {
            self.cfg.density_r_max
        } else {
            top
        };
        let m = self.cfg.density_points;
        let radii: Vec<f64> = (0..m)
            .map(|k| r_max * k as f64 / (m - 1) as f64)
            .filter(|&r| r <= top)
            .collect();
        Ok(density(
            &self.state,
            self.h.grid(),
            self.h.schedule(),
            t,
            &radii,
        )?)
    }

    // observables due at `step`, which has just been reached
    fn record(&mut self, step: usize) -> Result<()> {
        let t = step as f64 * self.cfg.dt;
        if self.cfg.hhg {
            let a = dipole_acceleration(
                &self.state,
                self.h.grid(),
                self.h.angular(),
                self.h.schedule(),
                self.h.pulse(),
                t,
            )?;
            let (f, _) = self.h.pulse().field_and_potential(t);
            self.trace.push([t, a, f]);
        }
        if self.snapshots.contains(&step) {
            output::write_density(&self.dir, &self.density_now()?)?;
        }
        Ok(())
    }

    /// Performs up to `max_steps` further steps (fewer at the end of the run).
    pub fn advance(&mut self, max_steps: usize) -> Result<()> {
        let clock = Instant::now();
        let dt = self.cfg.dt;
        let end = self.n_steps.min(self.step.saturating_add(max_steps));
        let result = (|| {
            while self.step < end {
                let k = self.step;
                self.h.update_time((k as f64 + 0.5) * dt);
                let rep = match self.prop.step(&self.h, &mut self.state.coeffs, dt) {
                    Ok(r) => r,
                    Err(e) => {
                        self.klog.flush()?;
                        return Err(e.into());
                    }
                };
                self.step += 1;
                let t = self.step as f64 * dt;
                self.state.t = t;
                if !self.state.is_finite() {
                    return Err(
                        ets_core::Error::Numerical(format!("non-finite state at t = {t}")).into(),
                    );
                }
                self.k_min = self.k_min.min(rep.k_used);
                self.k_max = self.k_max.max(rep.k_used);
                self.k_total += rep.k_used as u64;
                self.klog.push(t, rep.k_used, rep.error_estimate)?;
                self.record(self.step)?;
                if self.cfg.checkpoint_every > 0 && self.step % self.cfg.checkpoint_every == 0 {
                    self.checkpoint(&self.dir.join(ROLLING_CHECKPOINT))?;
                }
            }
            Ok(())
        })();
        self.timings.propagate_s += clock.elapsed().as_secs_f64();
        self.klog.flush()?;
        result
    }

    pub fn checkpoint(&self, path: &Path) -> Result<()> {
        let header = Header {
            fingerprint: checkpoint::fingerprint(&self.cfg),
            step: self.step,
            t: self.time(),
            n_blocks: self.h.n_blocks(),
            n_basis: self.h.n_basis(),
            config: self.config_text.clone(),
            dipole: self.trace.clone(),
            ground_energy: self.ground_energy,
            k_min: self.k_min,
            k_max: self.k_max,
            k_total: self.k_total,
        };
        checkpoint::write(
            path,
            &Checkpoint {
                header,
                state: self.state.clone(),
            },
        )
    }

    /// Writes the final checkpoint, dipole trace, spectrum and metadata.
    pub fn finish(mut self) -> Result<RunMetadata> {
        if self.step < self.n_steps {
            self.advance(usize::MAX)?;
        }
        self.checkpoint(&self.dir.join(FINAL_CHECKPOINT))?;
        if self.cfg.hhg {
            output::write_dipole(&self.dir, &self.trace)?;
            let pulse = self.h.pulse();
            let up = pulse.ponderomotive_energy();
            let m = self.cfg.spectrum_points;
            let w_max = self.cfg.spectrum_up_max * up;
            let omegas: Vec<f64> = (1..=m).map(|k| w_max * k as f64 / m as f64).collect();
            let a: Vec<f64> = self.trace.iter().map(|s| s[1]).collect();
            let spec = hhg_spectrum(
                &a,
                self.cfg.dt,
                &omegas,
                if up > 0.0 { up } else { 1.0 },
                self.cfg.spectrum_window,
            )?;
            output::write_spectrum(&self.dir, &spec)?;
        }
        let steps = self.step;
        let meta = RunMetadata {
            config: self
                .cfg
                .entries()
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            threads: rayon::current_num_threads(),
            timings: self.timings.clone(),
            n_basis: self.h.n_basis(),
            dimension: self.h.n_basis() * self.h.n_blocks(),
            nonzeros: self.h.nnz(),
            ground_energy: self.ground_energy,
            max_edge_fraction: self.max_edge_fraction,
            steps,
            t_final: self.time(),
            final_norm: self.state.norm_sqr(),
            k: KStats {
                min: if steps == 0 { 0 } else { self.k_min },
                max: self.k_max,
                mean: if steps == 0 {
                    0.0
                } else {
                    self.k_total as f64 / steps as f64
                },
            },
            resumed_from_step: self.resumed_from,
        };
        output::write_json_atomic(&self.dir.join("meta.json"), &meta)?;
        Ok(meta)
    }
}

pub fn run(cfg: RunConfig) -> Result<RunMetadata> {
    Simulation::start(cfg)?.finish()
}

pub fn resume(path: &Path) -> Result<RunMetadata> {
    Simulation::resume(path)?.finish()
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub l_max: usize,
    pub dt: f64,
    /// `None` when the cap `max_k` was reached.
    pub k_max: Option<usize>,
    pub estimate: Option<usize>,
}

/// Random-vector Krylov dimension scan of the field-free, unscaled matrix
/// over `scan_l_max x scan_dt`; writes `kmax.csv`.
pub fn scan(cfg: &RunConfig) -> Result<Vec<ScanRow>> {
    ensure_dir(&cfg.output_dir)?;
    let (mut h, _) = build_hamiltonian(cfg, Some(&cfg.output_dir))?;
    h.set_factors(TimeFactors::field_free(Scale::IDENTITY));
    let dts = if cfg.scan_dt.is_empty() {
        vec![cfg.dt]
    } else {
        cfg.scan_dt.clone()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let table = kmax_scan(
        &h,
        &dts,
        &cfg.scan_l_max,
        cfg.scan_trials,
        cfg.eps,
        cfg.max_k,
        &mut rng,
    )?;
    let xi1 = h.grid().xi_1();
    let mut rows = Vec::new();
    for (l, ks) in cfg.scan_l_max.iter().zip(&table) {
        for (dt, k) in dts.iter().zip(ks) {
            rows.push(ScanRow {
                l_max: *l,
                dt: *dt,
                k_max: *k,
                estimate: estimate_kmax(*l, xi1, *dt, cfg.eps),
            });
        }
    }
    let opt = |v: Option<usize>| v.map_or(String::new(), |k| k.to_string());
    output::write_rows(
        &cfg.output_dir.join("kmax.csv"),
        "l_max,dt,k_max,estimate",
        rows.iter().map(|r| {
            format!(
                "{},{:e},{},{}",
                r.l_max,
                r.dt,
                opt(r.k_max),
                opt(r.estimate)
            )
        }),
    )?;
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundReport {
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    pub n_basis: usize,
}

/// Ground state only: writes `ground_state.json` and the initial density.
pub fn ground(cfg: &RunConfig) -> Result<GroundReport> {
    ensure_dir(&cfg.output_dir)?;
    let (h, _) = build_hamiltonian(cfg, Some(&cfg.output_dir))?;
    let gs = ground_state(&h)?;
    let top = h.grid().spec.xi_max;
    let r_max = if cfg.density_r_max > 0.0 {
        cfg.density_r_max.min(top)
    } else {
        top
    };
    let m = cfg.density_points;
    let radii: Vec<f64> = (0..m).map(|k| r_max * k as f64 / (m - 1) as f64).collect();
    let snap = density(&gs.state, h.grid(), h.schedule(), 0.0, &radii)?;
    output::write_density(&cfg.output_dir, &snap)?;
    let rep = GroundReport {
        energy: gs.energy,
        residual: gs.residual,
        iterations: gs.iterations,
        n_basis: h.n_basis(),
    };
    output::write_json_atomic(&cfg.output_dir.join("ground_state.json"), &rep)?;
    Ok(rep)
}

/// Overlap `<a|b>` of two states of the same basis.
pub fn fidelity(a: &StateVector, b: &StateVector) -> f64 {
    a.coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(x, y)| x.conj() * y)
        .sum::<C64>()
        .norm_sqr()
        .sqrt()
}
