//! The `run` command: time stepping with diagnostics, snapshots and breakdown classification.

use std::fs;
use std::path::{Path, PathBuf};

use fsbc::diagnostics::{classify_breakdown, BreakdownReport, DiagnosticsRecord, Recorder};
use fsbc::dynamics::{State, Stepper};
use fsbc::initial::VelocityInit;
use fsbc::spectral::{Grid, SurfaceField, VectorField};
use fsbc::BreakdownCondition;
use log::{info, warn};
use serde::Serialize;

use crate::config::Config;
use crate::error::{condition_exit_code, exit, CliError};
use crate::io::{read_history, read_snapshot, write_history, write_snapshot, RunHistory, Snapshot, TimeseriesWriter};

/// Relative slack below which the remaining time to `t_end` counts as zero.
const T_END_SLACK: f64 = 1e-12;

/// A configured run: stepper, state and recorded history.
pub struct Simulation {
    cfg: Config,
    grid: Grid,
    stepper: Stepper,
    recorder: Recorder,
    state: State,
}

impl Simulation {
    /// Build from analytic initial data, or continue from a snapshot (and its history sidecar).
    pub fn new(cfg: &Config) -> Result<Self, CliError> {
        let grid = cfg.grid()?;
        let (state, history) = match &cfg.initial_data.snapshot {
            Some(path) => {
                let snap = read_snapshot(path).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
                if snap.sigma != cfg.physics.sigma {
                    warn!("snapshot sigma = {} differs from configured sigma = {}", snap.sigma, cfg.physics.sigma);
                }
                (snap.to_state(&grid)?, read_history(path)?)
            }
            None => (State::new(0.0, VectorField::zeros(&grid), cfg.initial_data.psi0.build(&grid)?), None),
        };
        let cutoff = cfg.check_surface(state.psi.sup())?;
        let mut stepper = cfg.stepper(cutoff)?;
        let mut sim = match history {
            Some(h) => {
                stepper.set_steps_taken(h.steps);
                Self { cfg: cfg.clone(), grid, stepper, recorder: h.recorder, state }
            }
            None => {
                let fresh = cfg.initial_data.snapshot.is_none();
                let mut state = state;
                if fresh {
                    state.v = initial_velocity(&stepper, &cfg.initial_data.v0, &state.psi)?;
                }
                let recorder = Recorder::new(cfg.recorder());
                Self { cfg: cfg.clone(), grid, stepper, recorder, state }
            }
        };
        if sim.recorder.records().is_empty() {
            sim.record()?;
        }
        Ok(sim)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn steps(&self) -> u64 {
        self.stepper.steps_taken()
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        self.recorder.records()
    }

    pub fn history(&self) -> RunHistory {
        RunHistory { steps: self.steps(), recorder: self.recorder.clone() }
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot::from_state(&self.grid, self.cfg.physics.sigma, &self.state)
    }

    pub fn classify(&self) -> BreakdownReport {
        classify_breakdown(self.records(), &self.cfg.thresholds())
    }

    fn record(&mut self) -> Result<DiagnosticsRecord, CliError> {
        let eval = self.stepper.evaluate(&self.state.v, &self.state.psi)?;
        Ok(self.recorder.record(&self.grid, &self.state, &eval)?)
    }

    /// Whether `t_end` or `max_steps` has been reached.
    pub fn finished(&self) -> bool {
        let st = &self.cfg.stepping;
        self.steps() >= st.max_steps || st.t_end - self.state.t <= T_END_SLACK * st.t_end
    }

    /// One step; returns the new record when this step is on the recording cadence.
    pub fn advance(&mut self) -> Result<Option<DiagnosticsRecord>, CliError> {
        let cfl = self.stepper.cfl(&self.state)?;
        let dt = self.cfg.stepping.dt.map_or(cfl, |d| d.min(cfl)).min(self.cfg.stepping.t_end - self.state.t);
        let (next, report) = self.stepper.rk4_step(&self.state, dt)?;
        log::debug!("dt = {dt:.3e}, pressure iterations = {}", report.pressure_iterations);
        self.state = next;
        if self.steps().is_multiple_of(self.cfg.diagnostics.record_every) {
            return Ok(Some(self.record()?));
        }
        Ok(None)
    }
}

/// Velocity family on the initial geometry, cleaned when projection is enabled.
fn initial_velocity(stepper: &Stepper, init: &VelocityInit, psi: &SurfaceField) -> Result<VectorField, CliError> {
    let grid = stepper.grid();
    let (geom, _) = stepper.geometry(&VectorField::zeros(grid), psi)?;
    let v = init.build(grid, &geom)?;
    if *init == VelocityInit::Zero || stepper.config().projection_cadence == 0 {
        return Ok(v);
    }
    Ok(stepper.project(&v, psi)?)
}

/// First triggered condition, checked in the order (c), (a), (b').
pub fn flagged_condition(report: &BreakdownReport) -> Option<BreakdownCondition> {
    [
        (&report.cond_c, BreakdownCondition::Geometry),
        (&report.cond_a, BreakdownCondition::ControlNorms),
        (&report.cond_b_prime, BreakdownCondition::Vorticity),
    ]
    .into_iter()
    .find(|(f, _)| f.triggered)
    .map(|(_, c)| c)
}

/// Summary written to `breakdown.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub status: String,
    pub exit_code: u8,
    pub steps: u64,
    pub t: f64,
    pub message: Option<String>,
    pub report: BreakdownReport,
}

pub struct RunPaths {
    pub timeseries: PathBuf,
    pub breakdown: PathBuf,
    pub final_snapshot: PathBuf,
}

impl RunPaths {
    pub fn new(dir: &Path) -> Self {
        Self {
            timeseries: dir.join("timeseries.csv"),
            breakdown: dir.join("breakdown.json"),
            final_snapshot: dir.join("final.snap"),
        }
    }

    pub fn snapshot(dir: &Path, step: u64) -> PathBuf {
        dir.join(format!("step_{step:08}.snap"))
    }
}

fn save_snapshot(sim: &Simulation, path: &Path) -> Result<(), CliError> {
    write_snapshot(path, &sim.snapshot())?;
    write_history(path, &sim.history())?;
    Ok(())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Run to completion or halt, writing the time series, snapshots and the breakdown
/// summary under `dir`. Failures after the first step end the run with a summary;
/// failures while building the initial state are returned.
pub fn cmd_run(cfg: &Config, dir: &Path) -> Result<RunSummary, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let paths = RunPaths::new(dir);
    let resolved = toml::to_string(cfg).map_err(|e| CliError::Other(format!("cannot serialize config: {e}")))?;
    fs::write(dir.join("config.toml"), resolved).map_err(io_err(dir))?;

    let mut sim = Simulation::new(cfg)?;
    let mut ts = TimeseriesWriter::create(&paths.timeseries)?;
    for r in sim.records() {
        ts.append(r)?;
    }
    info!("start: t = {:.6}, step {}, grid {:?}", sim.state().t, sim.steps(), cfg.grid);

    let every = cfg.output.snapshot_every;
    let mut failure: Option<CliError> = None;
    let mut flagged = flagged_condition(&sim.classify());
    while flagged.is_none() && !sim.finished() {
        match sim.advance() {
            Ok(Some(r)) => {
                ts.append(&r)?;
                flagged = flagged_condition(&sim.classify());
            }
            Ok(None) => {}
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
        if every > 0 && sim.steps() % every == 0 {
            save_snapshot(&sim, &RunPaths::snapshot(dir, sim.steps()))?;
        }
    }
    save_snapshot(&sim, &paths.final_snapshot)?;

    let report = sim.classify();
    let (status, exit_code, message) = match (&failure, flagged) {
        (Some(e), _) => ("halted", e.exit_code(), Some(e.to_string())),
        (None, Some(c)) => ("flagged", condition_exit_code(c), Some(format!("breakdown trend under {c}"))),
        (None, None) => ("completed", exit::OK, None),
    };
    let summary =
        RunSummary { status: status.to_string(), exit_code, steps: sim.steps(), t: sim.state().t, message, report };
    let json = serde_json::to_string_pretty(&summary).map_err(crate::error::FormatError::from)?;
    fs::write(&paths.breakdown, json).map_err(io_err(&paths.breakdown))?;
    info!("{status} at t = {:.6} after {} steps", summary.t, summary.steps);
    Ok(summary)
}
