//! TOML run configuration with defaults, dotted-key overrides and validation.
//! Every validation failure names the offending key.

use std::path::{Path, PathBuf};

use fsbc::diagnostics::{RecorderConfig, Thresholds};
use fsbc::dynamics::{DynamicsConfig, Stepper};
use fsbc::elliptic::SolverSettings;
use fsbc::geometry::CutoffProfile;
use fsbc::initial::{SurfaceInit, VelocityInit};
use fsbc::spectral::Grid;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub b: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { nx: 16, ny: 16, nz: 16, b: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    pub sigma: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self { sigma: 1.0 }
    }
}

/// Transition band of `χ`; `delta1` defaults to the full depth.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CutoffConfig {
    pub delta0: f64,
    pub delta1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    pub psi0: SurfaceInit,
    pub v0: VelocityInit,
    /// Restart from a snapshot instead of the analytic families.
    pub snapshot: Option<PathBuf>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self { psi0: SurfaceInit::Flat, v0: VelocityInit::Zero, snapshot: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteppingConfig {
    pub safety: f64,
    pub t_end: f64,
    pub max_steps: u64,
    pub projection_cadence: usize,
    pub fixed_lid: bool,
    /// Fixed step instead of the CFL step; still capped by the CFL limit.
    pub dt: Option<f64>,
}

impl Default for SteppingConfig {
    fn default() -> Self {
        Self { safety: 0.5, t_end: 1.0, max_steps: 1000, projection_cadence: 1, fixed_lid: false, dt: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TolerancesConfig {
    pub elliptic_tol: f64,
    pub max_iters: usize,
    pub restart: usize,
    pub compat_tol: f64,
    pub eps_geo: f64,
}

impl Default for TolerancesConfig {
    fn default() -> Self {
        let s = SolverSettings::default();
        Self { elliptic_tol: s.tol, max_iters: s.max_iters, restart: s.restart, compat_tol: s.compat_tol, eps_geo: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub record_every: u64,
    pub k2_accumulator_enabled: bool,
    pub turning_threshold: f64,
    pub control_norm_max: f64,
    pub control_growth_rate: f64,
    pub bkm_max: f64,
    pub vorticity_slope: f64,
    pub min_bkm_span: f64,
    pub window: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        let t = Thresholds::default();
        Self {
            record_every: 1,
            k2_accumulator_enabled: true,
            turning_threshold: t.turning,
            control_norm_max: t.control_norm_max,
            control_growth_rate: t.control_growth_rate,
            bkm_max: t.bkm_max,
            vorticity_slope: t.vorticity_slope,
            min_bkm_span: t.min_bkm_span,
            window: t.window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Write a snapshot every `n` steps; `0` writes only the final one.
    pub snapshot_every: u64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: PathBuf::from("output"), snapshot_every: 0 }
    }
}

/// Linear capillary-wave experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionConfig {
    pub amplitude: f64,
    pub modes: Vec<i64>,
    /// Zero crossings of the modal amplitude used in the frequency fit.
    pub crossings: usize,
    /// Give up after this many predicted periods.
    pub max_periods: f64,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        Self { amplitude: 1e-4, modes: vec![1, 2, 3], crossings: 2, max_periods: 2.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub grid: GridConfig,
    pub physics: PhysicsConfig,
    pub cutoff: CutoffConfig,
    pub initial_data: InitialConfig,
    pub stepping: SteppingConfig,
    pub tolerances: TolerancesConfig,
    pub diagnostics: DiagnosticsConfig,
    pub output: OutputConfig,
    pub dispersion: DispersionConfig,
}

fn invalid(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config { key: key.to_string(), message: msg.to_string() }
}

/// Parse `KEY=VALUE`; the value is read as a TOML literal and falls back to a bare string.
fn parse_override(raw: &str) -> Result<(Vec<String>, toml::Value), CliError> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| invalid(raw, "override must have the form KEY=VALUE"))?;
    let key = key.trim();
    let path: Vec<String> = key.split('.').map(str::to_string).collect();
    if key.is_empty() || path.iter().any(String::is_empty) {
        return Err(invalid(key, "empty key segment in override"));
    }
    let value = value.trim();
    let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok((path, parsed))
}

fn apply_override(doc: &mut toml::Table, path: &[String], value: toml::Value) -> Result<(), CliError> {
    let (last, parents) = path.split_last().expect("override path is non-empty");
    let mut table = doc;
    for (i, seg) in parents.iter().enumerate() {
        let entry = table.entry(seg.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| invalid(&path[..=i].join("."), "is not a table and cannot hold sub-keys"))?;
    }
    table.insert(last.clone(), value);
    Ok(())
}

impl Config {
    /// Parse a TOML document, apply overrides, fill defaults and validate.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut doc: toml::Table = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        for raw in overrides {
            let (path, value) = parse_override(raw)?;
            apply_override(&mut doc, &path, value)?;
        }
        let cfg: Config = Config::deserialize(doc).map_err(|e| CliError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a file, or start from the defaults when `path` is `None`.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Io { path: p.to_path_buf(), source: e })?,
            None => String::new(),
        };
        Self::from_toml(&text, overrides)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let positive = |key: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(invalid(key, format!("must be positive and finite, got {x}")))
            }
        };
        let s = self.physics.sigma;
        if !(s > 0.0 && s.is_finite()) {
            return Err(invalid(
                "physics.sigma",
                format!("surface tension must be positive (the model has no gravity and needs sigma > 0), got {s}"),
            ));
        }
        self.grid()?;
        let st = &self.stepping;
        if !(st.safety > 0.0 && st.safety <= 1.0) {
            return Err(invalid("stepping.safety", format!("must lie in (0, 1], got {}", st.safety)));
        }
        positive("stepping.t_end", st.t_end)?;
        if st.max_steps == 0 {
            return Err(invalid("stepping.max_steps", "must be at least 1"));
        }
        if let Some(dt) = st.dt {
            positive("stepping.dt", dt)?;
        }
        let tol = &self.tolerances;
        positive("tolerances.elliptic_tol", tol.elliptic_tol)?;
        positive("tolerances.compat_tol", tol.compat_tol)?;
        positive("tolerances.eps_geo", tol.eps_geo)?;
        if tol.max_iters == 0 {
            return Err(invalid("tolerances.max_iters", "must be at least 1"));
        }
        if tol.restart == 0 {
            return Err(invalid("tolerances.restart", "must be at least 1"));
        }
        let d = &self.diagnostics;
        if d.record_every == 0 {
            return Err(invalid("diagnostics.record_every", "must be at least 1"));
        }
        positive("diagnostics.turning_threshold", d.turning_threshold)?;
        positive("diagnostics.control_norm_max", d.control_norm_max)?;
        positive("diagnostics.control_growth_rate", d.control_growth_rate)?;
        positive("diagnostics.bkm_max", d.bkm_max)?;
        positive("diagnostics.vorticity_slope", d.vorticity_slope)?;
        positive("diagnostics.min_bkm_span", d.min_bkm_span)?;
        if d.window < 3 {
            return Err(invalid("diagnostics.window", format!("trend fits need at least 3 records, got {}", d.window)));
        }
        let disp = &self.dispersion;
        positive("dispersion.amplitude", disp.amplitude)?;
        positive("dispersion.max_periods", disp.max_periods)?;
        if disp.crossings == 0 {
            return Err(invalid("dispersion.crossings", "must be at least 1"));
        }
        if disp.modes.is_empty() || disp.modes.iter().any(|&k| k < 1) {
            return Err(invalid("dispersion.modes", format!("need positive wavenumbers, got {:?}", disp.modes)));
        }
        // analytic data is checked here; snapshot data when it is read
        if self.initial_data.snapshot.is_none() {
            let grid = self.grid()?;
            let psi0 = self.initial_data.psi0.build(&grid).map_err(|e| invalid("initial_data.psi0", e))?;
            self.check_surface(psi0.sup())?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        let g = &self.grid;
        positive_depth(g.b)?;
        Grid::new(g.nx, g.ny, g.nz, g.b).map_err(|e| invalid("grid", e))
    }

    /// `sup|ψ₀| + eps_geo < b` and an admissible cutoff for this amplitude.
    pub fn check_surface(&self, psi0_sup: f64) -> Result<CutoffProfile, CliError> {
        let b = self.grid.b;
        if !(psi0_sup + self.tolerances.eps_geo < b) {
            return Err(invalid(
                "initial_data.psi0",
                format!("sup|psi0| = {psi0_sup} leaves no depth margin above eps_geo in b = {b}"),
            ));
        }
        self.cutoff(psi0_sup)
    }

    pub fn cutoff(&self, psi0_sup: f64) -> Result<CutoffProfile, CliError> {
        let grid = self.grid()?;
        let delta1 = self.cutoff.delta1.unwrap_or(self.grid.b);
        CutoffProfile::new(&grid, self.cutoff.delta0, delta1, psi0_sup).map_err(|e| invalid("cutoff", e))
    }

    pub fn solver_settings(&self) -> SolverSettings {
        let t = &self.tolerances;
        SolverSettings { tol: t.elliptic_tol, max_iters: t.max_iters, restart: t.restart, compat_tol: t.compat_tol }
    }

    pub fn dynamics(&self) -> DynamicsConfig {
        DynamicsConfig {
            sigma: self.physics.sigma,
            safety: self.stepping.safety,
            projection_cadence: self.stepping.projection_cadence,
            eps_geo: self.tolerances.eps_geo,
            fixed_lid: self.stepping.fixed_lid,
        }
    }

    pub fn thresholds(&self) -> Thresholds {
        let d = &self.diagnostics;
        Thresholds {
            eps_geo: self.tolerances.eps_geo,
            turning: d.turning_threshold,
            control_norm_max: d.control_norm_max,
            control_growth_rate: d.control_growth_rate,
            bkm_max: d.bkm_max,
            vorticity_slope: d.vorticity_slope,
            min_bkm_span: d.min_bkm_span,
            window: d.window,
        }
    }

    pub fn recorder(&self) -> RecorderConfig {
        RecorderConfig { sigma: self.physics.sigma, k2_accumulator: self.diagnostics.k2_accumulator_enabled }
    }

    pub fn stepper(&self, cutoff: CutoffProfile) -> Result<Stepper, CliError> {
        Ok(Stepper::new(&self.grid()?, cutoff, self.solver_settings(), self.dynamics())?)
    }
}

fn positive_depth(b: f64) -> Result<(), CliError> {
    if b > 0.0 && b.is_finite() {
        Ok(())
    } else {
        Err(invalid("grid.b", format!("depth must be positive and finite, got {b}")))
    }
}
