//! On-disk formats.
//!
//! Time series: comma-separated text, one header line with
//! [`DiagnosticsRecord::COLUMNS`], then one record per line. Floats use the
//! shortest representation that parses back to the same bits.
//!
//! Snapshot: little-endian binary,
//!
//! | bytes | content |
//! |---|---|
//! | 8 | magic `EFSBSNAP` |
//! | 4 | version (`u32`) |
//! | 4 × 3 | `nx`, `ny`, `nz` (`u32`) |
//! | 8 × 3 | `b`, `sigma`, `t` (`f64`) |
//! | 8 × nx·ny | `ψ`, row-major over `(x₂, x₁)` |
//! | 8 × nx·ny·nz, three times | `v₁`, `v₂`, `v₃`, row-major over `(x₃, x₂, x₁)`, level 0 on top |
//!
//! A restart also reads `<snapshot>.history.json`, the recorder state and step count.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use fsbc::diagnostics::{DiagnosticsRecord, Recorder};
use fsbc::dynamics::State;
use fsbc::spectral::{Grid, SurfaceField, VectorField, VolumeField};
use serde::{Deserialize, Serialize};

use crate::error::FormatError;

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"EFSBSNAP";
pub const SNAPSHOT_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 12 + 24;

/// Column header line of the time series.
pub fn timeseries_header() -> String {
    DiagnosticsRecord::COLUMNS.join(",")
}

fn record_line(r: &DiagnosticsRecord) -> String {
    r.values().iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// Line-buffered time-series writer; flushes after every record so a halted run keeps its history.
pub struct TimeseriesWriter {
    out: BufWriter<File>,
}

impl TimeseriesWriter {
    pub fn create(path: &Path) -> Result<Self, FormatError> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", timeseries_header())?;
        out.flush()?;
        Ok(Self { out })
    }

    pub fn append(&mut self, r: &DiagnosticsRecord) -> Result<(), FormatError> {
        writeln!(self.out, "{}", record_line(r))?;
        self.out.flush()?;
        Ok(())
    }
}

pub fn write_timeseries(path: &Path, records: &[DiagnosticsRecord]) -> Result<(), FormatError> {
    let mut w = TimeseriesWriter::create(path)?;
    for r in records {
        w.append(r)?;
    }
    Ok(())
}

pub fn read_timeseries(path: &Path) -> Result<Vec<DiagnosticsRecord>, FormatError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != timeseries_header() {
        return Err(FormatError::Timeseries { line: 1, message: format!("unexpected header `{header}`") });
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| FormatError::Timeseries { line: i + 2, message };
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| err(format!("`{s}`: {e}"))))
            .collect::<Result<_, _>>()?;
        let arr: [f64; 16] = vals
            .try_into()
            .map_err(|v: Vec<f64>| err(format!("expected {} columns, got {}", DiagnosticsRecord::COLUMNS.len(), v.len())))?;
        out.push(DiagnosticsRecord::from_values(arr));
    }
    Ok(out)
}

/// Raw snapshot contents.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub dims: [usize; 3],
    pub b: f64,
    pub sigma: f64,
    pub t: f64,
    pub psi: Vec<f64>,
    pub v: [Vec<f64>; 3],
}

impl Snapshot {
    pub fn from_state(grid: &Grid, sigma: f64, state: &State) -> Self {
        Self {
            dims: [grid.nx(), grid.ny(), grid.nz()],
            b: grid.depth(),
            sigma,
            t: state.t,
            psi: state.psi.values().to_vec(),
            v: state.v.0.clone().map(|c| c.values().to_vec()),
        }
    }

    /// Rebuild the state on `grid`, rejecting a different grid or depth.
    pub fn to_state(&self, grid: &Grid) -> Result<State, FormatError> {
        let expected = [grid.nx(), grid.ny(), grid.nz()];
        if self.dims != expected {
            return Err(FormatError::Dimensions { found: self.dims, expected });
        }
        if self.b != grid.depth() {
            return Err(FormatError::Depth { found: self.b, expected: grid.depth() });
        }
        let shape = |e: fsbc::Error| FormatError::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()));
        let psi = SurfaceField::from_values(grid, self.psi.clone()).map_err(shape)?;
        let [a, b, c] = self.v.clone().map(|x| VolumeField::from_values(grid, x));
        Ok(State::new(self.t, VectorField::new(a.map_err(shape)?, b.map_err(shape)?, c.map_err(shape)?), psi))
    }
}

pub fn write_snapshot(path: &Path, s: &Snapshot) -> Result<(), FormatError> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(SNAPSHOT_MAGIC)?;
    out.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    for d in s.dims {
        let d = u32::try_from(d).map_err(|_| std::io::Error::new(std::io::ErrorKind::InvalidInput, "grid too large"))?;
        out.write_all(&d.to_le_bytes())?;
    }
    for x in [s.b, s.sigma, s.t] {
        out.write_all(&x.to_le_bytes())?;
    }
    for arr in std::iter::once(&s.psi).chain(s.v.iter()) {
        for x in arr {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, FormatError> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 8 || &bytes[..8] != SNAPSHOT_MAGIC {
        return Err(FormatError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(FormatError::Truncated { expected: HEADER_LEN, found: bytes.len() });
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let version = u32_at(8);
    if version != SNAPSHOT_VERSION {
        return Err(FormatError::Version { found: version, expected: SNAPSHOT_VERSION });
    }
    let dims = [u32_at(12) as usize, u32_at(16) as usize, u32_at(20) as usize];
    let (b, sigma, t) = (f64_at(24), f64_at(32), f64_at(40));
    let (ns, nv) = (dims[0] * dims[1], dims[0] * dims[1] * dims[2]);
    let expected = HEADER_LEN + 8 * (ns + 3 * nv);
    if bytes.len() != expected {
        return Err(FormatError::Truncated { expected, found: bytes.len() });
    }
    let array = |start: usize, n: usize| (0..n).map(|i| f64_at(start + 8 * i)).collect::<Vec<f64>>();
    let psi = array(HEADER_LEN, ns);
    let off = HEADER_LEN + 8 * ns;
    let v = [array(off, nv), array(off + 8 * nv, nv), array(off + 16 * nv, nv)];
    Ok(Snapshot { dims, b, sigma, t, psi, v })
}

/// Recorder state and step count saved next to a snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHistory {
    pub steps: u64,
    pub recorder: Recorder,
}

pub fn sidecar_path(snapshot: &Path) -> PathBuf {
    let mut name = snapshot.as_os_str().to_owned();
    name.push(".history.json");
    PathBuf::from(name)
}

pub fn write_history(snapshot: &Path, h: &RunHistory) -> Result<(), FormatError> {
    let out = BufWriter::new(File::create(sidecar_path(snapshot))?);
    serde_json::to_writer(out, h)?;
    Ok(())
}

/// `None` when the snapshot has no sidecar.
pub fn read_history(snapshot: &Path) -> Result<Option<RunHistory>, FormatError> {
    let p = sidecar_path(snapshot);
    if !p.exists() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_reader(BufReader::new(File::open(p)?))?))
}
