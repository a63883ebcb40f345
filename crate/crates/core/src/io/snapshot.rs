//! Line-delimited JSON persistence of trajectories and the CSV run summary.
//!
//! A run directory holds `run.json` (config, test-function family, stationarity time),
//! `snapshots.jsonl` (one stored network per line), `diagnostics.jsonl` (one record per epoch)
//! and `moves.jsonl` (every deformation record). Floats are written in shortest round-trip
//! form and parsed exactly, so reading back reproduces every bit.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::IoError;
use crate::diagnostics::{dissipation_report, DiagnosticsRecord, TestFunctionFamily};
use crate::driver::{FlowConfig, Snapshot, Trajectory, TrajectoryEntry};
use crate::partition::LabeledNetwork;
use crate::steps::MoveRecord;

pub const RUN_FILE: &str = "run.json";
pub const SNAPSHOT_FILE: &str = "snapshots.jsonl";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.jsonl";
pub const MOVES_FILE: &str = "moves.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";

/// One stored network with the diagnostics measured on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRow {
    pub run: String,
    pub epoch: usize,
    pub network: LabeledNetwork,
    #[serde(flatten)]
    pub record: DiagnosticsRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub run: String,
    pub epoch: usize,
    pub dt: f64,
    pub snapshot: Option<usize>,
    #[serde(flatten)]
    pub record: DiagnosticsRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub run: String,
    pub scenario: String,
    pub config: FlowConfig,
    pub family: TestFunctionFamily,
    pub stationary_at: Option<f64>,
}

fn io_err(path: &Path, e: std::io::Error) -> IoError {
    IoError::Io { path: path.display().to_string(), source: e }
}

pub fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), IoError> {
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(f);
    for (i, r) in rows.into_iter().enumerate() {
        serde_json::to_writer(&mut w, &r).map_err(|e| IoError::Format { row: i + 1, message: e.to_string() })?;
        w.write_all(b"\n").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Parse one JSON value per non-empty line; errors carry the 1-based row number.
pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    let mut out = vec![];
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| IoError::Format { row: i + 1, message: e.to_string() })?);
    }
    Ok(out)
}

pub fn snapshot_rows(run: &str, traj: &Trajectory) -> Vec<SnapshotRow> {
    traj.entries
        .iter()
        .filter_map(|e| {
            e.snapshot.map(|s| SnapshotRow {
                run: run.into(),
                epoch: e.epoch,
                network: traj.snapshots[s].network.clone(),
                record: e.record.clone(),
            })
        })
        .collect()
}

pub fn write_snapshots(path: &Path, rows: &[SnapshotRow]) -> Result<(), IoError> {
    write_rows(path, rows)
}

pub fn read_snapshots(path: &Path) -> Result<Vec<SnapshotRow>, IoError> {
    read_rows(path)
}

/// Write the four trajectory files into `dir` (created if missing).
pub fn write_trajectory(dir: &Path, run: &str, scenario: &str, traj: &Trajectory) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let header = RunHeader {
        run: run.into(),
        scenario: scenario.into(),
        config: traj.config.clone(),
        family: traj.family.clone(),
        stationary_at: traj.stationary_at,
    };
    let p = dir.join(RUN_FILE);
    let text = serde_json::to_string_pretty(&header).map_err(|e| IoError::Format { row: 0, message: e.to_string() })?;
    fs::write(&p, text).map_err(|e| io_err(&p, e))?;
    write_snapshots(&dir.join(SNAPSHOT_FILE), &snapshot_rows(run, traj))?;
    write_rows(
        &dir.join(DIAGNOSTICS_FILE),
        traj.entries.iter().map(|e| DiagnosticsRow {
            run: run.into(),
            epoch: e.epoch,
            dt: e.dt,
            snapshot: e.snapshot,
            record: e.record.clone(),
        }),
    )?;
    write_rows(&dir.join(MOVES_FILE), &traj.moves)
}

/// Inverse of [`write_trajectory`]; returns the header alongside.
pub fn read_trajectory(dir: &Path) -> Result<(RunHeader, Trajectory), IoError> {
    let p = dir.join(RUN_FILE);
    let text = fs::read_to_string(&p).map_err(|e| io_err(&p, e))?;
    let header: RunHeader = serde_json::from_str(&text).map_err(|e| IoError::Format { row: 0, message: e.to_string() })?;
    let snaps = read_snapshots(&dir.join(SNAPSHOT_FILE))?;
    let diags: Vec<DiagnosticsRow> = read_rows(&dir.join(DIAGNOSTICS_FILE))?;
    let moves: Vec<MoveRecord> = read_rows(&dir.join(MOVES_FILE))?;
    let snapshots: Vec<Snapshot> =
        snaps.into_iter().map(|r| Snapshot { epoch: r.epoch, t: r.record.t, network: r.network }).collect();
    for (i, d) in diags.iter().enumerate() {
        if d.snapshot.is_some_and(|s| s >= snapshots.len()) {
            return Err(IoError::Format { row: i + 1, message: format!("snapshot index {:?} out of range", d.snapshot) });
        }
    }
    let entries = diags
        .into_iter()
        .map(|d| TrajectoryEntry { epoch: d.epoch, t: d.record.t, dt: d.dt, snapshot: d.snapshot, record: d.record })
        .collect();
    let traj = Trajectory {
        config: header.config.clone(),
        family: header.family.clone(),
        entries,
        snapshots,
        stationary_at: header.stationary_at,
        moves,
    };
    Ok((header, traj))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub run: String,
    pub scenario: String,
    pub mode: String,
    pub eps: f64,
    pub dt: f64,
    pub j: u64,
    pub t_end: f64,
    pub epochs: usize,
    pub snapshots: usize,
    pub initial_length: f64,
    pub final_length: f64,
    pub cumulative_dissipation: f64,
    pub stationary_at: Option<f64>,
    pub max_boundary_drift: f64,
    pub min_hull_margin: f64,
}

impl SummaryRow {
    pub fn new(run: &str, scenario: &str, traj: &Trajectory) -> Self {
        let first = traj.entries.first().map(|e| &e.record);
        let last = traj.entries.last().map(|e| &e.record);
        let c = &traj.config;
        SummaryRow {
            run: run.into(),
            scenario: scenario.into(),
            mode: format!("{:?}", c.mode).to_lowercase(),
            eps: c.eps,
            dt: c.dt,
            j: c.j,
            t_end: c.t_end,
            epochs: traj.entries.len().saturating_sub(1),
            snapshots: traj.snapshots.len(),
            initial_length: first.map_or(0.0, |r| r.length),
            final_length: last.map_or(0.0, |r| r.length),
            cumulative_dissipation: dissipation_report(traj).cumulative_dissipation,
            stationary_at: traj.stationary_at,
            max_boundary_drift: traj.records().map(|r| r.boundary_drift).fold(0.0, f64::max),
            min_hull_margin: traj.records().map(|r| r.hull_margin).fold(f64::INFINITY, f64::min),
        }
    }
}

/// Append one row to a CSV summary, writing the header when the file is new or empty.
pub fn append_summary(path: &Path, row: &SummaryRow) -> Result<(), IoError> {
    let fresh = fs::metadata(path).map_or(true, |m| m.len() == 0);
    let f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| io_err(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(f);
    w.serialize(row).map_err(|e| IoError::Format { row: 0, message: e.to_string() })?;
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>, IoError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| IoError::Format { row: 0, message: e.to_string() })?;
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| IoError::Format { row: i + 1, message: e.to_string() }))
        .collect()
}
