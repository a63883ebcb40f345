//! Epoch scheduler: parameter checks, the reduce → retract → flow loop, trajectory
//! recording and stationarity detection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cutoff::DampingField;
use crate::diagnostics::{DiagnosticsRecord, EpochCounts, Probe, TestFunctionFamily};
use crate::geometry::{RegionIndex, RegionSystem};
use crate::kernel::SmoothingKernel;
use crate::partition::LabeledNetwork;
use crate::steps::{flow_step_with_field, reduce, retract, MotionOptions, MoveRecord, ReductionCaps, StepError};
pub use crate::steps::Mode;
use crate::varifold::{slice, CurvatureField};

/// Ambient dimension of the curve networks (`n + 1 = 2`).
pub const CURVE_DIM: u32 = 1;

/// `κ = 3n + 20`.
pub fn default_kappa(n: u32) -> u32 {
    3 * n + 20
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{field} {message}")]
    Semantic { field: &'static str, message: String },
    #[error("paper-mode parameters rejected: {0}")]
    Paper(String),
}

fn semantic(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Semantic { field, message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub mode: Mode,
    pub j: u64,
    pub eps: f64,
    pub dt: f64,
    pub kappa: u32,
    pub t_end: f64,
    pub h_max: f64,
    pub h_quad: f64,
    pub caps: ReductionCaps,
    /// Desk-mode per-step displacement above which points are flagged.
    pub motion_cap: f64,
    /// Epochs between stored network snapshots.
    pub snapshot_every: usize,
    pub stationarity_tol: f64,
    pub stationarity_window: usize,
    /// Stop at the first detected stationarity.
    pub stop_when_stationary: bool,
    /// Amplitude, in units of `h_max`, of a random displacement of the initial interior points.
    pub jitter: f64,
    pub seed: u64,
}

/// Target for the worst-case anchor drift used to pick `j` in desk mode.
pub const DESK_DRIFT_TARGET: f64 = 1e-6;

/// Smallest `j` with `2ε^{−2} exp(−j^{1/8}) t_end ≤ drift`.
pub fn desk_j(eps: f64, t_end: f64, drift: f64) -> u64 {
    let x = (2.0 * t_end.max(1e-300) / (eps * eps * drift)).ln().max(1.0);
    let j = x.powi(8).ceil();
    if j >= u64::MAX as f64 {
        u64::MAX
    } else {
        j as u64
    }
}

impl FlowConfig {
    /// Desk-mode configuration with the default resolution tied to `ε`.
    pub fn desk(eps: f64, dt: f64, t_end: f64) -> Self {
        let h_max = eps / 4.0;
        FlowConfig {
            mode: Mode::Desk,
            j: desk_j(eps, t_end, DESK_DRIFT_TARGET),
            eps,
            dt,
            kappa: default_kappa(CURVE_DIM),
            t_end,
            h_max,
            h_quad: h_max,
            caps: ReductionCaps::desk(h_max, eps),
            motion_cap: eps / 10.0,
            snapshot_every: 10,
            stationarity_tol: 1e-3,
            stationarity_window: 50,
            stop_when_stationary: false,
            jitter: 0.0,
            seed: 0,
        }
    }

    /// Semantic checks that apply in every mode.
    pub fn check(&self) -> Result<(), ConfigError> {
        if !(self.dt > 0.0) {
            return Err(semantic("dt", "must be positive"));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(semantic("eps", "must lie in (0, 1)"));
        }
        if self.j == 0 {
            return Err(semantic("j", "must be at least 1"));
        }
        if !(self.t_end > 0.0) {
            return Err(semantic("t_end", "must be positive"));
        }
        for (name, v) in [("h_max", self.h_max), ("h_quad", self.h_quad), ("motion_cap", self.motion_cap)] {
            if !(v > 0.0) {
                return Err(semantic(name, "must be positive"));
            }
        }
        if !(self.caps.disp > 0.0 && self.caps.area > 0.0) {
            return Err(semantic("caps", "must be positive"));
        }
        if self.snapshot_every == 0 {
            return Err(semantic("snapshot_every", "must be at least 1"));
        }
        if self.stationarity_window < 2 {
            return Err(semantic("stationarity_window", "must be at least 2"));
        }
        if !(0.0..0.5).contains(&self.jitter) {
            return Err(semantic("jitter", "must lie in [0, 0.5)"));
        }
        if !(self.stationarity_tol > 0.0) {
            return Err(semantic("stationarity_tol", "must be positive"));
        }
        Ok(())
    }
}

/// One inequality of the parameter conditions, compared in log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    /// `ln(lhs)` and `ln(rhs)`; `None` when the constant is not known numerically.
    pub ln_lhs: Option<f64>,
    pub ln_rhs: Option<f64>,
    pub pass: Option<bool>,
}

impl Condition {
    fn le(name: &str, ln_lhs: f64, ln_rhs: f64) -> Self {
        Condition { name: name.into(), ln_lhs: Some(ln_lhs), ln_rhs: Some(ln_rhs), pass: Some(ln_lhs <= ln_rhs) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamReport {
    pub mode: Mode,
    pub conditions: Vec<Condition>,
}

impl ParamReport {
    pub fn failed(&self) -> Vec<&Condition> {
        self.conditions.iter().filter(|c| c.pass == Some(false)).collect()
    }
}

/// Time step `2^{−p}` in `(ε^κ/2, ε^κ]`, as `(p, dt)`; `dt` may underflow to 0 for large `p`.
pub fn paper_time_step(eps: f64, kappa: u32) -> (i64, f64) {
    let p = (-(kappa as f64) * eps.log2()).ceil() as i64;
    (p, 2f64.powi(-(p as i32)))
}

/// Evaluate the parameter conditions; in paper mode any failure is an error.
pub fn validate_params(cfg: &FlowConfig, n: u32) -> Result<ParamReport, ConfigError> {
    let _ = n;
    let j = cfg.j as f64;
    let le = cfg.eps.ln();
    let k = cfg.kappa as f64;
    let mut conditions = vec![
        Condition { name: "eps < eps_*(n, U, M)".into(), ln_lhs: None, ln_rhs: None, pass: None },
        Condition::le("eps^(1/6) <= 1/(2j)", le / 6.0, -(2.0 * j).ln()),
        Condition::le("2 eps^(kappa-2) <= j^(-10)", 2f64.ln() + (k - 2.0) * le, -10.0 * j.ln()),
        Condition::le(
            "2 j eps^(-kappa) exp(-j^(1/8)) <= 1/(4 j^(1/4))",
            2f64.ln() + j.ln() - k * le - j.powf(0.125),
            -(4f64.ln() + 0.25 * j.ln()),
        ),
    ];
    // the time step must be a power of two in (eps^kappa/2, eps^kappa]
    let ln_dt = cfg.dt.ln();
    let p = -cfg.dt.log2();
    let in_bracket = ln_dt <= k * le && ln_dt > k * le - 2f64.ln() && (p - p.round()).abs() < 1e-9;
    conditions.push(Condition {
        name: "dt = 2^-p in (eps^kappa/2, eps^kappa]".into(),
        ln_lhs: Some(ln_dt),
        ln_rhs: Some(k * le),
        pass: Some(in_bracket),
    });
    let report = ParamReport { mode: cfg.mode, conditions };
    if cfg.mode == Mode::Paper {
        let failed = report.failed();
        if !failed.is_empty() {
            let names: Vec<&str> = failed.iter().map(|c| c.name.as_str()).collect();
            return Err(ConfigError::Paper(names.join("; ")));
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub epoch: usize,
    pub t: f64,
    pub network: LabeledNetwork,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEntry {
    pub epoch: usize,
    pub t: f64,
    /// Time step taken from this state (0 for the final state).
    pub dt: f64,
    /// Index into [`Trajectory::snapshots`] when the network was stored.
    pub snapshot: Option<usize>,
    pub record: DiagnosticsRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub config: FlowConfig,
    pub family: TestFunctionFamily,
    pub entries: Vec<TrajectoryEntry>,
    pub snapshots: Vec<Snapshot>,
    pub stationary_at: Option<f64>,
    pub moves: Vec<MoveRecord>,
}

impl Trajectory {
    pub fn final_network(&self) -> Option<&LabeledNetwork> {
        self.snapshots.last().map(|s| &s.network)
    }

    pub fn records(&self) -> impl Iterator<Item = &DiagnosticsRecord> {
        self.entries.iter().map(|e| &e.record)
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("initial network is invalid: {0}")]
    InvalidInitial(String),
    #[error("epoch {epoch} failed: {error}")]
    Step { epoch: usize, error: StepError, partial: Box<Trajectory> },
}

/// First time at which the last `window` records all have `max|η h_ε · n| < tol` and the
/// relative length change across the window is below `tol`.
pub fn detect_stationarity(records: &[DiagnosticsRecord], window: usize, tol: f64) -> Option<f64> {
    assert!(window >= 2);
    (window - 1..records.len()).find_map(|i| stationary_window(&records[i + 1 - window..=i], tol).then(|| records[i].t))
}

fn stationary_window(w: &[DiagnosticsRecord], tol: f64) -> bool {
    let (l0, l1) = (w[0].length, w[w.len() - 1].length);
    let rel = if l0 > 0.0 { (l1 - l0).abs() / l0 } else { (l1 - l0).abs() };
    rel < tol && w.iter().all(|r| r.max_normal_speed < tol)
}

/// Anchors that do not separate two distinct phases along the boundary.
pub fn a4_violations(net: &LabeledNetwork) -> Vec<usize> {
    net.anchors().into_iter().filter(|&v| net.anchor_labels(v).is_none_or(|(a, b)| a == b)).collect()
}

/// Displace every polyline interior point uniformly within a disk of radius `amp`.
pub fn jittered(net: &LabeledNetwork, amp: f64, seed: u64) -> LabeledNetwork {
    let mut out = net.clone();
    if amp == 0.0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for e in &mut out.edges {
        for p in &mut e.interior {
            let r = amp * rng.gen::<f64>().sqrt();
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            *p += crate::geometry::v2(a.cos(), a.sin()) * r;
        }
    }
    out
}

/// Run the flow from `initial` (resampled to `h_max`) until `t_end` or stationarity.
pub fn run(cfg: &FlowConfig, initial: &LabeledNetwork) -> Result<Trajectory, RunError> {
    cfg.check()?;
    validate_params(cfg, CURVE_DIM)?;
    let net0 = jittered(&initial.resample(cfg.h_max), cfg.jitter * cfg.h_max, cfg.seed);
    if let Some(v) = net0.validate().first() {
        return Err(RunError::InvalidInitial(v.to_string()));
    }
    let bad = a4_violations(&net0);
    if !bad.is_empty() {
        if cfg.mode == Mode::Paper {
            return Err(ConfigError::Paper(format!("anchors {bad:?} touch a single phase on the boundary")).into());
        }
        log::warn!("anchors {bad:?} touch a single phase on the boundary");
    }
    let kernel = SmoothingKernel::new(cfg.eps, 2).map_err(|e| semantic("eps", e.to_string()))?;
    let rs = RegionSystem::new(net0.domain.clone(), cfg.j, &net0.segments());
    let damping = DampingField::from_regions(&rs);
    let family = TestFunctionFamily::standard(&net0.domain, &net0.points(), cfg.j);
    let probe = Probe::new(&net0, kernel, damping, family.clone(), cfg.h_quad);
    let opts = MotionOptions::new(cfg.h_max);

    let mut traj = Trajectory { config: cfg.clone(), family, entries: vec![], snapshots: vec![], stationary_at: None, moves: vec![] };
    let mut net = net0;
    let (rec, mut field, _) = probe.measure(&net, 0.0);
    traj.snapshots.push(Snapshot { epoch: 0, t: 0.0, network: net.clone() });
    traj.entries.push(TrajectoryEntry { epoch: 0, t: 0.0, dt: 0.0, snapshot: Some(0), record: rec });
    let mut t = 0.0;
    let mut epoch = 0usize;
    let t_stop = cfg.t_end * (1.0 - 1e-12);
    while t < t_stop {
        epoch += 1;
        let idx = RegionIndex { j: cfg.j, k: epoch as u64 };
        let fail = |traj: Trajectory, error| RunError::Step { epoch, error, partial: Box::new(traj) };
        let (reduced, _, moves) = match reduce(&net, &rs, idx, cfg.caps) {
            Ok(x) => x,
            Err(e) => return Err(fail(traj, e)),
        };
        let (retracted, rmoves) = match retract(&reduced, &rs, idx) {
            Ok(x) => x,
            Err(e) => return Err(fail(traj, e)),
        };
        let mut counts = EpochCounts {
            reduce_accepted: moves.iter().filter(|m| m.accepted).count(),
            reduce_rejected: moves.iter().filter(|m| !m.accepted).count(),
            retracted: rmoves.len(),
            ..Default::default()
        };
        if retracted != net {
            field = CurvatureField::new(&slice(&retracted, cfg.h_quad), &kernel);
        }
        let step = cfg.dt.min(cfg.t_end - t);
        let out = match flow_step_with_field(&retracted, &field, &probe.damping, step, opts) {
            Ok(x) => x,
            Err(e) => return Err(fail(traj, e)),
        };
        counts.surgery = out.surgery.len();
        counts.flow_retries = out.records.len() - 1;
        counts.exceedances = out.speeds.iter().filter(|&&s| s * out.dt > cfg.motion_cap).count();
        traj.moves.extend(moves);
        traj.moves.extend(rmoves);
        traj.moves.extend(out.records.iter().cloned());
        t += out.dt;
        net = out.network;
        let last = traj.entries.len() - 1;
        traj.entries[last].dt = out.dt;
        let (mut rec, f, _) = probe.measure(&net, t);
        field = f;
        rec.counts = counts;
        let done = t >= t_stop;
        let snapshot = if epoch % cfg.snapshot_every == 0 || done {
            traj.snapshots.push(Snapshot { epoch, t, network: net.clone() });
            Some(traj.snapshots.len() - 1)
        } else {
            None
        };
        traj.entries.push(TrajectoryEntry { epoch, t, dt: 0.0, snapshot, record: rec });
        let n = traj.entries.len();
        let w = cfg.stationarity_window;
        if traj.stationary_at.is_none() && n >= w {
            let recs: Vec<DiagnosticsRecord> = traj.entries[n - w..].iter().map(|e| e.record.clone()).collect();
            if stationary_window(&recs, cfg.stationarity_tol) {
                traj.stationary_at = Some(t);
                log::info!("stationary at t = {t}");
                if cfg.stop_when_stationary {
                    if snapshot.is_none() {
                        traj.snapshots.push(Snapshot { epoch, t, network: net.clone() });
                        traj.entries[n - 1].snapshot = Some(traj.snapshots.len() - 1);
                    }
                    break;
                }
            }
        }
    }
    Ok(traj)
}
