//! The three operations of one epoch: area-reducing deformation, retraction onto the
//! shrunken domain, and the damped smoothed-curvature motion.

use std::collections::HashSet;

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cutoff::DampingField;
use crate::geometry::{cross, v2, RegionIndex, RegionSystem, Segment, Vec2};
use crate::kernel::SmoothingKernel;
use crate::partition::{Edge, LabeledNetwork, SurgeryEvent, Vertex, VertexKind};
use crate::varifold::{CurvatureField, VarifoldSlice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MoveKind {
    EdgeCollapse,
    VertexMerge,
    JunctionSplit,
    ChainStraighten,
    Retract,
    Flow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub kind: MoveKind,
    pub length_delta: f64,
    pub max_displacement: f64,
    pub area_deltas: Vec<f64>,
    pub accepted: bool,
}

/// Admissibility budget of a reduction move.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionCaps {
    pub disp: f64,
    pub area: f64,
    /// Turning angle (radians) above which a polyline node counts as a kink to smooth.
    #[serde(default)]
    pub min_turn: f64,
}

impl ReductionCaps {
    /// `disp = 1/j²`, `area = 1/j`, every kink eligible.
    pub fn paper(j: u64) -> Self {
        let jf = j as f64;
        ReductionCaps { disp: 1.0 / (jf * jf), area: 1.0 / jf, min_turn: 0.0 }
    }

    /// Caps tied to the mesh and kernel scales. Kinks are smoothed only when they are sharper
    /// than what the smoothed curvature resolves, a turn of about `0.4 h_max / ε` per node.
    pub fn desk(h_max: f64, eps: f64) -> Self {
        ReductionCaps { disp: h_max / 5.0, area: h_max / 5.0, min_turn: 0.4 * h_max / eps }
    }
}

/// Length reduction achieved by one greedy pass; an upper bound on the true excess.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcessEstimate {
    pub achieved_reduction: f64,
    pub region: RegionIndex,
    /// Depth of the region the moves were restricted to.
    pub depth: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("step size: network stayed invalid after {attempts} attempts (last dt = {dt:e}): {detail}")]
    StepSize { dt: f64, attempts: usize, detail: String },
    #[error("retraction left an ambiguous labeling: {0}")]
    Ambiguity(String),
    #[error("structural error: {0}")]
    Structural(String),
}

const MAX_TRIALS: usize = 10_000;

fn area_deltas(before: &[f64], after: &LabeledNetwork) -> Vec<f64> {
    after.phase_areas_unchecked().areas.iter().zip(before).map(|(a, b)| a - b).collect()
}

fn key(points: &[Vec2]) -> Vec<u64> {
    points.iter().flat_map(|p| [p.x.to_bits(), p.y.to_bits()]).collect()
}

struct Reducer<'a> {
    rs: &'a RegionSystem,
    damping: DampingField,
    caps: ReductionCaps,
    depth: f64,
    log: Vec<MoveRecord>,
    rejected: HashSet<Vec<u64>>,
    trials: usize,
}

impl Reducer<'_> {
    fn inside(&self, p: Vec2) -> bool {
        self.rs.domain.signed_distance(p) >= self.depth
    }

    /// Commit `cand` if it is a valid, admissible, strictly length-reducing move.
    fn trial(&mut self, net: &mut LabeledNetwork, cand: LabeledNetwork, kind: MoveKind, disp: f64, sig: Vec<u64>) -> bool {
        self.trials += 1;
        let before_len = net.length();
        let before = net.phase_areas_unchecked().areas;
        let dl = cand.length() - before_len;
        let da = area_deltas(&before, &cand);
        let ok = dl < 0.0
            && disp <= self.caps.disp
            && da.iter().all(|d| d.abs() <= self.caps.area)
            && cand.validate().is_empty();
        self.log.push(MoveRecord { kind, length_delta: dl, max_displacement: disp, area_deltas: da, accepted: ok });
        if ok {
            *net = cand;
        } else {
            self.rejected.insert(sig);
        }
        ok
    }

    fn exhausted(&self) -> bool {
        self.trials >= MAX_TRIALS
    }
}

/// Move vertex `drop` onto `keep`, placing the merged vertex at `target`.
fn merge_vertices(net: &LabeledNetwork, keep: usize, drop: usize, target: Vec2) -> LabeledNetwork {
    let mut out = net.clone();
    out.vertices[keep].pos = target;
    for e in &mut out.edges {
        if e.a == drop {
            e.a = keep;
        }
        if e.b == drop {
            e.b = keep;
        }
    }
    out.compact();
    out.refresh_kinds();
    out.merge_degree_two();
    out
}

fn collapse_pass(r: &mut Reducer, net: &mut LabeledNetwork) -> bool {
    for ei in 0..net.edges.len() {
        let e = &net.edges[ei];
        if e.a == e.b || net.edge_length(ei) >= r.caps.disp {
            continue;
        }
        let pts = net.polyline(ei);
        let kinds = [net.vertices[e.a].kind, net.vertices[e.b].kind];
        if kinds.contains(&VertexKind::Anchor) || !pts.iter().all(|&p| r.inside(p)) {
            continue;
        }
        let sig = key(&pts);
        if r.rejected.contains(&sig) {
            continue;
        }
        let target = (pts[0] + pts[pts.len() - 1]) * 0.5;
        let disp = pts.iter().map(|p| (p - target).norm()).fold(0.0, f64::max);
        let (a, b) = (e.a, e.b);
        let mut cand = net.clone();
        cand.edges.remove(ei);
        let cand = merge_vertices(&cand, a, b, target);
        if r.trial(net, cand, MoveKind::EdgeCollapse, disp, sig) {
            return true;
        }
    }
    false
}

fn merge_pass(r: &mut Reducer, net: &mut LabeledNetwork) -> bool {
    let n = net.vertices.len();
    for u in 0..n {
        for w in u + 1..n {
            let (pu, pw) = (net.vertices[u].pos, net.vertices[w].pos);
            if (pu - pw).norm() >= r.caps.disp
                || net.vertices[u].kind == VertexKind::Anchor
                || net.vertices[w].kind == VertexKind::Anchor
                || !r.inside(pu)
                || !r.inside(pw)
            {
                continue;
            }
            if net.edges.iter().any(|e| (e.a == u && e.b == w) || (e.a == w && e.b == u)) {
                continue;
            }
            let sig = key(&[pu, pw]);
            if r.rejected.contains(&sig) {
                continue;
            }
            let target = (pu + pw) * 0.5;
            let cand = merge_vertices(net, u, w, target);
            if r.trial(net, cand, MoveKind::VertexMerge, (pu - pw).norm() * 0.5, sig) {
                return true;
            }
        }
    }
    false
}

/// Local two-point Steiner problem: group `a` attaches to `p`, group `b` to `q`, and `p–q` is a new edge.
struct SplitCost {
    center: Vec2,
    radius: f64,
    a: Vec<Vec2>,
    b: Vec<Vec2>,
}

impl SplitCost {
    fn project(&self, p: Vec2) -> (Vec2, f64) {
        let d = p - self.center;
        let n = d.norm();
        if n <= self.radius {
            (p, 0.0)
        } else {
            (self.center + d * (self.radius / n), n - self.radius)
        }
    }

    fn length(&self, p: Vec2, q: Vec2) -> f64 {
        self.a.iter().map(|x| (x - p).norm()).sum::<f64>() + self.b.iter().map(|x| (x - q).norm()).sum::<f64>() + (p - q).norm()
    }
}

impl CostFunction for SplitCost {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> Result<f64, argmin::core::Error> {
        let (p, ep) = self.project(v2(x[0], x[1]));
        let (q, eq) = self.project(v2(x[2], x[3]));
        Ok(self.length(p, q) + 10.0 * (ep + eq))
    }
}

/// Best positions for the two new junctions, or `None` if the optimizer fails.
pub fn steiner_split(center: Vec2, radius: f64, a: &[Vec2], b: &[Vec2]) -> Option<(Vec2, Vec2, f64)> {
    let cost = SplitCost { center, radius: radius * (1.0 - 1e-9), a: a.to_vec(), b: b.to_vec() };
    let mean_dir = |pts: &[Vec2]| {
        let s: Vec2 = pts.iter().map(|x| (x - center).normalize()).sum();
        if s.norm() > 1e-12 {
            s.normalize()
        } else {
            Vec2::zeros()
        }
    };
    let (da, db) = (mean_dir(a), mean_dir(b));
    let p0 = center + da * (0.3 * radius);
    let q0 = center + db * (0.3 * radius);
    let base = vec![p0.x, p0.y, q0.x, q0.y];
    let mut simplex = vec![base.clone()];
    for i in 0..4 {
        let mut s = base.clone();
        s[i] += 0.2 * radius;
        simplex.push(s);
    }
    let solver = NelderMead::new(simplex).with_sd_tolerance(1e-10 * radius.max(1e-300)).ok()?;
    let res = Executor::new(cost, solver).configure(|s| s.max_iters(4000)).run().ok()?;
    let best = res.state().get_best_param()?.clone();
    let cost = res.problem.problem.as_ref()?;
    let (p, _) = cost.project(v2(best[0], best[1]));
    let (q, _) = cost.project(v2(best[2], best[3]));
    Some((p, q, cost.length(p, q)))
}

fn split_pass(r: &mut Reducer, net: &mut LabeledNetwork) -> bool {
    for v in 0..net.vertices.len() {
        let d = net.degree(v);
        let c = net.vertices[v].pos;
        if d < 4 || net.vertices[v].kind == VertexKind::Anchor || !r.inside(c) {
            continue;
        }
        let ends = net.sorted_ends(v, v2(1.0, 0.0));
        let nbr: Vec<Vec2> = ends.iter().map(|e| c + e.dir).collect();
        let current: f64 = ends.iter().map(|e| e.dir.norm()).sum();
        let mut best: Option<(f64, usize, usize, Vec2, Vec2)> = None;
        for s in 2..=d - 2 {
            for i in 0..d {
                // each partition appears twice (a group and its complement); keep one
                if s * 2 == d && i >= d / 2 {
                    continue;
                }
                let in_group = |k: usize| (k + d - i) % d < s;
                let a: Vec<Vec2> = (0..d).filter(|&k| in_group(k)).map(|k| nbr[k]).collect();
                let b: Vec<Vec2> = (0..d).filter(|&k| !in_group(k)).map(|k| nbr[k]).collect();
                let Some((p, q, len)) = steiner_split(c, r.caps.disp, &a, &b) else {
                    continue;
                };
                if len < current && (p - q).norm() > 1e-12 * r.caps.disp && best.as_ref().is_none_or(|bb| len < bb.0) {
                    best = Some((len, i, s, p, q));
                }
            }
        }
        let Some((_, i, s, p, q)) = best else {
            continue;
        };
        if !r.inside(p) || !r.inside(q) {
            continue;
        }
        let mut sig = key(&[c, p, q]);
        sig.push(i as u64);
        if r.rejected.contains(&sig) {
            continue;
        }
        let mut cand = net.clone();
        let pi = cand.vertices.len();
        cand.vertices.push(Vertex { pos: p, kind: VertexKind::Junction });
        cand.vertices[v].pos = q;
        for k in 0..s {
            let end = ends[(i + k) % d];
            let e = &mut cand.edges[end.edge];
            if end.at_start {
                e.a = pi;
            } else {
                e.b = pi;
            }
        }
        let first = ends[i];
        let last = ends[(i + s - 1) % d];
        let right = first.cw_label(&net.edges[first.edge]);
        let left = last.ccw_label(&net.edges[last.edge]);
        cand.edges.push(Edge { a: v, b: pi, interior: vec![], left, right });
        cand.refresh_kinds();
        let disp = (p - c).norm().max((q - c).norm());
        if r.trial(net, cand, MoveKind::JunctionSplit, disp, sig) {
            return true;
        }
    }
    false
}

fn turn_angle(a: Vec2, p: Vec2, b: Vec2) -> f64 {
    let (u, w) = (p - a, b - p);
    cross(u, w).atan2(u.dot(&w)).abs()
}

/// Turning angles below this are treated as straight.
const STRAIGHT_TURN: f64 = 1e-9;

/// Pull polyline nodes towards the midpoint of their neighbors, by at most the displacement cap.
/// Eligible are nodes turning by more than `min_turn`, and every bent node where `η_j < 1/2`,
/// since the damped motion cannot straighten the network there. Tried first as one
/// simultaneous deformation, then node by node.
fn kink_pass(r: &mut Reducer, net: &mut LabeledNetwork) -> bool {
    let cap = r.caps.disp;
    let mut moves: Vec<(usize, usize, Vec2, Vec2)> = vec![];
    for (ei, e) in net.edges.iter().enumerate() {
        let pts = net.polyline(ei);
        for i in 1..pts.len() - 1 {
            let (a, p, b) = (pts[i - 1], pts[i], pts[i + 1]);
            let turn = turn_angle(a, p, b);
            if turn <= STRAIGHT_TURN || !r.inside(p) {
                continue;
            }
            if turn <= r.caps.min_turn && r.damping.eta(p) >= 0.5 {
                continue;
            }
            let d = (a + b) * 0.5 - p;
            let n = d.norm();
            let q = if n > cap { p + d * (cap / n) } else { p + d };
            if r.inside(q) {
                moves.push((ei, i - 1, p, q));
            }
        }
        debug_assert!(e.interior.len() + 2 == pts.len());
    }
    if moves.is_empty() {
        return false;
    }
    let apply = |net: &LabeledNetwork, ms: &[(usize, usize, Vec2, Vec2)]| {
        let mut cand = net.clone();
        for &(ei, k, _, q) in ms {
            cand.edges[ei].interior[k] = q;
        }
        cand
    };
    let disp = |ms: &[(usize, usize, Vec2, Vec2)]| ms.iter().map(|m| (m.3 - m.2).norm()).fold(0.0, f64::max);
    let sig = |ms: &[(usize, usize, Vec2, Vec2)]| {
        let mut k = key(&ms.iter().map(|m| m.2).collect::<Vec<_>>());
        k.push(u64::MAX);
        k
    };
    let all = sig(&moves);
    if !r.rejected.contains(&all) && r.trial(net, apply(net, &moves), MoveKind::ChainStraighten, disp(&moves), all) {
        return true;
    }
    let mut any = false;
    for m in moves {
        if r.exhausted() {
            break;
        }
        let one = [m];
        let s = sig(&one);
        if !r.rejected.contains(&s) {
            any |= r.trial(net, apply(net, &one), MoveKind::ChainStraighten, disp(&one), s);
        }
    }
    any
}

fn straighten_pass(r: &mut Reducer, net: &mut LabeledNetwork) -> bool {
    let cap = r.caps.disp;
    for ei in 0..net.edges.len() {
        let pts = net.polyline(ei);
        let m = pts.len();
        let mut i = 0;
        while i + 2 < m {
            let mut best_k = None;
            let mut k = i + 2;
            while k < m && (pts[k] - pts[i]).norm() <= 2.0 * cap {
                let center = (pts[i] + pts[k]) * 0.5;
                if pts[i..=k].iter().all(|p| (p - center).norm() <= cap) {
                    best_k = Some(k);
                }
                k += 1;
            }
            let Some(k) = best_k else {
                i += 1;
                continue;
            };
            let chord = Segment::new(pts[i], pts[k]);
            let chain: f64 = pts[i..=k].windows(2).map(|w| (w[1] - w[0]).norm()).sum();
            let moved = &pts[i + 1..k];
            let sig = key(&pts[i..=k]);
            if chain - chord.length() <= 1e-15 * chain
                || !moved.iter().all(|&p| r.inside(p) && r.inside(chord.closest_point(p)))
                || r.rejected.contains(&sig)
            {
                i += 1;
                continue;
            }
            let disp = moved.iter().map(|&p| chord.distance(p)).fold(0.0, f64::max);
            let mut cand = net.clone();
            let mut inner: Vec<Vec2> = pts[1..=i].to_vec();
            inner.extend_from_slice(&pts[k..m - 1]);
            cand.edges[ei].interior = inner;
            if r.trial(net, cand, MoveKind::ChainStraighten, disp, sig) {
                return true;
            }
            i += 1;
        }
    }
    false
}

/// One greedy pass of the move catalog inside `D_j`: edge collapse, vertex merge,
/// junction split and chain straightening, each accepted only if it keeps the network valid,
/// respects the caps and strictly reduces length.
pub fn reduce(
    net: &LabeledNetwork,
    rs: &RegionSystem,
    idx: RegionIndex,
    caps: ReductionCaps,
) -> Result<(LabeledNetwork, ExcessEstimate, Vec<MoveRecord>), StepError> {
    if !(caps.disp > 0.0 && caps.area > 0.0) {
        return Err(StepError::Structural(format!("caps must be positive, got {caps:?}")));
    }
    let mut out = net.clone();
    let mut r = Reducer { rs, damping: DampingField::from_regions(rs), caps, depth: rs.dj_depth(), log: vec![], rejected: HashSet::new(), trials: 0 };
    let passes: [fn(&mut Reducer, &mut LabeledNetwork) -> bool; 4] = [collapse_pass, merge_pass, split_pass, straighten_pass];
    for pass in passes {
        while !r.exhausted() && pass(&mut r, &mut out) {}
    }
    // one smoothing deformation per call keeps the epoch's displacement within the cap
    kink_pass(&mut r, &mut out);
    if !out.validate().is_empty() {
        return Err(StepError::Structural("reduction committed an invalid network".into()));
    }
    let reduction = out.length() - net.length();
    Ok((out, ExcessEstimate { achieved_reduction: reduction.min(0.0), region: idx, depth: r.depth }, r.log))
}

/// Depth tolerance below which a point counts as already on the level set.
const LEVEL_TOL: f64 = 1e-12;

/// Project every point outside `D_{j,k−1} ∪ K_j` onto `∂D_{j,k−1}`.
pub fn retract(net: &LabeledNetwork, rs: &RegionSystem, idx: RegionIndex) -> Result<(LabeledNetwork, Vec<MoveRecord>), StepError> {
    let depth = rs.djk_depth(idx.k.saturating_sub(1));
    let kj = (rs.j as f64).powf(-0.25);
    let mut out = net.clone();
    let mut disp: f64 = 0.0;
    let mut moved = 0usize;
    let mut apply = |p: &mut Vec2| {
        if rs.domain.signed_distance(*p) < depth - LEVEL_TOL && rs.anchor_distance(*p) >= kj {
            let q = rs.domain.project_to_level(*p, depth);
            disp = disp.max((q - *p).norm());
            *p = q;
            moved += 1;
        }
    };
    for v in &mut out.vertices {
        apply(&mut v.pos);
    }
    for e in &mut out.edges {
        for p in &mut e.interior {
            apply(p);
        }
    }
    if moved == 0 {
        return Ok((out, vec![]));
    }
    let before = net.phase_areas_unchecked().areas;
    if !out.validate().is_empty() {
        out.repair(0.0);
        let v = out.validate();
        if !v.is_empty() {
            return Err(StepError::Ambiguity(v[0].to_string()));
        }
    }
    let rec = MoveRecord {
        kind: MoveKind::Retract,
        length_delta: out.length() - net.length(),
        max_displacement: disp,
        area_deltas: area_deltas(&before, &out),
        accepted: true,
    };
    Ok((out, vec![rec]))
}

/// Remeshing and surgery parameters for the motion step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionOptions {
    pub h_max: f64,
    /// Faces below this area are merged into a neighbor when the moved network is invalid.
    pub min_area: f64,
    pub max_halvings: usize,
}

impl MotionOptions {
    pub fn new(h_max: f64) -> Self {
        MotionOptions { h_max, min_area: h_max * h_max, max_halvings: 4 }
    }
}

#[derive(Debug, Clone)]
pub struct FlowOutcome {
    pub network: LabeledNetwork,
    pub records: Vec<MoveRecord>,
    pub surgery: Vec<SurgeryEvent>,
    /// Time step actually taken after halvings.
    pub dt: f64,
    /// Largest `|η h_ε|` over the moved points.
    pub max_speed: f64,
    /// `|η h_ε|` at each point before the move, in [`LabeledNetwork::points`] order.
    pub speeds: Vec<f64>,
}

/// Velocity `η_j h_ε` at every network point, in the order of [`LabeledNetwork::points`].
pub fn velocities(net: &LabeledNetwork, field: &CurvatureField, damping: &DampingField) -> Vec<Vec2> {
    let pts = net.points();
    let h = field.h_many(&pts);
    pts.iter().zip(h).map(|(&p, h)| h * damping.eta(p)).collect()
}

fn displaced(net: &LabeledNetwork, vel: &[Vec2], dt: f64) -> LabeledNetwork {
    let mut out = net.clone();
    let mut it = vel.iter();
    for v in &mut out.vertices {
        v.pos += it.next().unwrap() * dt;
    }
    for e in &mut out.edges {
        for p in &mut e.interior {
            *p += it.next().unwrap() * dt;
        }
    }
    out
}

/// Move every point by `η_j(x) h_ε(x) dt`, remesh and validate; halve `dt` on failure.
pub fn flow_step(
    net: &LabeledNetwork,
    slice: &VarifoldSlice,
    kernel: &SmoothingKernel,
    damping: &DampingField,
    dt: f64,
    opts: MotionOptions,
) -> Result<FlowOutcome, StepError> {
    let field = CurvatureField::new(slice, kernel);
    flow_step_with_field(net, &field, damping, dt, opts)
}

pub fn flow_step_with_field(
    net: &LabeledNetwork,
    field: &CurvatureField,
    damping: &DampingField,
    dt: f64,
    opts: MotionOptions,
) -> Result<FlowOutcome, StepError> {
    if !(dt > 0.0) {
        return Err(StepError::Structural(format!("dt must be positive, got {dt}")));
    }
    let vel = velocities(net, field, damping);
    let speeds: Vec<f64> = vel.iter().map(|v| v.norm()).collect();
    let max_speed = speeds.iter().copied().fold(0.0, f64::max);
    let before = net.phase_areas_unchecked().areas;
    let mut records = vec![];
    let mut step = dt;
    let mut detail = String::new();
    for _ in 0..=opts.max_halvings {
        let mut moved = displaced(net, &vel, step).coarsen(opts.h_max / 3.0).resample(opts.h_max);
        let mut surgery = vec![];
        let mut violations = moved.validate();
        if !violations.is_empty() {
            surgery = moved.repair(opts.min_area);
            violations = moved.validate();
        }
        let rec = MoveRecord {
            kind: MoveKind::Flow,
            length_delta: moved.length() - net.length(),
            max_displacement: max_speed * step,
            area_deltas: area_deltas(&before, &moved),
            accepted: violations.is_empty(),
        };
        records.push(rec);
        if violations.is_empty() {
            return Ok(FlowOutcome { network: moved, records, surgery, dt: step, max_speed, speeds });
        }
        detail = violations[0].to_string();
        step *= 0.5;
    }
    Err(StepError::StepSize { dt: step * 2.0, attempts: opts.max_halvings + 1, detail })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Paper,
    Desk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionReport {
    pub mode: Mode,
    /// The displacement bound in force (`2ε^{κ−2}` in paper mode, the configured cap otherwise).
    pub bound: f64,
    /// Natural log of the bound, meaningful even when the bound underflows.
    pub ln_bound: f64,
    pub max_displacement: f64,
    pub exceedances: usize,
    /// Counts per decade `[10^k, 10^{k+1})` of nonzero displacements, as `(k, count)`.
    pub histogram: Vec<(i32, usize)>,
    pub pass: bool,
}

/// Check recorded flow displacements against the motion bound.
pub fn motion_bound_check(records: &[MoveRecord], eps: f64, kappa: u32, mode: Mode, desk_cap: f64) -> MotionReport {
    let ln_bound = match mode {
        Mode::Paper => 2f64.ln() + (kappa as f64 - 2.0) * eps.ln(),
        Mode::Desk => desk_cap.ln(),
    };
    let mut exceedances = 0;
    let mut max_displacement: f64 = 0.0;
    let mut hist: std::collections::BTreeMap<i32, usize> = Default::default();
    for r in records.iter().filter(|r| r.kind == MoveKind::Flow && r.accepted) {
        let d = r.max_displacement;
        max_displacement = max_displacement.max(d);
        if d > 0.0 {
            *hist.entry(d.log10().floor() as i32).or_default() += 1;
            if d.ln() > ln_bound {
                exceedances += 1;
            }
        }
    }
    MotionReport {
        mode,
        bound: ln_bound.exp(),
        ln_bound,
        max_displacement,
        exceedances,
        histogram: hist.into_iter().collect(),
        pass: exceedances == 0,
    }
}
