//! Labeled curve networks: an open partition of the domain into phases, stored as
//! polyline edges carrying the phase labels on their two sides.

use std::collections::HashMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{cross, ConvexDomain, Segment, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexKind {
    Interior,
    Junction,
    Anchor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub pos: Vec2,
    pub kind: VertexKind,
}

/// Polyline from vertex `a` to vertex `b`; `left`/`right` are the phases on either side
/// when walking from `a` to `b`. A closed loop has `a == b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    #[serde(default)]
    pub interior: Vec<Vec2>,
    pub left: u32,
    pub right: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledNetwork {
    pub domain: ConvexDomain,
    pub phases: u32,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    /// Label of the whole domain when there are no edges.
    #[serde(default = "one")]
    pub background: u32,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("invalid network: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Reference,
    LabelRange,
    PhaseSeparation,
    AnchorPlacement,
    InteriorPlacement,
    Degree,
    DegenerateSegment,
    Embeddedness,
    SectorConsistency,
    ArcConsistency,
    FaceLabel,
    DegenerateFace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.detail)
    }
}

pub const ANCHOR_TOL: f64 = 1e-9;
pub const DEGENERATE_FACE_AREA: f64 = 1e-12;

/// Phase areas, indexed by `label - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseAreaVector {
    pub areas: Vec<f64>,
}

/// Boundary arc between consecutive anchors, traversed counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryArc {
    pub from: usize,
    pub to: usize,
    pub s0: f64,
    pub s1: f64,
    pub label: u32,
}

/// One end of an edge seen from a vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeEnd {
    pub edge: usize,
    /// True when the edge starts at this vertex.
    pub at_start: bool,
    pub dir: Vec2,
}

impl EdgeEnd {
    /// Label on the counter-clockwise side of the ray leaving the vertex.
    pub fn ccw_label(&self, e: &Edge) -> u32 {
        if self.at_start {
            e.left
        } else {
            e.right
        }
    }

    pub fn cw_label(&self, e: &Edge) -> u32 {
        if self.at_start {
            e.right
        } else {
            e.left
        }
    }
}

/// Surgery performed by [`LabeledNetwork::repair`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurgeryEvent {
    pub kind: String,
    pub area: f64,
    pub label: u32,
}

/// A face boundary cycle; `area > 0` for outer boundaries, `< 0` for holes.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceCycle {
    pub label: u32,
    pub area: f64,
    pub polygon: Vec<Vec2>,
    pub edges: Vec<usize>,
    pub consistent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum PointId {
    Vertex(usize),
    Inner(usize, usize),
}

#[derive(Debug, Clone, Copy)]
struct SegRef {
    edge: usize,
    p: Vec2,
    q: Vec2,
    ip: PointId,
    iq: PointId,
}

impl LabeledNetwork {
    pub fn empty(domain: ConvexDomain, phases: u32, background: u32) -> Self {
        LabeledNetwork { domain, phases, vertices: vec![], edges: vec![], background }
    }

    pub fn polyline(&self, e: usize) -> Vec<Vec2> {
        let ed = &self.edges[e];
        let mut pts = Vec::with_capacity(ed.interior.len() + 2);
        pts.push(self.vertices[ed.a].pos);
        pts.extend_from_slice(&ed.interior);
        pts.push(self.vertices[ed.b].pos);
        pts
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        self.polyline(e).windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    pub fn length(&self) -> f64 {
        (0..self.edges.len()).map(|e| self.edge_length(e)).sum()
    }

    /// All polyline segments.
    pub fn segments(&self) -> Vec<Segment> {
        (0..self.edges.len())
            .flat_map(|e| self.polyline(e).windows(2).map(|w| Segment::new(w[0], w[1])).collect::<Vec<_>>())
            .collect()
    }

    /// Every vertex position and polyline point.
    pub fn points(&self) -> Vec<Vec2> {
        let mut pts: Vec<Vec2> = self.vertices.iter().map(|v| v.pos).collect();
        for e in &self.edges {
            pts.extend_from_slice(&e.interior);
        }
        pts
    }

    pub fn point_count(&self) -> usize {
        self.vertices.len() + self.edges.iter().map(|e| e.interior.len()).sum::<usize>()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().map(|e| (e.a == v) as usize + (e.b == v) as usize).sum()
    }

    pub fn anchors(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&v| self.vertices[v].kind == VertexKind::Anchor).collect()
    }

    pub fn edge_ends(&self, v: usize) -> Vec<EdgeEnd> {
        let mut out = vec![];
        for (i, e) in self.edges.iter().enumerate() {
            if e.a == v {
                let next = e.interior.first().copied().unwrap_or(self.vertices[e.b].pos);
                out.push(EdgeEnd { edge: i, at_start: true, dir: next - self.vertices[v].pos });
            }
            if e.b == v {
                let prev = e.interior.last().copied().unwrap_or(self.vertices[e.a].pos);
                out.push(EdgeEnd { edge: i, at_start: false, dir: prev - self.vertices[v].pos });
            }
        }
        out
    }

    /// Edge ends at `v` sorted counter-clockwise starting just after direction `start`.
    pub fn sorted_ends(&self, v: usize, start: Vec2) -> Vec<EdgeEnd> {
        let base = start.y.atan2(start.x);
        let mut ends = self.edge_ends(v);
        let key = |d: Vec2| {
            let a = (d.y.atan2(d.x) - base).rem_euclid(TAU);
            if a == 0.0 {
                TAU
            } else {
                a
            }
        };
        ends.sort_by(|x, y| key(x.dir).total_cmp(&key(y.dir)));
        ends
    }

    /// Labels of the boundary arcs just behind and just ahead of an anchor (counter-clockwise).
    pub fn anchor_labels(&self, v: usize) -> Option<(u32, u32)> {
        let p = self.vertices[v].pos;
        let t = crate::geometry::perp(self.domain.outward_normal(p).ok()?);
        let ends = self.sorted_ends(v, t);
        let first = ends.first()?;
        let last = ends.last()?;
        Some((last.ccw_label(&self.edges[last.edge]), first.cw_label(&self.edges[first.edge])))
    }

    /// Boundary arcs between consecutive anchors; the label is taken from the arc's start anchor.
    pub fn boundary_arcs(&self) -> Vec<BoundaryArc> {
        let mut anchors: Vec<(f64, usize)> =
            self.anchors().into_iter().map(|v| (self.domain.boundary_param(self.vertices[v].pos), v)).collect();
        anchors.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let period = self.domain.boundary_period();
        let n = anchors.len();
        (0..n)
            .map(|i| {
                let (s0, from) = anchors[i];
                let (mut s1, to) = anchors[(i + 1) % n];
                if s1 <= s0 {
                    s1 += period;
                }
                let label = self.anchor_labels(from).map(|l| l.1).unwrap_or(0);
                BoundaryArc { from, to, s0, s1, label }
            })
            .collect()
    }

    /// Label of the phase touching the domain boundary at parameter `s`.
    pub fn boundary_label_at(&self, s: f64) -> u32 {
        let arcs = self.boundary_arcs();
        if arcs.is_empty() {
            return self.boundary_label();
        }
        let period = self.domain.boundary_period();
        for a in &arcs {
            let mut t = s;
            while t < a.s0 {
                t += period;
            }
            if t < a.s1 {
                return a.label;
            }
        }
        arcs[0].label
    }

    /// Label of the face adjacent to the boundary when the network has no anchors.
    pub fn boundary_label(&self) -> u32 {
        let pts = self.points();
        if self.edges.is_empty() || pts.is_empty() {
            return self.background;
        }
        if !self.anchors().is_empty() {
            return self.boundary_arcs()[0].label;
        }
        let q = pts.iter().copied().max_by(|a, b| a.x.total_cmp(&b.x)).unwrap();
        let p = q + Vec2::new(1e-9, 1.3e-10);
        self.ray_label(p, false).unwrap_or(self.background)
    }

    fn all_segrefs(&self) -> Vec<SegRef> {
        let mut out = vec![];
        for (ei, e) in self.edges.iter().enumerate() {
            let pts = self.polyline(ei);
            let m = pts.len();
            for k in 0..m - 1 {
                let ip = if k == 0 { PointId::Vertex(e.a) } else { PointId::Inner(ei, k - 1) };
                let iq = if k + 1 == m - 1 { PointId::Vertex(e.b) } else { PointId::Inner(ei, k) };
                out.push(SegRef { edge: ei, p: pts[k], q: pts[k + 1], ip, iq });
            }
        }
        out
    }

    /// Cast a horizontal ray from `p` (towards `+x` when `east`, else `-x`) and return the label
    /// on `p`'s side of the first network crossing, or `None` if nothing is hit.
    fn ray_label(&self, p: Vec2, east: bool) -> Option<u32> {
        let mut best: Option<(f64, u32)> = None;
        for s in self.all_segrefs() {
            let (a, b) = (s.p, s.q);
            if !((a.y <= p.y && p.y < b.y) || (b.y <= p.y && p.y < a.y)) {
                continue;
            }
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            let dist = if east { x - p.x } else { p.x - x };
            if dist < 0.0 {
                continue;
            }
            let e = &self.edges[s.edge];
            let up = b.y > a.y;
            // the left side of an upward segment faces west
            let label = if up == east { e.left } else { e.right };
            if best.is_none_or(|(d, _)| dist < d) {
                best = Some((dist, label));
            }
        }
        best.map(|b| b.1)
    }

    /// Phase label at a point inside the domain (not on the network).
    pub fn label_at(&self, p: Vec2) -> u32 {
        if let Some(l) = self.ray_label(p, true) {
            return l;
        }
        if self.anchors().is_empty() {
            return self.boundary_label();
        }
        // exit point of the ray through the boundary
        let (mut lo, mut hi) = (0.0, 1.0);
        while self.domain.signed_distance(p + Vec2::new(hi, 0.0)) > 0.0 {
            hi *= 2.0;
        }
        for _ in 0..100 {
            let m = 0.5 * (lo + hi);
            if self.domain.signed_distance(p + Vec2::new(m, 0.0)) > 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        self.boundary_label_at(self.domain.boundary_param(p + Vec2::new(hi, 0.0)))
    }

    /// Signed-area (Green) contribution of edge `e` for the phase on its left.
    pub fn edge_green(&self, e: usize) -> f64 {
        self.polyline(e).windows(2).map(|w| 0.5 * cross(w[0], w[1])).sum()
    }

    /// Phase areas by Green's theorem over edges and boundary arcs.
    pub fn phase_areas(&self) -> Result<PhaseAreaVector, PartitionError> {
        let v = self.validate();
        if let Some(first) = v.iter().find(|v| v.kind != ViolationKind::DegenerateFace) {
            return Err(PartitionError::Invalid(first.to_string()));
        }
        Ok(self.phase_areas_unchecked())
    }

    pub fn phase_areas_unchecked(&self) -> PhaseAreaVector {
        let mut areas = vec![0.0; self.phases as usize];
        let mut add = |label: u32, a: f64| {
            if label >= 1 && (label as usize) <= areas.len() {
                areas[label as usize - 1] += a;
            }
        };
        for e in 0..self.edges.len() {
            let g = self.edge_green(e);
            add(self.edges[e].left, g);
            add(self.edges[e].right, -g);
        }
        let arcs = self.boundary_arcs();
        if arcs.is_empty() {
            add(self.boundary_label(), self.domain.area());
        } else {
            for a in &arcs {
                add(a.label, self.domain.arc_green(a.s0, a.s1));
            }
        }
        PhaseAreaVector { areas }
    }

    /// Length of network bordering each phase.
    pub fn border_lengths(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.phases as usize];
        for e in 0..self.edges.len() {
            let l = self.edge_length(e);
            for lab in [self.edges[e].left, self.edges[e].right] {
                if lab >= 1 && (lab as usize) <= out.len() {
                    out[lab as usize - 1] += l;
                }
            }
        }
        out
    }

    /// Subdivide every segment longer than `h_max` into equal pieces.
    pub fn resample(&self, h_max: f64) -> LabeledNetwork {
        assert!(h_max > 0.0);
        let mut out = self.clone();
        for (ei, e) in out.edges.iter_mut().enumerate() {
            let pts = self.polyline(ei);
            let mut inner = vec![];
            for (k, w) in pts.windows(2).enumerate() {
                if k > 0 {
                    inner.push(w[0]);
                }
                let l = (w[1] - w[0]).norm();
                if l > h_max {
                    let m = (l / h_max).ceil() as usize;
                    for i in 1..m {
                        inner.push(w[0] + (w[1] - w[0]) * (i as f64 / m as f64));
                    }
                }
            }
            e.interior = inner;
        }
        out
    }

    /// Drop interior polyline points closer than `h_min` to the previously kept point
    /// (or to the closing vertex). Vertices are never removed.
    pub fn coarsen(&self, h_min: f64) -> LabeledNetwork {
        let mut out = self.clone();
        for (ei, e) in out.edges.iter_mut().enumerate() {
            let pts = self.polyline(ei);
            let end = pts[pts.len() - 1];
            let mut kept: Vec<Vec2> = vec![];
            let mut last = pts[0];
            for &p in &pts[1..pts.len() - 1] {
                if (p - last).norm() >= h_min && (end - p).norm() >= h_min {
                    kept.push(p);
                    last = p;
                }
            }
            e.interior = kept;
        }
        out
    }

    /// All invariant violations; empty iff the network is a valid labeled partition.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = vec![];
        let mut push = |kind, detail: String| out.push(Violation { kind, detail });
        let nv = self.vertices.len();
        let n = self.phases;
        if !(1..=n).contains(&self.background) {
            push(ViolationKind::LabelRange, format!("background label {} outside 1..={n}", self.background));
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e.a >= nv || e.b >= nv {
                push(ViolationKind::Reference, format!("edge {i} references a missing vertex"));
                return out;
            }
            if !(1..=n).contains(&e.left) || !(1..=n).contains(&e.right) {
                push(ViolationKind::LabelRange, format!("edge {i} labels ({}, {}) outside 1..={n}", e.left, e.right));
            }
            if e.left == e.right {
                push(ViolationKind::PhaseSeparation, format!("edge {i} has label {} on both sides", e.left));
            }
            if e.a == e.b && e.interior.len() < 2 {
                push(ViolationKind::DegenerateSegment, format!("closed edge {i} has fewer than three points"));
            }
            for p in &e.interior {
                if !(self.domain.signed_distance(*p) > 0.0) {
                    push(ViolationKind::InteriorPlacement, format!("edge {i} point ({}, {}) not inside the domain", p.x, p.y));
                    break;
                }
            }
            let pts = self.polyline(i);
            for w in pts.windows(2) {
                if w[0] == w[1] {
                    push(ViolationKind::DegenerateSegment, format!("edge {i} has a zero-length segment"));
                    break;
                }
            }
        }
        for (v, vert) in self.vertices.iter().enumerate() {
            let deg = self.degree(v);
            let sd = self.domain.signed_distance(vert.pos);
            match vert.kind {
                VertexKind::Anchor => {
                    if sd.abs() > ANCHOR_TOL {
                        push(ViolationKind::AnchorPlacement, format!("anchor {v} is {sd:e} from the boundary"));
                    }
                    if deg == 0 {
                        push(ViolationKind::Degree, format!("anchor {v} has no edges"));
                    }
                }
                VertexKind::Junction => {
                    if !(sd > 0.0) {
                        push(ViolationKind::InteriorPlacement, format!("junction {v} not inside the domain"));
                    }
                    if deg < 3 {
                        push(ViolationKind::Degree, format!("junction {v} has degree {deg}"));
                    }
                }
                VertexKind::Interior => {
                    if !(sd > 0.0) {
                        push(ViolationKind::InteriorPlacement, format!("vertex {v} not inside the domain"));
                    }
                    if deg != 2 {
                        push(ViolationKind::Degree, format!("interior vertex {v} has degree {deg}"));
                    }
                }
            }
        }
        if !out.is_empty() {
            return out;
        }
        out.extend(self.embeddedness_violations());
        if !out.is_empty() {
            return out;
        }
        out.extend(self.label_violations());
        out
    }

    fn embeddedness_violations(&self) -> Vec<Violation> {
        let segs = self.all_segrefs();
        if segs.len() < 2 {
            return vec![];
        }
        let total: f64 = segs.iter().map(|s| (s.q - s.p).norm()).sum();
        let cell = (total / segs.len() as f64).max(1e-9) * 2.0;
        let key = |x: f64| (x / cell).floor() as i64;
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, s) in segs.iter().enumerate() {
            let (lo, hi) = (s.p.inf(&s.q), s.p.sup(&s.q));
            for cx in key(lo.x)..=key(hi.x) {
                for cy in key(lo.y)..=key(hi.y) {
                    grid.entry((cx, cy)).or_default().push(i);
                }
            }
        }
        let mut cells: Vec<_> = grid.into_iter().collect();
        cells.sort_by_key(|c| c.0);
        let mut seen = std::collections::HashSet::new();
        let mut out = vec![];
        for (_, members) in cells {
            for x in 0..members.len() {
                for y in x + 1..members.len() {
                    let (i, k) = (members[x].min(members[y]), members[x].max(members[y]));
                    if !seen.insert((i, k)) {
                        continue;
                    }
                    if segments_conflict(&segs[i], &segs[k]) {
                        out.push(Violation {
                            kind: ViolationKind::Embeddedness,
                            detail: format!(
                                "segments of edges {} and {} intersect near ({:.6}, {:.6})",
                                segs[i].edge, segs[k].edge, segs[i].p.x, segs[i].p.y
                            ),
                        });
                        if out.len() >= 8 {
                            return out;
                        }
                    }
                }
            }
        }
        out
    }

    fn label_violations(&self) -> Vec<Violation> {
        let mut out = vec![];
        for v in 0..self.vertices.len() {
            let kind = self.vertices[v].kind;
            let ends = if kind == VertexKind::Anchor {
                match self.domain.outward_normal(self.vertices[v].pos) {
                    Ok(nu) => self.sorted_ends(v, crate::geometry::perp(nu)),
                    Err(_) => continue,
                }
            } else {
                self.sorted_ends(v, Vec2::new(1.0, 0.0))
            };
            let m = ends.len();
            let pairs = if kind == VertexKind::Anchor { m.saturating_sub(1) } else { m };
            for i in 0..pairs {
                let (e1, e2) = (ends[i], ends[(i + 1) % m]);
                if e1.ccw_label(&self.edges[e1.edge]) != e2.cw_label(&self.edges[e2.edge]) {
                    out.push(Violation {
                        kind: ViolationKind::SectorConsistency,
                        detail: format!("vertex {v}: sector between edges {} and {} has two labels", e1.edge, e2.edge),
                    });
                }
            }
        }
        let arcs = self.boundary_arcs();
        for a in &arcs {
            if let Some((behind, _)) = self.anchor_labels(a.to) {
                if behind != a.label {
                    out.push(Violation {
                        kind: ViolationKind::ArcConsistency,
                        detail: format!("boundary arc from anchor {} to {} has labels {} and {behind}", a.from, a.to, a.label),
                    });
                }
            }
        }
        if !out.is_empty() {
            return out;
        }
        // floating components: the labels seen from both sides of the rightmost point must agree
        for comp in self.components() {
            if comp.iter().any(|&v| self.vertices[v].kind == VertexKind::Anchor) {
                continue;
            }
            let mut best: Option<Vec2> = None;
            for (ei, e) in self.edges.iter().enumerate() {
                if !comp.contains(&e.a) {
                    continue;
                }
                for p in self.polyline(ei) {
                    if best.is_none_or(|b| p.x > b.x) {
                        best = Some(p);
                    }
                }
            }
            let Some(q) = best else { continue };
            let p = q + Vec2::new(1e-9, 1.3e-10);
            let west = self.ray_label(p, false);
            let east = self.label_at(p);
            if west != Some(east) {
                out.push(Violation {
                    kind: ViolationKind::FaceLabel,
                    detail: format!("component near ({:.4}, {:.4}) has outer label {west:?} inside phase {east}", q.x, q.y),
                });
            }
        }
        for f in self.faces() {
            if !f.consistent {
                out.push(Violation { kind: ViolationKind::FaceLabel, detail: "face boundary carries several labels".into() });
            } else if f.area > 0.0 && f.area < DEGENERATE_FACE_AREA {
                out.push(Violation {
                    kind: ViolationKind::DegenerateFace,
                    detail: format!("face of phase {} has area {:e}", f.label, f.area),
                });
            }
        }
        out
    }

    /// Connected components of the vertex graph.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let nx = p[y];
                p[y] = r;
                y = nx;
            }
            r
        }
        for e in &self.edges {
            let (ra, rb) = (find(&mut parent, e.a), find(&mut parent, e.b));
            parent[ra] = rb;
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for v in 0..n {
            let r = find(&mut parent, v);
            groups.entry(r).or_default().push(v);
        }
        groups.into_values().collect()
    }

    /// Face boundary cycles by half-edge traversal (faces on the left).
    pub fn faces(&self) -> Vec<FaceCycle> {
        // half-edges: 2e is a->b (left label), 2e+1 is b->a (right label); arcs follow
        let ne = self.edges.len();
        let arcs = self.boundary_arcs();
        let nh = 2 * ne + arcs.len();
        let mut origin = vec![0usize; nh];
        let mut dest = vec![0usize; nh];
        let mut out_dir = vec![Vec2::zeros(); nh];
        let mut in_dir = vec![Vec2::zeros(); nh];
        let mut label = vec![0u32; nh];
        for (i, e) in self.edges.iter().enumerate() {
            let pts = self.polyline(i);
            let m = pts.len();
            origin[2 * i] = e.a;
            dest[2 * i] = e.b;
            out_dir[2 * i] = pts[1] - pts[0];
            in_dir[2 * i] = pts[m - 2] - pts[m - 1];
            label[2 * i] = e.left;
            origin[2 * i + 1] = e.b;
            dest[2 * i + 1] = e.a;
            out_dir[2 * i + 1] = pts[m - 2] - pts[m - 1];
            in_dir[2 * i + 1] = pts[1] - pts[0];
            label[2 * i + 1] = e.right;
        }
        for (k, a) in arcs.iter().enumerate() {
            let h = 2 * ne + k;
            origin[h] = a.from;
            dest[h] = a.to;
            let t0 = crate::geometry::perp(self.domain.outward_normal(self.vertices[a.from].pos).unwrap_or(Vec2::x()));
            let t1 = crate::geometry::perp(self.domain.outward_normal(self.vertices[a.to].pos).unwrap_or(Vec2::x()));
            out_dir[h] = t0;
            in_dir[h] = -t1;
            label[h] = a.label;
        }
        let mut outgoing: Vec<Vec<usize>> = vec![vec![]; self.vertices.len()];
        for h in 0..nh {
            outgoing[origin[h]].push(h);
        }
        let ang = |d: Vec2| d.y.atan2(d.x);
        let next = |h: usize| -> usize {
            let v = dest[h];
            let back = ang(in_dir[h]);
            // first outgoing half-edge clockwise from the reverse direction
            let mut best = (f64::INFINITY, h ^ 1);
            for &g in &outgoing[v] {
                if g < 2 * ne && h < 2 * ne && g == (h ^ 1) {
                    continue;
                }
                let cw = (back - ang(out_dir[g])).rem_euclid(TAU);
                let cw = if cw == 0.0 { TAU } else { cw };
                if cw < best.0 {
                    best = (cw, g);
                }
            }
            best.1
        };
        let mut visited = vec![false; nh];
        let mut faces = vec![];
        for start in 0..nh {
            if visited[start] {
                continue;
            }
            let mut cyc = vec![];
            let mut h = start;
            let mut guard = 0;
            while !visited[h] {
                visited[h] = true;
                cyc.push(h);
                h = next(h);
                guard += 1;
                if guard > nh + 1 {
                    break;
                }
            }
            let lab = label[cyc[0]];
            let consistent = cyc.iter().all(|&g| label[g] == lab);
            let mut polygon: Vec<Vec2> = vec![];
            let mut area = 0.0;
            let mut edges = vec![];
            for &g in &cyc {
                if g < 2 * ne {
                    let e = g / 2;
                    edges.push(e);
                    let mut pts = self.polyline(e);
                    if g % 2 == 1 {
                        pts.reverse();
                    }
                    area += pts.windows(2).map(|w| 0.5 * cross(w[0], w[1])).sum::<f64>();
                    polygon.extend_from_slice(&pts[..pts.len() - 1]);
                } else {
                    let a = &arcs[g - 2 * ne];
                    area += self.domain.arc_green(a.s0, a.s1);
                    let pts = self.domain.arc_points(a.s0, a.s1, 0.0);
                    polygon.extend_from_slice(&pts[..pts.len() - 1]);
                }
            }
            faces.push(FaceCycle { label: lab, area, polygon, edges, consistent });
        }
        if arcs.is_empty() {
            let per = self.domain.boundary_period();
            let pts = self.domain.arc_points(0.0, per, 0.0);
            faces.push(FaceCycle {
                label: self.boundary_label(),
                area: self.domain.area(),
                polygon: pts[..pts.len() - 1].to_vec(),
                edges: vec![],
                consistent: true,
            });
        }
        faces
    }

    /// Vertex kinds recomputed from degrees (anchors keep their kind).
    pub fn refresh_kinds(&mut self) {
        for v in 0..self.vertices.len() {
            if self.vertices[v].kind == VertexKind::Anchor {
                continue;
            }
            self.vertices[v].kind = if self.degree(v) >= 3 { VertexKind::Junction } else { VertexKind::Interior };
        }
    }

    /// Drop vertices without edges (anchors included) and renumber.
    pub fn compact(&mut self) {
        let n = self.vertices.len();
        let mut used = vec![false; n];
        for e in &self.edges {
            used[e.a] = true;
            used[e.b] = true;
        }
        let mut map = vec![usize::MAX; n];
        let mut verts = vec![];
        for v in 0..n {
            if used[v] {
                map[v] = verts.len();
                verts.push(self.vertices[v].clone());
            }
        }
        for e in &mut self.edges {
            e.a = map[e.a];
            e.b = map[e.b];
        }
        self.vertices = verts;
    }

    /// Join the two edges at every non-anchor vertex of degree two.
    pub fn merge_degree_two(&mut self) {
        loop {
            let mut changed = false;
            for v in 0..self.vertices.len() {
                if self.vertices[v].kind == VertexKind::Anchor || self.degree(v) != 2 {
                    continue;
                }
                let ends = self.edge_ends(v);
                if ends.len() != 2 || ends[0].edge == ends[1].edge {
                    continue;
                }
                let (e1, e2) = (ends[0].edge, ends[1].edge);
                // orient e1 to end at v and e2 to start at v
                let mut p1 = self.polyline(e1);
                let (mut l1, mut r1) = (self.edges[e1].left, self.edges[e1].right);
                if ends[0].at_start {
                    p1.reverse();
                    std::mem::swap(&mut l1, &mut r1);
                }
                let mut p2 = self.polyline(e2);
                let (mut l2, mut r2) = (self.edges[e2].left, self.edges[e2].right);
                if !ends[1].at_start {
                    p2.reverse();
                    std::mem::swap(&mut l2, &mut r2);
                }
                if l1 != l2 || r1 != r2 {
                    continue;
                }
                let a = if ends[0].at_start { self.edges[e1].b } else { self.edges[e1].a };
                let b = if ends[1].at_start { self.edges[e2].b } else { self.edges[e2].a };
                let mut interior: Vec<Vec2> = p1[1..].to_vec();
                interior.extend_from_slice(&p2[1..p2.len() - 1]);
                let merged = Edge { a, b, interior, left: l1, right: r1 };
                let (hi, lo) = (e1.max(e2), e1.min(e2));
                self.edges.remove(hi);
                self.edges.remove(lo);
                self.edges.push(merged);
                changed = true;
                break;
            }
            if !changed {
                break;
            }
        }
        self.compact();
        self.refresh_kinds();
    }

    /// Surgery for vanishing phases: removes closed loops and faces with area below `min_area`
    /// (merging them into a neighbor), then cleans up the vertex structure.
    pub fn repair(&mut self, min_area: f64) -> Vec<SurgeryEvent> {
        let mut events = vec![];
        for _ in 0..64 {
            let mut changed = false;
            // tiny or degenerate closed loops
            for i in 0..self.edges.len() {
                let e = &self.edges[i];
                if e.a != e.b {
                    continue;
                }
                let distinct = {
                    let mut p = self.polyline(i);
                    p.dedup();
                    p.len() - 1
                };
                let area = self.edge_green(i);
                if distinct < 3 || area.abs() < min_area {
                    let inner = if area >= 0.0 { e.left } else { e.right };
                    events.push(SurgeryEvent { kind: "loop-removal".into(), area: area.abs(), label: inner });
                    self.edges.remove(i);
                    changed = true;
                    break;
                }
            }
            if !changed {
                for f in self.faces() {
                    if !(f.area > 0.0 && f.area < min_area) || f.edges.is_empty() {
                        continue;
                    }
                    // drop the longest bounding edge; the rest of the face joins the neighbor across it
                    let Some(&drop) = f.edges.iter().max_by(|&&x, &&y| self.edge_length(x).total_cmp(&self.edge_length(y)))
                    else {
                        continue;
                    };
                    let de = self.edges[drop].clone();
                    let neighbor = if de.left == f.label { de.right } else { de.left };
                    for &e in &f.edges {
                        if e == drop {
                            continue;
                        }
                        let ed = &mut self.edges[e];
                        if ed.left == f.label {
                            ed.left = neighbor;
                        } else if ed.right == f.label {
                            ed.right = neighbor;
                        }
                    }
                    events.push(SurgeryEvent { kind: "face-merge".into(), area: f.area, label: f.label });
                    self.edges.remove(drop);
                    changed = true;
                    break;
                }
            }
            if !changed {
                break;
            }
            self.edges.retain(|e| e.left != e.right);
            // dangling non-anchor ends separate nothing
            loop {
                let dangling = (0..self.edges.len()).find(|&i| {
                    let e = &self.edges[i];
                    e.a != e.b
                        && [e.a, e.b]
                            .iter()
                            .any(|&v| self.vertices[v].kind != VertexKind::Anchor && self.degree(v) == 1)
                });
                match dangling {
                    Some(i) => {
                        self.edges.remove(i);
                    }
                    None => break,
                }
            }
            self.compact();
            self.refresh_kinds();
            self.merge_degree_two();
        }
        events
    }
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    cross(b - a, c - a)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// True when two segments meet anywhere other than at a shared polyline point.
fn segments_conflict(s: &SegRef, t: &SegRef) -> bool {
    let shared: Vec<(Vec2, Vec2, Vec2)> = [(s.ip, s.p, s.q), (s.iq, s.q, s.p)]
        .iter()
        .filter_map(|&(id, at, other)| {
            if id == t.ip {
                Some((at, other, t.q))
            } else if id == t.iq {
                Some((at, other, t.p))
            } else {
                None
            }
        })
        .collect();
    if shared.len() == 2 {
        // both ends shared: two distinct segments along the same chord
        return true;
    }
    if let Some(&(p, a, b)) = shared.first() {
        let (u, w) = (a - p, b - p);
        let c = cross(u, w);
        return c.abs() <= 1e-14 * u.norm() * w.norm() && u.dot(&w) > 0.0;
    }
    let (p1, p2, q1, q2) = (s.p, s.q, t.p, t.q);
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}
