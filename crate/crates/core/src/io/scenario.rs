//! Built-in initial networks and the serializable scenario description.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use super::config::FlowOverrides;
use super::IoError;
use crate::driver::a4_violations;
use crate::geometry::{v2, ConvexDomain, Shape, Vec2};
use crate::partition::{Edge, LabeledNetwork, Vertex, VertexKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub a: usize,
    pub b: usize,
    pub left: u32,
    pub right: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub interior: Vec<[f64; 2]>,
}

/// A named initial network: domain, phase count, vertex and edge lists, and anchors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub domain: Shape,
    pub phases: u32,
    /// Phase filling the domain when there are no edges, and the outside label of loops.
    #[serde(default = "one")]
    pub background: u32,
    pub vertices: Vec<[f64; 2]>,
    pub edges: Vec<EdgeSpec>,
    /// Vertex indices lying on the domain boundary.
    #[serde(default)]
    pub anchors: Vec<usize>,
    #[serde(default, skip_serializing_if = "FlowOverrides::is_empty")]
    pub overrides: FlowOverrides,
}

fn one() -> u32 {
    1
}

/// Tolerance for "anchor lies on the domain boundary".
pub const ANCHOR_TOL: f64 = 1e-9;

impl ScenarioSpec {
    /// Build and validate the network; the boundary-labeling advisory is returned separately.
    pub fn network(&self) -> Result<(LabeledNetwork, Vec<usize>), IoError> {
        let bad = |m: String| IoError::Scenario { name: self.name.clone(), message: m };
        let domain = ConvexDomain::from_shape(self.domain.clone()).map_err(|e| bad(e.to_string()))?;
        let nv = self.vertices.len();
        for e in &self.edges {
            if e.a >= nv || e.b >= nv {
                return Err(bad(format!("edge ({}, {}) refers to a missing vertex", e.a, e.b)));
            }
        }
        let mut vertices: Vec<Vertex> =
            self.vertices.iter().map(|p| Vertex { pos: v2(p[0], p[1]), kind: VertexKind::Interior }).collect();
        for &a in &self.anchors {
            let v = vertices.get_mut(a).ok_or_else(|| bad(format!("anchor {a} is not a vertex")))?;
            let d = domain.signed_distance(v.pos);
            if d.abs() > ANCHOR_TOL {
                return Err(bad(format!("anchor {a} is {d:e} away from the boundary")));
            }
            v.kind = VertexKind::Anchor;
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                a: e.a,
                b: e.b,
                interior: e.interior.iter().map(|p| v2(p[0], p[1])).collect(),
                left: e.left,
                right: e.right,
            })
            .collect();
        let mut net = LabeledNetwork { domain, phases: self.phases, vertices, edges, background: self.background };
        net.refresh_kinds();
        if let Some(v) = net.validate().first() {
            return Err(bad(v.to_string()));
        }
        let a4 = a4_violations(&net);
        Ok((net, a4))
    }

    /// Inverse of [`ScenarioSpec::network`] (overrides left empty).
    pub fn from_network(name: &str, net: &LabeledNetwork) -> Self {
        let xy = |p: &Vec2| [p.x, p.y];
        ScenarioSpec {
            name: name.into(),
            domain: net.domain.shape().clone(),
            phases: net.phases,
            background: net.background,
            vertices: net.vertices.iter().map(|v| xy(&v.pos)).collect(),
            edges: net
                .edges
                .iter()
                .map(|e| EdgeSpec { a: e.a, b: e.b, left: e.left, right: e.right, interior: e.interior.iter().map(xy).collect() })
                .collect(),
            anchors: net.anchors(),
            overrides: FlowOverrides::default(),
        }
    }
}

fn disk(radius: f64) -> Shape {
    Shape::Disk { center: [0.0, 0.0], radius }
}

fn sample(n: usize, f: impl Fn(f64) -> [f64; 2]) -> Vec<[f64; 2]> {
    (1..n).map(|i| f(i as f64 / n as f64)).collect()
}

/// Half-width of the chords at height `±h` of the unit disk.
fn half_chord(h: f64) -> f64 {
    (1.0 - h * h).sqrt()
}

/// Single diameter of the unit disk; phase 2 above, 1 below.
pub fn chord() -> ScenarioSpec {
    ScenarioSpec {
        name: "chord".into(),
        domain: disk(1.0),
        phases: 2,
        background: 1,
        vertices: vec![[-1.0, 0.0], [1.0, 0.0]],
        edges: vec![EdgeSpec { a: 0, b: 1, left: 2, right: 1, interior: vec![] }],
        anchors: vec![0, 1],
        overrides: FlowOverrides::default(),
    }
}

/// The chord `y = −0.3` bulged up to the origin by a cosine bump.
pub fn arc_relax() -> ScenarioSpec {
    let y0 = -0.3;
    let xa = half_chord(y0);
    let interior = sample(64, |s| {
        let x = -xa + 2.0 * xa * s;
        [x, y0 - y0 * (FRAC_PI_2 * x / xa).cos()]
    });
    ScenarioSpec {
        name: "arc-relax".into(),
        domain: disk(1.0),
        phases: 2,
        background: 1,
        vertices: vec![[-xa, y0], [xa, y0]],
        edges: vec![EdgeSpec { a: 0, b: 1, left: 2, right: 1, interior }],
        anchors: vec![0, 1],
        overrides: FlowOverrides::default(),
    }
}

/// Side of the square whose corners carry the four anchors.
pub const SQUARE_SIDE: f64 = 0.8;

/// Length of the Steiner tree spanning the corners of a square of side `s`.
pub fn steiner_square_length(s: f64) -> f64 {
    (1.0 + 3f64.sqrt()) * s
}

fn square_domain_and_corners() -> (Shape, Vec<[f64; 2]>) {
    let r = SQUARE_SIDE / 2f64.sqrt();
    let corners = (0..4)
        .map(|k| {
            let a = FRAC_PI_4 + k as f64 * FRAC_PI_2;
            [r * a.cos(), r * a.sin()]
        })
        .collect();
    (disk(r), corners)
}

/// Both diagonals of the square meeting in a degree-4 junction; sectors E, N, W, S are 1..4.
pub fn cross4() -> ScenarioSpec {
    let (domain, mut vertices) = square_domain_and_corners();
    vertices.push([0.0, 0.0]);
    // corners in order NE, NW, SW, SE; the edge towards each has the next sector on its left
    let edges = vec![
        EdgeSpec { a: 4, b: 0, left: 2, right: 1, interior: vec![] },
        EdgeSpec { a: 4, b: 1, left: 3, right: 2, interior: vec![] },
        EdgeSpec { a: 4, b: 2, left: 4, right: 3, interior: vec![] },
        EdgeSpec { a: 4, b: 3, left: 1, right: 4, interior: vec![] },
    ];
    ScenarioSpec {
        name: "cross4".into(),
        domain,
        phases: 4,
        background: 1,
        vertices,
        edges,
        anchors: vec![0, 1, 2, 3],
        overrides: FlowOverrides::default(),
    }
}

/// Half-length of the initial bridge of the H network.
pub const STEINER4_BRIDGE: f64 = 0.05;

/// H-shaped network on the same anchors as [`cross4`], with a short horizontal bridge.
pub fn steiner4() -> ScenarioSpec {
    let (domain, mut vertices) = square_domain_and_corners();
    vertices.push([-STEINER4_BRIDGE, 0.0]);
    vertices.push([STEINER4_BRIDGE, 0.0]);
    let edges = vec![
        EdgeSpec { a: 4, b: 5, left: 2, right: 4, interior: vec![] },
        EdgeSpec { a: 5, b: 0, left: 2, right: 1, interior: vec![] },
        EdgeSpec { a: 5, b: 3, left: 1, right: 4, interior: vec![] },
        EdgeSpec { a: 4, b: 1, left: 3, right: 2, interior: vec![] },
        EdgeSpec { a: 4, b: 2, left: 4, right: 3, interior: vec![] },
    ];
    ScenarioSpec {
        name: "steiner4".into(),
        domain,
        phases: 4,
        background: 1,
        vertices,
        edges,
        anchors: vec![0, 1, 2, 3],
        overrides: FlowOverrides::default(),
    }
}

pub const CIRCLE_RADIUS: f64 = 0.5;

/// Closed circle of radius 0.5 in the unit disk, phase 2 inside; no anchors.
pub fn circle() -> ScenarioSpec {
    let n = 256;
    let pts: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let a = i as f64 / n as f64 * std::f64::consts::TAU;
            [CIRCLE_RADIUS * a.cos(), CIRCLE_RADIUS * a.sin()]
        })
        .collect();
    ScenarioSpec {
        name: "circle".into(),
        domain: disk(1.0),
        phases: 2,
        background: 1,
        vertices: vec![pts[0]],
        edges: vec![EdgeSpec { a: 0, b: 0, left: 2, right: 1, interior: pts[1..].to_vec() }],
        anchors: vec![],
        overrides: FlowOverrides { t_end: Some(0.115), ..Default::default() },
    }
}

/// Anchor height of the two arcs.
pub const TWO_ARCS_HEIGHT: f64 = 0.3;

/// Two arcs bulging towards the center, each between an anchor pair at heights `±0.3`.
/// Phase 1 lies above the upper arc, 3 below the lower one, and 2 in between,
/// so the lateral boundary arcs belong to phase 2.
pub fn two_arcs() -> ScenarioSpec {
    let h = TWO_ARCS_HEIGHT;
    let xa = half_chord(h);
    let arc = |y0: f64| {
        sample(64, move |s| {
            let x = -xa + 2.0 * xa * s;
            [x, y0 - 0.5 * y0 * (FRAC_PI_2 * x / xa).cos()]
        })
    };
    ScenarioSpec {
        name: "two-arcs".into(),
        domain: disk(1.0),
        phases: 3,
        background: 1,
        vertices: vec![[-xa, h], [xa, h], [-xa, -h], [xa, -h]],
        edges: vec![
            EdgeSpec { a: 0, b: 1, left: 1, right: 2, interior: arc(h) },
            EdgeSpec { a: 2, b: 3, left: 2, right: 3, interior: arc(-h) },
        ],
        anchors: vec![0, 1, 2, 3],
        overrides: FlowOverrides::default(),
    }
}

pub fn builtin_scenarios() -> Vec<ScenarioSpec> {
    vec![chord(), arc_relax(), cross4(), steiner4(), circle(), two_arcs()]
}

pub fn builtin(name: &str) -> Option<ScenarioSpec> {
    builtin_scenarios().into_iter().find(|s| s.name == name)
}
