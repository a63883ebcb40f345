//! Boundary damping field `η_j` built from a mollified distance to the frozen anchor set.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Mat2, RegionSystem, Segment, Vec2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CutoffError {
    #[error("glue profile is defined for t > 0, got {0}")]
    Domain(f64),
}

/// Glue profile `ψ`: identity on `(0, 1/2]`, constant 1 on `[3/2, ∞)`.
/// On `[1/2, 3/2]` it is the unique quintic matching value and two derivatives at both ends,
/// which reduces to `1/2 + s − s³ + s⁴/2` with `s = t − 1/2`.
pub fn glue_psi(t: f64) -> Result<f64, CutoffError> {
    if t.is_nan() || t <= 0.0 {
        return Err(CutoffError::Domain(t));
    }
    Ok(glue_psi_derivs(t).0)
}

/// `(ψ, ψ', ψ'')` for `t >= 0` (the identity branch is extended to 0).
pub fn glue_psi_derivs(t: f64) -> (f64, f64, f64) {
    if t <= 0.5 {
        (t, 1.0, 0.0)
    } else if t >= 1.5 {
        (1.0, 0.0, 0.0)
    } else {
        let s = t - 0.5;
        let s2 = s * s;
        (0.5 + s - s * s2 + 0.5 * s2 * s2, 1.0 - 3.0 * s2 + 2.0 * s2 * s, -6.0 * s + 6.0 * s2)
    }
}

/// Quadrature node of the mollifier: offset, value weight, and weight of the mollifier gradient.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct Node {
    z: Vec2,
    w: f64,
    gw: Vec2,
}

/// `η_j` together with what is needed to evaluate it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DampingField {
    j: u64,
    anchor: Vec<Segment>,
    rho: f64,
    reach: f64,
    nodes: Vec<Node>,
    /// Finer grid used when `B_ρ(x)` meets a kink of `d̂_j`.
    fine: Vec<Node>,
}

/// Value, gradient and Hessian of `η_j` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaJet {
    pub value: f64,
    pub grad: Vec2,
    pub hess: Mat2,
}

pub const DEFAULT_SUBDIVISION: usize = 8;
/// Refinement of the grid near the kinks of `d̂_j` (on the anchor, at the reach, between pieces).
pub const KINK_REFINEMENT: usize = 3;

/// Normalized bump weights on the grid of spacing `ρ/m` inside `B_ρ`.
fn bump_nodes(rho: f64, m: usize) -> Vec<Node> {
    let h = rho / m as f64;
    let mut nodes = vec![];
    let mi = m as i64;
    for a in -mi..=mi {
        for b in -mi..=mi {
            let z = Vec2::new(a as f64 * h, b as f64 * h);
            let q = z.norm_squared() / (rho * rho);
            if q < 1.0 {
                let w = (1.0 / (q - 1.0)).exp();
                // gradient of the bump evaluated at x − y = −z
                let gw = z * (2.0 / (rho * rho)) / ((q - 1.0) * (q - 1.0)) * w;
                nodes.push(Node { z, w, gw });
            }
        }
    }
    let total: f64 = nodes.iter().map(|n| n.w).sum();
    for n in &mut nodes {
        n.w /= total;
        n.gw /= total;
    }
    nodes
}

/// Join consecutive pieces that continue each other in a straight line; the union is unchanged.
fn merge_collinear(anchor: Vec<Segment>) -> Vec<Segment> {
    let mut out: Vec<Segment> = vec![];
    for s in anchor {
        if let Some(last) = out.last_mut() {
            let (u, v) = (last.b - last.a, s.b - s.a);
            let straight = crate::geometry::cross(u, v).abs() <= 1e-12 * u.norm() * v.norm() && u.dot(&v) > 0.0;
            if last.b == s.a && straight {
                last.b = s.b;
                continue;
            }
        }
        out.push(s);
    }
    out
}

impl DampingField {
    pub fn new(j: u64, anchor: Vec<Segment>) -> Self {
        Self::with_subdivision(j, anchor, DEFAULT_SUBDIVISION)
    }

    pub fn from_regions(rs: &RegionSystem) -> Self {
        Self::new(rs.j, rs.anchor.clone())
    }

    /// Field whose mollification grid has spacing `ρ_j / m`, refined by [`KINK_REFINEMENT`]
    /// where the raw distance is not smooth on the mollification ball.
    pub fn with_subdivision(j: u64, anchor: Vec<Segment>, m: usize) -> Self {
        assert!(j >= 1 && m >= 1);
        let jf = j as f64;
        let rho = jf.powf(-0.25);
        let reach = 2.0 * jf.powf(-0.125);
        DampingField {
            j,
            anchor: merge_collinear(anchor),
            rho,
            reach,
            nodes: bump_nodes(rho, m),
            fine: bump_nodes(rho, KINK_REFINEMENT * m),
        }
    }

    pub fn j(&self) -> u64 {
        self.j
    }

    pub fn anchor(&self) -> &[Segment] {
        &self.anchor
    }

    /// Mollification radius `ρ_j = j^{−1/4}`.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Radius `2 j^{−1/8}` of the neighborhood defining the raw distance.
    pub fn reach(&self) -> f64 {
        self.reach
    }

    /// `d̂_j(x) = dist(x, complement of the reach-neighborhood of the anchor)`.
    ///
    /// Evaluated as `(reach − dist(x, anchor))⁺`, exact when each connected piece of the anchor
    /// is a straight segment and pieces are more than twice the reach apart.
    pub fn raw_distance(&self, x: Vec2) -> f64 {
        (self.reach - crate::geometry::distance_to_segments(&self.anchor, x)).max(0.0)
    }

    fn raw_with_grad(&self, segs: &[Segment], x: Vec2) -> (f64, Vec2) {
        let mut best = (f64::INFINITY, Vec2::zeros());
        for s in segs {
            let q = s.closest_point(x);
            let d = (x - q).norm();
            if d < best.0 {
                best = (d, x - q);
            }
        }
        let (d, v) = best;
        if d >= self.reach {
            (0.0, Vec2::zeros())
        } else if d > 0.0 {
            (self.reach - d, -v / d)
        } else {
            (self.reach, Vec2::zeros())
        }
    }

    /// Anchor pieces that can influence `d̂_j` on `B_ρ(x)` (the others are at least the reach
    /// away), and the quadrature grid for the ball.
    fn local_anchor(&self, x: Vec2) -> (Vec<Segment>, &[Node]) {
        let segs: Vec<Segment> = self.anchor.iter().filter(|s| s.distance(x) < self.reach + self.rho).copied().collect();
        // with one straight piece, d̂ is smooth on the ball unless it meets the piece or the reach
        let d = crate::geometry::distance_to_segments(&segs, x);
        let smooth = segs.len() == 1 && d > self.rho && (d - self.reach).abs() > self.rho;
        (segs, if smooth { &self.nodes } else { &self.fine })
    }

    fn far(&self, x: Vec2) -> bool {
        crate::geometry::distance_to_segments(&self.anchor, x) >= self.reach + self.rho
    }

    /// `d_j = φ_ρ ∗ d̂_j` by normalized grid quadrature over `B_ρ(x)`.
    pub fn mollified_distance(&self, x: Vec2) -> f64 {
        if self.far(x) {
            return 0.0;
        }
        let (segs, nodes) = self.local_anchor(x);
        nodes
            .iter()
            .map(|n| n.w * (self.reach - crate::geometry::distance_to_segments(&segs, x + n.z)).max(0.0))
            .sum()
    }

    fn mollified_jet(&self, x: Vec2) -> (f64, Vec2, Mat2) {
        let (mut d, mut g, mut hm) = (0.0, Vec2::zeros(), Mat2::zeros());
        let (segs, nodes) = self.local_anchor(x);
        for n in nodes {
            let (v, gv) = self.raw_with_grad(&segs, x + n.z);
            d += n.w * v;
            g += gv * n.w;
            hm += n.gw * gv.transpose();
        }
        (d, g, 0.5 * (hm + hm.transpose()))
    }

    pub fn exponent_arg(&self, d: f64) -> f64 {
        let jf = self.j as f64;
        (-jf.powf(0.25) * (d - jf.powf(-0.25))).exp()
    }

    /// `η_j(x) = ψ(exp(−j^{1/4}(d_j(x) − j^{−1/4})))`.
    pub fn eta(&self, x: Vec2) -> f64 {
        if self.far(x) {
            return 1.0;
        }
        glue_psi_derivs(self.exponent_arg(self.mollified_distance(x))).0
    }

    /// `η_j` with analytic gradient and Hessian from the chain rule.
    pub fn eta_jet(&self, x: Vec2) -> EtaJet {
        if self.far(x) {
            return EtaJet { value: 1.0, grad: Vec2::zeros(), hess: Mat2::zeros() };
        }
        let (d, gd, hd) = self.mollified_jet(x);
        let jq = (self.j as f64).powf(0.25);
        let t = self.exponent_arg(d);
        let (p, p1, p2) = glue_psi_derivs(t);
        let grad = gd * (-jq * t * p1);
        let hess = gd * gd.transpose() * (jq * jq * t * (p2 * t + p1)) - hd * (jq * p1 * t);
        EtaJet { value: p, grad, hess }
    }
}
