//! Convex host domain, its boundary calculus, and the `j`-indexed region system.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;

#[inline]
pub fn v2(x: f64, y: f64) -> Vec2 {
    Vec2::new(x, y)
}

#[inline]
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Counter-clockwise rotation by 90 degrees.
#[inline]
pub fn perp(a: Vec2) -> Vec2 {
    v2(-a.y, a.x)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point ({0}, {1}) lies outside the tubular neighborhood of the boundary")]
    OutsideTube(f64, f64),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub fn new(a: Vec2, b: Vec2) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    pub fn closest_point(&self, p: Vec2) -> Vec2 {
        let d = self.b - self.a;
        let l2 = d.norm_squared();
        if l2 == 0.0 {
            return self.a;
        }
        let t = ((p - self.a).dot(&d) / l2).clamp(0.0, 1.0);
        self.a + d * t
    }

    pub fn distance(&self, p: Vec2) -> f64 {
        (p - self.closest_point(p)).norm()
    }
}

/// Distance from `p` to a finite segment set; `+inf` for the empty set.
pub fn distance_to_segments(segments: &[Segment], p: Vec2) -> f64 {
    segments
        .iter()
        .map(|s| s.distance(p))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Disk { center: [f64; 2], radius: f64 },
    Ellipse { center: [f64; 2], semi_axes: [f64; 2] },
    Polygon { vertices: Vec<[f64; 2]> },
}

/// A strictly convex bounded planar domain.
///
/// Polygons stand in for smooth boundaries and need at least 32 vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexDomain {
    shape: Shape,
    poly: Vec<Vec2>,
    poly_cum: Vec<f64>,
    tube: f64,
}

impl Serialize for ConvexDomain {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.shape.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConvexDomain {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let shape = Shape::deserialize(d)?;
        ConvexDomain::from_shape(shape).map_err(serde::de::Error::custom)
    }
}

pub const MIN_POLYGON_VERTICES: usize = 32;

impl ConvexDomain {
    pub fn disk(center: Vec2, radius: f64) -> Result<Self, GeometryError> {
        Self::from_shape(Shape::Disk { center: [center.x, center.y], radius })
    }

    pub fn unit_disk() -> Self {
        Self::disk(Vec2::zeros(), 1.0).expect("unit disk is valid")
    }

    pub fn ellipse(center: Vec2, a: f64, b: f64) -> Result<Self, GeometryError> {
        Self::from_shape(Shape::Ellipse { center: [center.x, center.y], semi_axes: [a, b] })
    }

    pub fn polygon(vertices: &[Vec2]) -> Result<Self, GeometryError> {
        Self::from_shape(Shape::Polygon { vertices: vertices.iter().map(|v| [v.x, v.y]).collect() })
    }

    pub fn from_shape(shape: Shape) -> Result<Self, GeometryError> {
        let bad = |m: &str| Err(GeometryError::InvalidDomain(m.to_string()));
        match &shape {
            Shape::Disk { center, radius } => {
                if !(*radius > 0.0 && radius.is_finite()) || !center.iter().all(|c| c.is_finite()) {
                    return bad("disk radius must be positive and finite");
                }
                let tube = 0.5 * radius;
                Ok(ConvexDomain { shape, poly: vec![], poly_cum: vec![], tube })
            }
            Shape::Ellipse { center, semi_axes } => {
                let [a, b] = *semi_axes;
                if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) || !center.iter().all(|c| c.is_finite()) {
                    return bad("ellipse semi-axes must be positive and finite");
                }
                let (big, small) = if a >= b { (a, b) } else { (b, a) };
                let tube = 0.5 * small * small / big;
                Ok(ConvexDomain { shape, poly: vec![], poly_cum: vec![], tube })
            }
            Shape::Polygon { vertices } => {
                let mut vs: Vec<Vec2> = vertices.iter().map(|v| v2(v[0], v[1])).collect();
                if vs.len() < MIN_POLYGON_VERTICES {
                    return bad("polygonal domains need at least 32 vertices");
                }
                let signed: f64 = (0..vs.len()).map(|i| cross(vs[i], vs[(i + 1) % vs.len()])).sum();
                if signed < 0.0 {
                    vs.reverse();
                }
                let n = vs.len();
                for i in 0..n {
                    let (p, q, r) = (vs[(i + n - 1) % n], vs[i], vs[(i + 1) % n]);
                    if cross(q - p, r - q) <= 0.0 {
                        return bad("polygon is not strictly convex");
                    }
                }
                let mut cum = vec![0.0];
                for i in 0..n {
                    let l = (vs[(i + 1) % n] - vs[i]).norm();
                    cum.push(cum[i] + l);
                }
                let shape = Shape::Polygon { vertices: vs.iter().map(|v| [v.x, v.y]).collect() };
                let mut dom = ConvexDomain { shape, poly: vs, poly_cum: cum, tube: 0.0 };
                log::warn!("polygonal domain: boundary is only a C^2 approximation");
                dom.tube = 0.5 * dom.signed_distance(dom.centroid());
                Ok(dom)
            }
        }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Width of the tubular neighborhood where nearest-point projection is well defined.
    pub fn tube(&self) -> f64 {
        self.tube
    }

    pub fn centroid(&self) -> Vec2 {
        match &self.shape {
            Shape::Disk { center, .. } | Shape::Ellipse { center, .. } => v2(center[0], center[1]),
            Shape::Polygon { .. } => {
                let (mut a, mut c) = (0.0, Vec2::zeros());
                let n = self.poly.len();
                for i in 0..n {
                    let (p, q) = (self.poly[i], self.poly[(i + 1) % n]);
                    let w = cross(p, q);
                    a += w;
                    c += (p + q) * w;
                }
                c / (3.0 * a)
            }
        }
    }

    pub fn area(&self) -> f64 {
        match &self.shape {
            Shape::Disk { radius, .. } => std::f64::consts::PI * radius * radius,
            Shape::Ellipse { semi_axes, .. } => std::f64::consts::PI * semi_axes[0] * semi_axes[1],
            Shape::Polygon { .. } => {
                let n = self.poly.len();
                0.5 * (0..n).map(|i| cross(self.poly[i], self.poly[(i + 1) % n])).sum::<f64>()
            }
        }
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        match &self.shape {
            Shape::Disk { center, radius } => {
                let c = v2(center[0], center[1]);
                (c - v2(*radius, *radius), c + v2(*radius, *radius))
            }
            Shape::Ellipse { center, semi_axes } => {
                let c = v2(center[0], center[1]);
                let h = v2(semi_axes[0], semi_axes[1]);
                (c - h, c + h)
            }
            Shape::Polygon { .. } => {
                let mut lo = self.poly[0];
                let mut hi = self.poly[0];
                for p in &self.poly {
                    lo = lo.inf(p);
                    hi = hi.sup(p);
                }
                (lo, hi)
            }
        }
    }

    /// Nearest boundary point and the distance to it.
    pub fn nearest_boundary_point(&self, p: Vec2) -> (Vec2, f64) {
        match &self.shape {
            Shape::Disk { center, radius } => {
                let c = v2(center[0], center[1]);
                let d = p - c;
                let r = d.norm();
                let u = if r > 0.0 { d / r } else { v2(1.0, 0.0) };
                (c + u * *radius, (r - radius).abs())
            }
            Shape::Ellipse { center, semi_axes } => {
                let c = v2(center[0], center[1]);
                let (q, d) = ellipse_nearest(semi_axes[0], semi_axes[1], p - c);
                (q + c, d)
            }
            Shape::Polygon { .. } => {
                let n = self.poly.len();
                let mut best = (self.poly[0], f64::INFINITY);
                for i in 0..n {
                    let s = Segment::new(self.poly[i], self.poly[(i + 1) % n]);
                    let q = s.closest_point(p);
                    let d = (p - q).norm();
                    if d < best.1 {
                        best = (q, d);
                    }
                }
                best
            }
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.signed_distance(p) > 0.0
    }

    fn inside_test(&self, p: Vec2) -> bool {
        match &self.shape {
            Shape::Disk { center, radius } => (p - v2(center[0], center[1])).norm() < *radius,
            Shape::Ellipse { center, semi_axes } => {
                let d = p - v2(center[0], center[1]);
                (d.x / semi_axes[0]).powi(2) + (d.y / semi_axes[1]).powi(2) < 1.0
            }
            Shape::Polygon { .. } => {
                let n = self.poly.len();
                (0..n).all(|i| cross(self.poly[(i + 1) % n] - self.poly[i], p - self.poly[i]) > 0.0)
            }
        }
    }

    /// Distance to the boundary, positive inside and negative outside.
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        if let Shape::Disk { center, radius } = &self.shape {
            return radius - (p - v2(center[0], center[1])).norm();
        }
        let (_, d) = self.nearest_boundary_point(p);
        if self.inside_test(p) {
            d
        } else {
            -d
        }
    }

    /// Outward unit normal `-∇d_U`, defined inside the tube around the boundary.
    pub fn outward_normal(&self, p: Vec2) -> Result<Vec2, GeometryError> {
        let sd = self.signed_distance(p);
        if sd.abs() >= self.tube {
            return Err(GeometryError::OutsideTube(p.x, p.y));
        }
        Ok(self.normal_unchecked(p))
    }

    fn normal_unchecked(&self, p: Vec2) -> Vec2 {
        match &self.shape {
            Shape::Disk { center, .. } => {
                let d = p - v2(center[0], center[1]);
                let r = d.norm();
                if r > 0.0 {
                    d / r
                } else {
                    v2(1.0, 0.0)
                }
            }
            Shape::Ellipse { center, semi_axes } => {
                let c = v2(center[0], center[1]);
                let (q, _) = ellipse_nearest(semi_axes[0], semi_axes[1], p - c);
                v2(q.x / semi_axes[0].powi(2), q.y / semi_axes[1].powi(2)).normalize()
            }
            Shape::Polygon { .. } => {
                let (q, d) = self.nearest_boundary_point(p);
                if d > 1e-14 {
                    let u = (p - q) / d;
                    if self.inside_test(p) {
                        -u
                    } else {
                        u
                    }
                } else {
                    let i = self.polygon_edge_index(q);
                    let e = self.poly[(i + 1) % self.poly.len()] - self.poly[i];
                    v2(e.y, -e.x).normalize()
                }
            }
        }
    }

    fn polygon_edge_index(&self, q: Vec2) -> usize {
        let n = self.poly.len();
        (0..n)
            .min_by(|&i, &k| {
                let di = Segment::new(self.poly[i], self.poly[(i + 1) % n]).distance(q);
                let dk = Segment::new(self.poly[k], self.poly[(k + 1) % n]).distance(q);
                di.total_cmp(&dk)
            })
            .unwrap_or(0)
    }

    /// Nearest point of the inner parallel set `{d_U >= r}` for a point with `d_U(p) < r`.
    pub fn project_to_level(&self, p: Vec2, r: f64) -> Vec2 {
        let (q, _) = self.nearest_boundary_point(p);
        q - self.normal_unchecked(q) * r
    }

    /// Period of the boundary parameter.
    pub fn boundary_period(&self) -> f64 {
        match &self.shape {
            Shape::Polygon { .. } => *self.poly_cum.last().unwrap(),
            _ => std::f64::consts::TAU,
        }
    }

    /// Counter-clockwise boundary parameter of the boundary point nearest to `p`, in `[0, period)`.
    pub fn boundary_param(&self, p: Vec2) -> f64 {
        let period = self.boundary_period();
        let s = match &self.shape {
            Shape::Disk { center, .. } => (p.y - center[1]).atan2(p.x - center[0]),
            Shape::Ellipse { center, semi_axes } => {
                let (q, _) = ellipse_nearest(semi_axes[0], semi_axes[1], p - v2(center[0], center[1]));
                (q.y / semi_axes[1]).atan2(q.x / semi_axes[0])
            }
            Shape::Polygon { .. } => {
                let (q, _) = self.nearest_boundary_point(p);
                let i = self.polygon_edge_index(q);
                self.poly_cum[i] + (q - self.poly[i]).norm()
            }
        };
        s.rem_euclid(period)
    }

    pub fn boundary_point(&self, s: f64) -> Vec2 {
        match &self.shape {
            Shape::Disk { center, radius } => v2(center[0] + radius * s.cos(), center[1] + radius * s.sin()),
            Shape::Ellipse { center, semi_axes } => {
                v2(center[0] + semi_axes[0] * s.cos(), center[1] + semi_axes[1] * s.sin())
            }
            Shape::Polygon { .. } => {
                let s = s.rem_euclid(self.boundary_period());
                let n = self.poly.len();
                let i = match self.poly_cum.binary_search_by(|c| c.total_cmp(&s)) {
                    Ok(i) => i.min(n - 1),
                    Err(i) => i - 1,
                };
                let e = self.poly[(i + 1) % n] - self.poly[i];
                let l = self.poly_cum[i + 1] - self.poly_cum[i];
                self.poly[i] + e * ((s - self.poly_cum[i]) / l)
            }
        }
    }

    /// `∫ (x dy − y dx)/2` along the boundary, counter-clockwise from parameter `s0` to `s1 >= s0`.
    pub fn arc_green(&self, s0: f64, s1: f64) -> f64 {
        match &self.shape {
            Shape::Disk { center, radius } => {
                let (cx, cy, r) = (center[0], center[1], *radius);
                0.5 * (r * r * (s1 - s0) + r * (cx * (s1.sin() - s0.sin()) - cy * (s1.cos() - s0.cos())))
            }
            Shape::Ellipse { center, semi_axes } => {
                let (cx, cy, a, b) = (center[0], center[1], semi_axes[0], semi_axes[1]);
                0.5 * (a * b * (s1 - s0) + cx * b * (s1.sin() - s0.sin()) - cy * a * (s1.cos() - s0.cos()))
            }
            Shape::Polygon { .. } => {
                let pts = self.arc_points(s0, s1, 0.0);
                pts.windows(2).map(|w| 0.5 * cross(w[0], w[1])).sum()
            }
        }
    }

    /// Points along the boundary from `s0` to `s1 >= s0`, spaced at most `h` apart
    /// (polygon corners are always included; `h <= 0` keeps only the corners).
    pub fn arc_points(&self, s0: f64, s1: f64, h: f64) -> Vec<Vec2> {
        match &self.shape {
            Shape::Polygon { .. } => {
                let period = self.boundary_period();
                let n = self.poly.len();
                let mut out = vec![self.boundary_point(s0)];
                // corners strictly inside (s0, s1), unrolled over periods
                let start_turn = (s0 / period).floor();
                let mut turn = start_turn;
                'outer: loop {
                    for i in 0..n {
                        let c = turn * period + self.poly_cum[i];
                        if c <= s0 {
                            continue;
                        }
                        if c >= s1 {
                            break 'outer;
                        }
                        push_subdivided(&mut out, self.poly[i], h);
                    }
                    turn += 1.0;
                }
                push_subdivided(&mut out, self.boundary_point(s1), h);
                out
            }
            _ => {
                let (lo, hi) = self.bounding_box();
                let scale = 0.5 * (hi - lo).max();
                let m = if h > 0.0 { ((s1 - s0) * scale / h).ceil().max(1.0) as usize } else { 64 };
                (0..=m).map(|i| self.boundary_point(s0 + (s1 - s0) * i as f64 / m as f64)).collect()
            }
        }
    }
}

fn push_subdivided(out: &mut Vec<Vec2>, p: Vec2, h: f64) {
    let last = *out.last().unwrap();
    let l = (p - last).norm();
    if h > 0.0 && l > h {
        let m = (l / h).ceil() as usize;
        for i in 1..m {
            out.push(last + (p - last) * (i as f64 / m as f64));
        }
    }
    out.push(p);
}

/// Nearest point on the axis-aligned ellipse `(x/a)^2 + (y/b)^2 = 1` (centered at the origin).
fn ellipse_nearest(a: f64, b: f64, p: Vec2) -> (Vec2, f64) {
    // reduce to the first quadrant with e0 >= e1
    let swap = b > a;
    let (e0, e1) = if swap { (b, a) } else { (a, b) };
    let (mut y0, mut y1) = if swap { (p.y, p.x) } else { (p.x, p.y) };
    let (s0, s1) = (y0.signum(), y1.signum());
    y0 = y0.abs();
    y1 = y1.abs();
    let (x0, x1) = if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g != 0.0 {
                let r0 = (e0 / e1).powi(2);
                let sbar = ellipse_root(r0, z0, z1, g);
                (r0 * y0 / (sbar + r0), y1 / (sbar + 1.0))
            } else {
                (y0, y1)
            }
        } else {
            (0.0, e1)
        }
    } else {
        let numer0 = e0 * y0;
        let denom0 = e0 * e0 - e1 * e1;
        if numer0 < denom0 {
            let xde0 = numer0 / denom0;
            (e0 * xde0, e1 * (1.0 - xde0 * xde0).max(0.0).sqrt())
        } else {
            (e0, 0.0)
        }
    };
    let d = ((x0 - y0).powi(2) + (x1 - y1).powi(2)).sqrt();
    let (x0, x1) = (x0 * if s0 < 0.0 { -1.0 } else { 1.0 }, x1 * if s1 < 0.0 { -1.0 } else { 1.0 });
    let q = if swap { v2(x1, x0) } else { v2(x0, x1) };
    (q, d)
}

fn ellipse_root(r0: f64, z0: f64, z1: f64, g: f64) -> f64 {
    let n0 = r0 * z0;
    let mut s0 = z1 - 1.0;
    let mut s1 = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
    let mut s = 0.0;
    for _ in 0..1100 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let r0s = n0 / (s + r0);
        let r1s = z1 / (s + 1.0);
        let gs = r0s * r0s + r1s * r1s - 1.0;
        if gs > 0.0 {
            s0 = s;
        } else if gs < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    s
}

/// Scale index for the region system: `j` is the scheme scale, `k` the epoch counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionIndex {
    pub j: u64,
    pub k: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionFlags {
    pub in_dj: bool,
    pub in_djk: bool,
    pub in_kj: bool,
    pub in_kj_tilde: bool,
    pub in_kj_hat: bool,
}

/// The sets `D_j`, `D_{j,k}` and the neighborhoods `K_j ⊂ K̃_j ⊂ K̂_j` of the frozen
/// anchor set (the part of the initial network outside `D_j`).
#[derive(Debug, Clone)]
pub struct RegionSystem {
    pub domain: ConvexDomain,
    pub j: u64,
    pub anchor: Vec<Segment>,
}

impl RegionSystem {
    /// Build from the initial network segments; the anchor set is clipped to the complement of `D_j`.
    pub fn new(domain: ConvexDomain, j: u64, initial: &[Segment]) -> Self {
        let r = dj_depth(j);
        let anchor = initial.iter().flat_map(|s| clip_outside(&domain, s, r)).collect();
        RegionSystem { domain, j, anchor }
    }

    pub fn with_anchor(domain: ConvexDomain, j: u64, anchor: Vec<Segment>) -> Self {
        RegionSystem { domain, j, anchor }
    }

    pub fn dj_depth(&self) -> f64 {
        dj_depth(self.j)
    }

    /// Depth of `D_{j,k}`: `1/j^{1/4} − k exp(−j^{1/8})`.
    pub fn djk_depth(&self, k: u64) -> f64 {
        djk_depth(self.j, k)
    }

    pub fn anchor_distance(&self, p: Vec2) -> f64 {
        distance_to_segments(&self.anchor, p)
    }

    pub fn classify(&self, k: u64, p: Vec2) -> RegionFlags {
        let sd = self.domain.signed_distance(p);
        let jf = self.j as f64;
        let da = self.anchor_distance(p);
        RegionFlags {
            in_dj: sd >= self.dj_depth(),
            in_djk: sd >= self.djk_depth(k),
            in_kj: da < jf.powf(-0.25),
            in_kj_tilde: da < 2.0 * jf.powf(-0.25),
            in_kj_hat: da < 3.0 * jf.powf(-0.125),
        }
    }
}

pub fn dj_depth(j: u64) -> f64 {
    2.0 * (j as f64).powf(-0.25)
}

pub fn djk_depth(j: u64, k: u64) -> f64 {
    let jf = j as f64;
    jf.powf(-0.25) - k as f64 * (-jf.powf(0.125)).exp()
}

/// The parts of `s` where the signed distance is below `r` (zero, one or two pieces).
/// The signed distance of a convex domain is concave, so `{d >= r}` meets a segment in an interval.
pub fn clip_outside(domain: &ConvexDomain, s: &Segment, r: f64) -> Vec<Segment> {
    let f = |t: f64| domain.signed_distance(s.a + (s.b - s.a) * t);
    // maximize the concave profile by golden-section search
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let tm = 0.5 * (lo + hi);
    let tmax = [0.0, tm, 1.0].into_iter().max_by(|a, b| f(*a).total_cmp(&f(*b))).unwrap();
    if f(tmax) < r {
        return vec![*s];
    }
    let bisect = |mut inside: f64, mut outside: f64| {
        for _ in 0..200 {
            let m = 0.5 * (inside + outside);
            if m == inside || m == outside {
                break;
            }
            if f(m) >= r {
                inside = m;
            } else {
                outside = m;
            }
        }
        outside
    };
    let at = |t: f64| s.a + (s.b - s.a) * t;
    let mut out = vec![];
    if f(0.0) < r {
        let t0 = bisect(tmax, 0.0);
        out.push(Segment::new(s.a, at(t0)));
    }
    if f(1.0) < r {
        let t1 = bisect(tmax, 1.0);
        out.push(Segment::new(at(t1), s.b));
    }
    out
}

/// Counter-clockwise convex polygon (possibly degenerate: one point or a segment).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    pub vertices: Vec<Vec2>,
}

pub const HULL_TOL: f64 = 1e-12;

/// Andrew's monotone chain; collinear points on hull edges are dropped.
pub fn convex_hull(points: &[Vec2]) -> ConvexPolygon {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() <= 2 {
        return ConvexPolygon { vertices: pts };
    }
    let mut lower: Vec<Vec2> = vec![];
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 1] - lower[lower.len() - 2], p - lower[lower.len() - 2]) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Vec2> = vec![];
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 1] - upper[upper.len() - 2], p - upper[upper.len() - 2]) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    ConvexPolygon { vertices: lower }
}

impl ConvexPolygon {
    /// Positive inside, negative outside; for degenerate hulls, minus the distance to the point set.
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        let n = self.vertices.len();
        match n {
            0 => f64::NEG_INFINITY,
            1 => -(p - self.vertices[0]).norm(),
            2 => -Segment::new(self.vertices[0], self.vertices[1]).distance(p),
            _ => {
                let mut inside = true;
                let mut d = f64::INFINITY;
                for i in 0..n {
                    let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
                    if cross(b - a, p - a) < 0.0 {
                        inside = false;
                    }
                    d = d.min(Segment::new(a, b).distance(p));
                }
                if inside {
                    d
                } else {
                    -d
                }
            }
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.signed_distance(p) >= -HULL_TOL
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n).map(|i| cross(self.vertices[i], self.vertices[(i + 1) % n])).sum::<f64>()
    }
}
