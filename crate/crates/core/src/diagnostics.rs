//! Measurements along a trajectory: masses against test functions, dissipation,
//! Brakke residuals, junction angles, phase areas, confinement and boundary drift.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cutoff::DampingField;
use crate::driver::Trajectory;
use crate::geometry::{convex_hull, dj_depth, v2, ConvexDomain, ConvexPolygon, Mat2, Vec2, HULL_TOL};
use crate::kernel::SmoothingKernel;
use crate::partition::{EdgeEnd, LabeledNetwork, VertexKind};
use crate::varifold::{slice, CurvatureField, ScalarField, VarifoldSlice};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("test function `{name}` needs j >= {needed}, run uses j = {j}")]
    NotAdmissible { name: String, needed: u64, j: u64 },
    #[error("no test function named `{0}`")]
    UnknownFunction(String),
    #[error("no snapshot at t = {0}")]
    NoSnapshot(f64),
    #[error("need t1 < t2, got {0} and {1}")]
    Interval(f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunctionKind {
    Constant,
    /// `exp(−|x−c|²/2σ²)`.
    Gaussian { center: Vec2, sigma: f64 },
    /// `s + (1−s) b((x−c)/ρ)` with the unit bump `b(y) = exp(1 − 1/(1−|y|²))`.
    Bump { center: Vec2, radius: f64, floor: f64 },
    /// `(s + d_A⁴)/M` with `d_A(x) = max(n·x − c, 0)`.
    Barrier { normal: Vec2, offset: f64, s: f64, scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub name: String,
    pub kind: TestFunctionKind,
    /// Smallest `j` with `|∇φ| ≤ jφ` and `‖∇²φ‖ ≤ jφ` at every sampled point.
    pub class_a_j: u64,
    /// Non-decreasing along the outward normal in the boundary band outside `D_j`.
    pub radially_nondecreasing: bool,
}

fn hessian_norm(m: &Mat2) -> f64 {
    let (a, b, d) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mid + rad).abs().max((mid - rad).abs())
}

impl TestFunction {
    /// Build and tag `kind`. Every kind is radial about a center or depends only on the
    /// distance to a line, so the ratios `|∇φ|/φ` and `‖∇²φ‖/φ` are scanned along one ray
    /// that spans the domain's bounding box.
    pub fn tagged(name: &str, kind: TestFunctionKind, domain: &ConvexDomain, j: u64) -> Self {
        let mut f = TestFunction { name: name.into(), kind, class_a_j: 1, radially_nondecreasing: true };
        let (lo, hi) = domain.bounding_box();
        let corners = [lo, hi, v2(lo.x, hi.y), v2(hi.x, lo.y)];
        let (origin, dir, reach) = match &f.kind {
            TestFunctionKind::Constant => (lo, v2(1.0, 0.0), 0.0),
            TestFunctionKind::Gaussian { center, .. } | TestFunctionKind::Bump { center, .. } => {
                (*center, v2(1.0, 0.0), corners.iter().map(|c| (c - center).norm()).fold(0.0, f64::max))
            }
            TestFunctionKind::Barrier { normal, offset, .. } => {
                let base = *normal * *offset;
                (base, *normal, corners.iter().map(|c| normal.dot(c) - offset).fold(0.0, f64::max))
            }
        };
        let n = 100_000;
        let mut worst: f64 = 0.0;
        for i in 0..=n {
            let x = origin + dir * (reach * i as f64 / n as f64);
            let v = f.value(x);
            worst = worst.max(f.gradient(x).norm() / v).max(hessian_norm(&f.hessian(x)) / v);
        }
        // relative margin for the sampling error of the smooth profile
        f.class_a_j = ((worst * (1.0 + 1e-6)).ceil() as u64).max(1);
        let band = dj_depth(j).min(domain.tube());
        let period = domain.boundary_period();
        'outer: for a in 0..1000 {
            let q = domain.boundary_point(period * a as f64 / 1000.0);
            let Ok(nu) = domain.outward_normal(q) else { continue };
            for b in 0..10 {
                let x = q - nu * (band * b as f64 / 10.0);
                if f.gradient(x).dot(&nu) < -1e-12 {
                    f.radially_nondecreasing = false;
                    break 'outer;
                }
            }
        }
        f
    }
}

impl ScalarField for TestFunction {
    fn value(&self, x: Vec2) -> f64 {
        match &self.kind {
            TestFunctionKind::Constant => 1.0,
            TestFunctionKind::Gaussian { center, sigma } => (-(x - center).norm_squared() / (2.0 * sigma * sigma)).exp(),
            TestFunctionKind::Bump { center, radius, floor } => {
                let q = (x - center).norm_squared() / (radius * radius);
                let b = if q < 1.0 { (1.0 - 1.0 / (1.0 - q)).exp() } else { 0.0 };
                floor + (1.0 - floor) * b
            }
            TestFunctionKind::Barrier { normal, offset, s, scale } => {
                let d = (normal.dot(&x) - offset).max(0.0);
                (s + d.powi(4)) / scale
            }
        }
    }

    fn gradient(&self, x: Vec2) -> Vec2 {
        match &self.kind {
            TestFunctionKind::Constant => Vec2::zeros(),
            TestFunctionKind::Gaussian { center, sigma } => -(x - center) / (sigma * sigma) * self.value(x),
            TestFunctionKind::Bump { center, radius, floor } => {
                let q = (x - center).norm_squared() / (radius * radius);
                if q >= 1.0 {
                    return Vec2::zeros();
                }
                let u = 1.0 / (1.0 - q);
                let b = (1.0 - u).exp();
                let gq = (x - center) * (2.0 / (radius * radius));
                -gq * (b * u * u * (1.0 - floor))
            }
            TestFunctionKind::Barrier { normal, offset, scale, .. } => {
                let d = (normal.dot(&x) - offset).max(0.0);
                normal * (4.0 * d.powi(3) / scale)
            }
        }
    }

    fn hessian(&self, x: Vec2) -> Mat2 {
        match &self.kind {
            TestFunctionKind::Constant => Mat2::zeros(),
            TestFunctionKind::Gaussian { center, sigma } => {
                let d = x - center;
                let s2 = sigma * sigma;
                (d * d.transpose() / (s2 * s2) - Mat2::identity() / s2) * self.value(x)
            }
            TestFunctionKind::Bump { center, radius, floor } => {
                let r2 = radius * radius;
                let q = (x - center).norm_squared() / r2;
                if q >= 1.0 {
                    return Mat2::zeros();
                }
                let u = 1.0 / (1.0 - q);
                let b = (1.0 - u).exp();
                let gq = (x - center) * (2.0 / r2);
                let hq = Mat2::identity() * (2.0 / r2);
                (gq * gq.transpose() * (u.powi(4) - 2.0 * u.powi(3)) - hq * (u * u)) * (b * (1.0 - floor))
            }
            TestFunctionKind::Barrier { normal, offset, scale, .. } => {
                let d = (normal.dot(&x) - offset).max(0.0);
                normal * normal.transpose() * (12.0 * d * d / scale)
            }
        }
    }

    fn analytic(&self) -> bool {
        true
    }
}

/// The finite family of test functions used for the inequality checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionFamily {
    pub functions: Vec<TestFunction>,
}

impl TestFunctionFamily {
    /// Constant, two Gaussians, a floored bump and the barrier above the hull of `initial`.
    pub fn standard(domain: &ConvexDomain, initial: &[Vec2], j: u64) -> Self {
        let c = domain.centroid();
        let scale = domain.signed_distance(c).max(1e-3);
        let mut functions = vec![
            TestFunction::tagged("one", TestFunctionKind::Constant, domain, j),
            TestFunction::tagged("gauss-center", TestFunctionKind::Gaussian { center: c, sigma: 0.4 * scale }, domain, j),
            TestFunction::tagged(
                "gauss-offset",
                TestFunctionKind::Gaussian { center: c + v2(0.3, 0.2) * scale, sigma: 0.3 * scale },
                domain,
                j,
            ),
            TestFunction::tagged("bump", TestFunctionKind::Bump { center: c, radius: 0.6 * scale, floor: 0.1 }, domain, j),
        ];
        let top = initial.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
        let (_, hi) = domain.bounding_box();
        let reach = hi.y - top;
        if top.is_finite() && reach > 0.0 {
            let d4 = reach.powi(4);
            let kind = TestFunctionKind::Barrier { normal: v2(0.0, 1.0), offset: top, s: 0.1 * d4, scale: 1.1 * d4 };
            functions.push(TestFunction::tagged("barrier", kind, domain, j));
        }
        TestFunctionFamily { functions }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.functions.iter().map(|f| f.name.clone()).collect()
    }
}

/// What happened during the epoch that produced a state (all zero at `t = 0`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochCounts {
    pub reduce_accepted: usize,
    pub reduce_rejected: usize,
    pub retracted: usize,
    pub surgery: usize,
    pub flow_retries: usize,
    /// Points whose flow displacement exceeded the motion cap.
    pub exceedances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub length: f64,
    /// `‖V‖(φ_q)` per family member.
    pub masses: Vec<f64>,
    /// `Σ w η [−φ|h_ε|² + h_ε·∇φ]` per family member.
    pub brakke_rates: Vec<f64>,
    /// `Σ w η |h_ε|²`.
    pub dissipation: f64,
    /// `max |η h_ε|` over the quadrature samples.
    pub max_eta_h: f64,
    /// `max |η h_ε · n|` over the quadrature samples, `n` the unit normal; tangential motion
    /// only reparametrizes the network.
    pub max_normal_speed: f64,
    pub junction_angles: Vec<Vec<f64>>,
    pub phase_areas: Vec<f64>,
    pub hull_margin: f64,
    pub boundary_drift: f64,
    pub counts: EpochCounts,
}

/// Direction in which edge end `end` leaves its vertex, taken as the secant to the point at
/// arc length `scale` along the edge (the far end if the edge is shorter). `scale = 0` gives
/// the first segment.
pub fn edge_direction(net: &LabeledNetwork, end: &EdgeEnd, scale: f64) -> Vec2 {
    let mut pl = net.polyline(end.edge);
    if !end.at_start {
        pl.reverse();
    }
    let mut s = 0.0;
    let mut target = pl[pl.len() - 1];
    for w in pl.windows(2) {
        let seg = (w[1] - w[0]).norm();
        if seg > 0.0 && s + seg >= scale {
            target = if scale <= 0.0 { w[1] } else { w[0] + (w[1] - w[0]) * ((scale - s) / seg) };
            break;
        }
        s += seg;
    }
    let d = target - pl[0];
    let n = d.norm();
    if n > 0.0 {
        d / n
    } else {
        end.dir
    }
}

/// Sorted angles (degrees) between consecutive edge directions at every junction, each
/// direction measured by [`edge_direction`] at `scale`.
///
/// Below the kernel width the flow does not resolve the network, so the run records use
/// `scale = ε`.
pub fn junction_angles(net: &LabeledNetwork, scale: f64) -> Vec<Vec<f64>> {
    let mut out = vec![];
    for v in 0..net.vertices.len() {
        if net.vertices[v].kind != VertexKind::Junction {
            continue;
        }
        let mut th: Vec<f64> = net
            .edge_ends(v)
            .iter()
            .map(|e| {
                let d = edge_direction(net, e, scale);
                d.y.atan2(d.x)
            })
            .collect();
        th.sort_by(f64::total_cmp);
        let n = th.len();
        let mut angles: Vec<f64> = (0..n)
            .map(|i| {
                let d = if i + 1 < n { th[i + 1] - th[i] } else { th[0] + std::f64::consts::TAU - th[n - 1] };
                d.to_degrees()
            })
            .collect();
        angles.sort_by(f64::total_cmp);
        out.push(angles);
    }
    out
}

/// Everything needed to measure a state; fixed for a run.
#[derive(Debug, Clone)]
pub struct Probe {
    pub kernel: SmoothingKernel,
    pub damping: DampingField,
    pub family: TestFunctionFamily,
    /// Convex hull of `Γ₀ ∪ ∂Γ₀`.
    pub hull: ConvexPolygon,
    /// Initial anchor positions `∂Γ₀`.
    pub anchors0: Vec<Vec2>,
    pub h_quad: f64,
}

impl Probe {
    pub fn new(initial: &LabeledNetwork, kernel: SmoothingKernel, damping: DampingField, family: TestFunctionFamily, h_quad: f64) -> Self {
        let anchors0 = initial.anchors().iter().map(|&v| initial.vertices[v].pos).collect();
        Probe { kernel, damping, family, hull: convex_hull(&initial.points()), anchors0, h_quad }
    }

    /// Minimum over points of the signed distance to the hull boundary; points within the hull
    /// tolerance count as inside.
    pub fn hull_margin(&self, net: &LabeledNetwork) -> f64 {
        net.points()
            .iter()
            .map(|&p| {
                let d = self.hull.signed_distance(p);
                if d >= -HULL_TOL {
                    d.max(0.0)
                } else {
                    d
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest distance from a current anchor to the initial anchor set.
    pub fn boundary_drift(&self, net: &LabeledNetwork) -> f64 {
        net.anchors()
            .iter()
            .map(|&v| {
                let p = net.vertices[v].pos;
                self.anchors0.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    /// Record for `net` at time `t`, plus the curvature field it was computed from.
    pub fn measure(&self, net: &LabeledNetwork, t: f64) -> (DiagnosticsRecord, CurvatureField, VarifoldSlice) {
        let sl = slice(net, self.h_quad);
        let field = CurvatureField::new(&sl, &self.kernel);
        let xs: Vec<Vec2> = sl.samples.iter().map(|s| s.x).collect();
        let h = field.h_many(&xs);
        let eta: Vec<f64> = xs.iter().map(|&x| self.damping.eta(x)).collect();
        let nf = self.family.functions.len();
        let mut masses = vec![0.0; nf];
        let mut rates = vec![0.0; nf];
        let mut dissipation = 0.0;
        let mut max_eta_h: f64 = 0.0;
        let mut max_normal_speed: f64 = 0.0;
        for (i, s) in sl.samples.iter().enumerate() {
            let h2 = h[i].norm_squared();
            dissipation += s.w * eta[i] * h2;
            max_eta_h = max_eta_h.max(eta[i] * h2.sqrt());
            max_normal_speed = max_normal_speed.max(eta[i] * crate::geometry::cross(s.tau, h[i]).abs());
            for (q, f) in self.family.functions.iter().enumerate() {
                let phi = f.value(s.x);
                masses[q] += s.w * phi;
                rates[q] += s.w * eta[i] * (-phi * h2 + h[i].dot(&f.gradient(s.x)));
            }
        }
        let rec = DiagnosticsRecord {
            t,
            length: net.length(),
            masses,
            brakke_rates: rates,
            dissipation,
            max_eta_h,
            max_normal_speed,
            junction_angles: junction_angles(net, self.kernel.eps()),
            phase_areas: net.phase_areas_unchecked().areas,
            hull_margin: self.hull_margin(net),
            boundary_drift: self.boundary_drift(net),
            counts: EpochCounts::default(),
        };
        (rec, field, sl)
    }
}

/// Quadrature budget `10 (h_quad + h_max²) L (t2 − t1)`.
pub fn quadrature_budget(h_quad: f64, h_max: f64, length: f64, span: f64) -> f64 {
    10.0 * (h_quad + h_max * h_max) * length * span
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrakkeResidual {
    pub residual: f64,
    pub slack: f64,
    /// `Σ dt Σ w η φ |h_ε|²`-type magnitude: the absolute time-integrated rate.
    pub magnitude: f64,
}

fn entry_at(traj: &Trajectory, t: f64) -> Result<usize, DiagnosticsError> {
    traj.entries.iter().position(|e| e.t == t).ok_or(DiagnosticsError::NoSnapshot(t))
}

/// `‖V‖(φ)|_{t1}^{t2} − Σ dt Σ w η [−φ|h_ε|² + h_ε·∇φ]`, which Brakke's inequality predicts is at most the slack.
pub fn brakke_residual(traj: &Trajectory, phi: &str, t1: f64, t2: f64) -> Result<BrakkeResidual, DiagnosticsError> {
    let q = traj.family.index_of(phi).ok_or_else(|| DiagnosticsError::UnknownFunction(phi.into()))?;
    let f = &traj.family.functions[q];
    if f.class_a_j > traj.config.j {
        return Err(DiagnosticsError::NotAdmissible { name: f.name.clone(), needed: f.class_a_j, j: traj.config.j });
    }
    if !(t1 < t2) {
        return Err(DiagnosticsError::Interval(t1, t2));
    }
    let (i1, i2) = (entry_at(traj, t1)?, entry_at(traj, t2)?);
    Ok(residual_between(traj, q, i1, i2))
}

/// Residual between entry indices `i1 < i2` for family member `q`.
pub fn residual_between(traj: &Trajectory, q: usize, i1: usize, i2: usize) -> BrakkeResidual {
    let e = &traj.entries;
    let mut integral = 0.0;
    let mut magnitude = 0.0;
    let mut lmax: f64 = 0.0;
    for k in i1..i2 {
        integral += e[k].dt * e[k].record.brakke_rates[q];
        magnitude += e[k].dt * e[k].record.brakke_rates[q].abs();
        lmax = lmax.max(e[k].record.length);
    }
    lmax = lmax.max(e[i2].record.length);
    let span = e[i2].t - e[i1].t;
    let c = &traj.config;
    let slack = span * c.eps.powf(0.125) + quadrature_budget(c.h_quad, c.h_max, lmax, span);
    BrakkeResidual { residual: e[i2].record.masses[q] - e[i1].record.masses[q] - integral, slack, magnitude }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipationReport {
    /// Final length plus `Σ dt Σ w η |h_ε|²`.
    pub left: f64,
    /// Initial length.
    pub right: f64,
    pub cumulative_dissipation: f64,
    /// `T ε^{1/6}` plus the quadrature budget.
    pub slack: f64,
}

impl DissipationReport {
    pub fn holds(&self) -> bool {
        self.left <= self.right + self.slack
    }
}

pub fn dissipation_report(traj: &Trajectory) -> DissipationReport {
    let e = &traj.entries;
    let last = e.len() - 1;
    let cum: f64 = e[..last].iter().map(|x| x.dt * x.record.dissipation).sum();
    let span = e[last].t - e[0].t;
    let c = &traj.config;
    let slack = span * c.eps.powf(1.0 / 6.0) + quadrature_budget(c.h_quad, c.h_max, e[0].record.length, span);
    DissipationReport { left: e[last].record.length + cum, right: e[0].record.length, cumulative_dissipation: cum, slack }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeReport {
    pub window_start: f64,
    /// Per phase `sup |a(t) − a(s)| / |t − s|^{1/2}` over snapshot pairs in the window.
    pub constants: Vec<f64>,
}

pub fn volume_continuity(traj: &Trajectory, window_start: f64) -> VolumeReport {
    let snaps: Vec<&crate::driver::TrajectoryEntry> =
        traj.entries.iter().filter(|e| e.snapshot.is_some() && e.t >= window_start).collect();
    let n = traj.entries.first().map(|e| e.record.phase_areas.len()).unwrap_or(0);
    let mut constants = vec![0.0f64; n];
    for a in 0..snaps.len() {
        for b in a + 1..snaps.len() {
            let dt = (snaps[b].t - snaps[a].t).sqrt();
            if dt <= 0.0 {
                continue;
            }
            for (i, c) in constants.iter_mut().enumerate() {
                let d = (snaps[b].record.phase_areas[i] - snaps[a].record.phase_areas[i]).abs();
                *c = c.max(d / dt);
            }
        }
    }
    VolumeReport { window_start, constants }
}

/// A separating line `n·x = c` with the initial network in `{n·x ≤ c}`, and a test disk beyond it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierTest {
    pub normal: Vec2,
    pub offset: f64,
    pub center: Vec2,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfinementReport {
    pub min_hull_margin: f64,
    pub margin_violations: usize,
    pub max_drift: f64,
    pub drift_violations: usize,
    /// Largest network length inside the barrier disk over all snapshots.
    pub barrier_mass: Option<f64>,
}

pub fn confinement_and_boundary(traj: &Trajectory, drift_bound: f64, barrier: Option<&BarrierTest>) -> ConfinementReport {
    let h_max = traj.config.h_max;
    let mut rep = ConfinementReport {
        min_hull_margin: f64::INFINITY,
        margin_violations: 0,
        max_drift: 0.0,
        drift_violations: 0,
        barrier_mass: None,
    };
    for e in &traj.entries {
        rep.min_hull_margin = rep.min_hull_margin.min(e.record.hull_margin);
        rep.margin_violations += (e.record.hull_margin < -h_max) as usize;
        rep.max_drift = rep.max_drift.max(e.record.boundary_drift);
        rep.drift_violations += (e.record.boundary_drift > drift_bound) as usize;
    }
    if let Some(b) = barrier {
        let mut worst: f64 = 0.0;
        for s in &traj.snapshots {
            let sl = slice(&s.network, traj.config.h_quad);
            let m: f64 = sl.samples.iter().filter(|x| (x.x - b.center).norm() < b.radius).map(|x| x.w).sum();
            worst = worst.max(m);
        }
        rep.barrier_mass = Some(worst);
    }
    rep
}
