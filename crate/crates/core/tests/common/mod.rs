#![allow(dead_code)]

use brakke_core::geometry::{v2, ConvexDomain, Vec2};
use brakke_core::partition::{Edge, LabeledNetwork, Vertex, VertexKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_point(r: &mut ChaCha8Rng, half: f64) -> Vec2 {
    v2(r.gen_range(-half..half), r.gen_range(-half..half))
}

/// Closed circle as a single loop edge; `inside` labels the enclosed phase.
pub fn circle(domain: ConvexDomain, center: Vec2, radius: f64, n: usize, inside: u32, outside: u32) -> LabeledNetwork {
    let pts: Vec<Vec2> = (0..n)
        .map(|i| {
            let t = i as f64 / n as f64 * std::f64::consts::TAU;
            center + v2(t.cos(), t.sin()) * radius
        })
        .collect();
    LabeledNetwork {
        domain,
        phases: inside.max(outside),
        vertices: vec![Vertex { pos: pts[0], kind: VertexKind::Interior }],
        edges: vec![Edge { a: 0, b: 0, interior: pts[1..].to_vec(), left: inside, right: outside }],
        background: outside,
    }
}

/// Straight edge between two anchors of the unit disk.
pub fn chord(a: Vec2, b: Vec2, left: u32, right: u32) -> LabeledNetwork {
    LabeledNetwork {
        domain: ConvexDomain::unit_disk(),
        phases: left.max(right),
        vertices: vec![Vertex { pos: a, kind: VertexKind::Anchor }, Vertex { pos: b, kind: VertexKind::Anchor }],
        edges: vec![Edge { a: 0, b: 1, interior: vec![], left, right }],
        background: 1,
    }
}

/// Open straight polyline (not attached to anything), useful for slices only.
pub fn line(a: Vec2, b: Vec2, n: usize) -> LabeledNetwork {
    let interior = (1..n).map(|i| a + (b - a) * (i as f64 / n as f64)).collect();
    LabeledNetwork {
        domain: ConvexDomain::disk(Vec2::zeros(), 100.0).unwrap(),
        phases: 2,
        vertices: vec![Vertex { pos: a, kind: VertexKind::Anchor }, Vertex { pos: b, kind: VertexKind::Anchor }],
        edges: vec![Edge { a: 0, b: 1, interior, left: 1, right: 2 }],
        background: 1,
    }
}

/// Largest absolute eigenvalue of a symmetric 2×2 matrix.
pub fn sym_norm(m: &brakke_core::geometry::Mat2) -> f64 {
    let (a, b, d) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mid + rad).abs().max((mid - rad).abs())
}

/// Outcome of checking the three damping-field properties at sampled points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaScan {
    pub j: u64,
    /// Points outside `K̂_j` where `η ≠ 1`.
    pub unit_violations: usize,
    /// Points of `K̃_j` where `η ∉ (0, exp(−j^{1/8})]`.
    pub small_violations: usize,
    /// Points where `|∇η| > j^{3/4} η` (finite differences) or `‖∇²η‖ > j^{3/4} η` (analytic jet).
    pub class_violations: usize,
    /// Points where `|∇η| > 2 j^{1/4} η` (finite differences).
    pub gradient_violations: usize,
    pub samples: usize,
}

/// Anchor used for the property scans: one straight piece, for which the raw distance is exact.
pub fn scan_anchor() -> Vec<brakke_core::geometry::Segment> {
    vec![brakke_core::geometry::Segment::new(v2(-1.0, 0.0), v2(-0.2, 0.0))]
}

/// Check the properties at `n` points split evenly between `K̃_j`, `K̂_j \ K̃_j` and a band outside `K̂_j`.
pub fn eta_scan(j: u64, n: usize, seed: u64) -> EtaScan {
    use brakke_core::cutoff::DampingField;
    use brakke_core::geometry::distance_to_segments;
    let anchor = scan_anchor();
    let f = DampingField::new(j, anchor.clone());
    let jf = j as f64;
    let (k_tilde, k_hat) = (2.0 * jf.powf(-0.25), 3.0 * jf.powf(-0.125));
    let mut r = rng(seed);
    let mut out = EtaScan { j, unit_violations: 0, small_violations: 0, class_violations: 0, gradient_violations: 0, samples: 0 };
    let step = 1e-4 * jf.powf(-0.25);
    let class = jf.powf(0.75);
    for i in 0..n {
        let (lo, hi) = match i % 3 {
            0 => (0.0, k_tilde),
            1 => (k_tilde, k_hat),
            _ => (k_hat, k_hat + 0.5),
        };
        // rejection sample a point whose anchor distance lies in [lo, hi)
        let x = loop {
            let s = r.gen_range(-1.0 - hi..-0.2 + hi);
            let y = r.gen_range(-hi..hi);
            let p = v2(s, y);
            let d = distance_to_segments(&anchor, p);
            if d >= lo && d < hi {
                break p;
            }
        };
        let eta = f.eta(x);
        match i % 3 {
            0 => {
                if !(eta > 0.0 && eta <= (-jf.powf(0.125)).exp()) {
                    out.small_violations += 1;
                }
            }
            2 => {
                if eta != 1.0 {
                    out.unit_violations += 1;
                }
            }
            _ => {}
        }
        let fd = |e: Vec2| (f.eta(x + e * step) - f.eta(x - e * step)) / (2.0 * step);
        let grad = v2(fd(v2(1.0, 0.0)), fd(v2(0.0, 1.0)));
        // The quadrature gradient jumps where a mollifier node crosses the anchor, so second
        // differences there measure the jump; the jet differentiates the convolution instead.
        let hess = f.eta_jet(x).hess;
        // relative slack for the finite-difference error
        let tol = 1.0 + 1e-4;
        if grad.norm() > class * eta * tol || sym_norm(&hess) > class * eta * tol {
            out.class_violations += 1;
        }
        if grad.norm() > 2.0 * jf.powf(0.25) * eta * tol {
            out.gradient_violations += 1;
        }
        out.samples += 1;
    }
    out
}

/// Random valid network in the unit disk: one junction joined to `k` anchors by wiggly
/// polylines. Sector `i` (label `i + 1`) lies counter-clockwise of spoke `i`.
/// Also returns each sector as a closed polygon, for point-in-polygon oracles.
pub fn random_star(r: &mut ChaCha8Rng, k: usize) -> (LabeledNetwork, Vec<Vec<Vec2>>) {
    use std::f64::consts::TAU;
    // well separated anchor angles
    let angles: Vec<f64> = loop {
        let mut a: Vec<f64> = (0..k).map(|_| r.gen_range(0.0..TAU)).collect();
        a.sort_by(f64::total_cmp);
        let ok = (0..k).all(|i| {
            let next = if i + 1 < k { a[i + 1] } else { a[0] + TAU };
            next - a[i] > 0.8
        });
        if ok {
            break a;
        }
    };
    let c = v2(r.gen_range(-0.15..0.15), r.gen_range(-0.15..0.15));
    let mut vertices = vec![Vertex { pos: c, kind: VertexKind::Junction }];
    let mut edges = vec![];
    let mut spokes = vec![];
    for (i, &a) in angles.iter().enumerate() {
        let end = v2(a.cos(), a.sin());
        vertices.push(Vertex { pos: end, kind: VertexKind::Anchor });
        let n = 12;
        let dir = end - c;
        let nrm = v2(-dir.y, dir.x).normalize();
        let interior: Vec<Vec2> = (1..n)
            .map(|m| {
                let s = m as f64 / n as f64;
                c + dir * s + nrm * (r.gen_range(-0.03..0.03) * (std::f64::consts::PI * s).sin())
            })
            .collect();
        let mut spoke = vec![c];
        spoke.extend(&interior);
        spoke.push(end);
        spokes.push((spoke, a));
        edges.push(Edge { a: 0, b: i + 1, interior, left: (i + 1) as u32, right: (if i == 0 { k } else { i }) as u32 });
    }
    let mut sectors = vec![];
    for i in 0..k {
        let (sp, a0) = &spokes[i];
        let (sq, a1) = &spokes[(i + 1) % k];
        let a1 = if *a1 <= *a0 { a1 + TAU } else { *a1 };
        let mut poly = sp.clone();
        let m = 400;
        for t in 1..m {
            let th = a0 + (a1 - a0) * t as f64 / m as f64;
            poly.push(v2(th.cos(), th.sin()));
        }
        poly.extend(sq.iter().rev().take(sq.len() - 1));
        sectors.push(poly);
    }
    let net = LabeledNetwork { domain: ConvexDomain::unit_disk(), phases: k as u32, vertices, edges, background: 1 };
    (net, sectors)
}

/// Even-odd point-in-polygon test.
pub fn in_polygon(poly: &[Vec2], p: Vec2) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a.y > p.y) != (b.y > p.y) && p.x < a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x) {
            inside = !inside;
        }
    }
    inside
}

/// Tally of a randomized batch of reduction calls.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReduceAudit {
    pub invocations: usize,
    pub accepted_moves: usize,
    pub length_increases: usize,
    pub cap_violations: usize,
    pub validation_failures: usize,
    pub errors: usize,
}

/// Rotate `v` about the origin by the angle whose cosine and sine are `c`, `s`.
fn rot(v: Vec2, c: f64, s: f64) -> Vec2 {
    v2(c * v.x - s * v.y, s * v.x + c * v.y)
}

/// Four-armed star whose junction is pulled apart into two triple junctions `delta` apart.
fn split_star(r: &mut ChaCha8Rng, delta: f64) -> Option<LabeledNetwork> {
    let (mut net, _) = random_star(r, 4);
    let c = net.vertices[0].pos;
    let u = (net.vertices[1].pos - c).normalize() + (net.vertices[2].pos - c).normalize();
    if u.norm() < 1e-6 {
        return None;
    }
    let u = u.normalize() * (0.5 * delta);
    net.vertices[0].pos = c - u;
    net.vertices.push(Vertex { pos: c + u, kind: VertexKind::Junction });
    let c2 = net.vertices.len() - 1;
    net.edges[0].a = c2;
    net.edges[1].a = c2;
    // the short edge separates the sector between spokes 1 and 2 from the one between 3 and 0
    for (left, right) in [(2, 4), (4, 2)] {
        let mut cand = net.clone();
        cand.edges.push(Edge { a: 0, b: c2, interior: vec![], left, right });
        if cand.validate().is_empty() {
            return Some(cand);
        }
    }
    None
}

/// Chord across the unit disk with a zigzag of amplitude `amp` and node spacing `step` in the middle.
fn zigzag_chord(r: &mut ChaCha8Rng, amp: f64, step: f64) -> LabeledNetwork {
    let th = r.gen_range(0.0..std::f64::consts::TAU);
    let (c, s) = (th.cos(), th.sin());
    let nodes = r.gen_range(3..40);
    let x0 = -0.5 * step * nodes as f64;
    let mut interior = vec![];
    for i in 0..=nodes {
        let y = if i == 0 || i == nodes { 0.0 } else { amp * r.gen_range(-1.0..1.0) };
        interior.push(rot(v2(x0 + step * i as f64, y), c, s));
    }
    let mut net = chord(rot(v2(-1.0, 0.0), c, s), rot(v2(1.0, 0.0), c, s), 1, 2);
    net.edges[0].interior = interior;
    net
}

/// A random valid network together with reduction parameters.
pub fn reduce_case(
    r: &mut ChaCha8Rng,
) -> (LabeledNetwork, brakke_core::geometry::RegionSystem, brakke_core::geometry::RegionIndex, brakke_core::steps::ReductionCaps) {
    use brakke_core::driver::jittered;
    use brakke_core::geometry::{RegionIndex, RegionSystem};
    use brakke_core::steps::ReductionCaps;
    loop {
        let (j, caps) = if r.gen_bool(0.2) {
            let j = [256u64, 1024][r.gen_range(0..2)];
            (j, ReductionCaps::paper(j))
        } else {
            let disp = 10f64.powf(r.gen_range(-3.3..-2.0));
            let area = disp * 10f64.powf(r.gen_range(-1.0..0.5));
            let min_turn = if r.gen_bool(0.3) { 0.0 } else { r.gen_range(0.0..0.3) };
            (1u64 << r.gen_range(12..36), ReductionCaps { disp, area, min_turn })
        };
        let base = match r.gen_range(0..3) {
            0 => {
                let k = r.gen_range(3..=5);
                let h = r.gen_range(0.01..0.05);
                random_star(r, k).0.resample(h)
            }
            1 => match {
                let delta = caps.disp * r.gen_range(0.2..2.0);
                split_star(r, delta)
            } {
                Some(n) => {
                    let h = r.gen_range(0.01..0.05);
                    n.resample(h)
                }
                None => continue,
            },
            _ => {
                let (amp, step) = (caps.disp * r.gen_range(0.1..1.5), caps.disp * r.gen_range(0.2..1.0));
                zigzag_chord(r, amp, step)
            }
        };
        let (amp, seed) = (caps.disp * r.gen_range(0.0..2.0), r.gen());
        let net = jittered(&base, amp, seed);
        if !net.validate().is_empty() {
            continue;
        }
        let rs = RegionSystem::new(net.domain.clone(), j, &net.segments());
        return (net, rs, RegionIndex { j, k: 1 }, caps);
    }
}

/// Run `n` randomized reductions and count every breach of the move contract.
pub fn audit_reductions(n: usize, seed: u64) -> ReduceAudit {
    use brakke_core::steps::reduce;
    let mut r = rng(seed);
    let mut a = ReduceAudit::default();
    for _ in 0..n {
        let (net, rs, idx, caps) = reduce_case(&mut r);
        a.invocations += 1;
        let Ok((out, excess, log)) = reduce(&net, &rs, idx, caps) else {
            a.errors += 1;
            continue;
        };
        let before = net.length();
        if out.length() > before || excess.achieved_reduction > 0.0 {
            a.length_increases += 1;
        }
        for m in log.iter().filter(|m| m.accepted) {
            a.accepted_moves += 1;
            if m.length_delta >= 0.0 {
                a.length_increases += 1;
            }
            if m.max_displacement > caps.disp || m.area_deltas.iter().any(|d| d.abs() > caps.area) {
                a.cap_violations += 1;
            }
        }
        if !out.validate().is_empty() {
            a.validation_failures += 1;
        }
    }
    a
}

/// Run a built-in scenario after adjusting its configuration.
pub fn run_builtin(name: &str, adjust: impl FnOnce(&mut brakke_core::io::config::FlowOverrides)) -> brakke_core::driver::Trajectory {
    let s = brakke_core::io::scenario::builtin(name).unwrap();
    let (net, _) = s.network().unwrap();
    let mut o = s.overrides.clone();
    adjust(&mut o);
    brakke_core::driver::run(&o.resolve().unwrap(), &net).unwrap()
}

/// Symmetric Hausdorff distance between two networks, with `samples` points per segment.
pub fn hausdorff(a: &LabeledNetwork, b: &LabeledNetwork, samples: usize) -> f64 {
    use brakke_core::geometry::distance_to_segments;
    let one_way = |x: &LabeledNetwork, y: &LabeledNetwork| {
        let ys = y.segments();
        x.segments()
            .iter()
            .flat_map(|s| (0..=samples).map(move |i| s.a + (s.b - s.a) * (i as f64 / samples as f64)))
            .map(|p| distance_to_segments(&ys, p))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

// 5-point Gauss–Legendre nodes and weights on [-1, 1]
const GL_X: [f64; 5] = [0.0, -0.538_469_310_105_683, 0.538_469_310_105_683, -0.906_179_845_938_664, 0.906_179_845_938_664];
const GL_W: [f64; 5] = [0.568_888_888_888_889, 0.478_628_670_499_366, 0.478_628_670_499_366, 0.236_926_885_056_189, 0.236_926_885_056_189];

/// Composite Gauss–Legendre over `[a, b]` with `panels` equal panels.
fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let mid = a + (i as f64 + 0.5) * h;
            GL_X.iter().zip(GL_W).map(|(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

/// Spherical-shell integral of the kernel, evaluated through the public point evaluator.
pub fn kernel_mass(k: &brakke_core::kernel::SmoothingKernel) -> f64 {
    let f = |r: f64| match k.dim() {
        2 => std::f64::consts::TAU * r * k.eval(&nalgebra::Vector2::new(r, 0.0)),
        _ => 4.0 * std::f64::consts::PI * r * r * k.eval(&nalgebra::Vector3::new(0.0, r, 0.0)),
    };
    gauss_legendre(f, 0.0, 1.0, 4000)
}
