//! Discrete varifold calculus on quadrature slices of a network.

use std::hash::{Hash, Hasher};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{Mat2, Vec2};
use crate::kernel::SmoothingKernel;
use crate::partition::LabeledNetwork;

/// Finite-difference step used when a field has no analytic derivative.
pub const FD_STEP: f64 = 1e-6;

pub trait ScalarField: Sync {
    fn value(&self, x: Vec2) -> f64;

    fn gradient(&self, x: Vec2) -> Vec2 {
        let h = FD_STEP;
        Vec2::new(
            self.value(x + Vec2::new(h, 0.0)) - self.value(x - Vec2::new(h, 0.0)),
            self.value(x + Vec2::new(0.0, h)) - self.value(x - Vec2::new(0.0, h)),
        ) / (2.0 * h)
    }

    fn hessian(&self, x: Vec2) -> Mat2 {
        let h = 1e-4;
        let gx = (self.gradient(x + Vec2::new(h, 0.0)) - self.gradient(x - Vec2::new(h, 0.0))) / (2.0 * h);
        let gy = (self.gradient(x + Vec2::new(0.0, h)) - self.gradient(x - Vec2::new(0.0, h))) / (2.0 * h);
        let m = Mat2::from_columns(&[gx, gy]);
        0.5 * (m + m.transpose())
    }

    /// False when derivatives come from finite differences.
    fn analytic(&self) -> bool {
        false
    }
}

pub trait VectorField: Sync {
    fn value(&self, x: Vec2) -> Vec2;

    /// `J[(i, k)] = ∂g_i/∂x_k`.
    fn jacobian(&self, x: Vec2) -> Mat2 {
        let h = FD_STEP;
        let dx = (self.value(x + Vec2::new(h, 0.0)) - self.value(x - Vec2::new(h, 0.0))) / (2.0 * h);
        let dy = (self.value(x + Vec2::new(0.0, h)) - self.value(x - Vec2::new(0.0, h))) / (2.0 * h);
        Mat2::from_columns(&[dx, dy])
    }

    fn analytic(&self) -> bool {
        false
    }
}

/// Closure wrapper whose derivatives come from finite differences.
pub struct FdScalar<F>(pub F);

impl<F: Fn(Vec2) -> f64 + Sync> ScalarField for FdScalar<F> {
    fn value(&self, x: Vec2) -> f64 {
        (self.0)(x)
    }
}

pub struct FdVector<F>(pub F);

impl<F: Fn(Vec2) -> Vec2 + Sync> VectorField for FdVector<F> {
    fn value(&self, x: Vec2) -> Vec2 {
        (self.0)(x)
    }
}

/// Vector field given together with its Jacobian.
pub struct AnalyticVector<F, J>(pub F, pub J);

impl<F: Fn(Vec2) -> Vec2 + Sync, J: Fn(Vec2) -> Mat2 + Sync> VectorField for AnalyticVector<F, J> {
    fn value(&self, x: Vec2) -> Vec2 {
        (self.0)(x)
    }
    fn jacobian(&self, x: Vec2) -> Mat2 {
        (self.1)(x)
    }
    fn analytic(&self) -> bool {
        true
    }
}

/// Scalar field given together with gradient and Hessian.
pub struct AnalyticScalar<F, G, H>(pub F, pub G, pub H);

impl<F, G, H> ScalarField for AnalyticScalar<F, G, H>
where
    F: Fn(Vec2) -> f64 + Sync,
    G: Fn(Vec2) -> Vec2 + Sync,
    H: Fn(Vec2) -> Mat2 + Sync,
{
    fn value(&self, x: Vec2) -> f64 {
        (self.0)(x)
    }
    fn gradient(&self, x: Vec2) -> Vec2 {
        (self.1)(x)
    }
    fn hessian(&self, x: Vec2) -> Mat2 {
        (self.2)(x)
    }
    fn analytic(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec2,
    pub tau: Vec2,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarifoldSlice {
    pub samples: Vec<Sample>,
    pub source_hash: u64,
}

pub fn network_hash(net: &LabeledNetwork) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    net.phases.hash(&mut h);
    for v in &net.vertices {
        v.pos.x.to_bits().hash(&mut h);
        v.pos.y.to_bits().hash(&mut h);
        v.kind.hash(&mut h);
    }
    for e in &net.edges {
        (e.a, e.b, e.left, e.right).hash(&mut h);
        for p in &e.interior {
            p.x.to_bits().hash(&mut h);
            p.y.to_bits().hash(&mut h);
        }
    }
    h.finish()
}

/// Midpoint quadrature: each segment is cut into `ceil(len / h_quad)` equal pieces.
pub fn slice(net: &LabeledNetwork, h_quad: f64) -> VarifoldSlice {
    assert!(h_quad > 0.0);
    let mut samples = vec![];
    for e in 0..net.edges.len() {
        for w in net.polyline(e).windows(2) {
            let d = w[1] - w[0];
            let len = d.norm();
            if len == 0.0 {
                continue;
            }
            let m = (len / h_quad).ceil().max(1.0) as usize;
            let tau = d / len;
            for i in 0..m {
                let x = w[0] + d * ((i as f64 + 0.5) / m as f64);
                samples.push(Sample { x, tau, w: len / m as f64 });
            }
        }
    }
    VarifoldSlice { samples, source_hash: network_hash(net) }
}

impl VarifoldSlice {
    pub fn total_weight(&self) -> f64 {
        self.samples.iter().map(|s| s.w).sum()
    }

    /// Uniformly dilated copy `x ↦ λx`.
    pub fn dilate(&self, lambda: f64) -> VarifoldSlice {
        VarifoldSlice {
            samples: self.samples.iter().map(|s| Sample { x: s.x * lambda, tau: s.tau, w: s.w * lambda }).collect(),
            source_hash: self.source_hash,
        }
    }
}

/// `‖V‖(φ) = Σ w φ(x)`.
pub fn mass(slice: &VarifoldSlice, phi: &impl Fn(Vec2) -> f64) -> f64 {
    slice.samples.iter().map(|s| s.w * phi(s.x)).sum()
}

/// `δV(g) = Σ w τ·(∇g τ)`.
pub fn first_variation(slice: &VarifoldSlice, g: &dyn VectorField) -> f64 {
    slice.samples.iter().map(|s| s.w * s.tau.dot(&(g.jacobian(s.x) * s.tau))).sum()
}

/// `Σ w [φ τ·(∇g τ) + g·∇φ]`.
pub fn weighted_first_variation(slice: &VarifoldSlice, phi: &dyn ScalarField, g: &dyn VectorField) -> f64 {
    slice
        .samples
        .iter()
        .map(|s| s.w * (phi.value(s.x) * s.tau.dot(&(g.jacobian(s.x) * s.tau)) + g.value(s.x).dot(&phi.gradient(s.x))))
        .sum()
}

/// `(Φ_ε ∗ ‖V‖)(x)`.
pub fn smoothed_weight(slice: &VarifoldSlice, kernel: &SmoothingKernel, x: Vec2) -> f64 {
    slice.samples.iter().map(|s| s.w * kernel.eval(&(x - s.x))).sum()
}

/// `(Φ_ε ∗ δV)(x) = Σ w (τ·∇Φ_ε(x_i − x)) τ`.
pub fn smoothed_first_variation(slice: &VarifoldSlice, kernel: &SmoothingKernel, x: Vec2) -> Vec2 {
    slice
        .samples
        .iter()
        .map(|s| s.tau * (s.w * s.tau.dot(&kernel.eval_grad(&(s.x - x)))))
        .fold(Vec2::zeros(), |a, b| a + b)
}

/// Smoothed mean curvature `h_ε = −Φ_ε ∗ (Φ_ε∗δV / (Φ_ε∗‖V‖ + ε))`.
///
/// The inner field is tabulated once on a global lattice of spacing `ε/4`
/// (nodes within the kernel's effective radius of some sample), then every query is an
/// outer quadrature sum over the lattice.
pub struct CurvatureField {
    kernel: SmoothingKernel,
    spacing: f64,
    i0: i64,
    j0: i64,
    nx: usize,
    ny: usize,
    /// Per node: `G = F/(W+ε)` (two components) and `W`.
    inner: Vec<[f64; 3]>,
}

impl CurvatureField {
    pub fn new(slice: &VarifoldSlice, kernel: &SmoothingKernel) -> Self {
        Self::with_spacing(slice, kernel, kernel.eps() / 4.0)
    }

    pub fn with_spacing(slice: &VarifoldSlice, kernel: &SmoothingKernel, spacing: f64) -> Self {
        let g = spacing;
        let rc = kernel.effective_radius();
        if slice.samples.is_empty() {
            return CurvatureField { kernel: *kernel, spacing: g, i0: 0, j0: 0, nx: 0, ny: 0, inner: vec![] };
        }
        let mut lo = slice.samples[0].x;
        let mut hi = lo;
        for s in &slice.samples {
            lo = lo.inf(&s.x);
            hi = hi.sup(&s.x);
        }
        let i0 = ((lo.x - rc) / g).floor() as i64 - 1;
        let j0 = ((lo.y - rc) / g).floor() as i64 - 1;
        let nx = (((hi.x + rc) / g).ceil() as i64 + 1 - i0 + 1) as usize;
        let ny = (((hi.y + rc) / g).ceil() as i64 + 1 - j0 + 1) as usize;
        let mut acc = vec![[0.0f64; 3]; nx * ny];
        let e2 = kernel.eps() * kernel.eps();
        let rc2 = rc * rc;
        let c0 = kernel.center_value();
        let gauss = kernel.gaussian_core();
        let mut ex: Vec<f64> = vec![];
        let mut ey: Vec<f64> = vec![];
        let mut exd: Vec<f64> = vec![];
        for s in &slice.samples {
            let ca = ((s.x.x - rc) / g).ceil() as i64;
            let cb = ((s.x.x + rc) / g).floor() as i64;
            let ra = ((s.x.y - rc) / g).ceil() as i64;
            let rb = ((s.x.y + rc) / g).floor() as i64;
            if gauss {
                // separable tables: Φ = c0·ex·ey and τ·∇Φ(x_i − y) = (τ·(y − x_i))/ε² Φ
                ex.clear();
                ey.clear();
                exd.clear();
                for c in ca..=cb {
                    let dx = c as f64 * g - s.x.x;
                    let e = (-dx * dx / (2.0 * e2)).exp();
                    ex.push(e);
                    exd.push(e * dx);
                }
                ey.extend((ra..=rb).map(|r| (-(r as f64 * g - s.x.y).powi(2) / (2.0 * e2)).exp()));
            }
            for r in ra..=rb {
                let dy = r as f64 * g - s.x.y;
                let Some((lo, hi)) = disk_row(s.x.x, dy, g, rc2, ca, cb) else { continue };
                let row = ((r - j0) as usize) * nx;
                let cells = &mut acc[row + (lo - i0) as usize..=row + (hi - i0) as usize];
                if gauss {
                    let a = s.w * c0 * ey[(r - ra) as usize];
                    let b = a / e2;
                    let off = (lo - ca) as usize;
                    let (gx, gxd) = (&ex[off..], &exd[off..]);
                    for (k, cell) in cells.iter_mut().enumerate() {
                        let t = b * (s.tau.x * gxd[k] + s.tau.y * dy * gx[k]);
                        cell[0] += t * s.tau.x;
                        cell[1] += t * s.tau.y;
                        cell[2] += a * gx[k];
                    }
                } else {
                    for (k, cell) in cells.iter_mut().enumerate() {
                        let dx = (lo + k as i64) as f64 * g - s.x.x;
                        // z = x_i − y
                        let z = Vec2::new(-dx, -dy);
                        let tdot = s.tau.dot(&kernel.eval_grad(&z));
                        cell[0] += s.w * tdot * s.tau.x;
                        cell[1] += s.w * tdot * s.tau.y;
                        cell[2] += s.w * kernel.eval(&z);
                    }
                }
            }
        }
        let eps = kernel.eps();
        for cell in &mut acc {
            let den = cell[2] + eps;
            cell[0] /= den;
            cell[1] /= den;
        }
        CurvatureField { kernel: *kernel, spacing: g, i0, j0, nx, ny, inner: acc }
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    fn node(&self, c: i64, r: i64) -> Option<&[f64; 3]> {
        if c < self.i0 || r < self.j0 {
            return None;
        }
        let (ci, ri) = ((c - self.i0) as usize, (r - self.j0) as usize);
        if ci >= self.nx || ri >= self.ny {
            return None;
        }
        Some(&self.inner[ri * self.nx + ci])
    }

    /// `h_ε(x)`.
    pub fn h(&self, x: Vec2) -> Vec2 {
        if self.inner.is_empty() {
            return Vec2::zeros();
        }
        let g = self.spacing;
        let rc = self.kernel.effective_radius();
        let e2 = self.kernel.eps() * self.kernel.eps();
        let c0 = self.kernel.center_value();
        let gauss = self.kernel.gaussian_core();
        // clip the kernel window to the lattice
        let ca = (((x.x - rc) / g).ceil() as i64).max(self.i0);
        let cb = (((x.x + rc) / g).floor() as i64).min(self.i0 + self.nx as i64 - 1);
        let ra = (((x.y - rc) / g).ceil() as i64).max(self.j0);
        let rb = (((x.y + rc) / g).floor() as i64).min(self.j0 + self.ny as i64 - 1);
        if ca > cb || ra > rb {
            return Vec2::zeros();
        }
        let ex: Vec<f64> = if gauss {
            (ca..=cb).map(|c| c0 * (-(c as f64 * g - x.x).powi(2) / (2.0 * e2)).exp()).collect()
        } else {
            vec![]
        };
        let mut sum = Vec2::zeros();
        for r in ra..=rb {
            let dy = r as f64 * g - x.y;
            let Some((lo, hi)) = disk_row(x.x, dy, g, rc * rc, ca, cb) else { continue };
            let row = ((r - self.j0) as usize) * self.nx;
            let cells = &self.inner[row + (lo - self.i0) as usize..=row + (hi - self.i0) as usize];
            let (mut sx, mut sy) = (0.0, 0.0);
            if gauss {
                let gx = &ex[(lo - ca) as usize..];
                for (k, n) in cells.iter().enumerate() {
                    sx += gx[k] * n[0];
                    sy += gx[k] * n[1];
                }
                let gy = (-dy * dy / (2.0 * e2)).exp();
                sum.x += gy * sx;
                sum.y += gy * sy;
            } else {
                for (k, n) in cells.iter().enumerate() {
                    let dx = (lo + k as i64) as f64 * g - x.x;
                    let phi = self.kernel.eval(&Vec2::new(dx, dy));
                    sx += phi * n[0];
                    sy += phi * n[1];
                }
                sum.x += sx;
                sum.y += sy;
            }
        }
        -sum * (g * g)
    }

    /// `h_ε` at many points (evaluated in parallel, order preserved).
    pub fn h_many(&self, xs: &[Vec2]) -> Vec<Vec2> {
        xs.par_iter().map(|&x| self.h(x)).collect()
    }

    /// Smoothed weight at the lattice node nearest to `x` (diagnostic use).
    pub fn weight_near(&self, x: Vec2) -> f64 {
        let c = (x.x / self.spacing).round() as i64;
        let r = (x.y / self.spacing).round() as i64;
        self.node(c, r).map(|n| n[2]).unwrap_or(0.0)
    }
}

/// Columns `c ∈ [ca, cb]` of lattice row at offset `dy` with `(c g − x)² + dy² < rc2`.
fn disk_row(x: f64, dy: f64, g: f64, rc2: f64, ca: i64, cb: i64) -> Option<(i64, i64)> {
    let m2 = rc2 - dy * dy;
    if m2 <= 0.0 {
        return None;
    }
    let m = m2.sqrt();
    let inside = |c: i64| {
        let dx = c as f64 * g - x;
        dx * dx + dy * dy < rc2
    };
    let mut lo = (((x - m) / g).ceil() as i64).max(ca);
    let mut hi = (((x + m) / g).floor() as i64).min(cb);
    while lo <= hi && !inside(lo) {
        lo += 1;
    }
    while hi >= lo && !inside(hi) {
        hi -= 1;
    }
    (lo <= hi).then_some((lo, hi))
}

/// One-off evaluation of `h_ε(x)`.
pub fn smoothed_mean_curvature(slice: &VarifoldSlice, kernel: &SmoothingKernel, x: Vec2) -> Vec2 {
    CurvatureField::new(slice, kernel).h(x)
}
