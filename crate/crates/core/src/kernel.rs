//! The localized Gaussian kernel `Φ_ε = c(ε) ψ Φ̂_ε` and its derivatives.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::adaptive_simpson;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("kernel width eps = {0} must lie in (0, 1)")]
    Eps(f64),
    #[error("ambient dimension {0} is not supported (use 2 or 3)")]
    Dim(usize),
}

/// Frozen constant `C` in `|∇Φ_ε(x)| ≤ |x|/ε² Φ_ε(x) + C·1_{1/2≤|x|≤1}·e^{−1/ε}`,
/// taken from a dense scan over `ε ∈ (0,1)` (the observed maximum is about 97, near ε ≈ 0.19).
pub const GRADIENT_BOUND_C: f64 = 120.0;

/// Relative size below which the Gaussian factor is dropped (`exp(-r²/2ε²) < 1e-16`).
pub const TRUNCATION_LEVEL: f64 = 1e-16;

/// Radial cutoff profile: 1 on `[0, 1/2]`, 0 on `[1, ∞)`, quintic smoothstep in between.
/// Returns `(ψ, ψ', ψ'')` as functions of the radius.
pub fn cutoff_profile(r: f64) -> (f64, f64, f64) {
    if r <= 0.5 {
        (1.0, 0.0, 0.0)
    } else if r >= 1.0 {
        (0.0, 0.0, 0.0)
    } else {
        let s = 2.0 * r - 1.0;
        let sm = s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
        let d1 = 30.0 * s * s * (1.0 - s) * (1.0 - s);
        let d2 = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
        (1.0 - sm, -2.0 * d1, -4.0 * d2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingKernel {
    eps: f64,
    dim: usize,
    c_eps: f64,
    peak: f64,
    r_cut: f64,
}

impl SmoothingKernel {
    pub fn new(eps: f64, dim: usize) -> Result<Self, KernelError> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(KernelError::Eps(eps));
        }
        if dim != 2 && dim != 3 {
            return Err(KernelError::Dim(dim));
        }
        let peak = (2.0 * std::f64::consts::PI * eps * eps).powf(-(dim as f64) / 2.0);
        let sphere = if dim == 2 { 2.0 * std::f64::consts::PI } else { 4.0 * std::f64::consts::PI };
        let radial = |r: f64| sphere * r.powi(dim as i32 - 1) * cutoff_profile(r).0 * peak * (-r * r / (2.0 * eps * eps)).exp();
        // split at the peak of the radial density and at the start of the cutoff band
        let knot = ((dim as f64 - 1.0).sqrt() * eps).min(0.5);
        let mass = adaptive_simpson(&radial, 0.0, knot, 1e-13)
            + adaptive_simpson(&radial, knot, 0.5, 1e-13)
            + adaptive_simpson(&radial, 0.5, 1.0, 1e-13);
        let r_cut = (eps * (2.0 * (1.0 / TRUNCATION_LEVEL).ln()).sqrt()).min(1.0);
        Ok(SmoothingKernel { eps, dim, c_eps: 1.0 / mass, peak, r_cut })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn c_eps(&self) -> f64 {
        self.c_eps
    }

    /// `Φ_ε(0)`.
    pub fn center_value(&self) -> f64 {
        self.c_eps * self.peak
    }

    /// Radius beyond which the kernel is treated as zero in sums.
    pub fn effective_radius(&self) -> f64 {
        self.r_cut
    }

    /// True when the kernel is a pure scaled Gaussian on its effective support.
    pub fn gaussian_core(&self) -> bool {
        self.r_cut <= 0.5
    }

    /// `(f, f', f'')` of the radial profile.
    pub fn radial(&self, r: f64) -> (f64, f64, f64) {
        if r >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let e2 = self.eps * self.eps;
        let g = self.c_eps * self.peak * (-r * r / (2.0 * e2)).exp();
        let g1 = -r / e2 * g;
        let g2 = (r * r / (e2 * e2) - 1.0 / e2) * g;
        let (p, p1, p2) = cutoff_profile(r);
        (p * g, p1 * g + p * g1, p2 * g + 2.0 * p1 * g1 + p * g2)
    }

    pub fn eval<const D: usize>(&self, x: &SVector<f64, D>) -> f64 {
        debug_assert_eq!(D, self.dim);
        let r = x.norm();
        if r >= 1.0 {
            return 0.0;
        }
        self.radial(r).0
    }

    pub fn eval_grad<const D: usize>(&self, x: &SVector<f64, D>) -> SVector<f64, D> {
        debug_assert_eq!(D, self.dim);
        let r = x.norm();
        if r >= 1.0 {
            return SVector::zeros();
        }
        if r <= 0.5 {
            let f = self.radial(r).0;
            return x * (-f / (self.eps * self.eps));
        }
        let (_, f1, _) = self.radial(r);
        x * (f1 / r)
    }

    pub fn eval_hess<const D: usize>(&self, x: &SVector<f64, D>) -> SMatrix<f64, D, D> {
        debug_assert_eq!(D, self.dim);
        let r = x.norm();
        if r >= 1.0 {
            return SMatrix::zeros();
        }
        let e2 = self.eps * self.eps;
        if r <= 0.5 {
            let f = self.radial(r).0;
            return (x * x.transpose() / (e2 * e2) - SMatrix::<f64, D, D>::identity() / e2) * f;
        }
        let (_, f1, f2) = self.radial(r);
        let u = x / r;
        let uu = u * u.transpose();
        uu * f2 + (SMatrix::<f64, D, D>::identity() - uu) * (f1 / r)
    }
}
