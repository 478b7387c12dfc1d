//! The Green's function of the homogeneous boundary value problem
//!
//! ```text
//! y'(t) - p(t) y(t) = h(t),     λ y(0) = y(1),
//! ```
//!
//! namely
//!
//! ```text
//!            exp(∫ₛᵗ p)      ┌ λ        0 ≤ s <  t ≤ 1
//! G(t, s) = ───────────── × ─┤
//!            λ − exp(∫₀¹ p)  └ exp(∫₀¹p) 0 ≤ t ≤ s ≤ 1
//! ```
//!
//! The diagonal s = t belongs to the second branch. With p ≥ 0 and
//! λ > exp(∫₀¹ p), both branches are positive and the jump across the
//! diagonal equals exactly 1.

use crate::error::{Error, Result};
use crate::exprs::Expr;
use crate::quadrature::{cumulative, CumulativeCoefficient};
use crate::real::{real, real_of_usize, Real};

#[derive(Debug, Clone)]
pub struct GreensKernel<T> {
    lam: T,
    exp_p1: T,
    denom: T,
    cumulative: CumulativeCoefficient<T>,
}

/// Build the kernel for coefficient `p` and boundary scalar `lam`.
/// `grid_size` controls the resolution of the cached cumulative integral.
pub fn build_kernel<T: Real>(p: &Expr, lam: T, grid_size: usize) -> Result<GreensKernel<T>> {
    let cumulative = cumulative::<T>(p, grid_size)?;
    let exp_p1 = cumulative.p1().exp();
    let denom = lam - exp_p1;
    if !(denom > T::zero()) {
        return Err(Error::InadmissibleLambda {
            lam: lam.as_f64(),
            exp_p1: exp_p1.as_f64(),
        });
    }
    Ok(GreensKernel {
        lam,
        exp_p1,
        denom,
        cumulative,
    })
}

impl<T: Real> GreensKernel<T> {
    pub fn lam(&self) -> T {
        self.lam
    }

    /// exp(∫₀¹ p).
    pub fn exp_p1(&self) -> T {
        self.exp_p1
    }

    /// λ − exp(∫₀¹ p), the positive denominator shared by both branches.
    pub fn denom(&self) -> T {
        self.denom
    }

    pub fn cumulative(&self) -> &CumulativeCoefficient<T> {
        &self.cumulative
    }

    /// G(t, s) for t, s ∈ [0, 1].
    pub fn evaluate(&self, t: T, s: T) -> Result<T> {
        let pt = self.cumulative.eval(t)?;
        let ps = self.cumulative.eval(s)?;
        let branch = if s < t { self.lam } else { self.exp_p1 };
        Ok((pt - ps).exp() * branch / self.denom)
    }

    /// The weight carried by the nonlocal boundary terms in the fixed-point
    /// operator: w(t) = exp(∫₀ᵗ p) / (λ − exp(∫₀¹ p)). It satisfies
    /// λ·w(0) − w(1) = 1, so the boundary condition closes exactly.
    pub fn boundary_weight(&self, t: T) -> Result<T> {
        Ok(self.cumulative.eval(t)?.exp() / self.denom)
    }

    /// p(t), for finite-difference verification of the kernel's ODE property.
    pub fn coefficient_at(&self, t: T) -> Result<T> {
        self.cumulative.coefficient_at(t)
    }
}

/// Worst observed errors for the kernel's three defining identities, measured
/// on a sample grid. Intended for f64 kernels (the probes use steps of 1e-8
/// and 1e-5, below f32 resolution).
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct KernelCheck {
    /// max over s of |G(s+ε, s) − G(s−ε, s) − 1|, ε = 1e-8.
    pub jump_max_err: f64,
    /// max over s of |λ·G(0, s) − G(1, s)|.
    pub boundary_max_err: f64,
    /// max over off-diagonal (t, s) of the relative defect of ∂G/∂t = p·G,
    /// central differences with h = 1e-5.
    pub ode_max_rel_err: f64,
}

impl KernelCheck {
    pub fn passes(&self, jump_tol: f64, boundary_tol: f64, ode_tol: f64) -> bool {
        self.jump_max_err < jump_tol
            && self.boundary_max_err < boundary_tol
            && self.ode_max_rel_err < ode_tol
    }
}

/// Probe the kernel identities on `samples` interior points per axis.
pub fn check_kernel_invariants<T: Real>(
    kernel: &GreensKernel<T>,
    samples: usize,
) -> Result<KernelCheck> {
    let samples = samples.max(2);
    let interior: Vec<T> = (0..samples)
        .map(|i| {
            // spread over [0.05, 0.95] so the ±1e-8 and ±1e-5 probes stay inside
            real::<T>(0.05) + real::<T>(0.9) * real_of_usize::<T>(i) / real_of_usize(samples - 1)
        })
        .collect();

    let eps = real::<T>(1e-8);
    let h = real::<T>(1e-5);
    let mut jump_max: f64 = 0.0;
    let mut boundary_max: f64 = 0.0;
    let mut ode_max: f64 = 0.0;

    for &s in &interior {
        let above = kernel.evaluate(s + eps, s)?;
        let below = kernel.evaluate(s - eps, s)?;
        jump_max = jump_max.max((above - below - T::one()).abs().as_f64());

        let rel = kernel.lam() * kernel.evaluate(T::zero(), s)? - kernel.evaluate(T::one(), s)?;
        boundary_max = boundary_max.max(rel.abs().as_f64());
    }

    for &t in &interior {
        for &s in &interior {
            if (t - s).abs() < real(0.05) {
                continue;
            }
            let dg = (kernel.evaluate(t + h, s)? - kernel.evaluate(t - h, s)?) / (h + h);
            let target = kernel.coefficient_at(t)? * kernel.evaluate(t, s)?;
            let denom = target.abs().max(T::one());
            ode_max = ode_max.max(((dg - target) / denom).abs().as_f64());
        }
    }

    Ok(KernelCheck {
        jump_max_err: jump_max,
        boundary_max_err: boundary_max,
        ode_max_rel_err: ode_max,
    })
}
