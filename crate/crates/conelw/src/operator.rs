//! Discretized curves on [0,1], shape-preserving interpolation, and the
//! integral operator K whose fixed points solve the boundary value problem:
//!
//! ```text
//! (Ky)(t) = ∫₀¹ G(t,s) · Σᵢ fᵢ(s, y(s)) ds + w(t) · Σⱼ Φⱼ(τⱼ, y(τⱼ))
//! ```
//!
//! with w the kernel's boundary weight. Writing e(t) = exp(∫₀ᵗ p), the two
//! kernel branches share the factor e(t)/denom, so with
//! I(t) = ∫₀ᵗ e(s)⁻¹ Σfᵢ(s, y(s)) ds and I₁ = I(1):
//!
//! ```text
//! (Ky)(t) = e(t)/denom · ( λ·I(t) + expP1·(I₁ − I(t)) + ΣΦⱼ )
//! ```
//!
//! which is what `apply` evaluates: per-cell quadrature panels never straddle
//! the kernel's diagonal because every evaluation point t is a cell boundary.

use std::io::Write;

use serde::ser::SerializeStruct;

use crate::error::{Error, Result};
use crate::green::GreensKernel;
use crate::problem::ProblemInstance;
use crate::quadrature::{GL_NODES, GL_WEIGHTS};
use crate::real::{real, real_of_usize, Real};

/// A function on [0,1] sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionCurve<T> {
    values: Vec<T>,
}

impl<T: Real> SolutionCurve<T> {
    /// Wrap uniform samples: values[k] belongs to t = k/(len-1).
    pub fn from_values(values: Vec<T>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidArgument(
                "a curve needs at least two nodes".into(),
            ));
        }
        Ok(SolutionCurve { values })
    }

    pub fn constant(value: T, nodes: usize) -> Result<Self> {
        Self::from_values(vec![value; nodes])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // at least two nodes by construction
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn node(&self, k: usize) -> T {
        real_of_usize::<T>(k) / real_of_usize(self.values.len() - 1)
    }

    pub fn nodes(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.values.len()).map(|k| self.node(k))
    }

    pub fn y0(&self) -> T {
        self.values[0]
    }

    pub fn y1(&self) -> T {
        *self.values.last().unwrap()
    }

    pub fn sup_norm(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn min_value(&self) -> T {
        self.values
            .iter()
            .copied()
            .fold(T::infinity(), |acc, v| acc.min(v))
    }

    /// Shape-preserving point evaluation (see [`MonotoneCubic`]).
    pub fn value_at(&self, t: T) -> T {
        MonotoneCubic::new(self).eval(t)
    }

    /// Sup-norm distance to another curve on the same grid.
    pub fn sup_distance(&self, other: &Self) -> Result<T> {
        if self.len() != other.len() {
            return Err(Error::GridMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).abs())))
    }

    /// True when values are nonnegative and nondecreasing, both within `tol`.
    pub fn is_monotone_nonneg(&self, tol: T) -> bool {
        self.values[0] >= -tol
            && self.values.windows(2).all(|w| w[1] >= w[0] - tol)
    }

    /// `t,y` rows, 17 significant digits (lossless round-trip for f64).
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "t,y")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(w, "{:.16e},{:.16e}", self.node(k).as_f64(), v.as_f64())?;
        }
        Ok(())
    }
}

// JSON form: metadata plus the raw arrays.
impl<T: Real> serde::Serialize for SolutionCurve<T> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("SolutionCurve", 6)?;
        s.serialize_field("nodes", &self.nodes().map(|t| t.as_f64()).collect::<Vec<_>>())?;
        s.serialize_field(
            "values",
            &self.values.iter().map(|v| v.as_f64()).collect::<Vec<_>>(),
        )?;
        s.serialize_field("sup_norm", &self.sup_norm().as_f64())?;
        s.serialize_field("min_value", &self.min_value().as_f64())?;
        s.serialize_field("y0", &self.y0().as_f64())?;
        s.serialize_field("y1", &self.y1().as_f64())?;
        s.end()
    }
}

/// Monotone (Fritsch-Carlson) cubic Hermite interpolation on a uniform grid.
/// Monotone data yields a monotone interpolant, so evaluating a cone curve
/// off-grid cannot overshoot its endpoint values.
#[derive(Debug, Clone)]
pub struct MonotoneCubic<T> {
    values: Vec<T>,
    slopes: Vec<T>,
    h: T,
}

impl<T: Real> MonotoneCubic<T> {
    pub fn new(curve: &SolutionCurve<T>) -> Self {
        let y = curve.values();
        let n = y.len();
        let h = T::one() / real_of_usize::<T>(n - 1);
        let secants: Vec<T> = y.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        let mut d = vec![T::zero(); n];
        if n == 2 {
            d[0] = secants[0];
            d[1] = secants[0];
        } else {
            for k in 1..n - 1 {
                let (s0, s1) = (secants[k - 1], secants[k]);
                if s0 * s1 > T::zero() {
                    // harmonic mean keeps the interpolant monotone
                    d[k] = (s0 + s0) * s1 / (s0 + s1);
                }
            }
            d[0] = endpoint_slope(secants[0], secants[1]);
            d[n - 1] = endpoint_slope(secants[n - 2], secants[n - 3]);
        }
        MonotoneCubic {
            values: y.to_vec(),
            slopes: d,
            h,
        }
    }

    pub fn eval(&self, t: T) -> T {
        let n = self.values.len();
        let pos = (t / self.h).floor().to_usize().unwrap_or(0).min(n - 2);
        let k = pos;
        let xi = (t - real_of_usize::<T>(k) * self.h) / self.h;
        let xi2 = xi * xi;
        let xi3 = xi2 * xi;
        let two = real::<T>(2.0);
        let three = real::<T>(3.0);
        let h00 = two * xi3 - three * xi2 + T::one();
        let h10 = xi3 - two * xi2 + xi;
        let h01 = three * xi2 - two * xi3;
        let h11 = xi3 - xi2;
        self.values[k] * h00
            + self.slopes[k] * self.h * h10
            + self.values[k + 1] * h01
            + self.slopes[k + 1] * self.h * h11
    }
}

/// Limited three-point estimate for the boundary slope; `s0` is the adjacent
/// secant, `s1` the next one in.
fn endpoint_slope<T: Real>(s0: T, s1: T) -> T {
    let three = real::<T>(3.0);
    let d = (three * s0 - s1) / real(2.0);
    if d * s0 <= T::zero() {
        T::zero()
    } else if s1 * s0 <= T::zero() && d.abs() > three * s0.abs() {
        three * s0
    } else {
        d
    }
}

/// K discretized on `nodes` uniform nodes. The per-cell quadrature samples of
/// e(s)⁻¹ and their weights are precomputed once, so repeated applications
/// (Picard) only re-evaluate the forcing terms.
#[derive(Debug, Clone)]
pub struct IntegralOperator<'a, T> {
    kernel: &'a GreensKernel<T>,
    inst: &'a ProblemInstance,
    nodes: usize,
    exp_p: Vec<T>,
    /// Flattened 5-per-cell sample abscissae.
    gl_points: Vec<T>,
    /// Matching weight × exp(-P(s)) × half-width factors.
    gl_factors: Vec<T>,
}

impl<'a, T: Real> IntegralOperator<'a, T> {
    pub fn new(
        kernel: &'a GreensKernel<T>,
        inst: &'a ProblemInstance,
        nodes: usize,
    ) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::InvalidArgument(
                "the operator grid needs at least two nodes".into(),
            ));
        }
        let n_cells = nodes - 1;
        let h = T::one() / real_of_usize::<T>(n_cells);
        let half = h / real(2.0);
        let mut exp_p = Vec::with_capacity(nodes);
        for k in 0..nodes {
            let t = real_of_usize::<T>(k) * h;
            exp_p.push(kernel.cumulative().eval(t)?.exp());
        }
        let mut gl_points = Vec::with_capacity(5 * n_cells);
        let mut gl_factors = Vec::with_capacity(5 * n_cells);
        for k in 0..n_cells {
            let mid = (real_of_usize::<T>(k) + real(0.5)) * h;
            for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
                let s = mid + half * real(*x);
                gl_points.push(s);
                gl_factors.push(real::<T>(*w) * half * (-kernel.cumulative().eval(s)?).exp());
            }
        }
        Ok(IntegralOperator {
            kernel,
            inst,
            nodes,
            exp_p,
            gl_points,
            gl_factors,
        })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// One application of K.
    pub fn apply(&self, y: &SolutionCurve<T>) -> Result<SolutionCurve<T>> {
        if y.len() != self.nodes {
            return Err(Error::GridMismatch {
                left: y.len(),
                right: self.nodes,
            });
        }
        let interp = MonotoneCubic::new(y);
        let n_cells = self.nodes - 1;

        // prefix[k] = ∫₀^{t_k} e(s)⁻¹ Σf(s, y(s)) ds
        let mut prefix = Vec::with_capacity(self.nodes);
        let mut acc = T::zero();
        prefix.push(acc);
        for cell in 0..n_cells {
            let mut cell_sum = T::zero();
            for q in 5 * cell..5 * (cell + 1) {
                let s = self.gl_points[q];
                let forcing = self.inst.forcing_sum(s, interp.eval(s))?;
                cell_sum += self.gl_factors[q] * forcing;
            }
            acc += cell_sum;
            prefix.push(acc);
        }
        let total = acc;

        let mut phi_sum = T::zero();
        for bt in &self.inst.boundary_terms {
            let tau = real::<T>(bt.tau);
            phi_sum += bt.phi.eval(tau, interp.eval(tau))?;
        }

        let lam = self.kernel.lam();
        let exp_p1 = self.kernel.exp_p1();
        let denom = self.kernel.denom();
        let values = (0..self.nodes)
            .map(|k| {
                self.exp_p[k] / denom * (lam * prefix[k] + exp_p1 * (total - prefix[k]) + phi_sum)
            })
            .collect();
        SolutionCurve::from_values(values)
    }

    /// Picard iteration y ← Ky until the sup-norm step is below `tol` or
    /// `max_iter` applications have been made. K need not be a contraction,
    /// so non-convergence is an ordinary outcome, not an error; leaving
    /// [0, bound] is divergence and is.
    pub fn picard(
        &self,
        y_init: &SolutionCurve<T>,
        max_iter: usize,
        tol: T,
        bound: T,
    ) -> Result<Picard<T>> {
        let mut y = y_init.clone();
        for iteration in 1..=max_iter {
            let z = self.apply(&y)?;
            let norm = z.sup_norm();
            if !norm.is_finite() || norm > bound {
                return Err(Error::IterationDiverged {
                    iteration,
                    norm: norm.as_f64(),
                    bound: bound.as_f64(),
                });
            }
            let step = z.sup_distance(&y)?;
            y = z;
            if step < tol {
                return Ok(Picard {
                    curve: y,
                    converged: true,
                    iterations: iteration,
                });
            }
        }
        Ok(Picard {
            curve: y,
            converged: false,
            iterations: max_iter,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Picard<T> {
    pub curve: SolutionCurve<T>,
    pub converged: bool,
    pub iterations: usize,
}

/// Finite-difference defect of y′ = p·y + Σfᵢ along the curve: second-order
/// differences (one-sided at the endpoints). `mean_abs` is the acceptance
/// figure; `max_abs` is reported as a diagnostic because isolated kinks of a
/// piecewise forcing inflate the pointwise defect by O(h) without meaning
/// the curve is wrong.
#[derive(Debug, Clone, Copy)]
pub struct OdeResidual<T> {
    pub mean_abs: T,
    pub max_abs: T,
}

pub fn ode_residual<T: Real>(
    inst: &ProblemInstance,
    y: &SolutionCurve<T>,
) -> Result<OdeResidual<T>> {
    let v = y.values();
    let n = v.len();
    let h = T::one() / real_of_usize::<T>(n - 1);
    let two_h = h + h;
    let mut sum = T::zero();
    let mut max = T::zero();
    for k in 0..n {
        let t = y.node(k);
        let dy = if k == 0 {
            (-real::<T>(3.0) * v[0] + real::<T>(4.0) * v[1] - v[2]) / two_h
        } else if k == n - 1 {
            (real::<T>(3.0) * v[n - 1] - real::<T>(4.0) * v[n - 2] + v[n - 3]) / two_h
        } else {
            (v[k + 1] - v[k - 1]) / two_h
        };
        let rhs = inst.p.eval(t, T::zero())? * v[k] + inst.forcing_sum(t, v[k])?;
        let r = (dy - rhs).abs();
        sum += r;
        max = max.max(r);
    }
    Ok(OdeResidual {
        mean_abs: sum / real_of_usize(n),
        max_abs: max,
    })
}

/// Signed defect of the boundary condition, λ·y(0) − y(1) − ΣΦⱼ(τⱼ, y(τⱼ)).
pub fn boundary_residual<T: Real>(inst: &ProblemInstance, y: &SolutionCurve<T>) -> Result<T> {
    let interp = MonotoneCubic::new(y);
    let mut phi_sum = T::zero();
    for bt in &inst.boundary_terms {
        let tau = real::<T>(bt.tau);
        phi_sum += bt.phi.eval(tau, interp.eval(tau))?;
    }
    Ok(real::<T>(inst.lam) * y.y0() - y.y1() - phi_sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprs::parse;
    use crate::green::build_kernel;

    fn flat_unit_instance() -> ProblemInstance {
        ProblemInstance {
            p: parse("0").unwrap(),
            f: vec![parse("1").unwrap()],
            boundary_terms: vec![],
            lam: 2.0,
        }
    }

    #[test]
    fn apply_constant_forcing_gives_one_plus_t() {
        let inst = flat_unit_instance();
        let kernel = build_kernel::<f64>(&inst.p, 2.0, 257).unwrap();
        let op = IntegralOperator::new(&kernel, &inst, 129).unwrap();
        for start in [0.0, 1.0, 5.0] {
            let y = SolutionCurve::constant(start, 129).unwrap();
            let z = op.apply(&y).unwrap();
            for (k, &v) in z.values().iter().enumerate() {
                let t = z.node(k);
                assert!((v - (1.0 + t)).abs() < 1e-8, "t = {t}: {v}");
            }
        }
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let mut inst = flat_unit_instance();
        inst.f = vec![parse("0").unwrap()];
        let kernel = build_kernel::<f64>(&inst.p, 2.0, 64).unwrap();
        let op = IntegralOperator::new(&kernel, &inst, 65).unwrap();
        let z = op.apply(&SolutionCurve::constant(3.0, 65).unwrap()).unwrap();
        assert!(z.values().iter().all(|&v| v.abs() < 1e-14));
    }

    #[test]
    fn pure_boundary_term_scales_the_weight() {
        let mut inst = flat_unit_instance();
        inst.f = vec![parse("0").unwrap()];
        inst.boundary_terms.push(crate::problem::BoundaryTerm {
            tau: 0.25,
            phi: parse("3").unwrap(),
            phi_lower: parse("1").unwrap(),
            psi_upper: parse("1").unwrap(),
        });
        let kernel = build_kernel::<f64>(&inst.p, 2.0, 64).unwrap();
        let op = IntegralOperator::new(&kernel, &inst, 65).unwrap();
        let z = op.apply(&SolutionCurve::constant(0.0, 65).unwrap()).unwrap();
        // boundary weight is identically 1 for p = 0, lambda = 2
        assert!(z.values().iter().all(|&v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn fixed_point_passes_both_residual_oracles() {
        let inst = flat_unit_instance();
        let kernel = build_kernel::<f64>(&inst.p, 2.0, 257).unwrap();
        let op = IntegralOperator::new(&kernel, &inst, 257).unwrap();
        let fixed = op.apply(&SolutionCurve::constant(0.0, 257).unwrap()).unwrap();
        let ode = ode_residual(&inst, &fixed).unwrap();
        assert!(ode.mean_abs < 1e-8, "{ode:?}");
        assert!(ode.max_abs < 1e-6, "{ode:?}");
        let bc = boundary_residual(&inst, &fixed).unwrap();
        assert!(bc.abs() < 1e-8, "bc = {bc}");
    }

    #[test]
    fn picard_converges_fast_when_forcing_ignores_y() {
        let inst = flat_unit_instance();
        let kernel = build_kernel::<f64>(&inst.p, 2.0, 128).unwrap();
        let op = IntegralOperator::new(&kernel, &inst, 129).unwrap();
        let start = SolutionCurve::constant(0.0, 129).unwrap();
        let out = op.picard(&start, 10, 1e-12, 80.0).unwrap();
        assert!(out.converged);
        assert!(out.iterations <= 3, "iterations = {}", out.iterations);
        assert!((out.curve.y1() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn picard_with_unreachable_tolerance_reports_nonconvergence() {
        let inst = ProblemInstance {
            p: parse("0").unwrap(),
            f: vec![parse("0.1 + y/2").unwrap()],
            boundary_terms: vec![],
            lam: 2.0,
        };
        let kernel = build_kernel::<f64>(&inst.p, 2.0, 64).unwrap();
        let op = IntegralOperator::new(&kernel, &inst, 65).unwrap();
        let start = SolutionCurve::constant(0.0, 65).unwrap();
        let out = op.picard(&start, 5, 0.0, 1e6).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 5);
    }

    #[test]
    fn picard_divergence_is_detected() {
        // forcing grows fast enough that iterates blow through the bound
        let inst = ProblemInstance {
            p: parse("0").unwrap(),
            f: vec![parse("10*y + 1").unwrap()],
            boundary_terms: vec![],
            lam: 2.0,
        };
        let kernel = build_kernel::<f64>(&inst.p, 2.0, 64).unwrap();
        let op = IntegralOperator::new(&kernel, &inst, 65).unwrap();
        let start = SolutionCurve::constant(0.0, 65).unwrap();
        match op.picard(&start, 50, 1e-12, 100.0) {
            Err(Error::IterationDiverged { norm, bound, .. }) => {
                assert!(norm > bound);
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn cone_shape_is_preserved() {
        let inst = ProblemInstance {
            p: parse("t").unwrap(),
            f: vec![parse("0.4 + 2.6*ramp(y, 1, 2)").unwrap()],
            boundary_terms: vec![],
            lam: 4.0,
        };
        let kernel = build_kernel::<f64>(&inst.p, 4.0, 128).unwrap();
        let op = IntegralOperator::new(&kernel, &inst, 129).unwrap();
        let y = SolutionCurve::from_values(
            (0..129).map(|k| 0.5 + 1.5 * (k as f64 / 128.0).powi(2)).collect(),
        )
        .unwrap();
        let z = op.apply(&y).unwrap();
        assert!(z.is_monotone_nonneg(0.0));
    }

    #[test]
    fn monotone_cubic_reproduces_smooth_values() {
        let y = SolutionCurve::from_values(
            (0..65).map(|k| (1.0 + k as f64 / 64.0).powi(2)).collect::<Vec<f64>>(),
        )
        .unwrap();
        let interp = MonotoneCubic::new(&y);
        for j in 0..=100 {
            let t = j as f64 / 100.0;
            let exact = (1.0 + t).powi(2);
            assert!((interp.eval(t) - exact).abs() < 1e-3, "t = {t}");
        }
        // exact at the nodes
        assert_eq!(interp.eval(0.0), 1.0);
        assert!((interp.eval(1.0) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn monotone_cubic_does_not_overshoot() {
        // plateau data with a jump: a classic overshoot trap for plain cubics
        let mut vals = vec![0.0f64; 16];
        vals.extend(vec![1.0f64; 17]);
        let y = SolutionCurve::from_values(vals).unwrap();
        let interp = MonotoneCubic::new(&y);
        let mut prev = f64::NEG_INFINITY;
        for j in 0..=1000 {
            let t = j as f64 / 1000.0;
            let v = interp.eval(t);
            assert!((-1e-12..=1.0 + 1e-12).contains(&v), "t = {t}: {v}");
            assert!(v >= prev - 1e-12, "not monotone at t = {t}");
            prev = v;
        }
    }

    #[test]
    fn csv_round_trips_losslessly() {
        let y =
            SolutionCurve::from_values(vec![0.1f64, 0.30000000000000004, 2.0 / 3.0, 1.5]).unwrap();
        let mut buf = Vec::new();
        y.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,y"));
        for (k, line) in lines.enumerate() {
            let (t, v) = line.split_once(',').unwrap();
            assert_eq!(t.parse::<f64>().unwrap(), y.node(k));
            assert_eq!(v.parse::<f64>().unwrap(), y.values()[k]);
        }
    }

    #[test]
    fn curve_metadata() {
        let y = SolutionCurve::from_values(vec![1.0f64, 1.5, 3.0]).unwrap();
        assert_eq!(y.y0(), 1.0);
        assert_eq!(y.y1(), 3.0);
        assert_eq!(y.sup_norm(), 3.0);
        assert_eq!(y.min_value(), 1.0);
        assert!(y.is_monotone_nonneg(0.0));
        let json = serde_json::to_value(&y).unwrap();
        assert_eq!(json["sup_norm"], 3.0);
        assert_eq!(json["values"][1], 1.5);
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let a = SolutionCurve::constant(1.0f64, 8).unwrap();
        let b = SolutionCurve::constant(1.0f64, 9).unwrap();
        assert!(matches!(
            a.sup_distance(&b),
            Err(Error::GridMismatch { left: 8, right: 9 })
        ));
    }

    #[test]
    fn operator_in_f32() {
        let inst = flat_unit_instance();
        let kernel = build_kernel::<f32>(&inst.p, 2.0f32, 64).unwrap();
        let op = IntegralOperator::new(&kernel, &inst, 65).unwrap();
        let z = op.apply(&SolutionCurve::constant(0.0f32, 65).unwrap()).unwrap();
        assert!((z.y1() - 2.0).abs() < 1e-4);
    }
}
