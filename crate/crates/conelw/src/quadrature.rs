//! Composite Gauss-Legendre quadrature on [0,1]-scale intervals, plus the
//! cumulative coefficient integral P(t) = ∫₀ᵗ p(η) dη that every exponential
//! in the kernel construction depends on.

use crate::error::{Error, Result};
use crate::exprs::Expr;
use crate::real::{real, real_of_usize, Real};

/// 5-point Gauss-Legendre abscissae on [-1, 1].
pub const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];

/// Weights paired with [`GL_NODES`].
pub const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_08,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
];

/// One 5-point panel over [a, b]. Exact for polynomials of degree ≤ 9.
fn panel<T, F>(a: T, b: T, f: &mut F) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    let two = real::<T>(2.0);
    let half = (b - a) / two;
    let mid = (a + b) / two;
    let mut acc = T::zero();
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
        acc += real::<T>(*w) * f(mid + half * real(*x))?;
    }
    Ok(acc * half)
}

/// Composite 5-point Gauss-Legendre over [a, b] with `panels` equal panels,
/// for integrands that may themselves fail (DSL evaluation). Samples are
/// additionally required to be finite.
pub fn try_integrate<T, F>(mut f: F, a: T, b: T, panels: usize) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    if panels == 0 {
        return Err(Error::InvalidArgument("quadrature needs at least one panel".into()));
    }
    if !(a <= b) {
        return Err(Error::InvalidArgument(format!(
            "integration bounds out of order: a = {}, b = {}",
            a.as_f64(),
            b.as_f64()
        )));
    }
    let mut checked = |x: T| -> Result<T> {
        let v = f(x)?;
        if !v.is_finite() {
            return Err(Error::NonFiniteSample { point: x.as_f64() });
        }
        Ok(v)
    };
    let width = (b - a) / real_of_usize(panels);
    let mut acc = T::zero();
    for k in 0..panels {
        let lo = a + width * real_of_usize(k);
        let hi = if k + 1 == panels {
            b
        } else {
            a + width * real_of_usize(k + 1)
        };
        acc += panel(lo, hi, &mut checked)?;
    }
    Ok(acc)
}

/// [`try_integrate`] for plain closures.
pub fn integrate<T, F>(mut f: F, a: T, b: T, panels: usize) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> T,
{
    try_integrate(|x| Ok(f(x)), a, b, panels)
}

/// P(t) = ∫₀ᵗ p(η) dη on a uniform grid, with off-node values obtained by
/// re-integrating the tail panel (not by linear interpolation).
#[derive(Debug, Clone)]
pub struct CumulativeCoefficient<T> {
    nodes: Vec<T>,
    values: Vec<T>,
    p: Expr,
}

/// Build the cumulative integral of a coefficient expression over [0, 1]
/// with `grid_size` cells (one quadrature panel per cell). The coefficient
/// must depend on `t` only and must be nonnegative wherever it is sampled.
pub fn cumulative<T: Real>(p: &Expr, grid_size: usize) -> Result<CumulativeCoefficient<T>> {
    if grid_size == 0 {
        return Err(Error::InvalidArgument("cumulative grid needs at least one cell".into()));
    }
    if p.uses_y() {
        return Err(Error::InvalidArgument(
            "coefficient expression must depend on t only".into(),
        ));
    }
    let n = real_of_usize::<T>(grid_size);
    let nodes: Vec<T> = (0..=grid_size).map(|k| real_of_usize::<T>(k) / n).collect();
    let mut sample = |x: T| sample_coefficient(p, x);
    let mut values = Vec::with_capacity(grid_size + 1);
    let mut acc = T::zero();
    values.push(acc);
    for k in 0..grid_size {
        sample(nodes[k])?; // node itself is part of the validated sample set
        acc += panel(nodes[k], nodes[k + 1], &mut sample)?;
        values.push(acc);
    }
    sample(nodes[grid_size])?;
    Ok(CumulativeCoefficient {
        nodes,
        values,
        p: p.clone(),
    })
}

fn sample_coefficient<T: Real>(p: &Expr, x: T) -> Result<T> {
    let v = p.eval(x, T::zero())?;
    if !v.is_finite() {
        return Err(Error::NonFiniteSample { point: x.as_f64() });
    }
    if v < T::zero() {
        return Err(Error::NegativeCoefficient {
            point: x.as_f64(),
            value: v.as_f64(),
        });
    }
    Ok(v)
}

impl<T: Real> CumulativeCoefficient<T> {
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// P(1) = ∫₀¹ p.
    pub fn p1(&self) -> T {
        *self.values.last().expect("nonempty by construction")
    }

    /// The coefficient itself at `t`.
    pub fn coefficient_at(&self, t: T) -> Result<T> {
        sample_coefficient(&self.p, t)
    }

    pub fn coefficient(&self) -> &Expr {
        &self.p
    }

    /// P(t) for arbitrary t ∈ [0, 1]: the cached prefix value at the cell
    /// start plus a fresh single-panel integral over the remainder.
    pub fn eval(&self, t: T) -> Result<T> {
        let slack = real::<T>(1e-9);
        if t < -slack || t > T::one() + slack {
            return Err(Error::InvalidArgument(format!(
                "cumulative integral queried outside [0,1]: t = {}",
                t.as_f64()
            )));
        }
        let t = t.max(T::zero()).min(T::one());
        let cells = self.nodes.len() - 1;
        let k = (t * real_of_usize::<T>(cells))
            .floor()
            .to_usize()
            .unwrap_or(0)
            .min(cells - 1);
        let mut sample = |x: T| sample_coefficient(&self.p, x);
        Ok(self.values[k] + panel(self.nodes[k], t, &mut sample)?)
    }
}
