//! Shooting solver. A solution of the boundary value problem is an initial
//! value c with R(c) = 0, where y(·; c) solves the IVP
//!
//! ```text
//! y′ = p(t)·y + Σᵢ fᵢ(t, y),   y(0) = c,
//! R(c) = λ·c − y(1; c) − Σⱼ Φⱼ(τⱼ, y(τⱼ; c)).
//! ```
//!
//! The scan samples R on a uniform c-grid over [0, c_max], collects sign
//! changes (and exact zeros) into brackets, and bisection polishes each
//! bracket. IVPs that leave the safety box [0, bound] mark their scan point
//! invalid rather than aborting the scan; brackets never span invalid points.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operator::{boundary_residual, ode_residual, MonotoneCubic, SolutionCurve};
use crate::pool;
use crate::problem::{ProblemInstance, Settings, ThresholdSet};
use crate::real::{real, real_of_usize, Real};

/// Classical fourth-order Runge-Kutta on `steps` uniform steps.
/// Fails with [`Error::IvpBlowup`] as soon as a node value is non-finite or
/// exceeds `bound` in magnitude.
pub fn integrate_ivp<T: Real>(
    inst: &ProblemInstance,
    c: T,
    steps: usize,
    bound: T,
) -> Result<SolutionCurve<T>> {
    if steps < 2 {
        return Err(Error::InvalidArgument(
            "the IVP integrator needs at least two steps".into(),
        ));
    }
    if !(bound > T::zero()) {
        return Err(Error::InvalidArgument(
            "the IVP safety bound must be positive".into(),
        ));
    }
    let h = T::one() / real_of_usize::<T>(steps);
    let half = h / real(2.0);
    let sixth = h / real(6.0);
    let two = real::<T>(2.0);
    let rhs = |t: T, y: T| -> Result<T> {
        Ok(inst.p.eval(t, T::zero())? * y + inst.forcing_sum(t, y)?)
    };
    let mut values = Vec::with_capacity(steps + 1);
    let mut y = c;
    for k in 0..=steps {
        let t = real_of_usize::<T>(k) * h;
        if !y.is_finite() || y.abs() > bound {
            return Err(Error::IvpBlowup {
                t: t.as_f64(),
                value: y.as_f64(),
                bound: bound.as_f64(),
            });
        }
        values.push(y);
        if k == steps {
            break;
        }
        let k1 = rhs(t, y)?;
        let k2 = rhs(t + half, y + half * k1)?;
        let k3 = rhs(t + half, y + half * k2)?;
        let k4 = rhs(t + h, y + h * k3)?;
        y += sixth * (k1 + two * (k2 + k3) + k4);
    }
    SolutionCurve::from_values(values)
}

/// R(c), the defect of the boundary condition along the shot trajectory.
pub fn shoot_residual<T: Real>(
    inst: &ProblemInstance,
    c: T,
    steps: usize,
    bound: T,
) -> Result<T> {
    let curve = integrate_ivp(inst, c, steps, bound)?;
    boundary_residual(inst, &curve)
}

/// A c-interval with a sign change of R, or (when `degenerate`) a single
/// scan node where R vanished exactly; then `lo == hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket<T> {
    pub lo: T,
    pub hi: T,
    pub degenerate: bool,
}

/// R sampled on the scan grid. `residuals[k] = None` marks a blown-up IVP.
#[derive(Debug, Clone)]
pub struct ResidualProfile<T> {
    pub c_grid: Vec<T>,
    pub residuals: Vec<Option<T>>,
    pub brackets: Vec<Bracket<T>>,
}

impl<T> ResidualProfile<T> {
    pub fn invalid_points(&self) -> usize {
        self.residuals.iter().filter(|r| r.is_none()).count()
    }
}

/// Sample R on `scan_points` uniform nodes over [0, c_max] (endpoints
/// included) and extract brackets. The sweep runs on the rayon pool chosen
/// by `CONELW_THREADS`; results are keyed by index, so the outcome does not
/// depend on the thread count.
pub fn scan_residual<T: Real>(
    inst: &ProblemInstance,
    c_max: T,
    scan_points: usize,
    steps: usize,
    bound: T,
) -> Result<ResidualProfile<T>> {
    if scan_points < 2 {
        return Err(Error::InvalidArgument(
            "the scan needs at least two points".into(),
        ));
    }
    if !(c_max > T::zero()) {
        return Err(Error::InvalidArgument(
            "the scan range must have positive length".into(),
        ));
    }
    let spacing = real_of_usize::<T>(scan_points - 1);
    let c_grid: Vec<T> = (0..scan_points)
        .map(|k| c_max * real_of_usize::<T>(k) / spacing)
        .collect();
    let residuals: Vec<Option<T>> = pool::install(|| {
        c_grid
            .par_iter()
            .map(|&c| match shoot_residual(inst, c, steps, bound) {
                Ok(r) => Ok(Some(r)),
                Err(Error::IvpBlowup { .. }) => Ok(None),
                Err(other) => Err(other),
            })
            .collect::<Result<_>>()
    })?;

    let mut brackets = Vec::new();
    for k in 0..scan_points {
        let Some(r) = residuals[k] else { continue };
        if r == T::zero() {
            brackets.push(Bracket {
                lo: c_grid[k],
                hi: c_grid[k],
                degenerate: true,
            });
        } else if k + 1 < scan_points {
            if let Some(r_next) = residuals[k + 1] {
                if r * r_next < T::zero() {
                    brackets.push(Bracket {
                        lo: c_grid[k],
                        hi: c_grid[k + 1],
                        degenerate: false,
                    });
                }
            }
        }
    }
    Ok(ResidualProfile {
        c_grid,
        residuals,
        brackets,
    })
}

/// Bisect a bracket down to width `root_tol` and return the midpoint.
/// Degenerate brackets return their node unchanged. A blow-up at an interior
/// point aborts with [`Error::BracketInvalidated`]; the caller may drop the
/// bracket and continue with the rest.
pub fn refine_root<T: Real>(
    inst: &ProblemInstance,
    bracket: &Bracket<T>,
    steps: usize,
    root_tol: T,
    bound: T,
) -> Result<T> {
    if bracket.degenerate {
        return Ok(bracket.lo);
    }
    if !(root_tol > T::zero()) {
        return Err(Error::InvalidArgument(
            "the root tolerance must be positive".into(),
        ));
    }
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    let invalidated = |c: T, e: Error| match e {
        Error::IvpBlowup { t, value, .. } => Error::BracketInvalidated {
            lo: bracket.lo.as_f64(),
            hi: bracket.hi.as_f64(),
            detail: format!(
                "IVP from c = {} blew up at t = {t} (y = {value})",
                c.as_f64()
            ),
        },
        other => other,
    };
    let mut r_lo = shoot_residual(inst, lo, steps, bound).map_err(|e| invalidated(lo, e))?;
    let r_hi = shoot_residual(inst, hi, steps, bound).map_err(|e| invalidated(hi, e))?;
    if r_lo == T::zero() {
        return Ok(lo);
    }
    if r_hi == T::zero() {
        return Ok(hi);
    }
    if r_lo * r_hi > T::zero() {
        return Err(Error::InvalidBracket {
            lo: lo.as_f64(),
            hi: hi.as_f64(),
            r_lo: r_lo.as_f64(),
            r_hi: r_hi.as_f64(),
        });
    }
    while hi - lo > root_tol {
        let mid = (lo + hi) / real(2.0);
        if mid <= lo || mid >= hi {
            break; // interval no longer splittable at this precision
        }
        let r_mid = shoot_residual(inst, mid, steps, bound).map_err(|e| invalidated(mid, e))?;
        if r_mid == T::zero() {
            return Ok(mid);
        }
        if r_lo * r_mid < T::zero() {
            hi = mid;
        } else {
            lo = mid;
            r_lo = r_mid;
        }
    }
    Ok((lo + hi) / real(2.0))
}

/// A polished root together with its trajectory and defect measurements.
#[derive(Debug, Clone)]
pub struct LocatedSolution<T> {
    pub c: T,
    pub curve: SolutionCurve<T>,
    pub ode_mean: T,
    pub ode_max: T,
    pub boundary: T,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome<T> {
    pub profile: ResidualProfile<T>,
    pub solutions: Vec<LocatedSolution<T>>,
    pub notes: Vec<String>,
}

/// Full pipeline: scan [0, C], refine every bracket, merge near-duplicate
/// roots (within 10·root_tol), and keep candidates whose mean ODE defect and
/// boundary defect both pass `residual_tol`. Rejections and abandoned
/// brackets become notes, not errors.
pub fn solve_all<T: Real>(
    inst: &ProblemInstance,
    thr: &ThresholdSet,
    settings: &Settings,
) -> Result<SolveOutcome<T>> {
    let bound = real::<T>(10.0 * thr.c);
    let profile = scan_residual(
        inst,
        real::<T>(thr.c),
        settings.scan_points,
        settings.ode_steps,
        bound,
    )?;
    let mut notes = Vec::new();
    let invalid = profile.invalid_points();
    if invalid > 0 {
        notes.push(format!(
            "{invalid} of {} scan points discarded: trajectories left [0, {}]",
            profile.c_grid.len(),
            bound.as_f64()
        ));
    }

    let root_tol = real::<T>(settings.root_tol);
    let mut roots: Vec<T> = Vec::new();
    for bracket in &profile.brackets {
        match refine_root(inst, bracket, settings.ode_steps, root_tol, bound) {
            Ok(c) => roots.push(c),
            Err(Error::BracketInvalidated { lo, hi, detail }) => {
                notes.push(format!("bracket [{lo}, {hi}] abandoned: {detail}"));
            }
            Err(other) => return Err(other),
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let merge_tol = root_tol * real::<T>(10.0);
    let mut merged: Vec<T> = Vec::new();
    for c in roots {
        if let Some(&last) = merged.last() {
            if c - last <= merge_tol {
                notes.push(format!(
                    "roots at c = {:.12e} and c = {:.12e} merged (closer than ten root tolerances)",
                    last.as_f64(),
                    c.as_f64()
                ));
                continue;
            }
        }
        merged.push(c);
    }

    let res_tol = real::<T>(settings.residual_tol);
    let mut solutions = Vec::new();
    for c in merged {
        let curve = integrate_ivp(inst, c, settings.ode_steps, bound)?;
        let ode = ode_residual(inst, &curve)?;
        let bc = boundary_residual(inst, &curve)?;
        if ode.mean_abs <= res_tol && bc.abs() <= res_tol {
            solutions.push(LocatedSolution {
                c,
                curve,
                ode_mean: ode.mean_abs,
                ode_max: ode.max_abs,
                boundary: bc,
            });
        } else {
            notes.push(format!(
                "candidate at c = {:.12e} rejected: mean ODE defect {:.3e}, boundary defect {:.3e} exceed tolerance {:.3e}",
                c.as_f64(),
                ode.mean_abs.as_f64(),
                bc.as_f64(),
                settings.residual_tol
            ));
        }
    }
    Ok(SolveOutcome {
        profile,
        solutions,
        notes,
    })
}

/// Interpolated trajectory value, for checks at off-grid abscissae.
pub fn trajectory_value<T: Real>(curve: &SolutionCurve<T>, t: T) -> T {
    MonotoneCubic::new(curve).eval(t)
}
