//! The cone of nonnegative nondecreasing curves, the concave functional
//! θ(y) = min over [0,1] of y, and the localization of solutions relative to
//! the thresholds A < B < C:
//!
//! - `Y1`: ‖y‖ < A (small solution),
//! - `Y2`: θ(y) > B (large solution, uniformly above B),
//! - `Y3`: ‖y‖ > A and θ(y) < B (intermediate solution),
//!
//! with strict, exact comparisons; anything on a boundary stays
//! `UNCLASSIFIED`. Three nonempty buckets certify the multiplicity
//! statement the hypothesis checker is calibrated for.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::SolutionCurve;
use crate::problem::ThresholdSet;
use crate::real::{real, real_of_usize, Real};

/// Slack used by membership checks: RK4 curves sit in the cone only up to
/// rounding noise.
pub const CONE_TOL: f64 = 1e-9;

/// θ(y): the minimum value over the grid. For a curve in the cone this is
/// y(0), but the definition does not assume membership.
pub fn theta<T: Real>(curve: &SolutionCurve<T>) -> T {
    curve.min_value()
}

/// Cone membership within `tol`: no value below −tol, no decrease by more
/// than tol between adjacent nodes.
pub fn check_membership<T: Real>(curve: &SolutionCurve<T>, tol: T) -> Result<()> {
    let v = curve.values();
    for (k, &x) in v.iter().enumerate() {
        if x < -tol {
            return Err(Error::NotInCone {
                detail: format!(
                    "value {} at node {k} of {} is negative",
                    x.as_f64(),
                    v.len()
                ),
            });
        }
    }
    for (k, w) in v.windows(2).enumerate() {
        if w[1] < w[0] - tol {
            return Err(Error::NotInCone {
                detail: format!(
                    "curve decreases from {} to {} across nodes {k}..{}",
                    w[0].as_f64(),
                    w[1].as_f64(),
                    k + 1
                ),
            });
        }
    }
    Ok(())
}

/// Membership in the open norm ball: in the cone and ‖y‖ < c strictly.
pub fn in_p_c<T: Real>(curve: &SolutionCurve<T>, c: T, tol: T) -> bool {
    check_membership(curve, tol).is_ok() && curve.sup_norm() < c
}

/// Membership in the order-interval set: in the cone, a ≤ θ(y), ‖y‖ ≤ b.
pub fn in_p_theta<T: Real>(curve: &SolutionCurve<T>, a: T, b: T, tol: T) -> bool {
    check_membership(curve, tol).is_ok() && theta(curve) >= a && curve.sup_norm() <= b
}

/// Verify θ is concave along the segment between two curves:
/// θ(α·y + (1−α)·z) ≥ α·θ(y) + (1−α)·θ(z) − slack, sampled at `samples`
/// interior α values. Neither curve needs to be in the cone; a pointwise
/// minimum is concave on the whole space.
pub fn concavity_check<T: Real>(
    y: &SolutionCurve<T>,
    z: &SolutionCurve<T>,
    samples: usize,
) -> Result<bool> {
    if y.len() != z.len() {
        return Err(Error::GridMismatch {
            left: y.len(),
            right: z.len(),
        });
    }
    let slack = real::<T>(1e-12);
    for j in 1..=samples {
        let alpha = real_of_usize::<T>(j) / real_of_usize::<T>(samples + 1);
        let blend: Vec<T> = y
            .values()
            .iter()
            .zip(z.values())
            .map(|(&a, &b)| alpha * a + (T::one() - alpha) * b)
            .collect();
        let mixed = theta(&SolutionCurve::from_values(blend)?);
        let combo = alpha * theta(y) + (T::one() - alpha) * theta(z);
        if mixed < combo - slack {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Bucket {
    Y1,
    Y2,
    Y3,
    #[serde(rename = "UNCLASSIFIED")]
    Unclassified,
}

impl std::fmt::Display for Bucket {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Bucket::Y1 => "Y1",
            Bucket::Y2 => "Y2",
            Bucket::Y3 => "Y3",
            Bucket::Unclassified => "UNCLASSIFIED",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolutionLocalization {
    pub sup_norm: f64,
    pub theta: f64,
    pub y0: f64,
    pub y1: f64,
    pub bucket: Bucket,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalizationReport {
    pub solutions: Vec<SolutionLocalization>,
    pub theorem_satisfied: bool,
}

/// Classify one curve against the thresholds. Comparisons are exact: a curve
/// whose norm sits on a threshold is deliberately left unclassified rather
/// than nudged into a bucket.
pub fn bucket_of<T: Real>(curve: &SolutionCurve<T>, thr: &ThresholdSet) -> Bucket {
    let norm = curve.sup_norm();
    let th = theta(curve);
    let a = real::<T>(thr.a);
    let b = real::<T>(thr.b);
    if norm < a {
        Bucket::Y1
    } else if th > b {
        Bucket::Y2
    } else if norm > a && th < b {
        Bucket::Y3
    } else {
        Bucket::Unclassified
    }
}

/// Localize every curve and decide whether the three-solution pattern is
/// realized: at least one curve in each of Y1, Y2, Y3. Every curve must be
/// in the cone (within [`CONE_TOL`]).
pub fn classify<T: Real>(
    curves: &[SolutionCurve<T>],
    thr: &ThresholdSet,
) -> Result<LocalizationReport> {
    let tol = real::<T>(CONE_TOL);
    let mut solutions = Vec::with_capacity(curves.len());
    let mut seen = [false; 3];
    for curve in curves {
        check_membership(curve, tol)?;
        let bucket = bucket_of(curve, thr);
        match bucket {
            Bucket::Y1 => seen[0] = true,
            Bucket::Y2 => seen[1] = true,
            Bucket::Y3 => seen[2] = true,
            Bucket::Unclassified => {}
        }
        solutions.push(SolutionLocalization {
            sup_norm: curve.sup_norm().as_f64(),
            theta: theta(curve).as_f64(),
            y0: curve.y0().as_f64(),
            y1: curve.y1().as_f64(),
            bucket,
        });
    }
    Ok(LocalizationReport {
        solutions,
        theorem_satisfied: seen.iter().all(|&s| s),
    })
}
