//! Problem instances: the coefficient p, the forcing terms f_i, the nonlocal
//! boundary terms (Φ_j with envelopes φ_j, ψ_j at points τ_j), the scalar λ,
//! the threshold constants, and the derived constants M and N.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exprs::{parse, Expr};
use crate::green::GreensKernel;
use crate::quadrature::try_integrate;
use crate::real::Real;

/// One nonlocal boundary term: Φ(τ, y(τ)) together with the envelope pair
/// squeezing it, y·φ(t,y) ≤ Φ(t,y) ≤ y·ψ(t,y).
#[derive(Debug, Clone)]
pub struct BoundaryTerm {
    pub tau: f64,
    /// Φ, the boundary nonlinearity itself.
    pub phi: Expr,
    /// φ, the lower envelope slope.
    pub phi_lower: Expr,
    /// ψ, the upper envelope slope.
    pub psi_upper: Expr,
}

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    /// Coefficient of the linear part, a function of t only.
    pub p: Expr,
    /// Forcing terms f_i(t, y); at least one.
    pub f: Vec<Expr>,
    pub boundary_terms: Vec<BoundaryTerm>,
    pub lam: f64,
}

impl ProblemInstance {
    /// Σ_i f_i(t, y).
    pub fn forcing_sum<T: Real>(&self, t: T, y: T) -> Result<T> {
        let mut acc = T::zero();
        for f in &self.f {
            acc += f.eval(t, y)?;
        }
        Ok(acc)
    }
}

/// The threshold constants 0 < A < B < λB ≤ C; `b_dagger` is λB, not a free
/// parameter.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThresholdSet {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "B_dagger")]
    pub b_dagger: f64,
}

impl ThresholdSet {
    pub fn new(a: f64, b: f64, c: f64, lam: f64) -> Self {
        ThresholdSet {
            a,
            b,
            c,
            b_dagger: lam * b,
        }
    }
}

/// A single failed sample condition. Violations are data, not errors: the
/// caller decides whether to proceed.
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub condition: String,
    /// The (t, y) sample where the condition failed, when one exists.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<[f64; 2]>,
    pub detail: String,
}

const MAX_VIOLATIONS: usize = 100;

/// Sample every standing hypothesis of the problem class on a
/// (grid+1)² lattice of [0,1] × [0,C] and report everything that fails,
/// up to 100 entries. An empty result means "holds at this resolution".
pub fn validate(inst: &ProblemInstance, thr: &ThresholdSet, grid: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    let grid = grid.max(1);
    let full = |out: &Vec<Violation>| out.len() >= MAX_VIOLATIONS;

    // threshold ordering
    let lam_b = inst.lam * thr.b;
    for (ok, detail) in [
        (thr.a > 0.0, format!("A = {} must be positive", thr.a)),
        (thr.a < thr.b, format!("A = {} must be below B = {}", thr.a, thr.b)),
        (
            thr.b < lam_b,
            format!("B = {} must be below lambda*B = {lam_b} (lambda must exceed 1)", thr.b),
        ),
        (
            lam_b <= thr.c,
            format!("lambda*B = {lam_b} must not exceed C = {}", thr.c),
        ),
        (
            thr.b_dagger == lam_b,
            format!("B_dagger = {} must equal lambda*B = {lam_b}", thr.b_dagger),
        ),
    ] {
        if !ok {
            out.push(Violation {
                condition: "threshold ordering".into(),
                point: None,
                detail,
            });
        }
    }

    if inst.f.is_empty() {
        out.push(Violation {
            condition: "forcing terms".into(),
            point: None,
            detail: "at least one forcing term f_i is required".into(),
        });
    }

    // nonlocal points: 0 <= tau_1 < ... < tau_n <= 1
    for (j, bt) in inst.boundary_terms.iter().enumerate() {
        if !(0.0..=1.0).contains(&bt.tau) {
            out.push(Violation {
                condition: "tau range".into(),
                point: None,
                detail: format!("tau[{j}] = {} lies outside [0,1]", bt.tau),
            });
        }
        if j > 0 && !(inst.boundary_terms[j - 1].tau < bt.tau) {
            out.push(Violation {
                condition: "tau ordering".into(),
                point: None,
                detail: format!(
                    "tau[{}] = {} is not strictly below tau[{j}] = {}",
                    j - 1,
                    inst.boundary_terms[j - 1].tau,
                    bt.tau
                ),
            });
        }
    }

    let ts: Vec<f64> = (0..=grid).map(|k| k as f64 / grid as f64).collect();
    let ys: Vec<f64> = (0..=grid).map(|k| thr.c * k as f64 / grid as f64).collect();

    // p >= 0, function of t only
    if inst.p.uses_y() {
        out.push(Violation {
            condition: "coefficient variables".into(),
            point: None,
            detail: "p must depend on t only".into(),
        });
    } else {
        for &t in &ts {
            if full(&out) {
                return out;
            }
            match inst.p.eval(t, 0.0) {
                Ok(v) if v >= 0.0 => {}
                Ok(v) => out.push(Violation {
                    condition: "p >= 0".into(),
                    point: Some([t, 0.0]),
                    detail: format!("p({t}) = {v}"),
                }),
                Err(e) => out.push(Violation {
                    condition: "p evaluates".into(),
                    point: Some([t, 0.0]),
                    detail: e.to_string(),
                }),
            }
        }
    }

    // f_i >= 0 on [0,1] x [0,C]
    for (i, f) in inst.f.iter().enumerate() {
        for &t in &ts {
            for &y in &ys {
                if full(&out) {
                    return out;
                }
                match f.eval(t, y) {
                    Ok(v) if v >= 0.0 => {}
                    Ok(v) => out.push(Violation {
                        condition: format!("f[{i}] >= 0"),
                        point: Some([t, y]),
                        detail: format!("f[{i}]({t}, {y}) = {v}"),
                    }),
                    Err(e) => out.push(Violation {
                        condition: format!("f[{i}] evaluates"),
                        point: Some([t, y]),
                        detail: e.to_string(),
                    }),
                }
            }
        }
    }

    // envelopes: 0 <= y*phi_j <= Phi_j <= y*psi_j, with phi_j, psi_j > 0
    for (j, bt) in inst.boundary_terms.iter().enumerate() {
        for &t in &ts {
            for &y in &ys {
                if full(&out) {
                    return out;
                }
                let (cap, lo, hi) = match (
                    bt.phi.eval(t, y),
                    bt.phi_lower.eval(t, y),
                    bt.psi_upper.eval(t, y),
                ) {
                    (Ok(a), Ok(b), Ok(c)) => (a, b, c),
                    (a, b, c) => {
                        let e = [a.err(), b.err(), c.err()]
                            .into_iter()
                            .flatten()
                            .next()
                            .expect("at least one error");
                        out.push(Violation {
                            condition: format!("boundary term {j} evaluates"),
                            point: Some([t, y]),
                            detail: e.to_string(),
                        });
                        continue;
                    }
                };
                let slack = 1e-12 * cap.abs().max(y.abs().max(1.0) * hi.abs().max(lo.abs()));
                if cap < 0.0 {
                    out.push(Violation {
                        condition: format!("Phi[{j}] >= 0"),
                        point: Some([t, y]),
                        detail: format!("Phi[{j}]({t}, {y}) = {cap}"),
                    });
                }
                if !(lo > 0.0) {
                    out.push(Violation {
                        condition: format!("phi[{j}] > 0"),
                        point: Some([t, y]),
                        detail: format!("phi[{j}]({t}, {y}) = {lo}"),
                    });
                }
                if !(hi > 0.0) {
                    out.push(Violation {
                        condition: format!("psi[{j}] > 0"),
                        point: Some([t, y]),
                        detail: format!("psi[{j}]({t}, {y}) = {hi}"),
                    });
                }
                if y * lo > cap + slack {
                    out.push(Violation {
                        condition: format!("y*phi[{j}] <= Phi[{j}]"),
                        point: Some([t, y]),
                        detail: format!("y*phi = {} exceeds Phi = {cap}", y * lo),
                    });
                }
                if cap > y * hi + slack {
                    out.push(Violation {
                        condition: format!("Phi[{j}] <= y*psi[{j}]"),
                        point: Some([t, y]),
                        detail: format!("Phi = {cap} exceeds y*psi = {}", y * hi),
                    });
                }
            }
        }
    }

    out
}

/// Everything the growth-condition checks need beyond the raw instance: the
/// envelope extrema α_j, β_j, the constants M and N, and the admissibility
/// margin λ − (1 + Σβ_j)·exp(∫₀¹p).
#[derive(Debug, Clone, Serialize)]
pub struct DerivedConstants {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "N")]
    pub n: f64,
    pub lambda_margin: f64,
    /// Lattice resolution used for the extrema scans.
    pub grid: usize,
}

/// Compute α_j, β_j by dense scan plus local refinement, the kernel integrals
/// ∫₀¹G(1,s)ds and ∫₀¹G(0,s)ds by quadrature, and from them M, N, and the
/// λ-admissibility margin. Errors if any of M, N, margin fails to be positive:
/// the multiplicity machinery does not apply to such instances.
pub fn derive_constants<T: Real>(
    inst: &ProblemInstance,
    thr: &ThresholdSet,
    kernel: &GreensKernel<T>,
    grid: usize,
    quad_panels: usize,
) -> Result<DerivedConstants> {
    let grid = grid.max(2);
    let mut alpha = Vec::with_capacity(inst.boundary_terms.len());
    let mut beta = Vec::with_capacity(inst.boundary_terms.len());
    for bt in &inst.boundary_terms {
        // beta_j = max of psi_j over [0,1] x [0,C]
        beta.push(extremum(&bt.psi_upper, 0.0, thr.c, grid, true)?.0);
        // alpha_j = min of phi_j over [0,1] x [B, lambda*B]
        alpha.push(extremum(&bt.phi_lower, thr.b, thr.b_dagger, grid, false)?.0);
    }
    let beta_sum: f64 = beta.iter().sum();
    let alpha_sum: f64 = alpha.iter().sum();

    let one = T::one();
    let int_g1 = try_integrate(|s| kernel.evaluate(one, s), T::zero(), one, quad_panels)?.as_f64();
    let int_g0 =
        try_integrate(|s| kernel.evaluate(T::zero(), s), T::zero(), one, quad_panels)?.as_f64();

    let exp_p1 = kernel.exp_p1().as_f64();
    let denom = kernel.denom().as_f64();
    let m = (1.0 - exp_p1 * beta_sum / denom) / int_g1;
    let n = (1.0 - alpha_sum / denom) / int_g0;
    let lambda_margin = inst.lam - (1.0 + beta_sum) * exp_p1;

    if !(m > 0.0 && n > 0.0 && lambda_margin > 0.0) {
        return Err(Error::InadmissibleLambdaMargin {
            m,
            n,
            margin: lambda_margin,
        });
    }
    Ok(DerivedConstants {
        alpha,
        beta,
        m,
        n,
        lambda_margin,
        grid,
    })
}

/// Extremum of `e` over [0,1] × [y_lo, y_hi]: dense lattice scan, then a few
/// rounds of coordinate-wise golden-section refinement around the best cell.
/// Refinement can only improve on the scan value. Returns (value, t, y).
fn extremum(
    e: &Expr,
    y_lo: f64,
    y_hi: f64,
    grid: usize,
    maximize: bool,
) -> Result<(f64, f64, f64)> {
    let sign = if maximize { 1.0 } else { -1.0 };
    let eval = |t: f64, y: f64| -> Result<f64> { Ok(sign * e.eval(t, y)?) };

    let ht = 1.0 / grid as f64;
    let hy = (y_hi - y_lo) / grid as f64;
    let mut best = (f64::NEG_INFINITY, 0.0, y_lo);
    for i in 0..=grid {
        let t = i as f64 * ht;
        for k in 0..=grid {
            let y = y_lo + k as f64 * hy;
            let v = eval(t, y)?;
            if v > best.0 {
                best = (v, t, y);
            }
        }
    }

    // local refinement inside the +-1-cell box around the best lattice point
    let (mut t, mut y) = (best.1, best.2);
    for _ in 0..3 {
        t = golden_max(|x| eval(x, y), (t - ht).max(0.0), (t + ht).min(1.0))?;
        y = golden_max(|x| eval(t, x), (y - hy).max(y_lo), (y + hy).min(y_hi))?;
    }
    let refined = eval(t, y)?;
    if refined > best.0 {
        best = (refined, t, y);
    }
    Ok((sign * best.0, best.1, best.2))
}

fn golden_max(mut f: impl FnMut(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..64 {
        if hi - lo < 1e-13 {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        }
    }
    Ok(0.5 * (lo + hi))
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

/// Solver and sampling parameters; every field has a default and can be
/// overridden per instance file (or by CLI flags downstream).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Lattice resolution for validation, extrema, and hypothesis scans.
    pub grid: usize,
    /// Quadrature panels per unit interval for the kernel integrals.
    pub quad_panels: usize,
    /// Runge-Kutta steps for the IVP (curves carry ode_steps + 1 nodes).
    pub ode_steps: usize,
    /// Number of initial-value samples in the shooting scan.
    pub scan_points: usize,
    /// Bisection stops when the bracket is narrower than this.
    pub root_tol: f64,
    /// Acceptance threshold for the ODE and boundary residual oracles.
    pub residual_tol: f64,
    /// Strictness gap demanded of the strict growth conditions; sampled
    /// margins must exceed this for a "holds" verdict. 0 keeps the bare
    /// inequality.
    pub strict_eps: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            grid: 257,
            quad_panels: 64,
            ode_steps: 2048,
            scan_points: 1024,
            root_tol: 1e-10,
            residual_tol: 1e-6,
            strict_eps: 0.0,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    p: String,
    f: Vec<String>,
    lambda: f64,
    #[serde(default)]
    boundary_terms: Vec<RawBoundaryTerm>,
    thresholds: RawThresholds,
    #[serde(default)]
    settings: Settings,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBoundaryTerm {
    tau: f64,
    #[serde(rename = "Phi")]
    phi: String,
    #[serde(rename = "phi")]
    phi_lower: String,
    #[serde(rename = "psi")]
    psi_upper: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawThresholds {
    #[serde(rename = "A")]
    a: f64,
    #[serde(rename = "B")]
    b: f64,
    #[serde(rename = "C")]
    c: f64,
}

/// A fully parsed instance file.
#[derive(Debug, Clone)]
pub struct LoadedInstance {
    pub instance: ProblemInstance,
    pub thresholds: ThresholdSet,
    pub settings: Settings,
    pub path: PathBuf,
    /// SHA-256 of the raw file bytes, echoed into reports.
    pub sha256: String,
}

/// Range-check a settings block. File values and command-line overrides go
/// through the same gate.
pub fn check_settings(settings: &Settings) -> Result<()> {
    for (name, ok) in [
        ("grid", settings.grid >= 2),
        ("quad_panels", settings.quad_panels >= 1),
        ("ode_steps", settings.ode_steps >= 2),
        ("scan_points", settings.scan_points >= 2),
        ("root_tol", settings.root_tol > 0.0),
        ("residual_tol", settings.residual_tol > 0.0),
        ("strict_eps", settings.strict_eps >= 0.0),
    ] {
        if !ok {
            return Err(Error::Schema {
                detail: format!("settings.{name} is out of range"),
            });
        }
    }
    Ok(())
}

fn parse_field(field: &str, src: &str) -> Result<Expr> {
    parse(src).map_err(|e| Error::InstanceExpr {
        field: field.to_string(),
        expr: src.to_string(),
        source: Box::new(e),
    })
}

/// Load and structurally check an instance file. Semantic (sampled)
/// validation is a separate step: [`validate`].
pub fn load_instance(path: &Path) -> Result<LoadedInstance> {
    let bytes = std::fs::read(path)?;
    let sha256 = hex(&Sha256::digest(&bytes));
    let raw: RawInstance = serde_json::from_slice(&bytes)?;

    if raw.f.is_empty() {
        return Err(Error::Schema {
            detail: "`f` must contain at least one expression".into(),
        });
    }
    if !raw.lambda.is_finite() {
        return Err(Error::Schema {
            detail: format!("`lambda` must be finite, got {}", raw.lambda),
        });
    }
    check_settings(&raw.settings)?;

    let p = parse_field("p", &raw.p)?;
    let mut f = Vec::with_capacity(raw.f.len());
    for (i, src) in raw.f.iter().enumerate() {
        f.push(parse_field(&format!("f[{i}]"), src)?);
    }
    let mut boundary_terms = Vec::with_capacity(raw.boundary_terms.len());
    for (j, bt) in raw.boundary_terms.iter().enumerate() {
        boundary_terms.push(BoundaryTerm {
            tau: bt.tau,
            phi: parse_field(&format!("boundary_terms[{j}].Phi"), &bt.phi)?,
            phi_lower: parse_field(&format!("boundary_terms[{j}].phi"), &bt.phi_lower)?,
            psi_upper: parse_field(&format!("boundary_terms[{j}].psi"), &bt.psi_upper)?,
        });
    }

    Ok(LoadedInstance {
        instance: ProblemInstance {
            p,
            f,
            boundary_terms,
            lam: raw.lambda,
        },
        thresholds: ThresholdSet::new(raw.thresholds.a, raw.thresholds.b, raw.thresholds.c, raw.lambda),
        settings: raw.settings,
        path: path.to_path_buf(),
        sha256,
    })
}

fn hex(bytes: &[u8]) -> String {
    use std::fmt::Write;
    bytes.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}
