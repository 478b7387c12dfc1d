//! The three growth conditions on the forcing terms, checked by sampling:
//!
//! * (F1)  f_i(t, y) <  M·A/m  on [0,1] × [0, A]      (strict)
//! * (F2)  f_i(t, y) >  N·B/m  on [0,1] × [B, λB]     (strict)
//! * (F3)  f_i(t, y) <= M·C/m  on [0,1] × [0, C]
//!
//! Margins are signed slacks (positive = condition satisfied at the sample);
//! the report keeps the worst margin, the sample achieving it, and per-term
//! margins so a failing f_i can be identified. Verdicts are "holds at this
//! lattice resolution" — sampling cannot certify more.

use serde::Serialize;

use crate::error::Result;
use crate::problem::{DerivedConstants, ProblemInstance, ThresholdSet};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Witness {
    /// Index of the forcing term achieving the worst margin.
    pub i: usize,
    pub t: f64,
    pub y: f64,
    pub f_value: f64,
}

/// One value per condition.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionTriple<V> {
    pub f1: V,
    pub f2: V,
    pub f3: V,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub f1_holds: bool,
    pub f2_holds: bool,
    pub f3_holds: bool,
    pub worst_margins: ConditionTriple<f64>,
    pub witnesses: ConditionTriple<Witness>,
    /// Worst margin of each forcing term individually, per condition.
    pub per_f_margins: ConditionTriple<Vec<f64>>,
    pub grid: usize,
    pub strict_eps: f64,
    pub constants: DerivedConstants,
}

impl HypothesisReport {
    pub fn all_hold(&self) -> bool {
        self.f1_holds && self.f2_holds && self.f3_holds
    }
}

struct BoxScan {
    worst: f64,
    witness: Witness,
    per_f: Vec<f64>,
}

/// Worst signed margin of `margin_of(f_i(t,y))` over [0,1] × [y_lo, y_hi].
fn scan_box(
    inst: &ProblemInstance,
    y_lo: f64,
    y_hi: f64,
    grid: usize,
    margin_of: impl Fn(f64) -> f64,
) -> Result<BoxScan> {
    let mut per_f = vec![f64::INFINITY; inst.f.len()];
    let mut worst = f64::INFINITY;
    let mut witness = Witness {
        i: 0,
        t: 0.0,
        y: y_lo,
        f_value: f64::NAN,
    };
    for (i, f) in inst.f.iter().enumerate() {
        for kt in 0..=grid {
            let t = kt as f64 / grid as f64;
            for ky in 0..=grid {
                let y = y_lo + (y_hi - y_lo) * ky as f64 / grid as f64;
                let v = f.eval(t, y)?;
                let margin = margin_of(v);
                if margin < per_f[i] {
                    per_f[i] = margin;
                }
                if margin < worst {
                    worst = margin;
                    witness = Witness { i, t, y, f_value: v };
                }
            }
        }
    }
    Ok(BoxScan {
        worst,
        witness,
        per_f,
    })
}

/// Sample all three conditions on (grid+1)² lattices of their respective
/// boxes. The strict conditions (F1), (F2) hold when the worst margin exceeds
/// `strict_eps`; (F3) holds when it is nonnegative.
pub fn check_hypotheses(
    inst: &ProblemInstance,
    thr: &ThresholdSet,
    consts: &DerivedConstants,
    grid: usize,
    strict_eps: f64,
) -> Result<HypothesisReport> {
    let grid = grid.max(1);
    let m_count = inst.f.len() as f64;
    let f1_bound = consts.m * thr.a / m_count;
    let f2_bound = consts.n * thr.b / m_count;
    let f3_bound = consts.m * thr.c / m_count;

    let f1 = scan_box(inst, 0.0, thr.a, grid, |v| f1_bound - v)?;
    let f2 = scan_box(inst, thr.b, thr.b_dagger, grid, |v| v - f2_bound)?;
    let f3 = scan_box(inst, 0.0, thr.c, grid, |v| f3_bound - v)?;

    Ok(HypothesisReport {
        f1_holds: f1.worst > strict_eps,
        f2_holds: f2.worst > strict_eps,
        f3_holds: f3.worst >= 0.0,
        worst_margins: ConditionTriple {
            f1: f1.worst,
            f2: f2.worst,
            f3: f3.worst,
        },
        witnesses: ConditionTriple {
            f1: f1.witness,
            f2: f2.witness,
            f3: f3.witness,
        },
        per_f_margins: ConditionTriple {
            f1: f1.per_f,
            f2: f2.per_f,
            f3: f3.per_f,
        },
        grid,
        strict_eps,
        constants: consts.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprs::parse;

    fn consts(m: f64, n: f64) -> DerivedConstants {
        DerivedConstants {
            alpha: vec![],
            beta: vec![],
            m,
            n,
            lambda_margin: 1.0,
            grid: 64,
        }
    }

    fn instance(f_src: &str, lam: f64) -> ProblemInstance {
        ProblemInstance {
            p: parse("0").unwrap(),
            f: vec![parse(f_src).unwrap()],
            boundary_terms: vec![],
            lam,
        }
    }

    #[test]
    fn constant_forcing_margins() {
        let inst = instance("0.4", 2.0);
        let thr = ThresholdSet::new(1.0, 2.0, 8.0, 2.0);
        let r = check_hypotheses(&inst, &thr, &consts(0.5, 1.0), 32, 0.0).unwrap();
        // f1: 0.5*1/1 - 0.4 = 0.1; f2: 0.4 - 1*2/1 = -1.6; f3: 0.5*8 - 0.4
        assert!(r.f1_holds && !r.f2_holds && r.f3_holds);
        assert!((r.worst_margins.f1 - 0.1).abs() < 1e-12);
        assert!((r.worst_margins.f2 + 1.6).abs() < 1e-12);
        assert!((r.worst_margins.f3 - 3.6).abs() < 1e-12);
        // (F2) witnesses live in [0,1] x [B, lambda*B]
        let w = r.witnesses.f2;
        assert!((0.0..=1.0).contains(&w.t) && (2.0..=4.0).contains(&w.y));
    }

    #[test]
    fn boundary_equality_of_f3_is_accepted() {
        // f = M*C/m exactly: margin 0, non-strict condition holds
        let inst = instance("4", 2.0);
        let thr = ThresholdSet::new(1.0, 2.0, 8.0, 2.0);
        let r = check_hypotheses(&inst, &thr, &consts(0.5, 1.0), 16, 0.0).unwrap();
        assert_eq!(r.worst_margins.f3, 0.0);
        assert!(r.f3_holds);
        assert!(!r.f1_holds); // strict bound M*A/m = 0.5 < 4
    }

    #[test]
    fn strict_eps_tightens_strict_conditions() {
        let inst = instance("0.4", 2.0);
        let thr = ThresholdSet::new(1.0, 2.0, 8.0, 2.0);
        let loose = check_hypotheses(&inst, &thr, &consts(0.5, 1.0), 16, 0.05).unwrap();
        assert!(loose.f1_holds); // margin 0.1 > 0.05
        let tight = check_hypotheses(&inst, &thr, &consts(0.5, 1.0), 16, 0.1).unwrap();
        assert!(!tight.f1_holds); // margin 0.1 not > 0.1
    }

    #[test]
    fn scaling_flips_verdicts_when_margins_cross_zero() {
        let thr = ThresholdSet::new(1.0, 2.0, 8.0, 2.0);
        let c = consts(0.5, 1.0);
        // kappa * 0.4 vs the F1 bound 0.5: holds iff kappa < 1.25
        let holds = check_hypotheses(&instance("1.2*0.4", 2.0), &thr, &c, 16, 0.0).unwrap();
        assert!(holds.f1_holds);
        let fails = check_hypotheses(&instance("1.3*0.4", 2.0), &thr, &c, 16, 0.0).unwrap();
        assert!(!fails.f1_holds);
    }

    #[test]
    fn per_term_margins_identify_the_offender() {
        let mut inst = instance("0.1", 2.0);
        inst.f.push(parse("0.1 + y").unwrap()); // violates F1 near y = A
        let thr = ThresholdSet::new(1.0, 2.0, 8.0, 2.0);
        let r = check_hypotheses(&inst, &thr, &consts(0.5, 1.0), 32, 0.0).unwrap();
        // bound per term is M*A/m = 0.25
        assert!(r.per_f_margins.f1[0] > 0.0);
        assert!(r.per_f_margins.f1[1] < 0.0);
        assert_eq!(r.witnesses.f1.i, 1);
        assert!(!r.f1_holds);
    }

    #[test]
    fn ramp_forcing_matches_hand_margins() {
        let inst = instance("0.4 + 2.6*ramp(y, 1, 2)", 2.0);
        let thr = ThresholdSet::new(1.0, 2.0, 8.0, 2.0);
        let r = check_hypotheses(&inst, &thr, &consts(0.5, 1.0), 64, 0.0).unwrap();
        assert!(r.all_hold());
        assert!((r.worst_margins.f1 - 0.1).abs() < 1e-12); // 0.5 - 0.4
        assert!((r.worst_margins.f2 - 1.0).abs() < 1e-12); // 3 - 2
        assert!((r.worst_margins.f3 - 1.0).abs() < 1e-12); // 4 - 3
    }
}
