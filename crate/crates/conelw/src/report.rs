//! Pipeline drivers and the JSON run report. These run the f64 pipeline:
//! validate → constants → hypotheses (`run_verify`), then scan → refine →
//! classify (`run_solve`). Reports are deterministic for identical inputs
//! and flags; stage timings are therefore opt-in and excluded by default.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::cone::{self, LocalizationReport};
use crate::error::Error;
use crate::green::build_kernel;
use crate::hypotheses::{check_hypotheses, HypothesisReport};
use crate::problem::{
    derive_constants, validate, DerivedConstants, LoadedInstance, Violation,
};
use crate::problem::{Settings, ThresholdSet};
use crate::shooting::solve_all;

#[derive(Debug, Clone, Serialize)]
pub struct InstanceEcho {
    pub path: String,
    pub sha256: String,
    pub lambda: f64,
    pub thresholds: ThresholdSet,
    pub settings: Settings,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScanSummary {
    pub scan_points: usize,
    pub c_max: f64,
    pub invalid_points: usize,
    pub brackets: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionRecord {
    pub c: f64,
    pub y0: f64,
    pub y1: f64,
    pub sup_norm: f64,
    pub theta: f64,
    pub nodes: usize,
    pub ode_residual_mean: f64,
    pub ode_residual_max: f64,
    pub boundary_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub instance: InstanceEcho,
    pub violations: Vec<Violation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<DerivedConstants>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypotheses: Option<HypothesisReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSummary>,
    pub solutions: Vec<SolutionRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub localization: Option<LocalizationReport>,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<BTreeMap<String, f64>>,
}

/// Overall outcome, mapped one-to-one onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Everything requested held.
    Pass,
    /// The pipeline ran but a checked property failed (a hypothesis, an
    /// admissibility margin, or the three-bucket pattern).
    Fail,
    /// The instance could not be processed: load, schema, validation, or
    /// an unrecoverable numerical error.
    Structural,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Structural => 2,
        }
    }
}

fn echo_of(loaded: &LoadedInstance) -> InstanceEcho {
    InstanceEcho {
        path: loaded.path.display().to_string(),
        sha256: loaded.sha256.clone(),
        lambda: loaded.instance.lam,
        thresholds: loaded.thresholds,
        settings: loaded.settings.clone(),
    }
}

struct Timings {
    enabled: bool,
    map: BTreeMap<String, f64>,
}

impl Timings {
    fn new(enabled: bool) -> Self {
        Timings {
            enabled,
            map: BTreeMap::new(),
        }
    }

    fn time<R>(&mut self, stage: &str, op: impl FnOnce() -> R) -> R {
        if !self.enabled {
            return op();
        }
        let start = Instant::now();
        let out = op();
        self.map
            .insert(stage.to_string(), start.elapsed().as_secs_f64() * 1e3);
        out
    }

    fn finish(self) -> Option<BTreeMap<String, f64>> {
        if self.enabled {
            Some(self.map)
        } else {
            None
        }
    }
}

/// True for errors that mean "the admissibility condition on λ fails":
/// these are verdicts, not crashes.
fn is_admissibility_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::InadmissibleLambda { .. } | Error::InadmissibleLambdaMargin { .. }
    )
}

/// Validation, derived constants, hypothesis check. Never solves.
pub fn run_verify(loaded: &LoadedInstance, timings: bool) -> (Verdict, RunReport) {
    let mut t = Timings::new(timings);
    let mut report = RunReport {
        command: "verify".into(),
        instance: echo_of(loaded),
        violations: Vec::new(),
        constants: None,
        hypotheses: None,
        scan: None,
        solutions: Vec::new(),
        localization: None,
        notes: Vec::new(),
        timings_ms: None,
    };
    let settings = &loaded.settings;

    report.violations = t.time("validate", || {
        validate(&loaded.instance, &loaded.thresholds, settings.grid)
    });
    if !report.violations.is_empty() {
        report.notes.push(format!(
            "validation failed with {} violation(s); nothing further was checked",
            report.violations.len()
        ));
        report.timings_ms = t.finish();
        return (Verdict::Structural, report);
    }

    let kernel = match t.time("kernel", || {
        build_kernel::<f64>(&loaded.instance.p, loaded.instance.lam, settings.grid)
    }) {
        Ok(k) => k,
        Err(e) => {
            let verdict = if is_admissibility_failure(&e) {
                Verdict::Fail
            } else {
                Verdict::Structural
            };
            report.notes.push(e.to_string());
            report.timings_ms = t.finish();
            return (verdict, report);
        }
    };

    match t.time("constants", || {
        derive_constants::<f64>(
            &loaded.instance,
            &loaded.thresholds,
            &kernel,
            settings.grid,
            settings.quad_panels,
        )
    }) {
        Ok(consts) => report.constants = Some(consts),
        Err(e) => {
            let verdict = if is_admissibility_failure(&e) {
                Verdict::Fail
            } else {
                Verdict::Structural
            };
            report.notes.push(e.to_string());
            report.timings_ms = t.finish();
            return (verdict, report);
        }
    }

    let consts = report.constants.clone().unwrap();
    match t.time("hypotheses", || {
        check_hypotheses(
            &loaded.instance,
            &loaded.thresholds,
            &consts,
            settings.grid,
            settings.strict_eps,
        )
    }) {
        Ok(hyp) => {
            let verdict = if hyp.all_hold() {
                Verdict::Pass
            } else {
                let mut failed = Vec::new();
                if !hyp.f1_holds {
                    failed.push("F1");
                }
                if !hyp.f2_holds {
                    failed.push("F2");
                }
                if !hyp.f3_holds {
                    failed.push("F3");
                }
                report
                    .notes
                    .push(format!("growth condition(s) {} failed", failed.join(", ")));
                Verdict::Fail
            };
            report.hypotheses = Some(hyp);
            report.timings_ms = t.finish();
            (verdict, report)
        }
        Err(e) => {
            report.notes.push(e.to_string());
            report.timings_ms = t.finish();
            (Verdict::Structural, report)
        }
    }
}

/// Full pipeline. Hypotheses must pass before any solving happens; when the
/// scan locates solutions, each one lands in a CSV (if a target is given)
/// and the localization decides the verdict.
pub fn run_solve(
    loaded: &LoadedInstance,
    timings: bool,
    csv_target: Option<(&Path, &str)>,
) -> (Verdict, RunReport) {
    let (verify_verdict, mut report) = run_verify(loaded, timings);
    report.command = "solve".into();
    if verify_verdict != Verdict::Pass {
        report
            .notes
            .push("solving skipped: the verification stage did not pass".into());
        return (verify_verdict, report);
    }

    let mut t = Timings::new(timings);
    if let Some(existing) = report.timings_ms.take() {
        t.map = existing;
    }
    let settings = &loaded.settings;

    let outcome = match t.time("solve", || {
        solve_all::<f64>(&loaded.instance, &loaded.thresholds, settings)
    }) {
        Ok(o) => o,
        Err(e) => {
            report.notes.push(e.to_string());
            report.timings_ms = t.finish();
            return (Verdict::Structural, report);
        }
    };
    report.notes.extend(outcome.notes.iter().cloned());
    report.scan = Some(ScanSummary {
        scan_points: outcome.profile.c_grid.len(),
        c_max: loaded.thresholds.c,
        invalid_points: outcome.profile.invalid_points(),
        brackets: outcome.profile.brackets.len(),
    });

    // curves that drift out of the cone are excluded from classification
    // but still reported
    let mut classified = Vec::new();
    let mut records = Vec::new();
    for (k, sol) in outcome.solutions.iter().enumerate() {
        let csv = match csv_target {
            Some((dir, stem)) => {
                let path = dir.join(format!("{stem}_solution_{k}.csv"));
                match write_curve_csv(&path, &sol.curve) {
                    Ok(()) => Some(path.display().to_string()),
                    Err(e) => {
                        report
                            .notes
                            .push(format!("could not write {}: {e}", path.display()));
                        None
                    }
                }
            }
            None => None,
        };
        records.push(SolutionRecord {
            c: sol.c,
            y0: sol.curve.y0(),
            y1: sol.curve.y1(),
            sup_norm: sol.curve.sup_norm(),
            theta: cone::theta(&sol.curve),
            nodes: sol.curve.len(),
            ode_residual_mean: sol.ode_mean,
            ode_residual_max: sol.ode_max,
            boundary_residual: sol.boundary,
            csv,
        });
        match cone::check_membership(&sol.curve, cone::CONE_TOL) {
            Ok(()) => classified.push(sol.curve.clone()),
            Err(e) => report.notes.push(format!(
                "solution {k} (c = {:.12e}) excluded from classification: {e}",
                sol.c
            )),
        }
    }
    report.solutions = records;

    let localization = match t.time("classify", || {
        cone::classify(&classified, &loaded.thresholds)
    }) {
        Ok(l) => l,
        Err(e) => {
            report.notes.push(e.to_string());
            report.timings_ms = t.finish();
            return (Verdict::Structural, report);
        }
    };
    let verdict = if localization.theorem_satisfied {
        Verdict::Pass
    } else {
        let filled = {
            let mut buckets: Vec<&str> = localization
                .solutions
                .iter()
                .map(|s| match s.bucket {
                    cone::Bucket::Y1 => "Y1",
                    cone::Bucket::Y2 => "Y2",
                    cone::Bucket::Y3 => "Y3",
                    cone::Bucket::Unclassified => "none",
                })
                .filter(|&b| b != "none")
                .collect();
            buckets.sort_unstable();
            buckets.dedup();
            buckets.join(", ")
        };
        report.notes.push(format!(
            "possible missed roots: buckets filled [{}] out of Y1, Y2, Y3 at scan resolution {}; \
             even-multiplicity roots between scan nodes are invisible to a sign-change scan",
            filled, settings.scan_points
        ));
        Verdict::Fail
    };
    report.localization = Some(localization);
    report.timings_ms = t.finish();
    (verdict, report)
}

fn write_curve_csv(path: &Path, curve: &crate::operator::SolutionCurve<f64>) -> std::io::Result<()> {
    let mut buf = Vec::new();
    curve.write_csv(&mut buf)?;
    fs::write(path, buf)
}

/// Pretty-printed JSON with a trailing newline, written to `out` or stdout.
pub fn emit_report(report: &RunReport, out: Option<&PathBuf>) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())
        }
    }
}
