use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use conelw::green::{build_kernel, check_kernel_invariants};
use conelw::problem::{check_settings, load_instance, LoadedInstance};
use conelw::report::{emit_report, run_solve, run_verify};

/// Kernel invariant tolerances used by the `green` summary: diagonal jump,
/// boundary relation, and differential property, in that order.
const JUMP_TOL: f64 = 1e-6;
const BOUNDARY_TOL: f64 = 1e-10;
const ODE_TOL: f64 = 1e-4;
const INVARIANT_SAMPLES: usize = 33;

#[derive(Parser)]
#[command(
    name = "conelw",
    version,
    about = "Check, solve, and localize positive solutions of a first-order \
             boundary value problem with a nonlinear nonlocal boundary condition"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SettingsFlags {
    /// Lattice resolution for validation, extrema, and hypothesis scans
    #[arg(long)]
    grid: Option<usize>,
    /// Quadrature panels for the kernel integrals
    #[arg(long)]
    quad_panels: Option<usize>,
    /// Runge-Kutta steps per trajectory
    #[arg(long)]
    ode_steps: Option<usize>,
    /// Initial-value samples in the shooting scan
    #[arg(long)]
    scan_points: Option<usize>,
    /// Bisection stops below this bracket width
    #[arg(long)]
    root_tol: Option<f64>,
    /// Acceptance threshold for ODE and boundary defects
    #[arg(long)]
    residual_tol: Option<f64>,
    /// Extra margin demanded of the strict growth conditions
    #[arg(long)]
    strict_eps: Option<f64>,
}

impl SettingsFlags {
    fn apply(&self, loaded: &mut LoadedInstance) -> conelw::Result<()> {
        let s = &mut loaded.settings;
        if let Some(v) = self.grid {
            s.grid = v;
        }
        if let Some(v) = self.quad_panels {
            s.quad_panels = v;
        }
        if let Some(v) = self.ode_steps {
            s.ode_steps = v;
        }
        if let Some(v) = self.scan_points {
            s.scan_points = v;
        }
        if let Some(v) = self.root_tol {
            s.root_tol = v;
        }
        if let Some(v) = self.residual_tol {
            s.residual_tol = v;
        }
        if let Some(v) = self.strict_eps {
            s.strict_eps = v;
        }
        check_settings(s)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate an instance, derive its constants, check the growth conditions
    Verify {
        /// Instance JSON file
        instance: PathBuf,
        #[command(flatten)]
        settings: SettingsFlags,
        /// Write the JSON report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record per-stage wall-clock timings in the report
        #[arg(long)]
        timings: bool,
    },
    /// Verify, then locate solutions by shooting and classify them
    Solve {
        /// Instance JSON file
        instance: PathBuf,
        #[command(flatten)]
        settings: SettingsFlags,
        /// Write the JSON report here instead of stdout (solution CSVs land
        /// next to it; without --out they land in the current directory)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record per-stage wall-clock timings in the report
        #[arg(long)]
        timings: bool,
    },
    /// Evaluate the kernel on a lattice and check its invariants
    Green {
        /// Instance JSON file (only p and lambda are used)
        instance: PathBuf,
        /// Rows: number of t samples in the table
        #[arg(long, default_value_t = 33)]
        t: usize,
        /// Columns: number of s samples in the table
        #[arg(long, default_value_t = 33)]
        s: usize,
        /// Lattice resolution for the cumulative coefficient
        #[arg(long)]
        grid: Option<usize>,
        /// Write the t,s,G table here as CSV
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Verify {
            instance,
            settings,
            out,
            timings,
        } => cmd_verify(&instance, &settings, out, timings),
        Command::Solve {
            instance,
            settings,
            out,
            timings,
        } => cmd_solve(&instance, &settings, out, timings),
        Command::Green {
            instance,
            t,
            s,
            grid,
            out,
        } => cmd_green(&instance, t, s, grid, out),
    };
    ExitCode::from(code)
}

fn load(path: &PathBuf, settings: &SettingsFlags) -> Result<LoadedInstance, u8> {
    let mut loaded = match load_instance(path) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return Err(2);
        }
    };
    if let Err(e) = settings.apply(&mut loaded) {
        eprintln!("error: {e}");
        return Err(2);
    }
    Ok(loaded)
}

fn cmd_verify(
    path: &PathBuf,
    settings: &SettingsFlags,
    out: Option<PathBuf>,
    timings: bool,
) -> u8 {
    let loaded = match load(path, settings) {
        Ok(l) => l,
        Err(code) => return code,
    };
    let (verdict, report) = run_verify(&loaded, timings);
    if let Err(e) = emit_report(&report, out.as_ref()) {
        eprintln!("error: could not write the report: {e}");
        return 2;
    }
    verdict.exit_code() as u8
}

fn cmd_solve(path: &PathBuf, settings: &SettingsFlags, out: Option<PathBuf>, timings: bool) -> u8 {
    let loaded = match load(path, settings) {
        Ok(l) => l,
        Err(code) => return code,
    };
    // solution CSVs go next to the report, named after its stem; with the
    // report on stdout they are named after the instance instead
    let (dir, stem) = match &out {
        Some(p) => (
            p.parent()
                .filter(|d| !d.as_os_str().is_empty())
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(".")),
            p.file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("report")
                .to_string(),
        ),
        None => (
            PathBuf::from("."),
            path.file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("run")
                .to_string(),
        ),
    };
    let (verdict, report) = run_solve(&loaded, timings, Some((&dir, &stem)));
    if let Err(e) = emit_report(&report, out.as_ref()) {
        eprintln!("error: could not write the report: {e}");
        return 2;
    }
    verdict.exit_code() as u8
}

fn cmd_green(
    path: &PathBuf,
    t_samples: usize,
    s_samples: usize,
    grid: Option<usize>,
    out: Option<PathBuf>,
) -> u8 {
    let loaded = match load_instance(path) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if t_samples < 2 || s_samples < 2 {
        eprintln!("error: --t and --s need at least 2 samples");
        return 2;
    }
    let grid = grid.unwrap_or(loaded.settings.grid);
    let kernel = match build_kernel::<f64>(&loaded.instance.p, loaded.instance.lam, grid) {
        Ok(k) => k,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let check = match check_kernel_invariants(&kernel, INVARIANT_SAMPLES) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };

    println!("lambda           = {:.16e}", kernel.lam());
    println!("exp(P(1))        = {:.16e}", kernel.exp_p1());
    println!("denominator      = {:.16e}", kernel.denom());
    let verdicts = [
        ("jump", check.jump_max_err, JUMP_TOL),
        ("boundary relation", check.boundary_max_err, BOUNDARY_TOL),
        ("differential property", check.ode_max_rel_err, ODE_TOL),
    ];
    for (name, err, tol) in verdicts {
        println!(
            "{name:<21}: max err {err:.3e} (tol {tol:.0e}) -> {}",
            if err < tol { "pass" } else { "FAIL" }
        );
    }
    let all_pass = check.passes(JUMP_TOL, BOUNDARY_TOL, ODE_TOL);
    println!("invariants: {}", if all_pass { "pass" } else { "FAIL" });

    if let Some(out) = out {
        let mut table = String::from("t,s,G\n");
        for i in 0..t_samples {
            let t = i as f64 / (t_samples - 1) as f64;
            for j in 0..s_samples {
                let s = j as f64 / (s_samples - 1) as f64;
                match kernel.evaluate(t, s) {
                    Ok(g) => table.push_str(&format!("{t:.16e},{s:.16e},{g:.16e}\n")),
                    Err(e) => {
                        eprintln!("error: {e}");
                        return 2;
                    }
                }
            }
        }
        if let Err(e) = std::fs::write(&out, table) {
            eprintln!("error: could not write {}: {e}", out.display());
            return 2;
        }
        println!("table: {} ({} x {})", out.display(), t_samples, s_samples);
    }
    if all_pass {
        0
    } else {
        1
    }
}
