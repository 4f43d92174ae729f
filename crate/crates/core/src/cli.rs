//! The `duhem` command-line front end.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical error,
//! 3 verification failure or refusal.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{check_terminal_relation, validation_summary, verify_trajectory, ConvergenceReport};
use crate::boucwen::BoucWenParams;
use crate::config::{load_boucwen, ExperimentConfig, SystemSpec};
use crate::equilibria::{curve, LimitPrediction};
use crate::error::{DuhemError, Result};
use crate::integrator::{integrate, sweep, Termination};
use crate::io::{create_file, write_curve_csv, write_json, write_limits_csv, write_trajectory_csv};
use crate::model::{validate, DuhemSystem, State, ValidationReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "duhem", version, about = "Simulate and verify Duhem hysteretic oscillators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate every initial condition and write trajectory CSV files.
    Simulate(Common),
    /// Check convergence to a rest point in the initial sublevel set.
    Verify(Common),
    /// Sample the equilibrium curve and predict rest points for offsets L.
    Equilibria {
        #[command(flatten)]
        common: Common,
        /// Comma-separated offsets L = z∞ − x∞ (overrides the config list).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        limits: Vec<f64>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bouc-Wen parameter file; replaces the configured system.
    #[arg(long)]
    pub boucwen: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fail with a configuration error unless the system is class-I Bouc-Wen.
    #[arg(long)]
    pub require_class_i: bool,
    /// Seed for randomly sampled initial conditions.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Integration horizon (overrides the config).
    #[arg(long)]
    pub t_end: Option<f64>,
}

pub fn exit_code(e: &DuhemError) -> i32 {
    match e {
        DuhemError::Config(_) | DuhemError::InvalidParams(_) | DuhemError::Io(_) | DuhemError::EmptyGrid => EXIT_CONFIG,
        DuhemError::NotValidated(_) | DuhemError::VerificationFailure(_) => EXIT_VERIFY,
        DuhemError::NonFiniteEvaluation { .. }
        | DuhemError::StepSizeUnderflow { .. }
        | DuhemError::QuadratureFailure { .. }
        | DuhemError::InversionFailure { .. }
        | DuhemError::BracketFailure { .. } => EXIT_NUMERIC,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Simulate(c) => simulate(c, out, err),
        Command::Verify(c) => verify(c, out, err),
        Command::Equilibria { common, limits } => equilibria(common, limits, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

struct Prepared {
    cfg: ExperimentConfig,
    sys: DuhemSystem,
    boucwen: Option<BoucWenParams>,
    out_dir: PathBuf,
}

fn prepare(c: &Common) -> Result<Prepared> {
    let mut cfg = match (&c.config, &c.boucwen) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(_)) => ExperimentConfig::new(SystemSpec::BoucWen {
            params: BoucWenParams::reference(),
        }),
        (None, None) => return Err(DuhemError::Config("either --config or --boucwen is required".into())),
    };
    if let Some(path) = &c.boucwen {
        cfg.system = SystemSpec::BoucWen {
            params: load_boucwen(path)?,
        };
    }
    if let Some(t) = c.t_end {
        cfg.integrator.t_end = t;
    }
    if let Some(dir) = &c.out {
        cfg.output.dir = dir.clone();
    }
    cfg.check()?;
    let boucwen = cfg.system.boucwen().copied();
    if c.require_class_i {
        match &boucwen {
            Some(p) => {
                if let Some(why) = p.class_i_violation() {
                    return Err(DuhemError::Config(format!("--require-class-i: {why}")));
                }
            }
            None => {
                return Err(DuhemError::Config(
                    "--require-class-i: the system is not a Bouc-Wen system".into(),
                ))
            }
        }
    }
    let sys = cfg.system.build()?;
    let out_dir = cfg.output.dir.clone();
    Ok(Prepared {
        cfg,
        sys,
        boucwen,
        out_dir,
    })
}

fn make_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| DuhemError::Io(format!("cannot create {}: {e}", dir.display())))
}

fn trajectory_name(i: usize, n: usize) -> String {
    if n == 1 {
        "trajectory.csv".to_string()
    } else {
        format!("trajectory_{i:04}.csv")
    }
}

#[derive(Serialize)]
struct RunSummary {
    index: usize,
    initial: State,
    file: Option<String>,
    termination: Option<Termination>,
    accepted_steps: Option<usize>,
    rejected_steps: Option<usize>,
    final_time: Option<f64>,
    final_state: Option<State>,
    error: Option<String>,
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    system_id: &'a str,
    seed: Option<u64>,
    warnings: &'a [String],
    validation: &'a ValidationReport,
    runs: Vec<RunSummary>,
}

fn simulate(c: &Common, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let p = prepare(c)?;
    let seed = p.cfg.initial.seed(c.seed);
    let inits = p.cfg.initial.states(c.seed)?;
    let validation = validate(&p.sys, &p.cfg.validation);
    for w in p.sys.warnings() {
        writeln!(err, "warning: {w}")?;
    }
    if !validation.is_valid() {
        writeln!(err, "warning: {}", validation_summary(&validation))?;
    }
    make_dir(&p.out_dir)?;
    let results = sweep(&p.sys, &inits, &p.cfg.integrator)?;
    let mut runs = Vec::with_capacity(inits.len());
    let mut code = EXIT_OK;
    for (i, (init, res)) in inits.iter().zip(results).enumerate() {
        match res {
            Ok(traj) => {
                let name = trajectory_name(i, inits.len());
                let mut f = create_file(&p.out_dir.join(&name))?;
                write_trajectory_csv(&mut f, &p.sys, &traj, p.boucwen.as_ref())?;
                f.flush()?;
                let (t, s) = traj.last();
                runs.push(RunSummary {
                    index: i,
                    initial: *init,
                    file: Some(name),
                    termination: Some(traj.meta().termination),
                    accepted_steps: Some(traj.meta().accepted_steps),
                    rejected_steps: Some(traj.meta().rejected_steps),
                    final_time: Some(t),
                    final_state: Some(s),
                    error: None,
                });
            }
            Err(e) => {
                writeln!(err, "error: run {i} from {init:?}: {e}")?;
                code = code.max(exit_code(&e));
                runs.push(RunSummary {
                    index: i,
                    initial: *init,
                    file: None,
                    termination: None,
                    accepted_steps: None,
                    rejected_steps: None,
                    final_time: None,
                    final_state: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    let ok = runs.iter().filter(|r| r.error.is_none()).count();
    let summary = SimulateSummary {
        system_id: p.sys.id(),
        seed,
        warnings: p.sys.warnings(),
        validation: &validation,
        runs,
    };
    write_json(&p.out_dir.join("simulate.json"), &summary)?;
    writeln!(
        out,
        "wrote {ok} of {} trajectories to {}",
        inits.len(),
        p.out_dir.display()
    )?;
    Ok(code)
}

#[derive(Serialize)]
struct VerifySummary<'a> {
    system_id: &'a str,
    seed: Option<u64>,
    passed: bool,
    refusal: Option<String>,
    validation: &'a ValidationReport,
    reports: Vec<ConvergenceReport>,
    errors: Vec<String>,
}

fn verify(c: &Common, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let p = prepare(c)?;
    let seed = p.cfg.initial.seed(c.seed);
    let inits = p.cfg.initial.states(c.seed)?;
    let (sys, validation) = p.sys.validated(&p.cfg.validation);
    make_dir(&p.out_dir)?;
    let report_path = p.out_dir.join("verify.json");

    let refusal = match &p.boucwen {
        Some(bw) if !bw.is_class_i() => bw.class_i_violation(),
        _ if !validation.is_valid() => Some(validation_summary(&validation)),
        _ => None,
    };
    if let Some(why) = refusal {
        let summary = VerifySummary {
            system_id: sys.id(),
            seed,
            passed: false,
            refusal: Some(why.clone()),
            validation: &validation,
            reports: Vec::new(),
            errors: Vec::new(),
        };
        write_json(&report_path, &summary)?;
        writeln!(err, "error: {}", DuhemError::NotValidated(why))?;
        return Ok(EXIT_VERIFY);
    }

    let tol = p.cfg.analysis;
    let outcomes: Vec<Result<ConvergenceReport>> = inits
        .par_iter()
        .map(|init| {
            let traj = integrate(&sys, *init, &p.cfg.integrator)?;
            let mut r = verify_trajectory(&sys, &traj, &tol)?;
            if let Some(bw) = &p.boucwen {
                check_terminal_relation(bw, &mut r, &tol);
            }
            Ok(r)
        })
        .collect();

    let mut reports = Vec::new();
    let mut errors = Vec::new();
    let mut code = EXIT_OK;
    for (i, (init, o)) in inits.iter().zip(outcomes).enumerate() {
        match o {
            Ok(r) => {
                let verdict = if r.passed() { "PASS" } else { "FAIL" };
                let detect = r.t_detect.map_or("-".to_string(), |t| format!("{t}"));
                writeln!(
                    out,
                    "run {i}: {verdict} converged={} t_detect={detect} X*=({}, {}, {})",
                    r.converged, r.x_star.x, r.x_star.z, r.x_star.v
                )?;
                for f in &r.failures {
                    writeln!(err, "run {i}: {f}")?;
                }
                if !r.passed() && code == EXIT_OK {
                    code = EXIT_VERIFY;
                }
                reports.push(r);
            }
            Err(e) => {
                writeln!(err, "error: run {i} from {init:?}: {e}")?;
                errors.push(format!("run {i}: {e}"));
                code = EXIT_NUMERIC;
            }
        }
    }
    let summary = VerifySummary {
        system_id: sys.id(),
        seed,
        passed: code == EXIT_OK,
        refusal: None,
        validation: &validation,
        reports,
        errors,
    };
    write_json(&report_path, &summary)?;
    Ok(code)
}

fn equilibria(c: &Common, limits: &[f64], out: &mut dyn Write) -> Result<i32> {
    let p = prepare(c)?;
    let cv = curve(&p.sys)?;
    let range = &p.cfg.equilibria.curve;
    let samples = cv.samples(range.lo, range.hi, range.samples)?;
    let ls = if limits.is_empty() {
        p.cfg.equilibria.limits.clone()
    } else {
        limits.to_vec()
    };
    let predictions = ls
        .iter()
        .map(|&l| cv.predict_limit(l))
        .collect::<Result<Vec<LimitPrediction>>>()?;
    make_dir(&p.out_dir)?;
    let mut f = create_file(&p.out_dir.join("curve.csv"))?;
    write_curve_csv(&mut f, &samples)?;
    f.flush()?;
    let mut f = create_file(&p.out_dir.join("limits.csv"))?;
    write_limits_csv(&mut f, &predictions)?;
    f.flush()?;
    write_limits_csv(&mut *out, &predictions)?;
    Ok(EXIT_OK)
}
