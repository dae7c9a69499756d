//! Command line front end. Exit status 0 on success, 1 when the reported
//! schedule is infeasible, 2 on bad input.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use railqubo_core::dispatch::{run_with, DispatchConfig, Solved, SolverMode, SubproblemSolver};
use railqubo_core::linear::build_linear_model;
use railqubo_core::qubo::{assemble, PenaltyOverrides};
use railqubo_core::solve::AnnealParams;
use railqubo_core::{derive_conflict_sets, DispatchInstance, Routing};

use crate::export::{iteration_log, sample_records, write_lp};
use crate::load::load_instance_with;
use crate::parallel::ParallelSolver;
use crate::qubo_io::{sidecar, write_qubo};
use crate::report::{schedule_rows, InstanceSummary, RunReport, SolverStats};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Parser)]
#[command(
    name = "railqubo",
    version,
    about = "Train dispatching with linear and QUBO models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and print a report.
    Solve(SolveArgs),
    /// Write the QUBO of an instance with a variable map next to it.
    ExportQubo(ExportArgs),
    /// Check an instance file.
    Validate(InstanceArgs),
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Grid points per minute, replacing the file's value.
    #[arg(long)]
    resolution: Option<u32>,
}

#[derive(Args)]
struct PenaltyArgs {
    #[arg(long, allow_negative_numbers = true)]
    p_sum: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    p_pair: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    p_qubic: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Linear,
    QuboBrute,
    QuboAnneal,
    Hybrid,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InnerSolver {
    Linear,
    QuboBrute,
    QuboAnneal,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: InstanceArgs,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Objective at which the hybrid loop stops.
    #[arg(long, default_value_t = 0.0)]
    threshold: f64,
    #[arg(long, default_value_t = 10)]
    max_iter: usize,
    /// Solver used inside the hybrid loop.
    #[arg(long, value_enum, default_value_t = InnerSolver::Linear)]
    solver: InnerSolver,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[command(flatten)]
    penalties: PenaltyArgs,
    /// Print the report as JSON.
    #[arg(long)]
    structured: bool,
    /// Write the samples of a QUBO solve as JSON.
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Write the linear model in LP format.
    #[arg(long)]
    lp: Option<PathBuf>,
    /// Write the hybrid iteration log as JSON.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    input: InstanceArgs,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    penalties: PenaltyArgs,
}

/// A failure that ends the run with [`EXIT_INPUT`].
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve(a) => solve(&a, out),
        Command::ExportQubo(a) => export_qubo(&a, out),
        Command::Validate(a) => validate(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(InputError(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INPUT
        }
    }
}

fn load(a: &InstanceArgs) -> Result<(DispatchInstance, Routing), InputError> {
    load_instance_with(&a.instance, a.resolution)
        .map_err(|e| InputError(format!("{}:\n{e}", a.instance.display())))
}

fn overrides(p: &PenaltyArgs) -> Result<PenaltyOverrides, InputError> {
    for (name, v) in [
        ("p-sum", p.p_sum),
        ("p-pair", p.p_pair),
        ("p-qubic", p.p_qubic),
    ] {
        if v.is_some_and(|v| !(v.is_finite() && v > 0.0)) {
            return Err(InputError(format!("--{name} must be a positive number")));
        }
    }
    Ok(PenaltyOverrides {
        p_sum: p.p_sum,
        p_pair: p.p_pair,
        p_qubic: p.p_qubic,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), InputError> {
    std::fs::write(path, text)
        .map_err(|e| InputError(format!("cannot write {}: {e}", path.display())))
}

fn stats(config: &DispatchConfig, solved: &Solved) -> SolverStats {
    let best = solved.samples.as_ref().and_then(|s| s.best());
    let at_best = solved.samples.as_ref().zip(best).map(|(set, b)| {
        set.samples()
            .iter()
            .filter(|s| s.energy <= b.energy + 1e-9)
            .map(|s| s.multiplicity)
            .sum()
    });
    let mut s = SolverStats {
        distinct_samples: solved.samples.as_ref().map(|s| s.len()),
        best_multiplicity: at_best,
        best_energy: best.map(|b| b.energy),
        ..Default::default()
    };
    match config.mode {
        SolverMode::LinearOracle => s.solver = "order enumeration".into(),
        SolverMode::QuboBrute => {
            s.solver = "one-hot brute force".into();
            s.states = solved
                .input
                .qubo
                .as_ref()
                .map(|q| q.index.groups().iter().map(|g| g.len() as u128).product());
        }
        SolverMode::QuboAnneal => {
            s.solver = "simulated annealing".into();
            s.sweeps = Some(config.anneal.sweeps);
            s.restarts = Some(config.anneal.restarts);
            s.seed = Some(config.anneal.seed);
        }
    }
    s
}

fn solve(a: &SolveArgs, out: &mut dyn Write) -> Result<i32, InputError> {
    let (instance, routing) = load(&a.input)?;
    let defaults = AnnealParams::default();
    let anneal = AnnealParams {
        sweeps: a.sweeps.unwrap_or(defaults.sweeps),
        restarts: a.restarts.unwrap_or(defaults.restarts),
        seed: a.seed,
        ..defaults
    };
    anneal.validate()?;
    let mode = match (a.mode, a.solver) {
        (Mode::Linear, _) | (Mode::Hybrid, InnerSolver::Linear) => SolverMode::LinearOracle,
        (Mode::QuboBrute, _) | (Mode::Hybrid, InnerSolver::QuboBrute) => SolverMode::QuboBrute,
        (Mode::QuboAnneal, _) | (Mode::Hybrid, InnerSolver::QuboAnneal) => SolverMode::QuboAnneal,
    };
    if a.threshold.is_nan() {
        return Err(InputError("--threshold must be a number".into()));
    }
    let config = DispatchConfig {
        threshold: a.threshold,
        max_iterations: a.max_iter,
        mode,
        anneal,
        penalties: overrides(&a.penalties)?,
        ..Default::default()
    };

    let report = if a.mode == Mode::Hybrid {
        let result = run_with(&instance, &routing, &config, &ParallelSolver)?;
        let best = ParallelSolver.solve(&instance, &result.best_routing, &config)?;
        let log = iteration_log(&instance, &result);
        if let Some(p) = &a.log {
            write_file(p, &serde_json::to_string_pretty(&log)?)?;
        }
        if let Some(p) = &a.lp {
            write_file(p, &write_lp(&best.input.linear, &instance))?;
        }
        let schedule = &result.best_schedule;
        RunReport {
            mode: format!("hybrid ({})", stats(&config, &best).solver),
            instance: InstanceSummary::new(
                &instance,
                &result.best_routing,
                &best.input.linear,
                best.input.qubo.as_ref(),
            )?,
            schedule: schedule_rows(&instance, &best.input.linear, schedule),
            objective: schedule.objective,
            feasible: schedule.feasible,
            violations: schedule
                .violations
                .iter()
                .map(|v| crate::names::violation(&instance, v))
                .collect(),
            solver: stats(&config, &best),
            iterations: Some(log),
            terminated_by: Some(result.terminated_by.name().into()),
        }
    } else {
        let solved = ParallelSolver.solve(&instance, &routing, &config)?;
        if let (Some(p), Some(samples), Some(q)) = (&a.samples, &solved.samples, &solved.input.qubo)
        {
            let records = sample_records(samples, q, &instance)?;
            write_file(p, &serde_json::to_string_pretty(&records)?)?;
        }
        if let Some(p) = &a.lp {
            write_file(p, &write_lp(&solved.input.linear, &instance))?;
        }
        let schedule = &solved.schedule;
        RunReport {
            mode: match a.mode {
                Mode::Linear => "linear",
                Mode::QuboBrute => "qubo-brute",
                _ => "qubo-anneal",
            }
            .into(),
            instance: InstanceSummary::new(
                &instance,
                &routing,
                &solved.input.linear,
                solved.input.qubo.as_ref(),
            )?,
            schedule: schedule_rows(&instance, &solved.input.linear, schedule),
            objective: schedule.objective,
            feasible: schedule.feasible,
            violations: schedule
                .violations
                .iter()
                .map(|v| crate::names::violation(&instance, v))
                .collect(),
            solver: stats(&config, &solved),
            iterations: None,
            terminated_by: None,
        }
    };

    let text = if a.structured {
        report.to_json() + "\n"
    } else {
        report.to_table()
    };
    write!(out, "{text}")?;
    Ok(if report.feasible {
        EXIT_OK
    } else {
        EXIT_INFEASIBLE
    })
}

/// Path of the variable map written next to a QUBO file.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".vars.json");
    PathBuf::from(s)
}

fn export_qubo(a: &ExportArgs, out: &mut dyn Write) -> Result<i32, InputError> {
    let (instance, routing) = load(&a.input)?;
    let model = assemble(&instance, &routing, &overrides(&a.penalties)?)?;
    write_file(&a.out, &write_qubo(&model))?;
    let vars = sidecar_path(&a.out);
    write_file(
        &vars,
        &serde_json::to_string_pretty(&sidecar(&model, &instance))?,
    )?;
    writeln!(
        out,
        "wrote {} variables ({} time-indexed, {} auxiliary) to {} and {}",
        model.n(),
        model.index.num_x(),
        model.index.aux().len(),
        a.out.display(),
        vars.display()
    )?;
    Ok(EXIT_OK)
}

fn validate(a: &InstanceArgs, out: &mut dyn Write) -> Result<i32, InputError> {
    let (instance, routing) = load(a)?;
    let sets = derive_conflict_sets(&instance, &routing);
    let model = build_linear_model(&instance, &routing, &sets)?;
    writeln!(
        out,
        "ok: {} trains, {} stations, {} departures, {} conflicts",
        instance.trains.len(),
        instance.stations.len(),
        model.time_vars.len(),
        sets.conflicts().len()
    )?;
    Ok(EXIT_OK)
}
