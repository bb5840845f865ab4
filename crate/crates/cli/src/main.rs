use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ehmec::baselines::{run_scheme, SchemeId};
use ehmec::dual_solver::{solve, SolveOptions, SolveReport, StepRule};
use ehmec::error::{ExperimentError, ModelError, SolveError};
use ehmec::experiments::{generate_instance, run_sweep, write_atomic, GenParams, SweepConfig};
use ehmec::model::{causality_slack, FeasibilityReport, Instance, Modes};
use ehmec::oracle::{
    grid_search_with_modes, kkt_residual_with_modes, projected_gradient, GradientOptions,
    OracleResult, GRID_MAX_PAIRS,
};
use serde::Serialize;

const EXIT_INPUT: u8 = 1;
const EXIT_NONCONVERGED: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "ehmec",
    version,
    about = "Offline computation-rate maximization for energy-harvesting MEC"
)]
struct Cli {
    /// Master seed for instance generation and sweeps.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one instance with one scheme and write the report as JSON.
    Solve(SolveArgs),
    /// Run a Monte Carlo sweep from a config file and write CSV and JSON.
    Sweep(SweepArgs),
    /// Run every scheme on one instance and print a comparison.
    Compare(CompareArgs),
    /// Check the solver against an independent oracle.
    Validate(ValidateArgs),
    /// Generate a random instance file.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RuleArg {
    /// Constant step halved whenever the dual value stalls.
    Adaptive,
    Constant,
    Diminishing,
    Polyak,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Stop when the relative change of the dual value falls below this.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Step size: η for adaptive and constant, η₀ for diminishing, γ for Polyak.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, value_enum, default_value = "adaptive")]
    step_rule: RuleArg,
}

impl SolverArgs {
    fn options(&self) -> SolveOptions {
        let mut opts = SolveOptions::default();
        if let Some(eps) = self.eps {
            opts.eps = eps;
        }
        if let Some(m) = self.max_iters {
            opts.max_iters = m;
        }
        opts.step = match (self.step_rule, self.step) {
            (RuleArg::Adaptive, None) => opts.step,
            (RuleArg::Adaptive, Some(eta)) => StepRule::Adaptive { eta },
            (RuleArg::Constant, s) => StepRule::Constant {
                eta: s.unwrap_or(0.3),
            },
            (RuleArg::Diminishing, s) => StepRule::Diminishing {
                eta0: s.unwrap_or(1.0),
            },
            (RuleArg::Polyak, s) => StepRule::Polyak {
                gamma: s.unwrap_or(1.0),
            },
        };
        opts
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "proposed")]
    scheme: SchemeId,
    #[command(flatten)]
    solver: SolverArgs,
    /// Include per-iteration dual values in the report.
    #[arg(long)]
    trace: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Override the trial count from the config.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Write all scheme outcomes as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Allowed relative objective mismatch (default 5e-3 for grid, 1e-3 otherwise).
    #[arg(long)]
    tol: Option<f64>,
    /// Grid points per axis.
    #[arg(long, default_value_t = 21)]
    points: usize,
    #[arg(long, default_value = "proposed")]
    scheme: SchemeId,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    users: usize,
    #[arg(long)]
    slots: usize,
    #[arg(long, default_value_t = 0.02)]
    tau: f64,
    /// Scenario parameters as JSON; defaults otherwise.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Instance path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("{0}")]
    Input(String),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Sweep(a) => cmd_sweep(a, cli.seed),
        Command::Compare(a) => cmd_compare(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Gen(a) => cmd_gen(a, cli.seed),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn load_instance(path: &Path) -> Result<Instance, CliError> {
    Instance::load(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => Ok(write_atomic(p, text.as_bytes())?),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes")
}

fn modes_of(scheme: SchemeId) -> Modes {
    match scheme {
        SchemeId::LocalOnly => Modes::LOCAL_ONLY,
        SchemeId::FullOffload => Modes::OFFLOAD_ONLY,
        _ => Modes::BOTH,
    }
}

#[derive(Serialize)]
struct SchemeReport<'a> {
    scheme: SchemeId,
    converged: bool,
    primal_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    solver: Option<&'a SolveReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    allocation: Option<&'a ehmec::model::Allocation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    feasibility: Option<&'a FeasibilityReport>,
}

fn cmd_solve(a: &SolveArgs) -> Result<ExitCode, CliError> {
    let inst = load_instance(&a.instance)?;
    let mut opts = a.solver.options();
    opts.record_trace = a.trace;
    let (text, converged, summary) = if a.scheme == SchemeId::EqualEnergy {
        let out = run_scheme(&inst, a.scheme, &opts)?;
        let feas = causality_slack(&inst, &out.allocation)?;
        let report = SchemeReport {
            scheme: a.scheme,
            converged: true,
            primal_value: out.objective,
            solver: None,
            allocation: Some(&out.allocation),
            feasibility: Some(&feas),
        };
        (
            to_json(&report),
            true,
            format!("objective {:.6e}", out.objective),
        )
    } else {
        opts.modes = modes_of(a.scheme);
        let report = solve(&inst, &opts)?;
        let wrapped = SchemeReport {
            scheme: a.scheme,
            converged: report.converged,
            primal_value: report.primal_value,
            solver: Some(&report),
            allocation: None,
            feasibility: None,
        };
        let summary = format!(
            "objective {:.6e}, dual {:.6e}, gap {:.2e}, {} iterations",
            report.primal_value, report.dual_value, report.relative_gap, report.iterations
        );
        (to_json(&wrapped), report.converged, summary)
    };
    emit(a.out.as_deref(), &text)?;
    eprintln!(
        "{}: {summary}{}",
        a.scheme,
        if converged { "" } else { " (not converged)" }
    );
    Ok(if converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NONCONVERGED)
    })
}

fn cmd_sweep(a: &SweepArgs, seed: Option<u64>) -> Result<ExitCode, CliError> {
    let mut cfg = SweepConfig::load(&a.config)?;
    if let Some(s) = seed {
        cfg.gen.seed = s;
    }
    if let Some(t) = a.trials {
        cfg.sweep.trials = t;
    }
    let result = run_sweep(&cfg.sweep, &cfg.gen)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|source| ExperimentError::Io {
        path: a.out_dir.display().to_string(),
        source,
    })?;
    let stem = a
        .config
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("sweep");
    let csv = a.out_dir.join(format!("{stem}.csv"));
    let json = a.out_dir.join(format!("{stem}.json"));
    result.write_csv(&csv)?;
    result.write_json(&json)?;
    println!(
        "{:>10} {:>13} {:>14} {:>12}",
        "value", "scheme", "mean", "std"
    );
    for p in &result.points {
        println!(
            "{:>10} {:>13} {:>14.6e} {:>12.4e}",
            p.value,
            p.scheme.as_str(),
            p.mean,
            p.std_dev
        );
    }
    let nc = result.total_nonconverged();
    if nc > 0 {
        eprintln!("{nc} trial solves did not converge (kept in means unless excluded by config)");
    }
    eprintln!("wrote {} and {}", csv.display(), json.display());
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct CompareRow {
    scheme: SchemeId,
    objective: f64,
    converged: bool,
    feasible: bool,
    dual_value: Option<f64>,
}

fn cmd_compare(a: &CompareArgs) -> Result<ExitCode, CliError> {
    let inst = load_instance(&a.instance)?;
    let opts = a.solver.options();
    let mut rows = Vec::new();
    for id in SchemeId::ALL {
        let out = run_scheme(&inst, id, &opts)?;
        rows.push(CompareRow {
            scheme: id,
            objective: out.objective,
            converged: out.converged,
            feasible: causality_slack(&inst, &out.allocation)?.feasible,
            dual_value: out.dual_value,
        });
    }
    let best = rows[0].objective;
    println!(
        "{:>13} {:>14} {:>9} {:>9} {:>9}",
        "scheme", "objective", "vs best", "feasible", "converged"
    );
    for r in &rows {
        let ratio = if best > 0.0 { r.objective / best } else { 1.0 };
        println!(
            "{:>13} {:>14.6e} {:>9.4} {:>9} {:>9}",
            r.scheme.as_str(),
            r.objective,
            ratio,
            r.feasible,
            r.converged
        );
    }
    if let Some(out) = &a.out {
        write_atomic(out, to_json(&rows).as_bytes())?;
    }
    let all = rows.iter().all(|r| r.converged);
    Ok(if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NONCONVERGED)
    })
}

fn cmd_validate(a: &ValidateArgs) -> Result<ExitCode, CliError> {
    let inst = load_instance(&a.instance)?;
    if a.scheme == SchemeId::EqualEnergy {
        return Err(CliError::Input(
            "equal_energy is not an optimizer; validate proposed, local_only or full_offload"
                .into(),
        ));
    }
    let modes = modes_of(a.scheme);
    let mut opts = a.solver.options();
    opts.modes = modes;
    let report = solve(&inst, &opts)?;
    let pairs = inst.num_users() * inst.num_slots();
    let oracle: OracleResult = if pairs <= GRID_MAX_PAIRS {
        grid_search_with_modes(&inst, a.points, modes)?
    } else {
        eprintln!("note: {pairs} (user, slot) pairs exceed the grid limit of {GRID_MAX_PAIRS}; using projected gradient");
        projected_gradient(
            &inst,
            &GradientOptions {
                modes,
                ..Default::default()
            },
        )?
    };
    let tol = a
        .tol
        .unwrap_or(if pairs <= GRID_MAX_PAIRS { 5e-3 } else { 1e-3 });
    let mismatch = (report.primal_value - oracle.objective).abs() / oracle.objective.abs().max(1.0);
    let kkt = kkt_residual_with_modes(&inst, &report.allocation, report.dual.mu(), modes)?;
    let checks = [
        (
            "objective agreement",
            mismatch <= tol,
            format!("{mismatch:.3e} (tol {tol:.1e})"),
        ),
        (
            "duality gap",
            report.relative_gap <= 1e-3,
            format!("{:.3e} (tol 1e-3)", report.relative_gap),
        ),
        ("kkt residual", kkt <= 1e-3, format!("{kkt:.3e} (tol 1e-3)")),
        (
            "feasible",
            report.feasibility.feasible,
            format!(
                "worst violation {:.3e} J",
                report.feasibility.worst_violation.max(0.0)
            ),
        ),
        (
            "converged",
            report.converged,
            format!("{} iterations", report.iterations),
        ),
    ];
    println!(
        "solver   {:.6e} (dual bound {:.6e})",
        report.primal_value, report.dual_value
    );
    println!("oracle   {:.6e} ({:?})", oracle.objective, oracle.method);
    let mut ok = true;
    for (name, pass, detail) in &checks {
        println!("{} {name}: {detail}", if *pass { "ok  " } else { "FAIL" });
        ok &= pass;
    }
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NONCONVERGED)
    })
}

fn cmd_gen(a: &GenArgs, seed: Option<u64>) -> Result<ExitCode, CliError> {
    let mut gen = match &a.params {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| ExperimentError::Io {
                path: p.display().to_string(),
                source,
            })?;
            serde_json::from_str::<GenParams>(&text)
                .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?
        }
        None => GenParams::default(),
    };
    if let Some(s) = seed {
        gen.seed = s;
    }
    let inst = generate_instance(&gen, a.users, a.slots, a.tau)?;
    emit(a.out.as_deref(), &inst.to_json_pretty())?;
    Ok(ExitCode::SUCCESS)
}
