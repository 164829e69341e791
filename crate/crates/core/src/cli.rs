//! Command-line front end. Every subcommand loads its inputs, calls one
//! library entry point and prints the result as a table or as JSON.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::gen::{generate, GenConfig, Profile};
use crate::heuristics::{
    local_search_improve, solve_no_hubs, solve_two_stage, HeuristicError, LocalSearchOptions, NoHubOptions,
    DEFAULT_HUB_BUDGET,
};
use crate::milp::{self, ModelOptions};
use crate::network::{instance_to_string, load_instance, validate_instance, Instance};
use crate::oracle::{enumerate_optimal, OracleError, OracleLimits};
use crate::pricing::CostMode;
use crate::solution::{
    check_feasibility, compare, evaluate_cost, solution_from_str, solution_to_string, CostBreakdown, EvaluateError,
    Solution, ViolationReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hublocate", version, about = "Hub location and origin-port assignment for LCL hinterland networks")]
struct Cli {
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for the oracle and heuristics (default: all cores).
    #[arg(long, global = true, env = "HUBLOCATE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check an instance file.
    Validate { instance: PathBuf },
    /// Generate a random instance.
    Gen(GenArgs),
    /// Solve an instance.
    Solve(SolveArgs),
    /// Write the linearized model as LP or MPS.
    BuildMilp(BuildArgs),
    /// Turn solver variable values back into a solution file.
    Decode(DecodeArgs),
    /// Cost a solution.
    Evaluate(EvaluateArgs),
    /// Compare two solutions term by term.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    branches: usize,
    #[arg(long, default_value_t = 2)]
    ports: usize,
    #[arg(long, default_value_t = 2)]
    dests: usize,
    #[arg(long, default_value_t = 0.6)]
    density: f64,
    #[arg(long, default_value = "uniform")]
    profile: Profile,
    /// Land volume bands (63 mirrors the fine tariff).
    #[arg(long, default_value_t = 8)]
    volume_bands: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    TwoStage,
    NoHub,
    LocalSearch,
    Oracle,
}

#[derive(Debug, Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "two-stage")]
    method: Method,
    /// Largest hub set per destination (two-stage).
    #[arg(long, default_value_t = DEFAULT_HUB_BUDGET)]
    hub_budget: usize,
    /// Wall-clock limit in seconds for local search and the no-hub search.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Starting solution for local search (default: best no-hub plan).
    #[arg(long)]
    start: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    max_rounds: usize,
    /// Evaluation budget for the oracle.
    #[arg(long, default_value_t = OracleLimits::default().budget)]
    oracle_budget: u64,
    /// Also write the unrepaired two-stage merge here.
    #[arg(long)]
    raw_output: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BuildArgs {
    instance: PathBuf,
    /// Output path; `.mps` selects MPS, anything else LP.
    #[arg(short, long)]
    output: PathBuf,
    /// Leave out every hub variable (the restricted no-hub model).
    #[arg(long)]
    no_hubs: bool,
}

#[derive(Debug, Args)]
struct DecodeArgs {
    instance: PathBuf,
    /// The LP or MPS file the values belong to.
    model: PathBuf,
    /// `name value` lines.
    values: PathBuf,
    /// Treat variables missing from the values file as zero.
    #[arg(long)]
    missing_as_zero: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    instance: PathBuf,
    solution: PathBuf,
    #[arg(long, default_value = "exact")]
    mode: CostMode,
    /// Print CSV instead of a table.
    #[arg(long)]
    csv: bool,
}

#[derive(Debug, Args)]
struct CompareArgs {
    instance: PathBuf,
    solution_a: PathBuf,
    solution_b: PathBuf,
    #[arg(long, default_value = "exact")]
    mode: CostMode,
}

/// Failure carrying the exit code it maps to.
struct Failure {
    code: i32,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure { code: EXIT_INVALID, error: e.into() }
    }
}

fn fail(code: i32, error: anyhow::Error) -> Failure {
    Failure { code, error }
}

type CmdResult = Result<(), Failure>;

/// Runs the command line `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let pool = match cli.threads {
        Some(0) => {
            let _ = writeln!(err, "error: --threads must be at least 1");
            return EXIT_USAGE;
        }
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INVALID;
        }
    };
    let json = cli.json;
    // Buffered so the closure handed to the pool is `Send`.
    let mut buf: Vec<u8> = Vec::new();
    let result = pool.install(|| {
        let out: &mut dyn Write = &mut buf;
        match cli.command {
            Command::Validate { instance } => cmd_validate(&instance, json, out),
            Command::Gen(a) => cmd_gen(a, out),
            Command::Solve(a) => cmd_solve(a, json, out),
            Command::BuildMilp(a) => cmd_build(a, json, out),
            Command::Decode(a) => cmd_decode(a, json, out),
            Command::Evaluate(a) => cmd_evaluate(a, json, out),
            Command::Compare(a) => cmd_compare(a, json, out),
        }
    });
    let _ = out.write_all(&buf);
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {:#}", f.error);
            f.code
        }
    }
}

fn load(path: &Path) -> Result<Instance, Failure> {
    let inst = load_instance(path).with_context(|| format!("loading {}", path.display()))?;
    let report = validate_instance(&inst);
    if !report.is_valid() {
        return Err(fail(EXIT_INVALID, anyhow::anyhow!("{} is invalid:\n{report}", path.display())));
    }
    Ok(inst)
}

fn load_solution(instance: &Instance, path: &Path) -> Result<Solution, Failure> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(solution_from_str(instance, &text).with_context(|| format!("reading {}", path.display()))?)
}

fn write_text(path: Option<&Path>, text: &str, out: &mut dyn Write) -> CmdResult {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn print_json(out: &mut dyn Write, value: &impl Serialize) -> CmdResult {
    let text = serde_json::to_string_pretty(value)?;
    writeln!(out, "{text}")?;
    Ok(())
}

fn cost_table(out: &mut dyn Write, breakdown: &CostBreakdown) -> std::io::Result<()> {
    for (name, value) in breakdown.terms() {
        writeln!(out, "{name:<22}{value:>16.2}")?;
    }
    writeln!(out, "{:<22}{:>16.2}", "total", breakdown.total)
}

fn cmd_validate(path: &Path, json: bool, out: &mut dyn Write) -> CmdResult {
    let inst = load_instance(path).with_context(|| format!("loading {}", path.display()))?;
    let report = validate_instance(&inst);
    if json {
        print_json(out, &report)?;
    } else {
        writeln!(out, "{report}")?;
    }
    if report.is_valid() {
        Ok(())
    } else {
        Err(fail(EXIT_INVALID, anyhow::anyhow!("{} violation(s)", report.violations.len())))
    }
}

fn cmd_gen(a: GenArgs, out: &mut dyn Write) -> CmdResult {
    if a.branches == 0 || a.ports == 0 || a.dests == 0 || a.volume_bands == 0 {
        return Err(fail(EXIT_USAGE, anyhow::anyhow!("sizes and band count must be positive")));
    }
    if !(a.density > 0.0 && a.density <= 1.0) {
        return Err(fail(EXIT_USAGE, anyhow::anyhow!("density must lie in (0, 1]")));
    }
    let cfg = GenConfig {
        seed: a.seed,
        branches: a.branches,
        origin_ports: a.ports,
        destinations: a.dests,
        density: a.density,
        profile: a.profile,
        volume_bands: a.volume_bands,
    };
    write_text(a.output.as_deref(), &instance_to_string(&generate(&cfg)), out)
}

#[derive(Serialize)]
struct SolveReport<'a> {
    method: &'a str,
    mode: CostMode,
    cost: CostBreakdown,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_cost: Option<CostBreakdown>,
    #[serde(skip_serializing_if = "Option::is_none")]
    proven_optimal: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    evaluated: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    violations: Option<&'a ViolationReport>,
    hubs: Vec<String>,
}

fn heuristic_failure(e: HeuristicError) -> Failure {
    fail(EXIT_INVALID, e.into())
}

fn cmd_solve(a: SolveArgs, json: bool, out: &mut dyn Write) -> CmdResult {
    let inst = load(&a.instance)?;
    let deadline = a.time_budget.map(|s| Instant::now() + Duration::from_secs_f64(s.max(0.0)));
    let mut violations = None;
    let mut other_broken = 0;
    let (name, solution, mode, cost, exact_cost, proven, evaluated) = match a.method {
        Method::TwoStage => {
            let res = solve_two_stage(&inst, a.hub_budget).map_err(heuristic_failure)?;
            if let Some(p) = &a.raw_output {
                std::fs::write(p, solution_to_string(&inst, &res.raw))
                    .with_context(|| format!("writing {}", p.display()))?;
            }
            other_broken = res.raw_report.violations.len() - res.violations.violations.len();
            violations = Some(res.violations);
            ("two-stage", res.merged, CostMode::Exact, res.cost, None, None, None)
        }
        Method::NoHub => {
            let opts = NoHubOptions { deadline, ..NoHubOptions::default() };
            let res = solve_no_hubs(&inst, opts).map_err(heuristic_failure)?;
            let exact = evaluate_cost(&inst, &res.solution, CostMode::Exact)?;
            ("no-hub", res.solution, opts.mode, res.cost, Some(exact), Some(res.proven_optimal), Some(res.nodes))
        }
        Method::LocalSearch => {
            let start = match &a.start {
                Some(p) => load_solution(&inst, p)?,
                None => {
                    solve_no_hubs(&inst, NoHubOptions { deadline, ..NoHubOptions::default() })
                        .map_err(heuristic_failure)?
                        .solution
                }
            };
            let opts = LocalSearchOptions { max_rounds: a.max_rounds, deadline, ..LocalSearchOptions::default() };
            let res = local_search_improve(&inst, &start, &opts).map_err(heuristic_failure)?;
            let exact = evaluate_cost(&inst, &res.solution, CostMode::Exact)?;
            ("local-search", res.solution, opts.mode, res.cost, Some(exact), None, None)
        }
        Method::Oracle => {
            let limits = OracleLimits { budget: a.oracle_budget, ..OracleLimits::default() };
            let res = enumerate_optimal(&inst, &limits).map_err(|e| match e {
                OracleError::TooLarge { .. } | OracleError::BudgetExceeded { .. } => fail(EXIT_LIMIT, e.into()),
                other => fail(EXIT_INVALID, other.into()),
            })?;
            ("oracle", res.solution, CostMode::Approx, res.approx, Some(res.exact), Some(true), Some(res.evaluated))
        }
    };
    write_text(a.output.as_deref(), &solution_to_string(&inst, &solution), &mut std::io::sink())?;
    let hubs = solution.hubs.iter().map(|&h| inst.branch_id(h).to_string()).collect();
    let report = SolveReport {
        method: name,
        mode,
        cost,
        exact_cost,
        proven_optimal: proven,
        evaluated,
        violations: violations.as_ref(),
        hubs,
    };
    if json {
        print_json(out, &report)?;
    } else {
        writeln!(out, "method: {name}")?;
        writeln!(out, "hubs: {}", if report.hubs.is_empty() { "none".to_string() } else { report.hubs.join(", ") })?;
        writeln!(out, "cost ({mode}):")?;
        cost_table(out, &cost)?;
        if let Some(exact) = &exact_cost {
            writeln!(out, "exact total: {:.2}", exact.total)?;
        }
        if let Some(false) = proven {
            writeln!(out, "note: search stopped early; result not proven optimal")?;
        }
        if let Some(v) = &violations {
            if !v.is_feasible() {
                writeln!(out, "merge conflicts before repair:\n{v}")?;
            }
        }
        if other_broken > 0 {
            writeln!(out, "the unrepaired merge also breaks {other_broken} other rule(s)")?;
        }
    }
    if a.output.is_none() && !json {
        write!(out, "{}", solution_to_string(&inst, &solution))?;
    }
    Ok(())
}

fn model_for(inst: &Instance, no_hubs: bool) -> Result<milp::MilpModel, Failure> {
    Ok(milp::build_model(inst, ModelOptions { allow_hubs: !no_hubs })?)
}

fn is_mps(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("mps"))
}

fn cmd_build(a: BuildArgs, json: bool, out: &mut dyn Write) -> CmdResult {
    let inst = load(&a.instance)?;
    let model = model_for(&inst, a.no_hubs)?;
    let text = if is_mps(&a.output) { milp::emit_mps(&model) } else { milp::emit_lp(&model) };
    std::fs::write(&a.output, text).with_context(|| format!("writing {}", a.output.display()))?;
    #[derive(Serialize)]
    struct Summary {
        variables: usize,
        constraints: usize,
    }
    let summary = Summary { variables: model.variables().len(), constraints: model.constraints().len() };
    if json {
        print_json(out, &summary)?;
    } else {
        writeln!(out, "{} variables, {} constraints → {}", summary.variables, summary.constraints, a.output.display())?;
    }
    Ok(())
}

fn cmd_decode(a: DecodeArgs, json: bool, out: &mut dyn Write) -> CmdResult {
    let inst = load(&a.instance)?;
    let model_text = std::fs::read_to_string(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
    let emit = if is_mps(&a.model) { milp::emit_mps } else { milp::emit_lp };
    let model = [false, true]
        .into_iter()
        .map(|no_hubs| model_for(&inst, no_hubs))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .find(|m| emit(m) == model_text)
        .ok_or_else(|| fail(EXIT_INVALID, anyhow::anyhow!("{} was not built from this instance", a.model.display())))?;
    let values_text = std::fs::read_to_string(&a.values).with_context(|| format!("reading {}", a.values.display()))?;
    let values = milp::parse_values(&model, &values_text, a.missing_as_zero)?;
    let sol = milp::decode_solution(&inst, &model, &values)?;
    let report = check_feasibility(&inst, &sol)?;
    if !report.is_feasible() {
        return Err(fail(EXIT_INVALID, anyhow::anyhow!("decoded solution is infeasible:\n{report}")));
    }
    let text = solution_to_string(&inst, &sol);
    write_text(a.output.as_deref(), &text, out)?;
    if a.output.is_some() {
        let cost = evaluate_cost(&inst, &sol, CostMode::Approx)?;
        if json {
            print_json(out, &cost)?;
        } else {
            cost_table(out, &cost)?;
        }
    }
    Ok(())
}

fn evaluate_failure(e: EvaluateError) -> Failure {
    fail(EXIT_INVALID, e.into())
}

fn cmd_evaluate(a: EvaluateArgs, json: bool, out: &mut dyn Write) -> CmdResult {
    let inst = load(&a.instance)?;
    let sol = load_solution(&inst, &a.solution)?;
    let cost = evaluate_cost(&inst, &sol, a.mode).map_err(evaluate_failure)?;
    if json {
        print_json(out, &cost)?;
    } else if a.csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["term", "cost"])?;
        for (name, value) in cost.terms().into_iter().chain([("total", cost.total)]) {
            w.write_record([name.to_string(), value.to_string()])?;
        }
        out.write_all(&w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?)?;
    } else {
        cost_table(out, &cost)?;
    }
    Ok(())
}

fn cmd_compare(a: CompareArgs, json: bool, out: &mut dyn Write) -> CmdResult {
    let inst = load(&a.instance)?;
    let sa = load_solution(&inst, &a.solution_a)?;
    let sb = load_solution(&inst, &a.solution_b)?;
    let cmp = compare(&inst, &sa, &sb, a.mode).map_err(evaluate_failure)?;
    if json {
        print_json(out, &cmp)?;
        return Ok(());
    }
    writeln!(out, "{:<22}{:>16}{:>16}{:>16}", "term", "a", "b", "b - a")?;
    let rows = cmp.a.terms().into_iter().zip(cmp.b.terms()).zip(cmp.delta.terms());
    for (((name, x), (_, y)), (_, d)) in rows {
        writeln!(out, "{name:<22}{x:>16.2}{y:>16.2}{d:>16.2}")?;
    }
    writeln!(out, "{:<22}{:>16.2}{:>16.2}{:>16.2}", "total", cmp.a.total, cmp.b.total, cmp.delta.total)?;
    writeln!(out, "improvement of b over a: {:.2} %", cmp.improvement_percent)?;
    writeln!(out, "volume via hubs: a {:.2} %, b {:.2} %", cmp.hub_share_a_percent, cmp.hub_share_b_percent)?;
    Ok(())
}
