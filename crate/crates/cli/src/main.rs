//! `scc`: check, solve, run and observe soft concurrent constraint programs.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scc_core::engine::{Engine, Policy, RunLimits, Terminal, DEFAULT_MAX_FRESH, DEFAULT_MAX_STEPS};
use scc_core::lang::{parse, Program};
use scc_core::observe::{observe, solve_bb, Filter, Observables};
use scc_core::report;
use scc_core::scsp;
use scc_core::softcon::{Constraint, ConstraintSystem};

const EXIT_USAGE: u8 = 1;
const EXIT_FAIL: u8 = 2;
const EXIT_HANG: u8 = 3;
const EXIT_BOUND: u8 = 4;

#[derive(Parser)]
#[command(name = "scc", version, about = "Soft concurrent constraint programming")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a program.
    Check(Opts),
    /// Solve the soft CSP made of the named constraints, over `interest`.
    Solve(Opts),
    /// Execute one run of the main agent.
    Run(Opts),
    /// Explore every run and report the observables.
    Observe(Opts),
    /// Compute the don't-know solution by iterated cuts.
    Bb(Opts),
}

#[derive(Args)]
struct Opts {
    file: PathBuf,
    #[arg(long, value_enum, default_value_t = PolicyArg::Leftmost)]
    policy: PolicyArg,
    /// Seed for `--policy random`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "SCC_MAX_STEPS", default_value_t = DEFAULT_MAX_STEPS)]
    max_steps: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_FRESH)]
    max_fresh: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, value_enum, default_value_t = FilterArg::All)]
    filter: FilterArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Leftmost,
    Random,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterArg {
    All,
    Best,
    Worst,
    Frontier,
}

impl From<FilterArg> for Filter {
    fn from(f: FilterArg) -> Filter {
        match f {
            FilterArg::All => Filter::All,
            FilterArg::Best => Filter::Best,
            FilterArg::Worst => Filter::Worst,
            FilterArg::Frontier => Filter::Frontier,
        }
    }
}

/// An error reported on stderr with exit code 1.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Failure {
        Failure(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok((out, code)) => {
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = std::io::stdout().lock().write_all(out.as_bytes());
            ExitCode::from(code)
        }
        Err(Failure(msg)) => {
            eprintln!("scc: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(String, u8), Failure> {
    match cmd {
        Command::Check(o) => {
            load(&o)?;
            Ok((format!("{}: ok\n", o.file.display()), 0))
        }
        Command::Solve(o) => solve(&o),
        Command::Run(o) => run(&o),
        Command::Observe(o) => observe_cmd(&o),
        Command::Bb(o) => bb(&o),
    }
}

fn load(o: &Opts) -> Result<Program, Failure> {
    let text = std::fs::read_to_string(&o.file).map_err(|e| Failure(format!("{}: {e}", o.file.display())))?;
    parse(&text).map_err(|e| located(&o.file, e))
}

/// `file:line:col: message` for positioned errors, `file: message` otherwise.
fn located(path: &Path, e: impl std::fmt::Display) -> Failure {
    let msg = e.to_string();
    let sep = if msg.starts_with(|c: char| c.is_ascii_digit()) { ":" } else { ": " };
    Failure(format!("{}{sep}{msg}", path.display()))
}

fn limits(o: &Opts) -> Result<RunLimits, Failure> {
    Ok(RunLimits::new(o.max_steps, o.max_fresh)?)
}

fn policy(o: &Opts) -> Result<Policy, Failure> {
    match (o.policy, o.seed) {
        (PolicyArg::Leftmost, None) => Ok(Policy::Leftmost),
        (PolicyArg::Random, Some(seed)) => Ok(Policy::Random(seed)),
        (PolicyArg::Random, None) => Err(Failure("--policy random requires --seed".into())),
        (PolicyArg::Leftmost, Some(_)) => Err(Failure("--seed is only valid with --policy random".into())),
    }
}

/// `x,y: a,b=0.8 ...`, or just the value for a constant.
fn store_text(sys: &ConstraintSystem, c: &Constraint) -> String {
    if let Some(v) = c.as_constant() {
        return v.to_string();
    }
    let vars: Vec<&str> = c.vars().iter().map(|v| v.as_str()).collect();
    let mut out = format!("{}:", vars.join(","));
    for (tuple, v) in sys.rows(c) {
        let t: Vec<String> = tuple.iter().map(|a| a.to_string()).collect();
        let _ = write!(out, " {}={v}", t.join(","));
    }
    out
}

fn json_line(v: &serde_json::Value) -> String {
    format!("{v}\n")
}

fn solve(o: &Opts) -> Result<(String, u8), Failure> {
    let program = load(o)?;
    let sys = program.system();
    let problem = program.problem()?;
    let solution = scsp::solve(sys, &problem);
    let blevel = scsp::blevel(sys, &problem);
    let out = match o.format {
        Format::Json => json_line(&serde_json::json!({
            "solution": report::constraint(sys, &solution),
            "blevel": report::value(blevel),
        })),
        Format::Text if solution.vars().is_empty() => format!("blevel={blevel}\n"),
        Format::Text => format!("{} ; blevel={blevel}\n", store_text(sys, &solution)),
    };
    Ok((out, 0))
}

fn terminal_code(t: &Terminal) -> u8 {
    match t {
        Terminal::Success(_) => 0,
        Terminal::Fail => EXIT_FAIL,
        Terminal::Hang => EXIT_HANG,
        Terminal::BoundExceeded | Terminal::Divergent => EXIT_BOUND,
    }
}

fn run(o: &Opts) -> Result<(String, u8), Failure> {
    let program = load(o)?;
    let policy = policy(o)?;
    let engine = Engine::new(&program, limits(o)?);
    let r = engine.run_one(policy)?;
    let sys = program.system();
    let out = match o.format {
        Format::Json => json_line(&report::run(sys, &r)),
        Format::Text => {
            let rules: Vec<&str> = r.rules().iter().map(|x| x.name()).collect();
            format!(
                "terminal: {}\nsteps: {}\nrules: {}\nstore: {}\n",
                r.terminal.name(),
                r.steps(),
                rules.join(" "),
                store_text(sys, r.final_store())
            )
        }
    };
    Ok((out, terminal_code(&r.terminal)))
}

fn observables_code(obs: &Observables) -> u8 {
    if !obs.success_set.is_empty() {
        0
    } else if obs.fail_dk {
        EXIT_FAIL
    } else if obs.hang {
        EXIT_HANG
    } else if obs.bound_exceeded || obs.divergent {
        EXIT_BOUND
    } else {
        EXIT_FAIL
    }
}

fn observe_cmd(o: &Opts) -> Result<(String, u8), Failure> {
    let program = load(o)?;
    let obs = observe(&program, limits(o)?)?;
    let sys = program.system();
    let shown = Filter::from(o.filter).apply(sys, &obs.success_set);
    let out = match o.format {
        Format::Json => json_line(&report::observables(sys, &obs, &shown, None)),
        Format::Text => {
            let mut out = format!("success_set: {}\n", shown.len());
            for c in &shown {
                let _ = writeln!(out, "  {}", store_text(sys, c));
            }
            let _ = writeln!(out, "dk_solution: {}", store_text(sys, &obs.dk_solution));
            for (name, flag) in [
                ("fail", obs.fail),
                ("fail_dk", obs.fail_dk),
                ("hang", obs.hang),
                ("divergent", obs.divergent),
                ("bound_exceeded", obs.bound_exceeded),
            ] {
                let _ = writeln!(out, "{name}: {flag}");
            }
            let _ = writeln!(out, "runs: {}", obs.summary.runs);
            out
        }
    };
    Ok((out, observables_code(&obs)))
}

fn bb(o: &Opts) -> Result<(String, u8), Failure> {
    let program = load(o)?;
    let outcome = solve_bb(&program, limits(o)?)?;
    let sys = program.system();
    let out = match o.format {
        Format::Json => json_line(&serde_json::json!({
            "dk_solution": report::constraint(sys, &outcome.solution),
            "bb": report::bb(&outcome),
        })),
        Format::Text => format!(
            "dk_solution: {}\niterations: {}\nruns_explored: {}\nnaive_runs: {}\nruns_pruned: {}\n",
            store_text(sys, &outcome.solution),
            outcome.iterations,
            outcome.runs_explored,
            outcome.naive_runs,
            outcome.runs_pruned
        ),
    };
    Ok((out, 0))
}
