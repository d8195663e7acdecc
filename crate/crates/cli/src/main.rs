use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use symred_core::exec::Exec;
use symred_core::expr::Config;
use symred_cli::problem::{CheckDecl, ProblemFile, Provenance};
use symred_cli::report::{Record, Summary};
use symred_cli::runner::Context;
use symred_cli::run_corpus;

#[derive(Parser)]
#[command(name = "symred", version, about = "Lie point symmetries, reduction of order, and nonlocally related systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone)]
struct Common {
    /// Emit one JSON record per line instead of text
    #[arg(long, global = true)]
    json: bool,
    /// Seed for numeric equivalence sampling
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Relative tolerance for numeric equivalence
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Record wall time per check
    #[arg(long, global = true)]
    timing: bool,
    /// Run on the calling thread only
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Args, Clone)]
struct OpArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    field: Option<String>,
    /// Comma-separated generator names
    #[arg(long, value_delimiter = ',')]
    fields: Vec<String>,
    #[arg(long)]
    chart: Option<String>,
    #[arg(long)]
    system: Option<String>,
    /// Reduced system (a saved result name)
    #[arg(long)]
    reduced: Option<String>,
    #[arg(long)]
    order: Option<usize>,
    /// Dependent variable to eliminate
    #[arg(long)]
    target: Option<String>,
    /// Comma-separated auxiliary variable names
    #[arg(long, value_delimiter = ',')]
    names: Option<Vec<String>>,
    /// Connection check: a solution pair from the problem file
    #[arg(long)]
    solution: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Prolongation coefficients of a field
    Prolong(OpArgs),
    /// Is a field a point symmetry of a system
    CheckSymmetry(OpArgs),
    /// Does a chart straighten a field out to a translation
    CanonicalVerify(OpArgs),
    /// Rewrite a system in a chart's coordinates
    Transform(OpArgs),
    /// Reduce the order of an ODE invariant under translation
    ReduceOde(OpArgs),
    /// Reduce a PDE invariant under translation to a gradient system
    ReducePde(OpArgs),
    /// Push a field through a chart
    Pushforward(OpArgs),
    /// Point or nonlocal on the reduced system
    Classify(OpArgs),
    /// Does a reduced-system symmetry lift to a point symmetry
    LiftTest(OpArgs),
    /// Bracket of two fields in terms of the declared generators
    Commutator(OpArgs),
    /// Structure constants and solvability
    Algebra(OpArgs),
    /// Which generator of a pair to reduce by first
    Advice(OpArgs),
    /// Check that reduced and parent solutions correspond
    Connection(OpArgs),
    /// Run every check in a directory of problem files
    RunCorpus {
        #[arg(long, default_value = "corpus")]
        dir: PathBuf,
        /// Only problems whose id or file name contains this
        #[arg(long)]
        filter: Option<String>,
    },
}

fn config(c: &Common) -> Config {
    let mut cfg = Config::default();
    if let Some(s) = c.seed {
        cfg = cfg.with_seed(s);
    }
    if let Some(t) = c.tolerance {
        cfg = cfg.with_tolerance(t);
    }
    if c.sequential {
        cfg = cfg.with_exec(Exec::Sequential);
    }
    cfg
}

fn emit(out: &mut impl Write, r: &Record, json: bool) {
    let line = if json { r.json() } else { r.text() };
    let _ = writeln!(out, "{line}");
}

/// The problem's own check for this invocation, if there is one; flags left
/// out match anything.
fn find_check<'p>(p: &'p ProblemFile, op: &str, a: &OpArgs) -> Option<&'p CheckDecl> {
    let same = |flag: &Option<String>, have: &Option<String>| flag.is_none() || flag == have;
    p.checks.iter().find(|c| {
        c.op == op
            && same(&a.field, &c.field)
            && (a.fields.is_empty() || a.fields == c.fields)
            && same(&a.chart, &c.chart)
            && same(&a.system, &c.system)
            && same(&a.reduced, &c.reduced)
            && same(&a.target, &c.target)
            && same(&a.solution, &c.solution)
            && (a.order.is_none() || a.order == c.order)
            && (a.names.is_none() || a.names == c.names)
    })
}

fn adhoc(op: &str, a: &OpArgs) -> CheckDecl {
    CheckDecl {
        op: op.to_string(),
        provenance: Provenance::Derived,
        system: a.system.clone(),
        field: a.field.clone(),
        fields: a.fields.clone(),
        chart: a.chart.clone(),
        reduced: a.reduced.clone(),
        solution: a.solution.clone(),
        target: a.target.clone(),
        names: a.names.clone(),
        order: a.order,
        save_as: None,
        expect: None,
        paper_expect: None,
        conflict_note: None,
        witness: None,
        criterion: None,
        residual: None,
        scale: None,
        integrability: None,
    }
}

fn check_refs(p: &ProblemFile, a: &OpArgs) -> Result<(), String> {
    for f in a.field.iter().chain(&a.fields) {
        if !p.fields.contains_key(f) {
            return Err(format!("unknown field `{f}`"));
        }
    }
    if let Some(c) = &a.chart {
        if !p.charts.contains_key(c) {
            return Err(format!("unknown chart `{c}`"));
        }
    }
    if let Some(s) = &a.solution {
        if !p.solutions.contains_key(s) {
            return Err(format!("unknown solution `{s}`"));
        }
    }
    for s in a.system.iter().chain(&a.reduced) {
        if !p.systems.contains_key(s) && p.saved(s).is_none() {
            return Err(format!("unknown system `{s}`"));
        }
    }
    Ok(())
}

fn run_op(op: &str, a: &OpArgs, common: &Common) -> ExitCode {
    let p = match ProblemFile::load(&a.problem) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = check_refs(&p, a) {
        eprintln!("error: {}: {e}", a.problem.display());
        return ExitCode::from(2);
    }
    let check = find_check(&p, op, a).cloned().unwrap_or_else(|| adhoc(op, a));
    let ctx = Context::new(&p, config(common));
    let start = std::time::Instant::now();
    let (verdict, computed, expected) = ctx.evaluate(&check);
    let rec = Record {
        problem: p.id.clone(),
        operation: op.to_string(),
        verdict,
        computed,
        expected,
        wall_time_ms: common.timing.then(|| start.elapsed().as_secs_f64() * 1e3),
    };
    let mut out = std::io::stdout().lock();
    if common.json {
        emit(&mut out, &rec, true);
    } else {
        let _ = writeln!(out, "{}", rec.computed);
        let _ = writeln!(out, "{} (expected: {})", verdict.name(), rec.expected);
    }
    if verdict.is_failure() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = cli.common.clone();
    let op = |name: &str, a: &OpArgs| run_op(name, a, &common);
    match &cli.cmd {
        Cmd::Prolong(a) => op("prolong", a),
        Cmd::CheckSymmetry(a) => op("check-symmetry", a),
        Cmd::CanonicalVerify(a) => op("canonical-verify", a),
        Cmd::Transform(a) => op("transform", a),
        Cmd::ReduceOde(a) => op("reduce-ode", a),
        Cmd::ReducePde(a) => op("reduce-pde", a),
        Cmd::Pushforward(a) => op("pushforward", a),
        Cmd::Classify(a) => op("classify", a),
        Cmd::LiftTest(a) => op("lift-test", a),
        Cmd::Commutator(a) => op("commutator", a),
        Cmd::Algebra(a) => op("algebra", a),
        Cmd::Advice(a) => op("advice", a),
        Cmd::Connection(a) => op("connection", a),
        Cmd::RunCorpus { dir, filter } => {
            let cfg = config(&common);
            let run = match run_corpus(dir, filter.as_deref(), &cfg, common.timing) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {}: {e}", dir.display());
                    return ExitCode::from(2);
                }
            };
            for e in &run.load_errors {
                eprintln!("skipped {e}");
            }
            let mut out = std::io::stdout().lock();
            let mut summary = Summary::default();
            for r in &run.records {
                summary.add(r.verdict);
                emit(&mut out, r, common.json);
            }
            if !common.json {
                let _ = writeln!(out, "{summary}");
            }
            if summary.failures() > 0 || !run.load_errors.is_empty() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
