use clap::{Args, Parser, Subcommand};
use qsynth::bench::{run_sweep, to_csv, Family, SweepSpec};
use qsynth::circuit::measure;
use qsynth::domains::{ConstraintSet, Objective};
use qsynth::emitter::{functional_error, parse_qasm, report_json, to_qasm, ReportInput};
use qsynth::model::{elaborate, parse_model, Model};
use qsynth::solver::{SolveOptions, Status, Strategy};
use qsynth::synth::{build_graph, synthesize_graph, SynthError};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

const EXIT_INFEASIBLE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;

#[derive(Parser)]
#[command(name = "qsynth", version, about = "Synthesize gate-level quantum circuits from functional models")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize a model under constraints.
    Synth(SynthArgs),
    /// Check a QASM file against a model, its constraints and a report.
    Verify(VerifyArgs),
    /// Run a benchmark sweep and write CSV.
    Bench(BenchArgs),
    /// Print the call graph with every node's resource options.
    ProfileDump(ProfileArgs),
}

#[derive(Args, Clone)]
struct ConstraintArgs {
    /// Objective: none, width, depth or cx.
    #[arg(long, default_value = "none")]
    opt: String,
    #[arg(long)]
    max_width: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    max_cx: Option<u64>,
}

#[derive(Args)]
struct SynthArgs {
    model: PathBuf,
    #[command(flatten)]
    cons: ConstraintArgs,
    /// Comma-separated seeding strategies.
    #[arg(long)]
    strategy: Option<String>,
    /// Falls back to QSYNTH_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Seconds.
    #[arg(long, default_value_t = 1000.0)]
    timeout: f64,
    /// QASM output.
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
    /// JSON report output.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Graphviz dump of the call graph.
    #[arg(long)]
    dump_graph: Option<PathBuf>,
    /// Decision log as JSON lines.
    #[arg(long)]
    decision_log: Option<PathBuf>,
    /// Print every pruned tuple to stderr.
    #[arg(long)]
    trace_propagation: bool,
    /// Skip the interchangeable-node reduction.
    #[arg(long)]
    no_reduce: bool,
}

#[derive(Args)]
struct VerifyArgs {
    model: PathBuf,
    qasm: PathBuf,
    #[command(flatten)]
    cons: ConstraintArgs,
    /// Report whose metrics and select choices are checked.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// walk, qsvt or block-encoding.
    #[arg(long)]
    family: String,
    /// Inclusive range `a..b` or comma list.
    #[arg(long)]
    n: String,
    /// Comma list; `none` for unconstrained.
    #[arg(long, default_value = "none")]
    max_width: String,
    #[arg(long, default_value = "cx")]
    opt: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Seconds per row.
    #[arg(long, default_value_t = 1000.0)]
    timeout: f64,
    /// QSVT polynomial degree.
    #[arg(long, default_value_t = 3)]
    degree: usize,
    /// Zero-aux implementations only.
    #[arg(long)]
    baseline: bool,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// CSV output; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ProfileArgs {
    model: PathBuf,
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
    /// Graphviz instead of JSON.
    #[arg(long)]
    dot: bool,
}

struct Failure(u8, String);

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        Failure(EXIT_INVALID, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(EXIT_INVALID, msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.cmd {
        Cmd::Synth(a) => synth(a),
        Cmd::Verify(a) => verify(a),
        Cmd::Bench(a) => bench(a),
        Cmd::ProfileDump(a) => profile_dump(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("qsynth: {msg}");
            ExitCode::from(code)
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("QSYNTH_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| invalid(format!("QSYNTH_SEED is not an integer: {v}"))),
        Err(_) => Ok(0),
    }
}

fn timeout(secs: f64) -> Result<Duration, Failure> {
    if secs.is_finite() && secs > 0.0 {
        Ok(Duration::from_secs_f64(secs))
    } else {
        Err(invalid("timeout must be positive"))
    }
}

fn parse_objective(s: &str) -> Result<Objective, Failure> {
    Objective::parse(s).ok_or_else(|| invalid(format!("unknown objective `{s}`")))
}

fn constraints(a: &ConstraintArgs) -> Result<(ConstraintSet, Objective), Failure> {
    let cons = ConstraintSet { max_width: a.max_width, max_depth: a.max_depth, max_cx: a.max_cx, max_single: None };
    Ok((cons, parse_objective(&a.opt)?))
}

fn load_model(path: &Path) -> Result<Model, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    parse_model(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

/// Writes through a sibling temporary file so readers never see a partial
/// output.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure(EXIT_INVALID, format!("{}: {e}", path.display()));
    let name = path.file_name().ok_or_else(|| invalid(format!("{}: not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, contents).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io(e)
    })
}

fn synth(a: SynthArgs) -> Result<(), Failure> {
    let (cons, obj) = constraints(&a.cons)?;
    let seed = resolve_seed(a.seed)?;
    let strategies = match &a.strategy {
        None => None,
        Some(list) => Some(
            list.split(',')
                .map(|s| Strategy::parse(s.trim()).ok_or_else(|| invalid(format!("unknown strategy `{s}`"))))
                .collect::<Result<Vec<_>, _>>()?,
        ),
    };
    let model = load_model(&a.model)?;
    let (el, graph) = build_graph(&model)?;
    if let Some(p) = &a.dump_graph {
        write_atomic(p, &graph.to_dot())?;
    }
    let opts = SolveOptions {
        strategies,
        seed,
        timeout: Some(timeout(a.timeout)?),
        reduce: !a.no_reduce,
        trace_propagation: a.trace_propagation,
        record_log: a.decision_log.is_some(),
        ..Default::default()
    };
    let s = synthesize_graph(el, graph, &cons, obj, &opts)?;
    for line in &s.result.trace {
        eprintln!("{line}");
    }
    if let Some(p) = &a.decision_log {
        let mut text = String::new();
        for d in &s.result.log {
            text.push_str(&serde_json::to_string(d).expect("decision serializes"));
            text.push('\n');
        }
        write_atomic(p, &text)?;
    }
    let report =
        report_json(&ReportInput { result: &s.result, metrics: s.metrics, constraints: &cons, objective: obj, seed });
    if let Some(p) = &a.report {
        write_atomic(p, &pretty(&report))?;
    }
    if let (Some(p), Some(c)) = (&a.output, &s.circuit) {
        write_atomic(p, &to_qasm(c))?;
    }
    match s.result.status {
        Status::Optimal | Status::Feasible => {
            let m = s.metrics.expect("solution has metrics");
            println!(
                "{} width={} depth={} cx={} single={}",
                if s.result.status == Status::Optimal { "optimal" } else { "feasible" },
                m.width,
                m.depth,
                m.counts.cx,
                m.counts.single
            );
            Ok(())
        }
        Status::Infeasible => Err(Failure(EXIT_INFEASIBLE, "infeasible under the given constraints".into())),
        Status::Unknown => Err(Failure(EXIT_TIMEOUT, "budget exhausted before any solution".into())),
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

fn verify(a: VerifyArgs) -> Result<(), Failure> {
    let (cons, _) = constraints(&a.cons)?;
    let model = load_model(&a.model)?;
    let el = elaborate(&model).map_err(|e| invalid(e.to_string()))?;
    let text = std::fs::read_to_string(&a.qasm).map_err(|e| invalid(format!("{}: {e}", a.qasm.display())))?;
    let circuit = parse_qasm(&text).map_err(|e| invalid(format!("{}: {e}", a.qasm.display())))?;
    let m = measure(&circuit);
    let mut ok = cons.satisfied_by(m.width, m.depth, m.counts);
    let mut out = json!({
        "metrics": {"width": m.width, "depth": m.depth, "cx": m.counts.cx, "single": m.counts.single},
        "constraints_satisfied": ok,
    });
    let mut choices = BTreeMap::new();
    if let Some(p) = &a.report {
        let text = std::fs::read_to_string(p).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
        let r: Value = serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
        if let Some(c) = r.get("choices") {
            choices =
                serde_json::from_value(c.clone()).map_err(|e| invalid(format!("{}: choices: {e}", p.display())))?;
        }
        let matches = r.get("metrics") == Some(&out["metrics"]);
        out["report_matches"] = json!(matches);
        ok &= matches;
    }
    match functional_error(&el, &choices, &circuit) {
        Ok(err) => {
            out["functional_error"] = json!(err);
            ok &= err < 1e-9;
        }
        Err(msg) => {
            out["functional_error"] = Value::Null;
            out["functional_note"] = json!(msg);
        }
    }
    out["ok"] = json!(ok);
    print!("{}", pretty(&out));
    if ok {
        Ok(())
    } else {
        Err(Failure(EXIT_INFEASIBLE, "verification failed".into()))
    }
}

fn parse_ns(s: &str) -> Result<Vec<usize>, Failure> {
    let bad = || invalid(format!("bad N range `{s}`"));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a == 0 || b < a {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    let ns = s.split(',').map(|x| x.trim().parse::<usize>().map_err(|_| bad())).collect::<Result<Vec<_>, _>>()?;
    if ns.contains(&0) {
        return Err(bad());
    }
    Ok(ns)
}

fn parse_widths(s: &str) -> Result<Vec<Option<usize>>, Failure> {
    s.split(',')
        .map(|w| match w.trim() {
            "none" => Ok(None),
            w => w.parse().map(Some).map_err(|_| invalid(format!("bad width `{w}`"))),
        })
        .collect()
}

fn bench(a: BenchArgs) -> Result<(), Failure> {
    let family = Family::parse(&a.family).ok_or_else(|| invalid(format!("unknown family `{}`", a.family)))?;
    if family == Family::Qsvt && a.degree.is_multiple_of(2) {
        return Err(invalid("QSVT degree must be odd"));
    }
    let spec = SweepSpec {
        family,
        ns: parse_ns(&a.n)?,
        widths: parse_widths(&a.max_width)?,
        objective: parse_objective(&a.opt)?,
        timeout: timeout(a.timeout)?,
        seed: resolve_seed(a.seed)?,
        degree: a.degree,
        baseline: a.baseline,
        jobs: a.jobs,
    };
    let rows = run_sweep(&spec)?;
    let csv = to_csv(&rows);
    match &a.csv {
        Some(p) => write_atomic(p, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn profile_dump(a: ProfileArgs) -> Result<(), Failure> {
    let model = load_model(&a.model)?;
    let (_, graph) = build_graph(&model)?;
    let text = if a.dot {
        graph.to_dot()
    } else {
        let nodes: Vec<Value> = graph
            .nodes
            .iter()
            .map(|n| {
                json!({
                    "node": n.id,
                    "label": n.label,
                    "parent": n.parent,
                    "qubits": n.qubits,
                    "acquires": n.acquires,
                    "releases": n.releases,
                    "options": n.options.iter().map(|t| json!({
                        "choice": t.choice.to_string(),
                        "aux": t.aux,
                        "depth": t.depth,
                        "cx": t.counts.cx,
                        "single": t.counts.single,
                    })).collect::<Vec<_>>(),
                })
            })
            .collect();
        pretty(&json!({
            "functional_qubits": graph.num_functional,
            "logical_qubits": graph.num_logical,
            "qubit_names": graph.qubit_names,
            "top": graph.top,
            "nodes": nodes,
        }))
    };
    match &a.output {
        Some(p) => write_atomic(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
