//! Command-line front end.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::circuits::{self, GenError, FAMILIES};
use crate::executor::{compare, gather, oracle_simulate, run_plan, ExecError, RunOptions};
use crate::gates::MAX_DENSE_QUBITS;
use crate::graph::{build_graph, GraphError};
use crate::partitioner::{min_budget, partition, MemoryHierarchy, PartitionError, PartitionTree};
use crate::plan::{lower, ExecutionPlan, TaskOp};
use crate::qasm::{parse_qasm, Circuit, QasmError};

/// Largest circuit `stats` will execute.
pub const MAX_EXEC_QUBITS: usize = 24;
/// Deviation above which `--verify` fails.
pub const VERIFY_TOLERANCE: f64 = 1e-10;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_PARTITION: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Parse { path: String, source: QasmError },
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } => EXIT_PARSE,
            CliError::Partition(_) | CliError::Graph(_) => EXIT_PARTITION,
            _ => EXIT_OTHER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(
    name = "ccpart",
    version,
    about = "Partition and simulate quantum circuits over distributed memory"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Partition a circuit and report the tree.
    Partition(RunConfig),
    /// Partition, lower and execute a circuit.
    Run(RunConfig),
    /// Per-phase timing and data-movement breakdown.
    Stats(RunConfig),
    /// Partition generated circuits over a range of sizes.
    Bench(BenchConfig),
    /// Print a generated benchmark circuit as OpenQASM.
    Gen(GenConfig),
}

#[derive(Debug, Clone, Args, Default)]
pub struct RunConfig {
    /// OpenQASM 2.0 file, or `-` for stdin.
    pub input: PathBuf,
    /// Local-qubit budget per memory level, outermost first (e.g. 25,15,5).
    #[arg(long, value_delimiter = ',')]
    pub hierarchy: Option<Vec<usize>>,
    /// Number of simulated ranks (a power of two).
    #[arg(long)]
    pub ranks: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub shots: Option<usize>,
    /// Compare against the dense simulator.
    #[arg(long)]
    pub verify: bool,
    /// Include final amplitudes in the output.
    #[arg(long)]
    pub dump_state: bool,
    #[arg(long)]
    pub dump_plan: Option<PathBuf>,
    #[arg(long)]
    pub dump_tree: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchConfig {
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(FAMILIES))]
    pub family: String,
    /// Qubit counts: a list (4,6,8) or an inclusive range (30..37).
    #[arg(long, default_value = "4..12")]
    pub qubits: String,
    #[arg(long, default_value_t = 8)]
    pub ranks: usize,
    /// Memory levels per hierarchy (1 to 3).
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub levels: u8,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Execute and compare against the dense simulator where d is small enough.
    #[arg(long)]
    pub verify: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenConfig {
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(FAMILIES))]
    pub family: String,
    pub qubits: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Text produced by a command plus the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub text: String,
    pub code: i32,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, code: EXIT_OK }
    }
}

pub fn main_entry() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

/// Parse arguments, dispatch, and write results; returns the exit code.
pub fn run_cli<I, A>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return e.exit_code();
        }
    };
    let (result, dest) = match &cli.command {
        Command::Partition(c) => (cmd_partition(c), c.out.clone()),
        Command::Run(c) => (cmd_run(c), c.out.clone()),
        Command::Stats(c) => (cmd_stats(c), c.out.clone()),
        Command::Bench(c) => (cmd_bench(c), c.out.clone()),
        Command::Gen(c) => (cmd_gen(c), c.out.clone()),
    };
    match result.and_then(|o| emit(&o.text, dest.as_deref(), out).map(|_| o.code)) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn emit(text: &str, dest: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    match dest {
        Some(p) => write_file(p, text),
        None => out.write_all(text.as_bytes()).map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

fn write_file(p: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(p, text).map_err(|source| CliError::Io {
        path: p.display().to_string(),
        source,
    })
}

fn load(input: &Path) -> Result<Circuit, CliError> {
    let mut text = String::new();
    let io = |source| CliError::Io {
        path: input.display().to_string(),
        source,
    };
    if input.as_os_str() == "-" {
        std::io::stdin().read_to_string(&mut text).map_err(io)?;
    } else {
        text = std::fs::read_to_string(input).map_err(io)?;
    }
    parse_qasm(&text).map_err(|source| CliError::Parse {
        path: input.display().to_string(),
        source,
    })
}

/// Resolve `--hierarchy` and `--ranks` against the circuit width.
pub fn resolve_hierarchy(d: usize, hierarchy: Option<&[usize]>, ranks: Option<usize>) -> Result<Vec<usize>, CliError> {
    let g = match ranks {
        Some(r) if r == 0 || !r.is_power_of_two() => {
            return Err(CliError::Config(format!("--ranks {r} is not a power of two")))
        }
        Some(r) if r.trailing_zeros() as usize > d => {
            return Err(CliError::Config(format!("--ranks {r} needs more than {d} qubits")))
        }
        Some(r) => Some(r.trailing_zeros() as usize),
        None => None,
    };
    match (hierarchy, g) {
        (Some(h), Some(g)) => match h.first() {
            Some(&l0) if l0 + g == d => Ok(h.to_vec()),
            _ => Err(CliError::Config(format!(
                "--hierarchy {h:?} and --ranks 2^{g} disagree: log2(ranks) + L0 must equal {d}"
            ))),
        },
        (Some([]), None) => Err(CliError::Config("--hierarchy is empty".into())),
        (Some(h), None) => Ok(h.to_vec()),
        (None, Some(g)) => Ok(vec![d - g]),
        (None, None) => Ok(vec![d]),
    }
}

/// Budgets for `levels` levels below an outermost budget `l0`, each at least `width`.
pub fn scaled_hierarchy(l0: usize, levels: usize, width: usize) -> Vec<usize> {
    let fractions = [1.0, 0.6, 0.2];
    let mut out: Vec<usize> = Vec::new();
    for &f in fractions.iter().take(levels.max(1)) {
        let prev = out.last().copied().unwrap_or(l0);
        let l = ((l0 as f64 * f).round() as usize).max(width).max(1).min(prev);
        out.push(l);
    }
    out
}

struct Pipeline {
    circuit: Circuit,
    tree: PartitionTree,
    plan: ExecutionPlan,
    partition_seconds: f64,
}

fn pipeline(circuit: Circuit, budgets: &[usize]) -> Result<Pipeline, CliError> {
    let started = Instant::now();
    let graph = build_graph(&circuit)?;
    let tree = partition(&graph, &MemoryHierarchy::from_budgets(budgets))?;
    let partition_seconds = started.elapsed().as_secs_f64();
    let plan = lower(&tree, &circuit);
    Ok(Pipeline {
        circuit,
        tree,
        plan,
        partition_seconds,
    })
}

fn prepare(cfg: &RunConfig) -> Result<Pipeline, CliError> {
    let circuit = load(&cfg.input)?;
    let budgets = resolve_hierarchy(circuit.num_qubits, cfg.hierarchy.as_deref(), cfg.ranks)?;
    let p = pipeline(circuit, &budgets)?;
    if let Some(path) = &cfg.dump_tree {
        write_file(path, &p.tree.to_json())?;
    }
    if let Some(path) = &cfg.dump_plan {
        write_file(path, &p.plan.to_json())?;
    }
    Ok(p)
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

pub fn cmd_partition(cfg: &RunConfig) -> Result<Output, CliError> {
    let p = prepare(cfg)?;
    let (parts, leaves, boundaries, exchanges) = (
        p.tree.children.len(),
        p.tree.leaves().len(),
        p.tree.boundaries(),
        p.plan.exchange_count(),
    );
    let text = match cfg.format {
        Format::Json => pretty(&json!({
            "d": p.tree.d,
            "hierarchy": p.tree.hierarchy.budgets(),
            "gates": p.circuit.ops.len(),
            "partition_seconds": p.partition_seconds,
            "partitions": parts,
            "leaves": leaves,
            "boundaries": boundaries,
            "exchanges": exchanges,
            "tree": serde_json::to_value(&p.tree).expect("tree serializes"),
        })),
        Format::Text => {
            let mut s = String::new();
            writeln!(
                s,
                "qubits {}  gates {}  hierarchy {:?}",
                p.tree.d,
                p.circuit.ops.len(),
                p.tree.hierarchy.budgets()
            )
            .unwrap();
            writeln!(s, "partition time {:.3} s", p.partition_seconds).unwrap();
            writeln!(
                s,
                "partitions {parts}  leaves {leaves}  boundaries {boundaries}  exchanges {exchanges}"
            )
            .unwrap();
            for (i, part) in p.tree.children.iter().enumerate() {
                writeln!(
                    s,
                    "  [{i}] local {:?} global {:?} gates {} passthrough {}",
                    part.local_dims,
                    part.global_dims,
                    part.gates.len(),
                    part.passthrough_ops().count()
                )
                .unwrap();
            }
            s
        }
    };
    Ok(Output::ok(text))
}

#[derive(Serialize)]
struct RunReport {
    d: usize,
    g: usize,
    ranks: usize,
    hierarchy: Vec<usize>,
    gates: usize,
    partitions: usize,
    leaves: usize,
    exchanges: usize,
    kernels: usize,
    amplitudes_moved: usize,
    bytes_moved: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    shots: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verify: Option<Verify>,
    #[serde(skip_serializing_if = "Option::is_none")]
    histogram: Option<BTreeMap<String, u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    state: Option<Vec<[f64; 2]>>,
}

#[derive(Serialize)]
struct Verify {
    max_deviation: f64,
    tolerance: f64,
    ok: bool,
}

pub fn cmd_run(cfg: &RunConfig) -> Result<Output, CliError> {
    let p = prepare(cfg)?;
    let d = p.circuit.num_qubits;
    if (cfg.verify || cfg.dump_state) && d > MAX_DENSE_QUBITS {
        return Err(CliError::Config(format!(
            "--verify/--dump-state need at most {MAX_DENSE_QUBITS} qubits, circuit has {d}"
        )));
    }
    let out = run_plan::<f64>(
        &p.plan,
        RunOptions {
            shots: cfg.shots,
            seed: Some(cfg.seed),
        },
    )?;
    let verify = if cfg.verify {
        let dev = compare(&gather(&out.state), &oracle_simulate(&p.circuit)?)?;
        Some(Verify {
            max_deviation: dev,
            tolerance: VERIFY_TOLERANCE,
            ok: dev < VERIFY_TOLERANCE,
        })
    } else {
        None
    };
    let failed = verify.as_ref().is_some_and(|v| !v.ok);
    let report = RunReport {
        d,
        g: p.plan.g,
        ranks: p.plan.num_ranks(),
        hierarchy: p.tree.hierarchy.budgets(),
        gates: p.circuit.ops.len(),
        partitions: p.tree.children.len(),
        leaves: p.tree.leaves().len(),
        exchanges: out.report.exchanges,
        kernels: out.report.kernels,
        amplitudes_moved: out.report.amplitudes_moved,
        bytes_moved: out.report.bytes_moved,
        seed: cfg.seed,
        shots: cfg.shots,
        verify,
        histogram: out.histogram,
        state: cfg
            .dump_state
            .then(|| gather(&out.state).amps.iter().map(|a| [a.re, a.im]).collect()),
    };
    let text = match cfg.format {
        Format::Json => pretty(&serde_json::to_value(&report).expect("report serializes")),
        Format::Text => {
            let mut s = String::new();
            writeln!(
                s,
                "qubits {}  ranks {}  exchanges {}  kernels {}  amplitudes moved {}",
                report.d, report.ranks, report.exchanges, report.kernels, report.amplitudes_moved
            )
            .unwrap();
            if let Some(v) = &report.verify {
                let verdict = if v.ok { "OK" } else { "FAILED" };
                let rel = if v.ok { "<" } else { ">=" };
                writeln!(
                    s,
                    "max deviation {:.3e} {rel} {:.0e}, {verdict}",
                    v.max_deviation, v.tolerance
                )
                .unwrap();
            }
            if let Some(h) = &report.histogram {
                for (bits, n) in h {
                    writeln!(s, "{bits} {n}").unwrap();
                }
            }
            if let Some(st) = &report.state {
                for (i, [re, im]) in st.iter().enumerate() {
                    writeln!(s, "{i:0d$b} {re:+.12e} {im:+.12e}").unwrap();
                }
            }
            s
        }
    };
    Ok(Output {
        text,
        code: if failed { EXIT_VERIFY } else { EXIT_OK },
    })
}

pub fn cmd_stats(cfg: &RunConfig) -> Result<Output, CliError> {
    let p = prepare(cfg)?;
    let d = p.circuit.num_qubits;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &p.plan.tasks {
        *counts.entry(t.op.name()).or_default() += 1;
    }
    let amp_bytes = std::mem::size_of::<num_complex::Complex<f64>>();
    let exchanges: Vec<serde_json::Value> = p
        .plan
        .tasks
        .iter()
        .filter_map(|t| match &t.op {
            TaskOp::Exchange(x) => Some(json!({
                "task": t.id,
                "swapped_qubits": x.swapped_qubits,
                "rank_pairs": x.swaps.len(),
                "amplitudes_per_pair": x.block_len,
                "bytes": x.swaps.len() * 2 * x.block_len * amp_bytes,
            })),
            _ => None,
        })
        .collect();
    let planned_bytes: usize = exchanges
        .iter()
        .map(|e| e["bytes"].as_u64().unwrap_or(0) as usize)
        .sum();
    let exec = if d <= MAX_EXEC_QUBITS {
        Some(run_plan::<f64>(&p.plan, RunOptions::default())?.report)
    } else {
        None
    };
    let text = match cfg.format {
        Format::Json => pretty(&json!({
            "d": d,
            "g": p.plan.g,
            "ranks": p.plan.num_ranks(),
            "hierarchy": p.tree.hierarchy.budgets(),
            "partition_seconds": p.partition_seconds,
            "task_counts": counts,
            "exchanges": exchanges,
            "bytes_moved": planned_bytes,
            "executed": exec.is_some(),
            "compute_seconds": exec.as_ref().map(|r| r.compute_seconds),
            "exchange_seconds": exec.as_ref().map(|r| r.exchange_seconds),
            "tasks": exec.as_ref().map(|r| &r.tasks),
        })),
        Format::Text => {
            let mut s = String::new();
            writeln!(
                s,
                "qubits {d}  ranks {}  hierarchy {:?}",
                p.plan.num_ranks(),
                p.tree.hierarchy.budgets()
            )
            .unwrap();
            writeln!(s, "partition {:.6} s", p.partition_seconds).unwrap();
            let kinds: Vec<String> = counts.iter().map(|(k, n)| format!("{k} {n}")).collect();
            writeln!(s, "tasks: {}", kinds.join(", ")).unwrap();
            match &exec {
                Some(r) => writeln!(
                    s,
                    "local computation {:.6} s  data movement {:.6} s",
                    r.compute_seconds, r.exchange_seconds
                )
                .unwrap(),
                None => writeln!(s, "not executed (more than {MAX_EXEC_QUBITS} qubits)").unwrap(),
            }
            for e in &exchanges {
                writeln!(
                    s,
                    "exchange task {} swaps {} bytes {}",
                    e["task"], e["swapped_qubits"], e["bytes"]
                )
                .unwrap();
            }
            writeln!(s, "bytes moved {planned_bytes}").unwrap();
            s
        }
    };
    Ok(Output::ok(text))
}

/// Qubit counts from `4,6,8` or `30..37`.
pub fn parse_qubits(text: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Config(format!("cannot read qubit counts from `{text}`"));
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (usize, usize) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        );
        if a > b {
            return Err(bad());
        }
        Ok((a..=b).collect())
    } else {
        text.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
    }
}

pub fn cmd_bench(cfg: &BenchConfig) -> Result<Output, CliError> {
    if !cfg.ranks.is_power_of_two() {
        return Err(CliError::Config(format!("--ranks {} is not a power of two", cfg.ranks)));
    }
    let g = cfg.ranks.trailing_zeros() as usize;
    let mut rows = Vec::new();
    for d in parse_qubits(&cfg.qubits)? {
        if d <= g {
            return Err(CliError::Config(format!(
                "{d} qubits cannot be spread over {} ranks",
                cfg.ranks
            )));
        }
        let circuit = circuits::build(&cfg.family, d, cfg.seed)?;
        let budgets = scaled_hierarchy(d - g, cfg.levels as usize, min_budget(&circuit));
        let gates = circuit.ops.len();
        let p = pipeline(circuit, &budgets)?;
        let deviation = if cfg.verify && d <= MAX_DENSE_QUBITS {
            let out = run_plan::<f64>(&p.plan, RunOptions::default())?;
            Some(compare(&gather(&out.state), &oracle_simulate(&p.circuit)?)?)
        } else {
            None
        };
        rows.push(json!({
            "family": cfg.family,
            "d": d,
            "gates": gates,
            "hierarchy": budgets,
            "partition_seconds": p.partition_seconds,
            "partitions": p.tree.children.len(),
            "leaves": p.tree.leaves().len(),
            "exchanges": p.plan.exchange_count(),
            "max_deviation": deviation,
            "ok": deviation.map(|x| x < VERIFY_TOLERANCE),
        }));
    }
    let failed = rows.iter().any(|r| r["ok"] == json!(false));
    let text = match cfg.format {
        Format::Json => pretty(&serde_json::Value::Array(rows)),
        Format::Text => {
            let mut s = format!(
                "{:<10} {:>3} {:>6} {:<12} {:>10} {:>6} {:>6} {:>9} {:>10}\n",
                "family", "d", "gates", "hierarchy", "time(s)", "parts", "leaves", "exchanges", "deviation"
            );
            for r in &rows {
                let dev = r["max_deviation"]
                    .as_f64()
                    .map_or("-".to_string(), |x| format!("{x:.1e}"));
                let h: Vec<String> = r["hierarchy"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|x| x.to_string())
                    .collect();
                writeln!(
                    s,
                    "{:<10} {:>3} {:>6} {:<12} {:>10.4} {:>6} {:>6} {:>9} {:>10}",
                    cfg.family,
                    r["d"],
                    r["gates"],
                    h.join(","),
                    r["partition_seconds"].as_f64().unwrap(),
                    r["partitions"],
                    r["leaves"],
                    r["exchanges"],
                    dev
                )
                .unwrap();
            }
            s
        }
    };
    Ok(Output {
        text,
        code: if failed { EXIT_VERIFY } else { EXIT_OK },
    })
}

pub fn cmd_gen(cfg: &GenConfig) -> Result<Output, CliError> {
    Ok(Output::ok(circuits::generate(&cfg.family, cfg.qubits, cfg.seed)?))
}
