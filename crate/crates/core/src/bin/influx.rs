use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use influx::immax::{filter_threshold, greedy_full, new_greedy};
use influx::metrics::{evaluate_seeds, jaccard, recall, EvalPool};
use influx::oracle::{exact_influence, exhaustive_optimal_seed, mc_influence, OracleBudget};
use influx::report::{run_im, run_topk, ImRun, RunOptions};
use influx::streamgen::{generate_stream, StreamSpec};
use influx::{graph, seeded_rng, synth, EpsDelta, Error, Graph, Model, SizingMode, UpdateEvent, VertexId};

/// Dynamic influence tracking on RR-set sketches.
#[derive(Parser)]
#[command(name = "influx", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a power-law graph file.
    GenGraph(GenGraphArgs),
    /// Split a graph into a base graph and an update stream.
    GenStream(GenStreamArgs),
    /// Track the top-k influential vertices over a stream.
    TrackTopk(TrackTopkArgs),
    /// Track influence-maximizing seed sets over a stream.
    TrackIm(TrackImArgs),
    /// Ground-truth influence.
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Influence of a seed set on an independent pool, or set metrics.
    Eval(EvalArgs),
    /// Time greedy_full against the filtered greedy on a synthetic pool.
    Bench(BenchArgs),
}

#[derive(Args)]
struct Output {
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenGraphArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    per_vertex: usize,
    #[arg(long, default_value = "LT")]
    model: Model,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct GenStreamArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    model: Model,
    /// Kept, churned and inserted edge shares.
    #[arg(long, default_value = "0.85,0.05,0.10", value_parser = parse_fractions)]
    fractions: (f64, f64, f64),
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output prefix: writes `<out>.base` and `<out>.stream`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Tracking {
    #[arg(long)]
    graph: PathBuf,
    /// Update stream (none means an empty stream).
    #[arg(long)]
    stream: Option<PathBuf>,
    /// Expected model; checked against the graph header.
    #[arg(long)]
    model: Option<Model>,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Append an aggregate record.
    #[arg(long)]
    summary: bool,
    /// Include wall-clock fields (makes output nondeterministic).
    #[arg(long)]
    timings: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct TrackTopkArgs {
    #[command(flatten)]
    common: Tracking,
    #[arg(long)]
    k: usize,
}

#[derive(Args)]
struct TrackImArgs {
    #[command(flatten)]
    common: Tracking,
    #[arg(long)]
    kmax: usize,
    #[arg(long, default_value = "practical")]
    mode: SizingMode,
    #[arg(long, default_value_t = 1000)]
    tau: usize,
}

#[derive(Args)]
struct OracleGraph {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 1 << 22)]
    max_configs: u64,
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Exact influence by live-edge enumeration.
    Exact {
        #[command(flatten)]
        g: OracleGraph,
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<VertexId>,
    },
    /// Monte-Carlo influence.
    Mc {
        #[command(flatten)]
        g: OracleGraph,
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<VertexId>,
        #[arg(long, default_value_t = 100_000)]
        iterations: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exhaustive optimal seed set.
    OptSeed {
        #[command(flatten)]
        g: OracleGraph,
        #[arg(long)]
        k: usize,
    },
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Replayed onto the graph before evaluating.
    #[arg(long)]
    stream: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<VertexId>,
    #[arg(long, default_value_t = 100_000)]
    pool_sets: usize,
    /// Size the pool by traversal cost instead of set count.
    #[arg(long)]
    pool_cost: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Compare two vertex sets instead.
    #[arg(long, value_delimiter = ',')]
    found: Vec<VertexId>,
    #[arg(long, value_delimiter = ',')]
    truth: Vec<VertexId>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 1_000_000)]
    n: usize,
    #[arg(long, default_value_t = 50_000)]
    sets: usize,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_fractions(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(format!("expected three comma-separated shares, got {}", parts.len())),
    }
}

fn read_graph(path: &Path) -> influx::Result<Graph> {
    Graph::parse(BufReader::new(File::open(path)?))
}

fn read_stream(path: Option<&Path>) -> influx::Result<Vec<UpdateEvent>> {
    match path {
        Some(p) => graph::parse_stream(BufReader::new(File::open(p)?)),
        None => Ok(Vec::new()),
    }
}

fn sink(out: &Output) -> influx::Result<Box<dyn Write>> {
    Ok(match &out.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit(out: &Output, value: serde_json::Value) -> influx::Result<()> {
    let mut w = sink(out)?;
    writeln!(w, "{value}")?;
    w.flush()?;
    Ok(())
}

fn assertions_on() -> bool {
    std::env::var("INFLUX_ASSERT").is_ok_and(|v| v == "1")
}

fn load_tracking(c: &Tracking) -> influx::Result<(Graph, Vec<UpdateEvent>, EpsDelta, RunOptions)> {
    let g = read_graph(&c.graph)?;
    if let Some(m) = c.model {
        if m != g.model() {
            return Err(Error::Domain(format!("graph declares {} but --model is {m}", g.model())));
        }
    }
    let events = read_stream(c.stream.as_deref())?;
    let cfg = EpsDelta::new(c.eps, c.delta)?;
    let opts = RunOptions { seed: c.seed, summary: c.summary, timings: c.timings, assertions: assertions_on() };
    Ok((g, events, cfg, opts))
}

fn run(cmd: Command) -> influx::Result<()> {
    match cmd {
        Command::GenGraph(a) => {
            let mut rng = seeded_rng(a.seed);
            let g = synth::power_law_graph(a.n, a.per_vertex, 0.8, a.model, &mut rng);
            let mut w = sink(&a.out)?;
            w.write_all(g.to_text().as_bytes())?;
            w.flush()?;
        }
        Command::GenStream(a) => {
            let input = read_graph(&a.graph)?;
            let spec = StreamSpec { fractions: a.fractions, seed: a.seed };
            let out = generate_stream(&input, a.model, &spec)?;
            let base = a.out.with_extension("base");
            let stream = a.out.with_extension("stream");
            std::fs::write(&base, out.base.to_text())?;
            std::fs::write(&stream, graph::stream_to_text(&out.events))?;
        }
        Command::TrackTopk(a) => {
            let (g, events, cfg, opts) = load_tracking(&a.common)?;
            let report = run_topk(g, &events, a.k, cfg, opts)?;
            report.write_jsonl(sink(&a.common.out)?)?;
        }
        Command::TrackIm(a) => {
            let (g, events, cfg, opts) = load_tracking(&a.common)?;
            let run = ImRun { k_max: a.kmax, mode: a.mode, tau: a.tau };
            let report = run_im(g, &events, run, cfg, opts)?;
            report.write_jsonl(sink(&a.common.out)?)?;
        }
        Command::Oracle(o) => oracle(o)?,
        Command::Eval(a) => eval(a)?,
        Command::Bench(a) => bench(a)?,
    }
    Ok(())
}

fn budget(g: &OracleGraph, iterations: u64) -> influx::Result<OracleBudget> {
    let b = OracleBudget { max_configs: g.max_configs, mc_iterations: iterations };
    b.validate()?;
    Ok(b)
}

fn oracle(cmd: OracleCmd) -> influx::Result<()> {
    let stdout = Output { out: None };
    match cmd {
        OracleCmd::Exact { g, seeds } => {
            let graph = read_graph(&g.graph)?;
            let value = exact_influence(&graph, &seeds, &budget(&g, 1)?)?;
            emit(&stdout, json!({ "seeds": seeds, "influence": value }))
        }
        OracleCmd::Mc { g, seeds, iterations, seed } => {
            let graph = read_graph(&g.graph)?;
            let est = mc_influence(&graph, &seeds, &budget(&g, iterations)?, &mut seeded_rng(seed))?;
            emit(&stdout, json!({ "seeds": seeds, "mean": est.mean, "std_error": est.std_error, "iterations": iterations }))
        }
        OracleCmd::OptSeed { g, k } => {
            let graph = read_graph(&g.graph)?;
            let (seeds, value) = exhaustive_optimal_seed(&graph, k, &budget(&g, 1)?)?;
            emit(&stdout, json!({ "k": k, "seeds": seeds, "influence": value }))
        }
    }
}

fn eval(a: EvalArgs) -> influx::Result<()> {
    let stdout = Output { out: None };
    if !a.found.is_empty() || !a.truth.is_empty() {
        return emit(
            &stdout,
            json!({ "jaccard": jaccard(&a.found, &a.truth), "recall": recall(&a.found, &a.truth)? }),
        );
    }
    let path = a.graph.ok_or_else(|| Error::Domain("eval needs --graph, or --found with --truth".into()))?;
    let mut g = read_graph(&path)?;
    for e in read_stream(a.stream.as_deref())? {
        g.apply_update(&e)?;
    }
    for &s in &a.seeds {
        if s as usize >= g.n() {
            return Err(Error::Vertex(s));
        }
    }
    let pool = match a.pool_cost {
        Some(c) => EvalPool::Cost(c),
        None => EvalPool::Sets(a.pool_sets),
    };
    let est = evaluate_seeds(&g, &a.seeds, pool, &mut seeded_rng(a.seed))?;
    emit(&stdout, json!({ "seeds": a.seeds, "estimate": est }))
}

fn bench(a: BenchArgs) -> influx::Result<()> {
    if a.n == 0 || a.sets == 0 || a.k == 0 {
        return Err(Error::Domain("bench needs positive --n, --sets and --k".into()));
    }
    let pool = synth::skewed_pool(a.n, a.sets, 8.0, 4.0, &mut seeded_rng(a.seed));
    let t0 = Instant::now();
    let full = greedy_full(&pool, a.k);
    let full_ns = t0.elapsed().as_nanos() as u64;
    let t0 = Instant::now();
    let t_d = filter_threshold(pool.index().max_degree(), a.k);
    let fast = new_greedy(&pool, a.k, t_d);
    let fast_ns = t0.elapsed().as_nanos() as u64;
    emit(
        &Output { out: None },
        json!({
            "n": a.n, "sets": a.sets, "k": a.k,
            "greedy_full_ns": full_ns, "new_greedy_ns": fast_ns,
            "speedup": full_ns as f64 / fast_ns.max(1) as f64,
            "coverage_full": full.coverage, "coverage_new": fast.coverage,
            "q": fast.q, "threshold": t_d,
        }),
    )
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) => 1,
        Error::Invariant(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("influx: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
