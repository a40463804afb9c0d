//! Command-line driver: generate instances, run solvers and oracles, score
//! relaxed proposals, verify certificates, and sweep benchmark grids.
//!
//! Machine-readable throughout: one JSON line per record on stdout, CSV for
//! benchmark tables, structured `{"error": ...}` JSON on stderr with a
//! non-zero exit code.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use qosd_core::{
    bench_grid, brute_force_opt, constraint_generation_solve, generate, load_budget_vector,
    load_real_vector, pps_i, ratio_bound, reward, sandwich_check, solve_record, BenchConfig,
    BoundCheck, CostKind, Error, Estimator, GenSpec, GraphFamily, Instance, Method, Perturbation,
    RewardParams, SlopeSpec, SolveConfig, StressOptions, UpperCheck, WeightDist,
};

#[derive(Parser)]
#[command(
    name = "qosd",
    version,
    about = "Budget-minimal edge perturbation against latency thresholds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance and write it with its edge-list sidecar.
    Gen(GenArgs),
    /// Run a solver or oracle on an instance and emit one run record.
    Solve(SolveArgs),
    /// Score a real-valued budget proposal against an instance.
    Score(ScoreArgs),
    /// Compute a certified optimal perturbation on a small instance.
    Oracle(OracleArgs),
    /// Run the exact safeguard and check its budget and ratio certificates.
    Verify(VerifyArgs),
    /// Sweep noise levels over seeded instances and tabulate the results.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Graph family: er, ba, or ws.
    #[arg(long)]
    family: String,
    /// Node count.
    #[arg(long)]
    n: usize,
    /// Arc probability (er only).
    #[arg(long)]
    p: Option<f64>,
    /// Attachment count per new node (ba only).
    #[arg(long)]
    m: Option<usize>,
    /// Ring degree, even (ws only).
    #[arg(long)]
    k: Option<usize>,
    /// Rewiring probability (ws only).
    #[arg(long, default_value_t = 0.2)]
    beta: f64,
    /// Number of critical pairs to sample.
    #[arg(long)]
    pairs: usize,
    /// Threshold as a multiple of the largest baseline shortest path.
    #[arg(long)]
    tpct: f64,
    /// Base weights: "unit" or "uniform:LO:HI".
    #[arg(long, default_value = "unit")]
    weights: String,
    /// Cost family: linear, quadratic_convex (quad), log_concave (log).
    #[arg(long, default_value = "linear")]
    cost: String,
    /// Cost slope: "auto" or a positive number.
    #[arg(long, default_value = "auto")]
    slope: String,
    /// Generator seed (defaults to $QOSD_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Output instance path (the edge list lands next to it as .edges).
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    /// pps, pps-i, oracle-brute, or oracle-congen.
    #[arg(long, default_value = "pps-i")]
    method: String,
    /// "exact" or "noisy:ETA:SEED" (pps only).
    #[arg(long, default_value = "exact")]
    estimator: String,
    /// Override the instance's potential tolerance.
    #[arg(long)]
    epsilon_bar: Option<f64>,
    /// Abort after this many greedy increments.
    #[arg(long)]
    step_cap: Option<u64>,
    /// Cap each greedy increment's size.
    #[arg(long)]
    delta_cap: Option<u64>,
    /// Start vector file (JSON array of integers); zeros when omitted.
    #[arg(long)]
    x0: Option<PathBuf>,
    /// Total-budget cap for oracle-brute.
    #[arg(long)]
    budget_cap: Option<u64>,
    /// Search-node cap for oracle-congen.
    #[arg(long)]
    node_cap: Option<u64>,
    /// Write the solution vector (JSON array) here.
    #[arg(long)]
    save_x: Option<PathBuf>,
    /// Record id (defaults to the instance file stem).
    #[arg(long)]
    id: Option<String>,
    /// Seed recorded for provenance (defaults to $QOSD_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ScoreArgs {
    instance: PathBuf,
    /// Real-valued proposal (JSON array, one entry per edge).
    x_hat: PathBuf,
    #[arg(long, default_value_t = 5.0)]
    zeta: f64,
    #[arg(long, default_value_t = 0.05)]
    kappa: f64,
    /// "exact" or "noisy:ETA:SEED".
    #[arg(long, default_value = "exact")]
    estimator: String,
}

#[derive(Args)]
struct OracleArgs {
    instance: PathBuf,
    /// brute or congen.
    #[arg(long, default_value = "brute")]
    method: String,
    /// Total-budget cap (brute; defaults to the box sum).
    #[arg(long)]
    budget_cap: Option<u64>,
    /// Search-node cap (congen).
    #[arg(long)]
    node_cap: Option<u64>,
    /// Write the optimal vector (JSON array) here.
    #[arg(long)]
    save_x: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    instance: PathBuf,
    /// Start vector file; zeros when omitted.
    #[arg(long)]
    x0: Option<PathBuf>,
    /// Budget cap for the ratio oracle (defaults to the safeguard's budget).
    #[arg(long)]
    budget_cap: Option<u64>,
    /// Record id (defaults to the instance file stem).
    #[arg(long)]
    id: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    /// Graph family: er, ba, or ws.
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0.2)]
    beta: f64,
    #[arg(long)]
    pairs: usize,
    #[arg(long)]
    tpct: f64,
    #[arg(long, default_value = "unit")]
    weights: String,
    #[arg(long, default_value = "linear")]
    cost: String,
    #[arg(long, default_value = "auto")]
    slope: String,
    /// Comma-separated noise levels, e.g. 0,0.05,0.1,0.3.
    #[arg(long, default_value = "0,0.05,0.1,0.3")]
    etas: String,
    /// Seeds per noise level.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    /// Base seed (defaults to $QOSD_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path (stdout when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also append every per-run record to this JSON-lines file.
    #[arg(long)]
    records: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Score(args) => cmd_score(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let payload = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}

// ---------------------------------------------------------------------------
// flag parsing helpers
// ---------------------------------------------------------------------------

fn env_seed() -> u64 {
    std::env::var("QOSD_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(0)
}

fn parse_family(
    family: &str,
    p: Option<f64>,
    m: Option<usize>,
    k: Option<usize>,
    beta: f64,
) -> Result<GraphFamily, Error> {
    match family {
        "er" => {
            let p = p.ok_or_else(|| Error::Parse("--family er requires --p".into()))?;
            Ok(GraphFamily::ErdosRenyi { p })
        }
        "ba" => {
            let m = m.ok_or_else(|| Error::Parse("--family ba requires --m".into()))?;
            Ok(GraphFamily::BarabasiAlbert { m_attach: m })
        }
        "ws" => {
            let k = k.ok_or_else(|| Error::Parse("--family ws requires --k".into()))?;
            Ok(GraphFamily::WattsStrogatz { k, beta })
        }
        other => Err(Error::Parse(format!("unknown family '{other}' (expected er, ba, ws)"))),
    }
}

fn parse_weights(spec: &str) -> Result<WeightDist, Error> {
    if spec == "unit" {
        return Ok(WeightDist::Unit);
    }
    if let Some(range) = spec.strip_prefix("uniform:") {
        let mut parts = range.split(':');
        let lo = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad weight range '{spec}'")))?;
        let hi = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad weight range '{spec}'")))?;
        if parts.next().is_some() {
            return Err(Error::Parse(format!("bad weight range '{spec}'")));
        }
        return Ok(WeightDist::UniformInt { lo, hi });
    }
    Err(Error::Parse(format!("unknown weights '{spec}' (expected unit or uniform:LO:HI)")))
}

fn parse_cost(spec: &str) -> Result<CostKind, Error> {
    match spec {
        "linear" => Ok(CostKind::Linear),
        "quadratic_convex" | "quad" => Ok(CostKind::QuadraticConvex),
        "log_concave" | "log" => Ok(CostKind::LogConcave),
        other => Err(Error::Parse(format!(
            "unknown cost family '{other}' (expected linear, quadratic_convex, log_concave)"
        ))),
    }
}

fn parse_slope(spec: &str) -> Result<SlopeSpec, Error> {
    if spec == "auto" {
        return Ok(SlopeSpec::Auto);
    }
    spec.parse()
        .map(SlopeSpec::Fixed)
        .map_err(|_| Error::Parse(format!("bad slope '{spec}' (expected auto or a number)")))
}

fn parse_etas(spec: &str) -> Result<Vec<f64>, Error> {
    spec.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad noise level '{tok}'")))
        })
        .collect()
}

fn instance_id(explicit: Option<String>, path: &Path) -> String {
    explicit.unwrap_or_else(|| {
        path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "instance".into())
    })
}

fn load_start(inst: &Instance, x0: &Option<PathBuf>) -> Result<Perturbation, Error> {
    match x0 {
        Some(path) => {
            let x = load_budget_vector(path)?;
            inst.check_within_box(&x)?;
            Ok(x)
        }
        None => Ok(Perturbation::zeros(inst.edge_count())),
    }
}

fn save_budgets(path: &Path, x: &Perturbation) -> Result<(), Error> {
    std::fs::write(path, serde_json::to_string(&x.budgets)? + "\n")?;
    Ok(())
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

fn cmd_gen(args: GenArgs) -> Result<ExitCode, Error> {
    let spec = GenSpec {
        family: parse_family(&args.family, args.p, args.m, args.k, args.beta)?,
        n: args.n,
        weight_dist: parse_weights(&args.weights)?,
        pair_count: args.pairs,
        threshold_pct: args.tpct,
        cost_kind: parse_cost(&args.cost)?,
        slope: parse_slope(&args.slope)?,
        seed: args.seed.unwrap_or_else(env_seed),
    };
    let inst = generate(&spec)?;
    let sidecar = inst.save(&args.output)?;
    let line = json!({
        "id": spec.id(),
        "instance": args.output,
        "graph": sidecar,
        "nodes": inst.graph.node_count(),
        "edges": inst.edge_count(),
        "pairs": inst.pairs.len(),
        "threshold": inst.threshold,
    });
    println!("{line}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode, Error> {
    let inst = Instance::load(&args.instance)?;
    let method = Method::parse(&args.method)?;
    let mut cfg = SolveConfig::new(instance_id(args.id, &args.instance), method);
    cfg.estimator = Estimator::parse(&args.estimator)?;
    cfg.x0 = Some(load_start(&inst, &args.x0)?);
    cfg.opts = StressOptions {
        epsilon_bar: args.epsilon_bar,
        step_cap: args.step_cap.unwrap_or_else(|| StressOptions::default().step_cap),
        delta_cap: args.delta_cap,
        trace: false,
    };
    cfg.budget_cap = args.budget_cap;
    cfg.node_cap = args.node_cap;
    cfg.seed = args.seed.unwrap_or_else(env_seed);

    let (record, x) = solve_record(&inst, &cfg)?;
    if let Some(path) = &args.save_x {
        save_budgets(path, &x)?;
    }
    println!("{}", serde_json::to_string(&record)?);
    // Raw greedy output is an intermediate: report success and record the
    // rate. Every other method must land feasible.
    let ok = method == Method::Pps || record.feasibility_rate == 1.0;
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_score(args: ScoreArgs) -> Result<ExitCode, Error> {
    let inst = Instance::load(&args.instance)?;
    let x_hat = load_real_vector(&args.x_hat)?;
    if x_hat.len() != inst.edge_count() {
        return Err(Error::InvalidInstance(format!(
            "proposal has {} entries for {} edges",
            x_hat.len(),
            inst.edge_count()
        )));
    }
    let mut est = Estimator::parse(&args.estimator)?;
    let params = RewardParams { zeta: args.zeta, kappa: args.kappa };
    let value = reward(&inst, &mut est, &x_hat, &params)?;
    println!("{}", serde_json::to_string(&value)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(args: OracleArgs) -> Result<ExitCode, Error> {
    let inst = Instance::load(&args.instance)?;
    let started = Instant::now();
    let (name, sol) = match args.method.as_str() {
        "brute" => {
            let cap = args.budget_cap.unwrap_or_else(|| inst.box_bounds.iter().sum());
            ("brute", brute_force_opt(&inst, cap)?)
        }
        "congen" => ("congen", constraint_generation_solve(&inst, args.node_cap)?),
        other => {
            return Err(Error::Parse(format!(
                "unknown oracle '{other}' (expected brute or congen)"
            )))
        }
    };
    if let Some(path) = &args.save_x {
        save_budgets(path, &sol.x_opt)?;
    }
    let line = json!({
        "method": name,
        "opt_cost": sol.opt_cost,
        "x_opt": sol.x_opt.budgets,
        "explored": sol.explored,
        "certified": sol.certified,
        "wall_time_ms": started.elapsed().as_millis() as u64,
    });
    println!("{line}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, Error> {
    let inst = Instance::load(&args.instance)?;
    let x0 = load_start(&inst, &args.x0)?;

    let mut cfg = SolveConfig::new(instance_id(args.id, &args.instance), Method::PpsI);
    cfg.x0 = Some(x0.clone());
    let (mut record, _) = solve_record(&inst, &cfg)?;

    // The run record does not carry the trajectory's path slack, so rerun the
    // safeguard pass directly for the certificate inputs.
    let rep = pps_i(&inst, x0.clone(), &cfg.opts)?;
    let sandwich = sandwich_check(&inst, &x0, &rep.solution, rep.path_slack)?;

    let (ratio, skipped) = {
        let cap = args.budget_cap.unwrap_or(record.total_budget);
        match brute_force_opt(&inst, cap) {
            Ok(oracle) => (Some(ratio_bound(&inst, record.total_budget, &oracle)?), None),
            Err(Error::TooLarge(msg)) => (None, Some(format!("ratio oracle skipped: {msg}"))),
            Err(e) => return Err(e),
        }
    };

    let lower_ok = sandwich.lower_ok;
    let upper_ok = sandwich.upper != UpperCheck::Violated;
    let ratio_ok = ratio.as_ref().map_or(true, |r| r.holds);
    let feasible = record.feasibility_rate == 1.0;
    record.bound_check = Some(BoundCheck { sandwich: Some(sandwich), ratio });

    let line = json!({
        "record": &record,
        "feasible": feasible,
        "skipped": skipped,
    });
    println!("{line}");
    let ok = feasible && lower_ok && upper_ok && ratio_ok;
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode, Error> {
    let gen = GenSpec {
        family: parse_family(&args.family, args.p, args.m, args.k, args.beta)?,
        n: args.n,
        weight_dist: parse_weights(&args.weights)?,
        pair_count: args.pairs,
        threshold_pct: args.tpct,
        cost_kind: parse_cost(&args.cost)?,
        slope: parse_slope(&args.slope)?,
        seed: args.seed.unwrap_or_else(env_seed),
    };
    let cfg = BenchConfig {
        gen,
        etas: parse_etas(&args.etas)?,
        seeds_per_eta: args.seeds,
        opts: StressOptions::default(),
    };
    let out = bench_grid(&cfg)?;

    let mut writer: csv::Writer<Box<dyn std::io::Write>> = match &args.output {
        Some(path) => csv::Writer::from_writer(Box::new(std::fs::File::create(path)?)),
        None => csv::Writer::from_writer(Box::new(std::io::stdout())),
    };
    for row in &out.rows {
        writer.serialize(row).map_err(|e| Error::Parse(format!("csv write failed: {e}")))?;
        writer.flush()?;
    }
    drop(writer);

    if let Some(path) = &args.records {
        let mut lines = String::new();
        for rec in &out.records {
            lines.push_str(&serde_json::to_string(rec)?);
            lines.push('\n');
        }
        std::fs::write(path, lines)?;
    }
    for err in &out.errors {
        eprintln!("{}", json!({ "bench_failure": err }));
    }
    Ok(if out.errors.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
