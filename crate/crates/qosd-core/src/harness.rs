//! Run orchestration: a uniform record format for solver and oracle
//! executions, plus a seeded benchmark grid that sweeps noise levels and
//! aggregates per-level statistics in parallel.

use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

use crate::error::Result;
use crate::estimator::Estimator;
use crate::instance::{Instance, Perturbation};
use crate::instancegen::{generate, GenSpec};
use crate::oracle::{brute_force_opt, constraint_generation_solve, RatioReport};
use crate::stressing::{pps, pps_i, SandwichReport, StressOptions, StressReport};

/// Solver or oracle selector shared by the CLI and the benchmark grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Pps,
    PpsI,
    OracleBrute,
    OracleCongen,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pps => "pps",
            Method::PpsI => "pps-i",
            Method::OracleBrute => "oracle-brute",
            Method::OracleCongen => "oracle-congen",
        }
    }

    pub fn parse(s: &str) -> Result<Method> {
        match s {
            "pps" => Ok(Method::Pps),
            "pps-i" => Ok(Method::PpsI),
            "oracle-brute" | "brute" => Ok(Method::OracleBrute),
            "oracle-congen" | "congen" => Ok(Method::OracleCongen),
            other => Err(crate::error::Error::Parse(format!(
                "unknown method '{other}' (expected pps, pps-i, oracle-brute, oracle-congen)"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Optional certificates attached to a run record.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sandwich: Option<SandwichReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<RatioReport>,
}

/// One solver/oracle execution, flattened for JSON-lines logging. Everything
/// except `wall_time_ms` is deterministic for a fixed instance and config.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub instance_id: String,
    pub method: String,
    pub estimator: String,
    pub seed: u64,
    pub total_budget: u64,
    /// Exact feasibility rate, recomputed with exact shortest paths no matter
    /// which estimator drove the run.
    pub feasibility_rate: f64,
    /// Exact residual slack (0 exactly when every pair meets the threshold).
    pub slack: f64,
    pub outer_rounds: u64,
    pub inner_steps: u64,
    pub estimator_queries: u64,
    pub wall_time_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_check: Option<BoundCheck>,
}

/// Everything needed to run one method on one instance.
#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub instance_id: String,
    pub method: Method,
    /// Used by `pps` only; the safeguard and the oracles are always exact.
    pub estimator: Estimator,
    /// Start vector (`None` means all zeros).
    pub x0: Option<Perturbation>,
    pub opts: StressOptions,
    /// Total-budget cap for the exhaustive oracle (`None` caps at the box sum).
    pub budget_cap: Option<u64>,
    /// Branch-and-bound node cap for the constraint-generation oracle.
    pub node_cap: Option<u64>,
    /// Free-form seed recorded for provenance (the estimator carries its own).
    pub seed: u64,
}

impl SolveConfig {
    pub fn new(instance_id: impl Into<String>, method: Method) -> Self {
        SolveConfig {
            instance_id: instance_id.into(),
            method,
            estimator: Estimator::exact(),
            x0: None,
            opts: StressOptions::default(),
            budget_cap: None,
            node_cap: None,
            seed: 0,
        }
    }
}

/// Run `cfg.method` on `inst` and return the record plus the solution vector.
pub fn solve_record(inst: &Instance, cfg: &SolveConfig) -> Result<(RunRecord, Perturbation)> {
    let x0 = cfg
        .x0
        .clone()
        .unwrap_or_else(|| Perturbation::zeros(inst.edge_count()));
    let start = Instant::now();
    let (x, estimator_desc, rounds, steps, queries) = match cfg.method {
        Method::Pps => {
            let mut est = cfg.estimator.clone();
            let desc = est.to_string();
            let rep: StressReport = pps(inst, &mut est, x0, &cfg.opts)?;
            (rep.solution, desc, rep.outer_rounds, rep.inner_steps, rep.estimator_queries)
        }
        Method::PpsI => {
            let rep = pps_i(inst, x0, &cfg.opts)?;
            (rep.solution, "exact".to_string(), rep.outer_rounds, rep.inner_steps, rep.estimator_queries)
        }
        Method::OracleBrute => {
            let cap = cfg.budget_cap.unwrap_or_else(|| inst.box_bounds.iter().sum());
            let sol = brute_force_opt(inst, cap)?;
            (sol.x_opt, "exact".to_string(), 0, sol.explored, 0)
        }
        Method::OracleCongen => {
            let sol = constraint_generation_solve(inst, cfg.node_cap)?;
            (sol.x_opt, "exact".to_string(), 0, sol.explored, 0)
        }
    };
    let wall_time_ms = start.elapsed().as_millis() as u64;
    let feas = inst.feasibility(&x)?;
    let slack = inst.slack(&x)?;
    let record = RunRecord {
        instance_id: cfg.instance_id.clone(),
        method: cfg.method.as_str().to_string(),
        estimator: estimator_desc,
        seed: cfg.seed,
        total_budget: x.total(),
        feasibility_rate: feas.rate,
        slack,
        outer_rounds: rounds,
        inner_steps: steps,
        estimator_queries: queries,
        wall_time_ms,
        bound_check: None,
    };
    Ok((record, x))
}

/// Benchmark sweep description. Each (noise level, seed index) cell generates
/// its own instance from `gen` with the seed offset by the index, runs the
/// greedy under that noise, then runs the exact safeguard from the greedy's
/// output to measure the cost of repairing noisy solutions.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub gen: GenSpec,
    pub etas: Vec<f64>,
    pub seeds_per_eta: u64,
    pub opts: StressOptions,
}

/// Aggregated statistics for one noise level.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub family: String,
    pub n: usize,
    pub pairs: usize,
    pub cost: String,
    pub eta: f64,
    pub seeds: u64,
    pub pps_feasibility_mean: f64,
    pub pps_budget_mean: f64,
    pub ppsi_feasibility_mean: f64,
    pub ppsi_budget_mean: f64,
    pub ppsi_fix_ms_mean: f64,
    /// Cells that errored (saturation, caps); excluded from the means.
    pub failures: u64,
}

#[derive(Debug)]
pub struct BenchOutcome {
    pub rows: Vec<BenchRow>,
    /// Every per-cell record in (eta, seed) order: greedy run, then safeguard.
    pub records: Vec<RunRecord>,
    /// Human-readable description of each failed cell.
    pub errors: Vec<String>,
}

struct BenchCell {
    pps: RunRecord,
    ppsi: RunRecord,
}

pub fn bench_grid(cfg: &BenchConfig) -> Result<BenchOutcome> {
    cfg.gen.validate()?;
    let tasks: Vec<(usize, u64)> = (0..cfg.etas.len())
        .flat_map(|ei| (0..cfg.seeds_per_eta).map(move |si| (ei, si)))
        .collect();
    let outcomes: Vec<std::result::Result<BenchCell, String>> = tasks
        .par_iter()
        .map(|&(ei, si)| run_cell(cfg, ei, si).map_err(|e| {
            format!("eta={} seed_index={si}: {e}", cfg.etas[ei])
        }))
        .collect();

    let mut rows = Vec::with_capacity(cfg.etas.len());
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (ei, &eta) in cfg.etas.iter().enumerate() {
        let cells = &outcomes[ei * cfg.seeds_per_eta as usize..(ei + 1) * cfg.seeds_per_eta as usize];
        let ok: Vec<&BenchCell> = cells.iter().filter_map(|c| c.as_ref().ok()).collect();
        let failures = cfg.seeds_per_eta - ok.len() as u64;
        errors.extend(cells.iter().filter_map(|c| c.as_ref().err().cloned()));
        let mean = |f: &dyn Fn(&BenchCell) -> f64| -> f64 {
            if ok.is_empty() {
                f64::NAN
            } else {
                ok.iter().map(|c| f(c)).sum::<f64>() / ok.len() as f64
            }
        };
        rows.push(BenchRow {
            family: cfg.gen.family.name().to_string(),
            n: cfg.gen.n,
            pairs: cfg.gen.pair_count,
            cost: cfg.gen.cost_kind.as_str().to_string(),
            eta,
            seeds: cfg.seeds_per_eta,
            pps_feasibility_mean: mean(&|c| c.pps.feasibility_rate),
            pps_budget_mean: mean(&|c| c.pps.total_budget as f64),
            ppsi_feasibility_mean: mean(&|c| c.ppsi.feasibility_rate),
            ppsi_budget_mean: mean(&|c| c.ppsi.total_budget as f64),
            ppsi_fix_ms_mean: mean(&|c| c.ppsi.wall_time_ms as f64),
            failures,
        });
        for cell in cells.iter().filter_map(|c| c.as_ref().ok()) {
            records.push(cell.pps.clone());
            records.push(cell.ppsi.clone());
        }
    }
    Ok(BenchOutcome { rows, records, errors })
}

fn run_cell(cfg: &BenchConfig, eta_index: usize, seed_index: u64) -> Result<BenchCell> {
    let eta = cfg.etas[eta_index];
    let gen_seed = cfg.gen.seed.wrapping_add(seed_index);
    let spec = GenSpec { seed: gen_seed, ..cfg.gen.clone() };
    let inst = generate(&spec)?;
    let instance_id = spec.id();

    // distinct noise stream per (instance, noise level)
    let noise_seed = gen_seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_add(eta_index as u64);
    let estimator = if eta == 0.0 { Estimator::exact() } else { Estimator::noisy(eta, noise_seed)? };

    let mut pps_cfg = SolveConfig::new(instance_id.clone(), Method::Pps);
    pps_cfg.estimator = estimator;
    pps_cfg.opts = cfg.opts.clone();
    pps_cfg.seed = gen_seed;
    let (pps_rec, x_pps) = solve_record(&inst, &pps_cfg)?;

    let mut fix_cfg = SolveConfig::new(instance_id, Method::PpsI);
    fix_cfg.x0 = Some(x_pps);
    fix_cfg.opts = cfg.opts.clone();
    fix_cfg.seed = gen_seed;
    let (ppsi_rec, _) = solve_record(&inst, &fix_cfg)?;

    Ok(BenchCell { pps: pps_rec, ppsi: ppsi_rec })
}
