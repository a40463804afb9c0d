//! Release gate: every blocking behavior checked end to end, one printed
//! PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p qosd-core --test acceptance -- --nocapture` to see
//! the lines and timings.

use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use qosd_core::{
    bench_grid, brute_force_opt, constraint_generation_solve, generate, pps, pps_i, ratio_bound,
    reward_gradient_fixed_paths, sandwich_check, solve_record, BenchConfig, CostKind, Estimator,
    GenSpec, GraphFamily, Instance, Method, Perturbation, RewardParams, SlopeSpec, SolveConfig,
    StressOptions, UpperCheck, WeightDist,
};
use qosd_core::reward::reward_fixed_paths;
use qosd_core::stressing::{PathEntry, PathSet};

fn verdict(name: &str, pass: bool, detail: String, started: Instant) {
    let state = if pass { "PASS" } else { "FAIL" };
    println!("{state}: {name} — {detail} ({:.1}s)", started.elapsed().as_secs_f64());
}

// ---------------------------------------------------------------------------
// Shared safeguard grid (used by the feasibility and certificate criteria)
// ---------------------------------------------------------------------------

const ALL_KINDS: [CostKind; 3] =
    [CostKind::Linear, CostKind::QuadraticConvex, CostKind::LogConcave];

#[derive(Debug, Clone)]
struct GridRun {
    label: String,
    kind: CostKind,
    rate: f64,
    /// Slack-sum lower certificate (bounded-gain families only).
    lower_ok: Option<bool>,
    upper: Option<UpperCheck>,
    error: Option<String>,
}

fn grid_spec(family_idx: usize, n: usize, pairs: usize, kind: CostKind, seed: u64) -> GenSpec {
    let family = match family_idx {
        0 => GraphFamily::ErdosRenyi { p: (8.0 / n as f64).min(1.0) },
        1 => GraphFamily::BarabasiAlbert { m_attach: 3 },
        _ => GraphFamily::WattsStrogatz { k: 6, beta: 0.2 },
    };
    GenSpec {
        family,
        n,
        weight_dist: WeightDist::Unit,
        pair_count: pairs,
        threshold_pct: 1.5,
        cost_kind: kind,
        slope: SlopeSpec::Auto,
        seed,
    }
}

/// Deterministic retry over seed offsets for the rare draw whose pairs
/// cannot be sampled.
fn gen_with_retry(spec: &GenSpec) -> Result<Instance, String> {
    let mut last = String::new();
    for offset in [0u64, 7919, 15838] {
        match generate(&GenSpec { seed: spec.seed + offset, ..spec.clone() }) {
            Ok(inst) => return Ok(inst),
            Err(e) => last = e.to_string(),
        }
    }
    Err(last)
}

fn run_grid_instance(spec: &GenSpec) -> Vec<GridRun> {
    let label_base = spec.id();
    let fail = |start: &str, msg: String| GridRun {
        label: format!("{label_base}/{start}"),
        kind: spec.cost_kind,
        rate: 0.0,
        lower_ok: None,
        upper: None,
        error: Some(msg),
    };
    let inst = match gen_with_retry(spec) {
        Ok(i) => i,
        Err(e) => return vec![fail("gen", e)],
    };
    let opts = StressOptions::default();
    let zero = Perturbation::zeros(inst.edge_count());

    let mut runs = Vec::with_capacity(4);
    let mut starts: Vec<(String, Perturbation)> = vec![("zero".into(), zero.clone())];
    for (i, &eta) in [0.05f64, 0.10, 0.30].iter().enumerate() {
        let noise_seed = spec.seed.wrapping_mul(31).wrapping_add(i as u64);
        let mut est = Estimator::noisy(eta, noise_seed).expect("eta in range");
        match pps(&inst, &mut est, zero.clone(), &opts) {
            Ok(rep) => starts.push((format!("noisy-pps:{eta}"), rep.solution)),
            Err(e) => runs.push(fail(&format!("noisy-pps:{eta}"), e.to_string())),
        }
    }
    for (start, x0) in starts {
        match pps_i(&inst, x0.clone(), &opts) {
            Ok(rep) => {
                let bounded = spec.cost_kind != CostKind::LogConcave;
                let sw = if bounded {
                    Some(
                        sandwich_check(&inst, &x0, &rep.solution, rep.path_slack)
                            .expect("vectors are in-box and ordered"),
                    )
                } else {
                    None
                };
                runs.push(GridRun {
                    label: format!("{label_base}/{start}"),
                    kind: spec.cost_kind,
                    rate: rep.feasibility_rate,
                    lower_ok: sw.as_ref().map(|s| s.lower_ok),
                    upper: sw.as_ref().map(|s| s.upper),
                    error: None,
                });
            }
            Err(e) => runs.push(fail(&start, e.to_string())),
        }
    }
    runs
}

fn safeguard_grid() -> &'static Vec<GridRun> {
    static GRID: OnceLock<Vec<GridRun>> = OnceLock::new();
    GRID.get_or_init(|| {
        let mut combos = Vec::new();
        for family_idx in 0..3 {
            for &n in &[16usize, 32, 64] {
                for &pairs in &[3usize, 10] {
                    for &kind in &ALL_KINDS {
                        combos.push((family_idx, n, pairs, kind));
                    }
                }
            }
        }
        let specs: Vec<GenSpec> = (0..200)
            .map(|i| {
                let (f, n, p, kind) = combos[i % combos.len()];
                grid_spec(f, n, p, kind, 1000 + i as u64)
            })
            .collect();
        specs.par_iter().flat_map(run_grid_instance).collect()
    })
}

/// Safeguard feasibility: every safeguard run over the instance grid — from
/// a zero start and from each noisy greedy start — ends exactly feasible.
#[test]
fn criterion_1_safeguard_always_restores_feasibility() {
    let started = Instant::now();
    let grid = safeguard_grid();
    let total = grid.len();
    let errors: Vec<&GridRun> = grid.iter().filter(|r| r.error.is_some()).collect();
    let infeasible: Vec<&GridRun> =
        grid.iter().filter(|r| r.error.is_none() && r.rate != 1.0).collect();
    let pass = total == 800 && errors.is_empty() && infeasible.is_empty();
    let detail = format!(
        "{}/{} safeguard runs exactly feasible, {} errors{}",
        total - errors.len() - infeasible.len(),
        total,
        errors.len(),
        errors
            .first()
            .map(|r| format!(" (first: {} -> {})", r.label, r.error.as_deref().unwrap_or("")))
            .unwrap_or_default(),
    );
    verdict("safeguard feasibility 1.0 on all 800 grid runs", pass, detail, started);
    assert!(pass, "safeguard failed to restore feasibility on some runs");
}

/// Approximation ratio: on exhaustively solvable linear instances, the
/// safeguard's budget stays within the logarithmic factor of the certified
/// optimum.
#[test]
fn criterion_2_ratio_bound_against_brute_force() {
    let started = Instant::now();
    let mut checked = 0u32;
    let mut held = 0u32;
    let mut first_fail = String::new();
    let mut seed = 5000u64;
    let tpcts = [1.3f64, 1.5, 1.7, 2.0];
    while checked < 100 {
        seed += 1;
        let spec = GenSpec {
            family: GraphFamily::ErdosRenyi { p: 0.6 },
            n: 4 + (seed % 3) as usize,
            weight_dist: WeightDist::Unit,
            pair_count: 1 + (seed % 2) as usize,
            threshold_pct: tpcts[(seed % 4) as usize],
            cost_kind: CostKind::Linear,
            slope: SlopeSpec::Fixed(1.0),
            seed,
        };
        let Ok(inst) = generate(&spec) else { continue };
        if inst.threshold > 4.0 {
            continue; // keep every box bound at 4 or less
        }
        let rep = pps_i(&inst, Perturbation::zeros(inst.edge_count()), &StressOptions::default())
            .expect("default-box linear instances are always solvable");
        let oracle = brute_force_opt(&inst, rep.total_budget)
            .expect("the safeguard budget caps a solvable search");
        let ratio = ratio_bound(&inst, rep.total_budget, &oracle).expect("certified oracle");
        checked += 1;
        if ratio.holds {
            held += 1;
        } else if first_fail.is_empty() {
            first_fail = format!(
                " (first miss: seed {seed}, algo {} vs bound {:.3} * opt {})",
                ratio.algo_cost, ratio.bound, ratio.opt_cost
            );
        }
    }
    let pass = held == 100;
    verdict(
        "greedy budget within the logarithmic ratio of brute-force optimum",
        pass,
        format!("{held}/100 instances within bound{first_fail}"),
        started,
    );
    assert!(pass);
}

/// Oracle equivalence: the constraint-generation solver certifies the same
/// optimal cost as exhaustive enumeration.
#[test]
fn criterion_3_oracles_agree_on_optimal_cost() {
    let started = Instant::now();
    let mut checked = 0u32;
    let mut agreed = 0u32;
    let mut first_fail = String::new();
    let mut seed = 9000u64;
    while checked < 50 {
        seed += 1;
        let spec = GenSpec {
            family: GraphFamily::ErdosRenyi { p: 0.55 },
            n: 4 + (seed % 3) as usize,
            weight_dist: WeightDist::Unit,
            pair_count: 1 + (seed % 2) as usize,
            threshold_pct: [1.3, 1.5][(seed % 2) as usize],
            cost_kind: CostKind::Linear,
            slope: SlopeSpec::Fixed(1.0),
            seed,
        };
        let Ok(inst) = generate(&spec) else { continue };
        if inst.threshold > 5.0 {
            continue; // keep the exhaustive search comfortably inside its guard
        }
        let rep = pps_i(&inst, Perturbation::zeros(inst.edge_count()), &StressOptions::default())
            .expect("solvable by construction");
        let brute = brute_force_opt(&inst, rep.total_budget).expect("within guard");
        let congen = constraint_generation_solve(&inst, None).expect("linear instance");
        checked += 1;
        if brute.opt_cost == congen.opt_cost && brute.certified && congen.certified {
            agreed += 1;
        } else if first_fail.is_empty() {
            first_fail = format!(
                " (first split: seed {seed}, brute {} vs congen {})",
                brute.opt_cost, congen.opt_cost
            );
        }
    }
    let pass = agreed == 50;
    verdict(
        "constraint generation matches exhaustive optimum",
        pass,
        format!("{agreed}/50 instances agree exactly{first_fail}"),
        started,
    );
    assert!(pass);
}

/// Budget certificates around every bounded-gain safeguard run: the slack-sum
/// lower bound and the path-sum upper bound.
#[test]
fn criterion_4_sandwich_certificates_on_bounded_gain_runs() {
    let started = Instant::now();
    let grid = safeguard_grid();
    let bounded: Vec<&GridRun> = grid
        .iter()
        .filter(|r| r.error.is_none() && r.kind != CostKind::LogConcave)
        .collect();
    let lower_held = bounded.iter().filter(|r| r.lower_ok == Some(true)).count();
    let upper_held = bounded.iter().filter(|r| r.upper == Some(UpperCheck::Holds)).count();
    let total = bounded.len();
    let first_lower_miss = bounded
        .iter()
        .find(|r| r.lower_ok == Some(false))
        .map(|r| format!(" (first lower miss: {})", r.label))
        .unwrap_or_default();
    let pass = lower_held == total && upper_held == total && total > 0;
    verdict(
        "slack-sum lower and path-sum upper budget certificates",
        pass,
        format!(
            "lower held {lower_held}/{total}, upper held {upper_held}/{total}{first_lower_miss}"
        ),
        started,
    );
    assert!(
        pass,
        "budget certificates violated: lower {lower_held}/{total}, upper {upper_held}/{total}"
    );
}

/// Noise trend: mean raw-greedy feasibility decays (weakly) as screening
/// noise grows, and the noisiest runs overspend relative to exact screening.
#[test]
fn criterion_5_noise_degrades_feasibility_and_inflates_cost() {
    let started = Instant::now();
    let cfg = BenchConfig {
        gen: GenSpec {
            family: GraphFamily::ErdosRenyi { p: 0.125 },
            n: 64,
            weight_dist: WeightDist::Unit,
            pair_count: 10,
            threshold_pct: 1.5,
            cost_kind: CostKind::Linear,
            slope: SlopeSpec::Auto,
            seed: 42,
        },
        etas: vec![0.0, 0.05, 0.10, 0.30],
        seeds_per_eta: 20,
        opts: StressOptions::default(),
    };
    let out = bench_grid(&cfg).expect("bench grid runs");
    let feas: Vec<f64> = out.rows.iter().map(|r| r.pps_feasibility_mean).collect();
    let cost: Vec<f64> = out.rows.iter().map(|r| r.pps_budget_mean).collect();
    let monotone = feas.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let exact_perfect = (feas[0] - 1.0).abs() < 1e-12;
    let cost_inflates = cost[3] > cost[0];
    let pass = monotone && exact_perfect && cost_inflates && out.errors.is_empty();
    verdict(
        "screening noise lowers feasibility and raises spend",
        pass,
        format!(
            "mean feasibility {:?} over noise {:?}; mean budget {:.1} -> {:.1}",
            feas.iter().map(|f| (f * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            cfg.etas,
            cost[0],
            cost[3]
        ),
        started,
    );
    assert!(pass);
}

/// The analytic surrogate gradient matches central finite differences across
/// all cost families.
#[test]
fn criterion_6_analytic_gradient_matches_finite_differences() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let mut max_rel = 0.0f64;
    let mut draws = 0u32;
    let params = RewardParams::default();
    let h = 1e-5;
    while draws < 100 {
        let kind = ALL_KINDS[(draws % 3) as usize];
        let spec = GenSpec {
            family: GraphFamily::ErdosRenyi { p: 0.5 },
            n: 6 + (draws % 5) as usize,
            weight_dist: WeightDist::Unit,
            pair_count: 2,
            threshold_pct: 1.6,
            cost_kind: kind,
            slope: SlopeSpec::Auto,
            seed: 900 + draws as u64,
        };
        let Ok(inst) = generate(&spec) else { continue };
        draws += 1;
        let zero = Perturbation::zeros(inst.edge_count());
        let entries: Vec<PathEntry> = inst
            .pairs
            .iter()
            .map(|&(s, t)| {
                let (c, edges) = inst.pair_shortest_path(&zero, s, t).unwrap();
                PathEntry { pair: (s, t), edges, cached_cost: c }
            })
            .collect();
        let paths = PathSet::new(entries);
        let x_hat: Vec<f64> = inst
            .box_bounds
            .iter()
            .map(|&b| rng.gen_range(-0.8..(b as f64 + 1.5)))
            .collect();
        let grad = reward_gradient_fixed_paths(&inst, &paths, &x_hat, &params);
        for j in 0..x_hat.len() {
            let mut plus = x_hat.clone();
            let mut minus = x_hat.clone();
            plus[j] += h;
            minus[j] -= h;
            let fd = (reward_fixed_paths(&inst, &paths, &plus, &params)
                - reward_fixed_paths(&inst, &paths, &minus, &params))
                / (2.0 * h);
            let scale = grad[j].abs().max(fd.abs());
            if scale > 1e-6 {
                max_rel = max_rel.max((grad[j] - fd).abs() / scale);
            } else {
                assert!((grad[j] - fd).abs() < 1e-9, "tiny component diverged");
            }
        }
    }
    let pass = max_rel < 1e-5;
    verdict(
        "surrogate gradient vs central differences",
        pass,
        format!("max relative error {max_rel:.2e} over 100 draws, all families"),
        started,
    );
    assert!(pass);
}

/// Monotonicity battery: shortest paths under budget growth, the bounded
/// non-decreasing potential along greedy trajectories, and the slack /
/// feasibility equivalence.
#[test]
fn criterion_7_monotonicity_suite() {
    let started = Instant::now();
    let inst = generate(&grid_spec(0, 16, 3, CostKind::Linear, 4242)).expect("grid instance");
    let mut rng = ChaCha8Rng::seed_from_u64(31337);
    let mut sp_monotone = true;
    let mut slack_iff = true;
    for _ in 0..1000 {
        let mut lo = Vec::with_capacity(inst.edge_count());
        let mut hi = Vec::with_capacity(inst.edge_count());
        for &b in &inst.box_bounds {
            let a = rng.gen_range(0..=b);
            lo.push(a);
            hi.push(a + rng.gen_range(0..=(b - a)));
        }
        let lo = Perturbation { budgets: lo };
        let hi = Perturbation { budgets: hi };
        for &(s, t) in &inst.pairs {
            let (c_lo, _) = inst.pair_shortest_path(&lo, s, t).unwrap();
            let (c_hi, _) = inst.pair_shortest_path(&hi, s, t).unwrap();
            if c_hi < c_lo - 1e-9 {
                sp_monotone = false;
            }
        }
        for x in [&lo, &hi] {
            let slack = inst.slack(x).unwrap();
            let rate = inst.feasibility(x).unwrap().rate;
            if (slack == 0.0) != (rate == 1.0) {
                slack_iff = false;
            }
        }
    }

    let mut potential_ok = true;
    for seed in 0..20u64 {
        let pinst = generate(&grid_spec((seed % 3) as usize, 16, 3, CostKind::Linear, 7000 + seed))
            .expect("grid instance");
        let opts = StressOptions { trace: true, ..StressOptions::default() };
        let mut est = Estimator::exact();
        let rep = pps(&pinst, &mut est, Perturbation::zeros(pinst.edge_count()), &opts).unwrap();
        let ceiling = pinst.pairs.len() as f64 * pinst.threshold;
        let mut prev: Option<(u64, f64)> = None;
        for &(round, c) in &rep.potential_trace {
            if c > ceiling + 1e-9 {
                potential_ok = false;
            }
            if let Some((pr, pc)) = prev {
                if pr == round && c < pc - 1e-9 {
                    potential_ok = false;
                }
            }
            prev = Some((round, c));
        }
    }
    let pass = sp_monotone && slack_iff && potential_ok;
    verdict(
        "monotone shortest paths, bounded potential, slack/feasibility equivalence",
        pass,
        format!(
            "sp monotone: {sp_monotone}, potential bounded+monotone: {potential_ok}, slack iff feasible: {slack_iff}"
        ),
        started,
    );
    assert!(pass);
}

/// Determinism: repeated runs with fixed seeds produce byte-identical
/// records (wall time aside) for every method and estimator.
#[test]
fn criterion_8_records_replay_byte_identically() {
    let started = Instant::now();
    let small = |seed| GenSpec {
        family: GraphFamily::ErdosRenyi { p: 0.45 },
        n: 12,
        weight_dist: WeightDist::UniformInt { lo: 1, hi: 5 },
        pair_count: 3,
        threshold_pct: 1.5,
        cost_kind: CostKind::Linear,
        slope: SlopeSpec::Auto,
        seed,
    };
    let tiny = |seed| GenSpec {
        family: GraphFamily::ErdosRenyi { p: 0.6 },
        n: 5,
        weight_dist: WeightDist::Unit,
        pair_count: 1,
        threshold_pct: 1.4,
        cost_kind: CostKind::Linear,
        slope: SlopeSpec::Auto,
        seed,
    };

    let mut cases: Vec<(Instance, SolveConfig)> = Vec::new();
    for seed in 0..3u64 {
        let spec = small(100 + seed);
        let inst = generate(&spec).unwrap();
        for est in ["exact", "noisy:0.05:11", "noisy:0.1:12", "noisy:0.3:13"] {
            let mut cfg = SolveConfig::new(spec.id(), Method::Pps);
            cfg.estimator = Estimator::parse(est).unwrap();
            cfg.seed = seed;
            cases.push((inst.clone(), cfg));
        }
        let mut cfg = SolveConfig::new(spec.id(), Method::PpsI);
        cfg.seed = seed;
        cases.push((inst.clone(), cfg));
    }
    for seed in 0..3u64 {
        let spec = tiny(200 + seed);
        let inst = generate(&spec).unwrap();
        for method in [Method::OracleBrute, Method::OracleCongen] {
            let mut cfg = SolveConfig::new(spec.id(), method);
            cfg.seed = seed;
            cases.push((inst.clone(), cfg));
        }
    }
    assert!(cases.len() >= 20, "need at least 20 determinism cases");

    let mut identical = 0usize;
    let mut first_diff = String::new();
    for (inst, cfg) in &cases {
        let (mut a, xa) = solve_record(inst, cfg).expect("case solves");
        let (mut b, xb) = solve_record(inst, cfg).expect("case solves");
        a.wall_time_ms = 0;
        b.wall_time_ms = 0;
        let ja = serde_json::to_string(&a).unwrap();
        let jb = serde_json::to_string(&b).unwrap();
        if ja == jb && xa.budgets == xb.budgets {
            identical += 1;
        } else if first_diff.is_empty() {
            first_diff = format!(" (first divergence: {} {})", cfg.instance_id, a.method);
        }
    }
    let pass = identical == cases.len();
    verdict(
        "repeated runs replay byte-identically modulo wall time",
        pass,
        format!("{identical}/{} cases identical{first_diff}", cases.len()),
        started,
    );
    assert!(pass);
}
