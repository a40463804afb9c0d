//! Seeded random-instance generation: classic graph families, weight
//! sampling, pair sampling, and threshold calibration relative to baseline
//! shortest paths.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::cost::{CostFamily, CostKind};
use crate::error::{Error, Result};
use crate::graph::WeightedDigraph;
use crate::instance::{Instance, Perturbation, DEFAULT_EPSILON_BAR};

/// Random graph family with its structural parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GraphFamily {
    /// Every ordered pair (u, v), u != v, gets an arc independently with
    /// probability `p`.
    ErdosRenyi { p: f64 },
    /// Preferential attachment: a complete seed clique on `m_attach + 1`
    /// nodes, then each new node attaches to `m_attach` distinct existing
    /// nodes with probability proportional to degree. Undirected; every
    /// undirected edge becomes two arcs of equal weight.
    BarabasiAlbert { m_attach: usize },
    /// Ring lattice with `k` neighbours per node (k/2 each side) where each
    /// lattice edge is rewired with probability `beta`. Undirected; every
    /// undirected edge becomes two arcs of equal weight.
    WattsStrogatz { k: usize, beta: f64 },
}

impl GraphFamily {
    pub fn name(&self) -> &'static str {
        match self {
            GraphFamily::ErdosRenyi { .. } => "er",
            GraphFamily::BarabasiAlbert { .. } => "ba",
            GraphFamily::WattsStrogatz { .. } => "ws",
        }
    }
}

/// Base-weight sampling rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum WeightDist {
    /// Every edge has weight 1.
    Unit,
    /// Integer weights drawn uniformly from `lo..=hi`.
    UniformInt { lo: u64, hi: u64 },
}

/// Cost-family slope selection for generated instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeSpec {
    /// Linear and quadratic families get slope 1. The log-concave family gets
    /// `T / ln(1 + box)` so a single box-saturated edge already adds `T`,
    /// which keeps the default box sufficient for feasibility.
    Auto,
    Fixed(f64),
}

/// Full description of a generated instance; equal specs generate
/// byte-identical instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub family: GraphFamily,
    pub n: usize,
    pub weight_dist: WeightDist,
    pub pair_count: usize,
    /// Threshold as a multiple (>= 1) of the largest baseline shortest path
    /// among the sampled pairs; the product is rounded to the nearest integer.
    pub threshold_pct: f64,
    pub cost_kind: CostKind,
    pub slope: SlopeSpec,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidInstance(format!(
                "need at least 2 nodes, got {}",
                self.n
            )));
        }
        if self.pair_count == 0 {
            return Err(Error::InvalidInstance("pair_count must be positive".into()));
        }
        if !(self.threshold_pct >= 1.0) || !self.threshold_pct.is_finite() {
            return Err(Error::InvalidInstance(format!(
                "threshold_pct must be >= 1, got {}",
                self.threshold_pct
            )));
        }
        match self.family {
            GraphFamily::ErdosRenyi { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidInstance(format!(
                        "edge probability must lie in [0, 1], got {p}"
                    )));
                }
            }
            GraphFamily::BarabasiAlbert { m_attach } => {
                if m_attach == 0 || m_attach + 1 > self.n {
                    return Err(Error::InvalidInstance(format!(
                        "attachment count {m_attach} needs 1 <= m_attach <= n - 1 = {}",
                        self.n - 1
                    )));
                }
            }
            GraphFamily::WattsStrogatz { k, beta } => {
                if k == 0 || k % 2 != 0 || k >= self.n {
                    return Err(Error::InvalidInstance(format!(
                        "ring degree k={k} must be even and 0 < k < n = {}",
                        self.n
                    )));
                }
                if !(0.0..=1.0).contains(&beta) {
                    return Err(Error::InvalidInstance(format!(
                        "rewiring probability must lie in [0, 1], got {beta}"
                    )));
                }
            }
        }
        match self.weight_dist {
            WeightDist::Unit => {}
            WeightDist::UniformInt { lo, hi } => {
                if lo == 0 || lo > hi {
                    return Err(Error::InvalidInstance(format!(
                        "weight range [{lo}, {hi}] must satisfy 1 <= lo <= hi"
                    )));
                }
            }
        }
        if let SlopeSpec::Fixed(s) = self.slope {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidInstance(format!(
                    "fixed slope must be positive and finite, got {s}"
                )));
            }
        }
        Ok(())
    }

    /// Short identifier used to label runs derived from this spec.
    pub fn id(&self) -> String {
        let fam = match self.family {
            GraphFamily::ErdosRenyi { p } => format!("er-p{p}"),
            GraphFamily::BarabasiAlbert { m_attach } => format!("ba-m{m_attach}"),
            GraphFamily::WattsStrogatz { k, beta } => format!("ws-k{k}-b{beta}"),
        };
        format!(
            "{fam}-n{}-k{}-t{}-{}-s{}",
            self.n,
            self.pair_count,
            self.threshold_pct,
            self.cost_kind.as_str(),
            self.seed
        )
    }
}

/// Threshold calibration rule: nearest integer to `pct * max_sp`, at least 1.
pub fn calibrated_threshold(max_baseline_sp: f64, pct: f64) -> f64 {
    (pct * max_baseline_sp).round().max(1.0)
}

/// Generate the instance described by `spec`. The same spec always produces
/// the same instance, independent of platform.
pub fn generate(spec: &GenSpec) -> Result<Instance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let edge_list = match spec.family {
        GraphFamily::ErdosRenyi { p } => erdos_renyi(spec.n, p, &spec.weight_dist, &mut rng),
        GraphFamily::BarabasiAlbert { m_attach } => {
            undirect(barabasi_albert(spec.n, m_attach, &mut rng), &spec.weight_dist, &mut rng)
        }
        GraphFamily::WattsStrogatz { k, beta } => {
            undirect(watts_strogatz(spec.n, k, beta, &mut rng), &spec.weight_dist, &mut rng)
        }
    };
    if edge_list.is_empty() {
        return Err(Error::InvalidInstance(
            "generated graph has no edges; raise the density parameter".into(),
        ));
    }
    let graph = WeightedDigraph::new(spec.n, edge_list)?;

    let pairs = sample_pairs(&graph, spec.pair_count, &mut rng)?;

    let cost_probe = CostFamily::linear();
    let zero = Perturbation::zeros(graph.edge_count());
    let mut max_sp = 0.0f64;
    for &(s, t) in &pairs {
        let (c, _) = graph.shortest_path(&cost_probe, &zero.budgets, s, t)?;
        max_sp = max_sp.max(c);
    }
    let threshold = calibrated_threshold(max_sp, spec.threshold_pct);
    let bound = threshold.ceil() as u64;

    let slope = match spec.slope {
        SlopeSpec::Fixed(s) => s,
        SlopeSpec::Auto => match spec.cost_kind {
            CostKind::Linear | CostKind::QuadraticConvex => 1.0,
            CostKind::LogConcave => threshold / (1.0 + bound as f64).ln(),
        },
    };
    let cost = CostFamily::new(spec.cost_kind, slope)?;

    let box_bounds = vec![bound; graph.edge_count()];
    Instance::new(graph, cost, pairs, threshold, box_bounds, DEFAULT_EPSILON_BAR)
}

fn sample_weight(dist: &WeightDist, rng: &mut ChaCha8Rng) -> f64 {
    match *dist {
        WeightDist::Unit => 1.0,
        WeightDist::UniformInt { lo, hi } => rng.gen_range(lo..=hi) as f64,
    }
}

fn erdos_renyi(
    n: usize,
    p: f64,
    dist: &WeightDist,
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, usize, f64)> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.gen_bool(p) {
                let w = sample_weight(dist, rng);
                edges.push((u, v, w));
            }
        }
    }
    edges
}

/// Expand undirected node pairs into two opposite arcs sharing one sampled
/// weight per pair.
fn undirect(
    pairs: Vec<(usize, usize)>,
    dist: &WeightDist,
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, usize, f64)> {
    let mut edges = Vec::with_capacity(2 * pairs.len());
    for (u, v) in pairs {
        let w = sample_weight(dist, rng);
        edges.push((u, v, w));
        edges.push((v, u, w));
    }
    edges
}

fn barabasi_albert(n: usize, m_attach: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let m0 = m_attach + 1;
    let mut pairs = Vec::new();
    // one endpoint entry per incidence, so uniform draws are degree-weighted
    let mut endpoints: Vec<usize> = Vec::new();
    for u in 0..m0 {
        for v in (u + 1)..m0 {
            pairs.push((u, v));
            endpoints.push(u);
            endpoints.push(v);
        }
    }
    for new in m0..n {
        let mut chosen: Vec<usize> = Vec::with_capacity(m_attach);
        let mut attempts = 0usize;
        while chosen.len() < m_attach {
            attempts += 1;
            if attempts > 200 * m_attach {
                // deterministic fallback: smallest existing node not yet taken
                let next = (0..new).find(|c| !chosen.contains(c)).expect("m_attach < new");
                chosen.push(next);
                continue;
            }
            let candidate = endpoints[rng.gen_range(0..endpoints.len())];
            if candidate != new && !chosen.contains(&candidate) {
                chosen.push(candidate);
            }
        }
        for &c in &chosen {
            pairs.push((new, c));
            endpoints.push(new);
            endpoints.push(c);
        }
    }
    pairs
}

fn watts_strogatz(n: usize, k: usize, beta: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let mut present: HashSet<(usize, usize)> = HashSet::new();
    let norm = |a: usize, b: usize| (a.min(b), a.max(b));
    for u in 0..n {
        for j in 1..=(k / 2) {
            let v = (u + j) % n;
            pairs.push((u, v));
            present.insert(norm(u, v));
        }
    }
    for i in 0..pairs.len() {
        if !rng.gen_bool(beta) {
            continue;
        }
        let (u, old_v) = pairs[i];
        let mut replaced = None;
        for _ in 0..200 {
            let w = rng.gen_range(0..n);
            if w != u && !present.contains(&norm(u, w)) {
                replaced = Some(w);
                break;
            }
        }
        if let Some(w) = replaced {
            present.remove(&norm(u, old_v));
            present.insert(norm(u, w));
            pairs[i] = (u, w);
        }
    }
    pairs
}

fn sample_pairs(
    graph: &WeightedDigraph,
    pair_count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(usize, usize)>> {
    let n = graph.node_count();
    let cost = CostFamily::linear();
    let zero = vec![0u64; graph.edge_count()];
    let max_attempts = 200 * pair_count.max(1);
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(pair_count);
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut attempts = 0usize;
    while pairs.len() < pair_count {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::Disconnected { wanted: pair_count, attempts: max_attempts });
        }
        let s = rng.gen_range(0..n);
        let t = rng.gen_range(0..n);
        if s == t || seen.contains(&(s, t)) {
            continue;
        }
        if graph.shortest_path(&cost, &zero, s, t).is_ok() {
            seen.insert((s, t));
            pairs.push((s, t));
        }
    }
    Ok(pairs)
}
