//! Problem instances: a graph, a cost family, critical pairs, a threshold,
//! per-edge budget boxes, and a convergence tolerance — plus the integer
//! budget vectors the solvers produce.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cost::CostFamily;
use crate::error::{Error, Result};
use crate::graph::WeightedDigraph;

/// An integer budget vector, one entry per edge. Totals are exact integers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Perturbation {
    pub budgets: Vec<u64>,
}

impl Perturbation {
    pub fn zeros(edge_count: usize) -> Self {
        Perturbation { budgets: vec![0; edge_count] }
    }

    pub fn total(&self) -> u64 {
        self.budgets.iter().sum()
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &Perturbation) -> bool {
        self.budgets.len() == other.budgets.len()
            && self.budgets.iter().zip(&other.budgets).all(|(a, b)| a <= b)
    }
}

/// Feasibility summary for one budget vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    /// Fraction of pairs whose shortest path meets the threshold.
    pub rate: f64,
    /// Indices (into `Instance::pairs`) of pairs still below the threshold,
    /// in instance order.
    pub violating: Vec<usize>,
}

impl Feasibility {
    pub fn feasible(&self) -> bool {
        self.violating.is_empty()
    }
}

/// A full degradation problem.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: WeightedDigraph,
    pub cost: CostFamily,
    /// Critical (source, target) pairs, order preserved from construction.
    pub pairs: Vec<(usize, usize)>,
    /// Every pair's shortest path must be pushed to at least this value.
    pub threshold: f64,
    /// Per-edge upper bounds on the integer budgets.
    pub box_bounds: Vec<u64>,
    /// Greedy convergence tolerance on the saturating potential.
    pub epsilon_bar: f64,
}

pub const DEFAULT_EPSILON_BAR: f64 = 0.5;

impl Instance {
    pub fn new(
        graph: WeightedDigraph,
        cost: CostFamily,
        pairs: Vec<(usize, usize)>,
        threshold: f64,
        box_bounds: Vec<u64>,
        epsilon_bar: f64,
    ) -> Result<Self> {
        let inst = Instance { graph, cost, pairs, threshold, box_bounds, epsilon_bar };
        inst.validate()?;
        Ok(inst)
    }

    /// Shorthand: default box `ceil(threshold)` on every edge and the default
    /// tolerance.
    pub fn with_default_box(
        graph: WeightedDigraph,
        cost: CostFamily,
        pairs: Vec<(usize, usize)>,
        threshold: f64,
    ) -> Result<Self> {
        let bound = threshold.ceil() as u64;
        let box_bounds = vec![bound; graph.edge_count()];
        Instance::new(graph, cost, pairs, threshold, box_bounds, DEFAULT_EPSILON_BAR)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0) || !self.threshold.is_finite() {
            return Err(Error::InvalidInstance(format!(
                "threshold must be positive and finite, got {}",
                self.threshold
            )));
        }
        if !(self.epsilon_bar > 0.0) || !self.epsilon_bar.is_finite() {
            return Err(Error::InvalidInstance(format!(
                "epsilon_bar must be positive and finite, got {}",
                self.epsilon_bar
            )));
        }
        if self.box_bounds.len() != self.graph.edge_count() {
            return Err(Error::InvalidInstance(format!(
                "box has {} entries for {} edges",
                self.box_bounds.len(),
                self.graph.edge_count()
            )));
        }
        if self.pairs.is_empty() {
            return Err(Error::InvalidInstance("no critical pairs".into()));
        }
        let zero = Perturbation::zeros(self.graph.edge_count());
        for &(s, t) in &self.pairs {
            if s == t {
                return Err(Error::InvalidInstance(format!(
                    "critical pair ({s}, {t}) has equal endpoints"
                )));
            }
            if s >= self.graph.node_count() || t >= self.graph.node_count() {
                return Err(Error::InvalidInstance(format!(
                    "critical pair ({s}, {t}) out of range"
                )));
            }
            // all pairs must be connected in the base graph
            self.graph.shortest_path(&self.cost, &zero.budgets, s, t)?;
        }
        Ok(())
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    /// Check `x` has one in-box budget per edge.
    pub fn check_within_box(&self, x: &Perturbation) -> Result<()> {
        if x.budgets.len() != self.graph.edge_count() {
            return Err(Error::InvalidInstance(format!(
                "budget vector has {} entries for {} edges",
                x.budgets.len(),
                self.graph.edge_count()
            )));
        }
        for (e, (&b, &cap)) in x.budgets.iter().zip(&self.box_bounds).enumerate() {
            if b > cap {
                return Err(Error::InvalidInstance(format!(
                    "budget {b} on edge {e} exceeds box bound {cap}"
                )));
            }
        }
        Ok(())
    }

    /// Exact shortest-path cost for one pair under `x`.
    pub fn pair_shortest_path(&self, x: &Perturbation, s: usize, t: usize) -> Result<(f64, Vec<usize>)> {
        self.graph.shortest_path(&self.cost, &x.budgets, s, t)
    }

    /// Exact feasibility under `x`: which pairs meet the threshold.
    pub fn feasibility(&self, x: &Perturbation) -> Result<Feasibility> {
        let mut violating = Vec::new();
        for (i, &(s, t)) in self.pairs.iter().enumerate() {
            let (cost, _) = self.graph.shortest_path(&self.cost, &x.budgets, s, t)?;
            if cost < self.threshold {
                violating.push(i);
            }
        }
        let rate = (self.pairs.len() - violating.len()) as f64 / self.pairs.len() as f64;
        Ok(Feasibility { rate, violating })
    }

    /// Total per-pair slack `sum_i max(0, T - SP_i)` under `x`. Zero exactly
    /// when `x` is feasible.
    pub fn slack(&self, x: &Perturbation) -> Result<f64> {
        let mut total = 0.0;
        for &(s, t) in &self.pairs {
            let (cost, _) = self.graph.shortest_path(&self.cost, &x.budgets, s, t)?;
            total += (self.threshold - cost).max(0.0);
        }
        Ok(total)
    }

    // ---- serialization -------------------------------------------------

    /// Load an instance document, resolving its graph sidecar relative to the
    /// document's directory.
    pub fn load(path: &Path) -> Result<Instance> {
        let text = std::fs::read_to_string(path)?;
        let doc: InstanceDoc = serde_json::from_str(&text)?;
        let graph_path = match path.parent() {
            Some(dir) if !dir.as_os_str().is_empty() => dir.join(&doc.graph_path),
            _ => Path::new(&doc.graph_path).to_path_buf(),
        };
        let graph_text = std::fs::read_to_string(&graph_path)?;
        let graph = WeightedDigraph::parse_edge_list(&graph_text)?;
        doc.into_instance(graph)
    }

    /// Write the instance document to `path` and the graph sidecar next to it
    /// (same stem, `.edges` extension). Returns the sidecar path.
    pub fn save(&self, path: &Path) -> Result<std::path::PathBuf> {
        let sidecar = path.with_extension("edges");
        let sidecar_name = sidecar
            .file_name()
            .ok_or_else(|| Error::InvalidInstance(format!("bad output path {path:?}")))?
            .to_string_lossy()
            .into_owned();
        let doc = InstanceDoc::from_instance(self, sidecar_name);
        std::fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")?;
        std::fs::write(&sidecar, self.graph.to_edge_list())?;
        Ok(sidecar)
    }
}

/// On-disk instance document. The graph lives in an edge-list sidecar file
/// referenced by `graph_path`.
#[derive(Debug, Serialize, Deserialize)]
struct InstanceDoc {
    graph_path: String,
    cost: CostFamily,
    pairs: Vec<(usize, usize)>,
    threshold: f64,
    #[serde(rename = "box")]
    box_bounds: BoxSpec,
    #[serde(default = "default_epsilon_bar")]
    epsilon_bar: f64,
}

fn default_epsilon_bar() -> f64 {
    DEFAULT_EPSILON_BAR
}

/// Box bounds: one scalar broadcast to all edges, or one entry per edge.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum BoxSpec {
    Scalar(u64),
    PerEdge(Vec<u64>),
}

impl InstanceDoc {
    fn into_instance(self, graph: WeightedDigraph) -> Result<Instance> {
        let box_bounds = match self.box_bounds {
            BoxSpec::Scalar(b) => vec![b; graph.edge_count()],
            BoxSpec::PerEdge(v) => v,
        };
        Instance::new(graph, self.cost, self.pairs, self.threshold, box_bounds, self.epsilon_bar)
    }

    fn from_instance(inst: &Instance, graph_path: String) -> InstanceDoc {
        let first = inst.box_bounds.first().copied().unwrap_or(0);
        let box_bounds = if inst.box_bounds.iter().all(|&b| b == first) {
            BoxSpec::Scalar(first)
        } else {
            BoxSpec::PerEdge(inst.box_bounds.clone())
        };
        InstanceDoc {
            graph_path,
            cost: inst.cost,
            pairs: inst.pairs.clone(),
            threshold: inst.threshold,
            box_bounds,
            epsilon_bar: inst.epsilon_bar,
        }
    }
}

/// Read a budget vector (JSON array of non-negative integers) from a file.
pub fn load_budget_vector(path: &Path) -> Result<Perturbation> {
    let text = std::fs::read_to_string(path)?;
    let budgets: Vec<u64> = serde_json::from_str(&text)?;
    Ok(Perturbation { budgets })
}

/// Read a real-valued vector (JSON array) from a file.
pub fn load_real_vector(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
