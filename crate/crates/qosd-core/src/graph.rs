//! Weighted directed graphs and the exact shortest-path machinery used by
//! every solver in the crate.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::cost::CostFamily;
use crate::error::{Error, Result};

/// One directed edge. Edge ids are positions in [`WeightedDigraph::edges`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub base_weight: f64,
}

/// A directed graph with positive edge weights. Parallel edges are allowed,
/// self-loops are not.
#[derive(Debug, Clone)]
pub struct WeightedDigraph {
    node_count: usize,
    edges: Vec<Edge>,
    /// adjacency[u] lists (edge_id, v) for every edge u -> v, in edge-id order
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl WeightedDigraph {
    pub fn new(node_count: usize, edge_list: Vec<(usize, usize, f64)>) -> Result<Self> {
        let mut edges = Vec::with_capacity(edge_list.len());
        let mut adjacency = vec![Vec::new(); node_count];
        for (id, (source, target, base_weight)) in edge_list.into_iter().enumerate() {
            if source >= node_count || target >= node_count {
                return Err(Error::InvalidInstance(format!(
                    "edge {id} endpoints ({source}, {target}) out of range for {node_count} nodes"
                )));
            }
            if source == target {
                return Err(Error::InvalidInstance(format!(
                    "edge {id} is a self-loop on node {source}"
                )));
            }
            if !(base_weight > 0.0) || !base_weight.is_finite() {
                return Err(Error::InvalidInstance(format!(
                    "edge {id} weight must be positive and finite, got {base_weight}"
                )));
            }
            adjacency[source].push((id, target));
            edges.push(Edge { source, target, base_weight });
        }
        Ok(WeightedDigraph { node_count, edges, adjacency })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    /// Smallest base weight in the graph (infinity for an edgeless graph).
    pub fn min_base_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.base_weight).fold(f64::INFINITY, f64::min)
    }

    /// Parse the `source target weight` edge-list format. Lines starting with
    /// `#` and blank lines are ignored; the node count is the largest id + 1.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edge_list = Vec::new();
        let mut max_node = 0usize;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let mut field = |name: &str| {
                parts.next().ok_or_else(|| {
                    Error::Parse(format!("line {}: missing {name}", lineno + 1))
                })
            };
            let source: usize = field("source")?
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: bad source: {e}", lineno + 1)))?;
            let target: usize = field("target")?
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: bad target: {e}", lineno + 1)))?;
            let weight: f64 = field("weight")?
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: bad weight: {e}", lineno + 1)))?;
            if parts.next().is_some() {
                return Err(Error::Parse(format!("line {}: trailing fields", lineno + 1)));
            }
            max_node = max_node.max(source).max(target);
            edge_list.push((source, target, weight));
        }
        if edge_list.is_empty() {
            return Err(Error::Parse("edge list contains no edges".into()));
        }
        WeightedDigraph::new(max_node + 1, edge_list)
    }

    /// Render in the same edge-list format accepted by [`Self::parse_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            out.push_str(&format!("{} {} {}\n", e.source, e.target, e.base_weight));
        }
        out
    }

    /// Dijkstra under perturbed weights `cost.edge_cost(w_e, x_e)`.
    ///
    /// Returns the shortest-path cost and the edge ids along one shortest
    /// path. Among equal-cost alternatives the path whose predecessor chain
    /// has lexicographically smallest (node id, edge id) wins, so the result
    /// is deterministic regardless of heap internals.
    pub fn shortest_path(
        &self,
        cost: &CostFamily,
        budgets: &[u64],
        source: usize,
        target: usize,
    ) -> Result<(f64, Vec<usize>)> {
        debug_assert_eq!(budgets.len(), self.edges.len());
        if source >= self.node_count || target >= self.node_count {
            return Err(Error::InvalidInstance(format!(
                "query ({source}, {target}) out of range for {} nodes",
                self.node_count
            )));
        }
        let mut dist = vec![f64::INFINITY; self.node_count];
        let mut pred: Vec<Option<(usize, usize)>> = vec![None; self.node_count]; // (node, edge)
        let mut done = vec![false; self.node_count];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(HeapItem { cost: 0.0, node: source });

        while let Some(HeapItem { cost: d, node: u }) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            if u == target {
                break;
            }
            for &(edge_id, v) in &self.adjacency[u] {
                if done[v] {
                    continue;
                }
                let w = cost.edge_cost(self.edges[edge_id].base_weight, budgets[edge_id]);
                let candidate = d + w;
                if candidate < dist[v] {
                    dist[v] = candidate;
                    pred[v] = Some((u, edge_id));
                    heap.push(HeapItem { cost: candidate, node: v });
                } else if candidate == dist[v] {
                    // Equal-cost tie: keep the lexicographically smallest
                    // predecessor. All predecessors of v settle before v does
                    // (weights are strictly positive), so this minimum is
                    // final by the time v is popped.
                    if let Some(current) = pred[v] {
                        if (u, edge_id) < current {
                            pred[v] = Some((u, edge_id));
                        }
                    }
                }
            }
        }

        if dist[target].is_infinite() {
            return Err(Error::Unreachable { from: source, to: target });
        }
        let mut path = Vec::new();
        let mut node = target;
        while node != source {
            let (prev, edge_id) = pred[node].expect("finite distance implies a predecessor");
            path.push(edge_id);
            node = prev;
        }
        path.reverse();
        Ok((dist[target], path))
    }

    /// Sum of perturbed edge costs along `path`, in path order.
    pub fn path_cost(&self, cost: &CostFamily, budgets: &[u64], path: &[usize]) -> f64 {
        path.iter()
            .map(|&e| cost.edge_cost(self.edges[e].base_weight, budgets[e]))
            .sum()
    }
}

#[derive(Debug, Clone, Copy)]
struct HeapItem {
    cost: f64,
    node: usize,
}

// Min-heap on (cost, node); costs are finite sums of positive weights, never NaN.
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapItem {}
