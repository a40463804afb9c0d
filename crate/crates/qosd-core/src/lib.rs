//! Minimum-budget edge perturbation for service degradation analysis.
//!
//! Given a positively weighted digraph, a set of critical source/target
//! pairs, and a latency threshold, the library searches for the cheapest
//! integer budget vector over the edges — under linear, quadratic, or
//! log-concave per-edge cost growth and per-edge box bounds — that pushes
//! every pair's shortest path to the threshold.
//!
//! The pieces:
//!
//! * [`graph`]: weighted digraphs with deterministic Dijkstra under
//!   perturbed edge costs.
//! * [`cost`]: the per-edge cost families and their gain arithmetic.
//! * [`instance`]: problem instances, feasibility/slack measurement, JSON
//!   (de)serialization.
//! * [`estimator`]: exact and seeded-noise shortest-path estimators.
//! * [`stressing`]: the greedy path-stressing solver (`pps`), its exact
//!   safeguard (`pps_i`), and the two-sided budget certificate.
//! * [`oracle`]: exhaustive and constraint-generation exact baselines with
//!   an approximation-ratio check.
//! * [`reward`]: a smooth score/penalty objective over real-valued
//!   proposals, with an analytic gradient for the fixed-path surrogate.
//! * [`instancegen`]: seeded random instances over classic graph families.
//! * [`harness`]: uniform run records and the parallel benchmark grid.

pub mod cost;
pub mod error;
pub mod estimator;
pub mod graph;
pub mod harness;
pub mod instance;
pub mod instancegen;
pub mod oracle;
pub mod reward;
pub mod stressing;

pub use cost::{CostFamily, CostKind};
pub use error::{Error, Result};
pub use estimator::{Estimator, EstimatorKind, PathEstimate};
pub use graph::{Edge, WeightedDigraph};
pub use harness::{
    bench_grid, solve_record, BenchConfig, BenchOutcome, BenchRow, BoundCheck, Method, RunRecord,
    SolveConfig,
};
pub use instance::{
    load_budget_vector, load_real_vector, Feasibility, Instance, Perturbation,
    DEFAULT_EPSILON_BAR,
};
pub use instancegen::{
    calibrated_threshold, generate, GenSpec, GraphFamily, SlopeSpec, WeightDist,
};
pub use oracle::{
    brute_force_opt, constraint_generation_solve, ratio_bound, OracleSolution, RatioReport,
};
pub use reward::{
    reward, reward_fixed_paths, reward_gradient_fixed_paths, round_into_box, smooth_feasibility,
    RewardParams, RewardValue,
};
pub use stressing::{
    pps, pps_i, sandwich_check, SandwichReport, StressOptions, StressReport, UpperCheck,
};
