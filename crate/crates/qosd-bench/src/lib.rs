//! Shared instance builders for the criterion benchmarks.

use qosd_core::{generate, CostKind, GenSpec, GraphFamily, Instance, SlopeSpec, WeightDist};

/// A connected random instance sized for timing runs.
pub fn bench_instance(n: usize, pair_count: usize, seed: u64) -> Instance {
    let spec = GenSpec {
        family: GraphFamily::ErdosRenyi { p: (8.0 / n as f64).min(1.0) },
        n,
        weight_dist: WeightDist::UniformInt { lo: 1, hi: 10 },
        pair_count,
        threshold_pct: 1.6,
        cost_kind: CostKind::Linear,
        slope: SlopeSpec::Auto,
        seed,
    };
    generate(&spec).expect("benchmark instance should generate")
}

/// A tiny dense instance sized so the exhaustive oracle stays fast.
pub fn tiny_instance(seed: u64) -> Instance {
    let spec = GenSpec {
        family: GraphFamily::ErdosRenyi { p: 0.5 },
        n: 5,
        weight_dist: WeightDist::Unit,
        pair_count: 1,
        threshold_pct: 1.5,
        cost_kind: CostKind::Linear,
        slope: SlopeSpec::Auto,
        seed,
    };
    generate(&spec).expect("tiny instance should generate")
}
