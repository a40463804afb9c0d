//! Generate a random instance, run the exact-safeguard solver, and print the
//! spent budget. Mirrors the walkthrough in the repository README.

use qosd_core::{
    generate, pps_i, CostKind, GenSpec, GraphFamily, Perturbation, SlopeSpec, StressOptions,
    WeightDist,
};

fn main() -> qosd_core::Result<()> {
    let spec = GenSpec {
        family: GraphFamily::ErdosRenyi { p: 0.25 },
        n: 32,
        weight_dist: WeightDist::Unit,
        pair_count: 5,
        threshold_pct: 1.5,
        cost_kind: CostKind::Linear,
        slope: SlopeSpec::Auto,
        seed: 42,
    };
    let inst = generate(&spec)?;
    let x0 = Perturbation::zeros(inst.edge_count());
    let report = pps_i(&inst, x0, &StressOptions::default())?;
    assert_eq!(inst.feasibility(&report.solution)?.rate, 1.0);
    println!("budget = {}", report.solution.total());
    Ok(())
}
