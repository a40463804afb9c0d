//! Scoring a relaxed (real-valued) budget proposal: a saturating
//! feasibility score minus a logarithmic budget penalty, plus the analytic
//! gradient of the smooth fixed-path surrogate used to sanity-check
//! gradient-based outer loops.

use serde::Serialize;

use crate::error::Result;
use crate::estimator::Estimator;
use crate::instance::{Instance, Perturbation};
use crate::stressing::PathSet;

/// Sharpness of the per-pair feasibility sigmoid and weight of the budget
/// penalty.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RewardParams {
    pub zeta: f64,
    pub kappa: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams { zeta: 5.0, kappa: 0.05 }
    }
}

/// Numerically stable `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Round half-up componentwise, then clamp into `[0, box]`: how a relaxed
/// proposal is materialized into integer budgets.
pub fn round_into_box(x_hat: &[f64], box_bounds: &[u64]) -> Perturbation {
    let budgets = x_hat
        .iter()
        .zip(box_bounds)
        .map(|(&v, &cap)| {
            let r = (v + 0.5).floor();
            if r <= 0.0 {
                0
            } else {
                (r as u64).min(cap)
            }
        })
        .collect();
    Perturbation { budgets }
}

/// Saturating feasibility score: `sum_i sigmoid(zeta * (SP_i - T))` with
/// shortest paths evaluated by `est` under the rounded, clamped proposal.
/// Lies strictly between 0 and the number of pairs.
pub fn smooth_feasibility(
    inst: &Instance,
    est: &mut Estimator,
    x_hat: &[f64],
    zeta: f64,
) -> Result<f64> {
    let x = round_into_box(x_hat, &inst.box_bounds);
    let mut score = 0.0;
    for &(s, t) in &inst.pairs {
        let e = est.estimate(inst, &x, s, t)?;
        score += sigmoid(zeta * (e.predicted_cost - inst.threshold));
    }
    Ok(score)
}

/// Feasibility score, budget penalty, and their difference.
#[derive(Debug, Clone, Serialize)]
pub struct RewardValue {
    pub feasibility_score: f64,
    pub penalty: f64,
    pub reward: f64,
}

/// `reward = smooth_feasibility - kappa * ln(1 + ||softplus(x_hat)||_1)`.
pub fn reward(
    inst: &Instance,
    est: &mut Estimator,
    x_hat: &[f64],
    params: &RewardParams,
) -> Result<RewardValue> {
    let feasibility_score = smooth_feasibility(inst, est, x_hat, params.zeta)?;
    let soft_total: f64 = x_hat.iter().map(|&v| softplus(v)).sum();
    let penalty = params.kappa * soft_total.ln_1p();
    Ok(RewardValue { feasibility_score, penalty, reward: feasibility_score - penalty })
}

/// Smooth fixed-path surrogate of the reward: path costs are evaluated on
/// the real-valued proposal directly (no rounding, no re-routing), so the
/// whole expression is differentiable. The log-concave family requires every
/// component of `x_hat` to stay above -1.
pub fn reward_fixed_paths(
    inst: &Instance,
    paths: &PathSet,
    x_hat: &[f64],
    params: &RewardParams,
) -> f64 {
    let mut score = 0.0;
    for entry in paths.entries() {
        let c: f64 = entry
            .edges
            .iter()
            .map(|&e| inst.cost.edge_cost_real(inst.graph.edge(e).base_weight, x_hat[e]))
            .sum();
        score += sigmoid(params.zeta * (c - inst.threshold));
    }
    let soft_total: f64 = x_hat.iter().map(|&v| softplus(v)).sum();
    score - params.kappa * soft_total.ln_1p()
}

/// Analytic gradient of [`reward_fixed_paths`] with respect to `x_hat`.
///
/// Component `e` collects `zeta * s_p (1 - s_p) * f'_e(x_e)` over the paths
/// containing `e` (the sigmoid chain rule), minus the penalty term
/// `kappa * sigmoid(x_e) / (1 + ||softplus(x_hat)||_1)`.
pub fn reward_gradient_fixed_paths(
    inst: &Instance,
    paths: &PathSet,
    x_hat: &[f64],
    params: &RewardParams,
) -> Vec<f64> {
    let mut grad = vec![0.0; x_hat.len()];
    for entry in paths.entries() {
        let c: f64 = entry
            .edges
            .iter()
            .map(|&e| inst.cost.edge_cost_real(inst.graph.edge(e).base_weight, x_hat[e]))
            .sum();
        let s = sigmoid(params.zeta * (c - inst.threshold));
        let factor = params.zeta * s * (1.0 - s);
        for &e in &entry.edges {
            grad[e] += factor * inst.cost.edge_cost_real_derivative(x_hat[e]);
        }
    }
    let soft_total: f64 = x_hat.iter().map(|&v| softplus(v)).sum();
    let denom = 1.0 + soft_total;
    for (g, &v) in grad.iter_mut().zip(x_hat) {
        *g -= params.kappa * sigmoid(v) / denom;
    }
    grad
}
