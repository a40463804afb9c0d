//! Per-edge cost families: how an integer budget on an edge translates into
//! added traversal cost on top of the edge's base weight.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the budget-to-cost map applied uniformly to every edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    /// `w + slope * x`
    Linear,
    /// `w + slope * x^2`
    QuadraticConvex,
    /// `w + slope * ln(1 + x)`
    LogConcave,
}

impl CostKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CostKind::Linear => "linear",
            CostKind::QuadraticConvex => "quadratic_convex",
            CostKind::LogConcave => "log_concave",
        }
    }
}

impl std::fmt::Display for CostKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A cost family: kind plus a single positive slope shared by all edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostFamily {
    pub kind: CostKind,
    #[serde(default = "default_slope")]
    pub slope: f64,
}

fn default_slope() -> f64 {
    1.0
}

impl CostFamily {
    pub fn new(kind: CostKind, slope: f64) -> Result<Self> {
        if !(slope > 0.0) || !slope.is_finite() {
            return Err(Error::InvalidInstance(format!(
                "cost slope must be a positive finite real, got {slope}"
            )));
        }
        Ok(CostFamily { kind, slope })
    }

    pub fn linear() -> Self {
        CostFamily { kind: CostKind::Linear, slope: 1.0 }
    }

    /// Perturbed weight of an edge with base weight `w` holding budget `x`.
    pub fn edge_cost(&self, base_weight: f64, x: u64) -> f64 {
        base_weight + self.added_cost(x)
    }

    /// Cost added by a budget of `x`, independent of the base weight.
    pub fn added_cost(&self, x: u64) -> f64 {
        let xf = x as f64;
        match self.kind {
            CostKind::Linear => self.slope * xf,
            CostKind::QuadraticConvex => self.slope * xf * xf,
            CostKind::LogConcave => self.slope * xf.ln_1p(),
        }
    }

    /// Exact increase `f(x + delta) - f(x)`, computed without cancellation.
    pub fn gain(&self, x: u64, delta: u64) -> f64 {
        let (xf, df) = (x as f64, delta as f64);
        match self.kind {
            CostKind::Linear => self.slope * df,
            // (x+d)^2 - x^2 = d * (2x + d)
            CostKind::QuadraticConvex => self.slope * df * (2.0 * xf + df),
            CostKind::LogConcave => self.slope * ((xf + df).ln_1p() - xf.ln_1p()),
        }
    }

    /// Guaranteed minimum single-unit gain over the whole budget range, when
    /// one exists. Linear and quadratic gains never fall below the slope;
    /// log-concave gains shrink toward zero, so there is no positive floor.
    pub fn min_unit_gain(&self) -> Option<f64> {
        match self.kind {
            CostKind::Linear | CostKind::QuadraticConvex => Some(self.slope),
            CostKind::LogConcave => None,
        }
    }

    /// Largest single-unit gain an edge can realize while its budget moves
    /// through `[from, to]` (used by the budget sandwich certificate).
    pub fn max_unit_gain_in_range(&self, from: u64, to: u64) -> f64 {
        debug_assert!(to > from);
        match self.kind {
            CostKind::Linear => self.slope,
            // unit gains grow with x: the last step (to-1 -> to) is largest
            CostKind::QuadraticConvex => self.gain(to - 1, 1),
            // unit gains shrink with x: the first step is largest
            CostKind::LogConcave => self.gain(from, 1),
        }
    }

    /// Extension of the cost map to real-valued budgets, used by the smooth
    /// reward surrogate. For the log-concave family the domain is `x > -1`.
    pub fn edge_cost_real(&self, base_weight: f64, x: f64) -> f64 {
        base_weight
            + match self.kind {
                CostKind::Linear => self.slope * x,
                CostKind::QuadraticConvex => self.slope * x * x,
                CostKind::LogConcave => self.slope * x.ln_1p(),
            }
    }

    /// Derivative of [`Self::edge_cost_real`] with respect to the budget.
    pub fn edge_cost_real_derivative(&self, x: f64) -> f64 {
        match self.kind {
            CostKind::Linear => self.slope,
            CostKind::QuadraticConvex => 2.0 * self.slope * x,
            CostKind::LogConcave => self.slope / (1.0 + x),
        }
    }

    /// True when all edge costs are integers for integer budgets and integer
    /// base weights (the regime where the greedy potential saturates exactly).
    pub fn integer_valued(&self) -> bool {
        matches!(self.kind, CostKind::Linear | CostKind::QuadraticConvex)
            && self.slope.fract() == 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn edge_cost_matches_each_family() {
        let lin = CostFamily::new(CostKind::Linear, 1.0).unwrap();
        assert_relative_eq!(lin.edge_cost(2.0, 0), 2.0);
        assert_relative_eq!(lin.edge_cost(2.0, 3), 5.0);

        let quad = CostFamily::new(CostKind::QuadraticConvex, 1.0).unwrap();
        assert_relative_eq!(quad.edge_cost(1.0, 3), 10.0);

        let log = CostFamily::new(CostKind::LogConcave, 1.0).unwrap();
        assert_relative_eq!(log.edge_cost(1.0, 0), 1.0);
        assert_relative_eq!(log.edge_cost(1.0, 1), 1.0 + std::f64::consts::LN_2);
    }

    #[test]
    fn gain_agrees_with_cost_difference() {
        for kind in [CostKind::Linear, CostKind::QuadraticConvex, CostKind::LogConcave] {
            let fam = CostFamily::new(kind, 2.5).unwrap();
            for x in 0..20u64 {
                for delta in 1..8u64 {
                    let direct = fam.edge_cost(3.0, x + delta) - fam.edge_cost(3.0, x);
                    assert_relative_eq!(fam.gain(x, delta), direct, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn unit_gains_never_fall_below_slope_for_bounded_families() {
        for kind in [CostKind::Linear, CostKind::QuadraticConvex] {
            let fam = CostFamily::new(kind, 1.5).unwrap();
            let floor = fam.min_unit_gain().unwrap();
            for x in 0..100u64 {
                assert!(fam.gain(x, 1) >= floor - 1e-12);
            }
        }
        assert!(CostFamily::new(CostKind::LogConcave, 1.0).unwrap().min_unit_gain().is_none());
    }

    #[test]
    fn max_unit_gain_in_range_bounds_every_step() {
        for kind in [CostKind::Linear, CostKind::QuadraticConvex, CostKind::LogConcave] {
            let fam = CostFamily::new(kind, 1.0).unwrap();
            let (from, to) = (2u64, 9u64);
            let cap = fam.max_unit_gain_in_range(from, to);
            for x in from..to {
                assert!(fam.gain(x, 1) <= cap + 1e-12);
            }
        }
    }

    #[test]
    fn nonpositive_slope_rejected() {
        assert!(CostFamily::new(CostKind::Linear, 0.0).is_err());
        assert!(CostFamily::new(CostKind::Linear, -1.0).is_err());
        assert!(CostFamily::new(CostKind::Linear, f64::NAN).is_err());
    }

    #[test]
    fn real_extension_matches_integer_points_and_derivative() {
        for kind in [CostKind::Linear, CostKind::QuadraticConvex, CostKind::LogConcave] {
            let fam = CostFamily::new(kind, 1.3).unwrap();
            for x in 0..10u64 {
                assert_relative_eq!(
                    fam.edge_cost_real(2.0, x as f64),
                    fam.edge_cost(2.0, x),
                    max_relative = 1e-12
                );
            }
            // central finite difference on the real extension
            let (x, h) = (1.7, 1e-6);
            let fd = (fam.edge_cost_real(0.0, x + h) - fam.edge_cost_real(0.0, x - h)) / (2.0 * h);
            assert_relative_eq!(fam.edge_cost_real_derivative(x), fd, max_relative = 1e-6);
        }
    }
}
