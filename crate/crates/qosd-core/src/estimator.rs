//! Shortest-path cost estimators. The exact backend delegates to Dijkstra;
//! the noisy backend perturbs the true cost with seeded, zero-mean
//! multiplicative noise while returning the exact argmin path, modelling a
//! learned predictor whose cost estimates are imperfect.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, Perturbation};

/// Which backend an [`Estimator`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EstimatorKind {
    Exact,
    /// Relative noise level `eta` in `[0, 1)` and the stream seed.
    Noisy { eta: f64, seed: u64 },
}

/// One cost/path estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEstimate {
    /// The (possibly noisy) cost the caller should act on.
    pub predicted_cost: f64,
    /// The exact shortest-path cost, kept for diagnostics.
    pub true_cost: f64,
    /// Edge ids of the exact shortest path.
    pub path: Vec<usize>,
}

/// A shortest-path cost estimator with an internal query counter.
///
/// The counter makes noise draws a pure function of
/// `(seed, source, target, query index)`, so a run replays exactly under a
/// fixed seed. It also means one instance must stay confined to a single
/// thread; parallel workers should each build their own via [`Estimator::with_seed`].
#[derive(Debug, Clone)]
pub struct Estimator {
    kind: EstimatorKind,
    queries: u64,
}

impl Estimator {
    pub fn new(kind: EstimatorKind) -> Result<Self> {
        if let EstimatorKind::Noisy { eta, .. } = kind {
            if !(0.0..1.0).contains(&eta) {
                return Err(Error::Parse(format!(
                    "noise level must lie in [0, 1), got {eta}"
                )));
            }
        }
        Ok(Estimator { kind, queries: 0 })
    }

    pub fn exact() -> Self {
        Estimator { kind: EstimatorKind::Exact, queries: 0 }
    }

    pub fn noisy(eta: f64, seed: u64) -> Result<Self> {
        Estimator::new(EstimatorKind::Noisy { eta, seed })
    }

    /// A fresh estimator of the same kind but with `seed`, counter reset.
    /// Use this to hand independent noise streams to parallel workers.
    pub fn with_seed(&self, seed: u64) -> Self {
        let kind = match self.kind {
            EstimatorKind::Exact => EstimatorKind::Exact,
            EstimatorKind::Noisy { eta, .. } => EstimatorKind::Noisy { eta, seed },
        };
        Estimator { kind, queries: 0 }
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    /// Number of estimate calls served so far.
    pub fn queries(&self) -> u64 {
        self.queries
    }

    /// Estimate the shortest-path cost from `s` to `t` under budgets `x`.
    ///
    /// The returned path is always the exact shortest path; only the
    /// predicted cost carries noise. `Unreachable` propagates unchanged.
    pub fn estimate(
        &mut self,
        inst: &Instance,
        x: &Perturbation,
        s: usize,
        t: usize,
    ) -> Result<PathEstimate> {
        let (true_cost, path) = inst.pair_shortest_path(x, s, t)?;
        let counter = self.queries;
        self.queries += 1;
        let predicted_cost = match self.kind {
            EstimatorKind::Exact => true_cost,
            EstimatorKind::Noisy { eta, seed } => {
                if eta == 0.0 {
                    true_cost
                } else {
                    let u = noise_draw(seed, s, t, counter, eta);
                    true_cost * (1.0 + u)
                }
            }
        };
        Ok(PathEstimate { predicted_cost, true_cost, path })
    }

    /// Parse a CLI descriptor: `exact` or `noisy:<eta>:<seed>`.
    pub fn parse(descriptor: &str) -> Result<Self> {
        if descriptor == "exact" {
            return Ok(Estimator::exact());
        }
        let mut parts = descriptor.split(':');
        match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some("noisy"), Some(eta), Some(seed), None) => {
                let eta: f64 = eta
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad noise level {eta:?}: {e}")))?;
                let seed: u64 = seed
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad seed {seed:?}: {e}")))?;
                Estimator::noisy(eta, seed)
            }
            _ => Err(Error::Parse(format!(
                "estimator descriptor must be `exact` or `noisy:<eta>:<seed>`, got {descriptor:?}"
            ))),
        }
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            EstimatorKind::Exact => f.write_str("exact"),
            EstimatorKind::Noisy { eta, seed } => write!(f, "noisy:{eta}:{seed}"),
        }
    }
}

/// Uniform draw in `[-eta, eta]`, keyed by the full query identity.
fn noise_draw(seed: u64, s: usize, t: usize, counter: u64, eta: f64) -> f64 {
    let mut key = seed;
    for part in [s as u64, t as u64, counter] {
        // SplitMix64-style mixing keeps distinct query identities decorrelated
        key = key.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(part);
        key = (key ^ (key >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        key = (key ^ (key >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        key ^= key >> 31;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.gen_range(-eta..=eta)
}
