//! Finite-horizon planning, policy execution and exact evaluation.
//!
//! Step indices are zero-based: step `t` of an `H`-step episode has `H - t`
//! rewards still to collect.

mod evaluate;
mod exact;
mod grid;
mod oracle;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use evaluate::{evaluate_policy, execute_policy, BeliefTracker, EvaluationConfig};
pub use exact::{prune_dominated, solve_finite_horizon, solve_reachable, PlannerConfig};
pub use grid::{solve_belief_grid, GridPolicy};
pub use oracle::{
    brute_force_optimal, evaluate_tree, optimal_value_by_search, PolicyTree, BRUTE_FORCE_CAP,
    SEARCH_CAP,
};

/// Anything that maps (step, belief) to an action.
pub trait BeliefPolicy {
    fn horizon(&self) -> usize;
    fn action(&self, step: usize, belief: &DVector<f64>) -> usize;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaVector {
    pub action: usize,
    pub alpha: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaVectorPolicy {
    /// `steps[t]` is the value-function representation with `H - t` steps to go.
    pub steps: Vec<Vec<AlphaVector>>,
}

/// Tolerance under which two alpha values count as tied at a belief.
const TIE: f64 = 1e-12;

fn best_of<'a>(set: &'a [AlphaVector], belief: &DVector<f64>) -> (&'a AlphaVector, f64) {
    let mut best: Option<(&AlphaVector, f64)> = None;
    for v in set {
        let value = v.alpha.dot(belief);
        best = match best {
            None => Some((v, value)),
            Some((b, bv)) if value > bv + TIE || (value >= bv - TIE && v.action < b.action) => {
                Some((v, value.max(bv)))
            }
            keep => keep,
        };
    }
    best.expect("alpha sets are never empty")
}

impl AlphaVectorPolicy {
    /// Optimal value with `H - step` steps to go.
    pub fn value(&self, step: usize, belief: &DVector<f64>) -> f64 {
        self.steps[step]
            .iter()
            .map(|v| v.alpha.dot(belief))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        if p.steps.is_empty() || p.steps.iter().any(|s| s.is_empty()) {
            return Err(Error::Parse("policy has an empty step".into()));
        }
        Ok(p)
    }

    pub fn num_vectors(&self) -> usize {
        self.steps.iter().map(Vec::len).sum()
    }
}

impl BeliefPolicy for AlphaVectorPolicy {
    fn horizon(&self) -> usize {
        self.steps.len()
    }

    fn action(&self, step: usize, belief: &DVector<f64>) -> usize {
        best_of(&self.steps[step], belief).0.action
    }
}

/// Exact expected return and its split over steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyValue {
    pub value: f64,
    pub per_step: Vec<f64>,
}
