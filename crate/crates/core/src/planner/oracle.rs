//! Independent optimal-value oracles for tests and regret reporting.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PolicyValue;
use crate::error::{Error, Result};
use crate::pomdp::TabularPomdp;

/// Largest number of policy trees `brute_force_optimal` enumerates.
pub const BRUTE_FORCE_CAP: u128 = 1_000_000;
/// Largest number of leaf evaluations `optimal_value_by_search` performs.
pub const SEARCH_CAP: u128 = 50_000_000;

fn tree_nodes(z: usize, h: usize) -> u128 {
    (0..h as u32)
        .map(|t| (z as u128).saturating_pow(t))
        .fold(0u128, u128::saturating_add)
}

/// `x ↦ O_z ∘ (T_a x)` on an unnormalized state distribution.
fn advance(model: &TabularPomdp, x: &DVector<f64>, a: usize, z: usize) -> DVector<f64> {
    model.predict_joint(x, a, z)
}

/// Per-step expected rewards of the policy tree `actions` (nodes in
/// breadth-first order, children of node `p` at depth `d` indexed `p·|Z| + z`).
fn tree_rewards(model: &TabularPomdp, actions: &[usize], per_step: &mut [f64]) {
    let zn = model.num_observations();
    let mut layer = vec![model.initial_belief().clone()];
    let mut offset = 0;
    let h = per_step.len();
    for (t, slot) in per_step.iter_mut().enumerate() {
        *slot = layer
            .iter()
            .enumerate()
            .map(|(p, x)| model.reward(actions[offset + p]).dot(x))
            .sum();
        if t + 1 < h {
            let next: Vec<DVector<f64>> = layer
                .iter()
                .enumerate()
                .flat_map(|(p, x)| {
                    let a = actions[offset + p];
                    (0..zn).map(move |z| advance(model, x, a, z))
                })
                .collect();
            offset += layer.len();
            layer = next;
        }
    }
}

/// A deterministic observation-indexed policy tree of depth `H`. Nodes are
/// stored breadth-first; the children of node `p` at depth `d` are
/// `p·|Z| + z` at depth `d + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyTree {
    pub actions: Vec<usize>,
}

impl PolicyTree {
    pub fn random<R: Rng + ?Sized>(model: &TabularPomdp, rng: &mut R) -> Result<Self> {
        let nodes = tree_nodes(model.num_observations(), model.horizon());
        if nodes > 1 << 24 {
            return Err(Error::SizeLimit {
                what: "policy tree nodes".into(),
                size: nodes,
                cap: 1 << 24,
            });
        }
        Ok(Self {
            actions: (0..nodes)
                .map(|_| rng.random_range(0..model.num_actions()))
                .collect(),
        })
    }
}

/// Exact value of a policy tree.
pub fn evaluate_tree(model: &TabularPomdp, tree: &PolicyTree) -> Result<PolicyValue> {
    let nodes = tree_nodes(model.num_observations(), model.horizon());
    if tree.actions.len() as u128 != nodes || tree.actions.iter().any(|&a| a >= model.num_actions())
    {
        return Err(Error::InvalidArgument(
            "policy tree does not fit the model".into(),
        ));
    }
    let mut per_step = vec![0.0; model.horizon()];
    tree_rewards(model, &tree.actions, &mut per_step);
    Ok(PolicyValue {
        value: per_step.iter().sum(),
        per_step,
    })
}

/// Enumerates every deterministic observation-indexed policy tree and
/// returns the best one's exact value.
pub fn brute_force_optimal(model: &TabularPomdp) -> Result<PolicyValue> {
    let h = model.horizon();
    let an = model.num_actions();
    let nodes = tree_nodes(model.num_observations(), h);
    let trees = u32::try_from(nodes)
        .ok()
        .and_then(|n| (an as u128).checked_pow(n))
        .unwrap_or(u128::MAX);
    if trees > BRUTE_FORCE_CAP {
        return Err(Error::SizeLimit {
            what: "policy trees".into(),
            size: trees,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let mut actions = vec![0usize; nodes as usize];
    let mut per_step = vec![0.0; h];
    let mut best = PolicyValue {
        value: f64::NEG_INFINITY,
        per_step: Vec::new(),
    };
    loop {
        tree_rewards(model, &actions, &mut per_step);
        let value: f64 = per_step.iter().sum();
        if value > best.value {
            best = PolicyValue {
                value,
                per_step: per_step.clone(),
            };
        }
        // odometer over action assignments
        let mut i = actions.len();
        loop {
            if i == 0 {
                return Ok(best);
            }
            i -= 1;
            actions[i] += 1;
            if actions[i] < an {
                break;
            }
            actions[i] = 0;
        }
    }
}

fn search(model: &TabularPomdp, x: &DVector<f64>, remaining: usize) -> f64 {
    (0..model.num_actions())
        .map(|a| {
            let mut v = model.reward(a).dot(x);
            if remaining > 1 {
                for z in 0..model.num_observations() {
                    let next = advance(model, x, a, z);
                    if next.sum() > 0.0 {
                        v += search(model, &next, remaining - 1);
                    }
                }
            }
            v
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Expectimax over action/observation histories from `b1`.
pub fn optimal_value_by_search(model: &TabularPomdp) -> Result<f64> {
    let branching = (model.num_actions() * model.num_observations()) as u128;
    let leaves = u32::try_from(model.horizon() - 1)
        .ok()
        .and_then(|e| branching.checked_pow(e))
        .and_then(|l| l.checked_mul(model.num_actions() as u128))
        .unwrap_or(u128::MAX);
    if leaves > SEARCH_CAP {
        return Err(Error::SizeLimit {
            what: "expectimax leaves".into(),
            size: leaves,
            cap: SEARCH_CAP,
        });
    }
    Ok(search(model, model.initial_belief(), model.horizon()))
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use super::*;
    use crate::domains::make_tiger;

    #[test]
    fn node_counts() {
        assert_eq!(tree_nodes(2, 3), 7);
        assert_eq!(tree_nodes(1, 4), 4);
        assert_eq!(tree_nodes(5, 3), 31);
    }

    #[test]
    fn search_agrees_with_brute_force_on_tiger() {
        let m = make_tiger(0.85, 3).unwrap();
        let bf = brute_force_optimal(&m).unwrap();
        assert!((bf.value - optimal_value_by_search(&m).unwrap()).abs() < 1e-12);
        assert!((bf.per_step.iter().sum::<f64>() - bf.value).abs() < 1e-15);
    }

    #[test]
    fn single_action_is_open_loop() {
        let t = DMatrix::from_row_slice(2, 2, &[0.9, 0.2, 0.1, 0.8]);
        let o = DMatrix::from_row_slice(2, 2, &[0.7, 0.4, 0.3, 0.6]);
        let r = DVector::from_vec(vec![0.25, 1.0]);
        let b1 = DVector::from_vec(vec![0.6, 0.4]);
        let m = TabularPomdp::new(vec![t.clone()], o, vec![r.clone()], b1.clone(), 3, 1.0).unwrap();
        let mut x = b1;
        let mut expected = 0.0;
        for _ in 0..3 {
            expected += r.dot(&x);
            x = &t * x;
        }
        assert!((brute_force_optimal(&m).unwrap().value - expected).abs() < 1e-14);
    }

    #[test]
    fn cap_is_enforced() {
        let m = make_tiger(0.85, 8).unwrap();
        assert!(matches!(
            brute_force_optimal(&m),
            Err(Error::SizeLimit { .. })
        ));
    }
}
