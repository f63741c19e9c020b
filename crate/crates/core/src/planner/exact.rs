//! Alpha-vector value iteration.

use std::collections::HashSet;

use nalgebra::DVector;
use rayon::prelude::*;

use super::{best_of, AlphaVector, AlphaVectorPolicy};
use crate::error::{Error, Result};
use crate::pomdp::TabularPomdp;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerConfig {
    /// Largest cross-sum (exact planner) or reachable belief set (reachable
    /// planner) built before refusing.
    pub candidate_cap: usize,
    /// Pointwise-dominance pruning; only disabled to test that pruning does
    /// not change values.
    pub prune: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            candidate_cap: 20_000,
            prune: true,
        }
    }
}

fn dominates(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    a.iter().zip(b.iter()).all(|(x, y)| x >= y)
}

/// Removes every vector that is pointwise dominated by another. Of several
/// identical vectors the one with the lowest action is kept.
pub fn prune_dominated(mut vectors: Vec<AlphaVector>) -> Vec<AlphaVector> {
    // a dominating vector never has a smaller sum, so scanning in decreasing
    // sum order only needs to compare against vectors already kept
    let mut keyed: Vec<(f64, AlphaVector)> =
        vectors.drain(..).map(|v| (v.alpha.sum(), v)).collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.action.cmp(&b.1.action)));
    let mut kept: Vec<AlphaVector> = Vec::new();
    for (_, v) in keyed {
        if !kept.iter().any(|k| dominates(&k.alpha, &v.alpha)) {
            kept.push(v);
        }
    }
    kept
}

/// `T_aᵀ (O_z ∘ α)`: the value of continuing with `α` after seeing `z`.
fn project(
    model: &TabularPomdp,
    action: usize,
    observation: usize,
    alpha: &DVector<f64>,
) -> DVector<f64> {
    let o = model.observation();
    let weighted = DVector::from_fn(alpha.len(), |s, _| o[(observation, s)] * alpha[s]);
    model.transition(action).tr_mul(&weighted)
}

fn action_backup(
    model: &TabularPomdp,
    next: &[AlphaVector],
    action: usize,
    config: &PlannerConfig,
) -> Result<Vec<AlphaVector>> {
    let tidy = |v: Vec<AlphaVector>| if config.prune { prune_dominated(v) } else { v };
    let mut sums = vec![AlphaVector {
        action,
        alpha: model.reward(action).clone(),
    }];
    for z in 0..model.num_observations() {
        let projected = tidy(
            next.iter()
                .map(|v| AlphaVector {
                    action,
                    alpha: project(model, action, z, &v.alpha),
                })
                .collect(),
        );
        let size = sums.len() * projected.len();
        if size > config.candidate_cap {
            return Err(Error::SizeLimit {
                what: format!("alpha-vector cross-sum for action {action}"),
                size: size as u128,
                cap: config.candidate_cap as u128,
            });
        }
        let mut crossed = Vec::with_capacity(size);
        for s in &sums {
            for p in &projected {
                crossed.push(AlphaVector {
                    action,
                    alpha: &s.alpha + &p.alpha,
                });
            }
        }
        sums = tidy(crossed);
    }
    Ok(sums)
}

fn last_step(model: &TabularPomdp, config: &PlannerConfig) -> Vec<AlphaVector> {
    let v = (0..model.num_actions())
        .map(|a| AlphaVector {
            action: a,
            alpha: model.reward(a).clone(),
        })
        .collect();
    if config.prune {
        prune_dominated(v)
    } else {
        v
    }
}

/// Exact backward value iteration with incremental cross-sums.
pub fn solve_finite_horizon(
    model: &TabularPomdp,
    config: &PlannerConfig,
) -> Result<AlphaVectorPolicy> {
    let h = model.horizon();
    let mut steps = vec![last_step(model, config)];
    for _ in 1..h {
        let next = steps.last().expect("nonempty");
        let per_action = (0..model.num_actions())
            .into_par_iter()
            .map(|a| action_backup(model, next, a, config))
            .collect::<Result<Vec<_>>>()?;
        let all: Vec<AlphaVector> = per_action.into_iter().flatten().collect();
        steps.push(if config.prune {
            prune_dominated(all)
        } else {
            all
        });
    }
    steps.reverse();
    Ok(AlphaVectorPolicy { steps })
}

fn belief_key(b: &DVector<f64>) -> Vec<u64> {
    b.iter().map(|x| x.to_bits()).collect()
}

/// Beliefs reachable from `b1` at each step, in discovery order.
fn reachable_beliefs(model: &TabularPomdp, cap: usize) -> Result<Vec<Vec<DVector<f64>>>> {
    let mut layers = vec![vec![model.initial_belief().clone()]];
    let mut total = 1usize;
    for _ in 1..model.horizon() {
        let mut seen = HashSet::new();
        let mut layer = Vec::new();
        for b in layers.last().expect("nonempty") {
            for a in 0..model.num_actions() {
                for z in 0..model.num_observations() {
                    let joint = model.predict_joint(b, a, z);
                    let mass = joint.sum();
                    if mass > 0.0 {
                        let next = joint / mass;
                        if seen.insert(belief_key(&next)) {
                            layer.push(next);
                        }
                    }
                }
            }
        }
        total += layer.len();
        if total > cap {
            return Err(Error::SizeLimit {
                what: "reachable belief set".into(),
                size: total as u128,
                cap: cap as u128,
            });
        }
        layers.push(layer);
    }
    Ok(layers)
}

/// Point backups at every belief reachable from `b1`. The policy is optimal
/// from `b1` (every successor belief it can meet carries an exact backup)
/// but is only a lower bound elsewhere.
pub fn solve_reachable(model: &TabularPomdp, config: &PlannerConfig) -> Result<AlphaVectorPolicy> {
    let layers = reachable_beliefs(model, config.candidate_cap)?;
    let h = model.horizon();
    let mut steps = vec![last_step(model, config)];
    for t in (0..h - 1).rev() {
        let next = steps.last().expect("nonempty");
        let backups: Vec<AlphaVector> = layers[t]
            .par_iter()
            .map(|b| {
                let mut best: Option<(f64, AlphaVector)> = None;
                for a in 0..model.num_actions() {
                    let mut alpha = model.reward(a).clone();
                    for z in 0..model.num_observations() {
                        let joint = model.predict_joint(b, a, z);
                        let (chosen, _) = best_of(next, &joint);
                        alpha += project(model, a, z, &chosen.alpha);
                    }
                    let value = alpha.dot(b);
                    if best.as_ref().is_none_or(|(bv, _)| value > *bv + super::TIE) {
                        best = Some((value, AlphaVector { action: a, alpha }));
                    }
                }
                best.expect("at least one action").1
            })
            .collect();
        steps.push(if config.prune {
            prune_dominated(backups)
        } else {
            backups
        });
    }
    steps.reverse();
    Ok(AlphaVectorPolicy { steps })
}
