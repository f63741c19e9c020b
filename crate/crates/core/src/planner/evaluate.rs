//! Exact policy evaluation and sampled execution with belief tracking.

use std::collections::HashMap;

use log::warn;
use nalgebra::DVector;
use rand::Rng;

use super::{BeliefPolicy, PolicyValue};
use crate::error::{Error, Result};
use crate::pomdp::{simulate_episode, Belief, Episode, EpisodePolicy, SeedTag, TabularPomdp};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationConfig {
    /// Largest number of distinct (step, belief) nodes tracked.
    pub node_cap: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            node_cap: 1_000_000,
        }
    }
}

/// Belief filter run with the policy's own model, which may differ from the
/// environment being acted in.
#[derive(Debug, Clone)]
pub struct BeliefTracker<'a> {
    model: &'a TabularPomdp,
    belief: DVector<f64>,
    fallbacks: usize,
}

impl<'a> BeliefTracker<'a> {
    pub fn new(model: &'a TabularPomdp) -> Self {
        Self {
            model,
            belief: model.initial_belief().clone(),
            fallbacks: 0,
        }
    }

    pub fn reset(&mut self) {
        self.belief = self.model.initial_belief().clone();
    }

    pub fn belief(&self) -> &DVector<f64> {
        &self.belief
    }

    /// Number of impossible observations met so far.
    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }

    /// Bayes update; an observation the model deems impossible resets the
    /// belief to `b1` conditioned on that observation (uniform if that is
    /// impossible too).
    pub fn update(&mut self, action: usize, observation: usize) {
        self.belief = next_belief(
            self.model,
            &self.belief,
            action,
            observation,
            &mut self.fallbacks,
        );
    }
}

fn next_belief(
    model: &TabularPomdp,
    belief: &DVector<f64>,
    action: usize,
    observation: usize,
    fallbacks: &mut usize,
) -> DVector<f64> {
    let joint = model.predict_joint(belief, action, observation);
    let mass = joint.sum();
    if mass > 0.0 {
        return joint / mass;
    }
    *fallbacks += 1;
    warn!("observation {observation} impossible under the tracking model after action {action}; resetting belief");
    let b1 = model.initial_belief();
    let o = model.observation();
    let conditioned = DVector::from_fn(b1.len(), |s, _| o[(observation, s)] * b1[s]);
    let total = conditioned.sum();
    if total > 0.0 {
        conditioned / total
    } else {
        Belief::uniform(b1.len()).into_vector()
    }
}

fn check_shapes<P: BeliefPolicy>(
    env: &TabularPomdp,
    tracker: &TabularPomdp,
    policy: &P,
) -> Result<()> {
    if policy.horizon() != env.horizon() || tracker.horizon() != env.horizon() {
        return Err(Error::InvalidArgument(format!(
            "policy horizon {} and tracker horizon {} must match environment horizon {}",
            policy.horizon(),
            tracker.horizon(),
            env.horizon()
        )));
    }
    if tracker.num_actions() != env.num_actions()
        || tracker.num_observations() != env.num_observations()
    {
        return Err(Error::InvalidArgument(
            "tracking model and environment differ in actions or observations".into(),
        ));
    }
    Ok(())
}

/// Exact expected return of `policy` acting in `env` while tracking beliefs
/// with `tracker`. Forward recursion over (latent-state mass, tracked
/// belief) nodes; nodes with bit-identical beliefs are merged since the
/// policy treats them alike.
pub fn evaluate_policy<P: BeliefPolicy>(
    env: &TabularPomdp,
    tracker: &TabularPomdp,
    policy: &P,
    config: &EvaluationConfig,
) -> Result<PolicyValue> {
    check_shapes(env, tracker, policy)?;
    let h = env.horizon();
    let o = env.observation();
    // (unnormalized latent distribution, tracked belief)
    let mut nodes: Vec<(DVector<f64>, DVector<f64>)> = vec![(
        env.initial_belief().clone(),
        tracker.initial_belief().clone(),
    )];
    let mut per_step = Vec::with_capacity(h);
    let mut fallbacks = 0;
    for t in 0..h {
        let mut reward = 0.0;
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut next: Vec<(DVector<f64>, DVector<f64>)> = Vec::new();
        for (mass, belief) in &nodes {
            let a = policy.action(t, belief);
            reward += env.reward(a).dot(mass);
            if t + 1 == h {
                continue;
            }
            let moved = env.transition(a) * mass;
            for z in 0..env.num_observations() {
                let joint = DVector::from_fn(moved.len(), |s, _| o[(z, s)] * moved[s]);
                if !(joint.sum() > 0.0) {
                    continue;
                }
                let b = next_belief(tracker, belief, a, z, &mut fallbacks);
                let key: Vec<u64> = b.iter().map(|x| x.to_bits()).collect();
                match index.get(&key) {
                    Some(&i) => next[i].0 += joint,
                    None => {
                        if next.len() >= config.node_cap {
                            return Err(Error::SizeLimit {
                                what: format!("policy evaluation nodes at step {}", t + 1),
                                size: next.len() as u128 + 1,
                                cap: config.node_cap as u128,
                            });
                        }
                        index.insert(key, next.len());
                        next.push((joint, b));
                    }
                }
            }
        }
        per_step.push(reward);
        nodes = next;
    }
    Ok(PolicyValue {
        value: per_step.iter().sum(),
        per_step,
    })
}

struct Tracking<'a, 'p, P> {
    tracker: BeliefTracker<'a>,
    policy: &'p P,
}

impl<P: BeliefPolicy> EpisodePolicy for Tracking<'_, '_, P> {
    fn start(&mut self) {
        self.tracker.reset();
    }

    fn choose<R: Rng + ?Sized>(&mut self, step: usize, _rng: &mut R) -> usize {
        self.policy.action(step, self.tracker.belief())
    }

    fn observe(&mut self, action: usize, observation: usize) {
        self.tracker.update(action, observation);
    }
}

/// Samples one episode of `env` with `policy` choosing actions from beliefs
/// tracked under `tracker`.
pub fn execute_policy<P: BeliefPolicy>(
    env: &TabularPomdp,
    tracker: &TabularPomdp,
    policy: &P,
    tag: SeedTag,
) -> Result<Episode> {
    check_shapes(env, tracker, policy)?;
    let mut driver = Tracking {
        tracker: BeliefTracker::new(tracker),
        policy,
    };
    simulate_episode(env, &mut driver, tag)
}
