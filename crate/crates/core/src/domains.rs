//! Synthetic ground-truth POMDPs.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pomdp::{validate, ExplorationPolicy, TabularPomdp, ValidationConfig};

pub const TIGER_LISTEN: usize = 0;
pub const TIGER_OPEN_LEFT: usize = 1;
pub const TIGER_OPEN_RIGHT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Tiger,
    SlotFilling,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    /// Number of states; for slot filling, the number of user intents.
    pub states: usize,
    pub actions: usize,
    pub observations: usize,
    pub horizon: usize,
    /// Tiger listen accuracy; slot-filling observation noise is
    /// `1 - observation_accuracy`; for random models, the weight of the
    /// diagonal component of each observation column.
    pub observation_accuracy: f64,
    /// Random models only: weight of the random component of each
    /// transition column (the rest is a random permutation).
    pub transition_mixing: f64,
    pub seed: u64,
    pub retry_budget: usize,
}

impl DomainSpec {
    pub fn tiger(listen_accuracy: f64, horizon: usize) -> Self {
        Self {
            kind: DomainKind::Tiger,
            states: 2,
            actions: 3,
            observations: 2,
            horizon,
            observation_accuracy: listen_accuracy,
            transition_mixing: 0.0,
            seed: 0,
            retry_budget: 100,
        }
    }

    pub fn random(
        states: usize,
        actions: usize,
        observations: usize,
        horizon: usize,
        seed: u64,
    ) -> Self {
        Self {
            kind: DomainKind::Random,
            states,
            actions,
            observations,
            horizon,
            observation_accuracy: 0.6,
            transition_mixing: 0.5,
            seed,
            retry_budget: 100,
        }
    }

    pub fn build(&self) -> Result<TabularPomdp> {
        match self.kind {
            DomainKind::Tiger => make_tiger(self.observation_accuracy, self.horizon),
            DomainKind::SlotFilling => {
                make_slot_filling(self.states, 1.0 - self.observation_accuracy, self.horizon)
            }
            DomainKind::Random => make_random(self),
        }
    }
}

/// Tiger with rewards shifted into `[0, 1]`: listening earns 0.9, opening
/// the safe door 1, opening the tiger door 0. Opening resets the tiger
/// uniformly. Observations are emitted after every action.
pub fn make_tiger(listen_accuracy: f64, horizon: usize) -> Result<TabularPomdp> {
    if !(0.5..=1.0).contains(&listen_accuracy) {
        return Err(Error::InvalidArgument(format!(
            "listen accuracy {listen_accuracy} outside [0.5, 1]"
        )));
    }
    let p = listen_accuracy;
    let o = DMatrix::from_row_slice(2, 2, &[p, 1.0 - p, 1.0 - p, p]);
    let reset = DMatrix::from_element(2, 2, 0.5);
    // raw rewards: listen -1, safe door +10, tiger door -100
    let shift = |r: f64| (r + 100.0) / 110.0;
    let listen = DVector::from_element(2, shift(-1.0));
    let open_left = DVector::from_vec(vec![shift(-100.0), shift(10.0)]);
    let open_right = DVector::from_vec(vec![shift(10.0), shift(-100.0)]);
    TabularPomdp::new(
        vec![DMatrix::identity(2, 2), reset.clone(), reset],
        o,
        vec![listen, open_left, open_right],
        DVector::from_element(2, 0.5),
        horizon,
        1.0,
    )
}

/// Slot filling: the latent state is the user's intent (one of `slots`) plus
/// an absorbing `done` state. Action 0 queries and leaves the intent
/// unchanged; action `1 + i` commits to intent `i`, earning 1 if correct, and
/// ends the dialogue. Intent `i` is observed as `i` with probability
/// `1 - noise`, otherwise as a uniformly chosen other intent; `done` emits
/// its own observation.
pub fn make_slot_filling(slots: usize, noise: f64, horizon: usize) -> Result<TabularPomdp> {
    if slots < 2 {
        return Err(Error::InvalidArgument(format!(
            "slot filling needs at least 2 intents, got {slots}"
        )));
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::InvalidArgument(format!(
            "noise {noise} outside [0, 1]"
        )));
    }
    let n = slots + 1;
    let done = slots;
    let mut o = DMatrix::zeros(n, n);
    for s in 0..slots {
        for z in 0..slots {
            o[(z, s)] = if z == s {
                1.0 - noise
            } else {
                noise / (slots - 1) as f64
            };
        }
    }
    o[(done, done)] = 1.0;

    let mut transitions = vec![DMatrix::identity(n, n)];
    let mut rewards = vec![DVector::zeros(n)];
    for intent in 0..slots {
        let mut t = DMatrix::zeros(n, n);
        t.row_mut(done).fill(1.0);
        transitions.push(t);
        let mut r = DVector::zeros(n);
        r[intent] = 1.0;
        rewards.push(r);
    }
    let mut b1 = DVector::from_element(n, 1.0 / slots as f64);
    b1[done] = 0.0;
    TabularPomdp::new(transitions, o, rewards, b1, horizon, 1.0)
}

fn random_simplex<R: Rng>(n: usize, rng: &mut R) -> DVector<f64> {
    let v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(Exp1));
    let s = v.sum();
    v / s
}

fn random_model(spec: &DomainSpec, rng: &mut ChaCha8Rng) -> Result<TabularPomdp> {
    let (n, a, z) = (spec.states, spec.actions, spec.observations);
    let acc = spec.observation_accuracy;
    let mix = spec.transition_mixing;

    let mut o = DMatrix::zeros(z, n);
    for s in 0..n {
        let mut col = random_simplex(z, rng) * (1.0 - acc);
        col[s % z] += acc;
        o.set_column(s, &col);
    }
    let mut transitions = Vec::with_capacity(a);
    for _ in 0..a {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let mut t = DMatrix::zeros(n, n);
        for s in 0..n {
            let mut col = random_simplex(n, rng) * mix;
            col[perm[s]] += 1.0 - mix;
            t.set_column(s, &col);
        }
        transitions.push(t);
    }
    let rewards = (0..a)
        .map(|_| DVector::from_fn(n, |_, _| rng.random::<f64>()))
        .collect();
    let b1 = (random_simplex(n, rng) + DVector::from_element(n, 1.0 / n as f64)) * 0.5;
    let b1 = b1.clone() / b1.sum();
    TabularPomdp::with_tolerance(transitions, o, rewards, b1, spec.horizon, 1.0, 1e-12)
}

/// One random draw from `spec` with no validation; for planner and
/// evaluation tests that do not need an identifiable model.
pub fn make_random_unchecked(spec: &DomainSpec) -> Result<TabularPomdp> {
    if spec.states == 0 || spec.actions == 0 || spec.observations == 0 {
        return Err(Error::InvalidArgument(
            "random model sizes must be at least 1".into(),
        ));
    }
    random_model(spec, &mut ChaCha8Rng::seed_from_u64(spec.seed))
}

/// Random model that passes validation under uniform exploration.
pub fn make_random(spec: &DomainSpec) -> Result<TabularPomdp> {
    if spec.states == 0 || spec.actions == 0 || spec.observations == 0 {
        return Err(Error::InvalidArgument(
            "random model sizes must be at least 1".into(),
        ));
    }
    if !(0.0..=1.0).contains(&spec.observation_accuracy)
        || !(0.0..=1.0).contains(&spec.transition_mixing)
    {
        return Err(Error::InvalidArgument(
            "accuracy and mixing must lie in [0, 1]".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let exploration = ExplorationPolicy::uniform(spec.actions);
    let mut last = String::new();
    for _ in 0..spec.retry_budget {
        let model = random_model(spec, &mut rng)?;
        let report = validate(&model, &exploration, ValidationConfig::default())?;
        if report.passed {
            return Ok(model);
        }
        last = report
            .failures
            .iter()
            .map(|f| f.to_string())
            .collect::<Vec<_>>()
            .join("; ");
    }
    Err(Error::GenerationFailed {
        attempts: spec.retry_budget,
        stats: last,
    })
}
