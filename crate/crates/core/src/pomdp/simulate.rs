use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_distribution, TabularPomdp};
use crate::error::{Error, Result};

/// Identifies the random stream an episode was drawn from. Episode `i` of a
/// batch seeded with `seed` always uses stream `i`, so batches can be split
/// and merged without changing any episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedTag {
    pub seed: u64,
    pub stream: u64,
}

impl SeedTag {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub action: usize,
    pub observation: usize,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub steps: Vec<Step>,
    pub seed_tag: Option<SeedTag>,
}

impl Episode {
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }
}

/// Anything that picks actions during an episode.
pub trait EpisodePolicy {
    fn start(&mut self);
    /// `step` is zero-based.
    fn choose<R: Rng + ?Sized>(&mut self, step: usize, rng: &mut R) -> usize;
    fn observe(&mut self, action: usize, observation: usize);
}

/// Memoryless, step-independent action mixture used for exploration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationPolicy {
    mixture: Vec<f64>,
}

impl ExplorationPolicy {
    pub fn uniform(num_actions: usize) -> Self {
        Self {
            mixture: vec![1.0 / num_actions as f64; num_actions],
        }
    }

    pub fn new(mixture: Vec<f64>) -> Result<Self> {
        if mixture.is_empty() {
            return Err(Error::InvalidArgument("empty action mixture".into()));
        }
        check_distribution(mixture.iter().copied(), 1e-9, || {
            "action mixture".to_string()
        })?;
        Ok(Self { mixture })
    }

    pub fn mixture(&self) -> &[f64] {
        &self.mixture
    }

    pub fn num_actions(&self) -> usize {
        self.mixture.len()
    }

    pub(crate) fn check_against(&self, model: &TabularPomdp) -> Result<()> {
        if self.mixture.len() != model.num_actions() {
            return Err(Error::InvalidArgument(format!(
                "exploration mixture covers {} actions, model has {}",
                self.mixture.len(),
                model.num_actions()
            )));
        }
        Ok(())
    }
}

impl EpisodePolicy for ExplorationPolicy {
    fn start(&mut self) {}

    fn choose<R: Rng + ?Sized>(&mut self, _step: usize, rng: &mut R) -> usize {
        sample(self.mixture.iter().copied(), rng)
    }

    fn observe(&mut self, _action: usize, _observation: usize) {}
}

pub(crate) fn sample<R: Rng + ?Sized>(probs: impl Iterator<Item = f64>, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Runs one episode of `model` under `policy`, drawing from the stream
/// identified by `tag`.
pub fn simulate_episode<P: EpisodePolicy>(
    model: &TabularPomdp,
    policy: &mut P,
    tag: SeedTag,
) -> Result<Episode> {
    let mut rng = tag.rng();
    let mut episode = simulate_with_rng(model, policy, &mut rng)?;
    episode.seed_tag = Some(tag);
    Ok(episode)
}

pub(crate) fn simulate_with_rng<P: EpisodePolicy, R: Rng + ?Sized>(
    model: &TabularPomdp,
    policy: &mut P,
    rng: &mut R,
) -> Result<Episode> {
    let mut state = sample(model.initial_belief().iter().copied(), rng);
    policy.start();
    let mut steps = Vec::with_capacity(model.horizon());
    for t in 0..model.horizon() {
        let action = policy.choose(t, rng);
        if action >= model.num_actions() {
            return Err(Error::InvalidArgument(format!(
                "policy chose action {action}"
            )));
        }
        let reward = model.reward(action)[state];
        state = sample(model.transition(action).column(state).iter().copied(), rng);
        let observation = sample(model.observation().column(state).iter().copied(), rng);
        policy.observe(action, observation);
        steps.push(Step {
            action,
            observation,
            reward,
        });
    }
    Ok(Episode {
        steps,
        seed_tag: None,
    })
}

/// Latent-state distribution at each step `1..=H` under exploration.
pub fn occupancy_profile(
    model: &TabularPomdp,
    exploration: &ExplorationPolicy,
) -> Result<Vec<DVector<f64>>> {
    exploration.check_against(model)?;
    let mean = model.mean_transition(exploration.mixture());
    let mut out = Vec::with_capacity(model.horizon());
    let mut d = model.initial_belief().clone();
    for _ in 0..model.horizon() {
        out.push(d.clone());
        d = &mean * d;
    }
    Ok(out)
}
