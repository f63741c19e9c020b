//! Per-action three-view moments from exploration data, plus the exact
//! population moments of a known model.
//!
//! For every episode and every interior step `t` (1-based, `2 <= t <= H-1`)
//! where action `a` was taken, the views are the observations
//! `(z_{t-1}, z_t, z_{t+1})`. They are conditionally independent given the
//! latent state `s_{t+1}` reached by the step-`t` transition: `z_{t-1}` is
//! emitted by `s_t`, `z_t` by `s_{t+1}` and `z_{t+1}` by `s_{t+2}`.

use std::fmt::Write as _;
use std::ops::Range;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Tensor3;
use crate::pomdp::{
    occupancy_profile, simulate_episode, Episode, ExplorationPolicy, SeedTag, Step, TabularPomdp,
};

/// Episodes simulated per shard when collecting in parallel. Fixed so the
/// result does not depend on the worker count.
const SHARD: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleCount {
    Finite(u64),
    /// Exact expectations.
    Population,
}

impl SampleCount {
    pub fn finite(&self) -> Option<u64> {
        match self {
            SampleCount::Finite(n) => Some(*n),
            SampleCount::Population => None,
        }
    }

    /// Weight used when averaging across actions; population moments count
    /// as one unit each.
    pub fn weight(&self) -> f64 {
        match self {
            SampleCount::Finite(n) => *n as f64,
            SampleCount::Population => 1.0,
        }
    }
}

/// Moments for one middle action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewMoments {
    pub action: usize,
    /// Number of contributing triples.
    pub count: SampleCount,
    /// Distribution of the middle view.
    pub m1: DVector<f64>,
    pub m12: DMatrix<f64>,
    pub m13: DMatrix<f64>,
    pub m23: DMatrix<f64>,
    pub m123: Tensor3,
    /// Mean of `r_t · e_{z_{t-1}}`: the step reward against the observation
    /// emitted by the state that earned it.
    pub reward_cross: DVector<f64>,
    /// Episodes whose first action was this action.
    pub first_count: SampleCount,
    /// Distribution of `z_1` given `a_1 = action`.
    pub first_observation: DVector<f64>,
}

impl ViewMoments {
    pub fn num_observations(&self) -> usize {
        self.m1.len()
    }

    /// Count-weighted average of two finite-sample moment sets.
    pub fn merge(&self, other: &ViewMoments) -> Result<ViewMoments> {
        if self.action != other.action || self.num_observations() != other.num_observations() {
            return Err(Error::InvalidArgument(
                "merging moments of different actions or sizes".into(),
            ));
        }
        let (Some(n1), Some(n2)) = (self.count.finite(), other.count.finite()) else {
            return Err(Error::InvalidArgument(
                "population moments cannot be merged".into(),
            ));
        };
        let (f1, f2) = (
            self.first_count.finite().unwrap_or(0),
            other.first_count.finite().unwrap_or(0),
        );
        let w = |a: u64, b: u64| {
            let t = (a + b) as f64;
            if t == 0.0 {
                (0.0, 0.0)
            } else {
                (a as f64 / t, b as f64 / t)
            }
        };
        let (wa, wb) = w(n1, n2);
        let (fa, fb) = w(f1, f2);
        Ok(ViewMoments {
            action: self.action,
            count: SampleCount::Finite(n1 + n2),
            m1: &self.m1 * wa + &other.m1 * wb,
            m12: &self.m12 * wa + &other.m12 * wb,
            m13: &self.m13 * wa + &other.m13 * wb,
            m23: &self.m23 * wa + &other.m23 * wb,
            m123: Tensor3::from_fn(self.m123.dim(), |i, j, l| {
                self.m123.get(i, j, l) * wa + other.m123.get(i, j, l) * wb
            }),
            reward_cross: &self.reward_cross * wa + &other.reward_cross * wb,
            first_count: SampleCount::Finite(f1 + f2),
            first_observation: &self.first_observation * fa + &other.first_observation * fb,
        })
    }

    fn from_triple_weights(
        action: usize,
        count: SampleCount,
        m123: Tensor3,
        reward_cross: DVector<f64>,
        first_count: SampleCount,
        first_observation: DVector<f64>,
    ) -> Self {
        let z = m123.dim();
        let mut m12 = DMatrix::zeros(z, z);
        let mut m13 = DMatrix::zeros(z, z);
        let mut m23 = DMatrix::zeros(z, z);
        let mut m1 = DVector::zeros(z);
        for i in 0..z {
            for j in 0..z {
                for l in 0..z {
                    let p = m123.get(i, j, l);
                    m12[(i, j)] += p;
                    m13[(i, l)] += p;
                    m23[(j, l)] += p;
                    m1[j] += p;
                }
            }
        }
        Self {
            action,
            count,
            m1,
            m12,
            m13,
            m23,
            m123,
            reward_cross,
            first_count,
            first_observation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
struct ActionCounts {
    triples: Vec<u64>,
    triple_count: u64,
    reward_sums: Vec<f64>,
    first: Vec<u64>,
    first_count: u64,
}

/// Integer-count accumulator; a commutative monoid over episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccumulator {
    num_actions: usize,
    num_observations: usize,
    actions: Vec<ActionCounts>,
    episodes: u64,
}

impl MomentAccumulator {
    pub fn new(num_actions: usize, num_observations: usize) -> Self {
        let z = num_observations;
        let counts = ActionCounts {
            triples: vec![0; z * z * z],
            reward_sums: vec![0.0; z],
            first: vec![0; z],
            ..Default::default()
        };
        Self {
            num_actions,
            num_observations,
            actions: vec![counts; num_actions],
            episodes: 0,
        }
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    pub fn triple_count(&self, action: usize) -> u64 {
        self.actions[action].triple_count
    }

    pub fn add_episode(&mut self, episode: &Episode) -> Result<()> {
        let z = self.num_observations;
        let steps = &episode.steps;
        if let Some(bad) = steps
            .iter()
            .find(|s| s.action >= self.num_actions || s.observation >= z)
        {
            return Err(Error::InvalidArgument(format!(
                "episode step out of range: {bad:?}"
            )));
        }
        if let Some(first) = steps.first() {
            let c = &mut self.actions[first.action];
            c.first[first.observation] += 1;
            c.first_count += 1;
        }
        for t in 1..steps.len().saturating_sub(1) {
            let (prev, mid, next) = (&steps[t - 1], &steps[t], &steps[t + 1]);
            let c = &mut self.actions[mid.action];
            c.triples[(prev.observation * z + mid.observation) * z + next.observation] += 1;
            c.triple_count += 1;
            c.reward_sums[prev.observation] += mid.reward;
        }
        self.episodes += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &MomentAccumulator) -> Result<()> {
        if self.num_actions != other.num_actions || self.num_observations != other.num_observations
        {
            return Err(Error::InvalidArgument(
                "merging accumulators of different shapes".into(),
            ));
        }
        for (a, b) in self.actions.iter_mut().zip(&other.actions) {
            a.triples
                .iter_mut()
                .zip(&b.triples)
                .for_each(|(x, y)| *x += y);
            a.triple_count += b.triple_count;
            a.reward_sums
                .iter_mut()
                .zip(&b.reward_sums)
                .for_each(|(x, y)| *x += y);
            a.first.iter_mut().zip(&b.first).for_each(|(x, y)| *x += y);
            a.first_count += b.first_count;
        }
        self.episodes += other.episodes;
        Ok(())
    }

    pub fn moments(&self, action: usize) -> Result<ViewMoments> {
        if action >= self.num_actions {
            return Err(Error::InvalidArgument(format!(
                "action {action} out of range"
            )));
        }
        let c = &self.actions[action];
        if c.triple_count == 0 {
            return Err(Error::InsufficientData { action });
        }
        let z = self.num_observations;
        let n = c.triple_count as f64;
        let m123 = Tensor3::from_fn(z, |i, j, l| c.triples[(i * z + j) * z + l] as f64 / n);
        let reward_cross = DVector::from_fn(z, |i, _| c.reward_sums[i] / n);
        let first_observation = if c.first_count == 0 {
            DVector::zeros(z)
        } else {
            DVector::from_fn(z, |i, _| c.first[i] as f64 / c.first_count as f64)
        };
        Ok(ViewMoments::from_triple_weights(
            action,
            SampleCount::Finite(c.triple_count),
            m123,
            reward_cross,
            SampleCount::Finite(c.first_count),
            first_observation,
        ))
    }
}

/// Collected exploration trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeBatch {
    pub episodes: Vec<Episode>,
    pub exploration: ExplorationPolicy,
    pub horizon: usize,
    pub num_observations: usize,
}

impl EpisodeBatch {
    pub fn total_count(&self) -> usize {
        self.episodes.len()
    }

    pub fn merge(mut self, other: EpisodeBatch) -> Result<EpisodeBatch> {
        if self.horizon != other.horizon
            || self.num_observations != other.num_observations
            || self.exploration != other.exploration
        {
            return Err(Error::InvalidArgument(
                "merging batches with different shapes or policies".into(),
            ));
        }
        self.episodes.extend(other.episodes);
        Ok(self)
    }

    pub fn accumulate(&self) -> Result<MomentAccumulator> {
        let mut acc = MomentAccumulator::new(self.exploration.num_actions(), self.num_observations);
        for ep in &self.episodes {
            if ep.steps.len() != self.horizon {
                return Err(Error::InvalidArgument(format!(
                    "episode of length {} in a batch of horizon {}",
                    ep.steps.len(),
                    self.horizon
                )));
            }
            acc.add_episode(ep)?;
        }
        Ok(acc)
    }

    /// Writes the batch as a text log: a header, then one episode per line
    /// as `seed stream a z r a z r ...` (`- -` when untagged).
    pub fn to_log(&self) -> String {
        let mut out = String::from("# pacpomdp episodes v1\n");
        let _ = writeln!(
            out,
            "horizon {} observations {} mixture {}",
            self.horizon,
            self.num_observations,
            self.exploration
                .mixture()
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        );
        for ep in &self.episodes {
            match ep.seed_tag {
                Some(t) => {
                    let _ = write!(out, "{} {}", t.seed, t.stream);
                }
                None => out.push_str("- -"),
            }
            for s in &ep.steps {
                let _ = write!(out, " {} {} {}", s.action, s.observation, s.reward);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_log(text: &str) -> Result<EpisodeBatch> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let bad = |msg: &str| Error::Parse(format!("episode log: {msg}"));
        if lines.next() != Some("# pacpomdp episodes v1") {
            return Err(bad("missing header"));
        }
        let meta: Vec<&str> = lines
            .next()
            .ok_or_else(|| bad("missing metadata"))?
            .split_whitespace()
            .collect();
        if meta.len() < 5
            || meta[0] != "horizon"
            || meta[2] != "observations"
            || meta[4] != "mixture"
        {
            return Err(bad("malformed metadata line"));
        }
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| bad(&format!("bad integer {s:?}")))
        };
        let horizon = num(meta[1])?;
        let num_observations = num(meta[3])?;
        let mixture = meta[5..]
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| bad(&format!("bad probability {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let exploration = ExplorationPolicy::new(mixture)?;
        let mut episodes = Vec::new();
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 2 + 3 * horizon {
                return Err(bad(&format!(
                    "episode line has {} fields, expected {}",
                    f.len(),
                    2 + 3 * horizon
                )));
            }
            let seed_tag = match (f[0], f[1]) {
                ("-", "-") => None,
                (a, b) => Some(SeedTag::new(
                    a.parse().map_err(|_| bad("bad seed"))?,
                    b.parse().map_err(|_| bad("bad stream"))?,
                )),
            };
            let mut steps = Vec::with_capacity(horizon);
            for c in f[2..].chunks(3) {
                let step = Step {
                    action: num(c[0])?,
                    observation: num(c[1])?,
                    reward: c[2].parse().map_err(|_| bad("bad reward"))?,
                };
                if step.action >= exploration.num_actions() || step.observation >= num_observations
                {
                    return Err(bad("index out of range"));
                }
                steps.push(step);
            }
            episodes.push(Episode { steps, seed_tag });
        }
        Ok(EpisodeBatch {
            episodes,
            exploration,
            horizon,
            num_observations,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_log())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_log(&std::fs::read_to_string(path)?)
    }
}

/// Episodes `range` of the exploration batch seeded with `seed`.
pub fn collect_range(
    model: &TabularPomdp,
    exploration: &ExplorationPolicy,
    seed: u64,
    range: Range<u64>,
) -> Result<EpisodeBatch> {
    exploration.check_against(model)?;
    let mut policy = exploration.clone();
    let episodes = range
        .map(|i| simulate_episode(model, &mut policy, SeedTag::new(seed, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EpisodeBatch {
        episodes,
        exploration: exploration.clone(),
        horizon: model.horizon(),
        num_observations: model.num_observations(),
    })
}

/// Runs `episodes` exploration episodes and keeps them.
pub fn collect_exploration(
    model: &TabularPomdp,
    exploration: &ExplorationPolicy,
    episodes: u64,
    seed: u64,
) -> Result<EpisodeBatch> {
    if episodes == 0 {
        return Err(Error::InvalidArgument(
            "at least one exploration episode is required".into(),
        ));
    }
    collect_range(model, exploration, seed, 0..episodes)
}

/// Runs exploration and folds the episodes straight into moment counts,
/// sharded over the current rayon pool. Counts are identical to
/// accumulating `collect_exploration(model, exploration, episodes, seed)`;
/// reward sums agree up to summation order. Shards are fixed-size and
/// merged in order, so the result does not depend on the thread count.
pub fn explore_moments(
    model: &TabularPomdp,
    exploration: &ExplorationPolicy,
    episodes: u64,
    seed: u64,
) -> Result<MomentAccumulator> {
    if episodes == 0 {
        return Err(Error::InvalidArgument(
            "at least one exploration episode is required".into(),
        ));
    }
    exploration.check_against(model)?;
    let shards = episodes.div_ceil(SHARD);
    let parts = (0..shards)
        .into_par_iter()
        .map(|k| {
            let mut acc = MomentAccumulator::new(model.num_actions(), model.num_observations());
            let mut policy = exploration.clone();
            for i in k * SHARD..((k + 1) * SHARD).min(episodes) {
                acc.add_episode(&simulate_episode(
                    model,
                    &mut policy,
                    SeedTag::new(seed, i),
                )?)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = MomentAccumulator::new(model.num_actions(), model.num_observations());
    for p in &parts {
        total.merge(p)?;
    }
    Ok(total)
}

/// Exact expectations of the empirical moments under `exploration`, one
/// entry per action.
pub fn population_moments(
    model: &TabularPomdp,
    exploration: &ExplorationPolicy,
) -> Result<Vec<ViewMoments>> {
    let occupancy = occupancy_profile(model, exploration)?;
    let n = model.num_states();
    let z = model.num_observations();
    let h = model.horizon();
    let o = model.observation();
    let mean_t = model.mean_transition(exploration.mixture());
    // C3[z, s'] = P(z_{t+1} = z | s_{t+1} = s')
    let c3 = o * &mean_t;
    let interior = (h - 2) as f64;
    // average occupancy of s_t over interior steps t = 2..H-1
    let pre: DVector<f64> = occupancy[1..h - 1]
        .iter()
        .fold(DVector::zeros(n), |acc, d| acc + d)
        / interior;

    let mut out = Vec::with_capacity(model.num_actions());
    for a in 0..model.num_actions() {
        let t = model.transition(a);
        let mut m123 = Tensor3::zeros(z);
        for s in 0..n {
            if pre[s] == 0.0 {
                continue;
            }
            for s2 in 0..n {
                let w = pre[s] * t[(s2, s)];
                if w == 0.0 {
                    continue;
                }
                for i in 0..z {
                    let wi = w * o[(i, s)];
                    if wi == 0.0 {
                        continue;
                    }
                    for j in 0..z {
                        let wij = wi * o[(j, s2)];
                        if wij == 0.0 {
                            continue;
                        }
                        for l in 0..z {
                            *m123.get_mut(i, j, l) += wij * c3[(l, s2)];
                        }
                    }
                }
            }
        }
        let weighted_reward = DVector::from_fn(n, |s, _| pre[s] * model.reward(a)[s]);
        let reward_cross = o * weighted_reward;
        let first_observation = o * (t * model.initial_belief());
        let count = if exploration.mixture()[a] > 0.0 {
            SampleCount::Population
        } else {
            SampleCount::Finite(0)
        };
        out.push(ViewMoments::from_triple_weights(
            a,
            count,
            m123,
            reward_cross,
            count,
            first_observation,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::make_tiger;

    fn alternating_chain() -> TabularPomdp {
        let t = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        TabularPomdp::new(
            vec![t],
            DMatrix::identity(2, 2),
            vec![DVector::from_vec(vec![0.25, 0.75])],
            DVector::from_vec(vec![1.0, 0.0]),
            4,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn alternating_chain_two_step_correspondence() {
        let m = alternating_chain();
        let batch = collect_exploration(&m, &ExplorationPolicy::uniform(1), 1, 0).unwrap();
        // states 0,1,0,1,0 -> observations 1,0,1,0; triples (1,0,1) and (0,1,0)
        let vm = batch.accumulate().unwrap().moments(0).unwrap();
        assert_eq!(vm.count, SampleCount::Finite(2));
        assert_eq!(vm.m13, DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]));
        assert_eq!(vm.m123.get(1, 0, 1), 0.5);
        assert_eq!(vm.m123.get(0, 1, 0), 0.5);
        // rewards at t=2 (state 1) against z_1 = 1, at t=3 (state 0) against z_2 = 0
        assert_eq!(vm.reward_cross, DVector::from_vec(vec![0.125, 0.375]));
        assert_eq!(vm.first_observation, DVector::from_vec(vec![0.0, 1.0]));
    }

    #[test]
    fn population_matches_hand_computation_on_identity_chain() {
        let t = DMatrix::from_row_slice(2, 2, &[0.9, 0.3, 0.1, 0.7]);
        let m = TabularPomdp::new(
            vec![t.clone()],
            DMatrix::identity(2, 2),
            vec![DVector::zeros(2)],
            DVector::from_vec(vec![0.6, 0.4]),
            3,
            1.0,
        )
        .unwrap();
        let pm = &population_moments(&m, &ExplorationPolicy::uniform(1)).unwrap()[0];
        let occ2 = &t * m.initial_belief();
        for i in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    let expected = occ2[i] * t[(j, i)] * t[(l, j)];
                    assert!((pm.m123.get(i, j, l) - expected).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn identical_triples_give_point_mass() {
        let ep = Episode {
            steps: vec![
                Step {
                    action: 0,
                    observation: 1,
                    reward: 0.0,
                },
                Step {
                    action: 0,
                    observation: 0,
                    reward: 0.0,
                },
                Step {
                    action: 0,
                    observation: 1,
                    reward: 0.0,
                },
            ],
            seed_tag: None,
        };
        let mut acc = MomentAccumulator::new(1, 2);
        for _ in 0..5 {
            acc.add_episode(&ep).unwrap();
        }
        let vm = acc.moments(0).unwrap();
        assert_eq!(vm.m123.get(1, 0, 1), 1.0);
        assert_eq!(vm.m123.sum(), 1.0);
    }

    #[test]
    fn missing_action_is_insufficient_data() {
        let m = make_tiger(0.85, 3).unwrap();
        let batch = collect_exploration(
            &m,
            &ExplorationPolicy::new(vec![1.0, 0.0, 0.0]).unwrap(),
            10,
            1,
        )
        .unwrap();
        let acc = batch.accumulate().unwrap();
        assert!(matches!(
            acc.moments(1),
            Err(Error::InsufficientData { action: 1 })
        ));
    }

    #[test]
    fn streamed_and_collected_moments_agree() {
        let m = make_tiger(0.85, 5).unwrap();
        let ex = ExplorationPolicy::uniform(3);
        let streamed = explore_moments(&m, &ex, 10_000, 9).unwrap();
        let collected = collect_exploration(&m, &ex, 10_000, 9)
            .unwrap()
            .accumulate()
            .unwrap();
        // counts match exactly; reward sums only up to summation order
        assert_eq!(streamed.episodes(), collected.episodes());
        for a in 0..3 {
            let (x, y) = (streamed.moments(a).unwrap(), collected.moments(a).unwrap());
            assert_eq!(x.count, y.count);
            assert_eq!(x.m123, y.m123);
            assert!((&x.reward_cross - &y.reward_cross).amax() < 1e-12);
        }
    }

    #[test]
    fn log_round_trip() {
        let m = make_tiger(0.85, 3).unwrap();
        let batch = collect_exploration(&m, &ExplorationPolicy::uniform(3), 20, 3).unwrap();
        assert_eq!(EpisodeBatch::from_log(&batch.to_log()).unwrap(), batch);
        assert!(EpisodeBatch::from_log("garbage").is_err());
    }

    #[test]
    fn split_seed_batches_merge_into_full_batch() {
        let m = make_tiger(0.85, 4).unwrap();
        let ex = ExplorationPolicy::uniform(3);
        let full = collect_exploration(&m, &ex, 100, 5).unwrap();
        let a = collect_range(&m, &ex, 5, 0..40).unwrap();
        let b = collect_range(&m, &ex, 5, 40..100).unwrap();
        assert_eq!(a.merge(b).unwrap(), full);
    }
}
