//! Ground-truth tabular POMDP representation, validation, belief tracking
//! and simulation.
//!
//! Conventions used throughout the crate:
//!
//! * `T_a[(s', s)]` is the probability of moving to `s'` from `s` under `a`
//!   (columns are stochastic).
//! * `O[(z, s)]` is the probability of emitting `z` in state `s`.
//! * At step `t` the agent is in `s_t`, picks `a_t`, earns `R_a(s_t)`, the
//!   state moves to `s_{t+1}`, and the observation `z_t` is emitted by
//!   `s_{t+1}`.

mod file;
mod simulate;
mod validate;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use file::ModelFile;
pub use simulate::{
    occupancy_profile, simulate_episode, Episode, EpisodePolicy, ExplorationPolicy, SeedTag, Step,
};
pub use validate::{validate, ValidationConfig, ValidationFailure, ValidationReport};

/// Tolerance for stochastic columns of an in-memory model.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Tolerance accepted when loading a model file; columns are renormalized.
pub const FILE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TabularPomdp {
    horizon: usize,
    reward_max: f64,
    transitions: Vec<DMatrix<f64>>,
    observation: DMatrix<f64>,
    rewards: Vec<DVector<f64>>,
    initial_belief: DVector<f64>,
}

fn check_distribution(
    v: impl Iterator<Item = f64>,
    tol: f64,
    what: impl Fn() -> String,
) -> Result<()> {
    let mut sum = 0.0;
    for x in v {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::InvalidModel(format!("{} has entry {x}", what())));
        }
        sum += x;
    }
    if (sum - 1.0).abs() > tol {
        return Err(Error::InvalidModel(format!("{} sums to {sum}", what())));
    }
    Ok(())
}

/// Rescales columns that are off the simplex by more than
/// `STOCHASTIC_TOL`. Columns already within it are left bit-for-bit alone so
/// that saving and reloading a model is exact.
fn normalize_columns(m: &mut DMatrix<f64>) {
    for mut c in m.column_iter_mut() {
        let s: f64 = c.sum();
        if (s - 1.0).abs() > STOCHASTIC_TOL {
            c /= s;
        }
    }
}

impl TabularPomdp {
    pub fn new(
        transitions: Vec<DMatrix<f64>>,
        observation: DMatrix<f64>,
        rewards: Vec<DVector<f64>>,
        initial_belief: DVector<f64>,
        horizon: usize,
        reward_max: f64,
    ) -> Result<Self> {
        Self::with_tolerance(
            transitions,
            observation,
            rewards,
            initial_belief,
            horizon,
            reward_max,
            STOCHASTIC_TOL,
        )
    }

    /// Builds a model accepting columns within `tol` of the simplex, then
    /// renormalizes them.
    pub fn with_tolerance(
        mut transitions: Vec<DMatrix<f64>>,
        mut observation: DMatrix<f64>,
        rewards: Vec<DVector<f64>>,
        mut initial_belief: DVector<f64>,
        horizon: usize,
        reward_max: f64,
        tol: f64,
    ) -> Result<Self> {
        let n = initial_belief.len();
        let a = transitions.len();
        if n == 0 || a == 0 {
            return Err(Error::InvalidModel(
                "model needs at least one state and one action".into(),
            ));
        }
        if horizon < 3 {
            return Err(Error::InvalidModel(format!("horizon {horizon} < 3")));
        }
        if !(reward_max.is_finite() && reward_max > 0.0) {
            return Err(Error::InvalidModel(format!(
                "reward_max {reward_max} must be positive"
            )));
        }
        if rewards.len() != a {
            return Err(Error::InvalidModel(format!(
                "{} reward vectors for {a} actions",
                rewards.len()
            )));
        }
        if observation.ncols() != n || observation.nrows() == 0 {
            return Err(Error::InvalidModel(format!(
                "observation matrix is {}x{}, expected Zx{n}",
                observation.nrows(),
                observation.ncols()
            )));
        }
        for (i, t) in transitions.iter().enumerate() {
            if t.nrows() != n || t.ncols() != n {
                return Err(Error::InvalidModel(format!(
                    "T[{i}] is {}x{}, expected {n}x{n}",
                    t.nrows(),
                    t.ncols()
                )));
            }
            for s in 0..n {
                check_distribution(t.column(s).iter().copied(), tol, || {
                    format!("T[{i}] column {s}")
                })?;
            }
        }
        for s in 0..n {
            check_distribution(observation.column(s).iter().copied(), tol, || {
                format!("O column {s}")
            })?;
        }
        check_distribution(initial_belief.iter().copied(), tol, || "b1".to_string())?;
        for (i, r) in rewards.iter().enumerate() {
            if r.len() != n {
                return Err(Error::InvalidModel(format!(
                    "R[{i}] has length {}, expected {n}",
                    r.len()
                )));
            }
            if let Some(x) = r.iter().find(|x| !(**x >= 0.0 && **x <= reward_max)) {
                return Err(Error::InvalidModel(format!(
                    "R[{i}] entry {x} outside [0, {reward_max}]"
                )));
            }
        }
        if tol > STOCHASTIC_TOL {
            transitions.iter_mut().for_each(normalize_columns);
            normalize_columns(&mut observation);
            let s = initial_belief.sum();
            if (s - 1.0).abs() > STOCHASTIC_TOL {
                initial_belief /= s;
            }
        }
        Ok(Self {
            horizon,
            reward_max,
            transitions,
            observation,
            rewards,
            initial_belief,
        })
    }

    pub fn num_states(&self) -> usize {
        self.initial_belief.len()
    }

    pub fn num_actions(&self) -> usize {
        self.transitions.len()
    }

    pub fn num_observations(&self) -> usize {
        self.observation.nrows()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn reward_max(&self) -> f64 {
        self.reward_max
    }

    pub fn transition(&self, action: usize) -> &DMatrix<f64> {
        &self.transitions[action]
    }

    pub fn transitions(&self) -> &[DMatrix<f64>] {
        &self.transitions
    }

    pub fn observation(&self) -> &DMatrix<f64> {
        &self.observation
    }

    pub fn reward(&self, action: usize) -> &DVector<f64> {
        &self.rewards[action]
    }

    pub fn rewards(&self) -> &[DVector<f64>] {
        &self.rewards
    }

    pub fn initial_belief(&self) -> &DVector<f64> {
        &self.initial_belief
    }

    /// Same model with a different horizon.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        if horizon < 3 {
            return Err(Error::InvalidModel(format!("horizon {horizon} < 3")));
        }
        Ok(Self {
            horizon,
            ..self.clone()
        })
    }

    /// Same model with rewards replaced.
    pub fn with_rewards(&self, rewards: Vec<DVector<f64>>) -> Result<Self> {
        Self::new(
            self.transitions.clone(),
            self.observation.clone(),
            rewards,
            self.initial_belief.clone(),
            self.horizon,
            self.reward_max,
        )
    }

    /// Relabels latent states: old state `s` becomes `perm[s]`.
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        let n = self.num_states();
        assert_eq!(perm.len(), n);
        let mut transitions = Vec::with_capacity(self.num_actions());
        for t in &self.transitions {
            let mut p = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    p[(perm[i], perm[j])] = t[(i, j)];
                }
            }
            transitions.push(p);
        }
        let mut observation = DMatrix::zeros(self.num_observations(), n);
        for (s, &to) in perm.iter().enumerate() {
            observation.set_column(to, &self.observation.column(s));
        }
        let permute = |v: &DVector<f64>| {
            let mut out = DVector::zeros(n);
            for s in 0..n {
                out[perm[s]] = v[s];
            }
            out
        };
        Self {
            horizon: self.horizon,
            reward_max: self.reward_max,
            transitions,
            observation,
            rewards: self.rewards.iter().map(permute).collect(),
            initial_belief: permute(&self.initial_belief),
        }
    }

    /// Mixture `Σ_a π(a) T_a`.
    pub fn mean_transition(&self, mixture: &[f64]) -> DMatrix<f64> {
        let n = self.num_states();
        self.transitions
            .iter()
            .zip(mixture)
            .fold(DMatrix::zeros(n, n), |acc, (t, w)| acc + t * *w)
    }

    /// Unnormalized predicted joint `diag(O[z, ·]) T_a b`.
    pub fn predict_joint(
        &self,
        b: &DVector<f64>,
        action: usize,
        observation: usize,
    ) -> DVector<f64> {
        let predicted = &self.transitions[action] * b;
        DVector::from_fn(self.num_states(), |s, _| {
            predicted[s] * self.observation[(observation, s)]
        })
    }

    /// Exact Bayes filter step.
    pub fn belief_update(&self, b: &Belief, action: usize, observation: usize) -> Result<Belief> {
        if action >= self.num_actions()
            || observation >= self.num_observations()
            || b.len() != self.num_states()
        {
            return Err(Error::InvalidArgument(format!(
                "belief update with action {action}, observation {observation}, belief of length {}",
                b.len()
            )));
        }
        let joint = self.predict_joint(b.as_vector(), action, observation);
        let norm = joint.sum();
        if !(norm > 0.0) {
            return Err(Error::ImpossibleObservation {
                belief: b.as_vector().iter().copied().collect(),
                action,
                observation,
            });
        }
        Ok(Belief(joint / norm))
    }
}

/// Probability vector over latent states.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief(DVector<f64>);

impl Belief {
    pub fn new(v: DVector<f64>) -> Result<Self> {
        check_distribution(v.iter().copied(), STOCHASTIC_TOL, || "belief".to_string())?;
        Ok(Self(v))
    }

    pub fn uniform(n: usize) -> Self {
        Self(DVector::from_element(n, 1.0 / n as f64))
    }

    pub fn point(n: usize, s: usize) -> Self {
        let mut v = DVector::zeros(n);
        v[s] = 1.0;
        Self(v)
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
