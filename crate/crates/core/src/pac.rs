//! Episode-count calculator, simulation-lemma value-error bound and
//! explore/exploit episode accounting.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::column_l1;
use crate::pomdp::{TabularPomdp, ValidationReport};

/// One factor of the episode-count formula: `parameter^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormulaTerm {
    pub parameter: &'static str,
    pub exponent: f64,
}

const fn term(parameter: &'static str, exponent: f64) -> FormulaTerm {
    FormulaTerm {
        parameter,
        exponent,
    }
}

/// The episode-count formula
///
/// ```text
/// N = C · Π parameter^exponent · ln(1/δ) / ε²
/// ```
///
/// The exponents are placeholders of the right polynomial shape; the
/// theorem's exact powers and constant are not pinned down, so every power
/// lives in this table and `C` is an override.
pub const FORMULA: [FormulaTerm; 9] = [
    term("states", 4.0),
    term("actions", 1.0),
    term("observations", 2.0),
    term("horizon", 4.0),
    term("reward_max", 2.0),
    term("sigma_min_o", -6.0),
    term("sigma_min_t", -2.0),
    term("separation_gap", -2.0),
    term("min_occupancy", -2.0),
];

/// Names accepted in `PacConfig::constant_overrides`.
pub const CONSTANTS: [&str; 1] = ["leading"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelStats {
    pub sigma_min_o: f64,
    pub sigma_min_t: f64,
    pub separation_gap: f64,
    pub min_occupancy: f64,
}

impl ModelStats {
    /// Transition conditioning is the best action's smallest singular value:
    /// actions that reset the state have rank one and would otherwise zero
    /// the statistic for any domain that has them.
    pub fn from_report(report: &ValidationReport) -> Self {
        Self {
            sigma_min_o: report.sigma_min_o,
            sigma_min_t: report
                .per_action_sigma_min_t
                .iter()
                .copied()
                .fold(0.0, f64::max),
            separation_gap: report.observation_separation_gap,
            min_occupancy: report.min_state_occupancy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sizes {
    pub states: usize,
    pub actions: usize,
    pub observations: usize,
    pub horizon: usize,
    pub reward_max: f64,
}

impl Sizes {
    pub fn of(model: &TabularPomdp) -> Self {
        Self {
            states: model.num_states(),
            actions: model.num_actions(),
            observations: model.num_observations(),
            horizon: model.horizon(),
            reward_max: model.reward_max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub stats: ModelStats,
    pub sizes: Sizes,
    #[serde(default)]
    pub constant_overrides: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRequirement {
    /// The formula's value before rounding.
    pub raw: f64,
    /// `ceil(raw)`, saturating at `u64::MAX`.
    pub episodes: u64,
}

impl PacConfig {
    fn parameter(&self, name: &str) -> f64 {
        match name {
            "states" => self.sizes.states as f64,
            "actions" => self.sizes.actions as f64,
            "observations" => self.sizes.observations as f64,
            "horizon" => self.sizes.horizon as f64,
            "reward_max" => self.sizes.reward_max,
            "sigma_min_o" => self.stats.sigma_min_o,
            "sigma_min_t" => self.stats.sigma_min_t,
            "separation_gap" => self.stats.separation_gap,
            "min_occupancy" => self.stats.min_occupancy,
            other => unreachable!("formula parameter {other}"),
        }
    }

    pub fn constant(&self, name: &str) -> f64 {
        self.constant_overrides.get(name).copied().unwrap_or(1.0)
    }

    pub fn check(&self) -> Result<()> {
        let bad = |what: &str, v: f64| {
            Err(Error::InvalidArgument(format!(
                "{what} = {v} is out of range"
            )))
        };
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon", self.epsilon);
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta", self.delta);
        }
        for t in FORMULA {
            let v = self.parameter(t.parameter);
            if !(v > 0.0 && v.is_finite()) {
                return bad(t.parameter, v);
            }
        }
        for (name, &v) in &self.constant_overrides {
            if !CONSTANTS.contains(&name.as_str()) {
                return Err(Error::InvalidArgument(format!("unknown constant {name}")));
            }
            if !(v > 0.0 && v.is_finite()) {
                return bad(name, v);
            }
        }
        Ok(())
    }
}

pub fn required_episodes(config: &PacConfig) -> Result<EpisodeRequirement> {
    config.check()?;
    let poly: f64 = FORMULA
        .iter()
        .map(|t| config.parameter(t.parameter).powf(t.exponent))
        .product();
    let raw = config.constant("leading") * poly * (1.0 / config.delta).ln()
        / (config.epsilon * config.epsilon);
    let episodes = if raw >= u64::MAX as f64 {
        u64::MAX
    } else {
        raw.ceil() as u64
    };
    Ok(EpisodeRequirement { raw, episodes })
}

/// Parameter distances between two models over the same labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelErrors {
    /// Largest L1 distance between matching transition columns.
    pub transition: f64,
    /// Largest L1 distance between matching observation columns.
    pub observation: f64,
    pub reward: f64,
    /// L1 distance between initial beliefs.
    pub initial_belief: f64,
}

impl ModelErrors {
    pub fn largest(&self) -> f64 {
        self.transition
            .max(self.observation)
            .max(self.reward)
            .max(self.initial_belief)
    }
}

fn max_column_l1(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|j| column_l1(a, j, b, j))
        .fold(0.0, f64::max)
}

pub fn model_errors(a: &TabularPomdp, b: &TabularPomdp) -> ModelErrors {
    ModelErrors {
        transition: a
            .transitions()
            .iter()
            .zip(b.transitions())
            .map(|(x, y)| max_column_l1(x, y))
            .fold(0.0, f64::max),
        observation: max_column_l1(a.observation(), b.observation()),
        reward: a
            .rewards()
            .iter()
            .zip(b.rewards())
            .map(|(x, y)| (x - y).amax())
            .fold(0.0, f64::max),
        initial_belief: (a.initial_belief() - b.initial_belief()).lp_norm(1),
    }
}

/// `B = H·ε_R + R_max·H·ε_b + R_max·H(H+1)/2·(ε_T + ε_O)`: bounds the value
/// difference of any fixed policy evaluated on two models whose parameters
/// differ by at most these errors.
pub fn simulation_gap_bound(errors: &ModelErrors, horizon: usize, reward_max: f64) -> f64 {
    let h = horizon as f64;
    h * errors.reward
        + reward_max * h * errors.initial_belief
        + reward_max * h * (h + 1.0) / 2.0 * (errors.transition + errors.observation)
}

/// A finished explore-then-exploit run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub exploration_episodes: u64,
    pub exploitation_episodes: u64,
    pub epsilon: f64,
    /// Exact value of the exploitation policy in the environment.
    pub exploitation_value: f64,
    /// Optimal value, when the environment's model is known.
    pub oracle_value: Option<f64>,
    pub required_episodes: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountingReport {
    /// Every exploration episode counts as possibly non-near-optimal.
    pub flagged_exploration: u64,
    /// `None` when no oracle value is available.
    pub flagged_exploitation: Option<u64>,
    pub exploitation_gap: Option<f64>,
    pub within_epsilon: Option<bool>,
    /// Whether the run explored at least the required number of episodes.
    pub explored_enough: Option<bool>,
}

pub fn pac_episode_accounting(log: &RunLog) -> AccountingReport {
    let gap = log.oracle_value.map(|o| o - log.exploitation_value);
    let within = gap.map(|g| g <= log.epsilon);
    AccountingReport {
        flagged_exploration: log.exploration_episodes,
        flagged_exploitation: within.map(|ok| if ok { 0 } else { log.exploitation_episodes }),
        exploitation_gap: gap,
        within_epsilon: within,
        explored_enough: log.required_episodes.map(|r| log.exploration_episodes >= r),
    }
}
