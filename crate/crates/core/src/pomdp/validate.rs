use std::fmt;

use serde::{Deserialize, Serialize};

use super::{occupancy_profile, ExplorationPolicy, TabularPomdp};
use crate::error::Result;
use crate::linalg::{column_l1, sigma_min};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationConfig {
    /// Every condition must exceed this floor to pass.
    pub floor: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self { floor: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ValidationFailure {
    ObservationRank {
        sigma_min: f64,
    },
    TransitionRank {
        action: usize,
        sigma_min: f64,
    },
    Separation {
        first: usize,
        second: usize,
        distance: f64,
    },
    Occupancy {
        state: usize,
        step: usize,
        probability: f64,
    },
}

impl fmt::Display for ValidationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ObservationRank { sigma_min } => {
                write!(
                    f,
                    "observation rank: smallest singular value of O is {sigma_min:e}"
                )
            }
            Self::TransitionRank { action, sigma_min } => {
                write!(
                    f,
                    "transition rank: smallest singular value of T[{action}] is {sigma_min:e}"
                )
            }
            Self::Separation {
                first,
                second,
                distance,
            } => {
                write!(
                    f,
                    "separation: O columns {first} and {second} are {distance:e} apart in L1"
                )
            }
            Self::Occupancy {
                state,
                step,
                probability,
            } => {
                write!(
                    f,
                    "occupancy: state {state} at step {step} has probability {probability:e}"
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub sigma_min_o: f64,
    pub per_action_sigma_min_t: Vec<f64>,
    /// Minimum L1 distance between columns of O. A single-state model
    /// reports 2, the largest possible distance.
    pub observation_separation_gap: f64,
    pub min_state_occupancy: f64,
    pub passed: bool,
    pub failures: Vec<ValidationFailure>,
}

/// Checks the rank, separation and reachability conditions the learner
/// relies on. Exploration is used only for the occupancy condition.
pub fn validate(
    model: &TabularPomdp,
    exploration: &ExplorationPolicy,
    config: ValidationConfig,
) -> Result<ValidationReport> {
    let n = model.num_states();
    let mut failures = Vec::new();

    let sigma_min_o = sigma_min(model.observation(), n);
    if sigma_min_o <= config.floor {
        failures.push(ValidationFailure::ObservationRank {
            sigma_min: sigma_min_o,
        });
    }

    let per_action_sigma_min_t: Vec<f64> = model
        .transitions()
        .iter()
        .map(|t| sigma_min(t, n))
        .collect();
    for (action, &s) in per_action_sigma_min_t.iter().enumerate() {
        if s <= config.floor {
            failures.push(ValidationFailure::TransitionRank {
                action,
                sigma_min: s,
            });
        }
    }

    let o = model.observation();
    let mut closest: Option<(usize, usize, f64)> = None;
    for i in 0..n {
        for j in i + 1..n {
            let d = column_l1(o, i, o, j);
            if closest.is_none_or(|(_, _, g)| d < g) {
                closest = Some((i, j, d));
            }
        }
    }
    let gap = closest.map_or(2.0, |c| c.2);
    if let Some((first, second, distance)) = closest.filter(|c| c.2 <= config.floor) {
        failures.push(ValidationFailure::Separation {
            first,
            second,
            distance,
        });
    }

    let occupancy = occupancy_profile(model, exploration)?;
    let mut min_occ = f64::INFINITY;
    let mut argmin = (0, 0);
    for (step, d) in occupancy.iter().enumerate() {
        for (state, &p) in d.iter().enumerate() {
            if p < min_occ {
                min_occ = p;
                argmin = (state, step + 1);
            }
        }
    }
    let min_occ = min_occ.max(0.0);
    if min_occ <= config.floor {
        failures.push(ValidationFailure::Occupancy {
            state: argmin.0,
            step: argmin.1,
            probability: min_occ,
        });
    }

    Ok(ValidationReport {
        sigma_min_o,
        per_action_sigma_min_t,
        observation_separation_gap: gap.max(0.0),
        min_state_occupancy: min_occ,
        passed: failures.is_empty(),
        failures,
    })
}
