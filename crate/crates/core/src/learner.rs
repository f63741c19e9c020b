//! Model estimation from per-action moments: decompose each action, align
//! latent labels, then fill in the actions whose three-view structure is not
//! identifiable.

use log::debug;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::alignment::{align, apply_alignment, AlignmentConfig, AlignmentResult};
use crate::error::{Error, Result};
use crate::moments::ViewMoments;
use crate::pomdp::{TabularPomdp, FILE_TOL};
use crate::spectral::{
    decompose_action, recover_initial_belief, transitions_given_observation, ActionDiagnostics,
    ActionEstimate, SpectralConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "route", rename_all = "snake_case")]
pub enum ActionRoute {
    /// Recovered from the action's own tensor decomposition.
    Decomposed { diagnostics: ActionDiagnostics },
    /// The action's past view does not determine the middle state (e.g. a
    /// reset); transitions and rewards were solved against the shared
    /// observation estimate.
    SharedObservation { reason: String },
    /// Single latent state.
    Trivial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    pub o_hat: DMatrix<f64>,
    pub t_hat: Vec<DMatrix<f64>>,
    pub r_hat: Vec<DVector<f64>>,
    pub b1_hat: DVector<f64>,
    pub w_hat: Vec<Option<DVector<f64>>>,
    pub reference_action: usize,
    /// Actions in the order they were passed to `align`.
    pub decomposed_actions: Vec<usize>,
    pub alignment: Option<AlignmentResult>,
    pub routes: Vec<ActionRoute>,
}

impl SpectralEstimate {
    pub fn to_model(&self, horizon: usize, reward_max: f64) -> Result<TabularPomdp> {
        TabularPomdp::with_tolerance(
            self.t_hat.clone(),
            self.o_hat.clone(),
            self.r_hat.clone(),
            self.b1_hat.clone(),
            horizon,
            reward_max,
            FILE_TOL,
        )
    }

    /// Everything except the parameters, for the diagnostics side-file.
    pub fn diagnostics_json(&self) -> serde_json::Value {
        serde_json::json!({
            "reference_action": self.reference_action,
            "decomposed_actions": self.decomposed_actions,
            "alignment": self.alignment,
            "routes": self.routes,
            "middle_state_weights": self.w_hat,
        })
    }
}

fn single_state(moments: &[ViewMoments], reward_max: f64) -> SpectralEstimate {
    let total: f64 = moments.iter().map(|m| m.count.weight()).sum();
    let z = moments[0].num_observations();
    let o = moments.iter().fold(DVector::zeros(z), |acc, m| {
        acc + &m.m1 * (m.count.weight() / total)
    });
    let o = crate::spectral::project_simplex(&o);
    SpectralEstimate {
        o_hat: DMatrix::from_column_slice(z, 1, o.as_slice()),
        t_hat: vec![DMatrix::from_element(1, 1, 1.0); moments.len()],
        r_hat: moments
            .iter()
            .map(|m| DVector::from_element(1, m.reward_cross.sum().clamp(0.0, reward_max)))
            .collect(),
        b1_hat: DVector::from_element(1, 1.0),
        w_hat: vec![None; moments.len()],
        reference_action: 0,
        decomposed_actions: Vec::new(),
        alignment: None,
        routes: vec![ActionRoute::Trivial; moments.len()],
    }
}

/// Estimates a `k`-state model from the moments of every action
/// (`moments[a].action == a`).
pub fn estimate_model(
    moments: &[ViewMoments],
    k: usize,
    reward_max: f64,
    config: &SpectralConfig,
) -> Result<SpectralEstimate> {
    if moments.is_empty() || moments.iter().enumerate().any(|(a, m)| m.action != a) {
        return Err(Error::InvalidArgument(
            "moments must be given for every action, in order".into(),
        ));
    }
    if k == 1 {
        return Ok(single_state(moments, reward_max));
    }
    let mut decomposed: Vec<ActionEstimate> = Vec::new();
    let mut routes: Vec<Option<ActionRoute>> = vec![None; moments.len()];
    for m in moments {
        match decompose_action(m, k, reward_max, config) {
            Ok(est) => decomposed.push(est),
            Err(e @ Error::RankDeficient { .. }) => {
                debug!("action {}: {e}", m.action);
                routes[m.action] = Some(ActionRoute::SharedObservation {
                    reason: e.to_string(),
                });
            }
            Err(e) => return Err(e),
        }
    }
    if decomposed.is_empty() {
        let reasons: Vec<String> = routes
            .iter()
            .flatten()
            .map(|r| match r {
                ActionRoute::SharedObservation { reason } => reason.clone(),
                _ => String::new(),
            })
            .collect();
        return Err(Error::NoIdentifiableAction(reasons.join("; ")));
    }
    // reference: most triples, lowest action on ties
    let reference = decomposed.iter().enumerate().fold(0, |best, (i, e)| {
        if e.weight > decomposed[best].weight {
            i
        } else {
            best
        }
    });
    let o_hats: Vec<&DMatrix<f64>> = decomposed.iter().map(|e| &e.o_hat).collect();
    let alignment = align(&o_hats, reference, AlignmentConfig::default())?;
    let aligned = apply_alignment(&decomposed, &alignment)?;

    let n_actions = moments.len();
    let mut t_hat = vec![DMatrix::zeros(k, k); n_actions];
    let mut r_hat = vec![DVector::zeros(k); n_actions];
    let mut w_hat = vec![None; n_actions];
    for e in &aligned.actions {
        t_hat[e.action] = e.t_hat.clone();
        r_hat[e.action] = e.r_hat.clone();
        w_hat[e.action] = Some(e.w_hat.clone());
        routes[e.action] = Some(ActionRoute::Decomposed {
            diagnostics: e
                .diagnostics
                .clone()
                .expect("decomposed estimates carry diagnostics"),
        });
    }
    for (a, route) in routes.iter().enumerate() {
        if let Some(ActionRoute::SharedObservation { .. }) = route {
            let (t, r, _) =
                transitions_given_observation(&moments[a], &aligned.o_hat, reward_max, config)?;
            t_hat[a] = t;
            r_hat[a] = r;
        }
    }
    let b1_hat = recover_initial_belief(&aligned.o_hat, &t_hat, moments, config)?;
    Ok(SpectralEstimate {
        o_hat: aligned.o_hat,
        t_hat,
        r_hat,
        b1_hat,
        w_hat,
        reference_action: decomposed[reference].action,
        decomposed_actions: decomposed.iter().map(|e| e.action).collect(),
        alignment: Some(alignment),
        routes: routes
            .into_iter()
            .map(|r| r.expect("every action routed"))
            .collect(),
    })
}
