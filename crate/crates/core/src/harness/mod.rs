//! End-to-end pipeline and experiment runner.

mod plot;
mod report;

use std::path::PathBuf;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::min_cost_assignment;
use crate::domains::DomainSpec;
use crate::error::{Error, Result, Stage, StageExt};
use crate::learner::{estimate_model, SpectralEstimate};
use crate::linalg::column_l1;
use crate::moments::{explore_moments, population_moments};
use crate::pac::{model_errors, ModelErrors};
use crate::planner::{
    brute_force_optimal, evaluate_policy, optimal_value_by_search, solve_belief_grid,
    solve_finite_horizon, solve_reachable, AlphaVectorPolicy, BeliefPolicy, EvaluationConfig,
    GridPolicy, PlannerConfig,
};
use crate::pomdp::{ExplorationPolicy, TabularPomdp};
use crate::spectral::SpectralConfig;

pub use plot::learning_curve_svg;
pub use report::{median, results_csv, timings_csv, NSummary, RESULTS_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerChoice {
    /// Exact alpha-vector iteration; falls back to `Reachable` when the
    /// cross-sum guardrail trips.
    Exact,
    Reachable,
    Grid,
    /// Estimate only.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Uniform over actions when absent.
    pub exploration: Option<ExplorationPolicy>,
    pub population_moments: bool,
    pub spectral: SpectralConfig,
    pub planner: PlannerChoice,
    pub grid_resolution: usize,
    #[serde(skip)]
    pub planner_config: PlannerConfig,
    #[serde(skip)]
    pub evaluation: EvaluationConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            exploration: None,
            population_moments: false,
            spectral: SpectralConfig::default(),
            planner: PlannerChoice::Exact,
            grid_resolution: 20,
            planner_config: PlannerConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PlannedPolicy {
    Alpha(AlphaVectorPolicy),
    Grid(GridPolicy),
}

impl PlannedPolicy {
    pub fn to_json(&self) -> String {
        match self {
            PlannedPolicy::Alpha(p) => p.to_json(),
            PlannedPolicy::Grid(p) => p.to_json(),
        }
    }
}

impl BeliefPolicy for PlannedPolicy {
    fn horizon(&self) -> usize {
        match self {
            PlannedPolicy::Alpha(p) => p.horizon(),
            PlannedPolicy::Grid(p) => p.horizon(),
        }
    }

    fn action(&self, step: usize, belief: &nalgebra::DVector<f64>) -> usize {
        match self {
            PlannedPolicy::Alpha(p) => p.action(step, belief),
            PlannedPolicy::Grid(p) => p.action(step, belief),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    BruteForce,
    Search,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    pub value: f64,
    pub kind: OracleKind,
}

/// Optimal value of `model` from the brute-force tree enumeration when it
/// fits under its cap, otherwise from expectimax search.
pub fn oracle_value(model: &TabularPomdp) -> Result<OracleValue> {
    match brute_force_optimal(model) {
        Ok(v) => Ok(OracleValue {
            value: v.value,
            kind: OracleKind::BruteForce,
        }),
        Err(Error::SizeLimit { .. }) => Ok(OracleValue {
            value: optimal_value_by_search(model)?,
            kind: OracleKind::Search,
        }),
        Err(e) => Err(e),
    }
}

/// Estimate-versus-truth comparison after matching latent labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthComparison {
    /// `permutation[j]` is the true label of estimated state `j`.
    pub permutation: Vec<usize>,
    pub errors: ModelErrors,
    /// Largest absolute difference over every parameter entry.
    pub max_entry_error: f64,
}

/// Matches estimated states to true states by minimum total L1 distance
/// between observation columns, then measures parameter errors.
pub fn compare_to_truth(truth: &TabularPomdp, estimate: &TabularPomdp) -> Result<TruthComparison> {
    if truth.num_states() != estimate.num_states()
        || truth.num_actions() != estimate.num_actions()
        || truth.num_observations() != estimate.num_observations()
    {
        return Err(Error::InvalidArgument(
            "estimate and truth differ in shape".into(),
        ));
    }
    let k = truth.num_states();
    let cost: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| column_l1(truth.observation(), i, estimate.observation(), j))
                .collect()
        })
        .collect();
    let (assignment, _) = min_cost_assignment(&cost);
    let mut permutation = vec![0; k];
    for (i, &j) in assignment.iter().enumerate() {
        permutation[j] = i;
    }
    let matched = estimate.relabeled(&permutation);
    let mut max_entry_error = (truth.observation() - matched.observation()).amax();
    max_entry_error =
        max_entry_error.max((truth.initial_belief() - matched.initial_belief()).amax());
    for a in 0..truth.num_actions() {
        max_entry_error = max_entry_error
            .max((truth.transition(a) - matched.transition(a)).amax())
            .max((truth.reward(a) - matched.reward(a)).amax());
    }
    Ok(TruthComparison {
        permutation,
        errors: model_errors(truth, &matched),
        max_entry_error,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub explore_ms: f64,
    pub estimate_ms: f64,
    pub plan_ms: f64,
    pub evaluate_ms: f64,
}

/// One (N, seed) cell of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub episodes: u64,
    pub seed: u64,
    /// `None` on success; the stage-tagged error otherwise.
    pub failure: Option<String>,
    pub comparison: Option<TruthComparison>,
    pub planner: Option<String>,
    pub policy_value: Option<f64>,
    pub oracle: Option<OracleValue>,
    pub regret: Option<f64>,
    /// Actions recovered against the shared observation estimate rather than
    /// by their own decomposition.
    pub shared_observation_actions: usize,
    /// Wall-clock timings; kept out of the results table so reruns are
    /// byte-identical.
    pub timings: Timings,
}

impl RunRow {
    fn failed(episodes: u64, seed: u64, error: &Error) -> Self {
        Self {
            episodes,
            seed,
            failure: Some(error.to_string()),
            comparison: None,
            planner: None,
            policy_value: None,
            oracle: None,
            regret: None,
            shared_observation_actions: 0,
            timings: Timings::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub estimate: SpectralEstimate,
    pub model: TabularPomdp,
    pub policy: Option<PlannedPolicy>,
    pub row: RunRow,
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn plan(
    model: &TabularPomdp,
    config: &PipelineConfig,
) -> Result<Option<(PlannedPolicy, &'static str)>> {
    Ok(match config.planner {
        PlannerChoice::None => None,
        PlannerChoice::Grid => Some((
            PlannedPolicy::Grid(solve_belief_grid(model, config.grid_resolution)?),
            "grid",
        )),
        PlannerChoice::Reachable => Some((
            PlannedPolicy::Alpha(solve_reachable(model, &config.planner_config)?),
            "reachable",
        )),
        PlannerChoice::Exact => match solve_finite_horizon(model, &config.planner_config) {
            Ok(p) => Some((PlannedPolicy::Alpha(p), "exact")),
            Err(Error::SizeLimit { what, size, .. }) => {
                warn!("exact planner refused ({what}: {size}); planning over reachable beliefs instead");
                Some((
                    PlannedPolicy::Alpha(solve_reachable(model, &config.planner_config)?),
                    "reachable",
                ))
            }
            Err(e) => return Err(e),
        },
    })
}

/// Explore `env` for `episodes` episodes (or use its exact moments), estimate
/// a model with as many states as `env`, plan on it and score the plan in
/// `env`.
pub fn run_pipeline(
    env: &TabularPomdp,
    episodes: u64,
    seed: u64,
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    run_with_oracle(env, episodes, seed, config, None)
}

fn run_with_oracle(
    env: &TabularPomdp,
    episodes: u64,
    seed: u64,
    config: &PipelineConfig,
    oracle: Option<OracleValue>,
) -> Result<PipelineOutput> {
    let mut timings = Timings::default();
    let exploration = config
        .exploration
        .clone()
        .unwrap_or_else(|| ExplorationPolicy::uniform(env.num_actions()));

    let start = Instant::now();
    let moments = if config.population_moments {
        population_moments(env, &exploration).stage(Stage::Moments)?
    } else {
        let acc = explore_moments(env, &exploration, episodes, seed).stage(Stage::Explore)?;
        (0..env.num_actions())
            .map(|a| acc.moments(a))
            .collect::<Result<Vec<_>>>()
            .stage(Stage::Moments)?
    };
    timings.explore_ms = elapsed_ms(start);

    let start = Instant::now();
    let spectral = SpectralConfig {
        seed,
        ..config.spectral.clone()
    };
    let estimate = estimate_model(&moments, env.num_states(), env.reward_max(), &spectral)
        .map_err(|e| {
            let stage = if matches!(e, Error::AmbiguousAlignment { .. }) {
                Stage::Align
            } else {
                Stage::Estimate
            };
            e.at(stage)
        })?;
    let model = estimate
        .to_model(env.horizon(), env.reward_max())
        .stage(Stage::Estimate)?;
    let comparison = compare_to_truth(env, &model).stage(Stage::Estimate)?;
    timings.estimate_ms = elapsed_ms(start);

    let start = Instant::now();
    let planned = plan(&model, config).stage(Stage::Plan)?;
    timings.plan_ms = elapsed_ms(start);

    let start = Instant::now();
    let (mut policy_value, mut oracle_v, mut regret) = (None, None, None);
    if let Some((policy, _)) = &planned {
        let value = evaluate_policy(env, &model, policy, &config.evaluation)
            .stage(Stage::Evaluate)?
            .value;
        let o = match oracle {
            Some(o) => o,
            None => oracle_value(env).stage(Stage::Evaluate)?,
        };
        policy_value = Some(value);
        regret = Some(o.value - value);
        oracle_v = Some(o);
    }
    timings.evaluate_ms = elapsed_ms(start);

    let shared = estimate
        .routes
        .iter()
        .filter(|r| matches!(r, crate::learner::ActionRoute::SharedObservation { .. }))
        .count();
    info!(
        "N={episodes} seed={seed}: max entry error {:.3e}, regret {:?}",
        comparison.max_entry_error, regret
    );
    let row = RunRow {
        episodes,
        seed,
        failure: None,
        comparison: Some(comparison),
        planner: planned.as_ref().map(|(_, name)| name.to_string()),
        policy_value,
        oracle: oracle_v,
        regret,
        shared_observation_actions: shared,
        timings,
    };
    Ok(PipelineOutput {
        estimate,
        model,
        policy: planned.map(|(p, _)| p),
        row,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    Domain(DomainSpec),
    File(PathBuf),
}

impl ModelSource {
    pub fn load(&self) -> Result<TabularPomdp> {
        match self {
            ModelSource::Domain(spec) => spec.build(),
            ModelSource::File(path) => TabularPomdp::load(path),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: ModelSource,
    /// Exploration episode counts, strictly increasing.
    pub schedule: Vec<u64>,
    pub seeds: Vec<u64>,
    pub epsilon: f64,
    pub delta: f64,
    /// Where results are written; nothing is written when absent.
    pub out_dir: Option<PathBuf>,
    pub pipeline: PipelineConfig,
    /// Worker threads; zero means the rayon default.
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn check(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidArgument(
                "experiment needs at least one seed".into(),
            ));
        }
        if self.schedule.is_empty()
            || self.schedule.windows(2).any(|w| w[0] >= w[1])
            || self.schedule[0] == 0
        {
            return Err(Error::InvalidArgument(
                "episode schedule must be positive and strictly increasing".into(),
            ));
        }
        if !(self.epsilon > 0.0) || !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument(
                "epsilon must be positive and delta in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// Sorted by (episodes, seed).
    pub rows: Vec<RunRow>,
    pub summary: Vec<NSummary>,
}

/// Runs every (N, seed) cell, records per-cell failures, and writes
/// `results.csv`, `timings.csv`, `summary.json` and `learning_curve.svg`
/// when an output directory is configured.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.check()?;
    let env = config.source.load()?;
    let oracle = match config.pipeline.planner {
        PlannerChoice::None => None,
        _ => Some(oracle_value(&env)?),
    };
    let cells: Vec<(u64, u64)> = config
        .schedule
        .iter()
        .flat_map(|&n| config.seeds.iter().map(move |&s| (n, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    let mut rows: Vec<RunRow> = pool.install(|| {
        cells
            .par_iter()
            .map(
                |&(n, s)| match run_with_oracle(&env, n, s, &config.pipeline, oracle) {
                    Ok(out) => out.row,
                    Err(e) => {
                        warn!("cell N={n} seed={s} failed: {e}");
                        RunRow::failed(n, s, &e)
                    }
                },
            )
            .collect()
    });
    rows.sort_by_key(|r| (r.episodes, r.seed));
    let summary = report::summarize(&rows);
    if let Some(dir) = &config.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("results.csv"), results_csv(&rows))?;
        std::fs::write(dir.join("timings.csv"), timings_csv(&rows))?;
        std::fs::write(
            dir.join("summary.json"),
            serde_json::to_string_pretty(&summary)?,
        )?;
        std::fs::write(dir.join("learning_curve.svg"), learning_curve_svg(&summary))?;
    }
    Ok(ExperimentReport { rows, summary })
}
