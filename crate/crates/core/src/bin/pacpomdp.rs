use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pacpomdp::domains::{DomainKind, DomainSpec};
use pacpomdp::harness::{
    compare_to_truth, oracle_value, run_experiment, ExperimentConfig, ModelSource, PipelineConfig,
    PlannedPolicy, PlannerChoice,
};
use pacpomdp::learner::estimate_model;
use pacpomdp::moments::{collect_exploration, population_moments, EpisodeBatch};
use pacpomdp::pac::{required_episodes, simulation_gap_bound, ModelStats, PacConfig, Sizes};
use pacpomdp::planner::{
    evaluate_policy, solve_belief_grid, solve_finite_horizon, solve_reachable, EvaluationConfig,
    PlannerConfig,
};
use pacpomdp::pomdp::{validate, ValidationConfig};
use pacpomdp::spectral::SpectralConfig;
use pacpomdp::{Error, ExplorationPolicy, Result, TabularPomdp};

#[derive(Parser)]
#[command(
    name = "pacpomdp",
    version,
    about = "Spectral explore-then-exploit learning for tabular POMDPs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic model file.
    Generate {
        #[command(flatten)]
        domain: DomainArgs,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the rank, separation and occupancy conditions of a model.
    Validate {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 1e-8)]
        floor: f64,
    },
    /// Run uniform exploration episodes and write them as an episode log.
    Simulate {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        episodes: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate a model from exploration data.
    Estimate {
        #[command(flatten)]
        source: SourceArgs,
        /// Read episodes from this log instead of simulating the model.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Latent state count; defaults to the source model's.
        #[arg(long)]
        states: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        reward_max: f64,
        #[arg(long, default_value_t = 10_000)]
        episodes: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        population_moments: bool,
        /// Estimated model file.
        #[arg(long)]
        out: PathBuf,
        /// Per-action diagnostics document.
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
    /// Plan on a model and report the value from its initial belief.
    Plan {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = PlannerArg::Exact)]
        planner: PlannerArg,
        #[arg(long, default_value_t = 20)]
        grid_resolution: usize,
        /// Also score the policy in this model.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Episode requirement N and, given an estimate, the value-gap bound B.
    Pac {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Leading constant of the episode formula.
        #[arg(long)]
        leading: Option<f64>,
        #[arg(long)]
        estimate: Option<PathBuf>,
    },
    /// Run the pipeline over an episode schedule and seeds.
    Experiment {
        #[command(flatten)]
        source: SourceArgs,
        /// Episode schedule, strictly increasing.
        #[arg(long, value_delimiter = ',', default_value = "1000,4000,16000")]
        episodes: Vec<u64>,
        /// Comma-separated list or a half-open range like `0..20`.
        #[arg(long, default_value = "0..20", value_parser = parse_seeds)]
        seeds: Seeds,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        population_moments: bool,
        #[arg(long, value_enum, default_value_t = PlannerArg::Exact)]
        planner: PlannerArg,
        #[arg(long, default_value_t = 20)]
        grid_resolution: usize,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Tiger,
    SlotFilling,
    Random,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlannerArg {
    Exact,
    Reachable,
    Grid,
    None,
}

impl From<PlannerArg> for PlannerChoice {
    fn from(p: PlannerArg) -> Self {
        match p {
            PlannerArg::Exact => PlannerChoice::Exact,
            PlannerArg::Reachable => PlannerChoice::Reachable,
            PlannerArg::Grid => PlannerChoice::Grid,
            PlannerArg::None => PlannerChoice::None,
        }
    }
}

#[derive(Args, Clone)]
struct DomainArgs {
    #[arg(long, value_enum, default_value_t = DomainArg::Tiger)]
    domain: DomainArg,
    #[arg(long, default_value_t = 3)]
    horizon: usize,
    /// Tiger listen accuracy, slot-filling `1 - noise`, or the diagonal
    /// weight of random observation columns.
    #[arg(long)]
    accuracy: Option<f64>,
    /// Random models: states and observations; slot filling: intents.
    #[arg(long, default_value_t = 3)]
    size: usize,
    #[arg(long, default_value_t = 2)]
    num_actions: usize,
    #[arg(long)]
    num_observations: Option<usize>,
    #[arg(long, default_value_t = 0)]
    model_seed: u64,
}

impl DomainArgs {
    fn spec(&self) -> DomainSpec {
        let mut spec = match self.domain {
            DomainArg::Tiger => DomainSpec::tiger(0.85, self.horizon),
            DomainArg::Random => DomainSpec::random(
                self.size,
                self.num_actions,
                self.num_observations.unwrap_or(self.size),
                self.horizon,
                self.model_seed,
            ),
            DomainArg::SlotFilling => DomainSpec {
                kind: DomainKind::SlotFilling,
                states: self.size,
                actions: self.size + 1,
                observations: self.size + 1,
                horizon: self.horizon,
                observation_accuracy: 0.8,
                transition_mixing: 0.0,
                seed: self.model_seed,
                retry_budget: 100,
            },
        };
        if let Some(acc) = self.accuracy {
            spec.observation_accuracy = acc;
        }
        spec
    }
}

#[derive(Args, Clone)]
struct SourceArgs {
    /// Model file; overrides the domain flags.
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    domain: DomainArgs,
}

impl SourceArgs {
    fn source(&self) -> ModelSource {
        match &self.model {
            Some(p) => ModelSource::File(p.clone()),
            None => ModelSource::Domain(self.domain.spec()),
        }
    }

    fn load(&self) -> Result<TabularPomdp> {
        self.source().load()
    }
}

#[derive(Clone, Debug)]
struct Seeds(Vec<u64>);

fn parse_seeds(s: &str) -> std::result::Result<Seeds, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
        return Ok(Seeds((a..b).collect()));
    }
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse().map_err(|e| format!("{t:?}: {e}")))
        .collect::<std::result::Result<_, _>>()
        .map(Seeds)
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { domain, out } => {
            let model = domain.spec().build()?;
            write_or_print(out.as_deref(), &model.to_json())
        }
        Command::Validate { source, floor } => {
            let model = source.load()?;
            let report = validate(
                &model,
                &ExplorationPolicy::uniform(model.num_actions()),
                ValidationConfig { floor },
            )?;
            for f in &report.failures {
                eprintln!("failed: {f}");
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::Simulate {
            source,
            episodes,
            seed,
            out,
        } => {
            let model = source.load()?;
            let batch = collect_exploration(
                &model,
                &ExplorationPolicy::uniform(model.num_actions()),
                episodes,
                seed,
            )?;
            let mean =
                batch.episodes.iter().map(|e| e.total_reward()).sum::<f64>() / episodes as f64;
            eprintln!("{episodes} episodes, mean return {mean:.6}");
            write_or_print(out.as_deref(), &batch.to_log())
        }
        Command::Estimate {
            source,
            log,
            states,
            reward_max,
            episodes,
            seed,
            population_moments: population,
            out,
            diagnostics,
        } => {
            let spectral = SpectralConfig {
                seed,
                ..SpectralConfig::default()
            };
            let (moments, k, horizon, rmax, truth) = match log {
                Some(path) => {
                    let batch = EpisodeBatch::load(path)?;
                    let k = states.ok_or_else(|| {
                        Error::InvalidArgument("--states is required with --log".into())
                    })?;
                    let acc = batch.accumulate()?;
                    let moments = (0..batch.exploration.num_actions())
                        .map(|a| acc.moments(a))
                        .collect::<Result<Vec<_>>>()?;
                    (moments, k, batch.horizon, reward_max, None)
                }
                None => {
                    let model = source.load()?;
                    let exploration = ExplorationPolicy::uniform(model.num_actions());
                    let moments = if population {
                        population_moments(&model, &exploration)?
                    } else {
                        let batch = collect_exploration(&model, &exploration, episodes, seed)?;
                        let acc = batch.accumulate()?;
                        (0..model.num_actions())
                            .map(|a| acc.moments(a))
                            .collect::<Result<Vec<_>>>()?
                    };
                    let k = states.unwrap_or(model.num_states());
                    (moments, k, model.horizon(), model.reward_max(), Some(model))
                }
            };
            let estimate = estimate_model(&moments, k, rmax, &spectral)?;
            let model = estimate.to_model(horizon, rmax)?;
            model.save(&out)?;
            if let Some(truth) = truth.filter(|t| t.num_states() == k) {
                let cmp = compare_to_truth(&truth, &model)?;
                eprintln!(
                    "max entry error {:.3e}, largest parameter error {:.3e}",
                    cmp.max_entry_error,
                    cmp.errors.largest()
                );
            }
            if let Some(path) = diagnostics {
                std::fs::write(
                    path,
                    serde_json::to_string_pretty(&estimate.diagnostics_json())?,
                )?;
            }
            Ok(())
        }
        Command::Plan {
            model,
            planner,
            grid_resolution,
            truth,
            out,
        } => {
            let model = TabularPomdp::load(model)?;
            let cfg = PlannerConfig::default();
            let b1 = model.initial_belief();
            let (policy, value) = match planner {
                PlannerArg::Exact => {
                    let p = solve_finite_horizon(&model, &cfg)?;
                    let v = p.value(0, b1);
                    (PlannedPolicy::Alpha(p), v)
                }
                PlannerArg::Reachable => {
                    let p = solve_reachable(&model, &cfg)?;
                    let v = p.value(0, b1);
                    (PlannedPolicy::Alpha(p), v)
                }
                PlannerArg::Grid => {
                    let p = solve_belief_grid(&model, grid_resolution)?;
                    let v = p.value(0, b1);
                    (PlannedPolicy::Grid(p), v)
                }
                PlannerArg::None => {
                    return Err(Error::InvalidArgument("plan needs a planner".into()))
                }
            };
            println!("planned value {value:.9}");
            if let Some(path) = truth {
                let env = TabularPomdp::load(path)?;
                let v = evaluate_policy(&env, &model, &policy, &EvaluationConfig::default())?.value;
                let o = oracle_value(&env)?;
                println!(
                    "value in truth {v:.9}, optimum {:.9}, regret {:.3e}",
                    o.value,
                    o.value - v
                );
            }
            if let Some(path) = out {
                std::fs::write(path, policy.to_json())?;
            }
            Ok(())
        }
        Command::Pac {
            source,
            epsilon,
            delta,
            leading,
            estimate,
        } => {
            let model = source.load()?;
            let report = validate(
                &model,
                &ExplorationPolicy::uniform(model.num_actions()),
                ValidationConfig::default(),
            )?;
            let config = PacConfig {
                epsilon,
                delta,
                stats: ModelStats::from_report(&report),
                sizes: Sizes::of(&model),
                constant_overrides: leading
                    .into_iter()
                    .map(|c| ("leading".to_string(), c))
                    .collect(),
            };
            let n = required_episodes(&config)?;
            println!("N = {} (raw {:e})", n.episodes, n.raw);
            if let Some(path) = estimate {
                let est = TabularPomdp::load(path)?;
                let cmp = compare_to_truth(&model, &est)?;
                let b = simulation_gap_bound(&cmp.errors, model.horizon(), model.reward_max());
                println!("B = {b:.6e}");
            }
            Ok(())
        }
        Command::Experiment {
            source,
            episodes,
            seeds,
            epsilon,
            delta,
            out,
            population_moments,
            planner,
            grid_resolution,
            workers,
        } => {
            let config = ExperimentConfig {
                source: source.source(),
                schedule: episodes,
                seeds: seeds.0,
                epsilon,
                delta,
                out_dir: Some(out.clone()),
                pipeline: PipelineConfig {
                    population_moments,
                    planner: planner.into(),
                    grid_resolution,
                    ..PipelineConfig::default()
                },
                workers,
            };
            let report = run_experiment(&config)?;
            for s in &report.summary {
                println!(
                    "N={} cells={} failures={} median error {} median regret {}",
                    s.episodes,
                    s.cells,
                    s.failures,
                    fmt_opt(s.median_max_param_error),
                    fmt_opt(s.median_regret)
                );
            }
            eprintln!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4e}"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
