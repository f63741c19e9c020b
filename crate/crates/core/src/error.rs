use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model violates a structural invariant (non-stochastic column,
    /// mismatched dimensions, out-of-range reward, ...).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "observation {observation} is impossible after action {action} from belief {belief:?}"
    )]
    ImpossibleObservation {
        belief: Vec<f64>,
        action: usize,
        observation: usize,
    },

    #[error("no interior triples were collected for action {action}")]
    InsufficientData { action: usize },

    #[error("cross moment for action {action} is rank deficient: singular value {index} is {value:e} (floor {floor:e})")]
    RankDeficient {
        action: usize,
        index: usize,
        value: f64,
        floor: f64,
    },

    #[error("ill-conditioned {what}: {value:e} below floor {floor:e}")]
    IllConditioned {
        what: String,
        value: f64,
        floor: f64,
    },

    #[error("tensor decomposition failed: {0}")]
    DecompositionFailed(String),

    #[error(
        "reference columns {first} and {second} are {distance:e} apart; alignment is ambiguous"
    )]
    AmbiguousAlignment {
        first: usize,
        second: usize,
        distance: f64,
    },

    #[error("size guardrail exceeded: {what} ({size} > {cap})")]
    SizeLimit { what: String, size: u128, cap: u128 },

    #[error("model generation failed after {attempts} attempts: {stats}")]
    GenerationFailed { attempts: usize, stats: String },

    #[error("no action has an identifiable three-view structure ({0})")]
    NoIdentifiableAction(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Pipeline stages, attached to errors that escape `run_pipeline`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Explore,
    Moments,
    Estimate,
    Align,
    Plan,
    Evaluate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Explore => "explore",
            Stage::Moments => "moments",
            Stage::Estimate => "estimate",
            Stage::Align => "align",
            Stage::Plan => "plan",
            Stage::Evaluate => "evaluate",
        };
        f.write_str(name)
    }
}

impl Error {
    pub fn at(self, stage: Stage) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Strips any stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
