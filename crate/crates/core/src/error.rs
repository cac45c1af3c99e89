use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("degenerate point configuration (cross-covariance rank < 2)")]
    DegenerateConfiguration,
    #[error("voxel size must be positive, got {0}")]
    NonPositiveVoxel(f64),
    #[error("non-finite value produced: {0}")]
    NonFinite(&'static str),
    #[error("invalid rotation: {0}")]
    InvalidRotation(String),
    #[error("point sets differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} correspondences, got {got}")]
    InsufficientCorrespondences { needed: usize, got: usize },
    #[error("all sampled subsets were degenerate")]
    AllSubsetsDegenerate,
    #[error("result set is empty")]
    EmptyResultSet,
    #[error("cloud has no viewpoint")]
    MissingViewpoint,
    #[error("merged cloud contains a single tag")]
    DegenerateCloud,
    #[error("feature arity mismatch: model expects {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("dataset contains a single class")]
    SingleClassDataset,
    #[error("training loss became non-finite at epoch {0}")]
    NonFiniteLoss(usize),
    #[error("external scorer: {0}")]
    ExternalScorer(String),
    #[error("no wrong candidates among hypotheses")]
    NoWrongCandidates,
    #[error("need at least two distinct pairs to split, got {0}")]
    TooFewPairs(usize),
    #[error("manifest line {line}: {msg}")]
    ManifestParse { line: usize, msg: String },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("overlap target {target} unachievable (best {best:.3})")]
    OverlapUnachievable { target: f64, best: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
