use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("length mismatch: {what} (expected {expected}, got {actual})")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("angle residual {residual} rad is within {epsilon} rad of the tan singularity")]
    AngleSingularity { residual: f64, epsilon: f64 },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("at least one ground-truth box is required")]
    EmptyGroundTruth,

    #[error("ground truth {gt} has no positive anchors")]
    EmptyPositives { gt: usize },

    #[error("{anchors} anchors cannot cover {gts} ground-truth boxes with one positive each")]
    InsufficientAnchors { anchors: usize, gts: usize },

    #[error("loss needs at least one positive sample when ground truth is present")]
    NoPositives,

    #[error("function is not differentiable within step {step} of parameter {index}")]
    NonDifferentiablePoint { index: usize, step: f64 },

    #[error("flat box array length {0} is not a multiple of 5")]
    Shape(usize),

    #[error("{}:{line}: {message}", path.display())]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
