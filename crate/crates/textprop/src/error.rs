//! Crate-wide error type with a coarse category used for CLI exit codes.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse failure class; the CLI maps these to process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    /// Bad configuration or arguments (exit 2).
    Config,
    /// Unusable input data (exit 3).
    Data,
    /// Numerical failure: divergence, NaN, non-convergence (exit 4).
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    // --- corpus ---
    #[error("corpus contains no tokens")]
    EmptyCorpus,
    #[error("document {index} has no gold label")]
    MissingLabel { index: usize },
    #[error("gold label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: u32, num_classes: usize },
    #[error("split would leave the {which} set empty ({n} documents total)")]
    EmptySplit { which: &'static str, n: usize },

    // --- embeddings ---
    #[error("cannot read word-vector file {path}: {source}")]
    FileUnreadable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("word-vector file {path} has no vector lines")]
    EmptyFile { path: PathBuf },
    #[error("word-vector line {line} has {found} components, expected {expected}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },

    // --- graph ---
    #[error("k = {k} out of range for {n} points (need 1 <= k < n)")]
    KTooLarge { k: usize, n: usize },

    // --- diffusion ---
    #[error("no labeled points to seed propagation")]
    NoLabeledPoints,
    #[error("alpha = {alpha} out of range (need 0 < alpha < 1)")]
    AlphaOutOfRange { alpha: f64 },
    #[error(
        "diffusion did not converge in {iterations} iterations (residual {residual:.3e})"
    )]
    NotConverged {
        iterations: usize,
        residual: f64,
        partial: Box<crate::diffusion::LabelDistribution>,
    },

    // --- model ---
    #[error("training loss diverged (non-finite at epoch {epoch}, batch {batch})")]
    DivergedLoss { epoch: usize, batch: usize },
    #[error("checkpoint {path} is invalid: {reason}")]
    BadCheckpoint { path: PathBuf, reason: String },
    #[error("only one class present; AUC-ROC undefined")]
    SingleClassEval,

    // --- pipeline / config ---
    #[error("config error: {0}")]
    Config(String),
    #[error("stage ordering: {0}")]
    StageOrder(String),
    #[error("data error: {0}")]
    Data(String),

    // --- io / formats ---
    #[error("malformed {what} file {path}: {reason}")]
    BadFormat {
        what: &'static str,
        path: PathBuf,
        reason: String,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn category(&self) -> Category {
        use Error::*;
        match self {
            Config(_) | KTooLarge { .. } | AlphaOutOfRange { .. } | StageOrder(_) => {
                Category::Config
            }
            NotConverged { .. } | DivergedLoss { .. } => Category::Numerical,
            _ => Category::Data,
        }
    }

    /// Process exit code used by the CLI: 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> u8 {
        match self.category() {
            Category::Config => 2,
            Category::Data => 3,
            Category::Numerical => 4,
        }
    }
}
