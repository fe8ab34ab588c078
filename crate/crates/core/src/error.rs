use std::path::PathBuf;

use thiserror::Error;

use crate::protocol::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {what}: {}", join_violations(.violations))]
    Validation {
        what: &'static str,
        violations: Vec<Violation>,
    },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error(
        "infeasible speed profile: speed {speed} mm/s with ramp {ramp_time} s leaves no plateau on a {stroke_length} mm stroke"
    )]
    InfeasibleProfile {
        speed: f64,
        ramp_time: f64,
        stroke_length: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown clothing item `{0}`")]
    UnknownItem(String),

    #[error("session `{0}` already exists in the manifest")]
    DuplicateSession(String),

    #[error("unknown session `{0}`")]
    UnknownSession(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("corrupt file {}: {reason}", path.display())]
    Corruption { path: PathBuf, reason: String },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
