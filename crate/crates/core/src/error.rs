use std::path::PathBuf;

use crate::model::{TaskId, Violation};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid task set: {}", format_violations(.0))]
    InvalidTaskSet(Vec<Violation>),

    #[error("task {0} has no period or minimum interarrival time")]
    MissingPeriod(TaskId),

    #[error("task {task}: {reason}")]
    InvalidTask { task: TaskId, reason: String },

    #[error("hyperperiod exceeds the representable horizon ({limit} ticks)")]
    HyperperiodOverflow { limit: u64 },

    #[error("unknown policy `{0}` (expected edf, rm, super or super-dominant)")]
    UnknownPolicy(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
