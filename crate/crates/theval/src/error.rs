use std::path::PathBuf;

use theval_core::audio::AudioError;
use theval_core::feature::{TopologyError, ValidationReport};
use theval_core::scoring::ScoreError;
use theval_core::stats::StatsError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A record that does not parse, located by file and 1-based line.
    #[error("{path}:{line}: {message}")]
    Malformed { path: PathBuf, line: usize, message: String },

    #[error("{path}: invalid topology: {source}")]
    Topology {
        path: PathBuf,
        #[source]
        source: TopologyError,
    },

    #[error("{path}: frame {frame} has {found} landmarks, topology declares {expected}")]
    TopologyMismatch { path: PathBuf, frame: usize, expected: usize, found: usize },

    #[error("{dir}: {track} has {found} frames, expected {expected}")]
    FrameCountMismatch { dir: PathBuf, track: &'static str, expected: usize, found: usize },

    #[error("{path}: {message}")]
    Wav { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Audio {
        path: PathBuf,
        #[source]
        source: AudioError,
    },

    #[error("{dir}: {} invariant violation(s), first: {}", report.violations.len(), report.violations.first().map(|v| v.to_string()).unwrap_or_default())]
    Invalid { dir: PathBuf, report: ValidationReport },

    #[error("{0}")]
    Manifest(String),

    #[error("scoring `{model}`: {source}")]
    Score {
        model: String,
        #[source]
        source: ScoreError,
    },

    #[error("{context}: {source}")]
    Stats {
        context: String,
        #[source]
        source: StatsError,
    },

    #[error("{0}")]
    Data(String),

    #[error("{path} already exists; pass --overwrite to replace it")]
    Exists { path: PathBuf },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }
}
