//! Files, corpus orchestration, reports and the study service around
//! [`theval_core`].
//!
//! The `theval` binary exposes these as subcommands; everything it does is
//! also callable from here.

pub mod correlate;
pub mod error;
pub mod evaluate;
pub mod fixtures;
pub mod format;
pub mod manifest;
pub mod service;
pub mod table;

pub use theval_core as engine;

pub use correlate::{correlate_report, CorrelateOptions, CorrelationReport, ResampleUnit};
pub use error::{Error, Result};
pub use evaluate::{evaluate_corpus, EvaluateOptions, EvaluationReport};
pub use format::{facemesh_topology, load_feature_bundle, load_topology, read_feature_bundle, write_feature_bundle};
pub use manifest::{CorpusManifest, GROUND_TRUTH};
