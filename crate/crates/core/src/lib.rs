//! Signal-level evaluation of talking-head videos.
//!
//! Everything in this crate is pure computation over already-extracted
//! per-frame signals: facial landmarks, head pose, image-quality scores,
//! voice-activity segments and audio samples. File formats, the CLI and the
//! preference-study HTTP service live in the `theval` crate.
//!
//! The pipeline is
//!
//! 1. [`geometry`] turns landmark frames into scale-free scalar signals,
//! 2. [`audio`] turns PCM samples and VAD segments into per-frame volume and
//!    speech / silence frame sets,
//! 3. [`metrics`] reduces those signals to the eight raw per-video metrics,
//! 4. [`scoring`] normalizes corpus means against the ground truth and
//!    averages them into dimension and final scores,
//! 5. [`stats`] checks metric scores against human pairwise preferences.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod audio;
pub mod descriptive;
pub mod feature;
pub mod geometry;
pub mod metrics;
pub mod scoring;
pub mod stats;
pub mod study;

pub use feature::{
    FaceTopology, FeatureBundle, IqaFrame, LandmarkFrame, PoseFrame, TopologyError, VadSegment,
    ValidationReport, Violation,
};
pub use metrics::{evaluate_video, Metric, MetricVector, VideoEvaluation};
pub use scoring::{aggregate_model, build_leaderboard, normalize_to_gt, NormalizedScoreCard};
