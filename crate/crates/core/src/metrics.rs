//! The eight per-video metrics and the landmark-distance baselines.
//!
//! Quality metrics are means of extractor scores. Naturalness metrics are
//! spreads of landmark and pose signals. Synchronization metrics compare the
//! mouth against the audio: a robust spread of lip gaps during silence, and
//! the mean absolute difference between min-max normalized mouth openness
//! and volume during speech. The last two are lower-is-better; scoring turns
//! them into higher-is-better values by comparing against the ground truth.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::audio::{derive_frame_sets, FrameSets, MIN_SILENCE_S};
use crate::descriptive::{diff, mad, mean, sample_std, sample_variance};
use crate::feature::{FaceTopology, FeatureBundle, IqaFrame, LandmarkFrame, PoseFrame};
use crate::geometry::{self, dist, ScalarSignal};

/// Added to the min-max range in lip-sync normalization.
pub const LIP_SYNC_EPSILON: f64 = 1e-8;

/// The eight metrics, in leaderboard column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    GlobalAesthetics,
    MouthQuality,
    FaceQuality,
    LipDynamics,
    HeadMotionDynamics,
    EyebrowDynamics,
    SilentLipStability,
    LipSync,
}

/// Grouping of metrics into the three reported dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Quality,
    Naturalness,
    Synchronization,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [Dimension::Quality, Dimension::Naturalness, Dimension::Synchronization];

    pub fn metrics(self) -> &'static [Metric] {
        use Metric::*;
        match self {
            Dimension::Quality => &[GlobalAesthetics, MouthQuality, FaceQuality],
            Dimension::Naturalness => &[LipDynamics, HeadMotionDynamics, EyebrowDynamics],
            Dimension::Synchronization => &[SilentLipStability, LipSync],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Quality => "quality",
            Dimension::Naturalness => "naturalness",
            Dimension::Synchronization => "synchronization",
        }
    }
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::GlobalAesthetics,
        Metric::MouthQuality,
        Metric::FaceQuality,
        Metric::LipDynamics,
        Metric::HeadMotionDynamics,
        Metric::EyebrowDynamics,
        Metric::SilentLipStability,
        Metric::LipSync,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::GlobalAesthetics => "global_aesthetics",
            Metric::MouthQuality => "mouth_quality",
            Metric::FaceQuality => "face_quality",
            Metric::LipDynamics => "lip_dynamics",
            Metric::HeadMotionDynamics => "head_motion_dynamics",
            Metric::EyebrowDynamics => "eyebrow_dynamics",
            Metric::SilentLipStability => "silent_lip_stability",
            Metric::LipSync => "lip_sync",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Metric::GlobalAesthetics => "Global Aesthetics",
            Metric::MouthQuality => "Mouth Quality",
            Metric::FaceQuality => "Face Quality",
            Metric::LipDynamics => "Lip Dynamics",
            Metric::HeadMotionDynamics => "Head Motion",
            Metric::EyebrowDynamics => "Eyebrow Dynamics",
            Metric::SilentLipStability => "Silent Lip Stability",
            Metric::LipSync => "Lip-Sync",
        }
    }

    pub fn from_name(name: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.name() == name)
    }

    pub fn dimension(self) -> Dimension {
        match self {
            Metric::GlobalAesthetics | Metric::MouthQuality | Metric::FaceQuality => Dimension::Quality,
            Metric::LipDynamics | Metric::HeadMotionDynamics | Metric::EyebrowDynamics => Dimension::Naturalness,
            Metric::SilentLipStability | Metric::LipSync => Dimension::Synchronization,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Why a metric has no value for a video.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inapplicable {
    NoIqa,
    NoScoredFrames,
    TooFewFrames,
    NoSilence,
    NoSpeech,
    NoAudio,
}

impl fmt::Display for Inapplicable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Inapplicable::NoIqa => "no iqa track",
            Inapplicable::NoScoredFrames => "no scored frames",
            Inapplicable::TooFewFrames => "fewer than two usable frames",
            Inapplicable::NoSilence => "no qualifying silent frames",
            Inapplicable::NoSpeech => "no speech frames",
            Inapplicable::NoAudio => "no audio volume",
        })
    }
}

pub type MetricResult = Result<f64, Inapplicable>;

/// Raw metric values for one video; `None` marks an inapplicable metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub video_id: String,
    pub global_aesthetics: Option<f64>,
    pub mouth_quality: Option<f64>,
    pub face_quality: Option<f64>,
    pub lip_dynamics: Option<f64>,
    pub head_motion_dynamics: Option<f64>,
    pub eyebrow_dynamics: Option<f64>,
    pub silent_lip_stability: Option<f64>,
    pub lip_sync: Option<f64>,
}

impl MetricVector {
    pub fn empty(video_id: impl Into<String>) -> Self {
        Self::from_values(video_id, [None; 8])
    }

    pub fn from_values(video_id: impl Into<String>, v: [Option<f64>; 8]) -> Self {
        Self {
            video_id: video_id.into(),
            global_aesthetics: v[0],
            mouth_quality: v[1],
            face_quality: v[2],
            lip_dynamics: v[3],
            head_motion_dynamics: v[4],
            eyebrow_dynamics: v[5],
            silent_lip_stability: v[6],
            lip_sync: v[7],
        }
    }

    pub fn values(&self) -> [Option<f64>; 8] {
        Metric::ALL.map(|m| self.get(m))
    }

    pub fn get(&self, m: Metric) -> Option<f64> {
        *self.slot(m)
    }

    pub fn set(&mut self, m: Metric, value: Option<f64>) {
        *self.slot_mut(m) = value;
    }

    fn slot(&self, m: Metric) -> &Option<f64> {
        match m {
            Metric::GlobalAesthetics => &self.global_aesthetics,
            Metric::MouthQuality => &self.mouth_quality,
            Metric::FaceQuality => &self.face_quality,
            Metric::LipDynamics => &self.lip_dynamics,
            Metric::HeadMotionDynamics => &self.head_motion_dynamics,
            Metric::EyebrowDynamics => &self.eyebrow_dynamics,
            Metric::SilentLipStability => &self.silent_lip_stability,
            Metric::LipSync => &self.lip_sync,
        }
    }

    fn slot_mut(&mut self, m: Metric) -> &mut Option<f64> {
        match m {
            Metric::GlobalAesthetics => &mut self.global_aesthetics,
            Metric::MouthQuality => &mut self.mouth_quality,
            Metric::FaceQuality => &mut self.face_quality,
            Metric::LipDynamics => &mut self.lip_dynamics,
            Metric::HeadMotionDynamics => &mut self.head_motion_dynamics,
            Metric::EyebrowDynamics => &mut self.eyebrow_dynamics,
            Metric::SilentLipStability => &mut self.silent_lip_stability,
            Metric::LipSync => &mut self.lip_sync,
        }
    }
}

fn iqa_mean(iqa: &[IqaFrame], pick: fn(&IqaFrame) -> Option<f64>) -> MetricResult {
    let scores: Vec<f64> = iqa.iter().filter_map(pick).collect();
    mean(&scores).ok_or(Inapplicable::NoScoredFrames)
}

/// Mean per-frame aesthetic score over scored frames.
pub fn global_aesthetics(iqa: &[IqaFrame]) -> MetricResult {
    iqa_mean(iqa, |q| q.aesthetic)
}

pub fn face_quality(iqa: &[IqaFrame]) -> MetricResult {
    iqa_mean(iqa, |q| q.face_quality)
}

pub fn mouth_quality(iqa: &[IqaFrame]) -> MetricResult {
    iqa_mean(iqa, |q| q.mouth_quality)
}

/// Mean over lip pairs of the sample standard deviation of the pair distance
/// across valid frames.
pub fn lip_dynamics(landmarks: &[LandmarkFrame], topo: &FaceTopology) -> MetricResult {
    let rows: Vec<Vec<f64>> =
        landmarks.iter().filter_map(|f| geometry::lip_pair_distances(f, topo).ok()).collect();
    if rows.len() < 2 {
        return Err(Inapplicable::TooFewFrames);
    }
    let m = topo.lip_pair_set.len();
    let mut column = Vec::with_capacity(rows.len());
    let mut total = 0.0;
    for k in 0..m {
        column.clear();
        column.extend(rows.iter().map(|r| r[k]));
        total += sample_std(&column).unwrap_or(0.0);
    }
    Ok(total / m as f64)
}

/// `sqrt(mean angle std * mean variance of angle differences + mean center
/// variance)`, all with sample denominators.
pub fn head_motion_dynamics(pose: &[PoseFrame]) -> MetricResult {
    if pose.len() < 2 {
        return Err(Inapplicable::TooFewFrames);
    }
    let track = |f: fn(&PoseFrame) -> f64| pose.iter().map(f).collect::<Vec<f64>>();
    let angles = [track(|p| p.pitch_deg), track(|p| p.yaw_deg), track(|p| p.roll_deg)];
    let std_of = |xs: &[f64]| sample_std(xs).unwrap_or(0.0);
    let var_of = |xs: &[f64]| sample_variance(xs).unwrap_or(0.0);

    let sigma_angle = angles.iter().map(|a| std_of(a)).sum::<f64>() / 3.0;
    let var_delta = angles.iter().map(|a| var_of(&diff(a))).sum::<f64>() / 3.0;
    let var_trans = (var_of(&track(|p| p.center_x)) + var_of(&track(|p| p.center_y))) / 2.0;
    Ok(libm::sqrt(sigma_angle * var_delta + var_trans))
}

/// Sample standard deviation of the normalized brow-to-eye distance.
pub fn eyebrow_dynamics(landmarks: &[LandmarkFrame], topo: &FaceTopology) -> MetricResult {
    let d: Vec<f64> = landmarks.iter().filter_map(|f| geometry::eyebrow_distance(f, topo).ok()).collect();
    if d.len() < 2 {
        return Err(Inapplicable::TooFewFrames);
    }
    Ok(sample_std(&d).unwrap_or(0.0))
}

/// Median absolute deviation of the normalized vertical lip gap over the
/// silent frames.
pub fn silent_lip_stability(landmarks: &[LandmarkFrame], topo: &FaceTopology, sets: &FrameSets) -> MetricResult {
    let gaps: Vec<f64> = sets
        .silent_frames
        .iter()
        .filter_map(|&j| landmarks.get(j))
        .filter_map(|f| geometry::lip_vertical_distances(f, topo).ok())
        .collect();
    mad(&gaps).ok_or(Inapplicable::NoSilence)
}

fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Mean absolute difference between min-max normalized openness and volume
/// over speech frames with a usable face.
pub fn lip_sync(openness: &ScalarSignal, volume: &[f64], sets: &FrameSets, epsilon: f64) -> MetricResult {
    let (o, v): (Vec<f64>, Vec<f64>) = sets
        .speech_frames
        .iter()
        .filter_map(|&j| Some((openness.values.get(j).copied().flatten()?, *volume.get(j)?)))
        .unzip();
    if o.is_empty() {
        return Err(Inapplicable::NoSpeech);
    }
    let (o_lo, o_hi) = min_max(&o);
    let (v_lo, v_hi) = min_max(&v);
    let total: f64 = o
        .iter()
        .zip(&v)
        .map(|(oj, vj)| ((oj - o_lo) / (o_hi - o_lo + epsilon) - (vj - v_lo) / (v_hi - v_lo + epsilon)).abs())
        .sum();
    Ok(total / o.len() as f64)
}

/// Landmark subset compared by [`lmd`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LmdRegion {
    Face,
    Mouth,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LmdError {
    FrameCountMismatch { left: usize, right: usize },
    NoCommonFrames,
}

impl fmt::Display for LmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::FrameCountMismatch { left, right } => write!(f, "sequences differ in length ({left} vs {right})"),
            Self::NoCommonFrames => f.write_str("no frame is detected in both sequences"),
        }
    }
}

impl core::error::Error for LmdError {}

/// Mean per-point Euclidean distance between two landmark sequences over
/// frames detected in both.
pub fn lmd(a: &[LandmarkFrame], b: &[LandmarkFrame], topo: &FaceTopology, region: LmdRegion) -> Result<f64, LmdError> {
    if a.len() != b.len() {
        return Err(LmdError::FrameCountMismatch { left: a.len(), right: b.len() });
    }
    let all: Vec<usize>;
    let indices: &[usize] = match region {
        LmdRegion::Face => {
            all = (0..topo.total_points).collect();
            &all
        }
        LmdRegion::Mouth => &topo.lip_indices,
    };
    let mut total = 0.0;
    let mut frames = 0usize;
    for (fa, fb) in a.iter().zip(b).filter(|(x, y)| x.detection_ok && y.detection_ok) {
        total += indices.iter().map(|&k| dist(fa.points[k], fb.points[k])).sum::<f64>() / indices.len() as f64;
        frames += 1;
    }
    if frames == 0 {
        return Err(LmdError::NoCommonFrames);
    }
    Ok(total / frames as f64)
}

/// Metric vector plus bookkeeping for one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoEvaluation {
    pub metrics: MetricVector,
    /// Reason per inapplicable metric, in metric order.
    pub inapplicable: Vec<(Metric, Inapplicable)>,
    pub failed_detections: usize,
    /// Detected frames whose eye centroids coincide.
    pub degenerate_frames: usize,
    pub speech_frames: usize,
    pub silent_frames: usize,
}

/// Runs every metric on one validated bundle. A missing signal makes the
/// affected metrics inapplicable; the rest are still computed.
pub fn evaluate_video(bundle: &FeatureBundle, topo: &FaceTopology) -> VideoEvaluation {
    let n = bundle.n_frames();
    let sets = derive_frame_sets(&bundle.vad, bundle.fps, n, MIN_SILENCE_S);

    let quality = |f: fn(&[IqaFrame]) -> MetricResult| match &bundle.iqa {
        Some(iqa) => f(iqa),
        None => Err(Inapplicable::NoIqa),
    };
    let detected_pose: Vec<PoseFrame> = bundle
        .pose
        .iter()
        .zip(&bundle.landmarks)
        .filter(|(_, lm)| lm.detection_ok)
        .map(|(p, _)| *p)
        .collect();
    let openness = ScalarSignal::from_frames("mouth_openness", &bundle.landmarks, topo, geometry::mouth_openness);
    let sync = match &bundle.audio_volume {
        Some(vol) => lip_sync(&openness, vol, &sets, LIP_SYNC_EPSILON),
        None => Err(Inapplicable::NoAudio),
    };

    let results: [MetricResult; 8] = [
        quality(global_aesthetics),
        quality(mouth_quality),
        quality(face_quality),
        lip_dynamics(&bundle.landmarks, topo),
        head_motion_dynamics(&detected_pose),
        eyebrow_dynamics(&bundle.landmarks, topo),
        silent_lip_stability(&bundle.landmarks, topo, &sets),
        sync,
    ];

    let mut metrics = MetricVector::empty(bundle.video_id.clone());
    let mut inapplicable = Vec::new();
    for (m, r) in Metric::ALL.into_iter().zip(results) {
        match r {
            Ok(v) => metrics.set(m, Some(v)),
            Err(why) => inapplicable.push((m, why)),
        }
    }
    let failed = bundle.failed_detections();
    VideoEvaluation {
        metrics,
        inapplicable,
        failed_detections: failed,
        degenerate_frames: openness.missing() - failed,
        speech_frames: sets.speech_frames.len(),
        silent_frames: sets.silent_frames.len(),
    }
}
