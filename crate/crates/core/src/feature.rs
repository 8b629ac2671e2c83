//! Canonical per-frame signal model and its invariant checker.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// A 2D image-plane coordinate in pixels, `[x, y]`.
pub type Point = [f64; 2];

/// Number of lip landmarks every topology must declare.
pub const LIP_LANDMARKS: usize = 40;

/// Landmarks detected on one video frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkFrame {
    pub frame_index: usize,
    pub timestamp_s: f64,
    pub detection_ok: bool,
    pub points: Vec<Point>,
}

/// Head orientation (degrees) and face center (pixels) on one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseFrame {
    pub frame_index: usize,
    pub pitch_deg: f64,
    pub yaw_deg: f64,
    pub roll_deg: f64,
    pub center_x: f64,
    pub center_y: f64,
}

/// Unit-interval image quality scores for one frame. A `None` score means
/// the extractor could not score that frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IqaFrame {
    pub frame_index: usize,
    pub aesthetic: Option<f64>,
    pub face_quality: Option<f64>,
    pub mouth_quality: Option<f64>,
}

/// A voice-activity interval `[start_s, end_s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VadSegment {
    pub start_s: f64,
    pub end_s: f64,
    pub is_speech: bool,
}

impl VadSegment {
    pub fn speech(start_s: f64, end_s: f64) -> Self {
        Self { start_s, end_s, is_speech: true }
    }

    pub fn silence(start_s: f64, end_s: f64) -> Self {
        Self { start_s, end_s, is_speech: false }
    }

    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Where the bundle's VAD segments came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VadOrigin {
    /// Supplied by the extractor.
    #[default]
    Extractor,
    /// Derived from frame RMS thresholding.
    EnergyFallback { low_confidence: bool },
}

/// Every per-frame signal of one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBundle {
    pub video_id: String,
    pub fps: f64,
    pub landmarks: Vec<LandmarkFrame>,
    pub pose: Vec<PoseFrame>,
    pub iqa: Option<Vec<IqaFrame>>,
    pub vad: Vec<VadSegment>,
    #[serde(default)]
    pub vad_origin: VadOrigin,
    /// Per-frame RMS volume; `None` when the video has no audio track.
    pub audio_volume: Option<Vec<f64>>,
}

impl FeatureBundle {
    /// Frame count `N`, taken from the landmark track.
    pub fn n_frames(&self) -> usize {
        self.landmarks.len()
    }

    pub fn failed_detections(&self) -> usize {
        self.landmarks.iter().filter(|f| !f.detection_ok).count()
    }

    pub fn duration_s(&self) -> f64 {
        self.n_frames() as f64 / self.fps
    }

    /// Checks every typed invariant of the bundle against `topo`.
    pub fn validate(&self, topo: &FaceTopology) -> ValidationReport {
        validate_bundle(self, topo)
    }
}

/// Landmark index sets for one face-mesh layout.
///
/// Upper and lower lip lists are expected in left-to-right order along the
/// lip contour; default stability pairs are picked by position in them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceTopology {
    pub total_points: usize,
    pub lip_indices: Vec<usize>,
    pub upper_lip_indices: Vec<usize>,
    pub lower_lip_indices: Vec<usize>,
    pub left_eye_indices: Vec<usize>,
    pub right_eye_indices: Vec<usize>,
    pub left_brow_indices: Vec<usize>,
    pub right_brow_indices: Vec<usize>,
    pub lip_pair_set: Vec<(usize, usize)>,
    pub stability_pair_set: Vec<(usize, usize)>,
}

/// Serialized form of a topology. Pair sets are optional and default to
/// every unordered pair of lip landmarks and three vertical pairs at the
/// left quarter, center and right quarter of the mouth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyDef {
    pub total_points: usize,
    pub lip_indices: Vec<usize>,
    pub upper_lip_indices: Vec<usize>,
    pub lower_lip_indices: Vec<usize>,
    pub left_eye_indices: Vec<usize>,
    pub right_eye_indices: Vec<usize>,
    pub left_brow_indices: Vec<usize>,
    pub right_brow_indices: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lip_pair_set: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability_pair_set: Option<Vec<(usize, usize)>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologyError {
    LipCount(usize),
    EmptyIndexSet(&'static str),
    IndexOutOfRange { set: &'static str, index: usize, total: usize },
    DuplicateLipIndex(usize),
    PairOutsideLips { a: usize, b: usize },
    DegeneratePair { set: &'static str, a: usize, b: usize },
}

impl fmt::Display for TopologyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::LipCount(n) => {
                write!(f, "lip_indices must hold exactly {LIP_LANDMARKS} entries, found {n}")
            }
            Self::EmptyIndexSet(set) => write!(f, "index set `{set}` is empty"),
            Self::IndexOutOfRange { set, index, total } => {
                write!(f, "index {index} in `{set}` is out of range for {total} points")
            }
            Self::DuplicateLipIndex(i) => write!(f, "lip index {i} listed twice"),
            Self::PairOutsideLips { a, b } => {
                write!(f, "lip pair ({a}, {b}) uses an index outside lip_indices")
            }
            Self::DegeneratePair { set, a, b } => {
                write!(f, "pair ({a}, {b}) in `{set}` joins a point to itself")
            }
        }
    }
}

impl core::error::Error for TopologyError {}

impl TopologyDef {
    pub fn build(self) -> Result<FaceTopology, TopologyError> {
        let lip_pair_set = match self.lip_pair_set {
            Some(p) => p,
            None => all_pairs(&self.lip_indices),
        };
        let stability_pair_set = match self.stability_pair_set {
            Some(p) => p,
            None => quarter_pairs(&self.upper_lip_indices, &self.lower_lip_indices),
        };
        let topo = FaceTopology {
            total_points: self.total_points,
            lip_indices: self.lip_indices,
            upper_lip_indices: self.upper_lip_indices,
            lower_lip_indices: self.lower_lip_indices,
            left_eye_indices: self.left_eye_indices,
            right_eye_indices: self.right_eye_indices,
            left_brow_indices: self.left_brow_indices,
            right_brow_indices: self.right_brow_indices,
            lip_pair_set,
            stability_pair_set,
        };
        topo.check()?;
        Ok(topo)
    }
}

impl From<&FaceTopology> for TopologyDef {
    fn from(t: &FaceTopology) -> Self {
        Self {
            total_points: t.total_points,
            lip_indices: t.lip_indices.clone(),
            upper_lip_indices: t.upper_lip_indices.clone(),
            lower_lip_indices: t.lower_lip_indices.clone(),
            left_eye_indices: t.left_eye_indices.clone(),
            right_eye_indices: t.right_eye_indices.clone(),
            left_brow_indices: t.left_brow_indices.clone(),
            right_brow_indices: t.right_brow_indices.clone(),
            lip_pair_set: Some(t.lip_pair_set.clone()),
            stability_pair_set: Some(t.stability_pair_set.clone()),
        }
    }
}

/// Every unordered pair of `indices`, in lexicographic position order.
pub fn all_pairs(indices: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(indices.len() * indices.len().saturating_sub(1) / 2);
    for (i, &a) in indices.iter().enumerate() {
        for &b in &indices[i + 1..] {
            out.push((a, b));
        }
    }
    out
}

/// Upper/lower pairs at the left quarter, center and right quarter of the
/// lip lists.
pub fn quarter_pairs(upper: &[usize], lower: &[usize]) -> Vec<(usize, usize)> {
    if upper.is_empty() || lower.is_empty() {
        return Vec::new();
    }
    let pick = |list: &[usize], num: usize| list[(list.len() - 1) * num / 4];
    [1, 2, 3].iter().map(|&q| (pick(upper, q), pick(lower, q))).collect()
}

impl FaceTopology {
    pub fn check(&self) -> Result<(), TopologyError> {
        if self.lip_indices.len() != LIP_LANDMARKS {
            return Err(TopologyError::LipCount(self.lip_indices.len()));
        }
        let sets: [(&'static str, &[usize]); 7] = [
            ("lip_indices", &self.lip_indices),
            ("upper_lip_indices", &self.upper_lip_indices),
            ("lower_lip_indices", &self.lower_lip_indices),
            ("left_eye_indices", &self.left_eye_indices),
            ("right_eye_indices", &self.right_eye_indices),
            ("left_brow_indices", &self.left_brow_indices),
            ("right_brow_indices", &self.right_brow_indices),
        ];
        for (name, set) in sets {
            if set.is_empty() {
                return Err(TopologyError::EmptyIndexSet(name));
            }
            if let Some(&index) = set.iter().find(|&&i| i >= self.total_points) {
                return Err(TopologyError::IndexOutOfRange { set: name, index, total: self.total_points });
            }
        }
        let mut lips = BTreeSet::new();
        for &i in &self.lip_indices {
            if !lips.insert(i) {
                return Err(TopologyError::DuplicateLipIndex(i));
            }
        }
        if self.lip_pair_set.is_empty() {
            return Err(TopologyError::EmptyIndexSet("lip_pair_set"));
        }
        for &(a, b) in &self.lip_pair_set {
            if !lips.contains(&a) || !lips.contains(&b) {
                return Err(TopologyError::PairOutsideLips { a, b });
            }
            if a == b {
                return Err(TopologyError::DegeneratePair { set: "lip_pair_set", a, b });
            }
        }
        if self.stability_pair_set.is_empty() {
            return Err(TopologyError::EmptyIndexSet("stability_pair_set"));
        }
        for &(a, b) in &self.stability_pair_set {
            for index in [a, b] {
                if index >= self.total_points {
                    return Err(TopologyError::IndexOutOfRange {
                        set: "stability_pair_set",
                        index,
                        total: self.total_points,
                    });
                }
            }
            if a == b {
                return Err(TopologyError::DegeneratePair { set: "stability_pair_set", a, b });
            }
        }
        Ok(())
    }
}

/// Which per-frame track a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Track {
    Landmarks,
    Pose,
    Iqa,
    Vad,
    AudioVolume,
}

impl fmt::Display for Track {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Track::Landmarks => "landmarks",
            Track::Pose => "pose",
            Track::Iqa => "iqa",
            Track::Vad => "vad",
            Track::AudioVolume => "audio_volume",
        })
    }
}

/// One broken invariant, with enough location to find it in the files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    InvalidFps { fps: f64 },
    EmptyBundle,
    FrameCountMismatch { track: Track, expected: usize, found: usize },
    FrameIndex { track: Track, position: usize, found: usize },
    PointCount { frame: usize, expected: usize, found: usize },
    NonFiniteCoordinate { frame: usize, point: usize },
    InvalidTimestamp { frame: usize },
    TimestampNotIncreasing { frame: usize },
    PoseAngle { frame: usize, field: String, value: f64 },
    NonFinitePose { frame: usize, field: String },
    IqaOutOfRange { frame: usize, field: String, value: f64 },
    VadSegmentEmpty { segment: usize },
    VadNonFinite { segment: usize },
    VadOverlap { first: usize, second: usize },
    VadUnsorted { segment: usize },
    InvalidVolume { frame: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidFps { fps } => write!(f, "fps must be finite and positive, got {fps}"),
            Self::EmptyBundle => f.write_str("bundle has no frames"),
            Self::FrameCountMismatch { track, expected, found } => {
                write!(f, "{track}: {found} frames, expected {expected}")
            }
            Self::FrameIndex { track, position, found } => {
                write!(f, "{track}: record {position} carries frame_index {found}")
            }
            Self::PointCount { frame, expected, found } => {
                write!(f, "landmarks: frame {frame} has {found} points, topology declares {expected}")
            }
            Self::NonFiniteCoordinate { frame, point } => {
                write!(f, "landmarks: frame {frame} point {point} is not finite")
            }
            Self::InvalidTimestamp { frame } => {
                write!(f, "landmarks: frame {frame} has a negative or non-finite timestamp")
            }
            Self::TimestampNotIncreasing { frame } => {
                write!(f, "landmarks: timestamp of frame {frame} does not increase")
            }
            Self::PoseAngle { frame, field, value } => {
                write!(f, "pose: frame {frame} {field} = {value} exceeds 180 degrees")
            }
            Self::NonFinitePose { frame, field } => write!(f, "pose: frame {frame} {field} is not finite"),
            Self::IqaOutOfRange { frame, field, value } => {
                write!(f, "iqa: frame {frame} {field} = {value} outside [0, 1]")
            }
            Self::VadSegmentEmpty { segment } => write!(f, "vad: segment {segment} has start >= end"),
            Self::VadNonFinite { segment } => write!(f, "vad: segment {segment} has non-finite bounds"),
            Self::VadOverlap { first, second } => write!(f, "vad: segments {first} and {second} overlap"),
            Self::VadUnsorted { segment } => write!(f, "vad: segment {segment} starts before its predecessor"),
            Self::InvalidVolume { frame } => write!(f, "audio_volume: frame {frame} is negative or not finite"),
        }
    }
}

/// Result of [`validate_bundle`]. Violations are data, never errors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Frames whose landmark detection failed; excluded from every statistic.
    pub failed_detections: usize,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_bundle(bundle: &FeatureBundle, topo: &FaceTopology) -> ValidationReport {
    let mut v = Vec::new();
    if !(bundle.fps.is_finite() && bundle.fps > 0.0) {
        v.push(Violation::InvalidFps { fps: bundle.fps });
    }
    let n = bundle.landmarks.len();
    if n == 0 {
        v.push(Violation::EmptyBundle);
    }

    let mut prev_t: Option<f64> = None;
    for (pos, frame) in bundle.landmarks.iter().enumerate() {
        if frame.frame_index != pos {
            v.push(Violation::FrameIndex { track: Track::Landmarks, position: pos, found: frame.frame_index });
        }
        if frame.points.len() != topo.total_points {
            v.push(Violation::PointCount { frame: pos, expected: topo.total_points, found: frame.points.len() });
        }
        if let Some(point) = frame.points.iter().position(|p| !(p[0].is_finite() && p[1].is_finite())) {
            v.push(Violation::NonFiniteCoordinate { frame: pos, point });
        }
        let t = frame.timestamp_s;
        if !(t.is_finite() && t >= 0.0) {
            v.push(Violation::InvalidTimestamp { frame: pos });
        } else {
            if let Some(p) = prev_t {
                if t <= p {
                    v.push(Violation::TimestampNotIncreasing { frame: pos });
                }
            }
            prev_t = Some(t);
        }
    }

    if bundle.pose.len() != n {
        v.push(Violation::FrameCountMismatch { track: Track::Pose, expected: n, found: bundle.pose.len() });
    }
    for (pos, p) in bundle.pose.iter().enumerate() {
        if p.frame_index != pos {
            v.push(Violation::FrameIndex { track: Track::Pose, position: pos, found: p.frame_index });
        }
        for (field, value) in [("pitch_deg", p.pitch_deg), ("yaw_deg", p.yaw_deg), ("roll_deg", p.roll_deg)] {
            if !value.is_finite() {
                v.push(Violation::NonFinitePose { frame: pos, field: field.into() });
            } else if value.abs() > 180.0 {
                v.push(Violation::PoseAngle { frame: pos, field: field.into(), value });
            }
        }
        for (field, value) in [("center_x", p.center_x), ("center_y", p.center_y)] {
            if !value.is_finite() {
                v.push(Violation::NonFinitePose { frame: pos, field: field.into() });
            }
        }
    }

    if let Some(iqa) = &bundle.iqa {
        if iqa.len() != n {
            v.push(Violation::FrameCountMismatch { track: Track::Iqa, expected: n, found: iqa.len() });
        }
        for (pos, q) in iqa.iter().enumerate() {
            if q.frame_index != pos {
                v.push(Violation::FrameIndex { track: Track::Iqa, position: pos, found: q.frame_index });
            }
            for (field, score) in
                [("aesthetic", q.aesthetic), ("face_quality", q.face_quality), ("mouth_quality", q.mouth_quality)]
            {
                if let Some(value) = score {
                    if !(0.0..=1.0).contains(&value) {
                        v.push(Violation::IqaOutOfRange { frame: pos, field: field.into(), value });
                    }
                }
            }
        }
    }

    for (i, seg) in bundle.vad.iter().enumerate() {
        if !(seg.start_s.is_finite() && seg.end_s.is_finite()) {
            v.push(Violation::VadNonFinite { segment: i });
            continue;
        }
        if seg.start_s >= seg.end_s {
            v.push(Violation::VadSegmentEmpty { segment: i });
        }
        if i > 0 {
            let prev = &bundle.vad[i - 1];
            if seg.start_s < prev.start_s {
                v.push(Violation::VadUnsorted { segment: i });
            } else if seg.start_s < prev.end_s {
                v.push(Violation::VadOverlap { first: i - 1, second: i });
            }
        }
    }

    if let Some(vol) = &bundle.audio_volume {
        if vol.len() != n {
            v.push(Violation::FrameCountMismatch { track: Track::AudioVolume, expected: n, found: vol.len() });
        }
        if let Some(frame) = vol.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
            v.push(Violation::InvalidVolume { frame });
        }
    }

    ValidationReport { violations: v, failed_detections: bundle.failed_detections() }
}
