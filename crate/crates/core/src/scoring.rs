//! Ground-truth-relative normalization, per-model score cards and the
//! leaderboard.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt::{self, Write};

use serde::{Deserialize, Serialize};

use crate::descriptive::mean;
use crate::metrics::{Dimension, Metric, MetricVector};

/// Ground-truth values below this are treated as zero.
pub const DEGENERATE_GT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum ScoreError {
    InvalidValue { model: f64, gt: f64 },
    EmptyCorpus,
    VideoSetMismatch { video_id: String },
}

impl fmt::Display for ScoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidValue { model, gt } => {
                write!(f, "cannot normalize model value {model} against ground truth {gt}")
            }
            Self::EmptyCorpus => f.write_str("no videos to aggregate"),
            Self::VideoSetMismatch { video_id } => {
                write!(f, "video `{video_id}` is not present for both the model and the ground truth")
            }
        }
    }
}

impl core::error::Error for ScoreError {}

/// `1 - |model - gt| / gt`, clamped to `[0, 1]`.
///
/// A ground truth below [`DEGENERATE_GT`] scores 1 when the model is also
/// below it and 0 otherwise. Negative or non-finite inputs are rejected.
pub fn normalize_to_gt(model: f64, gt: f64) -> Result<f64, ScoreError> {
    if !(model.is_finite() && gt.is_finite()) || gt < 0.0 {
        return Err(ScoreError::InvalidValue { model, gt });
    }
    if gt < DEGENERATE_GT {
        return Ok(if model.abs() < DEGENERATE_GT { 1.0 } else { 0.0 });
    }
    Ok((1.0 - (model - gt).abs() / gt).clamp(0.0, 1.0))
}

/// How per-video raw values become one per-model score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMode {
    /// Average raw values over the corpus for model and GT, normalize once.
    #[default]
    CorpusMean,
    /// Normalize each video against its GT, then average the scores.
    PerVideo,
}

/// Eight optional per-metric values keyed by metric name.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricScores {
    pub global_aesthetics: Option<f64>,
    pub mouth_quality: Option<f64>,
    pub face_quality: Option<f64>,
    pub lip_dynamics: Option<f64>,
    pub head_motion_dynamics: Option<f64>,
    pub eyebrow_dynamics: Option<f64>,
    pub silent_lip_stability: Option<f64>,
    pub lip_sync: Option<f64>,
}

impl MetricScores {
    pub fn from_array(v: [Option<f64>; 8]) -> Self {
        Self {
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

    pub fn to_array(&self) -> [Option<f64>; 8] {
        [
            self.global_aesthetics,
            self.mouth_quality,
            self.face_quality,
            self.lip_dynamics,
            self.head_motion_dynamics,
            self.eyebrow_dynamics,
            self.silent_lip_stability,
            self.lip_sync,
        ]
    }

    pub fn get(&self, m: Metric) -> Option<f64> {
        self.to_array()[m.index()]
    }
}

/// Per-metric counts of videos on which a metric was inapplicable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MetricCounts {
    pub global_aesthetics: usize,
    pub mouth_quality: usize,
    pub face_quality: usize,
    pub lip_dynamics: usize,
    pub head_motion_dynamics: usize,
    pub eyebrow_dynamics: usize,
    pub silent_lip_stability: usize,
    pub lip_sync: usize,
}

impl MetricCounts {
    pub fn from_array(v: [usize; 8]) -> Self {
        Self {
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
}

/// GT-normalized scores of one model over a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedScoreCard {
    pub model_id: String,
    pub per_metric: MetricScores,
    pub quality: Option<f64>,
    pub naturalness: Option<f64>,
    pub synchronization: Option<f64>,
    /// Mean of the available per-metric scores; 0 when none is available.
    pub final_score: f64,
    pub videos_used: usize,
    pub inapplicable_counts: MetricCounts,
    /// Metrics left out of every mean because no video produced them.
    pub excluded_metrics: Vec<Metric>,
}

impl NormalizedScoreCard {
    /// Assembles a card from already-normalized per-metric scores.
    pub fn from_scores(model_id: impl Into<String>, scores: [Option<f64>; 8]) -> Self {
        let dim = |d: Dimension| {
            let present: Vec<f64> = d.metrics().iter().filter_map(|m| scores[m.index()]).collect();
            mean(&present)
        };
        let present: Vec<f64> = scores.iter().flatten().copied().collect();
        let excluded_metrics = Metric::ALL.into_iter().filter(|m| scores[m.index()].is_none()).collect();
        Self {
            model_id: model_id.into(),
            per_metric: MetricScores::from_array(scores),
            quality: dim(Dimension::Quality),
            naturalness: dim(Dimension::Naturalness),
            synchronization: dim(Dimension::Synchronization),
            final_score: mean(&present).unwrap_or(0.0),
            videos_used: 0,
            inapplicable_counts: MetricCounts::default(),
            excluded_metrics,
        }
    }

    pub fn dimension(&self, d: Dimension) -> Option<f64> {
        match d {
            Dimension::Quality => self.quality,
            Dimension::Naturalness => self.naturalness,
            Dimension::Synchronization => self.synchronization,
        }
    }
}

/// Normalizes one model's per-video metric vectors against the ground
/// truth's vectors for the same videos.
pub fn aggregate_model(
    model_id: &str,
    model: &[MetricVector],
    gt: &[MetricVector],
    mode: AggregationMode,
) -> Result<NormalizedScoreCard, ScoreError> {
    if model.is_empty() || gt.is_empty() {
        return Err(ScoreError::EmptyCorpus);
    }
    let mut pairs: Vec<(&MetricVector, &MetricVector)> = Vec::with_capacity(model.len());
    for mv in model {
        let gv = gt
            .iter()
            .find(|g| g.video_id == mv.video_id)
            .ok_or_else(|| ScoreError::VideoSetMismatch { video_id: mv.video_id.clone() })?;
        pairs.push((mv, gv));
    }
    if let Some(g) = gt.iter().find(|g| !model.iter().any(|m| m.video_id == g.video_id)) {
        return Err(ScoreError::VideoSetMismatch { video_id: g.video_id.clone() });
    }

    let mut scores = [None; 8];
    let mut inapplicable = [0usize; 8];
    for m in Metric::ALL {
        inapplicable[m.index()] = model.iter().filter(|v| v.get(m).is_none()).count();
        scores[m.index()] = match mode {
            AggregationMode::CorpusMean => {
                let mv: Vec<f64> = model.iter().filter_map(|v| v.get(m)).collect();
                let gv: Vec<f64> = gt.iter().filter_map(|v| v.get(m)).collect();
                match (mean(&mv), mean(&gv)) {
                    (Some(a), Some(b)) => Some(normalize_to_gt(a, b)?),
                    _ => None,
                }
            }
            AggregationMode::PerVideo => {
                let mut per = Vec::new();
                for (mv, gv) in &pairs {
                    if let (Some(a), Some(b)) = (mv.get(m), gv.get(m)) {
                        per.push(normalize_to_gt(a, b)?);
                    }
                }
                mean(&per)
            }
        };
    }
    let mut card = NormalizedScoreCard::from_scores(model_id, scores);
    card.videos_used = model.len();
    card.inapplicable_counts = MetricCounts::from_array(inapplicable);
    Ok(card)
}

/// Score cards ordered by final score, best first; ties go to the
/// lexicographically smaller model id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub rows: Vec<NormalizedScoreCard>,
}

/// The ranking relation used by [`build_leaderboard`].
pub fn leaderboard_order(a: &NormalizedScoreCard, b: &NormalizedScoreCard) -> Ordering {
    b.final_score.total_cmp(&a.final_score).then_with(|| a.model_id.cmp(&b.model_id))
}

pub fn build_leaderboard(cards: &[NormalizedScoreCard]) -> Leaderboard {
    let mut rows = cards.to_vec();
    rows.sort_by(leaderboard_order);
    Leaderboard { rows }
}

/// Column order of the text table: quality, synchronization, naturalness.
const TABLE_GROUPS: [Dimension; 3] = [Dimension::Quality, Dimension::Synchronization, Dimension::Naturalness];

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) => alloc::format!("{x:.4}"),
        None => String::from("-"),
    }
}

impl Leaderboard {
    /// Aligned plain-text table with metric columns grouped by dimension.
    pub fn render_text(&self) -> String {
        let mut header: Vec<String> = alloc::vec![String::from("#"), String::from("Model")];
        for d in TABLE_GROUPS {
            for m in d.metrics() {
                header.push(alloc::format!("({}) {}", m.index() + 1, m.title()));
            }
            let mut title = String::from(d.name());
            title[..1].make_ascii_uppercase();
            header.push(title);
        }
        header.push(String::from("Final Score"));

        let mut rows: Vec<Vec<String>> = Vec::with_capacity(self.rows.len());
        for (rank, card) in self.rows.iter().enumerate() {
            let mut row = alloc::vec![alloc::format!("{}", rank + 1), card.model_id.clone()];
            for d in TABLE_GROUPS {
                for m in d.metrics() {
                    row.push(cell(card.per_metric.get(*m)));
                }
                row.push(cell(card.dimension(d)));
            }
            row.push(cell(Some(card.final_score)));
            rows.push(row);
        }

        let widths: Vec<usize> = (0..header.len())
            .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let mut line = |cells: &[String]| {
            let mut s = String::new();
            for (c, text) in cells.iter().enumerate() {
                if c > 0 {
                    s.push_str("  ");
                }
                if c == 1 {
                    let _ = write!(s, "{text:<w$}", w = widths[c]);
                } else {
                    let _ = write!(s, "{text:>w$}", w = widths[c]);
                }
            }
            out.push_str(s.trim_end());
            out.push('\n');
        };
        line(&header);
        line(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>());
        for r in &rows {
            line(r);
        }
        out
    }
}
