//! Corpus evaluation: every source's bundles through the metric engine,
//! then GT-relative scoring and the leaderboard.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use theval_core::feature::{FaceTopology, FeatureBundle};
use theval_core::metrics::{evaluate_video, lmd, LmdRegion, MetricVector, VideoEvaluation};
use theval_core::scoring::{aggregate_model, build_leaderboard, AggregationMode, Leaderboard, NormalizedScoreCard};

use crate::error::{Error, Result};
use crate::format::load_feature_bundle;
use crate::manifest::{CorpusManifest, GROUND_TRUTH};

pub const EVALUATION_SCHEMA: &str = "theval.evaluation/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvaluateOptions {
    pub aggregation: AggregationMode,
    /// Worker threads; `None` uses one per core.
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRow {
    pub model: String,
    pub video_id: String,
    pub evaluation: VideoEvaluation,
}

/// Landmark distance to the ground truth, averaged over the videos where it
/// is defined.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Baseline {
    pub lmd_face: Option<f64>,
    pub lmd_mouth: Option<f64>,
    pub videos: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub model: String,
    pub video_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema: String,
    pub aggregation: AggregationMode,
    pub videos: Vec<VideoRow>,
    pub baselines: BTreeMap<String, Baseline>,
    /// The ground truth scored against itself.
    pub reference: NormalizedScoreCard,
    pub cards: Vec<NormalizedScoreCard>,
    pub leaderboard: Leaderboard,
    pub failures: Vec<Failure>,
}

impl EvaluationReport {
    pub fn card(&self, model: &str) -> Option<&NormalizedScoreCard> {
        if model == GROUND_TRUTH {
            return Some(&self.reference);
        }
        self.cards.iter().find(|c| c.model_id == model)
    }

    /// Per-video raw metric vectors of one source, in video order.
    pub fn vectors(&self, model: &str) -> Vec<&MetricVector> {
        self.videos.iter().filter(|r| r.model == model).map(|r| &r.evaluation.metrics).collect()
    }
}

/// Everything computed for one video id across all sources.
struct VideoOutcome {
    video_id: String,
    rows: Vec<VideoRow>,
    lmd: Vec<(String, Option<f64>, Option<f64>)>,
    failures: Vec<Failure>,
}

fn evaluate_one_video(manifest: &CorpusManifest, topo: &FaceTopology, video_id: &str) -> VideoOutcome {
    let mut out = VideoOutcome { video_id: video_id.to_owned(), rows: Vec::new(), lmd: Vec::new(), failures: Vec::new() };
    let load = |dir: &Path| load_feature_bundle(&dir.join(video_id), topo);
    let gt = match load(&manifest.ground_truth) {
        Ok(b) => b,
        Err(e) => {
            out.failures.push(Failure { model: GROUND_TRUTH.into(), video_id: video_id.into(), error: e.to_string() });
            return out;
        }
    };
    out.rows.push(row(GROUND_TRUTH, &gt, topo));
    for (model, dir) in &manifest.models {
        match load(dir) {
            Ok(b) => {
                let face = lmd(&gt.landmarks, &b.landmarks, topo, LmdRegion::Face).ok();
                let mouth = lmd(&gt.landmarks, &b.landmarks, topo, LmdRegion::Mouth).ok();
                out.lmd.push((model.clone(), face, mouth));
                out.rows.push(row(model, &b, topo));
            }
            Err(e) => out.failures.push(Failure { model: model.clone(), video_id: video_id.into(), error: e.to_string() }),
        }
    }
    out
}

fn row(model: &str, bundle: &FeatureBundle, topo: &FaceTopology) -> VideoRow {
    VideoRow { model: model.into(), video_id: bundle.video_id.clone(), evaluation: evaluate_video(bundle, topo) }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Evaluates the whole corpus. Videos run in parallel; the report is
/// assembled in manifest order, so it does not depend on scheduling.
///
/// A video whose ground-truth bundle fails is dropped for every model. A
/// model's failed video is dropped for that model only, and its score card
/// is computed against the ground truth of the videos it does have. Fails
/// outright only when no ground-truth video could be evaluated.
pub fn evaluate_corpus(manifest: &CorpusManifest, topo: &FaceTopology, opts: &EvaluateOptions) -> Result<EvaluationReport> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.workers {
        pool = pool.num_threads(n.max(1));
    }
    let pool = pool.build().map_err(|e| Error::Data(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<VideoOutcome> =
        pool.install(|| manifest.videos.par_iter().map(|v| evaluate_one_video(manifest, topo, v)).collect());

    let mut videos = Vec::new();
    let mut failures = Vec::new();
    let mut lmd_acc: BTreeMap<String, (Vec<f64>, Vec<f64>, usize)> = BTreeMap::new();
    for o in outcomes {
        tracing::debug!(video = %o.video_id, rows = o.rows.len(), failures = o.failures.len(), "evaluated");
        videos.extend(o.rows);
        failures.extend(o.failures);
        for (model, face, mouth) in o.lmd {
            let acc = lmd_acc.entry(model).or_default();
            acc.0.extend(face);
            acc.1.extend(mouth);
            acc.2 += 1;
        }
    }

    let vectors = |model: &str| -> Vec<MetricVector> {
        videos.iter().filter(|r| r.model == model).map(|r| r.evaluation.metrics.clone()).collect()
    };
    let gt = vectors(GROUND_TRUTH);
    if gt.is_empty() {
        let first = failures.first().map(|f| f.error.as_str()).unwrap_or("no videos");
        return Err(Error::Data(format!("no ground-truth video could be evaluated: {first}")));
    }
    let reference = aggregate_model(GROUND_TRUTH, &gt, &gt, opts.aggregation)
        .map_err(|source| Error::Score { model: GROUND_TRUTH.into(), source })?;

    let mut cards = Vec::new();
    for model in manifest.models.keys() {
        let mv = vectors(model);
        if mv.is_empty() {
            continue;
        }
        let gt_subset: Vec<MetricVector> =
            gt.iter().filter(|g| mv.iter().any(|m| m.video_id == g.video_id)).cloned().collect();
        let card = aggregate_model(model, &mv, &gt_subset, opts.aggregation)
            .map_err(|source| Error::Score { model: model.clone(), source })?;
        cards.push(card);
    }
    let baselines = lmd_acc
        .into_iter()
        .map(|(m, (face, mouth, n))| (m, Baseline { lmd_face: mean(&face), lmd_mouth: mean(&mouth), videos: n }))
        .collect();
    let leaderboard = build_leaderboard(&cards);
    Ok(EvaluationReport {
        schema: EVALUATION_SCHEMA.into(),
        aggregation: opts.aggregation,
        videos,
        baselines,
        reference,
        cards,
        leaderboard,
        failures,
    })
}
