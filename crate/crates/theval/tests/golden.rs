//! End-to-end scores on a small written corpus, checked against values
//! produced by `golden/golden_metrics.py`, an independent numpy
//! implementation run on the same files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use theval::engine::metrics::Metric;
use theval::engine::scoring::AggregationMode;
use theval::fixtures::{write_corpus, CorpusSpec};
use theval::format::read_json;
use theval::manifest::ManifestFile;
use theval::{evaluate_corpus, load_topology, CorpusManifest, EvaluateOptions, EvaluationReport, GROUND_TRUTH};

#[derive(Deserialize)]
struct ExpectedCard {
    per_metric: BTreeMap<String, Option<f64>>,
    final_score: f64,
}

#[derive(Deserialize)]
struct Expected {
    videos: BTreeMap<String, BTreeMap<String, BTreeMap<String, Option<f64>>>>,
    cards: BTreeMap<String, ExpectedCard>,
}

fn golden_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden"))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-12)
}

fn evaluate(root: &Path, aggregation: AggregationMode) -> EvaluationReport {
    let manifest = CorpusManifest::load(&root.join("manifest.json")).unwrap();
    let topo = load_topology(manifest.topology.as_deref().unwrap()).unwrap();
    evaluate_corpus(&manifest, &topo, &EvaluateOptions { aggregation, workers: Some(2) }).unwrap()
}

#[test]
fn matches_independent_implementation() {
    let spec: CorpusSpec = read_json(&golden_dir().join("corpus.json")).unwrap();
    let expected: Expected = read_json(&golden_dir().join("expected.json")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_corpus(&spec, dir.path(), false).unwrap();
    let report = evaluate(dir.path(), AggregationMode::CorpusMean);
    assert!(report.failures.is_empty(), "{:?}", report.failures);

    let mut compared = 0;
    for row in &report.videos {
        let want = &expected.videos[&row.model][&row.video_id];
        for m in Metric::ALL {
            let got = row.evaluation.metrics.get(m);
            match (got, want[m.name()]) {
                (Some(g), Some(w)) => assert!(close(g, w), "{}/{} {}: {g} vs {w}", row.model, row.video_id, m.name()),
                (None, None) => {}
                other => panic!("{}/{} {}: {other:?}", row.model, row.video_id, m.name()),
            }
            compared += 1;
        }
    }
    assert_eq!(compared, 3 * 2 * 8);

    for (model, want) in &expected.cards {
        let card = report.card(model).unwrap();
        assert!(close(card.final_score, want.final_score), "{model}: {} vs {}", card.final_score, want.final_score);
        for m in Metric::ALL {
            match (card.per_metric.get(m), want.per_metric[m.name()]) {
                (Some(g), Some(w)) => assert!(close(g, w), "{model} {}: {g} vs {w}", m.name()),
                (None, None) => {}
                other => panic!("{model} {}: {other:?}", m.name()),
            }
        }
    }
}

#[test]
fn ground_truth_scores_itself_perfectly() {
    let spec: CorpusSpec = read_json(&golden_dir().join("corpus.json")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_corpus(&spec, dir.path(), false).unwrap();
    for mode in [AggregationMode::CorpusMean, AggregationMode::PerVideo] {
        let report = evaluate(dir.path(), mode);
        let gt = report.card(GROUND_TRUTH).unwrap();
        for m in Metric::ALL {
            assert_eq!(gt.per_metric.get(m), Some(1.0), "{}", m.name());
        }
        assert_eq!(gt.final_score, 1.0);
    }
}

#[test]
fn aggregation_mode_leaves_raw_metrics_alone() {
    let spec: CorpusSpec = read_json(&golden_dir().join("corpus.json")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_corpus(&spec, dir.path(), false).unwrap();
    let a = evaluate(dir.path(), AggregationMode::CorpusMean);
    let b = evaluate(dir.path(), AggregationMode::PerVideo);
    assert_eq!(a.videos, b.videos);
    for card in &b.cards {
        assert!((0.0..=1.0).contains(&card.final_score));
    }
}

#[test]
fn missing_model_directory_is_named() {
    let spec: CorpusSpec = read_json(&golden_dir().join("corpus.json")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_corpus(&spec, dir.path(), false).unwrap();
    let mut file: ManifestFile = read_json(&dir.path().join("manifest.json")).unwrap();
    file.models.insert("gamma".into(), "no-such-dir".into());
    let err = CorpusManifest::from_file(file, dir.path()).unwrap_err().to_string();
    assert!(err.contains("no-such-dir"), "{err}");
}

#[test]
fn reserved_model_id_is_rejected() {
    let spec: CorpusSpec = read_json(&golden_dir().join("corpus.json")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_corpus(&spec, dir.path(), false).unwrap();
    let mut file: ManifestFile = read_json(&dir.path().join("manifest.json")).unwrap();
    file.models.insert(GROUND_TRUTH.into(), "alpha".into());
    assert!(CorpusManifest::from_file(file, dir.path()).is_err());
}

#[test]
fn a_broken_model_video_is_reported_not_fatal() {
    let spec: CorpusSpec = read_json(&golden_dir().join("corpus.json")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_corpus(&spec, dir.path(), false).unwrap();
    std::fs::write(dir.path().join("beta/talker-B/landmarks.jsonl"), "{not json\n").unwrap();
    let report = evaluate(dir.path(), AggregationMode::CorpusMean);
    assert_eq!(report.failures.len(), 1);
    assert_eq!((report.failures[0].model.as_str(), report.failures[0].video_id.as_str()), ("beta", "talker-B"));
    assert_eq!(report.vectors("beta").len(), 1);
    assert_eq!(report.vectors("alpha").len(), 2);
}
