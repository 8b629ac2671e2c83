//! Rank correlation of model scores against human win rates.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use theval_core::metrics::{Dimension, Metric};
use theval_core::stats::{
    bootstrap_ci_votes, correlate, spearman_pvalue, spearman_rho, win_rates, BootstrapConfig, CorrelationResult,
    PairedSeries, WinRates,
};
use theval_core::study::VoteRecord;

use crate::error::{Error, Result};
use crate::evaluate::EvaluationReport;
use crate::format::read_jsonl;
use crate::manifest::GROUND_TRUTH;

pub const CORRELATION_SCHEMA: &str = "theval.correlation/1";

/// What the bootstrap resamples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ResampleUnit {
    /// Model-level (score, win rate) points.
    #[default]
    Models,
    /// Individual votes; win rates are recomputed per resample.
    Votes,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelateOptions {
    pub seed: u64,
    pub resamples: usize,
    pub level: f64,
    pub include_gt: bool,
    pub unit: ResampleUnit,
}

impl Default for CorrelateOptions {
    fn default() -> Self {
        Self { seed: 0, resamples: 10_000, level: 0.95, include_gt: false, unit: ResampleUnit::Models }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Baseline,
    Metric,
    Dimension,
    Final,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub name: String,
    pub kind: RowKind,
    /// Models contributing a point, in id order.
    pub models: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<CorrelationResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub schema: String,
    pub seed: u64,
    pub resamples: usize,
    pub level: f64,
    pub resample_unit: ResampleUnit,
    pub include_gt: bool,
    pub votes: usize,
    pub win_rates: WinRates,
    pub rows: Vec<CorrelationRow>,
}

impl CorrelationReport {
    pub fn row(&self, name: &str) -> Option<&CorrelationRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

pub fn read_votes(path: &Path) -> Result<Vec<VoteRecord>> {
    read_jsonl(path)
}

/// Score of each model on one row.
type Column = BTreeMap<String, f64>;

fn columns(report: &EvaluationReport, include_gt: bool) -> Vec<(String, RowKind, Column)> {
    let mut cards: Vec<_> = report.cards.iter().collect();
    if include_gt {
        cards.push(&report.reference);
    }
    let mut out = Vec::new();
    let baseline = |f: fn(&crate::evaluate::Baseline) -> Option<f64>| -> Column {
        let mut col: Column = report
            .baselines
            .iter()
            .filter(|(m, _)| cards.iter().any(|c| &c.model_id == *m))
            .filter_map(|(m, b)| f(b).map(|v| (m.clone(), v)))
            .collect();
        if include_gt {
            col.insert(GROUND_TRUTH.into(), 0.0);
        }
        col
    };
    out.push(("lmd_face".into(), RowKind::Baseline, baseline(|b| b.lmd_face)));
    out.push(("lmd_mouth".into(), RowKind::Baseline, baseline(|b| b.lmd_mouth)));
    for m in Metric::ALL {
        let col = cards.iter().filter_map(|c| c.per_metric.get(m).map(|v| (c.model_id.clone(), v))).collect();
        out.push((m.name().into(), RowKind::Metric, col));
    }
    for d in Dimension::ALL {
        let col = cards.iter().filter_map(|c| c.dimension(d).map(|v| (c.model_id.clone(), v))).collect();
        out.push((d.name().into(), RowKind::Dimension, col));
    }
    let col = cards.iter().map(|c| (c.model_id.clone(), c.final_score)).collect();
    out.push(("final_score".into(), RowKind::Final, col));
    out
}

fn correlate_row(col: &Column, rates: &WinRates, votes: &[VoteRecord], opts: &CorrelateOptions) -> (Vec<String>, std::result::Result<CorrelationResult, String>) {
    let points: Column = col.iter().filter(|(m, _)| rates.rate(m).is_some()).map(|(m, v)| (m.clone(), *v)).collect();
    let labels: Vec<String> = points.keys().cloned().collect();
    let x: Vec<f64> = points.values().copied().collect();
    let y: Vec<f64> = labels.iter().map(|m| rates.rate(m).expect("filtered above")).collect();
    let config = BootstrapConfig { resamples: opts.resamples, level: opts.level, seed: opts.seed };
    let result = PairedSeries::new(labels.clone(), x, y).and_then(|series| match opts.unit {
        ResampleUnit::Models => correlate(&series, &config),
        ResampleUnit::Votes => {
            let rho = spearman_rho(&series)?;
            let p = spearman_pvalue(rho, series.len())?;
            let ci = bootstrap_ci_votes(&points, votes, &config)?;
            Ok(CorrelationResult {
                n: series.len(),
                rho,
                p_value: p.value,
                p_method: p.method,
                p_at_floor: p.at_floor,
                ci_low: ci.low,
                ci_high: ci.high,
                resamples: ci.resamples,
                degenerate_resamples: ci.degenerate,
            })
        }
    });
    (labels, result.map_err(|e| e.to_string()))
}

/// Correlates every metric, dimension and baseline row of `report` with
/// the win rates in `votes`.
///
/// Votes may involve the ground truth; its win rate is only correlated
/// when `include_gt` is set. A vote naming a method the report does not
/// know is an error.
pub fn correlate_report(report: &EvaluationReport, votes: &[VoteRecord], opts: &CorrelateOptions) -> Result<CorrelationReport> {
    if votes.is_empty() {
        return Err(Error::Data("the vote log holds no votes".into()));
    }
    let mut methods: Vec<String> = report.cards.iter().map(|c| c.model_id.clone()).collect();
    methods.push(GROUND_TRUTH.into());
    let rates = win_rates(votes, &methods).map_err(|source| Error::Stats { context: "win rates".into(), source })?;

    let common = report
        .cards
        .iter()
        .map(|c| c.model_id.as_str())
        .chain(opts.include_gt.then_some(GROUND_TRUTH))
        .filter(|m| rates.rate(m).is_some())
        .count();
    if common < 3 {
        return Err(Error::Data(format!(
            "only {common} model(s) have both scores and votes; a rank correlation needs at least 3"
        )));
    }

    let rows = columns(report, opts.include_gt)
        .into_iter()
        .map(|(name, kind, col)| {
            let (models, r) = correlate_row(&col, &rates, votes, opts);
            let (result, error) = match r {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e)),
            };
            CorrelationRow { name, kind, models, result, error }
        })
        .collect();
    Ok(CorrelationReport {
        schema: CORRELATION_SCHEMA.into(),
        seed: opts.seed,
        resamples: opts.resamples,
        level: opts.level,
        resample_unit: opts.unit,
        include_gt: opts.include_gt,
        votes: votes.len(),
        win_rates: rates,
        rows,
    })
}
