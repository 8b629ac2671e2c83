//! Score tables: one row of eight GT-normalized metric scores per model.
//!
//! ```text
//! model,global_aesthetics,mouth_quality,face_quality,lip_dynamics,head_motion_dynamics,eyebrow_dynamics,silent_lip_stability,lip_sync,final_score
//! Hallo2,0.9619,0.9254,0.9017,0.9883,0.2395,0.8530,0.9620,0.9502,0.8477
//! ```
//!
//! Columns may come in any order; `final_score` is optional and, when
//! present, is kept as the printed value next to the recomputed one. An
//! empty cell or `-` is a missing score.

use std::path::Path;

use theval_core::metrics::Metric;
use theval_core::scoring::NormalizedScoreCard;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub card: NormalizedScoreCard,
    pub printed_final: Option<f64>,
}

pub fn read_score_table(path: &Path) -> Result<Vec<ScoreRow>> {
    let malformed = |line: usize, message: String| Error::Malformed { path: path.to_path_buf(), line, message };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| malformed(1, e.to_string()))?;
    let headers = reader.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let model_col = column("model").ok_or_else(|| malformed(1, "missing `model` column".into()))?;
    let mut metric_cols = [0usize; 8];
    for m in Metric::ALL {
        metric_cols[m.index()] = column(m.name()).ok_or_else(|| malformed(1, format!("missing `{}` column", m.name())))?;
    }
    let final_col = column("final_score");

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            malformed(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let cell = |c: usize| -> Result<Option<f64>> {
            match record.get(c).unwrap_or("") {
                "" | "-" => Ok(None),
                s => s
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(Some)
                    .ok_or_else(|| malformed(line, format!("`{}` is not a number in column `{}`", s, &headers[c]))),
            }
        };
        let mut scores = [None; 8];
        for (k, &c) in metric_cols.iter().enumerate() {
            scores[k] = cell(c)?;
        }
        let printed_final = final_col.map(cell).transpose()?.flatten();
        let model = record.get(model_col).unwrap_or("").to_owned();
        if model.is_empty() {
            return Err(malformed(line, "empty model name".into()));
        }
        rows.push(ScoreRow { card: NormalizedScoreCard::from_scores(model, scores), printed_final });
    }
    Ok(rows)
}
