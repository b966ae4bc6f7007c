use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ensemble::PredictionRecord;
use super::metrics::{score_labels, Metrics};
use crate::corpus::{column_index, map_label, Label};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

/// Renders `id,prob,label` with six decimals.
pub fn predictions_csv(preds: &[PredictionRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "prob", "label"])?;
    for p in preds {
        w.write_record([p.id.as_str(), &format!("{:.6}", p.prob), p.label.name()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Argument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn write_predictions(preds: &[PredictionRecord], path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, predictions_csv(preds)?.as_bytes())
}

/// Reads `id` and `label` columns from any CSV that has them, in file order.
pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<(String, Label)>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        column_index(&headers, name).ok_or_else(|| Error::Schema {
            column: name.to_string(),
        })
    };
    let (id_col, label_col) = (col("id")?, col("label")?);
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let raw = record.get(label_col).unwrap_or("");
        let label = map_label(raw).map_err(|_| Error::Data {
            row: i + 1,
            message: format!("unknown label `{raw}` (expected HOF or NOT)"),
        })?;
        out.push((record.get(id_col).unwrap_or("").trim().to_string(), label));
    }
    Ok(out)
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<(String, f64, String)>().enumerate() {
        let (id, prob, raw) = row?;
        let label = map_label(&raw).map_err(|_| Error::Data {
            row: i + 1,
            message: format!("unknown label `{raw}` (expected HOF or NOT)"),
        })?;
        out.push(PredictionRecord { id, prob, label });
    }
    Ok(out)
}

/// Metrics over the ids both files share, plus coverage counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalScore {
    #[serde(flatten)]
    pub metrics: Metrics,
    pub matched: usize,
    /// Gold ids with no prediction.
    pub missing_predictions: usize,
    /// Predicted ids absent from the gold file.
    pub unmatched_predictions: usize,
}

impl ExternalScore {
    pub fn disjoint(&self) -> usize {
        self.missing_predictions + self.unmatched_predictions
    }
}

pub fn score_pairs(preds: &[(String, Label)], golds: &[(String, Label)]) -> Result<ExternalScore> {
    let by_id: HashMap<&str, Label> = preds.iter().map(|(id, l)| (id.as_str(), *l)).collect();
    let mut p = Vec::new();
    let mut g = Vec::new();
    for (id, gold) in golds {
        if let Some(&pred) = by_id.get(id.as_str()) {
            p.push(pred);
            g.push(*gold);
        }
    }
    if p.is_empty() {
        return Err(Error::EmptyJoin);
    }
    Ok(ExternalScore {
        metrics: score_labels(&p, &g)?,
        matched: p.len(),
        missing_predictions: golds.len() - p.len(),
        unmatched_predictions: by_id.len() - p.len(),
    })
}

pub fn score_external(pred_file: impl AsRef<Path>, gold_file: impl AsRef<Path>) -> Result<ExternalScore> {
    score_pairs(&read_labels(pred_file)?, &read_labels(gold_file)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, prob: f64, label: Label) -> PredictionRecord {
        PredictionRecord {
            id: id.into(),
            prob,
            label,
        }
    }

    #[test]
    fn csv_format() {
        assert_eq!(predictions_csv(&[rec("t1", 0.5, Label::Not)]).unwrap(), "id,prob,label\nt1,0.500000,NOT\n");
        assert_eq!(predictions_csv(&[]).unwrap(), "id,prob,label\n");
    }

    #[test]
    fn round_trip_scores_perfectly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let preds = vec![rec("a", 0.9, Label::Not), rec("b,c", 0.1, Label::Hof)];
        write_predictions(&preds, &path).unwrap();
        let back = read_predictions(&path).unwrap();
        assert_eq!(back[1].id, "b,c");
        let s = score_external(&path, &path).unwrap();
        assert_eq!(s.metrics.macro_f1, 1.0);
        assert_eq!(s.disjoint(), 0);
    }

    #[test]
    fn join_over_intersection() {
        let golds: Vec<(String, Label)> = (0..8)
            .map(|i| (format!("g{i}"), if i % 2 == 0 { Label::Hof } else { Label::Not }))
            .collect();
        let inverted: Vec<(String, Label)> = golds
            .iter()
            .map(|(id, l)| (id.clone(), Label::from_code(1 - l.code()).unwrap()))
            .collect();
        let s = score_pairs(&inverted, &golds).unwrap();
        assert_eq!((s.metrics.accuracy, s.metrics.macro_f1), (0.0, 0.0));

        let mut half = golds[..4].to_vec();
        half.push(("extra".into(), Label::Hof));
        let s = score_pairs(&half, &golds).unwrap();
        assert_eq!((s.matched, s.missing_predictions, s.unmatched_predictions), (4, 4, 1));
        assert_eq!(s.metrics.macro_f1, 1.0);

        let none = vec![("zzz".to_string(), Label::Hof)];
        assert!(matches!(score_pairs(&none, &golds), Err(Error::EmptyJoin)));
    }

    #[test]
    fn bad_label_reports_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        std::fs::write(&path, "id,label\nx,HOF\ny,maybe\n").unwrap();
        let err = read_labels(&path).unwrap_err();
        assert!(matches!(err, Error::Data { row: 2, .. }), "{err}");
    }
}
