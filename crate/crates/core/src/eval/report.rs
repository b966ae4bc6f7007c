use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::Metrics;
use crate::error::{Error, Result};

/// One model's score on one language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub model: String,
    pub language: String,
    pub macro_f1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Metrics>,
}

impl RunRecord {
    pub fn new(model: impl Into<String>, language: impl Into<String>, macro_f1: f64) -> Self {
        RunRecord {
            model: model.into(),
            language: language.into(),
            macro_f1,
            metrics: None,
        }
    }

    pub fn from_metrics(model: impl Into<String>, language: impl Into<String>, metrics: Metrics) -> Self {
        RunRecord {
            metrics: Some(metrics),
            ..RunRecord::new(model, language, metrics.macro_f1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::Argument(format!("unknown report format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportOptions {
    /// Fixed decimal places; `None` prints the shortest exact form.
    pub precision: Option<usize>,
    pub model_header: String,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            precision: None,
            model_header: "Models".into(),
        }
    }
}

/// Models as rows, languages as columns, both in first-appearance order.
#[derive(Debug, Clone, PartialEq)]
pub struct Leaderboard {
    pub models: Vec<String>,
    pub languages: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
}

impl Leaderboard {
    pub fn from_runs(runs: &[RunRecord]) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::Argument("a report needs at least one run".into()));
        }
        let mut models: Vec<String> = Vec::new();
        let mut languages: Vec<String> = Vec::new();
        for r in runs {
            if r.model.trim().is_empty() {
                return Err(Error::Argument("run with an empty model name".into()));
            }
            if !models.contains(&r.model) {
                models.push(r.model.clone());
            }
            if !languages.contains(&r.language) {
                languages.push(r.language.clone());
            }
        }
        let mut cells = vec![vec![None; languages.len()]; models.len()];
        for r in runs {
            let i = models.iter().position(|m| *m == r.model).unwrap();
            let j = languages.iter().position(|l| *l == r.language).unwrap();
            if cells[i][j].replace(r.macro_f1).is_some() {
                return Err(Error::Argument(format!("duplicate run for {} on {}", r.model, r.language)));
            }
        }
        Ok(Leaderboard { models, languages, cells })
    }

    /// Highest score per column; ties are all marked.
    pub fn is_best(&self, row: usize, col: usize) -> bool {
        let Some(v) = self.cells[row][col] else {
            return false;
        };
        self.cells.iter().filter_map(|r| r[col]).all(|other| other <= v)
    }

    fn cell(&self, row: usize, col: usize, opts: &ReportOptions) -> String {
        match (self.cells[row][col], opts.precision) {
            (None, _) => "-".into(),
            (Some(v), Some(p)) => format!("{v:.p$}"),
            (Some(v), None) => format!("{v}"),
        }
    }

    fn markdown(&self, opts: &ReportOptions) -> String {
        let mut out = String::new();
        let header: Vec<&str> = std::iter::once(opts.model_header.as_str())
            .chain(self.languages.iter().map(String::as_str))
            .collect();
        let _ = writeln!(out, "| {} |", header.join(" | "));
        let _ = writeln!(out, "|{}", " --- |".repeat(header.len()));
        for (i, model) in self.models.iter().enumerate() {
            let cells: Vec<String> = (0..self.languages.len())
                .map(|j| {
                    let c = self.cell(i, j, opts);
                    if self.is_best(i, j) {
                        format!("**{c}**")
                    } else {
                        c
                    }
                })
                .collect();
            let _ = writeln!(out, "| {model} | {} |", cells.join(" | "));
        }
        out
    }

    fn csv(&self, opts: &ReportOptions) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![opts.model_header.clone()];
        header.extend(self.languages.iter().cloned());
        header.push("best".into());
        w.write_record(&header)?;
        for (i, model) in self.models.iter().enumerate() {
            let mut row = vec![model.clone()];
            row.extend((0..self.languages.len()).map(|j| self.cell(i, j, opts)));
            let best: Vec<&str> = (0..self.languages.len())
                .filter(|&j| self.is_best(i, j))
                .map(|j| self.languages[j].as_str())
                .collect();
            row.push(best.join(";"));
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Argument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    fn json(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .models
            .iter()
            .enumerate()
            .map(|(i, model)| {
                let scores: serde_json::Map<String, serde_json::Value> = self
                    .languages
                    .iter()
                    .enumerate()
                    .map(|(j, lang)| (lang.clone(), self.cells[i][j].into()))
                    .collect();
                let best: Vec<&String> = (0..self.languages.len())
                    .filter(|&j| self.is_best(i, j))
                    .map(|j| &self.languages[j])
                    .collect();
                serde_json::json!({ "model": model, "scores": scores, "best": best })
            })
            .collect();
        let doc = serde_json::json!({ "languages": self.languages, "rows": rows });
        serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
    }

    pub fn render(&self, format: ReportFormat, opts: &ReportOptions) -> Result<String> {
        match format {
            ReportFormat::Markdown => Ok(self.markdown(opts)),
            ReportFormat::Csv => self.csv(opts),
            ReportFormat::Json => Ok(self.json()),
        }
    }
}

pub fn emit_report(runs: &[RunRecord], format: ReportFormat, opts: &ReportOptions) -> Result<String> {
    Leaderboard::from_runs(runs)?.render(format, opts)
}

/// Loads runs from a `model,language,macro_f1` CSV or a JSON array of runs.
pub fn load_runs(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        return Ok(serde_json::from_str(&text)?);
    }
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut runs = Vec::new();
    for row in reader.deserialize::<(String, String, String)>() {
        let (model, language, score) = row?;
        // "-" marks a model that was not run on that language.
        if score.trim() == "-" {
            continue;
        }
        let value = score.trim().parse::<f64>().map_err(|_| Error::Data {
            row: runs.len() + 1,
            message: format!("bad score `{score}`"),
        })?;
        runs.push(RunRecord::new(model, language, value));
    }
    Ok(runs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn markdown_marks_column_best() {
        let runs = [
            RunRecord::new("LSTM", "Bodo", 0.81291),
            RunRecord::new("LSTM", "Assamese", 0.67616),
            RunRecord::new("mBert C", "Bodo", 0.83009),
            RunRecord::new("mBert C", "Assamese", 0.70525),
        ];
        let md = emit_report(&runs, ReportFormat::Markdown, &ReportOptions::default()).unwrap();
        assert_eq!(
            md,
            "| Models | Bodo | Assamese |\n| --- | --- | --- |\n| LSTM | 0.81291 | 0.67616 |\n| mBert C | **0.83009** | **0.70525** |\n"
        );
    }

    #[test]
    fn single_cell_and_missing() {
        let md = emit_report(&[RunRecord::new("LSTM", "Gujarati", 0.766)], ReportFormat::Markdown, &ReportOptions {
            precision: Some(4),
            ..Default::default()
        })
        .unwrap();
        assert!(md.ends_with("| LSTM | **0.7660** |\n"));

        let runs = [RunRecord::new("a", "x", 0.5), RunRecord::new("b", "y", 0.4)];
        let csv = emit_report(&runs, ReportFormat::Csv, &ReportOptions::default()).unwrap();
        assert_eq!(csv, "Models,x,y,best\na,0.5,-,x\nb,-,0.4,y\n");
        let json: serde_json::Value = serde_json::from_str(&emit_report(&runs, ReportFormat::Json, &ReportOptions::default()).unwrap()).unwrap();
        assert!(json["rows"][0]["scores"]["y"].is_null());
    }

    #[test]
    fn rejects_empty_and_duplicates() {
        assert!(emit_report(&[], ReportFormat::Csv, &ReportOptions::default()).is_err());
        let dup = [RunRecord::new("a", "x", 0.5), RunRecord::new("a", "x", 0.6)];
        assert!(Leaderboard::from_runs(&dup).is_err());
    }
}
