//! Dataset ingestion, label normalization and the seeded k-fold splitter.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Default fold count and seed of the cross-validation protocol.
pub const DEFAULT_K: usize = 5;
pub const DEFAULT_SEED: u64 = 2023;

/// Binary target. HOF encodes to 0, NOT to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "HOF")]
    Hof,
    #[serde(rename = "NOT")]
    Not,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Hof, Label::Not];

    pub fn code(self) -> u8 {
        match self {
            Label::Hof => 0,
            Label::Not => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Label> {
        match code {
            0 => Some(Label::Hof),
            1 => Some(Label::Not),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Hof => "HOF",
            Label::Not => "NOT",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        map_label(s)
    }
}

/// Trims and uppercases before mapping; anything but HOF/NOT is rejected.
pub fn map_label(raw: &str) -> Result<Label> {
    match raw.trim().to_uppercase().as_str() {
        "HOF" => Ok(Label::Hof),
        "NOT" => Ok(Label::Not),
        _ => Err(Error::UnknownLabel(raw.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub text: String,
    pub label: Option<Label>,
    pub created_at: Option<String>,
    /// Opaque; carried through but never read by the model.
    pub user_handle: Option<String>,
}

impl Sample {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Option<Label>) -> Self {
        Sample {
            id: id.into(),
            text: text.into(),
            label,
            created_at: None,
            user_handle: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub language: String,
    pub labeled: bool,
}

impl Dataset {
    /// Builds a dataset, checking id uniqueness and label consistency.
    pub fn new(samples: Vec<Sample>, language: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(samples.len());
        for s in &samples {
            if s.id.is_empty() {
                return Err(Error::Argument("sample id must be nonempty".into()));
            }
            if !seen.insert(s.id.as_str()) {
                return Err(Error::DuplicateId(s.id.clone()));
            }
        }
        let labeled = !samples.is_empty() && samples.iter().all(|s| s.label.is_some());
        Ok(Dataset {
            samples,
            language: language.into(),
            labeled,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn with_language(mut self, language: impl Into<String>) -> Self {
        self.language = language.into();
        self
    }

    pub fn labels(&self) -> Option<Vec<Label>> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn stats(&self) -> CorpusStats {
        CorpusStats::compute(self)
    }
}

/// Which CSV header names hold each sample field.
///
/// `created_at` and `user_handle` are picked up when present and ignored
/// otherwise; `id`, `text` and (for labeled loads) `label` are mandatory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnSchema {
    pub id: String,
    pub text: String,
    pub label: String,
    pub created_at: String,
    pub user_handle: String,
    pub allow_empty: bool,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        ColumnSchema {
            id: "tweet_id".into(),
            text: "text".into(),
            label: "label".into(),
            created_at: "created_at".into(),
            user_handle: "user_screen_time".into(),
            allow_empty: false,
        }
    }
}

pub(crate) fn column_index(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim_start_matches('\u{feff}').trim() == name)
}

/// Reads a UTF-8, RFC-4180 CSV with a mandatory header row.
pub fn load_dataset(path: impl AsRef<Path>, schema: &ColumnSchema, labeled: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers()?.clone();

    let required = |name: &str| {
        column_index(&headers, name).ok_or_else(|| Error::Schema {
            column: name.to_string(),
        })
    };
    let id_col = required(&schema.id)?;
    let text_col = required(&schema.text)?;
    let label_col = if labeled { Some(required(&schema.label)?) } else { None };
    let created_col = column_index(&headers, &schema.created_at);
    let handle_col = column_index(&headers, &schema.user_handle);

    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let field = |col: usize| record.get(col).unwrap_or("").to_string();
        let id = field(id_col).trim().to_string();
        if id.is_empty() {
            return Err(Error::Data {
                row,
                message: "empty id".into(),
            });
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        let text = field(text_col);
        if text.trim().is_empty() && !schema.allow_empty {
            return Err(Error::Data {
                row,
                message: format!("empty text for id `{id}`"),
            });
        }
        let label = match label_col {
            Some(col) => {
                let raw = field(col);
                Some(map_label(&raw).map_err(|_| Error::Data {
                    row,
                    message: format!("unknown label `{raw}` (expected HOF or NOT)"),
                })?)
            }
            None => None,
        };
        let optional = |col: Option<usize>| col.map(field).filter(|s| !s.is_empty());
        samples.push(Sample {
            id,
            text,
            label,
            created_at: optional(created_col),
            user_handle: optional(handle_col),
        });
    }

    Ok(Dataset {
        labeled: labeled && !samples.is_empty(),
        samples,
        language: String::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TokenSummary {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    pub median: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub n_samples: usize,
    pub hof: usize,
    pub not: usize,
    pub unlabeled: usize,
    /// Whitespace token counts of the raw text.
    pub tokens: TokenSummary,
}

impl CorpusStats {
    pub fn compute(dataset: &Dataset) -> Self {
        let mut hof = 0;
        let mut not = 0;
        let mut unlabeled = 0;
        let mut lengths: Vec<usize> = Vec::with_capacity(dataset.len());
        for s in &dataset.samples {
            match s.label {
                Some(Label::Hof) => hof += 1,
                Some(Label::Not) => not += 1,
                None => unlabeled += 1,
            }
            lengths.push(s.text.split_whitespace().count());
        }
        lengths.sort_unstable();
        let tokens = if lengths.is_empty() {
            TokenSummary {
                min: 0,
                max: 0,
                mean: 0.0,
                median: 0,
            }
        } else {
            TokenSummary {
                min: lengths[0],
                max: lengths[lengths.len() - 1],
                mean: lengths.iter().sum::<usize>() as f64 / lengths.len() as f64,
                median: lengths[lengths.len() / 2],
            }
        };
        CorpusStats {
            n_samples: dataset.len(),
            hof,
            not,
            unlabeled,
            tokens,
        }
    }
}

/// Sample index to validation fold, for one `(n, k, seed)` triple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub seed: u64,
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn n(&self) -> usize {
        self.fold_of.len()
    }

    pub fn validation_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.fold_of[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("fold assignment serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let folds: FoldAssignment = serde_json::from_str(s)?;
        if folds.k < 2 || folds.fold_of.iter().any(|&f| f >= folds.k) {
            return Err(Error::Argument(format!(
                "fold assignment has values outside [0, {})",
                folds.k
            )));
        }
        Ok(folds)
    }
}

/// Shuffles `0..n` with SplitMix64-driven Fisher-Yates and deals the result
/// into `k` contiguous chunks; the first `n mod k` chunks get one extra index.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Argument(format!("k must be at least 2, got {k}")));
    }
    if n < k {
        return Err(Error::Argument(format!("cannot split {n} samples into {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    SplitMix64::new(seed).shuffle(&mut order);

    let mut fold_of = vec![0; n];
    let (base, extra) = (n / k, n % k);
    let mut start = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &idx in &order[start..start + size] {
            fold_of[idx] = fold;
        }
        start += size;
    }
    Ok(FoldAssignment { k, seed, fold_of })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn write_csv(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn label_codes() {
        assert_eq!(map_label("HOF").unwrap().code(), 0);
        assert_eq!(map_label(" not ").unwrap(), Label::Not);
        assert_eq!(map_label(" not ").unwrap().code(), 1);
        assert!(matches!(map_label("Hate"), Err(Error::UnknownLabel(s)) if s == "Hate"));
        for l in Label::ALL {
            assert_eq!(map_label(l.name()).unwrap(), l);
            assert_eq!(Label::from_code(l.code()), Some(l));
        }
    }

    #[test]
    fn loads_train_schema() {
        let f = write_csv(
            "tweet_id,created_at,text,user_screen_time,label\n\
             1,2023-01-01,\"hello, world\",@a,HOF\n\
             2,2023-01-02,ઓકે,@b,NOT\n",
        );
        let ds = load_dataset(f.path(), &ColumnSchema::default(), true).unwrap();
        assert!(ds.labeled);
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.samples[0].text, "hello, world");
        assert_eq!(ds.samples[0].label, Some(Label::Hof));
        assert_eq!(ds.samples[1].user_handle.as_deref(), Some("@b"));
        assert_eq!(ds.samples[1].created_at.as_deref(), Some("2023-01-02"));
    }

    #[test]
    fn loads_test_schema_unlabeled() {
        let f = write_csv("tweet_id,text\na,x\nb,y\nc,z\n");
        let ds = load_dataset(f.path(), &ColumnSchema::default(), false).unwrap();
        assert!(!ds.labeled);
        let ids: Vec<_> = ds.samples.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
    }

    #[test]
    fn load_errors() {
        let f = write_csv("tweet_id,text,label\n1,x,HOF\n2,y,MAYBE\n");
        match load_dataset(f.path(), &ColumnSchema::default(), true) {
            Err(Error::Data { row, message }) => {
                assert_eq!(row, 2);
                assert!(message.contains("MAYBE"));
            }
            other => panic!("{other:?}"),
        }

        let f = write_csv("tweet_id,body\n1,x\n");
        assert!(matches!(
            load_dataset(f.path(), &ColumnSchema::default(), false),
            Err(Error::Schema { column }) if column == "text"
        ));

        let f = write_csv("tweet_id,text\n1,x\n1,y\n");
        assert!(matches!(
            load_dataset(f.path(), &ColumnSchema::default(), false),
            Err(Error::DuplicateId(id)) if id == "1"
        ));

        let f = write_csv("tweet_id,text\n1,\n");
        assert!(load_dataset(f.path(), &ColumnSchema::default(), false).is_err());
        let schema = ColumnSchema {
            allow_empty: true,
            ..ColumnSchema::default()
        };
        assert_eq!(load_dataset(f.path(), &schema, false).unwrap().len(), 1);

        assert!(matches!(
            load_dataset("/nonexistent/file.csv", &schema, false),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn stats_count_classes() {
        let ds = Dataset::new(
            vec![
                Sample::new("1", "a b", Some(Label::Hof)),
                Sample::new("2", "a b c", Some(Label::Not)),
                Sample::new("3", "a", Some(Label::Not)),
            ],
            "gu",
        )
        .unwrap();
        let st = ds.stats();
        assert_eq!((st.hof, st.not, st.n_samples), (1, 2, 3));
        assert_eq!(st.hof + st.not, st.n_samples);
        assert_eq!((st.tokens.min, st.tokens.max, st.tokens.median), (1, 3, 2));
    }

    // Frozen from an independent Python implementation of the shuffle recipe.
    #[test]
    fn kfold_reference_assignment() {
        assert_eq!(kfold_split(10, 5, 2023).unwrap().fold_of, [3, 4, 4, 0, 1, 3, 0, 2, 1, 2]);
        assert_eq!(kfold_split(7, 5, 2023).unwrap().fold_of, [0, 2, 4, 1, 1, 3, 0]);
    }

    #[test]
    fn kfold_sizes() {
        assert_eq!(kfold_split(10, 5, 2023).unwrap().fold_sizes(), [2; 5]);
        let mut sizes = kfold_split(7, 5, 2023).unwrap().fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, [1, 1, 1, 2, 2]);
        assert_eq!(kfold_split(100, 5, 2023).unwrap(), kfold_split(100, 5, 2023).unwrap());
        assert!(matches!(kfold_split(3, 5, 2023), Err(Error::Argument(_))));
    }

    #[test]
    fn fold_json_shape() {
        let folds = kfold_split(5, 5, 2023).unwrap();
        let json = folds.to_json();
        assert!(json.starts_with(r#"{"k":5,"seed":2023,"fold_of":["#));
        assert_eq!(FoldAssignment::from_json(&json).unwrap(), folds);
    }

    proptest! {
        #[test]
        fn kfold_partitions(n in 2usize..2000, k in 2usize..20, seed: u64) {
            prop_assume!(n >= k);
            let folds = kfold_split(n, k, seed).unwrap();
            let sizes = folds.fold_sizes();
            prop_assert_eq!(sizes.iter().sum::<usize>(), n);
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            for f in 0..k {
                let mut all = folds.train_indices(f);
                all.extend(folds.validation_indices(f));
                all.sort_unstable();
                prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            }
        }
    }
}
