use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::ModelParams;
use crate::error::{Error, Result};
use crate::preprocess::{Vocab, PAD};

/// Reads word2vec text vectors (`N d` header, then `token v1 .. vd`) and keeps
/// the rows whose token is in `vocab`, keyed by vocab id.
pub fn load_pretrained_vectors(vocab: &Vocab, path: impl AsRef<Path>, embed_dim: usize) -> Result<BTreeMap<u32, Vec<f64>>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_vectors(vocab, BufReader::new(file), embed_dim)
}

fn parse_vectors(vocab: &Vocab, reader: impl BufRead, embed_dim: usize) -> Result<BTreeMap<u32, Vec<f64>>> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| Error::Format { line: 1, message: e.to_string() })?,
        None => return Err(Error::Format { line: 1, message: "missing `N d` header".into() }),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (count, dim) = match fields.as_slice() {
        [n, d] => match (n.parse::<usize>(), d.parse::<usize>()) {
            (Ok(n), Ok(d)) => (n, d),
            _ => return Err(Error::Format { line: 1, message: format!("bad header `{header}`") }),
        },
        _ => return Err(Error::Format { line: 1, message: format!("bad header `{header}`") }),
    };
    if dim != embed_dim {
        return Err(Error::DimensionMismatch { expected: embed_dim, found: dim });
    }

    let mut rows = BTreeMap::new();
    let mut seen = 0;
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Format { line: line_no, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        seen += 1;
        let mut parts = line.split_whitespace();
        let token = parts.next().unwrap_or_default();
        let values: Vec<f64> = parts
            .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Format { line: line_no, message: "non-numeric vector component".into() })?;
        if values.len() != dim {
            return Err(Error::Format {
                line: line_no,
                message: format!("expected {dim} components, found {}", values.len()),
            });
        }
        if let Some(id) = vocab.get(token) {
            rows.insert(id, values);
        }
    }
    if seen != count {
        return Err(Error::Format {
            line: 1,
            message: format!("header declares {count} vectors, file has {seen}"),
        });
    }
    Ok(rows)
}

/// Overwrites embedding rows; the PAD row is never touched.
pub fn apply_pretrained(params: &mut ModelParams, rows: &BTreeMap<u32, Vec<f64>>) {
    for (&id, values) in rows {
        if id != PAD && (id as usize) < params.embedding.nrows() {
            params.embedding.row_mut(id as usize).assign(&ndarray::ArrayView1::from(values.as_slice()));
        }
    }
}
