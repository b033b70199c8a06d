//! LIBSVM sparse text format: `<label> <index>:<value> ...`, 1-based indices.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::Vector;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub dim: usize,
    pub features: Vec<Vector>,
    pub labels: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn max_feature_norm(&self) -> f64 {
        self.features.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_label(&self) -> f64 {
        self.labels.iter().map(|y| y.abs()).fold(0.0, f64::max)
    }
}

/// Parses LIBSVM text. With `dim = None` the dimension is the largest index seen.
pub fn parse_libsvm(text: &str, dim: Option<usize>) -> Result<Dataset> {
    let mut rows: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
    let mut max_index = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let perr = |msg: String| Error::Parse { line: line_no, msg };
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| perr(format!("label `{label_tok}` is not a number")))?;
        if !label.is_finite() {
            return Err(perr(format!("label `{label_tok}` is not finite")));
        }
        let mut entries = Vec::new();
        let mut last = 0;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| perr(format!("entry `{tok}` is not `index:value`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| perr(format!("index `{idx}` is not a positive integer")))?;
            if idx == 0 {
                return Err(perr("indices are 1-based; found 0".into()));
            }
            if idx <= last {
                return Err(perr(format!("index {idx} is not increasing")));
            }
            if let Some(d) = dim {
                if idx > d {
                    return Err(perr(format!("index {idx} exceeds dimension {d}")));
                }
            }
            let val: f64 = val
                .parse()
                .map_err(|_| perr(format!("value `{val}` is not a number")))?;
            if !val.is_finite() {
                return Err(perr(format!("value `{val}` is not finite")));
            }
            last = idx;
            entries.push((idx, val));
        }
        max_index = max_index.max(last);
        rows.push((label, entries));
    }
    let dim = dim.unwrap_or(max_index);
    let mut features = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (label, entries) in rows {
        let mut z = Vector::zeros(dim);
        for (idx, val) in entries {
            z[idx - 1] = val;
        }
        features.push(z);
        labels.push(label);
    }
    Ok(Dataset { dim, features, labels })
}

/// Writes non-zero entries with shortest round-trip float formatting.
pub fn serialize_libsvm(data: &Dataset) -> String {
    let mut out = String::new();
    for (z, y) in data.features.iter().zip(&data.labels) {
        write!(out, "{y:?}").unwrap();
        for (i, v) in z.iter().enumerate() {
            if *v != 0.0 {
                write!(out, " {}:{v:?}", i + 1).unwrap();
            }
        }
        out.push('\n');
    }
    out
}

pub fn read_libsvm(path: &Path, dim: Option<usize>) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_libsvm(&text, dim)
}
