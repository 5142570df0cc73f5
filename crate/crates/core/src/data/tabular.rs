use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Which column of a delimited file holds the class label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelColumn {
    Name(String),
    Index(usize),
    Last,
}

impl Default for LabelColumn {
    fn default() -> Self {
        LabelColumn::Last
    }
}

/// Loads a comma-separated file with a header row. Every column except the
/// label must be numeric; labels are mapped to `0..k` in order of first
/// appearance.
pub fn load_tabular(path: impl AsRef<Path>, label: &LabelColumn) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let label_idx = match label {
        LabelColumn::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("no column named {name:?} in {}", path.display())))?,
        LabelColumn::Index(i) if *i < headers.len() => *i,
        LabelColumn::Index(i) => {
            return Err(Error::Schema(format!(
                "label column {i} but {} has {} columns",
                path.display(),
                headers.len()
            )))
        }
        LabelColumn::Last if !headers.is_empty() => headers.len() - 1,
        LabelColumn::Last => return Err(Error::Schema(format!("{} has no columns", path.display()))),
    };

    let d = headers.len() - 1;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut label_ids: HashMap<String, usize> = HashMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        // Line numbers count the header as line 1.
        let line = i + 2;
        if record.len() != headers.len() {
            return Err(Error::Load {
                path: path.to_owned(),
                row: line,
                column: "*".into(),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            if c == label_idx {
                let next = label_ids.len();
                labels.push(*label_ids.entry(cell.to_owned()).or_insert(next));
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Load {
                path: path.to_owned(),
                row: line,
                column: headers[c].clone(),
                message: format!("cannot parse {cell:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Load {
                    path: path.to_owned(),
                    row: line,
                    column: headers[c].clone(),
                    message: format!("non-finite value {cell:?}"),
                });
            }
            features.push(v);
        }
    }
    if labels.is_empty() {
        return Err(Error::Data(format!("{} has no data rows", path.display())));
    }
    let name = path
        .file_stem()
        .map_or_else(|| "tabular".to_owned(), |s| s.to_string_lossy().into_owned());
    let n = labels.len();
    Dataset::new(name, Matrix::from_vec(n, d, features)?, labels, label_ids.len())
}
