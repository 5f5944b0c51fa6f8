//! Side-by-side metric matrix for a set of models.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::metamodel::{Record, RecordKind};
use crate::store::{RecordKey, StoreLog};

/// Identity of one matrix row.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct RowKey {
    pub metric: String,
    pub dataset: String,
    pub dataset_version: String,
    pub hardware: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slice: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    #[serde(flatten)]
    pub key: RowKey,
    pub higher_is_better: bool,
    /// One cell per compared model, in column order.
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matrix {
    pub models: Vec<String>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompareError {
    #[error("unknown model {0:?}")]
    UnknownModel(String),
    #[error("nothing to compare")]
    Empty,
}

// newest run timestamp and its value
type Cell = Option<(chrono::DateTime<chrono::Utc>, f64)>;

/// Builds the matrix for model ids in the given order. Rows are the union of
/// `(metric, dataset, hardware, slice)` tuples over all runs of the models,
/// sorted lexicographically; each cell holds the most recent value.
pub fn compare(store: &StoreLog, ids: &[impl AsRef<str>]) -> Result<Matrix, CompareError> {
    if ids.is_empty() {
        return Err(CompareError::Empty);
    }
    let mut column = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        let id = id.as_ref();
        if store.get(&RecordKey::new(RecordKind::Model, id)).is_none() {
            return Err(CompareError::UnknownModel(id.to_owned()));
        }
        column.entry(id.to_owned()).or_insert_with(Vec::new).push(i);
    }

    // (key) -> (polarity, per column (executed_at, value))
    let mut cells: BTreeMap<RowKey, (bool, Vec<Cell>)> = BTreeMap::new();
    for run in store.records().filter_map(Record::as_evaluation) {
        let Some(cols) = column.get(&run.model_id) else {
            continue;
        };
        for mv in &run.metrics {
            let key = RowKey {
                metric: mv.name.clone(),
                dataset: run.dataset_id.id.clone(),
                dataset_version: run.dataset_id.version.to_string(),
                hardware: run.hardware_id.clone(),
                slice: mv.slice.clone(),
            };
            let (_, row) = cells
                .entry(key)
                .or_insert_with(|| (mv.higher_is_better, vec![None; ids.len()]));
            for &c in cols {
                // later entries win ties, records() is in log order
                if row[c].is_none_or(|(at, _)| run.executed_at >= at) {
                    row[c] = Some((run.executed_at, mv.value));
                }
            }
        }
    }

    Ok(Matrix {
        models: ids.iter().map(|s| s.as_ref().to_owned()).collect(),
        rows: cells
            .into_iter()
            .map(|(key, (higher_is_better, vals))| Row {
                key,
                higher_is_better,
                values: vals.into_iter().map(|c| c.map(|(_, v)| v)).collect(),
            })
            .collect(),
    })
}
