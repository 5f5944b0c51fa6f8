use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::metamodel::{
    known_polarity, DatasetRecord, DatasetRef, EvaluationRun, HardwareProfile, MetricValue, ModelRecord, Provenance,
    Record, RecordKind, Resolver,
};
use crate::store::{RecordKey, StoreLog};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct ExecutorError(pub String);

/// Runs a model on a dataset under a hardware profile. Implementations must
/// be deterministic for fixed inputs and seed.
pub trait Executor {
    fn name(&self) -> &str;

    fn run(
        &self,
        model: &ModelRecord,
        dataset: &DatasetRecord,
        hardware: &HardwareProfile,
        seed: u64,
    ) -> Result<Vec<MetricValue>, ExecutorError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    /// Model id or name.
    pub model: String,
    /// Dataset id or name.
    pub dataset: String,
    /// Hardware profile id or name.
    pub hardware: String,
    pub metrics: BTreeMap<String, f64>,
}

/// Replays metrics from a manifest instead of running anything. The seed
/// has no effect since the manifest already fixes every value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimulatedExecutor {
    pub entries: Vec<ManifestEntry>,
}

impl SimulatedExecutor {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        Ok(Self {
            entries: serde_json::from_str(text)?,
        })
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path).map_err(|source| IngestError::Fixtures {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| IngestError::Manifest(e.to_string()))
    }
}

impl Executor for SimulatedExecutor {
    fn name(&self) -> &str {
        "simulated"
    }

    fn run(
        &self,
        model: &ModelRecord,
        dataset: &DatasetRecord,
        hardware: &HardwareProfile,
        _seed: u64,
    ) -> Result<Vec<MetricValue>, ExecutorError> {
        let entry = self
            .entries
            .iter()
            .find(|e| {
                (e.model == model.id || e.model == model.name)
                    && (e.dataset == dataset.id || e.dataset == dataset.name)
                    && (e.hardware == hardware.id || e.hardware == hardware.name)
            })
            .ok_or_else(|| {
                ExecutorError(format!(
                    "manifest has no entry for {} on {} ({})",
                    model.id, dataset.id, hardware.id
                ))
            })?;
        Ok(entry
            .metrics
            .iter()
            .map(|(name, &v)| match known_polarity(name) {
                Some(_) => MetricValue::known(name, v),
                None => MetricValue::with_polarity(name, v, true),
            })
            .collect())
    }
}

fn resolve_model<'a>(store: &'a StoreLog, reference: &str) -> Option<&'a ModelRecord> {
    store
        .resolve(RecordKind::Model, reference)
        .or_else(|| store.latest(RecordKind::Model, reference))
        .and_then(Record::as_model)
}

fn resolve_dataset<'a>(store: &'a StoreLog, reference: &str) -> Option<&'a DatasetRecord> {
    store
        .resolve(RecordKind::Dataset, reference)
        .and_then(Record::as_dataset)
        .or_else(|| store.latest_dataset(reference))
}

fn resolve_hardware<'a>(store: &'a StoreLog, reference: &str) -> Option<&'a HardwareProfile> {
    store
        .resolve(RecordKind::Hardware, reference)
        .or_else(|| store.latest(RecordKind::Hardware, reference))
        .and_then(Record::as_hardware)
}

/// Invokes `executor` and stores its metrics as a new run. Every call is a
/// separate event with a fresh id.
pub fn run_evaluation(
    store: &mut StoreLog,
    executor: &dyn Executor,
    model: &str,
    dataset: &str,
    hardware: &str,
    seed: u64,
) -> Result<RecordKey, IngestError> {
    let unresolved = |kind, r: &str| IngestError::Unresolved {
        kind,
        reference: r.to_owned(),
    };
    let m = resolve_model(store, model).ok_or_else(|| unresolved(RecordKind::Model, model))?;
    let d = resolve_dataset(store, dataset).ok_or_else(|| unresolved(RecordKind::Dataset, dataset))?;
    let h = resolve_hardware(store, hardware).ok_or_else(|| unresolved(RecordKind::Hardware, hardware))?;
    let metrics = executor.run(m, d, h, seed).map_err(|source| IngestError::Executor {
        executor: executor.name().to_owned(),
        model: m.id.clone(),
        source,
    })?;
    let run = EvaluationRun {
        id: format!("run-{}", uuid::Uuid::new_v4()),
        model_id: m.id.clone(),
        dataset_id: DatasetRef::new(d.id.clone(), d.version.clone()),
        hardware_id: h.id.clone(),
        metrics,
        executed_at: chrono::Utc::now(),
        executor: Provenance::harness(executor.name()),
    };
    Ok(store.put(Record::Evaluation(run))?)
}
