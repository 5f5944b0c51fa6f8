//! External zoo cards and their mapping onto meta-model records.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::metamodel::{
    is_curated_task, known_polarity, Architecture, CollectionMethod, DType, DatasetRecord, DatasetRef, Dim,
    EvaluationRun, IoSpec, MetricValue, Modality, ModelRecord, Provenance, RawCardRecord, Record, Version,
};

/// Recorded card as found in a fixture file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCard {
    pub identifier: String,
    #[serde(default)]
    pub fields: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub body_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MapError {
    #[error("card is not valid JSON: {0}")]
    Malformed(String),
    #[error("card has no identifier")]
    MissingIdentifier,
}

pub fn parse_card(payload: &str) -> Result<RawCard, MapError> {
    let value: serde_json::Value = serde_json::from_str(payload).map_err(|e| MapError::Malformed(e.to_string()))?;
    match value.get("identifier") {
        Some(serde_json::Value::String(s)) if !s.trim().is_empty() => {}
        _ => return Err(MapError::MissingIdentifier),
    }
    serde_json::from_value(value).map_err(|e| MapError::Malformed(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldMapping {
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Unmapped {
    pub field: String,
    pub reason: String,
}

/// What happened to each source field of one card.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MappingReport {
    pub identifier: String,
    pub mapped: Vec<FieldMapping>,
    pub unmapped: Vec<Unmapped>,
    pub notes: Vec<String>,
    /// Validation violations; empty when the records were accepted.
    pub violations: Vec<String>,
}

impl MappingReport {
    fn mapped(&mut self, source: &str, target: &str) {
        self.mapped.push(FieldMapping {
            source: source.into(),
            target: target.into(),
        });
    }

    fn unmapped(&mut self, field: &str, reason: impl Into<String>) {
        self.unmapped.push(Unmapped {
            field: field.into(),
            reason: reason.into(),
        });
    }
}

/// Records produced from one card.
#[derive(Debug, Clone, PartialEq)]
pub struct Mapped {
    pub card: RawCardRecord,
    /// Stub datasets for every listed dataset name.
    pub datasets: Vec<DatasetRecord>,
    pub model: ModelRecord,
    pub runs: Vec<EvaluationRun>,
    pub report: MappingReport,
}

impl Mapped {
    /// All records in dependency order.
    pub fn records(&self) -> Vec<Record> {
        let mut out = vec![Record::RawCard(self.card.clone())];
        out.extend(self.datasets.iter().cloned().map(Record::Dataset));
        out.push(Record::Model(self.model.clone()));
        out.extend(self.runs.iter().cloned().map(Record::Evaluation));
        out
    }
}

/// A recorded card file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CardFile {
    pub path: PathBuf,
    pub payload: String,
}

/// Source of external model cards. Adapters never write to their source.
pub trait ZooAdapter: Send + Sync {
    fn zoo_name(&self) -> &str;

    /// Maps a verbatim card payload. Must be a pure function of `payload`.
    fn map_card(&self, payload: &str) -> Result<Mapped, MapError>;

    /// Every `*.json` card under `dir`, sorted by file name.
    fn list_models(&self, dir: &Path) -> io::Result<Vec<CardFile>> {
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<io::Result<_>>()?;
        paths.retain(|p| p.is_file() && p.extension().is_some_and(|e| e == "json"));
        paths.sort();
        paths
            .into_iter()
            .map(|path| {
                let payload = fs::read_to_string(&path)?;
                Ok(CardFile { path, payload })
            })
            .collect()
    }

    /// The card whose identifier is `identifier`, if any.
    fn fetch_card(&self, dir: &Path, identifier: &str) -> io::Result<Option<CardFile>> {
        Ok(self
            .list_models(dir)?
            .into_iter()
            .find(|f| parse_card(&f.payload).is_ok_and(|c| c.identifier == identifier)))
    }
}

/// Adapter by zoo name.
pub fn adapter(zoo: &str) -> Option<Box<dyn ZooAdapter>> {
    match zoo {
        "huggingface" | "hf" => Some(Box::new(HuggingFace)),
        _ => None,
    }
}

/// HuggingFace-style hub cards.
///
/// | card field       | target                                              |
/// |------------------|-----------------------------------------------------|
/// | `identifier`     | `name`; id is `hf-<slug>`                           |
/// | `pipeline_tag`   | `task` (open vocabulary)                            |
/// | `datasets`       | `trained_on`, stub datasets at version `0.0`        |
/// | `metrics`        | one EvaluationRun per dataset on `unspecified` hw   |
/// | `model_type`     | `architecture.family`                               |
/// | `parameter_count`| `architecture.parameter_count`                      |
/// | `tags`           | `tags`                                              |
/// | `version`        | `version` (default `0.0`)                           |
/// | `last_modified`  | `created_at` and run `executed_at`                  |
///
/// Every other field is listed as unmapped. `body_text` is kept only in the
/// raw card.
#[derive(Debug, Clone, Copy, Default)]
pub struct HuggingFace;

pub const HF_ZOO: &str = "huggingface";

pub fn slug(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    out.trim_matches('-').to_owned()
}

pub fn card_id(zoo: &str, payload: &str) -> String {
    let digest = Sha256::digest(payload.as_bytes());
    format!("card-{zoo}-{}", &hex::encode(digest)[..16])
}

fn io(name: &str, dtype: DType, shape: &[Dim], sem: Option<&str>) -> IoSpec {
    IoSpec {
        name: name.into(),
        dtype,
        shape: shape.to_vec(),
        semantic_type: sem.map(str::to_owned),
    }
}

/// Signature and dataset modality implied by a pipeline tag.
fn task_shape(task: &str) -> (IoSpec, IoSpec, Modality) {
    use Dim::{Any, Fixed};
    let image = || io("pixels", DType::Float32, &[Any, Fixed(3), Any, Any], Some("image"));
    let tokens = |name| io(name, DType::Int64, &[Any, Any], Some("token-sequence"));
    match task {
        "image-classification" => (
            image(),
            io("logits", DType::Float32, &[Any, Any], Some("class-label")),
            Modality::Image,
        ),
        "object-detection" | "person-detection" => (
            image(),
            io("boxes", DType::Float32, &[Any, Any, Fixed(6)], Some("bounding-boxes")),
            Modality::Image,
        ),
        "text-classification" => (
            tokens("tokens"),
            io("logits", DType::Float32, &[Any, Any], Some("class-label")),
            Modality::Text,
        ),
        "pos-tagging" => (
            tokens("tokens"),
            io("tags", DType::String, &[Any, Any], Some("pos-tags")),
            Modality::Text,
        ),
        "token-classification" => (
            tokens("tokens"),
            io("tags", DType::String, &[Any, Any], Some("token-labels")),
            Modality::Text,
        ),
        "text-generation" | "translation" | "summarization" => (tokens("tokens"), tokens("generated"), Modality::Text),
        "question-answering" => (
            tokens("tokens"),
            io("span", DType::Int64, &[Any, Fixed(2)], Some("answer-span")),
            Modality::Text,
        ),
        "speech-recognition" | "automatic-speech-recognition" => (
            io("waveform", DType::Float32, &[Any, Any], Some("audio-waveform")),
            tokens("transcript"),
            Modality::Audio,
        ),
        _ => (
            io("input", DType::Bytes, &[Any], None),
            io("output", DType::Bytes, &[Any], None),
            Modality::Multimodal,
        ),
    }
}

fn epoch() -> DateTime<Utc> {
    DateTime::<Utc>::UNIX_EPOCH
}

impl ZooAdapter for HuggingFace {
    fn zoo_name(&self) -> &str {
        HF_ZOO
    }

    fn map_card(&self, payload: &str) -> Result<Mapped, MapError> {
        let card = parse_card(payload)?;
        let zoo = HF_ZOO;
        let mut report = MappingReport {
            identifier: card.identifier.clone(),
            ..MappingReport::default()
        };
        let card_id = card_id(zoo, payload);
        let provenance = Provenance {
            source_url: Some(format!("https://huggingface.co/{}", card.identifier)),
            attachment: Some(card_id.clone()),
            ..Provenance::external(zoo)
        };
        let model_id = format!("hf-{}", slug(&card.identifier));
        report.mapped("identifier", "name");

        let task = match card.fields.get("pipeline_tag").and_then(|v| v.as_str()) {
            Some(t) if !t.trim().is_empty() => {
                report.mapped("pipeline_tag", "task");
                if !is_curated_task(t) {
                    report.notes.push(format!("task {t:?} is not curated"));
                }
                t.to_owned()
            }
            Some(_) | None => {
                report.unmapped("pipeline_tag", "absent; task set to \"unknown\"");
                "unknown".to_owned()
            }
        };
        let (input, output, modality) = task_shape(&task);

        let created_at = match card.fields.get("last_modified") {
            Some(v) => match v.as_str().and_then(|s| s.parse::<DateTime<Utc>>().ok()) {
                Some(t) => {
                    report.mapped("last_modified", "created_at");
                    t
                }
                None => {
                    report.unmapped("last_modified", "not an RFC 3339 timestamp");
                    epoch()
                }
            },
            None => epoch(),
        };

        let version = match card.fields.get("version") {
            Some(serde_json::Value::String(s)) if !s.trim().is_empty() => {
                report.mapped("version", "version");
                s.clone()
            }
            Some(_) => {
                report.unmapped("version", "not a string");
                "0.0".into()
            }
            None => "0.0".into(),
        };

        let family = match card.fields.get("model_type").and_then(|v| v.as_str()) {
            Some(f) if !f.trim().is_empty() => {
                report.mapped("model_type", "architecture.family");
                f.to_owned()
            }
            _ => {
                if card.fields.contains_key("model_type") {
                    report.unmapped("model_type", "not a string");
                }
                "unknown".to_owned()
            }
        };
        let parameter_count = match card.fields.get("parameter_count") {
            Some(v) => match v.as_u64() {
                Some(n) => {
                    report.mapped("parameter_count", "architecture.parameter_count");
                    n
                }
                None => {
                    report.unmapped("parameter_count", "not a non-negative integer");
                    0
                }
            },
            None => 0,
        };

        let mut tags = std::collections::BTreeSet::new();
        if let Some(v) = card.fields.get("tags") {
            match v.as_array() {
                Some(items) => {
                    let mut skipped = 0;
                    for t in items {
                        match t.as_str() {
                            Some(s) if !s.is_empty() => {
                                tags.insert(s.to_owned());
                            }
                            _ => skipped += 1,
                        }
                    }
                    report.mapped("tags", "tags");
                    if skipped > 0 {
                        report.unmapped("tags", format!("{skipped} non-string entries"));
                    }
                }
                None => report.unmapped("tags", "not a list"),
            }
        }

        let mut datasets: Vec<DatasetRecord> = Vec::new();
        match card.fields.get("datasets") {
            None => report.unmapped("datasets", "absent; trained_on left empty"),
            Some(v) => match v.as_array() {
                None => report.unmapped("datasets", "not a list"),
                Some(items) => {
                    for item in items {
                        let Some(name) = item.as_str().filter(|s| !s.trim().is_empty()) else {
                            report.unmapped("datasets", format!("entry {item} is not a name"));
                            continue;
                        };
                        let id = format!("hf-ds-{}", slug(name));
                        if datasets.iter().any(|d| d.id == id) {
                            continue;
                        }
                        datasets.push(DatasetRecord {
                            id,
                            name: name.to_owned(),
                            version: Version::from("0.0"),
                            source: vec![zoo.to_owned()],
                            collection_method: CollectionMethod::Unknown,
                            annotator_count: None,
                            license: None,
                            contains_sensitive_data: false,
                            modality,
                            instance_count: 0,
                            provenance: Provenance::external(zoo),
                        });
                    }
                    report.mapped("datasets", "trained_on");
                }
            },
        }

        // metrics: [{"accuracy": 0.91, "dataset": "imagenet-1k", "slice": "..."}]
        let mut per_dataset: BTreeMap<usize, Vec<MetricValue>> = BTreeMap::new();
        if let Some(v) = card.fields.get("metrics") {
            match v.as_array() {
                None => report.unmapped("metrics", "not a list"),
                Some(entries) => {
                    for (i, entry) in entries.iter().enumerate() {
                        let Some(obj) = entry.as_object() else {
                            report.unmapped(&format!("metrics[{i}]"), "not an object");
                            continue;
                        };
                        let ds = match obj.get("dataset").and_then(|d| d.as_str()) {
                            Some(name) => datasets.iter().position(|d| d.name == name),
                            None => (!datasets.is_empty()).then_some(0),
                        };
                        let Some(ds) = ds else {
                            report.unmapped(&format!("metrics[{i}]"), "no listed dataset to attach to");
                            continue;
                        };
                        let slice = obj.get("slice").and_then(|s| s.as_str()).map(str::to_owned);
                        for (name, value) in obj {
                            if name == "dataset" || name == "slice" {
                                continue;
                            }
                            let path = format!("metrics[{i}].{name}");
                            let Some(x) = value.as_f64() else {
                                report.unmapped(&path, "value is not a number");
                                continue;
                            };
                            let list = per_dataset.entry(ds).or_default();
                            if list.iter().any(|m| m.name == *name && m.slice == slice) {
                                report.unmapped(&path, "duplicate metric");
                                continue;
                            }
                            let mv = match known_polarity(name) {
                                Some(_) => MetricValue::known(name, x),
                                None => {
                                    report
                                        .notes
                                        .push(format!("polarity of {name:?} assumed higher-is-better"));
                                    MetricValue::with_polarity(name, x, true)
                                }
                            };
                            list.push(match &slice {
                                Some(s) => mv.sliced(s),
                                None => mv,
                            });
                        }
                    }
                    report.mapped("metrics", "EvaluationRun");
                }
            }
        }
        let runs = per_dataset
            .into_iter()
            .map(|(ds, metrics)| EvaluationRun {
                id: format!("{model_id}--{}", slug(&datasets[ds].name)),
                model_id: model_id.clone(),
                dataset_id: DatasetRef::new(datasets[ds].id.clone(), "0.0"),
                hardware_id: crate::metamodel::UNSPECIFIED_HARDWARE.to_owned(),
                metrics,
                executed_at: created_at,
                executor: provenance.clone(),
            })
            .collect();

        const KNOWN: &[&str] = &[
            "pipeline_tag",
            "last_modified",
            "version",
            "model_type",
            "parameter_count",
            "tags",
            "datasets",
            "metrics",
        ];
        for field in card.fields.keys().filter(|k| !KNOWN.contains(&k.as_str())) {
            report.unmapped(field, "no target field");
        }

        let model = ModelRecord {
            id: model_id,
            name: card.identifier.clone(),
            version: Version::from(version.as_str()),
            task,
            input_signature: vec![input],
            output_signature: vec![output],
            transformations: Vec::new(),
            architecture: Architecture {
                family,
                parameter_count,
                description: None,
            },
            hyperparameters: Vec::new(),
            trained_on: datasets.iter().map(|d| DatasetRef::new(d.id.clone(), "0.0")).collect(),
            source: provenance.clone(),
            tags,
            created_at,
        };
        let raw = RawCardRecord {
            id: card_id,
            zoo: zoo.to_owned(),
            payload: payload.to_owned(),
            provenance: Provenance {
                attachment: None,
                ..provenance
            },
        };
        Ok(Mapped {
            card: raw,
            datasets,
            model,
            runs,
            report,
        })
    }
}
