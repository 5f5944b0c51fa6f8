use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Version;

/// Hardware id that may be referenced without a stored profile. Externally
/// reported metrics carry no hardware information and point here.
pub const UNSPECIFIED_HARDWARE: &str = "unspecified";

/// Task labels that ship with the registry. Other labels are accepted.
pub const CURATED_TASKS: &[&str] = &[
    "image-classification",
    "object-detection",
    "person-detection",
    "text-classification",
    "text-generation",
    "pos-tagging",
    "token-classification",
    "translation",
    "summarization",
    "question-answering",
    "speech-recognition",
];

/// Metric names with a fixed polarity (`true` means higher is better).
pub const KNOWN_METRICS: &[(&str, bool)] = &[
    ("accuracy", true),
    ("top5_accuracy", true),
    ("f1", true),
    ("precision", true),
    ("recall", true),
    ("map", true),
    ("bleu", true),
    ("mse", false),
    ("mae", false),
    ("latency_ms", false),
    ("memory_footprint_mb", false),
    ("demographic_parity_gap", false),
    ("hate_speech_rate", false),
    ("wer", false),
    ("cer", false),
];

pub fn known_polarity(metric: &str) -> Option<bool> {
    KNOWN_METRICS
        .iter()
        .find(|(name, _)| *name == metric)
        .map(|(_, hib)| *hib)
}

pub fn is_curated_task(task: &str) -> bool {
    CURATED_TASKS.contains(&task)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Manual,
    ExternalZoo,
    EvaluationHarness,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub origin: Origin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrieved_at: Option<DateTime<Utc>>,
    /// Id of a stored [`RawCardRecord`] holding the verbatim source payload.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attachment: Option<String>,
}

impl Provenance {
    pub fn manual() -> Self {
        Self {
            origin: Origin::Manual,
            source_name: None,
            source_url: None,
            retrieved_at: None,
            attachment: None,
        }
    }

    pub fn external(zoo: impl Into<String>) -> Self {
        Self {
            origin: Origin::ExternalZoo,
            source_name: Some(zoo.into()),
            ..Self::manual()
        }
    }

    pub fn harness(executor: impl Into<String>) -> Self {
        Self {
            origin: Origin::EvaluationHarness,
            source_name: Some(executor.into()),
            ..Self::manual()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    Float32,
    Int64,
    String,
    Bytes,
    Bool,
}

/// One tensor dimension: a fixed extent or the `*` wildcard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dim {
    Fixed(u64),
    Any,
}

impl Serialize for Dim {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Dim::Fixed(n) => s.serialize_u64(*n),
            Dim::Any => s.serialize_str("*"),
        }
    }
}

impl<'de> Deserialize<'de> for Dim {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(Dim::Fixed(n)),
            Raw::S(s) if s == "*" => Ok(Dim::Any),
            Raw::S(s) => Err(serde::de::Error::custom(format!(
                "dimension must be a non-negative integer or \"*\", got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoSpec {
    pub name: String,
    pub dtype: DType,
    pub shape: Vec<Dim>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semantic_type: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformStep {
    pub name: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub family: String,
    pub parameter_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueType {
    Int,
    Float,
    String,
    Bool,
    Enum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameter {
    pub name: String,
    pub value_type: ValueType,
    pub value: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DatasetRef {
    pub id: String,
    pub version: Version,
}

impl DatasetRef {
    pub fn new(id: impl Into<String>, version: impl Into<Version>) -> Self {
        Self {
            id: id.into(),
            version: version.into(),
        }
    }
}

impl fmt::Display for DatasetRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.id, self.version)
    }
}

/// Configuration package: a trained model with its interface and lineage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub id: String,
    pub name: String,
    pub version: Version,
    pub task: String,
    pub input_signature: Vec<IoSpec>,
    pub output_signature: Vec<IoSpec>,
    #[serde(default)]
    pub transformations: Vec<TransformStep>,
    pub architecture: Architecture,
    #[serde(default)]
    pub hyperparameters: Vec<Hyperparameter>,
    #[serde(default)]
    pub trained_on: Vec<DatasetRef>,
    pub source: Provenance,
    #[serde(default)]
    pub tags: std::collections::BTreeSet<String>,
    pub created_at: DateTime<Utc>,
}

impl ModelRecord {
    pub fn input_types(&self) -> impl Iterator<Item = &str> {
        self.input_signature.iter().filter_map(|io| io.semantic_type.as_deref())
    }

    pub fn output_types(&self) -> impl Iterator<Item = &str> {
        self.output_signature
            .iter()
            .filter_map(|io| io.semantic_type.as_deref())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollectionMethod {
    Crowdsourced,
    Scraped,
    Synthetic,
    Curated,
    Derived,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Image,
    Text,
    Audio,
    Tabular,
    Multimodal,
}

/// Dataset package: a versioned dataset and where it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub name: String,
    pub version: Version,
    #[serde(default)]
    pub source: Vec<String>,
    pub collection_method: CollectionMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub license: Option<String>,
    pub contains_sensitive_data: bool,
    pub modality: Modality,
    pub instance_count: u64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
    Unsplit,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
            Split::Unsplit => "unsplit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataInstance {
    pub id: String,
    pub dataset_id: DatasetRef,
    pub locator: String,
    /// Concept IRIs.
    #[serde(default)]
    pub labels: Vec<String>,
    pub split: Split,
    pub sensitive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredConcept {
    pub concept: String,
    pub score: f64,
}

/// Execution package: one model's output on one data instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub model_id: String,
    pub instance_id: String,
    pub predicted: Vec<ScoredConcept>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticConcept {
    pub iri: String,
    pub label: String,
    pub kb_source: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviceClass {
    Cloud,
    Workstation,
    Edge,
    Mobile,
}

impl DeviceClass {
    pub fn as_str(self) -> &'static str {
        match self {
            DeviceClass::Cloud => "cloud",
            DeviceClass::Workstation => "workstation",
            DeviceClass::Edge => "edge",
            DeviceClass::Mobile => "mobile",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HardwareProfile {
    pub id: String,
    pub name: String,
    pub device_class: DeviceClass,
    pub cpu: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accelerator: Option<String>,
    pub memory_mb: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub name: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice: Option<String>,
    pub higher_is_better: bool,
}

impl MetricValue {
    /// A metric with a known name; polarity comes from [`KNOWN_METRICS`].
    ///
    /// Unknown names default to higher-is-better and should use
    /// [`MetricValue::with_polarity`] instead.
    pub fn known(name: &str, value: f64) -> Self {
        Self {
            name: name.to_owned(),
            value,
            unit: None,
            slice: None,
            higher_is_better: known_polarity(name).unwrap_or(true),
        }
    }

    pub fn with_polarity(name: &str, value: f64, higher_is_better: bool) -> Self {
        Self {
            higher_is_better,
            ..Self::known(name, value)
        }
    }

    pub fn sliced(mut self, slice: &str) -> Self {
        self.slice = Some(slice.to_owned());
        self
    }
}

/// Evaluation package: metrics of one model on one dataset and hardware.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRun {
    pub id: String,
    pub model_id: String,
    pub dataset_id: DatasetRef,
    pub hardware_id: String,
    pub metrics: Vec<MetricValue>,
    pub executed_at: DateTime<Utc>,
    pub executor: Provenance,
}

/// Verbatim payload of an externally retrieved card.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCardRecord {
    pub id: String,
    pub zoo: String,
    pub payload: String,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RecordKind {
    #[serde(rename = "ModelRecord")]
    Model,
    #[serde(rename = "DatasetRecord")]
    Dataset,
    #[serde(rename = "DataInstance")]
    DataInstance,
    #[serde(rename = "PredictionRecord")]
    Prediction,
    #[serde(rename = "SemanticConcept")]
    Concept,
    #[serde(rename = "HardwareProfile")]
    Hardware,
    #[serde(rename = "EvaluationRun")]
    Evaluation,
    #[serde(rename = "RawCard")]
    RawCard,
}

impl RecordKind {
    pub const ALL: [RecordKind; 8] = [
        RecordKind::Model,
        RecordKind::Dataset,
        RecordKind::DataInstance,
        RecordKind::Prediction,
        RecordKind::Concept,
        RecordKind::Hardware,
        RecordKind::Evaluation,
        RecordKind::RawCard,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Model => "ModelRecord",
            RecordKind::Dataset => "DatasetRecord",
            RecordKind::DataInstance => "DataInstance",
            RecordKind::Prediction => "PredictionRecord",
            RecordKind::Concept => "SemanticConcept",
            RecordKind::Hardware => "HardwareProfile",
            RecordKind::Evaluation => "EvaluationRun",
            RecordKind::RawCard => "RawCard",
        }
    }

    /// Kinds identified by `(name, version)` in addition to their id.
    pub fn is_versioned(self) -> bool {
        matches!(self, RecordKind::Model | RecordKind::Dataset)
    }
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown record kind {0:?}")]
pub struct UnknownKind(pub String);

impl std::str::FromStr for RecordKind {
    type Err = UnknownKind;

    /// Accepts the envelope name (`ModelRecord`) and short plural aliases
    /// (`models`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let kind = match s {
            "ModelRecord" | "model" | "models" => RecordKind::Model,
            "DatasetRecord" | "dataset" | "datasets" => RecordKind::Dataset,
            "DataInstance" | "instance" | "instances" => RecordKind::DataInstance,
            "PredictionRecord" | "prediction" | "predictions" => RecordKind::Prediction,
            "SemanticConcept" | "concept" | "concepts" => RecordKind::Concept,
            "HardwareProfile" | "hardware" => RecordKind::Hardware,
            "EvaluationRun" | "evaluation" | "evaluations" => RecordKind::Evaluation,
            "RawCard" | "card" | "cards" => RecordKind::RawCard,
            _ => return Err(UnknownKind(s.to_owned())),
        };
        Ok(kind)
    }
}

/// Any meta-model record, serialized as the `{"kind", "body"}` envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "body")]
pub enum Record {
    #[serde(rename = "ModelRecord")]
    Model(ModelRecord),
    #[serde(rename = "DatasetRecord")]
    Dataset(DatasetRecord),
    #[serde(rename = "DataInstance")]
    DataInstance(DataInstance),
    #[serde(rename = "PredictionRecord")]
    Prediction(PredictionRecord),
    #[serde(rename = "SemanticConcept")]
    Concept(SemanticConcept),
    #[serde(rename = "HardwareProfile")]
    Hardware(HardwareProfile),
    #[serde(rename = "EvaluationRun")]
    Evaluation(EvaluationRun),
    #[serde(rename = "RawCard")]
    RawCard(RawCardRecord),
}

impl Record {
    pub fn kind(&self) -> RecordKind {
        match self {
            Record::Model(_) => RecordKind::Model,
            Record::Dataset(_) => RecordKind::Dataset,
            Record::DataInstance(_) => RecordKind::DataInstance,
            Record::Prediction(_) => RecordKind::Prediction,
            Record::Concept(_) => RecordKind::Concept,
            Record::Hardware(_) => RecordKind::Hardware,
            Record::Evaluation(_) => RecordKind::Evaluation,
            Record::RawCard(_) => RecordKind::RawCard,
        }
    }

    pub fn id(&self) -> &str {
        match self {
            Record::Model(r) => &r.id,
            Record::Dataset(r) => &r.id,
            Record::DataInstance(r) => &r.id,
            Record::Prediction(r) => &r.id,
            Record::Concept(r) => &r.iri,
            Record::Hardware(r) => &r.id,
            Record::Evaluation(r) => &r.id,
            Record::RawCard(r) => &r.id,
        }
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            Record::Model(r) => Some(&r.name),
            Record::Dataset(r) => Some(&r.name),
            Record::Hardware(r) => Some(&r.name),
            _ => None,
        }
    }

    pub fn version(&self) -> Option<&Version> {
        match self {
            Record::Model(r) => Some(&r.version),
            Record::Dataset(r) => Some(&r.version),
            _ => None,
        }
    }

    /// Provenance for the kinds that carry one.
    pub fn provenance(&self) -> Option<&Provenance> {
        match self {
            Record::Model(r) => Some(&r.source),
            Record::Dataset(r) => Some(&r.provenance),
            Record::Evaluation(r) => Some(&r.executor),
            Record::RawCard(r) => Some(&r.provenance),
            _ => None,
        }
    }

    pub fn provenance_mut(&mut self) -> Option<&mut Provenance> {
        match self {
            Record::Model(r) => Some(&mut r.source),
            Record::Dataset(r) => Some(&mut r.provenance),
            Record::Evaluation(r) => Some(&mut r.executor),
            Record::RawCard(r) => Some(&mut r.provenance),
            _ => None,
        }
    }

    pub fn as_model(&self) -> Option<&ModelRecord> {
        match self {
            Record::Model(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_dataset(&self) -> Option<&DatasetRecord> {
        match self {
            Record::Dataset(d) => Some(d),
            _ => None,
        }
    }

    pub fn as_instance(&self) -> Option<&DataInstance> {
        match self {
            Record::DataInstance(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_evaluation(&self) -> Option<&EvaluationRun> {
        match self {
            Record::Evaluation(e) => Some(e),
            _ => None,
        }
    }

    pub fn as_hardware(&self) -> Option<&HardwareProfile> {
        match self {
            Record::Hardware(h) => Some(h),
            _ => None,
        }
    }

    pub fn as_concept(&self) -> Option<&SemanticConcept> {
        match self {
            Record::Concept(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_raw_card(&self) -> Option<&RawCardRecord> {
        match self {
            Record::RawCard(c) => Some(c),
            _ => None,
        }
    }
}

macro_rules! impl_from_record {
    ($($ty:ty => $variant:ident),* $(,)?) => {
        $(impl From<$ty> for Record {
            fn from(r: $ty) -> Self {
                Record::$variant(r)
            }
        })*
    };
}

impl_from_record! {
    ModelRecord => Model,
    DatasetRecord => Dataset,
    DataInstance => DataInstance,
    PredictionRecord => Prediction,
    SemanticConcept => Concept,
    HardwareProfile => Hardware,
    EvaluationRun => Evaluation,
    RawCardRecord => RawCard,
}
