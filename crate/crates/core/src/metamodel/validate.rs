use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::records::*;

/// Looks up stored records by kind and id while validating references.
pub trait Resolver {
    fn resolve(&self, kind: RecordKind, id: &str) -> Option<&Record>;
}

impl<R: Resolver + ?Sized> Resolver for &R {
    fn resolve(&self, kind: RecordKind, id: &str) -> Option<&Record> {
        (**self).resolve(kind, id)
    }
}

impl Resolver for [Record] {
    fn resolve(&self, kind: RecordKind, id: &str) -> Option<&Record> {
        self.iter().find(|r| r.kind() == kind && r.id() == id)
    }
}

impl Resolver for Vec<Record> {
    fn resolve(&self, kind: RecordKind, id: &str) -> Option<&Record> {
        self.as_slice().resolve(kind, id)
    }
}

/// Resolves against `front` first, then `back`.
pub struct Layered<A, B> {
    pub front: A,
    pub back: B,
}

impl<A: Resolver, B: Resolver> Resolver for Layered<A, B> {
    fn resolve(&self, kind: RecordKind, id: &str) -> Option<&Record> {
        self.front.resolve(kind, id).or_else(|| self.back.resolve(kind, id))
    }
}

/// A resolver that knows no records.
pub struct Empty;

impl Resolver for Empty {
    fn resolve(&self, _: RecordKind, _: &str) -> Option<&Record> {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.reason)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, path: impl Into<String>, reason: impl Into<String>) {
        self.violations.push(Violation {
            path: path.into(),
            reason: reason.into(),
        });
    }

    fn non_empty(&mut self, path: &str, value: &str) {
        if value.trim().is_empty() {
            self.push(path, "must not be empty");
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every invariant of `record`, resolving references via `resolver`.
///
/// Never fails: each problem becomes a report entry, in field order.
pub fn validate(record: &Record, resolver: &dyn Resolver) -> ValidationReport {
    let mut report = ValidationReport::default();
    let r = &mut report;
    match record {
        Record::Model(m) => model(m, resolver, r),
        Record::Dataset(d) => {
            r.non_empty("id", &d.id);
            r.non_empty("name", &d.name);
            r.non_empty("version", d.version.as_str());
            for (i, s) in d.source.iter().enumerate() {
                r.non_empty(&format!("source[{i}]"), s);
            }
            provenance("provenance", &d.provenance, resolver, r);
        }
        Record::DataInstance(inst) => {
            r.non_empty("id", &inst.id);
            r.non_empty("locator", &inst.locator);
            dataset_ref("dataset_id", &inst.dataset_id, resolver, r);
            for (i, iri) in inst.labels.iter().enumerate() {
                if resolver.resolve(RecordKind::Concept, iri).is_none() {
                    r.push(format!("labels[{i}]"), format!("unknown concept {iri:?}"));
                }
            }
        }
        Record::Prediction(p) => {
            r.non_empty("id", &p.id);
            if resolver.resolve(RecordKind::Model, &p.model_id).is_none() {
                r.push("model_id", format!("unknown model {:?}", p.model_id));
            }
            if resolver.resolve(RecordKind::DataInstance, &p.instance_id).is_none() {
                r.push("instance_id", format!("unknown instance {:?}", p.instance_id));
            }
            for (i, sc) in p.predicted.iter().enumerate() {
                if !(sc.score.is_finite() && (0.0..=1.0).contains(&sc.score)) {
                    r.push(format!("predicted[{i}].score"), "score must lie in [0, 1]");
                }
                if resolver.resolve(RecordKind::Concept, &sc.concept).is_none() {
                    r.push(
                        format!("predicted[{i}].concept"),
                        format!("unknown concept {:?}", sc.concept),
                    );
                }
            }
        }
        Record::Concept(c) => {
            r.non_empty("iri", &c.iri);
            r.non_empty("label", &c.label);
            r.non_empty("kb_source", &c.kb_source);
        }
        Record::Hardware(h) => {
            r.non_empty("id", &h.id);
            r.non_empty("name", &h.name);
            if h.id == UNSPECIFIED_HARDWARE {
                r.push("id", "reserved hardware id");
            }
            if h.memory_mb == 0 {
                r.push("memory_mb", "must be positive");
            }
        }
        Record::Evaluation(e) => evaluation(e, resolver, r),
        Record::RawCard(c) => {
            r.non_empty("id", &c.id);
            r.non_empty("zoo", &c.zoo);
            if c.provenance.origin != Origin::ExternalZoo {
                r.push("provenance.origin", "raw cards must come from an external zoo");
            }
            provenance("provenance", &c.provenance, resolver, r);
        }
    }
    report
}

fn model(m: &ModelRecord, resolver: &dyn Resolver, r: &mut ValidationReport) {
    r.non_empty("id", &m.id);
    r.non_empty("name", &m.name);
    r.non_empty("version", m.version.as_str());
    r.non_empty("task", &m.task);
    for (field, sig) in [
        ("input_signature", &m.input_signature),
        ("output_signature", &m.output_signature),
    ] {
        if sig.is_empty() {
            r.push(field, "must not be empty");
        }
        for (i, io) in sig.iter().enumerate() {
            r.non_empty(&format!("{field}[{i}].name"), &io.name);
            for (j, dim) in io.shape.iter().enumerate() {
                if *dim == Dim::Fixed(0) {
                    r.push(format!("{field}[{i}].shape[{j}]"), "dimension must be positive");
                }
            }
        }
    }
    for (i, step) in m.transformations.iter().enumerate() {
        r.non_empty(&format!("transformations[{i}].name"), &step.name);
    }
    r.non_empty("architecture.family", &m.architecture.family);

    let mut seen = HashSet::new();
    for (i, hp) in m.hyperparameters.iter().enumerate() {
        if !seen.insert(hp.name.as_str()) {
            r.push(
                format!("hyperparameters[{i}].name"),
                format!("duplicate hyperparameter {:?}", hp.name),
            );
        }
        if !value_matches(hp.value_type, &hp.value) {
            r.push(
                format!("hyperparameters[{i}].value"),
                format!("value does not parse as {:?}", hp.value_type),
            );
        }
    }
    for (i, dref) in m.trained_on.iter().enumerate() {
        dataset_ref(&format!("trained_on[{i}]"), dref, resolver, r);
    }
    provenance("source", &m.source, resolver, r);
}

fn evaluation(e: &EvaluationRun, resolver: &dyn Resolver, r: &mut ValidationReport) {
    r.non_empty("id", &e.id);
    if resolver.resolve(RecordKind::Model, &e.model_id).is_none() {
        r.push("model_id", format!("unknown model {:?}", e.model_id));
    }
    dataset_ref("dataset_id", &e.dataset_id, resolver, r);
    if e.hardware_id != UNSPECIFIED_HARDWARE && resolver.resolve(RecordKind::Hardware, &e.hardware_id).is_none() {
        r.push("hardware_id", format!("unknown hardware {:?}", e.hardware_id));
    }
    if e.metrics.is_empty() {
        r.push("metrics", "must not be empty");
    }
    let mut seen = HashSet::new();
    for (i, mv) in e.metrics.iter().enumerate() {
        let path = format!("metrics[{i}]");
        r.non_empty(&format!("{path}.name"), &mv.name);
        if !mv.value.is_finite() {
            r.push(format!("{path}.value"), "value not finite");
        }
        if let Some(expected) = known_polarity(&mv.name) {
            if expected != mv.higher_is_better {
                r.push(
                    format!("{path}.higher_is_better"),
                    format!("metric {:?} must have higher_is_better = {expected}", mv.name),
                );
            }
        }
        if !seen.insert((mv.name.as_str(), mv.slice.as_deref())) {
            r.push(path, format!("duplicate metric {:?} for slice {:?}", mv.name, mv.slice));
        }
    }
    provenance("executor", &e.executor, resolver, r);
}

/// Checks a standalone metric value (finiteness and polarity).
pub fn validate_metric(mv: &MetricValue) -> ValidationReport {
    let mut r = ValidationReport::default();
    if !mv.value.is_finite() {
        r.push("value", "value not finite");
    }
    if let Some(expected) = known_polarity(&mv.name) {
        if expected != mv.higher_is_better {
            r.push(
                "higher_is_better",
                format!("metric {:?} must have higher_is_better = {expected}", mv.name),
            );
        }
    }
    r
}

fn dataset_ref(path: &str, dref: &DatasetRef, resolver: &dyn Resolver, r: &mut ValidationReport) {
    match resolver
        .resolve(RecordKind::Dataset, &dref.id)
        .and_then(Record::as_dataset)
    {
        Some(ds) if ds.version == dref.version => {}
        Some(ds) => r.push(
            path,
            format!(
                "dataset {:?} has version {}, reference asks for {}",
                dref.id, ds.version, dref.version
            ),
        ),
        None => r.push(path, format!("dangling dataset reference {dref}")),
    }
}

fn provenance(path: &str, p: &Provenance, resolver: &dyn Resolver, r: &mut ValidationReport) {
    if p.origin == Origin::ExternalZoo && p.source_name.as_deref().is_none_or(|s| s.trim().is_empty()) {
        r.push(
            format!("{path}.source_name"),
            "external_zoo provenance requires a source name",
        );
    }
    if let Some(att) = &p.attachment {
        if resolver.resolve(RecordKind::RawCard, att).is_none() {
            r.push(format!("{path}.attachment"), format!("unknown raw card {att:?}"));
        }
    }
}

fn value_matches(ty: ValueType, v: &serde_json::Value) -> bool {
    match ty {
        ValueType::Int => v.is_i64() || v.is_u64(),
        ValueType::Float => v.as_f64().is_some_and(f64::is_finite),
        ValueType::String | ValueType::Enum => v.is_string(),
        ValueType::Bool => v.is_boolean(),
    }
}
