//! Kleene evaluation of typed queries against a store snapshot.

use std::cmp::Ordering;

use chrono::{DateTime, Utc};
use serde::Serialize;

use super::analyze::{Binding, Field, TExpr, TOperand, TypedQuery};
use super::ast::{Direction, Literal, MetricCall, Quantifier, Target};
use super::tribool::TriBool;
use crate::metamodel::*;
use crate::store::{ScanFilter, StoreLog};

/// Which run a `metric(...)` call reads when several match.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricPolicy {
    /// Most recent `executed_at`; equal timestamps go to the later append.
    #[default]
    MostRecent,
}

#[derive(Clone, Copy)]
pub struct EvalContext<'a> {
    pub store: &'a StoreLog,
    pub policy: MetricPolicy,
    /// Ignore runs executed after this instant.
    pub as_of: Option<DateTime<Utc>>,
}

impl<'a> EvalContext<'a> {
    pub fn new(store: &'a StoreLog) -> Self {
        EvalContext {
            store,
            policy: MetricPolicy::MostRecent,
            as_of: None,
        }
    }
}

/// A resolved metric and the run it came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricHit<'a> {
    pub value: f64,
    pub run: &'a EvaluationRun,
}

fn hardware_matches(store: &StoreLog, hardware_id: &str, wanted: &str) -> bool {
    if hardware_id == wanted {
        return true;
    }
    match store
        .resolve(RecordKind::Hardware, hardware_id)
        .and_then(Record::as_hardware)
    {
        Some(hw) => hw.name == wanted || hw.device_class.as_str() == wanted,
        None => false,
    }
}

/// Resolves `metric(...)` for one model.
///
/// Runs are restricted to the latest stored version of the dataset named
/// `call.dataset`, the optional hardware (profile name, device class or
/// id) and the slice (no `slice` argument means unsliced values only).
pub fn resolve_metric<'a>(
    store: &'a StoreLog,
    model_id: &str,
    call: &MetricCall,
    as_of: Option<DateTime<Utc>>,
) -> Option<MetricHit<'a>> {
    let dataset = store.latest_dataset(&call.dataset)?;
    let filter = ScanFilter::DatasetId(dataset.id.clone());
    let runs = store.scan(RecordKind::Evaluation, Some(&filter)).ok()?;
    let mut best: Option<MetricHit<'a>> = None;
    for run in runs.filter_map(Record::as_evaluation) {
        if run.model_id != model_id || run.dataset_id.version != dataset.version {
            continue;
        }
        if as_of.is_some_and(|t| run.executed_at > t) {
            continue;
        }
        if let Some(h) = &call.hardware {
            if !hardware_matches(store, &run.hardware_id, h) {
                continue;
            }
        }
        let Some(mv) = run
            .metrics
            .iter()
            .find(|m| m.name == call.name && m.slice == call.slice)
        else {
            continue;
        };
        // scan yields insertion order, so `>=` lets later appends win ties
        if best.as_ref().is_none_or(|b| run.executed_at >= b.run.executed_at) {
            best = Some(MetricHit { value: mv.value, run });
        }
    }
    best
}

#[derive(Clone, Copy)]
enum Subject<'a> {
    Model(&'a ModelRecord),
    Dataset(&'a DatasetRecord),
    Instance(&'a DataInstance),
}

fn enum_str<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

fn s(v: &str) -> Option<Literal> {
    Some(Literal::Str(v.to_owned()))
}

fn dataset_facts(d: &DatasetRecord, field: Field) -> Vec<Option<Literal>> {
    match field {
        Field::DatasetId => vec![s(&d.id)],
        Field::DatasetName => vec![s(&d.name)],
        Field::DatasetVersion => vec![s(d.version.as_str())],
        Field::Source => d.source.iter().map(|x| s(x)).collect(),
        Field::CollectionMethod => vec![s(&enum_str(&d.collection_method))],
        Field::AnnotatorCount => vec![d.annotator_count.map(|n| Literal::Num(n as f64))],
        Field::License => vec![d.license.as_deref().and_then(s)],
        Field::SensitiveData => vec![Some(Literal::Bool(d.contains_sensitive_data))],
        Field::Modality => vec![s(&enum_str(&d.modality))],
        Field::InstanceCount => vec![Some(Literal::Num(d.instance_count as f64))],
        Field::DatasetOrigin => vec![s(&enum_str(&d.provenance.origin))],
        Field::DatasetSourceName => vec![d.provenance.source_name.as_deref().and_then(s)],
        _ => vec![None],
    }
}

struct Evaluator<'a> {
    ctx: EvalContext<'a>,
}

impl<'a> Evaluator<'a> {
    /// Values of an operand for `subj`. `None` entries are missing values;
    /// an empty list means the collection is empty.
    fn facts(&self, op: &TOperand, subj: Subject<'a>) -> Vec<Option<Literal>> {
        match op {
            TOperand::Literal(l) => vec![Some(l.clone())],
            TOperand::Metric(call) => match subj {
                Subject::Model(m) => {
                    vec![resolve_metric(self.ctx.store, &m.id, call, self.ctx.as_of).map(|h| Literal::Num(h.value))]
                }
                _ => vec![None],
            },
            TOperand::Field(b) => match (b.binding, subj) {
                (Binding::TrainedOn(f), Subject::Model(m)) => {
                    if m.trained_on.is_empty() {
                        return vec![None];
                    }
                    m.trained_on
                        .iter()
                        .flat_map(|r| match self.dataset(&r.id) {
                            Some(d) => dataset_facts(d, f),
                            None => vec![None],
                        })
                        .collect()
                }
                (Binding::Direct(f), Subject::Model(m)) => model_facts(m, f),
                (Binding::Direct(f), Subject::Dataset(d)) => dataset_facts(d, f),
                (Binding::Direct(f), Subject::Instance(i)) => self.instance_facts(i, f),
                _ => vec![None],
            },
        }
    }

    fn dataset(&self, id: &str) -> Option<&'a DatasetRecord> {
        self.ctx
            .store
            .resolve(RecordKind::Dataset, id)
            .and_then(Record::as_dataset)
    }

    fn instance_facts(&self, i: &DataInstance, f: Field) -> Vec<Option<Literal>> {
        match f {
            Field::InstanceId => vec![s(&i.id)],
            Field::Locator => vec![s(&i.locator)],
            Field::Split => vec![s(i.split.as_str())],
            Field::InstanceSensitive => vec![Some(Literal::Bool(i.sensitive))],
            // a label matches by IRI or by the concept's label text
            Field::Labels => i
                .labels
                .iter()
                .flat_map(|iri| {
                    let label = self
                        .ctx
                        .store
                        .resolve(RecordKind::Concept, iri)
                        .and_then(Record::as_concept)
                        .map(|c| Literal::Str(c.label.clone()));
                    [s(iri), label].into_iter().flatten().map(Some)
                })
                .collect(),
            _ => vec![None],
        }
    }

    fn expr(&self, e: &TExpr, subj: Subject<'a>) -> TriBool {
        match e {
            TExpr::And(a, b) => {
                let l = self.expr(a, subj);
                if l == TriBool::False {
                    return l;
                }
                l & self.expr(b, subj)
            }
            TExpr::Or(a, b) => {
                let l = self.expr(a, subj);
                if l == TriBool::True {
                    return l;
                }
                l | self.expr(b, subj)
            }
            TExpr::Not(a) => !self.expr(a, subj),
            TExpr::Compare { lhs, op, rhs } => {
                let ls = self.facts(lhs, subj);
                let rs = self.facts(rhs, subj);
                exists(ls.iter().flat_map(|l| {
                    rs.iter().map(move |r| match (l, r) {
                        (Some(l), Some(r)) => cmp_literals(l, r).map(|o| op.holds(o)).into(),
                        _ => TriBool::Unknown,
                    })
                }))
            }
            TExpr::In { operand, list } => exists(self.facts(operand, subj).iter().map(|f| match f {
                Some(v) => list.iter().any(|l| literal_eq(v, l)).into(),
                None => TriBool::Unknown,
            })),
            TExpr::Contains { operand, value } => exists(self.facts(operand, subj).iter().map(|f| match f {
                Some(v) => literal_eq(v, value).into(),
                None => TriBool::Unknown,
            })),
            TExpr::Quantified { quantifier, body } => {
                let Some(instances) = self.instances(subj) else {
                    return TriBool::Unknown;
                };
                let values = instances.into_iter().map(|i| self.expr(body, Subject::Instance(i)));
                match quantifier {
                    Quantifier::Any => values.fold(TriBool::False, |a, b| a | b),
                    Quantifier::All => values.fold(TriBool::True, |a, b| a & b),
                }
            }
        }
    }

    /// Instances a quantifier ranges over; `None` when unknowable (a model
    /// with no training data recorded).
    fn instances(&self, subj: Subject<'a>) -> Option<Vec<&'a DataInstance>> {
        let ids: Vec<&str> = match subj {
            Subject::Dataset(d) => vec![d.id.as_str()],
            Subject::Model(m) if !m.trained_on.is_empty() => {
                let mut ids: Vec<&str> = m.trained_on.iter().map(|r| r.id.as_str()).collect();
                ids.dedup();
                ids
            }
            _ => return None,
        };
        let mut out = Vec::new();
        for id in ids {
            let filter = ScanFilter::DatasetId(id.to_owned());
            if let Ok(it) = self.ctx.store.scan(RecordKind::DataInstance, Some(&filter)) {
                out.extend(it.filter_map(Record::as_instance));
            }
        }
        Some(out)
    }
}

fn model_facts(m: &ModelRecord, f: Field) -> Vec<Option<Literal>> {
    match f {
        Field::ModelId => vec![s(&m.id)],
        Field::ModelName => vec![s(&m.name)],
        Field::ModelVersion => vec![s(m.version.as_str())],
        Field::Task => vec![s(&m.task)],
        Field::ArchFamily => vec![s(&m.architecture.family)],
        Field::ArchParams => vec![Some(Literal::Num(m.architecture.parameter_count as f64))],
        Field::ArchDescription => vec![m.architecture.description.as_deref().and_then(s)],
        Field::Tags => m.tags.iter().map(|t| s(t)).collect(),
        Field::InputTypes => m
            .input_signature
            .iter()
            .map(|io| io.semantic_type.as_deref().and_then(s))
            .collect(),
        Field::OutputTypes => m
            .output_signature
            .iter()
            .map(|io| io.semantic_type.as_deref().and_then(s))
            .collect(),
        Field::InputNames => m.input_signature.iter().map(|io| s(&io.name)).collect(),
        Field::OutputNames => m.output_signature.iter().map(|io| s(&io.name)).collect(),
        Field::HyperparameterNames => m.hyperparameters.iter().map(|h| s(&h.name)).collect(),
        Field::ModelOrigin => vec![s(&enum_str(&m.source.origin))],
        Field::ModelSourceName => vec![m.source.source_name.as_deref().and_then(s)],
        _ => vec![None],
    }
}

/// Kleene OR over an existential; no facts at all is FALSE.
fn exists(values: impl Iterator<Item = TriBool>) -> TriBool {
    let mut acc = TriBool::False;
    for v in values {
        acc = acc | v;
        if acc == TriBool::True {
            break;
        }
    }
    acc
}

fn cmp_literals(a: &Literal, b: &Literal) -> Option<Ordering> {
    match (a, b) {
        (Literal::Num(x), Literal::Num(y)) => x.partial_cmp(y),
        (Literal::Str(x), Literal::Str(y)) => Some(x.cmp(y)),
        (Literal::Bool(x), Literal::Bool(y)) => Some(x.cmp(y)),
        _ => None,
    }
}

fn literal_eq(a: &Literal, b: &Literal) -> bool {
    cmp_literals(a, b) == Some(Ordering::Equal)
}

fn sort_key_cmp(a: &Literal, b: &Literal) -> Ordering {
    match (a, b) {
        (Literal::Num(x), Literal::Num(y)) => x.total_cmp(y),
        _ => cmp_literals(a, b).unwrap_or(Ordering::Equal),
    }
}

/// Truth value of the predicate for one record (TRUE when there is no
/// predicate). Records of other kinds than the target are FALSE.
pub fn truth(q: &TypedQuery, record: &Record, ctx: EvalContext<'_>) -> TriBool {
    let subj = match (q.target, record) {
        (Target::Models, Record::Model(m)) => Subject::Model(m),
        (Target::Datasets, Record::Dataset(d)) => Subject::Dataset(d),
        _ => return TriBool::False,
    };
    match &q.predicate {
        None => TriBool::True,
        Some(p) => Evaluator { ctx }.expr(p, subj),
    }
}

/// Runs `q`: keeps records whose predicate is TRUE, then orders and limits.
///
/// Candidates are every record of the target kind (all versions) in
/// insertion order, narrowed by the index the analyzer picked.
pub fn evaluate<'a>(q: &TypedQuery, ctx: EvalContext<'a>) -> Vec<&'a Record> {
    let kind = match q.target {
        Target::Models => RecordKind::Model,
        Target::Datasets => RecordKind::Dataset,
    };
    let filter = q.index.as_ref().map(|i| &i.filter);
    let candidates: Vec<&'a Record> = match ctx.store.scan(kind, filter) {
        Ok(it) => it.collect(),
        Err(_) => ctx.store.scan(kind, None).map(|it| it.collect()).unwrap_or_default(),
    };
    let mut hits: Vec<&'a Record> = candidates.into_iter().filter(|r| truth(q, r, ctx).is_true()).collect();

    if let Some((key, dir)) = &q.order_by {
        let ev = Evaluator { ctx };
        let mut keyed: Vec<(Option<Literal>, &'a Record)> = hits
            .into_iter()
            .map(|r| {
                let subj = match r {
                    Record::Model(m) => Subject::Model(m),
                    Record::Dataset(d) => Subject::Dataset(d),
                    _ => unreachable!("candidates are models or datasets"),
                };
                (ev.facts(key, subj).into_iter().next().flatten(), r)
            })
            .collect();
        keyed.sort_by(|(ka, ra), (kb, rb)| {
            let by_key = match (ka, kb) {
                (Some(a), Some(b)) => match dir {
                    Direction::Asc => sort_key_cmp(a, b),
                    Direction::Desc => sort_key_cmp(b, a),
                },
                (Some(_), None) => Ordering::Less,
                (None, Some(_)) => Ordering::Greater,
                (None, None) => Ordering::Equal,
            };
            by_key
                .then_with(|| ra.name().cmp(&rb.name()))
                .then_with(|| crate::store::version_order(ra, rb))
        });
        hits = keyed.into_iter().map(|(_, r)| r).collect();
    }
    if let Some(n) = q.limit {
        hits.truncate(usize::try_from(n).unwrap_or(usize::MAX));
    }
    hits
}
