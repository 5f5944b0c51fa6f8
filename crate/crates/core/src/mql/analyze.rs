//! Binds paths to meta-model fields and type-checks a parsed query.

use serde::Serialize;

use super::ast::*;
use crate::store::ScanFilter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarType {
    String,
    Number,
    Bool,
}

impl ScalarType {
    fn of(lit: &Literal) -> ScalarType {
        match lit {
            Literal::Str(_) => ScalarType::String,
            Literal::Num(_) => ScalarType::Number,
            Literal::Bool(_) => ScalarType::Bool,
        }
    }
}

/// The record a path is evaluated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Model,
    Dataset,
    Instance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    ModelId,
    ModelName,
    ModelVersion,
    Task,
    ArchFamily,
    ArchParams,
    ArchDescription,
    Tags,
    InputTypes,
    OutputTypes,
    InputNames,
    OutputNames,
    HyperparameterNames,
    ModelOrigin,
    ModelSourceName,
    DatasetId,
    DatasetName,
    DatasetVersion,
    Source,
    CollectionMethod,
    AnnotatorCount,
    License,
    SensitiveData,
    Modality,
    InstanceCount,
    DatasetOrigin,
    DatasetSourceName,
    InstanceId,
    Locator,
    Labels,
    Split,
    InstanceSensitive,
}

#[derive(Debug, Clone, Copy)]
pub struct FieldDef {
    pub path: &'static str,
    pub scope: Scope,
    pub field: Field,
    pub ty: ScalarType,
    /// Multi-valued (a list in the record).
    pub many: bool,
}

const fn def(path: &'static str, scope: Scope, field: Field, ty: ScalarType, many: bool) -> FieldDef {
    FieldDef {
        path,
        scope,
        field,
        ty,
        many,
    }
}

use ScalarType::{Bool as B, Number as N, String as S};
use Scope::{Dataset as D, Instance as I, Model as M};

/// Queryable fields of the meta-model. `trained_on.<dataset field>` is
/// derived from the dataset entries.
pub const CATALOG: &[FieldDef] = &[
    def("id", M, Field::ModelId, S, false),
    def("name", M, Field::ModelName, S, false),
    def("version", M, Field::ModelVersion, S, false),
    def("task", M, Field::Task, S, false),
    def("architecture.family", M, Field::ArchFamily, S, false),
    def("architecture.parameter_count", M, Field::ArchParams, N, false),
    def("architecture.description", M, Field::ArchDescription, S, false),
    def("tags", M, Field::Tags, S, true),
    def("input_signature.semantic_type", M, Field::InputTypes, S, true),
    def("output_signature.semantic_type", M, Field::OutputTypes, S, true),
    def("input_signature.name", M, Field::InputNames, S, true),
    def("output_signature.name", M, Field::OutputNames, S, true),
    def("hyperparameters.name", M, Field::HyperparameterNames, S, true),
    def("source.origin", M, Field::ModelOrigin, S, false),
    def("source.source_name", M, Field::ModelSourceName, S, false),
    def("id", D, Field::DatasetId, S, false),
    def("name", D, Field::DatasetName, S, false),
    def("version", D, Field::DatasetVersion, S, false),
    def("source", D, Field::Source, S, true),
    def("collection_method", D, Field::CollectionMethod, S, false),
    def("annotator_count", D, Field::AnnotatorCount, N, false),
    def("license", D, Field::License, S, false),
    def("contains_sensitive_data", D, Field::SensitiveData, B, false),
    def("modality", D, Field::Modality, S, false),
    def("instance_count", D, Field::InstanceCount, N, false),
    def("provenance.origin", D, Field::DatasetOrigin, S, false),
    def("provenance.source_name", D, Field::DatasetSourceName, S, false),
    def("id", I, Field::InstanceId, S, false),
    def("locator", I, Field::Locator, S, false),
    def("labels", I, Field::Labels, S, true),
    def("split", I, Field::Split, S, false),
    def("sensitive", I, Field::InstanceSensitive, B, false),
];

/// How a bound path reaches its field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binding {
    Direct(Field),
    /// Dataset field reached through a model's `trained_on` references.
    TrainedOn(Field),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundPath {
    pub path: Path,
    pub binding: Binding,
    pub ty: ScalarType,
    pub many: bool,
}

/// Looks `path` up in the catalog for `scope`.
pub fn bind(scope: Scope, path: &Path) -> Option<BoundPath> {
    let dotted = path.dotted();
    let direct = |scope: Scope, p: &str| CATALOG.iter().find(|d| d.scope == scope && d.path == p);
    if let Some(d) = direct(scope, &dotted) {
        return Some(BoundPath {
            path: path.clone(),
            binding: Binding::Direct(d.field),
            ty: d.ty,
            many: d.many,
        });
    }
    if scope == Scope::Model {
        let rest = dotted.strip_prefix("trained_on.")?;
        let d = direct(Scope::Dataset, rest)?;
        return Some(BoundPath {
            path: path.clone(),
            binding: Binding::TrainedOn(d.field),
            ty: d.ty,
            many: true,
        });
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub enum TOperand {
    Literal(Literal),
    Field(BoundPath),
    Metric(MetricCall),
}

impl TOperand {
    pub fn ty(&self) -> ScalarType {
        match self {
            TOperand::Literal(l) => ScalarType::of(l),
            TOperand::Field(b) => b.ty,
            TOperand::Metric(_) => ScalarType::Number,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TExpr {
    And(Box<TExpr>, Box<TExpr>),
    Or(Box<TExpr>, Box<TExpr>),
    Not(Box<TExpr>),
    Compare { lhs: TOperand, op: CmpOp, rhs: TOperand },
    In { operand: TOperand, list: Vec<Literal> },
    Contains { operand: TOperand, value: Literal },
    Quantified { quantifier: Quantifier, body: Box<TExpr> },
}

/// An indexed equality used to narrow the candidate set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexUse {
    pub filter: ScanFilter,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypedQuery {
    pub source: Query,
    pub target: Target,
    pub predicate: Option<TExpr>,
    pub order_by: Option<(TOperand, Direction)>,
    pub limit: Option<u64>,
    pub index: Option<IndexUse>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisErrorKind {
    UnknownField,
    TypeMismatch,
    IllegalQuantifier,
    IllegalMetric,
    IllegalContains,
    IllegalOrderKey,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize)]
#[error("{message}")]
pub struct AnalysisError {
    pub kind: AnalysisErrorKind,
    /// Offending field path, when one is involved.
    pub path: Option<String>,
    pub message: String,
}

fn err(kind: AnalysisErrorKind, path: Option<&Path>, message: String) -> AnalysisError {
    AnalysisError {
        kind,
        path: path.map(Path::dotted),
        message,
    }
}

struct Analyzer {
    target: Target,
}

/// Type-checks `query` against the meta-model field catalog.
pub fn analyze(query: &Query) -> Result<TypedQuery, AnalysisError> {
    let a = Analyzer { target: query.target };
    let outer = match query.target {
        Target::Models => Scope::Model,
        Target::Datasets => Scope::Dataset,
    };
    let predicate = query.predicate.as_ref().map(|p| a.expr(p, outer)).transpose()?;
    let order_by = match &query.order_by {
        None => None,
        Some(o) => {
            let key = a.operand(&o.key, outer)?;
            if let TOperand::Field(b) = &key {
                if b.many {
                    return Err(err(
                        AnalysisErrorKind::IllegalOrderKey,
                        Some(&b.path),
                        format!("cannot order by multi-valued field {}", b.path),
                    ));
                }
            }
            Some((key, o.direction))
        }
    };
    let index = predicate.as_ref().and_then(|p| pick_index(query.target, p));
    Ok(TypedQuery {
        source: query.clone(),
        target: query.target,
        predicate,
        order_by,
        limit: query.limit,
        index,
    })
}

impl Analyzer {
    fn expr(&self, e: &Expr, scope: Scope) -> Result<TExpr, AnalysisError> {
        Ok(match e {
            Expr::And(a, b) => TExpr::And(Box::new(self.expr(a, scope)?), Box::new(self.expr(b, scope)?)),
            Expr::Or(a, b) => TExpr::Or(Box::new(self.expr(a, scope)?), Box::new(self.expr(b, scope)?)),
            Expr::Not(a) => TExpr::Not(Box::new(self.expr(a, scope)?)),
            Expr::Compare { lhs, op, rhs } => {
                let lhs = self.operand(lhs, scope)?;
                let rhs = self.operand(rhs, scope)?;
                let (lt, rt) = (lhs.ty(), rhs.ty());
                if lt != rt {
                    return Err(mismatch(&lhs, &rhs, format!("cannot compare {lt:?} with {rt:?}")));
                }
                if lt == ScalarType::Bool && !matches!(op, CmpOp::Eq | CmpOp::Ne) {
                    return Err(mismatch(
                        &lhs,
                        &rhs,
                        format!("booleans support only = and !=, not {}", op.as_str()),
                    ));
                }
                TExpr::Compare { lhs, op: *op, rhs }
            }
            Expr::In { operand, list } => {
                let operand = self.operand(operand, scope)?;
                for lit in list {
                    if ScalarType::of(lit) != operand.ty() {
                        return Err(mismatch(
                            &operand,
                            &operand,
                            format!("IN list element {lit} is not {:?}", operand.ty()),
                        ));
                    }
                }
                TExpr::In {
                    operand,
                    list: list.clone(),
                }
            }
            Expr::Contains { operand, value } => {
                let operand = self.operand(operand, scope)?;
                match &operand {
                    TOperand::Field(b) if b.many => {
                        if ScalarType::of(value) != b.ty {
                            return Err(err(
                                AnalysisErrorKind::TypeMismatch,
                                Some(&b.path),
                                format!("{} holds {:?} values, not {value}", b.path, b.ty),
                            ));
                        }
                    }
                    TOperand::Field(b) => {
                        return Err(err(
                            AnalysisErrorKind::IllegalContains,
                            Some(&b.path),
                            format!("CONTAINS needs a collection, {} is single-valued", b.path),
                        ))
                    }
                    _ => {
                        return Err(err(
                            AnalysisErrorKind::IllegalContains,
                            None,
                            "CONTAINS needs a collection field on its left".into(),
                        ))
                    }
                }
                TExpr::Contains {
                    operand,
                    value: value.clone(),
                }
            }
            Expr::Quantified { quantifier, body } => {
                if scope == Scope::Instance {
                    return Err(err(
                        AnalysisErrorKind::IllegalQuantifier,
                        None,
                        "quantifiers cannot be nested".into(),
                    ));
                }
                TExpr::Quantified {
                    quantifier: *quantifier,
                    body: Box::new(self.expr(body, Scope::Instance)?),
                }
            }
        })
    }

    fn operand(&self, o: &Operand, scope: Scope) -> Result<TOperand, AnalysisError> {
        match o {
            Operand::Literal(l) => Ok(TOperand::Literal(l.clone())),
            Operand::Path(p) => bind(scope, p).map(TOperand::Field).ok_or_else(|| {
                let within = match scope {
                    Scope::Model => "MODELS",
                    Scope::Dataset => "DATASETS",
                    Scope::Instance => "INSTANCES",
                };
                err(
                    AnalysisErrorKind::UnknownField,
                    Some(p),
                    format!("unknown field {p} for {within}"),
                )
            }),
            Operand::Metric(m) => {
                if self.target != Target::Models || scope != Scope::Model {
                    return Err(err(
                        AnalysisErrorKind::IllegalMetric,
                        None,
                        format!("{m} is only available on models"),
                    ));
                }
                Ok(TOperand::Metric(m.clone()))
            }
        }
    }
}

fn mismatch(lhs: &TOperand, rhs: &TOperand, message: String) -> AnalysisError {
    let path = [lhs, rhs].into_iter().find_map(|o| match o {
        TOperand::Field(b) => Some(b.path.clone()),
        _ => None,
    });
    err(AnalysisErrorKind::TypeMismatch, path.as_ref(), message)
}

/// Picks a scan filter from a top-level conjunct of the form
/// `<indexed field> = "<string>"`. Preference: name, task, trained_on.id.
fn pick_index(target: Target, predicate: &TExpr) -> Option<IndexUse> {
    let mut conjuncts = Vec::new();
    flatten_and(predicate, &mut conjuncts);
    let mut best: Option<(u8, IndexUse)> = None;
    for c in conjuncts {
        let TExpr::Compare {
            lhs,
            op: CmpOp::Eq,
            rhs,
        } = c
        else {
            continue;
        };
        let (b, value) = match (lhs, rhs) {
            (TOperand::Field(b), TOperand::Literal(Literal::Str(v)))
            | (TOperand::Literal(Literal::Str(v)), TOperand::Field(b)) => (b, v.clone()),
            _ => continue,
        };
        let choice = match (target, b.binding) {
            (Target::Models, Binding::Direct(Field::ModelName)) => (0, ScanFilter::Name(value)),
            (Target::Datasets, Binding::Direct(Field::DatasetName)) => (0, ScanFilter::Name(value)),
            (Target::Models, Binding::Direct(Field::Task)) => (1, ScanFilter::Task(value)),
            (Target::Models, Binding::TrainedOn(Field::DatasetId)) => (2, ScanFilter::DatasetId(value)),
            _ => continue,
        };
        if best.as_ref().is_none_or(|(rank, _)| choice.0 < *rank) {
            best = Some((
                choice.0,
                IndexUse {
                    filter: choice.1,
                    path: b.path.dotted(),
                },
            ));
        }
    }
    best.map(|(_, i)| i)
}

fn flatten_and<'a>(e: &'a TExpr, out: &mut Vec<&'a TExpr>) {
    match e {
        TExpr::And(a, b) => {
            flatten_and(a, out);
            flatten_and(b, out);
        }
        other => out.push(other),
    }
}
