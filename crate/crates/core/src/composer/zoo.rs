//! Store-backed composition: candidate lookup and the JSON request format.
//!
//! ```json
//! {
//!   "nodes": [{"id": "tc", "task": "text-classification",
//!              "output_type": "token-sequence", "filter": "tags CONTAINS \"x\"",
//!              "eval_dataset": "tweet-corpus"}],
//!   "edges": [["tc", "pos"]],
//!   "budgets": {"latency_ms": 80, "memory_mb": 600},
//!   "hardware": "pixel-7",
//!   "weights": {"tc": 1, "pos": 1}
//! }
//! ```

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::*;
use crate::metamodel::{EvaluationRun, HardwareProfile, ModelRecord, Record, RecordKind, Resolver};
use crate::mql::{self, EvalContext, MqlError};
use crate::store::{ScanFilter, StoreLog};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskNode {
    pub id: String,
    pub task: String,
    /// Semantic type the model must accept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_type: Option<String>,
    /// Semantic type the model must produce.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_type: Option<String>,
    /// MQL predicate over the model, as after `FIND MODELS WHERE`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<String>,
    /// Restrict metric runs to this dataset name (latest version).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_dataset: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    pub latency_ms: f64,
    pub memory_mb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositionRequest {
    pub nodes: Vec<TaskNode>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
    pub budgets: Budgets,
    /// Hardware profile id or name; every metric is read on it.
    pub hardware: String,
    /// Raw per-node weights; missing nodes weigh 0, no weights at all means
    /// uniform.
    #[serde(default)]
    pub weights: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Exclusion {
    pub model_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateReport {
    pub node: String,
    pub candidates: Vec<Candidate<f64>>,
    /// Task-matching models dropped for a type, filter or missing metric.
    pub excluded: Vec<Exclusion>,
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("unknown hardware profile {0:?}")]
    UnknownHardware(String),
    #[error("edge refers to unknown node {0:?}")]
    UnknownNode(String),
    #[error("weight given for unknown node {0:?}")]
    UnknownWeight(String),
    #[error("filter of node {node:?}: {error}")]
    Filter { node: String, error: MqlError },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

fn find_hardware<'a>(store: &'a StoreLog, reference: &str) -> Option<&'a HardwareProfile> {
    if let Some(hw) = store
        .resolve(RecordKind::Hardware, reference)
        .and_then(Record::as_hardware)
    {
        return Some(hw);
    }
    store
        .latest(RecordKind::Hardware, reference)
        .and_then(Record::as_hardware)
}

/// Most recent unsliced value of `metric` for `model` on `hardware`,
/// optionally limited to the latest version of dataset `dataset`.
fn metric_on(
    store: &StoreLog,
    model: &str,
    metric: &str,
    hardware: &HardwareProfile,
    dataset: Option<&str>,
) -> Option<f64> {
    let dataset = match dataset {
        Some(name) => Some(store.latest_dataset(name)?),
        None => None,
    };
    let runs: Box<dyn Iterator<Item = &Record>> = match dataset {
        Some(d) => Box::new(
            store
                .scan(RecordKind::Evaluation, Some(&ScanFilter::DatasetId(d.id.clone())))
                .ok()?,
        ),
        None => Box::new(store.scan(RecordKind::Evaluation, None).ok()?),
    };
    let mut best: Option<(&EvaluationRun, f64)> = None;
    for run in runs.filter_map(Record::as_evaluation) {
        if run.model_id != model || run.hardware_id != hardware.id {
            continue;
        }
        if dataset.is_some_and(|d| d.version != run.dataset_id.version) {
            continue;
        }
        let Some(mv) = run.metrics.iter().find(|m| m.name == metric && m.slice.is_none()) else {
            continue;
        };
        if best.is_none_or(|(b, _)| run.executed_at >= b.executed_at) {
            best = Some((run, mv.value));
        }
    }
    best.map(|(_, v)| v)
}

const METRICS: [&str; 3] = ["accuracy", "latency_ms", "memory_footprint_mb"];

/// Candidate models for one node on the given hardware profile. Only the
/// latest version of each model name is considered.
pub fn candidates(store: &StoreLog, node: &TaskNode, hardware: &str) -> Result<CandidateReport, GraphError> {
    let hw = find_hardware(store, hardware).ok_or_else(|| GraphError::UnknownHardware(hardware.to_owned()))?;
    let filter = node
        .filter
        .as_ref()
        .map(|f| mql::compile(&format!("FIND MODELS WHERE {f}")))
        .transpose()
        .map_err(|error| GraphError::Filter {
            node: node.id.clone(),
            error,
        })?;
    let ctx = EvalContext::new(store);
    let mut report = CandidateReport {
        node: node.id.clone(),
        candidates: Vec::new(),
        excluded: Vec::new(),
    };
    let mut exclude = |m: &ModelRecord, reason: String| {
        report.excluded.push(Exclusion {
            model_id: m.id.clone(),
            reason,
        })
    };
    let mut found = Vec::new();
    for m in store.latest_models() {
        if m.task != node.task {
            continue;
        }
        if let Some(t) = &node.input_type {
            if !m.input_types().any(|x| x == t) {
                exclude(m, format!("does not accept {t}"));
                continue;
            }
        }
        if let Some(t) = &node.output_type {
            if !m.output_types().any(|x| x == t) {
                exclude(m, format!("does not produce {t}"));
                continue;
            }
        }
        if let Some(q) = &filter {
            let record = Record::Model(m.clone());
            let verdict = mql::truth(q, &record, ctx);
            if !verdict.is_true() {
                exclude(m, format!("filter is {verdict:?}"));
                continue;
            }
        }
        let values: Vec<Option<f64>> = METRICS
            .iter()
            .map(|name| metric_on(store, &m.id, name, hw, node.eval_dataset.as_deref()))
            .collect();
        let missing: Vec<&str> = METRICS
            .iter()
            .zip(&values)
            .filter(|(_, v)| v.is_none())
            .map(|(n, _)| *n)
            .collect();
        if !missing.is_empty() {
            exclude(m, format!("no {} on {}", missing.join(", "), hw.name));
            continue;
        }
        found.push(Candidate {
            model_id: m.id.clone(),
            name: m.name.clone(),
            version: m.version.to_string(),
            accuracy: values[0].unwrap_or_default(),
            latency_ms: values[1].unwrap_or_default(),
            memory_mb: values[2].unwrap_or_default(),
            input_types: m.input_types().map(str::to_owned).collect(),
            output_types: m.output_types().map(str::to_owned).collect(),
        });
    }
    report.candidates = found;
    Ok(report)
}

fn convert<S: Scalar>(c: &Candidate<f64>) -> Option<Candidate<S>> {
    Some(Candidate {
        model_id: c.model_id.clone(),
        name: c.name.clone(),
        version: c.version.clone(),
        accuracy: S::from_f64(c.accuracy)?,
        latency_ms: S::from_f64(c.latency_ms)?,
        memory_mb: S::from_f64(c.memory_mb)?,
        input_types: c.input_types.clone(),
        output_types: c.output_types.clone(),
    })
}

/// Resolves candidates for every node and builds the search instance.
pub fn build_problem<S: Scalar>(
    store: &StoreLog,
    req: &CompositionRequest,
) -> Result<(Problem<S>, Vec<CandidateReport>), GraphError> {
    let index: HashMap<&str, usize> = req.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    if let Some(w) = req.weights.keys().find(|k| !index.contains_key(k.as_str())) {
        return Err(GraphError::UnknownWeight(w.clone()));
    }
    let mut edges = Vec::new();
    for (u, v) in &req.edges {
        let find = |x: &String| {
            index
                .get(x.as_str())
                .copied()
                .ok_or_else(|| GraphError::UnknownNode(x.clone()))
        };
        edges.push((find(u)?, find(v)?));
    }
    let mut reports = Vec::new();
    let mut nodes = Vec::new();
    for n in &req.nodes {
        let report = candidates(store, n, &req.hardware)?;
        let cands = report
            .candidates
            .iter()
            .map(convert::<S>)
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| ProblemError::Metric {
                node: n.id.clone(),
                model: String::new(),
            })?;
        let weight = if req.weights.is_empty() {
            1.0
        } else {
            req.weights.get(&n.id).copied().unwrap_or(0.0)
        };
        nodes.push((n.id.clone(), weight, cands));
        reports.push(report);
    }
    let budget = |v: f64, what| S::from_f64(v).ok_or(ProblemError::Budget(what));
    let problem = Problem::new(
        nodes,
        edges,
        budget(req.budgets.latency_ms, "latency")?,
        budget(req.budgets.memory_mb, "memory")?,
    )?;
    Ok((problem, reports))
}

/// Outcome of a composition request.
#[derive(Debug, Clone, Serialize)]
pub struct Composition {
    /// `OPTIMAL`, `HEURISTIC` or `INFEASIBLE`.
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<Plan<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infeasible: Option<Infeasible>,
    pub hardware: String,
    pub candidates: Vec<CandidateReport>,
}

pub fn compose(store: &StoreLog, req: &CompositionRequest) -> Result<Composition, GraphError> {
    let (problem, reports) = build_problem::<f64>(store, req)?;
    let hardware = find_hardware(store, &req.hardware)
        .map(|h| h.id.clone())
        .unwrap_or_default();
    Ok(match optimize(&problem) {
        Ok(plan) => Composition {
            status: match plan.mode {
                SearchMode::Heuristic => "HEURISTIC",
                _ => "OPTIMAL",
            },
            plan: Some(plan),
            infeasible: None,
            hardware,
            candidates: reports,
        },
        Err(inf) => Composition {
            status: "INFEASIBLE",
            plan: None,
            infeasible: Some(inf),
            hardware,
            candidates: reports,
        },
    })
}

/// Pareto frontier for the request's graph and hardware (budgets ignored).
pub fn compose_pareto(store: &StoreLog, req: &CompositionRequest) -> Result<Vec<Plan<f64>>, GraphError> {
    let (problem, _) = build_problem::<f64>(store, req)?;
    Ok(pareto(&problem)?)
}
