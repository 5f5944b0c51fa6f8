//! Pipeline composition: pick one model per task node so that the weighted
//! accuracy is maximal while end-to-end latency and total memory stay within
//! budget.
//!
//! The search core works on a pure [`Problem`] and is generic over the
//! scalar type, so the same code runs on `f64` and on exact rationals.

mod search;
mod zoo;

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive, Zero};
use serde::Serialize;

pub use search::{brute_force, optimize, pareto, EXACT_MAX_CANDIDATES, EXACT_MAX_NODES};
pub use zoo::{
    build_problem, candidates, compose, compose_pareto, Budgets, CandidateReport, Composition, CompositionRequest,
    Exclusion, GraphError, TaskNode,
};

/// Numbers the composer can compute with.
pub trait Scalar: Num + Clone + PartialOrd + fmt::Debug {
    /// Exact conversion of a finite float.
    fn from_f64(v: f64) -> Option<Self>;
    fn from_ratio(r: &BigRational) -> Self;
    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Option<Self> {
        v.is_finite().then_some(v)
    }

    fn from_ratio(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn from_f64(v: f64) -> Option<Self> {
        BigRational::from_float(v)
    }

    fn from_ratio(r: &BigRational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

fn max_of<S: Scalar>(a: S, b: S) -> S {
    if b > a {
        b
    } else {
        a
    }
}

/// One selectable model for a node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate<S> {
    pub model_id: String,
    pub name: String,
    pub version: String,
    pub accuracy: S,
    pub latency_ms: S,
    pub memory_mb: S,
    pub input_types: BTreeSet<String>,
    pub output_types: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec<S> {
    pub id: String,
    /// Normalized objective weight.
    pub weight: S,
    pub candidates: Vec<Candidate<S>>,
}

/// A composition instance. Build it with [`Problem::new`], which checks
/// the graph and normalizes the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem<S> {
    nodes: Vec<NodeSpec<S>>,
    edges: Vec<(usize, usize)>,
    latency_budget: S,
    memory_budget: S,
    order: Vec<usize>,
    preds: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProblemError {
    #[error("task graph has no nodes")]
    Empty,
    #[error("duplicate node id {0:?}")]
    DuplicateNode(String),
    #[error("edge refers to unknown node index {0}")]
    UnknownNode(usize),
    #[error("task graph has a cycle through node {0:?}")]
    Cycle(String),
    #[error("{0} budget must be positive and finite")]
    Budget(&'static str),
    #[error("weight of node {0:?} must be finite and non-negative")]
    Weight(String),
    #[error("candidate {model} of node {node:?} has a non-finite or negative metric")]
    Metric { node: String, model: String },
    #[error("instance too large for exhaustive search ({0} assignments)")]
    TooLarge(u128),
}

/// Normalizes raw weights exactly, so that scaling every weight by the same
/// constant yields the same normalized weights. All-zero weights become
/// uniform.
pub fn normalize_weights(raw: &[f64]) -> Option<Vec<BigRational>> {
    let exact: Vec<BigRational> = raw
        .iter()
        .map(|&w| {
            (w.is_finite() && w >= 0.0)
                .then(|| BigRational::from_float(w))
                .flatten()
        })
        .collect::<Option<_>>()?;
    let total = exact.iter().fold(BigRational::zero(), |a, b| a + b);
    if total.is_zero() {
        let n = BigRational::from_integer(BigInt::from(raw.len().max(1)));
        return Some(raw.iter().map(|_| BigRational::from_integer(1.into()) / &n).collect());
    }
    Some(exact.into_iter().map(|w| w / &total).collect())
}

impl<S: Scalar> Problem<S> {
    /// `weights[i]` is the raw weight of node `i`; they are normalized here.
    pub fn new(
        nodes: Vec<(String, f64, Vec<Candidate<S>>)>,
        edges: Vec<(usize, usize)>,
        latency_budget: S,
        memory_budget: S,
    ) -> Result<Self, ProblemError> {
        if nodes.is_empty() {
            return Err(ProblemError::Empty);
        }
        let mut ids = BTreeSet::new();
        for (id, w, _) in &nodes {
            if !ids.insert(id.as_str()) {
                return Err(ProblemError::DuplicateNode(id.clone()));
            }
            if !(w.is_finite() && *w >= 0.0) {
                return Err(ProblemError::Weight(id.clone()));
            }
        }
        let zero = S::zero();
        let finite = |v: &S| v.to_f64().is_finite();
        if !(latency_budget > zero && finite(&latency_budget)) {
            return Err(ProblemError::Budget("latency"));
        }
        if !(memory_budget > zero && finite(&memory_budget)) {
            return Err(ProblemError::Budget("memory"));
        }
        for (id, _, cands) in &nodes {
            for c in cands {
                let ok = [&c.accuracy, &c.latency_ms, &c.memory_mb]
                    .into_iter()
                    .all(|v| finite(v) && *v >= zero);
                if !ok {
                    return Err(ProblemError::Metric {
                        node: id.clone(),
                        model: c.model_id.clone(),
                    });
                }
            }
        }
        let n = nodes.len();
        let mut preds = vec![Vec::new(); n];
        for &(u, v) in &edges {
            for x in [u, v] {
                if x >= n {
                    return Err(ProblemError::UnknownNode(x));
                }
            }
            preds[v].push(u);
        }
        let order = topo_order(n, &edges).map_err(|i| ProblemError::Cycle(nodes[i].0.clone()))?;
        let raw: Vec<f64> = nodes.iter().map(|(_, w, _)| *w).collect();
        let weights = normalize_weights(&raw).expect("weights checked above");
        let nodes = nodes
            .into_iter()
            .zip(weights)
            .map(|((id, _, candidates), w)| NodeSpec {
                id,
                weight: S::from_ratio(&w),
                candidates,
            })
            .collect();
        Ok(Problem {
            nodes,
            edges,
            latency_budget,
            memory_budget,
            order,
            preds,
        })
    }

    pub fn nodes(&self) -> &[NodeSpec<S>] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn latency_budget(&self) -> &S {
        &self.latency_budget
    }

    pub fn memory_budget(&self) -> &S {
        &self.memory_budget
    }

    /// Topological order (Kahn's algorithm, smallest index first).
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn predecessors(&self, node: usize) -> &[usize] {
        &self.preds[node]
    }

    /// Same instance with different budgets.
    pub fn with_budgets(&self, latency: S, memory: S) -> Self {
        Problem {
            latency_budget: latency,
            memory_budget: memory,
            ..self.clone()
        }
    }

    /// Aggregate of a full assignment (`choice[i]` indexes node i's
    /// candidates). Sums run in topological order.
    pub fn aggregate(&self, choice: &[usize]) -> Aggregate<S> {
        let mut score = S::zero();
        let mut memory = S::zero();
        let mut finish: Vec<S> = vec![S::zero(); self.nodes.len()];
        let mut latency = S::zero();
        for &i in &self.order {
            let c = &self.nodes[i].candidates[choice[i]];
            score = score + self.nodes[i].weight.clone() * c.accuracy.clone();
            memory = memory + c.memory_mb.clone();
            let start = self.preds[i]
                .iter()
                .fold(S::zero(), |m, &p| max_of(m, finish[p].clone()));
            finish[i] = start + c.latency_ms.clone();
            latency = max_of(latency, finish[i].clone());
        }
        Aggregate {
            score,
            latency_ms: latency,
            memory_mb: memory,
        }
    }

    /// Edges whose endpoint models share no semantic type.
    pub fn incompatible_edges(&self, choice: &[usize]) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .copied()
            .filter(|&(u, v)| {
                !compatible(
                    &self.nodes[u].candidates[choice[u]],
                    &self.nodes[v].candidates[choice[v]],
                )
            })
            .collect()
    }

    /// Builds the plan record for a full assignment.
    pub fn plan(&self, choice: &[usize], mode: SearchMode) -> Plan<S> {
        let agg = self.aggregate(choice);
        let assignment = self
            .nodes
            .iter()
            .zip(choice)
            .map(|(n, &k)| {
                let c = &n.candidates[k];
                Assignment {
                    node: n.id.clone(),
                    model_id: c.model_id.clone(),
                    name: c.name.clone(),
                    version: c.version.clone(),
                    candidate: k,
                }
            })
            .collect();
        let feasible = agg.latency_ms <= self.latency_budget
            && agg.memory_mb <= self.memory_budget
            && self.incompatible_edges(choice).is_empty();
        Plan {
            assignment,
            score: agg.score,
            latency_ms: agg.latency_ms,
            memory_mb: agg.memory_mb,
            feasible,
            mode,
        }
    }
}

/// An edge u→v is compatible when some output type of u is an input type
/// of v.
pub fn compatible<S>(from: &Candidate<S>, to: &Candidate<S>) -> bool {
    from.output_types.iter().any(|t| to.input_types.contains(t))
}

fn topo_order(n: usize, edges: &[(usize, usize)]) -> Result<Vec<usize>, usize> {
    let mut indeg = vec![0usize; n];
    let mut succ = vec![Vec::new(); n];
    for &(u, v) in edges {
        indeg[v] += 1;
        succ[u].push(v);
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop_first() {
        order.push(i);
        for &v in &succ[i] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                ready.insert(v);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).find(|&i| indeg[i] > 0).unwrap_or(0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate<S> {
    pub score: S,
    pub latency_ms: S,
    pub memory_mb: S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SearchMode {
    /// Branch and bound; the plan is proven optimal.
    Exact,
    /// Exhaustive enumeration.
    BruteForce,
    /// Greedy fallback for instances above the exact-mode limits.
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Assignment {
    pub node: String,
    pub model_id: String,
    pub name: String,
    pub version: String,
    /// Index into the node's candidate list.
    pub candidate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plan<S> {
    pub assignment: Vec<Assignment>,
    pub score: S,
    pub latency_ms: S,
    pub memory_mb: S,
    pub feasible: bool,
    pub mode: SearchMode,
}

impl<S> Plan<S> {
    pub fn choice(&self) -> Vec<usize> {
        self.assignment.iter().map(|a| a.candidate).collect()
    }

    pub fn model_ids(&self) -> Vec<&str> {
        self.assignment.iter().map(|a| a.model_id.as_str()).collect()
    }
}

/// A constraint that makes an instance infeasible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "constraint", rename_all = "snake_case")]
pub enum BindingConstraint {
    NoCandidates { node: String },
    Latency,
    Memory,
    Compatibility,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("no feasible plan; binding: {}", describe(binding))]
pub struct Infeasible {
    pub binding: Vec<BindingConstraint>,
    pub mode: SearchMode,
}

fn describe(b: &[BindingConstraint]) -> String {
    b.iter()
        .map(|c| match c {
            BindingConstraint::NoCandidates { node } => format!("no candidates for node {node}"),
            BindingConstraint::Latency => "latency budget".into(),
            BindingConstraint::Memory => "memory budget".into(),
            BindingConstraint::Compatibility => "type compatibility".into(),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Compatibility violation on one edge of a concrete assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeViolation {
    pub from: String,
    pub to: String,
    pub from_model: String,
    pub to_model: String,
    pub produced: Vec<String>,
    pub expected: Vec<String>,
}

/// Checks every edge of a concrete assignment.
pub fn check_compatibility<S: Scalar>(problem: &Problem<S>, choice: &[usize]) -> Vec<EdgeViolation> {
    problem
        .incompatible_edges(choice)
        .into_iter()
        .map(|(u, v)| {
            let (a, b) = (&problem.nodes[u], &problem.nodes[v]);
            let (ca, cb) = (&a.candidates[choice[u]], &b.candidates[choice[v]]);
            EdgeViolation {
                from: a.id.clone(),
                to: b.id.clone(),
                from_model: ca.model_id.clone(),
                to_model: cb.model_id.clone(),
                produced: ca.output_types.iter().cloned().collect(),
                expected: cb.input_types.iter().cloned().collect(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests;
