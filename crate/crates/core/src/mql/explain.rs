use std::fmt;

use serde::Serialize;

use super::analyze::{TExpr, TOperand, TypedQuery};
use super::ast::{Direction, MetricCall, Target};
use crate::store::ScanFilter;

/// Human-readable evaluation plan, one line per step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Plan {
    pub lines: Vec<String>,
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.lines.join("\n"))
    }
}

fn collect_metrics<'a>(e: &'a TExpr, out: &mut Vec<&'a MetricCall>) {
    let mut push = |o: &'a TOperand| {
        if let TOperand::Metric(m) = o {
            if !out.contains(&m) {
                out.push(m);
            }
        }
    };
    match e {
        TExpr::And(a, b) | TExpr::Or(a, b) => {
            collect_metrics(a, out);
            collect_metrics(b, out);
        }
        TExpr::Not(a) | TExpr::Quantified { body: a, .. } => collect_metrics(a, out),
        TExpr::Compare { lhs, rhs, .. } => {
            push(lhs);
            push(rhs);
        }
        TExpr::In { operand, .. } | TExpr::Contains { operand, .. } => push(operand),
    }
}

pub fn explain(q: &TypedQuery) -> Plan {
    let mut lines = vec![format!("FIND {}", q.target.as_str())];
    let kind = match q.target {
        Target::Models => "ModelRecord",
        Target::Datasets => "DatasetRecord",
    };
    match &q.index {
        Some(ix) => {
            let (name, value) = match &ix.filter {
                ScanFilter::Name(v) => ("by_name", v),
                ScanFilter::Task(v) => ("by_task", v),
                ScanFilter::DatasetId(v) => ("by_dataset", v),
            };
            lines.push(format!("  scan {kind} via index {name} ({} = {value:?})", ix.path));
        }
        None => lines.push(format!("  scan {kind} (full, insertion order)")),
    }
    if let Some(p) = &q.source.predicate {
        lines.push(format!("  filter {p} (keep TRUE; UNKNOWN and FALSE excluded)"));
    }
    let mut metrics = Vec::new();
    if let Some(p) = &q.predicate {
        collect_metrics(p, &mut metrics);
    }
    if let Some((TOperand::Metric(m), _)) = &q.order_by {
        if !metrics.contains(&m) {
            metrics.push(m);
        }
    }
    for m in metrics {
        lines.push(format!("  resolve {m}"));
        lines.push(format!("    runs on latest version of dataset {:?}", m.dataset));
        match &m.hardware {
            Some(h) => lines.push(format!("    hardware name or device_class = {h:?}")),
            None => lines.push("    any hardware".into()),
        }
        match &m.slice {
            Some(s) => lines.push(format!("    slice = {s:?}")),
            None => lines.push("    unsliced values only".into()),
        }
        lines.push("    most recent executed_at wins; no run is UNKNOWN".into());
    }
    if let Some(o) = &q.source.order_by {
        let dir = match o.direction {
            Direction::Asc => "ASC",
            Direction::Desc => "DESC",
        };
        lines.push(format!(
            "  order by {} {dir}, UNKNOWN last, ties by (name, version)",
            o.key
        ));
    }
    if let Some(n) = q.limit {
        lines.push(format!("  limit {n}"));
    }
    Plan { lines }
}
