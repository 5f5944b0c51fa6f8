use std::cmp::Ordering;

use super::*;

pub const EXACT_MAX_NODES: usize = 12;
pub const EXACT_MAX_CANDIDATES: usize = 16;
const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, Copy)]
struct Checks {
    latency: bool,
    memory: bool,
    compat: bool,
}

const ALL_CHECKS: Checks = Checks {
    latency: true,
    memory: true,
    compat: true,
};

/// Total preference order on plans: higher score, then lower latency, then
/// lower memory, then model names and ids in node order.
pub(crate) fn plan_cmp<S: Scalar>(a: &Plan<S>, b: &Plan<S>) -> Ordering {
    let names = |p: &Plan<S>| p.assignment.iter().map(|x| x.name.clone()).collect::<Vec<_>>();
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.latency_ms.partial_cmp(&b.latency_ms).unwrap_or(Ordering::Equal))
        .then_with(|| a.memory_mb.partial_cmp(&b.memory_mb).unwrap_or(Ordering::Equal))
        .then_with(|| names(a).cmp(&names(b)))
        .then_with(|| a.model_ids().cmp(&b.model_ids()))
}

fn within_exact_limits<S>(p: &Problem<S>) -> bool {
    p.nodes.len() <= EXACT_MAX_NODES && p.nodes.iter().all(|n| n.candidates.len() <= EXACT_MAX_CANDIDATES)
}

fn assignments<S>(p: &Problem<S>) -> u128 {
    p.nodes
        .iter()
        .map(|n| n.candidates.len() as u128)
        .fold(1u128, |a, b| a.saturating_mul(b))
}

/// Best feasible plan.
///
/// Exact branch and bound within [`EXACT_MAX_NODES`] x
/// [`EXACT_MAX_CANDIDATES`]; above that a greedy pass (mode `HEURISTIC`).
/// On failure the binding constraints are found by relaxing one constraint
/// at a time.
pub fn optimize<S: Scalar>(p: &Problem<S>) -> Result<Plan<S>, Infeasible> {
    let empty: Vec<BindingConstraint> = p
        .nodes
        .iter()
        .filter(|n| n.candidates.is_empty())
        .map(|n| BindingConstraint::NoCandidates { node: n.id.clone() })
        .collect();
    let exact = within_exact_limits(p);
    let mode = if exact {
        SearchMode::Exact
    } else {
        SearchMode::Heuristic
    };
    if !empty.is_empty() {
        return Err(Infeasible { binding: empty, mode });
    }
    let run = |checks: Checks| {
        if exact {
            branch_and_bound(p, checks)
        } else {
            greedy(p, checks)
        }
    };
    if let Some(plan) = run(ALL_CHECKS) {
        return Ok(plan);
    }
    let mut binding = Vec::new();
    let relaxations = [
        (
            BindingConstraint::Latency,
            Checks {
                latency: false,
                ..ALL_CHECKS
            },
        ),
        (
            BindingConstraint::Memory,
            Checks {
                memory: false,
                ..ALL_CHECKS
            },
        ),
        (
            BindingConstraint::Compatibility,
            Checks {
                compat: false,
                ..ALL_CHECKS
            },
        ),
    ];
    for (c, checks) in relaxations.iter().cloned() {
        if run(checks).is_some() {
            binding.push(c);
        }
    }
    if binding.is_empty() {
        // no single relaxation helps: constraints bind jointly
        binding = relaxations.into_iter().map(|(c, _)| c).collect();
    }
    Err(Infeasible { binding, mode })
}

struct Bnb<'a, S> {
    p: &'a Problem<S>,
    checks: Checks,
    weighted_max: Vec<S>,
    min_lat: Vec<S>,
    min_mem: Vec<S>,
    cand_order: Vec<Vec<usize>>,
    choice: Vec<Option<usize>>,
    best: Option<Plan<S>>,
}

fn min_by<S: Scalar>(cands: &[Candidate<S>], f: impl Fn(&Candidate<S>) -> &S) -> S {
    cands
        .iter()
        .map(|c| f(c).clone())
        .reduce(|a, b| if b < a { b } else { a })
        .unwrap_or_else(S::zero)
}

fn branch_and_bound<S: Scalar>(p: &Problem<S>, checks: Checks) -> Option<Plan<S>> {
    let weighted_max = p
        .nodes
        .iter()
        .map(|n| {
            let best = n
                .candidates
                .iter()
                .map(|c| c.accuracy.clone())
                .reduce(max_of)
                .unwrap_or_else(S::zero);
            n.weight.clone() * best
        })
        .collect();
    let cand_order = p
        .nodes
        .iter()
        .map(|n| {
            let mut idx: Vec<usize> = (0..n.candidates.len()).collect();
            idx.sort_by(|&a, &b| {
                let (ca, cb) = (&n.candidates[a], &n.candidates[b]);
                cb.accuracy
                    .partial_cmp(&ca.accuracy)
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| ca.latency_ms.partial_cmp(&cb.latency_ms).unwrap_or(Ordering::Equal))
            });
            idx
        })
        .collect();
    let mut s = Bnb {
        p,
        checks,
        weighted_max,
        min_lat: p
            .nodes
            .iter()
            .map(|n| min_by(&n.candidates, |c| &c.latency_ms))
            .collect(),
        min_mem: p
            .nodes
            .iter()
            .map(|n| min_by(&n.candidates, |c| &c.memory_mb))
            .collect(),
        cand_order,
        choice: vec![None; p.nodes.len()],
        best: None,
    };
    s.dfs(0, S::zero(), S::zero());
    s.best
}

impl<S: Scalar> Bnb<'_, S> {
    /// Longest-path latency with unassigned nodes at their minimum.
    fn latency_lower_bound(&self) -> S {
        let p = self.p;
        let mut finish: Vec<S> = vec![S::zero(); p.nodes.len()];
        let mut total = S::zero();
        for &i in &p.order {
            let lat = match self.choice[i] {
                Some(k) => p.nodes[i].candidates[k].latency_ms.clone(),
                None => self.min_lat[i].clone(),
            };
            let start = p.preds[i].iter().fold(S::zero(), |m, &q| max_of(m, finish[q].clone()));
            finish[i] = start + lat;
            total = max_of(total, finish[i].clone());
        }
        total
    }

    fn dfs(&mut self, depth: usize, score: S, mem: S) {
        let p = self.p;
        if depth == p.order.len() {
            let choice: Vec<usize> = self.choice.iter().map(|c| c.expect("all assigned")).collect();
            let plan = p.plan(&choice, SearchMode::Exact);
            if (self.checks.latency && plan.latency_ms > p.latency_budget)
                || (self.checks.memory && plan.memory_mb > p.memory_budget)
            {
                return;
            }
            if self.best.as_ref().is_none_or(|b| plan_cmp(&plan, b) == Ordering::Less) {
                self.best = Some(plan);
            }
            return;
        }
        let node = p.order[depth];
        let rest = &p.order[depth + 1..];
        for pos in 0..self.cand_order[node].len() {
            let k = self.cand_order[node][pos];
            let c = &p.nodes[node].candidates[k];
            if self.checks.compat
                && p.preds[node].iter().any(|&u| {
                    let cu = &p.nodes[u].candidates[self.choice[u].expect("predecessor assigned")];
                    !compatible(cu, c)
                })
            {
                continue;
            }
            let new_score = score.clone() + p.nodes[node].weight.clone() * c.accuracy.clone();
            let new_mem = mem.clone() + c.memory_mb.clone();
            if self.checks.memory {
                let lb = rest.iter().fold(new_mem.clone(), |a, &i| a + self.min_mem[i].clone());
                if lb > p.memory_budget {
                    continue;
                }
            }
            if let Some(best) = &self.best {
                let ub = rest
                    .iter()
                    .fold(new_score.clone(), |a, &i| a + self.weighted_max[i].clone());
                if ub < best.score {
                    continue;
                }
            }
            self.choice[node] = Some(k);
            if !self.checks.latency || self.latency_lower_bound() <= p.latency_budget {
                self.dfs(depth + 1, new_score, new_mem);
            }
            self.choice[node] = None;
        }
    }
}

/// Greedy fallback: per node in topological order, the compatible
/// candidate with the best accuracy per millisecond that keeps the rest of
/// the pipeline within budget at its cheapest.
fn greedy<S: Scalar>(p: &Problem<S>, checks: Checks) -> Option<Plan<S>> {
    let mut s = Bnb {
        p,
        checks,
        weighted_max: Vec::new(),
        min_lat: p
            .nodes
            .iter()
            .map(|n| min_by(&n.candidates, |c| &c.latency_ms))
            .collect(),
        min_mem: p
            .nodes
            .iter()
            .map(|n| min_by(&n.candidates, |c| &c.memory_mb))
            .collect(),
        cand_order: Vec::new(),
        choice: vec![None; p.nodes.len()],
        best: None,
    };
    let mut mem = S::zero();
    for (depth, &node) in p.order.iter().enumerate() {
        let rest = &p.order[depth + 1..];
        let mut pick: Option<usize> = None;
        for (k, c) in p.nodes[node].candidates.iter().enumerate() {
            if checks.compat
                && p.preds[node]
                    .iter()
                    .any(|&u| !compatible(&p.nodes[u].candidates[s.choice[u].expect("assigned")], c))
            {
                continue;
            }
            let new_mem = mem.clone() + c.memory_mb.clone();
            if checks.memory && rest.iter().fold(new_mem, |a, &i| a + s.min_mem[i].clone()) > p.memory_budget {
                continue;
            }
            s.choice[node] = Some(k);
            let lat_ok = !checks.latency || s.latency_lower_bound() <= p.latency_budget;
            s.choice[node] = None;
            if !lat_ok {
                continue;
            }
            let better = match pick {
                None => true,
                Some(j) => {
                    let b = &p.nodes[node].candidates[j];
                    // acc_c / lat_c > acc_b / lat_b, cross-multiplied
                    let lhs = c.accuracy.clone() * b.latency_ms.clone();
                    let rhs = b.accuracy.clone() * c.latency_ms.clone();
                    lhs > rhs
                        || (lhs == rhs && (c.accuracy > b.accuracy || (c.accuracy == b.accuracy && c.name < b.name)))
                }
            };
            if better {
                pick = Some(k);
            }
        }
        let k = pick?;
        mem = mem + p.nodes[node].candidates[k].memory_mb.clone();
        s.choice[node] = Some(k);
    }
    let choice: Vec<usize> = s.choice.iter().map(|c| c.expect("assigned")).collect();
    let plan = p.plan(&choice, SearchMode::Heuristic);
    let ok = (!checks.latency || plan.latency_ms <= p.latency_budget)
        && (!checks.memory || plan.memory_mb <= p.memory_budget);
    ok.then_some(plan)
}

fn for_each_assignment<S>(p: &Problem<S>, mut f: impl FnMut(&[usize])) {
    if p.nodes.iter().any(|n| n.candidates.is_empty()) {
        return;
    }
    let mut choice = vec![0usize; p.nodes.len()];
    loop {
        f(&choice);
        let mut i = 0;
        loop {
            if i == choice.len() {
                return;
            }
            choice[i] += 1;
            if choice[i] < p.nodes[i].candidates.len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Exhaustive search with the same preference order as [`optimize`].
/// `Ok(None)` means infeasible.
pub fn brute_force<S: Scalar>(p: &Problem<S>) -> Result<Option<Plan<S>>, ProblemError> {
    let n = assignments(p);
    if n > BRUTE_FORCE_LIMIT {
        return Err(ProblemError::TooLarge(n));
    }
    let mut best: Option<Plan<S>> = None;
    for_each_assignment(p, |choice| {
        let plan = p.plan(choice, SearchMode::BruteForce);
        if plan.feasible && best.as_ref().is_none_or(|b| plan_cmp(&plan, b) == Ordering::Less) {
            best = Some(plan);
        }
    });
    Ok(best)
}

pub(crate) fn dominates<S: Scalar>(a: &Aggregate<S>, b: &Aggregate<S>) -> bool {
    a.score >= b.score
        && a.latency_ms <= b.latency_ms
        && a.memory_mb <= b.memory_mb
        && (a.score > b.score || a.latency_ms < b.latency_ms || a.memory_mb < b.memory_mb)
}

fn agg_of<S: Clone>(p: &Plan<S>) -> Aggregate<S> {
    Aggregate {
        score: p.score.clone(),
        latency_ms: p.latency_ms.clone(),
        memory_mb: p.memory_mb.clone(),
    }
}

/// Compatible plans not dominated in (score, latency, memory), ignoring the
/// budgets. Sorted best-first by the [`optimize`] preference order.
pub fn pareto<S: Scalar>(p: &Problem<S>) -> Result<Vec<Plan<S>>, ProblemError> {
    if !within_exact_limits(p) {
        return Err(ProblemError::TooLarge(assignments(p)));
    }
    let mut s = Bnb {
        p,
        checks: Checks {
            latency: false,
            memory: false,
            compat: true,
        },
        weighted_max: p
            .nodes
            .iter()
            .map(|n| {
                n.weight.clone()
                    * n.candidates
                        .iter()
                        .map(|c| c.accuracy.clone())
                        .reduce(max_of)
                        .unwrap_or_else(S::zero)
            })
            .collect(),
        min_lat: p
            .nodes
            .iter()
            .map(|n| min_by(&n.candidates, |c| &c.latency_ms))
            .collect(),
        min_mem: p
            .nodes
            .iter()
            .map(|n| min_by(&n.candidates, |c| &c.memory_mb))
            .collect(),
        cand_order: Vec::new(),
        choice: vec![None; p.nodes.len()],
        best: None,
    };
    let mut frontier: Vec<Plan<S>> = Vec::new();
    if p.nodes.iter().all(|n| !n.candidates.is_empty()) {
        pareto_dfs(&mut s, 0, S::zero(), S::zero(), &mut frontier);
    }
    frontier.sort_by(plan_cmp);
    Ok(frontier)
}

fn pareto_dfs<S: Scalar>(s: &mut Bnb<'_, S>, depth: usize, score: S, mem: S, frontier: &mut Vec<Plan<S>>) {
    let p = s.p;
    if depth == p.order.len() {
        let choice: Vec<usize> = s.choice.iter().map(|c| c.expect("assigned")).collect();
        let plan = p.plan(&choice, SearchMode::Exact);
        let agg = agg_of(&plan);
        if frontier.iter().any(|f| dominates(&agg_of(f), &agg)) {
            return;
        }
        frontier.retain(|f| !dominates(&agg, &agg_of(f)));
        frontier.push(plan);
        return;
    }
    let node = p.order[depth];
    let rest = &p.order[depth + 1..];
    for k in 0..p.nodes[node].candidates.len() {
        let c = &p.nodes[node].candidates[k];
        if p.preds[node]
            .iter()
            .any(|&u| !compatible(&p.nodes[u].candidates[s.choice[u].expect("assigned")], c))
        {
            continue;
        }
        let new_score = score.clone() + p.nodes[node].weight.clone() * c.accuracy.clone();
        let new_mem = mem.clone() + c.memory_mb.clone();
        s.choice[node] = Some(k);
        let bound = Aggregate {
            score: rest
                .iter()
                .fold(new_score.clone(), |a, &i| a + s.weighted_max[i].clone()),
            latency_ms: s.latency_lower_bound(),
            memory_mb: rest.iter().fold(new_mem.clone(), |a, &i| a + s.min_mem[i].clone()),
        };
        if !frontier.iter().any(|f| dominates(&agg_of(f), &bound)) {
            pareto_dfs(s, depth + 1, new_score, new_mem, frontier);
        }
        s.choice[node] = None;
    }
}
