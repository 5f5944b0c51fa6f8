use num_rational::BigRational;
use proptest::prelude::*;

use super::*;
use crate::seed::load_seed;
use crate::store::StoreLog;

fn cand(id: &str, acc: f64, lat: f64, mem: f64, ins: &[&str], outs: &[&str]) -> Candidate<f64> {
    Candidate {
        model_id: id.into(),
        name: id.into(),
        version: "1".into(),
        accuracy: acc,
        latency_ms: lat,
        memory_mb: mem,
        input_types: ins.iter().map(|s| s.to_string()).collect(),
        output_types: outs.iter().map(|s| s.to_string()).collect(),
    }
}

fn single(cands: Vec<Candidate<f64>>, lat: f64, mem: f64) -> Problem<f64> {
    Problem::new(vec![("n".into(), 1.0, cands)], vec![], lat, mem).unwrap()
}

#[test]
fn single_node_single_candidate() {
    let p = single(vec![cand("a", 0.8, 10.0, 10.0, &["x"], &["y"])], 20.0, 20.0);
    let plan = optimize(&p).unwrap();
    assert_eq!(plan.model_ids(), ["a"]);
    assert_eq!(plan.score, 0.8);
    assert_eq!(plan.mode, SearchMode::Exact);
}

#[test]
fn latency_below_every_candidate_is_infeasible_on_latency() {
    let p = single(
        vec![
            cand("a", 0.8, 10.0, 10.0, &[], &[]),
            cand("b", 0.7, 12.0, 1.0, &[], &[]),
        ],
        5.0,
        100.0,
    );
    let err = optimize(&p).unwrap_err();
    assert_eq!(err.binding, vec![BindingConstraint::Latency]);
}

#[test]
fn empty_candidate_list_names_the_node() {
    let p = single(vec![], 5.0, 5.0);
    let err = optimize(&p).unwrap_err();
    assert_eq!(err.binding, vec![BindingConstraint::NoCandidates { node: "n".into() }]);
}

#[test]
fn cycles_and_bad_budgets_are_rejected() {
    let nodes = || vec![("a".to_string(), 1.0, vec![]), ("b".to_string(), 1.0, vec![])];
    assert_eq!(
        Problem::<f64>::new(nodes(), vec![(0, 1), (1, 0)], 1.0, 1.0).unwrap_err(),
        ProblemError::Cycle("a".into())
    );
    assert_eq!(
        Problem::<f64>::new(nodes(), vec![], 0.0, 1.0).unwrap_err(),
        ProblemError::Budget("latency")
    );
}

#[test]
fn compatibility_violation_names_the_edge() {
    let p = Problem::new(
        vec![
            (
                "tc".into(),
                1.0,
                vec![cand(
                    "sentiment",
                    0.9,
                    1.0,
                    1.0,
                    &["token-sequence"],
                    &["sentiment-label"],
                )],
            ),
            (
                "pos".into(),
                1.0,
                vec![cand("tagger", 0.9, 1.0, 1.0, &["token-sequence"], &["pos-tags"])],
            ),
        ],
        vec![(0, 1)],
        100.0,
        100.0,
    )
    .unwrap();
    let v = check_compatibility(&p, &[0, 0]);
    assert_eq!(v.len(), 1);
    assert_eq!((v[0].from.as_str(), v[0].to.as_str()), ("tc", "pos"));
    assert_eq!(
        optimize(&p).unwrap_err().binding,
        vec![BindingConstraint::Compatibility]
    );
}

#[test]
fn dominated_candidate_is_not_on_the_frontier() {
    let p = single(
        vec![cand("a", 0.9, 5.0, 5.0, &[], &[]), cand("b", 0.8, 6.0, 6.0, &[], &[])],
        1.0,
        1.0,
    );
    let f = pareto(&p).unwrap();
    assert_eq!(f.len(), 1);
    assert_eq!(f[0].model_ids(), ["a"]);
}

#[test]
fn parallel_branches_overlap_in_latency() {
    // diamond a -> {b, c} -> d
    let node = |id: &str, lat: f64| (id.to_string(), 1.0, vec![cand(id, 0.5, lat, 1.0, &["t"], &["t"])]);
    let p = Problem::new(
        vec![node("a", 1.0), node("b", 10.0), node("c", 3.0), node("d", 2.0)],
        vec![(0, 1), (0, 2), (1, 3), (2, 3)],
        100.0,
        100.0,
    )
    .unwrap();
    let agg = p.aggregate(&[0, 0, 0, 0]);
    assert_eq!(agg.latency_ms, 13.0);
    assert_eq!(agg.memory_mb, 4.0);
}

fn scenario() -> CompositionRequest {
    serde_json::from_value(serde_json::json!({
        "nodes": [
            {"id": "tc", "task": "text-classification", "input_type": "token-sequence", "eval_dataset": "tweet-corpus"},
            {"id": "pos", "task": "pos-tagging", "input_type": "token-sequence", "eval_dataset": "tweet-corpus"}
        ],
        "edges": [["tc", "pos"]],
        "budgets": {"latency_ms": 80, "memory_mb": 600},
        "hardware": "pixel-7"
    }))
    .unwrap()
}

fn seeded() -> (tempfile::TempDir, StoreLog) {
    let dir = tempfile::tempdir().unwrap();
    let mut store = StoreLog::open(dir.path()).unwrap();
    store.set_sync(false);
    load_seed(&mut store).unwrap();
    (dir, store)
}

#[test]
fn mobile_pipeline_scenario() {
    let (_dir, store) = seeded();
    let out = compose(&store, &scenario()).unwrap();
    let plan = out.plan.unwrap();
    assert_eq!(plan.model_ids(), ["m-mobilebert-sentiment", "m-pos-bilstm"]);
    assert!((plan.score - 0.905).abs() < 1e-12);
    assert_eq!(plan.latency_ms, 70.0);
    let pos = &out.candidates[1];
    assert!(pos.excluded.iter().any(|e| e.model_id == "m-pos-flair"));
    let (exact, _) = build_problem::<BigRational>(&store, &scenario()).unwrap();
    let bf = brute_force(&exact).unwrap().unwrap();
    assert_eq!(bf.model_ids(), plan.model_ids());
}

#[test]
fn pos_candidates_on_edge_hardware() {
    let (_dir, store) = seeded();
    let node = TaskNode {
        id: "pos".into(),
        task: "pos-tagging".into(),
        input_type: None,
        output_type: None,
        filter: None,
        eval_dataset: None,
    };
    let report = candidates(&store, &node, "jetson-nano").unwrap();
    let ids: Vec<&str> = report.candidates.iter().map(|c| c.model_id.as_str()).collect();
    assert_eq!(ids, ["m-pos-bilstm", "m-pos-spacy-sm"]);
    let filtered = candidates(
        &store,
        &TaskNode {
            filter: Some(r#"architecture.family = "rnn""#.into()),
            ..node.clone()
        },
        "jetson-nano",
    )
    .unwrap();
    assert_eq!(filtered.candidates.len(), 1);
    let none = candidates(
        &store,
        &TaskNode {
            task: "speech".into(),
            ..node
        },
        "jetson-nano",
    )
    .unwrap();
    assert!(none.candidates.is_empty());
}

type RawInstance = (Vec<(String, f64, Vec<Candidate<f64>>)>, Vec<(usize, usize)>, f64, f64);

fn small_instance() -> impl Strategy<Value = RawInstance> {
    let types = prop::sample::subsequence(vec!["a", "b", "c"], 1..=2);
    let candidate = (1u32..100, 1u32..50, 1u32..50, types.clone(), types)
        .prop_map(|(acc, lat, mem, ins, outs)| (acc as f64 / 100.0, lat as f64, mem as f64, ins, outs));
    (1usize..=4).prop_flat_map(move |n| {
        (
            prop::collection::vec((0u32..4, prop::collection::vec(candidate.clone(), 1..=4)), n),
            prop::collection::vec((0..n, 0..n), 0..=n),
            20u32..150,
            20u32..150,
        )
            .prop_map(|(nodes, raw_edges, lat, mem)| {
                let nodes = nodes
                    .into_iter()
                    .enumerate()
                    .map(|(i, (w, cs))| {
                        let cands = cs
                            .into_iter()
                            .enumerate()
                            .map(|(k, (acc, l, m, ins, outs))| cand(&format!("n{i}c{k}"), acc, l, m, &ins, &outs))
                            .collect();
                        (format!("n{i}"), w as f64, cands)
                    })
                    .collect();
                // forward edges only keep the graph acyclic
                let mut edges: Vec<(usize, usize)> = raw_edges.into_iter().filter(|(u, v)| u < v).collect();
                edges.sort();
                edges.dedup();
                (nodes, edges, lat as f64, mem as f64)
            })
    })
}

proptest! {
    #[test]
    fn branch_and_bound_matches_brute_force((nodes, edges, lat, mem) in small_instance()) {
        let p = Problem::new(nodes, edges, lat, mem).unwrap();
        let bnb = optimize(&p).ok();
        let bf = brute_force(&p).unwrap();
        prop_assert_eq!(bnb.as_ref().map(Plan::model_ids), bf.as_ref().map(Plan::model_ids));
        if let Some(plan) = bnb {
            prop_assert!(plan.feasible);
            prop_assert!(plan.latency_ms <= lat && plan.memory_mb <= mem);
            prop_assert!(check_compatibility(&p, &plan.choice()).is_empty());
            // enlarging a budget never lowers the optimum
            let looser = optimize(&p.with_budgets(lat * 2.0, mem * 2.0)).unwrap();
            prop_assert!(looser.score >= plan.score);
        }
    }

    #[test]
    fn pareto_matches_enumeration((nodes, edges, lat, mem) in small_instance()) {
        let p = Problem::new(nodes, edges, lat, mem).unwrap();
        let frontier = pareto(&p).unwrap();
        let mut all = Vec::new();
        search_all(&p, &mut all);
        let mut expected: Vec<Vec<usize>> = all
            .iter()
            .filter(|a| !all.iter().any(|b| search::dominates(&p.aggregate(b), &p.aggregate(a))))
            .cloned()
            .collect();
        let mut got: Vec<Vec<usize>> = frontier.iter().map(Plan::choice).collect();
        expected.sort();
        got.sort();
        prop_assert_eq!(got, expected);
    }
}

fn search_all(p: &Problem<f64>, out: &mut Vec<Vec<usize>>) {
    let n = p.nodes().len();
    let mut choice = vec![0usize; n];
    loop {
        if check_compatibility(p, &choice).is_empty() {
            out.push(choice.clone());
        }
        let mut i = 0;
        while i < n {
            choice[i] += 1;
            if choice[i] < p.nodes()[i].candidates.len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
        if i == n {
            return;
        }
    }
}
