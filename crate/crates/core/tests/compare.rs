use chrono::{TimeZone, Utc};
use mz_core::compare::{compare, CompareError};
use mz_core::metamodel::{DatasetRef, EvaluationRun, MetricValue, Provenance, Record};
use mz_core::seed::load_seed;
use mz_core::StoreLog;

fn seeded() -> (tempfile::TempDir, StoreLog) {
    let dir = tempfile::tempdir().unwrap();
    let mut store = StoreLog::open(dir.path()).unwrap();
    store.set_sync(false);
    load_seed(&mut store).unwrap();
    (dir, store)
}

#[test]
fn two_pos_taggers_match_hand_built_matrix() {
    let (_dir, store) = seeded();
    let m = compare(&store, &["m-pos-bilstm", "m-pos-spacy-sm"]).unwrap();
    let got: Vec<(String, String, Vec<Option<f64>>)> = m
        .rows
        .iter()
        .map(|r| (r.key.metric.clone(), r.key.hardware.clone(), r.values.clone()))
        .collect();
    let row = |metric: &str, hw: &str, a: f64, b: f64| (metric.to_string(), hw.to_string(), vec![Some(a), Some(b)]);
    let expected = vec![
        row("accuracy", "hw-cloud", 0.924, 0.903),
        row("accuracy", "hw-edge", 0.921, 0.902),
        row("accuracy", "hw-mobile", 0.921, 0.902),
        row("latency_ms", "hw-edge", 75.0, 11.0),
        row("latency_ms", "hw-mobile", 40.0, 6.0),
        row("latency_ms", "hw-workstation", 2.5, 0.4),
        row("memory_footprint_mb", "hw-edge", 90.0, 15.0),
        row("memory_footprint_mb", "hw-mobile", 90.0, 15.0),
        row("memory_footprint_mb", "hw-workstation", 92.0, 15.0),
    ];
    assert_eq!(got, expected);
    assert!(m
        .rows
        .iter()
        .all(|r| r.key.dataset == "ds-tweet-corpus" && r.key.dataset_version == "3.0"));
    assert!(!m.rows[3].higher_is_better && m.rows[0].higher_is_better);
}

#[test]
fn single_model_gives_one_column_and_missing_cells_are_null() {
    let (_dir, store) = seeded();
    let one = compare(&store, &["m-faster-rcnn"]).unwrap();
    assert_eq!(one.models, ["m-faster-rcnn"]);
    assert!(one.rows.iter().all(|r| r.values.len() == 1 && r.values[0].is_some()));

    let two = compare(&store, &["m-faster-rcnn", "m-pos-bilstm"]).unwrap();
    let sliced: Vec<_> = two.rows.iter().filter(|r| r.key.slice.is_some()).collect();
    assert_eq!(sliced.len(), 2);
    assert!(sliced.iter().all(|r| r.values[1].is_none()));
    let mut keys: Vec<_> = two.rows.iter().map(|r| r.key.clone()).collect();
    let before = keys.clone();
    keys.sort();
    assert_eq!(keys, before);
}

#[test]
fn unknown_id_and_empty_list_are_errors() {
    let (_dir, store) = seeded();
    assert_eq!(
        compare(&store, &["m-pos-bilstm", "nope"]).unwrap_err(),
        CompareError::UnknownModel("nope".into())
    );
    assert_eq!(compare(&store, &[] as &[&str]).unwrap_err(), CompareError::Empty);
}

#[test]
fn newest_run_fills_the_cell() {
    let (_dir, mut store) = seeded();
    store
        .put(Record::Evaluation(EvaluationRun {
            id: "run-rerun".into(),
            model_id: "m-pos-bilstm".into(),
            dataset_id: DatasetRef::new("ds-tweet-corpus", "3.0"),
            hardware_id: "hw-edge".into(),
            metrics: vec![MetricValue::known("latency_ms", 61.0)],
            executed_at: Utc.with_ymd_and_hms(2030, 1, 1, 0, 0, 0).unwrap(),
            executor: Provenance::harness("rerun"),
        }))
        .unwrap();
    let m = compare(&store, &["m-pos-bilstm"]).unwrap();
    let lat = m
        .rows
        .iter()
        .find(|r| r.key.metric == "latency_ms" && r.key.hardware == "hw-edge")
        .unwrap();
    assert_eq!(lat.values, vec![Some(61.0)]);
}
