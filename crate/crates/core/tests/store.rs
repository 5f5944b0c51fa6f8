use std::fs;

use mz_core::metamodel::*;
use mz_core::seed::{load_seed, seed_zoo};
use mz_core::store::{ScanFilter, StoreError, StoreLog, LOG_FILE};
use mz_core::{RecordKey, RecordKind};
use sha2::{Digest, Sha256};

fn concept(i: usize) -> Record {
    Record::Concept(SemanticConcept {
        iri: format!("kb:c{i}"),
        label: format!("concept {i}"),
        kb_source: "test".into(),
    })
}

fn store_with(n: usize) -> (tempfile::TempDir, StoreLog) {
    let dir = tempfile::tempdir().unwrap();
    let mut store = StoreLog::open(dir.path()).unwrap();
    store.set_sync(false);
    for i in 0..n {
        store.put(concept(i)).unwrap();
    }
    (dir, store)
}

#[test]
fn every_truncation_of_the_final_entry_recovers_the_prefix() {
    let (dir, store) = store_with(50);
    let log = dir.path().join(LOG_FILE);
    let full = fs::read(&log).unwrap();
    let last_start = store.entries()[49].offset as usize;
    drop(store);

    for cut in last_start..full.len() {
        fs::write(&log, &full[..cut]).unwrap();
        let mut reopened = StoreLog::open(dir.path()).unwrap();
        assert_eq!(reopened.len(), 49, "cut at {cut}");
        assert_eq!(reopened.warnings().is_empty(), cut == last_start, "cut at {cut}");
        // the torn tail is dropped before the next append
        reopened.set_sync(false);
        reopened.put(concept(99)).unwrap();
        let again = StoreLog::open(dir.path()).unwrap();
        assert_eq!(again.len(), 50);
        assert!(again.warnings().is_empty());
        assert!(again.integrity_check().is_clean());
    }
}

#[test]
fn corruption_before_the_tail_is_reported_with_its_position() {
    let (dir, store) = store_with(20);
    let log = dir.path().join(LOG_FILE);
    let k = 7;
    let offset = store.entries()[k].offset;
    drop(store);
    let mut bytes = fs::read(&log).unwrap();
    // flip one character inside the JSON of entry k
    let at = offset as usize + 20;
    bytes[at] = if bytes[at] == b'x' { b'y' } else { b'x' };
    fs::write(&log, &bytes).unwrap();
    match StoreLog::open(dir.path()) {
        Err(StoreError::Corrupt { index, offset: o, .. }) => {
            assert_eq!(index, k);
            assert_eq!(o, offset);
        }
        other => panic!("expected corruption, got {other:?}"),
    }
}

#[test]
fn bad_checksum_on_the_last_line_is_a_torn_write() {
    let (dir, _store) = store_with(3);
    let log = dir.path().join(LOG_FILE);
    let mut bytes = fs::read(&log).unwrap();
    let n = bytes.len();
    bytes[n - 3] ^= 0x01;
    fs::write(&log, &bytes).unwrap();
    let store = StoreLog::open(dir.path()).unwrap();
    assert_eq!(store.len(), 2);
    assert_eq!(store.warnings().len(), 1);
}

#[test]
fn identical_put_is_idempotent_and_changed_content_conflicts() {
    let (dir, mut store) = store_with(1);
    let before = fs::read(dir.path().join(LOG_FILE)).unwrap();
    let out = store.put_with_status(concept(0)).unwrap();
    assert!(!out.created);
    assert_eq!(fs::read(dir.path().join(LOG_FILE)).unwrap(), before);

    let mut changed = concept(0);
    if let Record::Concept(c) = &mut changed {
        c.label = "renamed".into();
    }
    assert!(matches!(store.put(changed), Err(StoreError::IdConflict(_))));
}

fn seeded() -> (tempfile::TempDir, StoreLog) {
    let dir = tempfile::tempdir().unwrap();
    let mut store = StoreLog::open(dir.path()).unwrap();
    store.set_sync(false);
    load_seed(&mut store).unwrap();
    (dir, store)
}

fn model(store: &StoreLog, id: &str) -> ModelRecord {
    store
        .get(&RecordKey::new(RecordKind::Model, id))
        .and_then(Record::as_model)
        .cloned()
        .unwrap()
}

#[test]
fn same_name_and_version_with_new_id_is_a_version_conflict() {
    let (_dir, mut store) = seeded();
    let mut m = model(&store, "m-resnet18");
    m.id = "m-resnet18-dup".into();
    m.tags.insert("changed".into());
    match store.put(m.into()) {
        Err(StoreError::VersionConflict {
            name,
            version,
            existing,
            ..
        }) => {
            assert_eq!(name, "ic-resnet18");
            assert_eq!(version, "1.0");
            assert_eq!(existing.id, "m-resnet18");
        }
        other => panic!("expected version conflict, got {other:?}"),
    }
}

#[test]
fn latest_follows_version_order_not_insertion_order() {
    let (_dir, mut store) = seeded();
    let mut old = model(&store, "m-resnet18");
    old.id = "m-resnet18-0.9".into();
    old.version = Version::from("0.9");
    store.put(old.into()).unwrap();
    let mut newer = model(&store, "m-resnet18");
    newer.id = "m-resnet18-1.10".into();
    newer.version = Version::from("1.10");
    store.put(newer.into()).unwrap();

    let latest = store.latest(RecordKind::Model, "ic-resnet18").unwrap();
    assert_eq!(latest.id(), "m-resnet18-1.10");
    assert_eq!(store.versions(RecordKind::Model, "ic-resnet18").count(), 3);
    assert_eq!(
        store.get_version(RecordKind::Model, "ic-resnet18", "0.9").unwrap().id(),
        "m-resnet18-0.9"
    );
}

#[test]
fn invalid_records_are_rejected_without_touching_the_log() {
    let (dir, mut store) = seeded();
    let before = fs::read(dir.path().join(LOG_FILE)).unwrap();
    let mut m = model(&store, "m-resnet18");
    m.id = "m-broken".into();
    m.name = "broken".into();
    m.output_signature.clear();
    match store.put(m.into()) {
        Err(StoreError::Validation(r)) => {
            assert!(r.violations.iter().any(|v| v.path == "output_signature"), "{r}");
        }
        other => panic!("expected validation error, got {other:?}"),
    }
    assert_eq!(fs::read(dir.path().join(LOG_FILE)).unwrap(), before);
}

#[test]
fn indexed_scans_match_brute_force() {
    let (_dir, store) = seeded();
    let mut filters = Vec::new();
    for r in store.records() {
        if let Some(n) = r.name() {
            filters.push(ScanFilter::Name(n.to_owned()));
        }
        if let Some(m) = r.as_model() {
            filters.push(ScanFilter::Task(m.task.clone()));
        }
        if let Some(d) = r.as_dataset() {
            filters.push(ScanFilter::DatasetId(d.id.clone()));
        }
    }
    filters.push(ScanFilter::Name("no-such-name".into()));
    for f in &filters {
        for kind in RecordKind::ALL {
            let Ok(indexed) = store.scan(kind, Some(f)) else {
                continue;
            };
            let indexed: Vec<&str> = indexed.map(Record::id).collect();
            let brute: Vec<&str> = store
                .records()
                .filter(|r| r.kind() == kind && f.matches(r))
                .map(Record::id)
                .collect();
            assert_eq!(indexed, brute, "{kind} {f:?}");
        }
    }
    assert!(matches!(
        store.scan(RecordKind::Concept, Some(&ScanFilter::Task("x".into()))),
        Err(StoreError::UnsupportedFilter { .. })
    ));
}

#[test]
fn appends_never_rewrite_earlier_bytes() {
    let (dir, mut store) = store_with(5);
    let log = dir.path().join(LOG_FILE);
    let mut prefix_hash = Sha256::digest(fs::read(&log).unwrap());
    let mut prefix_len = fs::metadata(&log).unwrap().len() as usize;
    for i in 5..15 {
        store.put(concept(i)).unwrap();
        let now = fs::read(&log).unwrap();
        assert_eq!(Sha256::digest(&now[..prefix_len]), prefix_hash);
        prefix_hash = Sha256::digest(&now);
        prefix_len = now.len();
    }
}

#[test]
fn refresh_sees_entries_from_another_handle() {
    let (dir, mut writer) = store_with(3);
    let mut reader = StoreLog::open(dir.path()).unwrap();
    writer.put(concept(10)).unwrap();
    writer.put(concept(11)).unwrap();
    assert_eq!(reader.refresh().unwrap(), 2);
    assert_eq!(reader.len(), 5);
    assert!(reader.get(&RecordKey::new(RecordKind::Concept, "kb:c11")).is_some());
    assert_eq!(reader.refresh().unwrap(), 0);
}

#[test]
fn seed_store_passes_integrity_check_and_round_trips() {
    let (dir, store) = seeded();
    let report = store.integrity_check();
    assert!(report.is_clean(), "{:?}", report.issues);
    assert_eq!(report.entries_checked, seed_zoo().len());

    let reopened = StoreLog::open(dir.path()).unwrap();
    let a: Vec<&Record> = store.records().collect();
    let b: Vec<&Record> = reopened.records().collect();
    assert_eq!(a, b);
}
