use std::collections::HashSet;

use mz_core::metamodel::*;
use mz_core::seed::seed_zoo;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_concept(rng: &mut ChaCha8Rng) -> Record {
    let word = |rng: &mut ChaCha8Rng| -> String {
        (0..rng.gen_range(1..12))
            .map(|_| rng.gen_range(b'a'..=b'z') as char)
            .collect()
    };
    Record::Concept(SemanticConcept {
        iri: format!("kb:{}", word(rng)),
        label: word(rng),
        kb_source: word(rng),
    })
}

#[test]
fn seed_records_round_trip_through_canonical_bytes() {
    let zoo = seed_zoo();
    for (i, r) in zoo.iter().enumerate() {
        let prefix = &zoo[..i];
        let bytes = canonical_bytes(r, &prefix).unwrap();
        let back = decode(&bytes).unwrap();
        assert_eq!(&back, r);
        assert_eq!(canonical_bytes(&back, &prefix).unwrap(), bytes);
    }
}

#[test]
fn distinct_random_records_never_share_bytes() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut records = Vec::new();
    while records.len() < 100 {
        let r = random_concept(&mut rng);
        if !records.contains(&r) {
            records.push(r);
        }
    }
    let encodings: HashSet<Vec<u8>> = records.iter().map(|r| canonical_bytes(r, &Empty).unwrap()).collect();
    assert_eq!(encodings.len(), records.len());
}

#[test]
fn nan_accuracy_is_rejected_by_validation() {
    let zoo = seed_zoo();
    let mut run = zoo.iter().find_map(Record::as_evaluation).cloned().unwrap();
    run.metrics[0].value = f64::NAN;
    let report = validate(&Record::Evaluation(run), &zoo);
    assert!(
        report.violations.iter().any(|v| v.reason == "value not finite"),
        "{report}"
    );
}

#[test]
fn dangling_dataset_reference_is_reported() {
    let zoo = seed_zoo();
    let mut m = zoo.iter().find_map(Record::as_model).cloned().unwrap();
    m.trained_on = vec![DatasetRef::new("ds-missing", "1.0")];
    let report = validate(&Record::Model(m), &zoo);
    assert!(
        report
            .violations
            .iter()
            .any(|v| v.reason.contains("dangling dataset reference ds-missing@1.0")),
        "{report}"
    );
}

#[test]
fn known_metric_polarity_is_enforced() {
    let mut mv = MetricValue::known("latency_ms", 10.0);
    assert!(validate_metric(&mv).is_valid());
    mv.higher_is_better = true;
    assert!(!validate_metric(&mv).is_valid());
    assert!(validate_metric(&MetricValue::with_polarity("perplexity", 12.0, false)).is_valid());
}

proptest! {
    #[test]
    fn version_order_is_total_and_transitive(
        a in "[0-9a-c.]{1,6}", b in "[0-9a-c.]{1,6}", c in "[0-9a-c.]{1,6}",
    ) {
        use std::cmp::Ordering::*;
        let (ab, bc, ac) = (compare_versions(&a, &b), compare_versions(&b, &c), compare_versions(&a, &c));
        prop_assert_eq!(compare_versions(&b, &a), ab.reverse());
        if ab != Greater && bc != Greater {
            prop_assert_ne!(ac, Greater);
        }
        prop_assert_eq!(ab == Equal, a == b);
    }

    #[test]
    fn decoding_ignores_key_order(label in "[a-z ]{1,10}", iri in "[a-z:]{1,10}") {
        let fwd = format!(r#"{{"kind":"SemanticConcept","body":{{"iri":{iri:?},"label":{label:?},"kb_source":"k"}}}}"#);
        let rev = format!(r#"{{"body":{{"kb_source":"k","label":{label:?},"iri":{iri:?}}},"kind":"SemanticConcept"}}"#);
        let a = encode(&decode(fwd.as_bytes()).unwrap()).unwrap();
        let b = encode(&decode(rev.as_bytes()).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }
}
