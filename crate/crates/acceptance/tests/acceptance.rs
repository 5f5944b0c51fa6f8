//! Acceptance suite. Prints one PASS/FAIL line per criterion to stderr and
//! exits non-zero if any criterion fails.
//!
//! Every oracle here is written against raw records and plain integer
//! arithmetic, not against the code under test.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write as _;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mz_core::composer::{self, brute_force, optimize, pareto, Candidate, CompositionRequest, Problem};
use mz_core::ingest::{self, HuggingFace, ZooAdapter};
use mz_core::metamodel::*;
use mz_core::mql::{self, EvalContext, TriBool, CANNED_QUERIES};
use mz_core::seed::{load_seed, seed_zoo};
use mz_core::store::{StoreError, LOG_FILE};
use mz_core::{RecordKey, StoreLog};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($fmt)+));
        }
    };
}

fn core_fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn fresh_store() -> (tempfile::TempDir, StoreLog) {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut store = StoreLog::open(dir.path()).expect("open store");
    store.set_sync(false);
    (dir, store)
}

fn seeded_store() -> (tempfile::TempDir, StoreLog) {
    let (dir, mut store) = fresh_store();
    load_seed(&mut store).expect("seed loads");
    (dir, store)
}

fn sha256(path: &Path) -> Vec<u8> {
    use sha2::{Digest, Sha256};
    Sha256::digest(std::fs::read(path).expect("read log")).to_vec()
}

// ---------------------------------------------------------------------------
// Canned queries: brute-force filters over the raw seed records

struct Zoo {
    records: Vec<Record>,
}

impl Zoo {
    fn models(&self) -> impl Iterator<Item = &ModelRecord> {
        self.records.iter().filter_map(Record::as_model)
    }

    fn datasets(&self) -> impl Iterator<Item = &DatasetRecord> {
        self.records.iter().filter_map(Record::as_dataset)
    }

    fn dataset(&self, r: &DatasetRef) -> Option<&DatasetRecord> {
        self.datasets().find(|d| d.id == r.id && d.version == r.version)
    }

    fn trained_on(&self, m: &ModelRecord) -> Vec<&DatasetRecord> {
        m.trained_on.iter().filter_map(|r| self.dataset(r)).collect()
    }

    fn hardware_is(&self, hw_id: &str, wanted: &str) -> bool {
        hw_id == wanted
            || self
                .records
                .iter()
                .filter_map(Record::as_hardware)
                .any(|h| h.id == hw_id && (h.name == wanted || h.device_class.as_str() == wanted))
    }

    /// Most recent unsliced value; ties go to the later record.
    fn metric(&self, model: &str, dataset: &str, name: &str, hardware: Option<&str>) -> Option<f64> {
        let ds = self
            .datasets()
            .filter(|d| d.name == dataset)
            .max_by(|a, b| a.version.cmp(&b.version))?;
        let mut best: Option<&EvaluationRun> = None;
        let mut value = None;
        for run in self.records.iter().filter_map(Record::as_evaluation) {
            if run.model_id != model || run.dataset_id.id != ds.id || run.dataset_id.version != ds.version {
                continue;
            }
            if hardware.is_some_and(|h| !self.hardware_is(&run.hardware_id, h)) {
                continue;
            }
            let Some(m) = run.metrics.iter().find(|m| m.name == name && m.slice.is_none()) else {
                continue;
            };
            if best.is_none_or(|b| run.executed_at >= b.executed_at) {
                best = Some(run);
                value = Some(m.value);
            }
        }
        value
    }

    fn label_is(&self, label: &str, wanted: &str) -> bool {
        label == wanted
            || self
                .records
                .iter()
                .filter_map(Record::as_concept)
                .any(|c| c.iri == label && c.label == wanted)
    }

    fn instances_of(&self, d: &DatasetRecord) -> impl Iterator<Item = &DataInstance> {
        let (id, version) = (d.id.clone(), d.version.clone());
        self.records
            .iter()
            .filter_map(Record::as_instance)
            .filter(move |i| i.dataset_id.id == id && i.dataset_id.version == version)
    }
}

fn oracle_query(zoo: &Zoo, q: u8) -> Vec<String> {
    let ids = |it: Vec<&ModelRecord>| it.into_iter().map(|m| m.id.clone()).collect::<Vec<_>>();
    match q {
        1 => ids(zoo
            .models()
            .filter(|m| {
                let ds = zoo.trained_on(m);
                m.task == "text-classification"
                    && ds.iter().any(|d| d.collection_method == CollectionMethod::Crowdsourced)
                    && ds.iter().any(|d| d.annotator_count.is_some_and(|n| n >= 50))
            })
            .collect()),
        2 => zoo
            .datasets()
            .filter(|d| d.source.iter().any(|s| s == "COCO" || s == "OpenImage"))
            .filter(|d| {
                zoo.instances_of(d)
                    .all(|i| i.labels.iter().any(|l| zoo.label_is(l, "dog")))
            })
            .map(|d| d.id.clone())
            .collect(),
        3 => ids(zoo
            .models()
            .filter(|m| zoo.trained_on(m).iter().any(|d| d.name == "ImageNet"))
            .filter(|m| {
                zoo.metric(&m.id, "ImageNet", "accuracy", None)
                    .is_some_and(|v| v > 0.90)
            })
            .collect()),
        4 => {
            let mut pd: Vec<(Option<f64>, &ModelRecord)> = zoo
                .models()
                .filter(|m| m.task == "person-detection")
                .map(|m| (zoo.metric(&m.id, "COCO", "map", None), m))
                .collect();
            pd.sort_by(|(a, ma), (b, mb)| {
                let by = match (a, b) {
                    (Some(x), Some(y)) => y.total_cmp(x),
                    (Some(_), None) => std::cmp::Ordering::Less,
                    (None, Some(_)) => std::cmp::Ordering::Greater,
                    (None, None) => std::cmp::Ordering::Equal,
                };
                by.then_with(|| ma.name.cmp(&mb.name))
                    .then_with(|| ma.version.cmp(&mb.version))
            });
            pd.into_iter().take(1).map(|(_, m)| m.id.clone()).collect()
        }
        5 => ids(zoo
            .models()
            .filter(|m| m.task == "person-detection")
            .filter(|m| {
                zoo.metric(&m.id, "fairness-faces", "demographic_parity_gap", None)
                    .is_some_and(|v| v <= 0.01)
            })
            .collect()),
        6 => ids(zoo
            .models()
            .filter(|m| m.task == "text-generation")
            .filter(|m| zoo.metric(&m.id, "toxicity-bench", "hate_speech_rate", None) == Some(0.0))
            .collect()),
        7 => ids(zoo
            .models()
            .filter(|m| m.task == "image-classification")
            .filter(|m| {
                zoo.metric(&m.id, "ImageNet", "latency_ms", Some("edge"))
                    .is_some_and(|v| v <= 50.0)
                    && zoo
                        .metric(&m.id, "ImageNet", "memory_footprint_mb", Some("edge"))
                        .is_some_and(|v| v <= 512.0)
            })
            .collect()),
        _ => unreachable!(),
    }
}

/// Worked out by hand from the seed tables.
const HAND_EXPECTED: [&[&str]; 7] = [
    &[
        "m-bert-sentiment",
        "m-distilbert-sentiment",
        "m-tinybert-sentiment",
        "m-mobilebert-sentiment",
        "m-fasttext-sentiment",
    ],
    &["ds-openimage-dogs"],
    &["m-vit-base", "m-vit-large", "m-convnext-tiny"],
    &["m-detr"],
    &["m-yolov5s", "m-detr"],
    &["m-gpt2-detox"],
    &["m-resnet18", "m-mobilenet-v3", "m-convnext-tiny"],
];

fn canned_queries() -> Outcome {
    let (_dir, store) = seeded_store();
    let zoo = Zoo { records: seed_zoo() };
    let started = Instant::now();
    let mut sizes = Vec::new();
    for q in CANNED_QUERIES {
        let out = mql::run(q.mql, EvalContext::new(&store)).map_err(|e| format!("query {}: {e}", q.id))?;
        let got: Vec<String> = out.results.iter().map(|r| r.id().to_owned()).collect();
        let want = oracle_query(&zoo, q.id);
        let hand: Vec<String> = HAND_EXPECTED[q.id as usize - 1].iter().map(|s| s.to_string()).collect();
        if q.id == 4 {
            ensure!(got == want, "query 4 returned {got:?}, oracle {want:?}");
        } else {
            let g: BTreeSet<_> = got.iter().collect();
            ensure!(g.len() == got.len(), "query {} returned duplicates", q.id);
            ensure!(
                g == want.iter().collect(),
                "query {} returned {got:?}, oracle {want:?}",
                q.id
            );
        }
        ensure!(
            want.iter().collect::<BTreeSet<_>>() == hand.iter().collect(),
            "oracle for query {} disagrees with the hand-derived set",
            q.id
        );
        sizes.push(got.len());
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("7/7 queries equal the oracle, sizes {sizes:?}, {elapsed:.2?}"))
}

// ---------------------------------------------------------------------------
// MQL round trip over generated ASTs

use mql::{CmpOp, Direction, Expr, Keyword, Literal, MetricCall, Operand, OrderBy, Quantifier, Query, Target};

struct AstGen {
    rng: ChaCha8Rng,
}

impl AstGen {
    fn ident(&mut self) -> String {
        const FIRST: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_";
        const REST: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789_";
        loop {
            let len = self.rng.gen_range(0..8);
            let mut s = String::new();
            s.push(FIRST[self.rng.gen_range(0..FIRST.len())] as char);
            for _ in 0..len {
                s.push(REST[self.rng.gen_range(0..REST.len())] as char);
            }
            if Keyword::lookup(&s).is_none() {
                return s;
            }
        }
    }

    fn string(&mut self) -> String {
        const POOL: &[char] = &[
            'a', 'Z', ' ', '"', '\\', '\n', '\t', '\r', '%', '(', ')', ',', '.', 'é', '犬', '0',
        ];
        let len = self.rng.gen_range(0..10);
        (0..len).map(|_| POOL[self.rng.gen_range(0..POOL.len())]).collect()
    }

    fn number(&mut self) -> f64 {
        match self.rng.gen_range(0..4) {
            0 => self.rng.gen_range(-1000i64..1000) as f64,
            1 => self.rng.gen_range(-1.0e6..1.0e6),
            2 => self.rng.gen_range(0.0..1.0),
            _ => loop {
                let v = f64::from_bits(self.rng.gen());
                if v.is_finite() && v.abs() < 1e30 && (v == 0.0 || v.abs() > 1e-30) {
                    break v;
                }
            },
        }
    }

    fn literal(&mut self) -> Literal {
        match self.rng.gen_range(0..3) {
            0 => Literal::Str(self.string()),
            1 => Literal::Num(self.number()),
            _ => Literal::Bool(self.rng.gen()),
        }
    }

    fn operand(&mut self) -> Operand {
        match self.rng.gen_range(0..3) {
            0 => {
                let n = self.rng.gen_range(1..4);
                Operand::Path(mql::Path((0..n).map(|_| self.ident()).collect()))
            }
            1 => Operand::Literal(self.literal()),
            _ => Operand::Metric(MetricCall {
                dataset: self.string(),
                name: self.string(),
                hardware: self.rng.gen_bool(0.5).then(|| self.string()),
                slice: self.rng.gen_bool(0.5).then(|| self.string()),
            }),
        }
    }

    fn expr(&mut self, depth: u32) -> Expr {
        let leaf = depth == 0 || self.rng.gen_bool(0.3);
        if leaf {
            return match self.rng.gen_range(0..3) {
                0 => {
                    let ops = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];
                    Expr::Compare {
                        lhs: self.operand(),
                        op: ops[self.rng.gen_range(0..ops.len())],
                        rhs: self.operand(),
                    }
                }
                1 => {
                    let n = self.rng.gen_range(1..5);
                    Expr::In {
                        operand: self.operand(),
                        list: (0..n).map(|_| self.literal()).collect(),
                    }
                }
                _ => Expr::Contains {
                    operand: self.operand(),
                    value: self.literal(),
                },
            };
        }
        match self.rng.gen_range(0..4) {
            0 => Expr::and(self.expr(depth - 1), self.expr(depth - 1)),
            1 => Expr::or(self.expr(depth - 1), self.expr(depth - 1)),
            2 => Expr::not(self.expr(depth - 1)),
            _ => Expr::Quantified {
                quantifier: if self.rng.gen() {
                    Quantifier::All
                } else {
                    Quantifier::Any
                },
                body: Box::new(self.expr(depth - 1)),
            },
        }
    }

    fn query(&mut self) -> Query {
        Query {
            target: if self.rng.gen() {
                Target::Models
            } else {
                Target::Datasets
            },
            predicate: self.rng.gen_bool(0.9).then(|| self.expr(5)),
            order_by: self.rng.gen_bool(0.4).then(|| OrderBy {
                key: self.operand(),
                direction: if self.rng.gen() {
                    Direction::Desc
                } else {
                    Direction::Asc
                },
            }),
            limit: self.rng.gen_bool(0.4).then(|| self.rng.gen_range(0..100_000)),
        }
    }
}

fn round_trip() -> Outcome {
    let mut gen = AstGen {
        rng: ChaCha8Rng::seed_from_u64(0x5eed_0001),
    };
    let mut failures = Vec::new();
    for i in 0..1000 {
        let ast = gen.query();
        let text = mql::pretty_print(&ast);
        match mql::parse_text(&text) {
            Ok(back) if back == ast => {}
            Ok(_) => failures.push(format!("#{i}: different AST for {text}")),
            Err(e) => failures.push(format!("#{i}: {e} in {text}")),
        }
    }
    ensure!(
        failures.is_empty(),
        "{} failures, first: {}",
        failures.len(),
        failures[0]
    );
    Ok("1000/1000 generated ASTs round trip".into())
}

// ---------------------------------------------------------------------------
// Kleene truth tables, evaluated through the query engine

fn kleene() -> Outcome {
    let (_dir, store) = seeded_store();
    let ctx = EvalContext::new(&store);
    // m-opt-small has no ImageNet accuracy, so the metric atom is UNKNOWN
    let record = store
        .get(&RecordKey::new(RecordKind::Model, "m-opt-small"))
        .ok_or("m-opt-small missing")?;
    let atom = |v: char| match v {
        'T' => r#"task = "text-generation""#,
        'F' => r#"task = "pos-tagging""#,
        _ => r#"metric(dataset="ImageNet", name="accuracy") > 0"#,
    };
    let eval = |pred: String| -> Result<char, String> {
        let q = mql::compile(&format!("FIND MODELS WHERE {pred}")).map_err(|e| e.to_string())?;
        Ok(match mql::truth(&q, record, ctx) {
            TriBool::True => 'T',
            TriBool::False => 'F',
            TriBool::Unknown => 'U',
        })
    };
    const V: [char; 3] = ['T', 'F', 'U'];
    // rows a in T,F,U; columns b in T,F,U
    const AND: [&str; 3] = ["TFU", "FFF", "UFU"];
    const OR: [&str; 3] = ["TTT", "TFU", "TUU"];
    const NOT: &str = "FTU";
    let table = |t: &[&str; 3], a: usize, b: usize| t[a].as_bytes()[b] as char;

    let mut cells = 0;
    for (a, &va) in V.iter().enumerate() {
        let got = eval(format!("NOT ({})", atom(va)))?;
        ensure!(got == NOT.as_bytes()[a] as char, "NOT {va} gave {got}");
        cells += 1;
        for (b, &vb) in V.iter().enumerate() {
            let got = eval(format!("({}) AND ({})", atom(va), atom(vb)))?;
            ensure!(got == table(&AND, a, b), "{va} AND {vb} gave {got}");
            let got = eval(format!("({}) OR ({})", atom(va), atom(vb)))?;
            ensure!(got == table(&OR, a, b), "{va} OR {vb} gave {got}");
            cells += 2;
            for (c, &vc) in V.iter().enumerate() {
                // three-input cells, composed from the same tables
                let ab = V.iter().position(|&x| x == table(&AND, a, b)).unwrap();
                let want = table(&OR, ab, c);
                let got = eval(format!("({}) AND ({}) OR ({})", atom(va), atom(vb), atom(vc)))?;
                ensure!(got == want, "{va} AND {vb} OR {vc} gave {got}");
                cells += 1;
            }
        }
    }
    Ok(format!("{cells} cells (9 AND, 9 OR, 27 three-input, 3 NOT) match"))
}

// ---------------------------------------------------------------------------
// Store crash safety

fn concept(i: usize) -> Record {
    Record::Concept(SemanticConcept {
        iri: format!("acc:c{i}"),
        label: format!("concept {i}"),
        kb_source: "acceptance".into(),
    })
}

fn crash_safety() -> Outcome {
    let (dir, mut store) = fresh_store();
    for i in 0..50 {
        store.put(concept(i)).map_err(|e| e.to_string())?;
    }
    drop(store);
    let log = dir.path().join(LOG_FILE);
    let full = std::fs::read(&log).map_err(|e| e.to_string())?;
    // line boundaries from the raw bytes
    let mut starts = vec![0usize];
    starts.extend(full.iter().enumerate().filter(|(_, &b)| b == b'\n').map(|(i, _)| i + 1));
    starts.pop();
    ensure!(starts.len() == 50, "log has {} lines", starts.len());

    let mut tail_cuts = 0;
    for cut in starts[49]..full.len() {
        std::fs::write(&log, &full[..cut]).map_err(|e| e.to_string())?;
        let s = StoreLog::open(dir.path()).map_err(|e| format!("cut {cut}: {e}"))?;
        ensure!(s.len() == 49, "cut at byte {cut} left {} records", s.len());
        tail_cuts += 1;
    }

    let mut inner_cuts = 0;
    for k in 0..49 {
        let (start, end) = (starts[k], starts[k + 1] - 1); // end is the newline
        for keep in 0..end - start {
            let mut bytes = full[..start + keep].to_vec();
            bytes.extend_from_slice(&full[end..]);
            std::fs::write(&log, &bytes).map_err(|e| e.to_string())?;
            match StoreLog::open(dir.path()) {
                Err(StoreError::Corrupt { index, .. }) if index == k => {}
                other => {
                    return Err(format!(
                        "entry {k} cut to {keep} bytes: expected corruption at {k}, got {:?}",
                        other.map(|s| s.len())
                    ))
                }
            }
            inner_cuts += 1;
        }
    }
    Ok(format!(
        "{tail_cuts} tail truncations recover 49 records, {inner_cuts} inner truncations report their entry"
    ))
}

// ---------------------------------------------------------------------------
// Idempotence and versioning

fn numeric_version_key(v: &str) -> Vec<u64> {
    v.split('.').map(|s| s.parse().expect("numeric segment")).collect()
}

fn idempotence() -> Outcome {
    let (dir, mut store) = seeded_store();
    let log = dir.path().join(LOG_FILE);
    let before = std::fs::read(&log).map_err(|e| e.to_string())?;
    let mut deviations = Vec::new();

    for r in seed_zoo() {
        match store.put_with_status(r.clone()) {
            Ok(o) if !o.created && o.key == RecordKey::of(&r) => {}
            other => deviations.push(format!("re-put {}: {other:?}", r.id())),
        }
    }
    if std::fs::read(&log).map_err(|e| e.to_string())? != before {
        deviations.push("re-put changed the log".into());
    }

    let base = store
        .get(&RecordKey::new(RecordKind::Model, "m-resnet18"))
        .and_then(Record::as_model)
        .cloned()
        .ok_or("m-resnet18 missing")?;
    let mut clash = base.clone();
    clash.id = "m-resnet18-copy".into();
    match store.put(clash.into()) {
        Err(StoreError::VersionConflict { existing, .. }) if existing.id == "m-resnet18" => {}
        other => deviations.push(format!("same name and version: {other:?}")),
    }
    let mut edited = base.clone();
    edited.tags.insert("edited".into());
    if !matches!(store.put(edited.into()), Err(StoreError::IdConflict(_))) {
        deviations.push("changed content under an existing id was accepted".into());
    }
    if std::fs::read(&log).map_err(|e| e.to_string())? != before {
        deviations.push("a rejected put changed the log".into());
    }

    let versions = ["1.10", "0.9", "1.9", "1.2", "2.0.1", "1.10.0"];
    for v in versions {
        let mut m = base.clone();
        m.id = format!("m-resnet18@{v}");
        m.version = Version::from(v);
        if let Err(e) = store.put(m.into()) {
            deviations.push(format!("version {v}: {e}"));
        }
    }
    let want = versions
        .iter()
        .chain(["1.0"].iter())
        .max_by_key(|v| numeric_version_key(v))
        .unwrap();
    let latest = store.latest(RecordKind::Model, "ic-resnet18").and_then(Record::version);
    if latest.map(Version::as_str) != Some(*want) {
        deviations.push(format!("latest is {latest:?}, expected {want}"));
    }
    ensure!(deviations.is_empty(), "{} deviations: {deviations:?}", deviations.len());
    Ok(format!(
        "{} re-puts unchanged, conflicts rejected, latest = {want}",
        seed_zoo().len()
    ))
}

// ---------------------------------------------------------------------------
// Composer: random instances against an integer enumerator

const TYPES: [&str; 3] = ["t0", "t1", "t2"];

#[derive(Debug, Clone)]
struct RCand {
    name: String,
    acc: i64, // thousandths
    lat: i64,
    mem: i64,
    ins: u8,
    outs: u8,
}

#[derive(Debug, Clone)]
struct Instance {
    weights: Vec<i64>,
    cands: Vec<Vec<RCand>>,
    edges: Vec<(usize, usize)>,
    lat_budget: i64,
    mem_budget: i64,
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.gen_range(1..=6);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.35) {
                edges.push((perm[i], perm[j]));
            }
        }
    }
    let cands: Vec<Vec<RCand>> = (0..n)
        .map(|_| {
            (0..rng.gen_range(1..=8))
                .map(|_| RCand {
                    name: format!("model-{}", rng.gen_range(0..4)),
                    acc: rng.gen_range(0..=1000),
                    lat: rng.gen_range(1..=100),
                    mem: rng.gen_range(1..=500),
                    ins: rng.gen_range(1..8),
                    outs: rng.gen_range(1..8),
                })
                .collect()
        })
        .collect();
    let max_lat: i64 = cands.iter().map(|c| c.iter().map(|x| x.lat).max().unwrap()).sum();
    let max_mem: i64 = cands.iter().map(|c| c.iter().map(|x| x.mem).max().unwrap()).sum();
    Instance {
        weights: (0..n).map(|_| rng.gen_range(0..=3)).collect(),
        cands,
        edges,
        lat_budget: rng.gen_range(1..=max_lat),
        mem_budget: rng.gen_range(1..=max_mem),
    }
}

fn types(mask: u8) -> BTreeSet<String> {
    (0..3)
        .filter(|b| mask & (1 << b) != 0)
        .map(|b| TYPES[b].to_string())
        .collect()
}

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn exact_problem(inst: &Instance, lat: i64, mem: i64) -> Problem<BigRational> {
    let nodes = inst
        .cands
        .iter()
        .enumerate()
        .map(|(i, cs)| {
            let cands = cs
                .iter()
                .enumerate()
                .map(|(k, c)| Candidate {
                    model_id: format!("n{i}-c{k}"),
                    name: c.name.clone(),
                    version: "1".into(),
                    accuracy: ratio(c.acc, 1000),
                    latency_ms: ratio(c.lat, 1),
                    memory_mb: ratio(c.mem, 1),
                    input_types: types(c.ins),
                    output_types: types(c.outs),
                })
                .collect();
            (format!("n{i}"), inst.weights[i] as f64, cands)
        })
        .collect();
    Problem::new(nodes, inst.edges.clone(), ratio(lat, 1), ratio(mem, 1)).expect("valid instance")
}

fn float_problem(inst: &Instance) -> Problem<f64> {
    let nodes = inst
        .cands
        .iter()
        .enumerate()
        .map(|(i, cs)| {
            let cands = cs
                .iter()
                .enumerate()
                .map(|(k, c)| Candidate {
                    model_id: format!("n{i}-c{k}"),
                    name: c.name.clone(),
                    version: "1".into(),
                    accuracy: c.acc as f64 / 1000.0,
                    latency_ms: c.lat as f64,
                    memory_mb: c.mem as f64,
                    input_types: types(c.ins),
                    output_types: types(c.outs),
                })
                .collect();
            (format!("n{i}"), inst.weights[i] as f64, cands)
        })
        .collect();
    Problem::new(
        nodes,
        inst.edges.clone(),
        inst.lat_budget as f64,
        inst.mem_budget as f64,
    )
    .expect("valid instance")
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Agg {
    score: i64, // sum of weight * thousandths
    lat: i64,
    mem: i64,
}

/// Every type-compatible assignment with its aggregate.
fn enumerate(inst: &Instance) -> Vec<(Vec<usize>, Agg)> {
    let n = inst.cands.len();
    let weights: Vec<i64> = if inst.weights.iter().all(|&w| w == 0) {
        vec![1; n]
    } else {
        inst.weights.clone()
    };
    let preds: Vec<Vec<usize>> = (0..n)
        .map(|v| inst.edges.iter().filter(|e| e.1 == v).map(|e| e.0).collect())
        .collect();
    // depth-first topological order, computed once per instance
    fn visit(v: usize, preds: &[Vec<usize>], seen: &mut [bool], order: &mut Vec<usize>) {
        if !seen[v] {
            seen[v] = true;
            for &u in &preds[v] {
                visit(u, preds, seen, order);
            }
            order.push(v);
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for v in 0..n {
        visit(v, &preds, &mut seen, &mut order);
    }
    let mut out = Vec::new();
    let mut choice = vec![0usize; n];
    loop {
        let ok = inst
            .edges
            .iter()
            .all(|&(u, v)| inst.cands[u][choice[u]].outs & inst.cands[v][choice[v]].ins != 0);
        if ok {
            let mut finish = vec![0i64; n];
            for &i in &order {
                let start = preds[i].iter().map(|&u| finish[u]).max().unwrap_or(0);
                finish[i] = start + inst.cands[i][choice[i]].lat;
            }
            out.push((
                choice.clone(),
                Agg {
                    score: (0..n).map(|i| weights[i] * inst.cands[i][choice[i]].acc).sum(),
                    lat: finish.iter().copied().max().unwrap_or(0),
                    mem: (0..n).map(|i| inst.cands[i][choice[i]].mem).sum(),
                },
            ));
        }
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            choice[i] += 1;
            if choice[i] < inst.cands[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

fn oracle_best(inst: &Instance, all: &[(Vec<usize>, Agg)], lat: i64, mem: i64) -> Option<(Vec<usize>, Agg)> {
    let key = |c: &Vec<usize>, a: &Agg| {
        let names: Vec<String> = c
            .iter()
            .enumerate()
            .map(|(i, &k)| inst.cands[i][k].name.clone())
            .collect();
        let ids: Vec<String> = c.iter().enumerate().map(|(i, &k)| format!("n{i}-c{k}")).collect();
        (-a.score, a.lat, a.mem, names, ids)
    };
    all.iter()
        .filter(|(_, a)| a.lat <= lat && a.mem <= mem)
        .min_by_key(|(c, a)| key(c, a))
        .cloned()
}

fn weight_total(inst: &Instance) -> i64 {
    let s: i64 = inst.weights.iter().sum();
    if s == 0 {
        inst.weights.len() as i64
    } else {
        s
    }
}

fn composer_equivalence() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let (mut feasible, mut infeasible) = (0, 0);
    for i in 0..200 {
        let inst = random_instance(&mut rng);
        let all = enumerate(&inst);
        let want = oracle_best(&inst, &all, inst.lat_budget, inst.mem_budget);

        let exact = exact_problem(&inst, inst.lat_budget, inst.mem_budget);
        let got = optimize(&exact);
        let bf = brute_force(&exact).map_err(|e| e.to_string())?;
        match (&want, &got) {
            (None, Err(_)) => {
                ensure!(
                    bf.is_none(),
                    "instance {i}: brute_force found a plan the oracle did not"
                );
                infeasible += 1;
            }
            (Some((choice, agg)), Ok(plan)) => {
                ensure!(
                    plan.choice() == *choice,
                    "instance {i}: optimize chose {:?}, oracle {choice:?}",
                    plan.choice()
                );
                ensure!(
                    plan.score == ratio(agg.score, 1000 * weight_total(&inst)),
                    "instance {i}: score {} differs from the oracle",
                    plan.score
                );
                ensure!(
                    plan.latency_ms == ratio(agg.lat, 1) && plan.memory_mb == ratio(agg.mem, 1),
                    "instance {i}: aggregates differ"
                );
                let same = bf.as_ref().is_some_and(|b| {
                    b.choice() == plan.choice()
                        && b.score == plan.score
                        && b.latency_ms == plan.latency_ms
                        && b.memory_mb == plan.memory_mb
                });
                ensure!(same, "instance {i}: brute_force differs from optimize");
                feasible += 1;
            }
            (w, g) => {
                return Err(format!(
                    "instance {i}: oracle {:?}, optimize {:?}",
                    w.as_ref().map(|x| &x.0),
                    g.as_ref().map(|p| p.choice())
                ))
            }
        }

        // the float instantiation against its own brute force
        let fp = float_problem(&inst);
        let (fo, fb) = (optimize(&fp).ok(), brute_force(&fp).map_err(|e| e.to_string())?);
        ensure!(
            fo.as_ref().map(|p| p.choice()) == fb.as_ref().map(|p| p.choice()),
            "instance {i}: f64 optimize and brute_force disagree"
        );
    }

    let mut frontier_sizes = 0;
    for i in 0..50 {
        let inst = random_instance(&mut rng);
        let all = enumerate(&inst);
        let dominated = |a: &Agg| {
            all.iter().any(|(_, b)| {
                b.score >= a.score
                    && b.lat <= a.lat
                    && b.mem <= a.mem
                    && (b.score > a.score || b.lat < a.lat || b.mem < a.mem)
            })
        };
        let want: BTreeSet<Vec<usize>> = all
            .iter()
            .filter(|(_, a)| !dominated(a))
            .map(|(c, _)| c.clone())
            .collect();
        let got: Vec<Vec<usize>> = pareto(&exact_problem(&inst, inst.lat_budget, inst.mem_budget))
            .map_err(|e| e.to_string())?
            .iter()
            .map(|p| p.choice())
            .collect();
        let got_set: BTreeSet<Vec<usize>> = got.iter().cloned().collect();
        ensure!(got.len() == got_set.len(), "pareto instance {i}: duplicate plans");
        ensure!(
            got_set == want,
            "pareto instance {i}: {} plans, oracle {}",
            got_set.len(),
            want.len()
        );
        frontier_sizes += want.len();
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!(
        "200 instances ({feasible} feasible, {infeasible} infeasible) match, 50 frontiers ({frontier_sizes} plans) match, {elapsed:.2?}"
    ))
}

fn composer_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let mut checked = 0;
    let mut tries = 0;
    while checked < 100 {
        tries += 1;
        ensure!(tries < 10_000, "could not draw 100 feasible instances");
        let inst = random_instance(&mut rng);
        let base = exact_problem(&inst, inst.lat_budget, inst.mem_budget);
        let Ok(plan) = optimize(&base) else { continue };
        for (lat, mem) in [
            (2 * inst.lat_budget, inst.mem_budget),
            (inst.lat_budget, 2 * inst.mem_budget),
        ] {
            let relaxed = optimize(&exact_problem(&inst, lat, mem))
                .map_err(|_| format!("instance {checked}: relaxing made it infeasible"))?;
            ensure!(
                relaxed.score >= plan.score,
                "instance {checked}: score fell from {} to {}",
                plan.score,
                relaxed.score
            );
        }
        checked += 1;
    }
    Ok(format!(
        "100 feasible instances, 200 relaxations, no score decrease ({tries} draws)"
    ))
}

// ---------------------------------------------------------------------------
// Ingestion audit

fn ingestion_audit() -> Outcome {
    let (dir, mut store) = seeded_store();
    let cards = core_fixtures().join("cards/huggingface");
    let first = ingest::crawl(&mut store, &HuggingFace, &cards).map_err(|e| e.to_string())?;
    ensure!(first.cards == 20, "{} cards listed", first.cards);
    ensure!(first.stored == 18, "{} cards stored", first.stored);
    ensure!(
        first.quarantined.len() == 2,
        "{} cards quarantined",
        first.quarantined.len()
    );
    ensure!(
        store.count(RecordKind::RawCard) == 18,
        "{} raw cards stored",
        store.count(RecordKind::RawCard)
    );

    let log = dir.path().join(LOG_FILE);
    let digest = sha256(&log);
    let again = ingest::crawl(&mut store, &HuggingFace, &cards).map_err(|e| e.to_string())?;
    ensure!(
        again.records_created == 0,
        "re-crawl created {} records",
        again.records_created
    );
    ensure!(sha256(&log) == digest, "re-crawl changed the log");

    // payloads as written, straight from the log lines
    let text = std::fs::read_to_string(&log).map_err(|e| e.to_string())?;
    let lines: BTreeSet<&str> = text
        .lines()
        .filter_map(|l| l.split_once(' ').map(|(_, json)| json))
        .collect();
    let mut compared = 0;
    for raw in store.records().filter_map(Record::as_raw_card) {
        let mapped = HuggingFace
            .map_card(&raw.payload)
            .map_err(|e| format!("{}: {e}", raw.id))?;
        ensure!(mapped.card == *raw, "{}: re-mapped raw card differs", raw.id);
        for record in mapped.records() {
            if record.provenance().is_some_and(|p| p.origin != Origin::ExternalZoo) {
                continue;
            }
            let bytes = encode(&record).map_err(|e| e.to_string())?;
            ensure!(
                lines.contains(bytes.as_str()),
                "{}: re-mapped {} is not byte-identical to the log",
                raw.id,
                record.id()
            );
            compared += 1;
        }
    }
    Ok(format!(
        "18 stored, 2 quarantined, re-crawl adds 0, {compared} re-mapped records byte-identical"
    ))
}

// ---------------------------------------------------------------------------
// Service equivalence

mod http {
    use axum::body::Body;
    use axum::http::{header, Method, Request};
    use http_body_util::BodyExt;
    use serde_json::Value;
    use tower::ServiceExt;

    pub async fn call(state: &mz_service::AppState, method: Method, uri: &str, body: Option<Value>) -> (u16, Value) {
        let mut req = Request::builder().method(method).uri(uri);
        if body.is_some() {
            req = req.header(header::CONTENT_TYPE, "application/json");
        }
        let body = body.map_or_else(Body::empty, |v| Body::from(v.to_string()));
        let resp = mz_service::router(state.clone())
            .oneshot(req.body(body).expect("request"))
            .await
            .expect("infallible");
        let status = resp.status().as_u16();
        let bytes = resp.into_body().collect().await.expect("body").to_bytes();
        (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
    }
}

fn service_equivalence() -> Outcome {
    use axum::http::Method;
    use serde_json::{json, to_value, Value};

    let rt = tokio::runtime::Builder::new_current_thread()
        .build()
        .map_err(|e| e.to_string())?;
    let (svc_dir, svc_store) = seeded_store();
    let (_lib_dir, mut lib) = seeded_store();
    let state = mz_service::AppState::new(svc_store, core_fixtures());
    let log = svc_dir.path().join(LOG_FILE);
    let call = |m: Method, uri: &str, body: Option<Value>| rt.block_on(http::call(&state, m, uri, body));
    let mut checked = Vec::new();

    // read-only endpoints first; the log must not change
    let digest = sha256(&log);
    let (s, body) = call(Method::GET, "/api/v1/health", None);
    ensure!(
        s == 200 && body["record_counts"] == to_value(lib.counts()).unwrap(),
        "health differs"
    );
    checked.push("health");

    for key in [
        RecordKey::new(RecordKind::Model, "m-pos-bilstm"),
        RecordKey::new(RecordKind::Dataset, "ds-coco"),
        RecordKey::new(RecordKind::Evaluation, "run-001"),
        RecordKey::new(RecordKind::Hardware, "hw-mobile"),
    ] {
        let (s, body) = call(Method::GET, &format!("/api/v1/records/{}/{}", key.kind, key.id), None);
        ensure!(
            s == 200 && body == to_value(lib.get(&key)).unwrap(),
            "GET {key} differs"
        );
    }
    checked.push("records GET");

    for q in CANNED_QUERIES {
        let (s, body) = call(Method::POST, "/api/v1/query", Some(json!({ "mql": q.mql })));
        let out = mql::run(q.mql, EvalContext::new(&lib)).map_err(|e| e.to_string())?;
        ensure!(s == 200, "query {} returned {s}", q.id);
        ensure!(body["count"] == json!(out.count), "query {} count differs", q.id);
        ensure!(
            body["results"] == to_value(&out.results).unwrap(),
            "query {} results differ",
            q.id
        );
        ensure!(
            body["plan"] == to_value(&out.plan).unwrap(),
            "query {} plan differs",
            q.id
        );
    }
    checked.push("query");

    let ids = ["m-pos-bilstm", "m-pos-spacy-sm", "m-bert-sentiment"];
    let (s, body) = call(Method::GET, &format!("/api/v1/compare?ids={}", ids.join(",")), None);
    let m = mz_core::compare::compare(&lib, &ids).map_err(|e| e.to_string())?;
    ensure!(s == 200 && body == to_value(m).unwrap(), "compare differs");
    checked.push("compare");

    let req: Value = serde_json::from_str(
        &std::fs::read_to_string(core_fixtures().join("compose/mobile-pipeline.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let creq: CompositionRequest = serde_json::from_value(req.clone()).map_err(|e| e.to_string())?;
    let (s, body) = call(Method::POST, "/api/v1/compose", Some(req.clone()));
    let c = composer::compose(&lib, &creq).map_err(|e| e.to_string())?;
    ensure!(s == 200 && body == to_value(&c).unwrap(), "compose differs");
    let (s, body) = call(Method::POST, "/api/v1/compose/pareto", Some(req));
    let f = composer::compose_pareto(&lib, &creq).map_err(|e| e.to_string())?;
    ensure!(s == 200 && body == to_value(&f).unwrap(), "compose/pareto differs");
    checked.push("compose");
    checked.push("compose/pareto");
    ensure!(sha256(&log) == digest, "read-only requests changed the store file");

    // writes: same operation on both stores, same outcome and same bytes
    let record = Record::Concept(SemanticConcept {
        iri: "acc:service".into(),
        label: "service".into(),
        kb_source: "acceptance".into(),
    });
    let (s, body) = call(Method::POST, "/api/v1/records", Some(to_value(&record).unwrap()));
    let o = ingest::ingest_manual_with_status(&mut lib, record.clone()).map_err(|e| e.to_string())?;
    ensure!(
        s == 201 && body["key"] == to_value(&o.key).unwrap() && body["created"] == json!(o.created),
        "POST record differs"
    );
    let (s, body) = call(Method::POST, "/api/v1/records", Some(to_value(&record).unwrap()));
    ensure!(
        s == 200 && body["created"] == json!(false),
        "idempotent POST record returned {s}"
    );
    checked.push("records POST");

    let (s, body) = call(
        Method::POST,
        "/api/v1/crawl/huggingface",
        Some(json!({ "fixture_dir": "cards/huggingface" })),
    );
    let summary =
        ingest::crawl(&mut lib, &HuggingFace, &core_fixtures().join("cards/huggingface")).map_err(|e| e.to_string())?;
    ensure!(s == 200 && body == to_value(&summary).unwrap(), "crawl differs");
    checked.push("crawl");

    let svc_lines = std::fs::read_to_string(&log).map_err(|e| e.to_string())?;
    let lib_lines = std::fs::read_to_string(lib.path()).map_err(|e| e.to_string())?;
    ensure!(svc_lines == lib_lines, "stores diverged after the same writes");
    Ok(format!(
        "{} endpoints equal the library, read-only requests leave the log hash unchanged",
        checked.len()
    ))
}

// ---------------------------------------------------------------------------
// Mobile pipeline scenario

struct Cand {
    id: String,
    acc: f64,
    lat: f64,
    mem: f64,
    ins: BTreeSet<String>,
    outs: BTreeSet<String>,
}

/// Latest models for `task` with all three metrics on the mobile profile.
fn scenario_candidates(zoo: &Zoo, task: &str) -> Vec<Cand> {
    let mut latest: BTreeMap<&str, &ModelRecord> = BTreeMap::new();
    for m in zoo.models().filter(|m| m.task == task) {
        let e = latest.entry(m.name.as_str()).or_insert(m);
        if m.version > e.version {
            *e = m;
        }
    }
    let sem = |s: &[IoSpec]| {
        s.iter()
            .filter_map(|x| x.semantic_type.clone())
            .collect::<BTreeSet<_>>()
    };
    latest
        .values()
        .filter(|m| {
            m.input_signature
                .iter()
                .any(|s| s.semantic_type.as_deref() == Some("token-sequence"))
        })
        .filter_map(|m| {
            let get = |n| zoo.metric(&m.id, "tweet-corpus", n, Some("pixel-7"));
            Some(Cand {
                id: m.id.clone(),
                acc: get("accuracy")?,
                lat: get("latency_ms")?,
                mem: get("memory_footprint_mb")?,
                ins: sem(&m.input_signature),
                outs: sem(&m.output_signature),
            })
        })
        .collect()
}

fn mobile_scenario() -> Outcome {
    let (_dir, store) = seeded_store();
    let zoo = Zoo { records: seed_zoo() };
    let text =
        std::fs::read_to_string(core_fixtures().join("compose/mobile-pipeline.json")).map_err(|e| e.to_string())?;
    let req: CompositionRequest = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let (lat_budget, mem_budget) = (req.budgets.latency_ms, req.budgets.memory_mb);

    let tc = scenario_candidates(&zoo, "text-classification");
    let pos = scenario_candidates(&zoo, "pos-tagging");
    let best = |lat_cap: f64| {
        let mut best: Option<(f64, &Cand, &Cand)> = None;
        for a in &tc {
            for b in &pos {
                let compatible = a.outs.iter().any(|t| b.ins.contains(t));
                if !compatible || a.lat + b.lat > lat_cap || a.mem + b.mem > mem_budget {
                    continue;
                }
                let score = (a.acc + b.acc) / 2.0;
                if best.as_ref().is_none_or(|(s, ..)| score > *s) {
                    best = Some((score, a, b));
                }
            }
        }
        best
    };
    let (score, a, b) = best(lat_budget).ok_or("oracle found no feasible pipeline")?;
    let (free_score, ..) = best(f64::INFINITY).ok_or("oracle found no pipeline")?;
    ensure!(free_score > score, "latency budget is not binding in this scenario");

    let c = composer::compose(&store, &req).map_err(|e| e.to_string())?;
    let plan = c.plan.ok_or("composer returned no plan")?;
    ensure!(c.status == "OPTIMAL", "status {}", c.status);
    ensure!(
        plan.model_ids() == [a.id.as_str(), b.id.as_str()],
        "plan {:?}, oracle [{}, {}]",
        plan.model_ids(),
        a.id,
        b.id
    );
    ensure!(
        (plan.score - score).abs() <= 1e-12,
        "score {} vs oracle {score}",
        plan.score
    );
    ensure!(plan.latency_ms <= lat_budget, "latency {} over budget", plan.latency_ms);
    ensure!(plan.memory_mb <= mem_budget, "memory {} over budget", plan.memory_mb);
    ensure!(
        plan.memory_mb == a.mem + b.mem,
        "memory {} vs oracle {}",
        plan.memory_mb,
        a.mem + b.mem
    );
    Ok(format!(
        "{} + {}: score {:.4}, {} ms of {lat_budget}, {} MB of {mem_budget} (unconstrained optimum {free_score:.4})",
        a.id, b.id, plan.score, plan.latency_ms, plan.memory_mb
    ))
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria: [Criterion; 10] = [
        ("Canned query coverage", canned_queries),
        ("MQL round trip", round_trip),
        ("Kleene suite", kleene),
        ("Store crash safety", crash_safety),
        ("Store idempotence/versioning", idempotence),
        ("Composer oracle equivalence", composer_equivalence),
        ("Composer monotonicity", composer_monotonicity),
        ("Ingestion audit", ingestion_audit),
        ("Service equivalence", service_equivalence),
        ("Mobile pipeline scenario", mobile_scenario),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    let mut err = std::io::stderr().lock();
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let took = started.elapsed();
        let _ = match &outcome {
            Ok(detail) => writeln!(err, "PASS  {name}: {detail} [{took:.2?}]"),
            Err(why) => {
                failed += 1;
                writeln!(err, "FAIL  {name}: {why} [{took:.2?}]")
            }
        };
    }
    let _ = writeln!(err, "acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
