//! The seed zoo: a small, hand-authored model zoo used by the test suites
//! and the demos in the README.
//!
//! 30 models over 6 tasks, 6 datasets with 60 materialized instances,
//! 4 hardware profiles and 80 evaluation runs. Values are chosen so that
//! each canned query has boundary cases (exact
//! thresholds, missing metrics, superseded runs, ties).

use chrono::{DateTime, Duration, TimeZone, Utc};

use crate::metamodel::*;
use crate::store::{StoreError, StoreLog};

fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
}

fn concepts() -> Vec<SemanticConcept> {
    [
        ("wd:Q144", "dog", "wikidata"),
        ("wd:Q146", "cat", "wikidata"),
        ("wd:Q5", "person", "wikidata"),
        ("wd:Q1420", "car", "wikidata"),
        ("wd:Q6581072", "female", "wikidata"),
        ("wd:Q6581097", "male", "wikidata"),
        ("mz:sentiment/positive", "positive", "mz-sentiment"),
        ("mz:sentiment/negative", "negative", "mz-sentiment"),
        ("mz:sentiment/neutral", "neutral", "mz-sentiment"),
    ]
    .into_iter()
    .map(|(iri, label, kb)| SemanticConcept {
        iri: iri.into(),
        label: label.into(),
        kb_source: kb.into(),
    })
    .collect()
}

fn hardware() -> Vec<HardwareProfile> {
    [
        (
            "hw-cloud",
            "cloud-a100",
            DeviceClass::Cloud,
            "AMD EPYC 7763",
            Some("NVIDIA A100"),
            262_144,
        ),
        (
            "hw-workstation",
            "workstation-4090",
            DeviceClass::Workstation,
            "Intel i9-13900K",
            Some("NVIDIA RTX 4090"),
            65_536,
        ),
        (
            "hw-edge",
            "jetson-nano",
            DeviceClass::Edge,
            "ARM Cortex-A57",
            Some("Maxwell 128-core"),
            4_096,
        ),
        (
            "hw-mobile",
            "pixel-7",
            DeviceClass::Mobile,
            "Google Tensor G2",
            None,
            8_192,
        ),
    ]
    .into_iter()
    .map(|(id, name, class, cpu, acc, mem)| HardwareProfile {
        id: id.into(),
        name: name.into(),
        device_class: class,
        cpu: cpu.into(),
        accelerator: acc.map(Into::into),
        memory_mb: mem,
    })
    .collect()
}

struct DatasetRow {
    id: &'static str,
    name: &'static str,
    version: &'static str,
    source: &'static [&'static str],
    method: CollectionMethod,
    annotators: Option<u64>,
    license: &'static str,
    sensitive: bool,
    modality: Modality,
    instances: u64,
}

#[rustfmt::skip]
const DATASETS: &[DatasetRow] = &[
    DatasetRow { id: "ds-imagenet", name: "ImageNet", version: "1.0", source: &["web-images"], method: CollectionMethod::Crowdsourced, annotators: None, license: "imagenet-research", sensitive: false, modality: Modality::Image, instances: 1_281_167 },
    DatasetRow { id: "ds-coco", name: "COCO", version: "2017", source: &["flickr"], method: CollectionMethod::Crowdsourced, annotators: None, license: "cc-by-4.0", sensitive: false, modality: Modality::Image, instances: 20 },
    DatasetRow { id: "ds-openimage-dogs", name: "openimage-dogs", version: "1.0", source: &["OpenImage"], method: CollectionMethod::Curated, annotators: Some(12), license: "cc-by-2.0", sensitive: false, modality: Modality::Image, instances: 12 },
    DatasetRow { id: "ds-fairness-faces", name: "fairness-faces", version: "1.0", source: &["COCO", "OpenImage"], method: CollectionMethod::Derived, annotators: Some(40), license: "research-only", sensitive: true, modality: Modality::Image, instances: 16 },
    DatasetRow { id: "ds-toxicity-bench", name: "toxicity-bench", version: "2.1", source: &["reddit", "twitter"], method: CollectionMethod::Crowdsourced, annotators: Some(30), license: "cc-by-sa-4.0", sensitive: true, modality: Modality::Text, instances: 5_000 },
    DatasetRow { id: "ds-tweet-corpus", name: "tweet-corpus", version: "3.0", source: &["twitter"], method: CollectionMethod::Crowdsourced, annotators: Some(120), license: "cc-by-4.0", sensitive: false, modality: Modality::Text, instances: 12 },
];

fn datasets() -> Vec<DatasetRecord> {
    DATASETS
        .iter()
        .map(|d| DatasetRecord {
            id: d.id.into(),
            name: d.name.into(),
            version: d.version.into(),
            source: d.source.iter().map(|s| s.to_string()).collect(),
            collection_method: d.method,
            annotator_count: d.annotators,
            license: Some(d.license.into()),
            contains_sensitive_data: d.sensitive,
            modality: d.modality,
            instance_count: d.instances,
            provenance: Provenance::manual(),
        })
        .collect()
}

fn dref(id: &str) -> DatasetRef {
    let d = DATASETS.iter().find(|d| d.id == id).expect("seed dataset");
    DatasetRef::new(d.id, d.version)
}

fn instances() -> Vec<DataInstance> {
    let mut out = Vec::new();
    let mut add = |ds: &str, i: usize, locator: String, labels: &[&str], split: Split, sensitive: bool| {
        out.push(DataInstance {
            id: format!("{ds}/{i:03}"),
            dataset_id: dref(ds),
            locator,
            labels: labels.iter().map(|s| s.to_string()).collect(),
            split,
            sensitive,
        });
    };
    let split_of = |i: usize, n: usize| {
        if i < n * 7 / 10 {
            Split::Train
        } else if i < n * 85 / 100 {
            Split::Validation
        } else {
            Split::Test
        }
    };
    for i in 0..20 {
        let labels: &[&str] = match i % 4 {
            0 => &["wd:Q5", "wd:Q144"],
            1 => &["wd:Q1420"],
            2 => &["wd:Q5"],
            _ => &["wd:Q144", "wd:Q146"],
        };
        add(
            "ds-coco",
            i,
            format!("coco://train2017/{:012}.jpg", 9 + i * 17),
            labels,
            split_of(i, 20),
            false,
        );
    }
    for i in 0..12 {
        let labels: &[&str] = if i % 3 == 0 {
            &["wd:Q144", "wd:Q5"]
        } else {
            &["wd:Q144"]
        };
        add(
            "ds-openimage-dogs",
            i,
            format!("openimages://v6/dogs/{i:04}.jpg"),
            labels,
            split_of(i, 12),
            false,
        );
    }
    for i in 0..16 {
        let gender = if i % 2 == 0 { "wd:Q6581072" } else { "wd:Q6581097" };
        add(
            "ds-fairness-faces",
            i,
            format!("sha256:{:064x}", 0xfa11_0000u64 + i as u64),
            &["wd:Q5", gender],
            split_of(i, 16),
            true,
        );
    }
    for i in 0..12 {
        let label = ["mz:sentiment/positive", "mz:sentiment/negative", "mz:sentiment/neutral"][i % 3];
        add(
            "ds-tweet-corpus",
            i,
            format!("tweets://corpus-v3/{}", 1_700_000_000 + i * 31),
            &[label],
            Split::Unsplit,
            false,
        );
    }
    out
}

struct ModelRow {
    id: &'static str,
    name: &'static str,
    version: &'static str,
    task: &'static str,
    family: &'static str,
    params: u64,
    trained_on: &'static [&'static str],
    inputs: &'static [(&'static str, &'static str)],
    outputs: &'static [(&'static str, &'static str)],
    tags: &'static [&'static str],
}

const IMG_IN: &[(&str, &str)] = &[("pixels", "image")];
const CLS_OUT: &[(&str, &str)] = &[("logits", "class-label")];
const BOX_OUT: &[(&str, &str)] = &[("boxes", "bounding-boxes")];
const TOK_IN: &[(&str, &str)] = &[("tokens", "token-sequence")];
const SENT_PASS_OUT: &[(&str, &str)] = &[("label", "sentiment-label"), ("passthrough", "token-sequence")];
const SENT_OUT: &[(&str, &str)] = &[("label", "sentiment-label")];
const TAGS_OUT: &[(&str, &str)] = &[("tags", "pos-tags")];
const GEN_OUT: &[(&str, &str)] = &[("generated", "token-sequence")];

macro_rules! model {
    ($id:literal, $name:literal, $ver:literal, $task:literal, $fam:literal, $params:expr, [$($ds:literal),*], $in:expr, $out:expr, [$($tag:literal),*]) => {
        ModelRow { id: $id, name: $name, version: $ver, task: $task, family: $fam, params: $params, trained_on: &[$($ds),*], inputs: $in, outputs: $out, tags: &[$($tag),*] }
    };
}

#[rustfmt::skip]
const MODELS: &[ModelRow] = &[
    model!("m-resnet50-v1", "ic-resnet50", "1.0", "image-classification", "cnn", 25_600_000, ["ds-imagenet"], IMG_IN, CLS_OUT, []),
    model!("m-resnet50-v1.1", "ic-resnet50", "1.1", "image-classification", "cnn", 25_600_000, ["ds-imagenet"], IMG_IN, CLS_OUT, []),
    model!("m-resnet18", "ic-resnet18", "1.0", "image-classification", "cnn", 11_700_000, ["ds-imagenet"], IMG_IN, CLS_OUT, []),
    model!("m-mobilenet-v3", "ic-mobilenet-v3", "1.0", "image-classification", "cnn", 5_400_000, ["ds-imagenet"], IMG_IN, CLS_OUT, ["edge-friendly"]),
    model!("m-efficientnet-b0", "ic-efficientnet-b0", "1.0", "image-classification", "cnn", 5_300_000, ["ds-imagenet"], IMG_IN, CLS_OUT, []),
    model!("m-vit-base", "ic-vit-base", "1.0", "image-classification", "transformer", 86_000_000, ["ds-imagenet"], IMG_IN, CLS_OUT, []),
    model!("m-vit-large", "ic-vit-large", "1.0", "image-classification", "transformer", 304_000_000, ["ds-imagenet"], IMG_IN, CLS_OUT, []),
    model!("m-convnext-tiny", "ic-convnext-tiny", "1.0", "image-classification", "cnn", 28_600_000, ["ds-imagenet"], IMG_IN, CLS_OUT, []),
    model!("m-alexnet-legacy", "ic-alexnet-legacy", "0.9", "image-classification", "cnn", 61_000_000, ["ds-imagenet"], IMG_IN, CLS_OUT, ["deprecated"]),
    model!("m-bert-sentiment", "tc-bert-base-sentiment", "1.0", "text-classification", "transformer", 110_000_000, ["ds-tweet-corpus"], TOK_IN, SENT_PASS_OUT, []),
    model!("m-distilbert-sentiment", "tc-distilbert-sentiment", "1.0", "text-classification", "transformer", 66_000_000, ["ds-tweet-corpus"], TOK_IN, SENT_PASS_OUT, []),
    model!("m-tinybert-sentiment", "tc-tinybert-sentiment", "1.0", "text-classification", "transformer", 14_500_000, ["ds-tweet-corpus"], TOK_IN, SENT_PASS_OUT, []),
    model!("m-mobilebert-sentiment", "tc-mobilebert-sentiment", "1.0", "text-classification", "transformer", 25_000_000, ["ds-tweet-corpus"], TOK_IN, SENT_PASS_OUT, []),
    model!("m-fasttext-sentiment", "tc-fasttext-sentiment", "1.0", "text-classification", "linear", 2_000_000, ["ds-tweet-corpus"], TOK_IN, SENT_OUT, []),
    model!("m-roberta-toxicity", "tc-roberta-toxicity", "1.0", "text-classification", "transformer", 125_000_000, ["ds-toxicity-bench"], TOK_IN, &[("label", "toxicity-label")], []),
    model!("m-pos-bilstm", "pos-bilstm-crf", "1.0", "pos-tagging", "rnn", 8_000_000, ["ds-tweet-corpus"], TOK_IN, TAGS_OUT, []),
    model!("m-pos-bert", "pos-bert-base", "1.0", "pos-tagging", "transformer", 110_000_000, ["ds-tweet-corpus"], TOK_IN, TAGS_OUT, []),
    model!("m-pos-distil", "pos-distilbert", "1.0", "pos-tagging", "transformer", 66_000_000, ["ds-tweet-corpus"], TOK_IN, TAGS_OUT, []),
    model!("m-pos-flair", "pos-flair", "1.0", "pos-tagging", "rnn", 20_000_000, ["ds-tweet-corpus"], TOK_IN, TAGS_OUT, []),
    model!("m-pos-spacy-sm", "pos-spacy-sm", "3.7", "pos-tagging", "cnn", 4_000_000, ["ds-tweet-corpus"], TOK_IN, TAGS_OUT, []),
    model!("m-yolov5s", "pd-yolov5s", "1.0", "person-detection", "cnn", 7_200_000, ["ds-coco"], IMG_IN, BOX_OUT, []),
    model!("m-yolov8m", "pd-yolov8m", "1.0", "person-detection", "cnn", 25_900_000, ["ds-coco"], IMG_IN, BOX_OUT, []),
    model!("m-faster-rcnn", "pd-faster-rcnn", "1.0", "person-detection", "cnn", 41_000_000, ["ds-coco"], IMG_IN, BOX_OUT, []),
    model!("m-detr", "pd-detr", "1.0", "person-detection", "transformer", 41_000_000, ["ds-coco"], IMG_IN, BOX_OUT, []),
    model!("m-ssd-mobilenet", "pd-ssd-mobilenet", "1.0", "person-detection", "cnn", 6_800_000, ["ds-coco"], IMG_IN, BOX_OUT, ["edge-friendly"]),
    model!("m-gpt2", "tg-gpt2", "1.0", "text-generation", "transformer", 124_000_000, [], TOK_IN, GEN_OUT, []),
    model!("m-gpt2-detox", "tg-gpt2-detox", "1.0", "text-generation", "transformer", 124_000_000, ["ds-toxicity-bench"], TOK_IN, GEN_OUT, ["hate-speech-filtered"]),
    model!("m-opt-small", "tg-opt-small", "1.0", "text-generation", "transformer", 125_000_000, [], TOK_IN, GEN_OUT, []),
    model!("m-yolov8n", "od-yolov8n", "1.0", "object-detection", "cnn", 3_200_000, ["ds-coco"], IMG_IN, BOX_OUT, ["edge-friendly"]),
    model!("m-retinanet", "od-retinanet", "1.0", "object-detection", "cnn", 34_000_000, ["ds-coco"], IMG_IN, BOX_OUT, []),
];

fn io_specs(specs: &[(&str, &str)], image: bool) -> Vec<IoSpec> {
    specs
        .iter()
        .map(|(name, sem)| {
            let (dtype, shape) = match *sem {
                "image" => (
                    DType::Float32,
                    vec![Dim::Any, Dim::Fixed(3), Dim::Fixed(224), Dim::Fixed(224)],
                ),
                "token-sequence" => (DType::Int64, vec![Dim::Any, Dim::Any]),
                "class-label" => (DType::Float32, vec![Dim::Any, Dim::Fixed(1000)]),
                "bounding-boxes" => (DType::Float32, vec![Dim::Any, Dim::Any, Dim::Fixed(6)]),
                _ if image => (DType::Float32, vec![Dim::Any]),
                _ => (DType::String, vec![Dim::Any]),
            };
            IoSpec {
                name: name.to_string(),
                dtype,
                shape,
                semantic_type: Some(sem.to_string()),
            }
        })
        .collect()
}

fn models() -> Vec<ModelRecord> {
    MODELS
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let image = m.inputs.iter().any(|(_, s)| *s == "image");
            let transformations = if image {
                vec![
                    TransformStep {
                        name: "resize".into(),
                        parameters: [("size".to_string(), serde_json::json!(256))].into(),
                    },
                    TransformStep {
                        name: "center-crop".into(),
                        parameters: [("size".to_string(), serde_json::json!(224))].into(),
                    },
                ]
            } else {
                vec![TransformStep {
                    name: "wordpiece-tokenize".into(),
                    parameters: [("max_length".to_string(), serde_json::json!(128))].into(),
                }]
            };
            ModelRecord {
                id: m.id.into(),
                name: m.name.into(),
                version: m.version.into(),
                task: m.task.into(),
                input_signature: io_specs(m.inputs, image),
                output_signature: io_specs(m.outputs, image),
                transformations,
                architecture: Architecture {
                    family: m.family.into(),
                    parameter_count: m.params,
                    description: None,
                },
                hyperparameters: vec![
                    Hyperparameter {
                        name: "learning_rate".into(),
                        value_type: ValueType::Float,
                        value: serde_json::json!(if image { 0.1 } else { 0.00002 }),
                    },
                    Hyperparameter {
                        name: "epochs".into(),
                        value_type: ValueType::Int,
                        value: serde_json::json!(if image { 90 } else { 3 }),
                    },
                    Hyperparameter {
                        name: "optimizer".into(),
                        value_type: ValueType::Enum,
                        value: serde_json::json!(if image { "sgd" } else { "adamw" }),
                    },
                ],
                trained_on: m.trained_on.iter().map(|d| dref(d)).collect(),
                source: Provenance::manual(),
                tags: m.tags.iter().map(|t| t.to_string()).collect(),
                created_at: t0() + Duration::hours(i as i64),
            }
        })
        .collect()
}

// (model, dataset, hardware, metrics). Later rows are more recent.
type RunRow = (&'static str, &'static str, &'static str, &'static [(&'static str, f64)]);

const ACC: &str = "accuracy";
const LAT: &str = "latency_ms";
const MEM: &str = "memory_footprint_mb";

#[rustfmt::skip]
const RUNS: &[RunRow] = &[
    // image classification
    ("m-resnet50-v1", "ds-imagenet", "hw-cloud", &[(ACC, 0.761)]),
    ("m-resnet50-v1", "ds-imagenet", "hw-edge", &[(LAT, 120.0), (MEM, 400.0)]),
    ("m-resnet50-v1.1", "ds-imagenet", "hw-cloud", &[(ACC, 0.803)]),
    ("m-resnet50-v1.1", "ds-imagenet", "hw-edge", &[(LAT, 118.0), (MEM, 398.0)]),
    ("m-resnet18", "ds-imagenet", "hw-cloud", &[(ACC, 0.697)]),
    ("m-resnet18", "ds-imagenet", "hw-edge", &[(LAT, 45.0), (MEM, 180.0)]),
    ("m-mobilenet-v3", "ds-imagenet", "hw-cloud", &[(ACC, 0.752)]),
    ("m-mobilenet-v3", "ds-imagenet", "hw-edge", &[(LAT, 12.0), (MEM, 40.0)]),
    ("m-mobilenet-v3", "ds-imagenet", "hw-mobile", &[(ACC, 0.752), (LAT, 15.0), (MEM, 42.0)]),
    ("m-efficientnet-b0", "ds-imagenet", "hw-cloud", &[(ACC, 0.90)]),
    ("m-efficientnet-b0", "ds-imagenet", "hw-edge", &[(LAT, 48.0), (MEM, 520.0)]),
    ("m-vit-base", "ds-imagenet", "hw-cloud", &[(ACC, 0.889)]),
    ("m-vit-base", "ds-imagenet", "hw-edge", &[(LAT, 250.0), (MEM, 1400.0)]),
    ("m-vit-large", "ds-imagenet", "hw-cloud", &[(ACC, 0.921)]),
    ("m-convnext-tiny", "ds-imagenet", "hw-cloud", &[(ACC, 0.905)]),
    ("m-convnext-tiny", "ds-imagenet", "hw-edge", &[(LAT, 50.0), (MEM, 512.0)]),
    // text classification
    ("m-bert-sentiment", "ds-tweet-corpus", "hw-cloud", &[(ACC, 0.915), (LAT, 8.0)]),
    ("m-distilbert-sentiment", "ds-tweet-corpus", "hw-cloud", &[(ACC, 0.899)]),
    ("m-tinybert-sentiment", "ds-tweet-corpus", "hw-cloud", &[(ACC, 0.866)]),
    ("m-mobilebert-sentiment", "ds-tweet-corpus", "hw-cloud", &[(ACC, 0.891)]),
    ("m-fasttext-sentiment", "ds-tweet-corpus", "hw-cloud", &[(ACC, 0.845)]),
    ("m-roberta-toxicity", "ds-toxicity-bench", "hw-cloud", &[(ACC, 0.934)]),
    ("m-bert-sentiment", "ds-tweet-corpus", "hw-mobile", &[(ACC, 0.912), (LAT, 95.0), (MEM, 420.0)]),
    ("m-distilbert-sentiment", "ds-tweet-corpus", "hw-mobile", &[(ACC, 0.897), (LAT, 52.0), (MEM, 260.0)]),
    ("m-tinybert-sentiment", "ds-tweet-corpus", "hw-mobile", &[(ACC, 0.861), (LAT, 18.0), (MEM, 60.0)]),
    ("m-mobilebert-sentiment", "ds-tweet-corpus", "hw-mobile", &[(ACC, 0.889), (LAT, 30.0), (MEM, 100.0)]),
    ("m-fasttext-sentiment", "ds-tweet-corpus", "hw-mobile", &[(ACC, 0.842), (LAT, 3.0), (MEM, 12.0)]),
    ("m-roberta-toxicity", "ds-toxicity-bench", "hw-mobile", &[(ACC, 0.93), (LAT, 110.0), (MEM, 480.0)]),
    // pos tagging
    ("m-pos-bilstm", "ds-tweet-corpus", "hw-cloud", &[(ACC, 0.924)]),
    ("m-pos-bert", "ds-tweet-corpus", "hw-cloud", &[(ACC, 0.958)]),
    ("m-pos-distil", "ds-tweet-corpus", "hw-cloud", &[(ACC, 0.949)]),
    ("m-pos-flair", "ds-tweet-corpus", "hw-cloud", &[(ACC, 0.953)]),
    ("m-pos-spacy-sm", "ds-tweet-corpus", "hw-cloud", &[(ACC, 0.903)]),
    ("m-pos-bilstm", "ds-tweet-corpus", "hw-mobile", &[(ACC, 0.921), (LAT, 40.0), (MEM, 90.0)]),
    ("m-pos-bert", "ds-tweet-corpus", "hw-mobile", &[(ACC, 0.957), (LAT, 100.0), (MEM, 430.0)]),
    ("m-pos-distil", "ds-tweet-corpus", "hw-mobile", &[(ACC, 0.948), (LAT, 55.0), (MEM, 270.0)]),
    ("m-pos-flair", "ds-tweet-corpus", "hw-mobile", &[(ACC, 0.952), (LAT, 70.0)]),
    ("m-pos-spacy-sm", "ds-tweet-corpus", "hw-mobile", &[(ACC, 0.902), (LAT, 6.0), (MEM, 15.0)]),
    // person detection
    ("m-yolov5s", "ds-coco", "hw-cloud", &[("map", 0.374)]),
    ("m-yolov8m", "ds-coco", "hw-cloud", &[("map", 0.502)]),
    ("m-faster-rcnn", "ds-coco", "hw-cloud", &[("map", 0.420)]),
    ("m-detr", "ds-coco", "hw-cloud", &[("map", 0.502)]),
    ("m-ssd-mobilenet", "ds-coco", "hw-cloud", &[("map", 0.221)]),
    ("m-yolov5s", "ds-fairness-faces", "hw-cloud", &[("demographic_parity_gap", 0.008)]),
    ("m-yolov8m", "ds-fairness-faces", "hw-cloud", &[("demographic_parity_gap", 0.021)]),
    ("m-detr", "ds-fairness-faces", "hw-cloud", &[("demographic_parity_gap", 0.010)]),
    ("m-detr", "ds-imagenet", "hw-cloud", &[(ACC, 0.93)]),
    ("m-ssd-mobilenet", "ds-coco", "hw-edge", &[(LAT, 28.0), (MEM, 60.0)]),
    // text generation
    ("m-gpt2", "ds-toxicity-bench", "hw-cloud", &[("hate_speech_rate", 0.031)]),
    ("m-gpt2-detox", "ds-toxicity-bench", "hw-cloud", &[("hate_speech_rate", 0.0)]),
    ("m-opt-small", "ds-toxicity-bench", "hw-cloud", &[("hate_speech_rate", 0.0)]),
    // object detection
    ("m-yolov8n", "ds-coco", "hw-cloud", &[("map", 0.373)]),
    ("m-yolov8n", "ds-coco", "hw-edge", &[(LAT, 22.0), (MEM, 30.0)]),
    ("m-retinanet", "ds-coco", "hw-cloud", &[("map", 0.391)]),
    // workstation sweep
    ("m-resnet18", "ds-imagenet", "hw-workstation", &[(ACC, 0.701), (LAT, 2.1), (MEM, 180.0)]),
    ("m-mobilenet-v3", "ds-imagenet", "hw-workstation", &[(LAT, 1.2), (MEM, 40.0)]),
    ("m-bert-sentiment", "ds-tweet-corpus", "hw-workstation", &[(LAT, 6.5), (MEM, 440.0)]),
    ("m-distilbert-sentiment", "ds-tweet-corpus", "hw-workstation", &[(LAT, 3.4), (MEM, 270.0)]),
    ("m-tinybert-sentiment", "ds-tweet-corpus", "hw-workstation", &[(LAT, 1.1), (MEM, 62.0)]),
    ("m-mobilebert-sentiment", "ds-tweet-corpus", "hw-workstation", &[(LAT, 2.0), (MEM, 104.0)]),
    ("m-fasttext-sentiment", "ds-tweet-corpus", "hw-workstation", &[(LAT, 0.2), (MEM, 12.0)]),
    ("m-roberta-toxicity", "ds-toxicity-bench", "hw-workstation", &[(LAT, 7.0), (MEM, 500.0)]),
    ("m-pos-bilstm", "ds-tweet-corpus", "hw-workstation", &[(LAT, 2.5), (MEM, 92.0)]),
    ("m-pos-bert", "ds-tweet-corpus", "hw-workstation", &[(LAT, 6.4), (MEM, 440.0)]),
    ("m-pos-distil", "ds-tweet-corpus", "hw-workstation", &[(LAT, 3.5), (MEM, 272.0)]),
    ("m-pos-flair", "ds-tweet-corpus", "hw-workstation", &[(LAT, 4.8), (MEM, 310.0)]),
    ("m-pos-spacy-sm", "ds-tweet-corpus", "hw-workstation", &[(LAT, 0.4), (MEM, 15.0)]),
    ("m-yolov5s", "ds-coco", "hw-workstation", &[(LAT, 3.0), (MEM, 110.0)]),
    ("m-yolov8m", "ds-coco", "hw-workstation", &[(LAT, 7.9), (MEM, 330.0)]),
    ("m-faster-rcnn", "ds-coco", "hw-workstation", &[(LAT, 38.0), (MEM, 820.0)]),
    ("m-detr", "ds-coco", "hw-workstation", &[(LAT, 29.0), (MEM, 760.0)]),
    // edge sweep for the text models
    ("m-tinybert-sentiment", "ds-tweet-corpus", "hw-edge", &[(ACC, 0.861), (LAT, 35.0), (MEM, 60.0)]),
    ("m-mobilebert-sentiment", "ds-tweet-corpus", "hw-edge", &[(ACC, 0.889), (LAT, 58.0), (MEM, 100.0)]),
    ("m-fasttext-sentiment", "ds-tweet-corpus", "hw-edge", &[(ACC, 0.842), (LAT, 5.0), (MEM, 12.0)]),
    ("m-pos-bilstm", "ds-tweet-corpus", "hw-edge", &[(ACC, 0.921), (LAT, 75.0), (MEM, 90.0)]),
    ("m-pos-spacy-sm", "ds-tweet-corpus", "hw-edge", &[(ACC, 0.902), (LAT, 11.0), (MEM, 15.0)]),
    // superseding runs
    ("m-vit-base", "ds-imagenet", "hw-cloud", &[(ACC, 0.915)]),
    ("m-opt-small", "ds-toxicity-bench", "hw-cloud", &[("hate_speech_rate", 0.004)]),
];

fn runs() -> Vec<EvaluationRun> {
    let mut out: Vec<EvaluationRun> = RUNS
        .iter()
        .enumerate()
        .map(|(i, (model, ds, hw, metrics))| EvaluationRun {
            id: format!("run-{:03}", i + 1),
            model_id: model.to_string(),
            dataset_id: dref(ds),
            hardware_id: hw.to_string(),
            metrics: metrics
                .iter()
                .map(|(name, v)| {
                    let mut m = MetricValue::known(name, *v);
                    m.unit = match *name {
                        LAT => Some("ms".into()),
                        MEM => Some("MB".into()),
                        _ => None,
                    };
                    m
                })
                .collect(),
            executed_at: t0() + Duration::days(10) + Duration::hours(i as i64),
            executor: Provenance::harness("seed-benchmarks"),
        })
        .collect();

    // sliced-only fairness metrics: no unsliced value exists
    out.push(EvaluationRun {
        id: format!("run-{:03}", out.len() + 1),
        model_id: "m-faster-rcnn".into(),
        dataset_id: dref("ds-fairness-faces"),
        hardware_id: "hw-cloud".into(),
        metrics: vec![
            MetricValue::known("demographic_parity_gap", 0.004).sliced("gender=female"),
            MetricValue::known("demographic_parity_gap", 0.005).sliced("gender=male"),
        ],
        executed_at: t0() + Duration::days(20),
        executor: Provenance::harness("seed-benchmarks"),
    });
    // a metric outside the curated list carries its polarity explicitly
    out.push(EvaluationRun {
        id: format!("run-{:03}", out.len() + 1),
        model_id: "m-opt-small".into(),
        dataset_id: dref("ds-toxicity-bench"),
        hardware_id: "hw-cloud".into(),
        metrics: vec![MetricValue::with_polarity("perplexity", 21.7, false)],
        executed_at: t0() + Duration::days(21),
        executor: Provenance::harness("seed-benchmarks"),
    });
    out
}

fn predictions() -> Vec<PredictionRecord> {
    (0..4)
        .map(|i| PredictionRecord {
            id: format!("pred-yolov5s-{i}"),
            model_id: "m-yolov5s".into(),
            instance_id: format!("ds-coco/{:03}", i * 4),
            predicted: vec![
                ScoredConcept {
                    concept: "wd:Q5".into(),
                    score: 0.91 - 0.1 * i as f64,
                },
                ScoredConcept {
                    concept: "wd:Q144".into(),
                    score: 0.40 + 0.1 * i as f64,
                },
            ],
            correct: Some(i != 3),
        })
        .collect()
}

/// Every seed record, ordered so that references resolve on insertion.
pub fn seed_zoo() -> Vec<Record> {
    let mut out: Vec<Record> = Vec::new();
    out.extend(concepts().into_iter().map(Record::from));
    out.extend(hardware().into_iter().map(Record::from));
    out.extend(datasets().into_iter().map(Record::from));
    out.extend(instances().into_iter().map(Record::from));
    out.extend(models().into_iter().map(Record::from));
    out.extend(runs().into_iter().map(Record::from));
    out.extend(predictions().into_iter().map(Record::from));
    out
}

/// Puts every seed record into `store`.
pub fn load_seed(store: &mut StoreLog) -> Result<(), StoreError> {
    for r in seed_zoo() {
        store.put(r)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_has_the_advertised_shape() {
        let zoo = seed_zoo();
        let count = |k: RecordKind| zoo.iter().filter(|r| r.kind() == k).count();
        assert_eq!(count(RecordKind::Model), 30);
        assert_eq!(count(RecordKind::Dataset), 6);
        assert_eq!(count(RecordKind::DataInstance), 60);
        assert_eq!(count(RecordKind::Hardware), 4);
        assert_eq!(count(RecordKind::Evaluation), 80);
        let tasks: std::collections::BTreeSet<_> = zoo
            .iter()
            .filter_map(Record::as_model)
            .map(|m| m.task.as_str())
            .collect();
        assert_eq!(tasks.len(), 6);
    }

    #[test]
    fn every_seed_record_validates_in_order() {
        let zoo = seed_zoo();
        for (i, r) in zoo.iter().enumerate() {
            let prefix = &zoo[..i];
            let report = validate(r, &prefix);
            assert!(report.is_valid(), "{} {}: {report}", r.kind(), r.id());
        }
    }
}
