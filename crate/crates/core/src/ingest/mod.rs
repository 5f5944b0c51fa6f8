//! The three acquisition paths: manual entry, external zoo cards and
//! evaluation runs.

mod card;
mod crawl;
mod executor;

use std::path::PathBuf;

pub use card::{
    adapter, card_id, parse_card, slug, CardFile, FieldMapping, HuggingFace, MapError, Mapped, MappingReport, RawCard,
    Unmapped, ZooAdapter, HF_ZOO,
};
pub use crawl::{crawl, CrawlSummary, Quarantined};
pub use executor::{run_evaluation, Executor, ExecutorError, ManifestEntry, SimulatedExecutor};

use crate::metamodel::{Origin, Record, RecordKind};
use crate::store::{PutOutcome, RecordKey, StoreError, StoreLog};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("cannot read {path}: {source}")]
    Fixtures {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad metrics manifest: {0}")]
    Manifest(String),
    #[error("no {kind} matches {reference:?}")]
    Unresolved { kind: RecordKind, reference: String },
    #[error("executor {executor} failed on {model}: {source}")]
    Executor {
        executor: String,
        model: String,
        #[source]
        source: ExecutorError,
    },
    #[error("unknown zoo {0:?}")]
    UnknownZoo(String),
}

/// Stores a hand-entered record, marking its provenance as manual.
pub fn ingest_manual(store: &mut StoreLog, record: Record) -> Result<RecordKey, IngestError> {
    ingest_manual_with_status(store, record).map(|o| o.key)
}

/// As [`ingest_manual`], also telling whether anything was appended.
pub fn ingest_manual_with_status(store: &mut StoreLog, mut record: Record) -> Result<PutOutcome, IngestError> {
    if let Some(p) = record.provenance_mut() {
        p.origin = Origin::Manual;
    }
    Ok(store.put_with_status(record)?)
}
