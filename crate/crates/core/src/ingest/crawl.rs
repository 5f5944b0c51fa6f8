use std::path::{Path, PathBuf};

use serde::Serialize;

use super::card::{MappingReport, ZooAdapter};
use super::IngestError;
use crate::metamodel::{self, Layered, Record};
use crate::store::{RecordKey, StoreLog};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Quarantined {
    pub file: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrawlSummary {
    pub zoo: String,
    pub cards: usize,
    /// Cards whose records are all in the store after the crawl.
    pub stored: usize,
    /// Stored cards that were already fully present.
    pub unchanged: usize,
    pub quarantined: Vec<Quarantined>,
    pub records_created: usize,
    pub reports: Vec<MappingReport>,
}

/// Maps every card under `dir` and stores the results. A card whose records
/// would not validate or would clash with stored content is quarantined and
/// leaves the store untouched. Rerunning over the same cards adds nothing.
pub fn crawl(store: &mut StoreLog, adapter: &dyn ZooAdapter, dir: &Path) -> Result<CrawlSummary, IngestError> {
    let files = adapter.list_models(dir).map_err(|source| IngestError::Fixtures {
        path: dir.to_owned(),
        source,
    })?;
    let mut summary = CrawlSummary {
        zoo: adapter.zoo_name().to_owned(),
        cards: files.len(),
        stored: 0,
        unchanged: 0,
        quarantined: Vec::new(),
        records_created: 0,
        reports: Vec::new(),
    };
    for file in files {
        let mut mapped = match adapter.map_card(&file.payload) {
            Ok(m) => m,
            Err(e) => {
                log::warn!("quarantined {}: {e}", file.path.display());
                summary.quarantined.push(Quarantined {
                    file: file.path,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        // a stub already created from another card is reused as stored
        mapped.datasets.retain(|d| {
            let key = RecordKey::new(metamodel::RecordKind::Dataset, &d.id);
            match store.get(&key) {
                Some(Record::Dataset(existing)) if existing != d => {
                    mapped
                        .report
                        .notes
                        .push(format!("dataset {} reused from an earlier card", d.id));
                    false
                }
                _ => true,
            }
        });
        let records = mapped.records();
        if let Err(reason) = precheck(store, &records, &mut mapped.report) {
            log::warn!("quarantined {}: {reason}", file.path.display());
            summary.quarantined.push(Quarantined {
                file: file.path,
                reason,
            });
            summary.reports.push(mapped.report);
            continue;
        }
        let mut created = 0;
        for record in records {
            if store.put_with_status(record)?.created {
                created += 1;
            }
        }
        summary.stored += 1;
        if created == 0 {
            summary.unchanged += 1;
        }
        summary.records_created += created;
        summary.reports.push(mapped.report);
    }
    Ok(summary)
}

/// Checks validation and key clashes for a whole card before anything is
/// written.
fn precheck(store: &StoreLog, records: &[Record], report: &mut MappingReport) -> Result<(), String> {
    for (i, record) in records.iter().enumerate() {
        let resolver = Layered {
            front: &records[..i],
            back: store,
        };
        let v = metamodel::validate(record, &resolver);
        if !v.is_valid() {
            report.violations = v.violations.iter().map(ToString::to_string).collect();
            return Err(format!("{} {} failed validation: {v}", record.kind(), record.id()));
        }
        let key = RecordKey::of(record);
        if let Some(entry) = store.entry(&key) {
            let json = metamodel::encode(record).map_err(|e| e.to_string())?;
            if entry.json != json {
                return Err(format!("{key} already stored with different content"));
            }
            continue;
        }
        if let (Some(name), Some(version)) = (record.name(), record.version()) {
            if let Some(other) = store
                .versions(record.kind(), name)
                .find(|r| r.version() == Some(version))
            {
                return Err(format!(
                    "{} {name}@{version} already stored as {}",
                    record.kind(),
                    RecordKey::of(other)
                ));
            }
        }
    }
    Ok(())
}
