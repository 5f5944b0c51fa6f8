//! Append-only, checksummed metadata log with in-memory secondary indexes.
//!
//! The log lives in a single file, `metadata.log`. Every entry is one line:
//!
//! ```text
//! <crc32c of the JSON, 8 lowercase hex digits> <canonical JSON envelope>\n
//! ```
//!
//! A line without its terminating newline, or a final line whose checksum
//! does not match, is a torn write: it is ignored on open (with a warning)
//! and truncated away before the next append. A bad line followed by more
//! data is corruption and makes `open` fail.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::metamodel::{
    self, compare_versions, CodecError, Record, RecordKind, Resolver, UnknownKind, ValidationReport, Version,
};

pub const LOG_FILE: &str = "metadata.log";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RecordKey {
    pub kind: RecordKind,
    pub id: String,
}

impl RecordKey {
    pub fn new(kind: RecordKind, id: impl Into<String>) -> Self {
        Self { kind, id: id.into() }
    }

    pub fn of(record: &Record) -> Self {
        Self::new(record.kind(), record.id())
    }
}

impl std::fmt::Display for RecordKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.kind, self.id)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("cannot access store at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("corrupt entry {index} at byte offset {offset}: {reason}")]
    Corrupt { index: usize, offset: u64, reason: String },
    #[error("record failed validation: {0}")]
    Validation(ValidationReport),
    #[error("version conflict: {kind} {name}@{version} already stored as {existing} with different content")]
    VersionConflict {
        kind: RecordKind,
        name: String,
        version: String,
        existing: RecordKey,
    },
    #[error("{0} already stored with different content")]
    IdConflict(RecordKey),
    #[error(transparent)]
    UnknownKind(#[from] UnknownKind),
    #[error("filter on {filter} is not indexed for {kind}")]
    UnsupportedFilter { kind: RecordKind, filter: &'static str },
    #[error(transparent)]
    Codec(#[from] CodecError),
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

/// Equality filters served from the secondary indexes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScanFilter {
    Name(String),
    Task(String),
    DatasetId(String),
}

impl ScanFilter {
    fn label(&self) -> &'static str {
        match self {
            ScanFilter::Name(_) => "name",
            ScanFilter::Task(_) => "task",
            ScanFilter::DatasetId(_) => "dataset_id",
        }
    }

    /// Brute-force form of the filter, used for verification.
    pub fn matches(&self, record: &Record) -> bool {
        match self {
            ScanFilter::Name(n) => record.name() == Some(n.as_str()),
            ScanFilter::Task(t) => record.as_model().is_some_and(|m| &m.task == t),
            ScanFilter::DatasetId(d) => match record {
                Record::Model(m) => m.trained_on.iter().any(|r| &r.id == d),
                Record::Evaluation(e) => &e.dataset_id.id == d,
                Record::DataInstance(i) => &i.dataset_id.id == d,
                _ => false,
            },
        }
    }

    fn supported(&self, kind: RecordKind) -> bool {
        match self {
            ScanFilter::Name(_) => matches!(kind, RecordKind::Model | RecordKind::Dataset | RecordKind::Hardware),
            ScanFilter::Task(_) => kind == RecordKind::Model,
            ScanFilter::DatasetId(_) => matches!(
                kind,
                RecordKind::Model | RecordKind::Evaluation | RecordKind::DataInstance
            ),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Entry {
    pub offset: u64,
    pub record: Record,
    /// Canonical JSON of the envelope, exactly as written to the log.
    pub json: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Indexes {
    by_id: HashMap<(RecordKind, String), usize>,
    by_kind: BTreeMap<RecordKind, Vec<usize>>,
    by_name: HashMap<(RecordKind, String), Vec<usize>>,
    by_task: HashMap<String, Vec<usize>>,
    by_dataset: HashMap<String, Vec<usize>>,
}

impl Indexes {
    fn add(&mut self, idx: usize, record: &Record) {
        let kind = record.kind();
        self.by_id.insert((kind, record.id().to_owned()), idx);
        self.by_kind.entry(kind).or_default().push(idx);
        if let Some(name) = record.name() {
            self.by_name.entry((kind, name.to_owned())).or_default().push(idx);
        }
        match record {
            Record::Model(m) => {
                self.by_task.entry(m.task.clone()).or_default().push(idx);
                let mut seen = Vec::new();
                for r in &m.trained_on {
                    if !seen.contains(&&r.id) {
                        seen.push(&r.id);
                        self.by_dataset.entry(r.id.clone()).or_default().push(idx);
                    }
                }
            }
            Record::Evaluation(e) => {
                self.by_dataset.entry(e.dataset_id.id.clone()).or_default().push(idx);
            }
            Record::DataInstance(i) => {
                self.by_dataset.entry(i.dataset_id.id.clone()).or_default().push(idx);
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrityIssue {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entry: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset: Option<u64>,
    pub check: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrityReport {
    pub entries_checked: usize,
    pub issues: Vec<IntegrityIssue>,
}

impl IntegrityReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Outcome of a `put`: the key and whether a new entry was appended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PutOutcome {
    pub key: RecordKey,
    pub created: bool,
}

pub struct StoreLog {
    path: PathBuf,
    file: Option<File>,
    entries: Vec<Entry>,
    valid_len: u64,
    indexes: Indexes,
    warnings: Vec<String>,
    sync: bool,
}

impl std::fmt::Debug for StoreLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StoreLog")
            .field("path", &self.path)
            .field("entries", &self.entries.len())
            .finish()
    }
}

struct Parsed {
    entries: Vec<Entry>,
    valid_len: u64,
    warnings: Vec<String>,
}

pub fn checksum_hex(json: &str) -> String {
    format!("{:08x}", crc32c::crc32c(json.as_bytes()))
}

fn parse_line(line: &[u8]) -> std::result::Result<(Record, String), String> {
    let text = std::str::from_utf8(line).map_err(|_| "entry is not valid UTF-8".to_owned())?;
    let (crc, json) = text
        .split_once(' ')
        .ok_or_else(|| "missing checksum separator".to_owned())?;
    if crc.len() != 8 || !crc.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(format!("malformed checksum {crc:?}"));
    }
    let actual = checksum_hex(json);
    if !crc.eq_ignore_ascii_case(&actual) {
        return Err(format!("checksum mismatch: stored {crc}, computed {actual}"));
    }
    let record = metamodel::decode(json.as_bytes()).map_err(|e| e.to_string())?;
    Ok((record, json.to_owned()))
}

/// Parses log bytes starting at `base` (the file offset of `data[0]`) and
/// entry number `first_index`.
fn parse_log(data: &[u8], base: u64, first_index: usize) -> Result<Parsed> {
    let mut entries = Vec::new();
    let mut warnings = Vec::new();
    let mut pos = 0usize;
    while pos < data.len() {
        let index = first_index + entries.len();
        let offset = base + pos as u64;
        let Some(nl) = data[pos..].iter().position(|&b| b == b'\n') else {
            warnings.push(format!(
                "ignoring torn entry {index} at byte offset {offset} ({} bytes without newline)",
                data.len() - pos
            ));
            break;
        };
        let line = &data[pos..pos + nl];
        let next = pos + nl + 1;
        match parse_line(line) {
            Ok((record, json)) => entries.push(Entry { offset, record, json }),
            Err(reason) if next == data.len() => {
                warnings.push(format!("ignoring torn entry {index} at byte offset {offset}: {reason}"));
                break;
            }
            Err(reason) => return Err(StoreError::Corrupt { index, offset, reason }),
        }
        pos = next;
    }
    // "<8 hex> " prefix and trailing newline
    let valid_len = entries
        .last()
        .map_or(base, |e: &Entry| e.offset + e.json.len() as u64 + 10);
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Parsed {
        entries,
        valid_len,
        warnings,
    })
}

impl StoreLog {
    /// Opens (or creates) the store at `path`.
    ///
    /// `path` is the store directory; an existing regular file is used as the
    /// log itself.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let log_path = if path.is_file() {
            path.to_path_buf()
        } else {
            fs::create_dir_all(path).map_err(|source| StoreError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            path.join(LOG_FILE)
        };
        let data = match fs::read(&log_path) {
            Ok(d) => d,
            Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
            Err(source) => return Err(StoreError::Io { path: log_path, source }),
        };
        let parsed = parse_log(&data, 0, 0)?;
        let mut store = Self {
            path: log_path,
            file: None,
            entries: Vec::new(),
            valid_len: parsed.valid_len,
            indexes: Indexes::default(),
            warnings: parsed.warnings,
            sync: true,
        };
        for e in parsed.entries {
            store.push_entry(e);
        }
        Ok(store)
    }

    /// Path of the log file.
    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Disables fsync after each append (bulk loads, tests).
    pub fn set_sync(&mut self, sync: bool) {
        self.sync = sync;
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// All records in insertion order.
    pub fn records(&self) -> impl Iterator<Item = &Record> {
        self.entries.iter().map(|e| &e.record)
    }

    pub fn count(&self, kind: RecordKind) -> usize {
        self.indexes.by_kind.get(&kind).map_or(0, Vec::len)
    }

    pub fn counts(&self) -> BTreeMap<RecordKind, usize> {
        RecordKind::ALL.iter().map(|&k| (k, self.count(k))).collect()
    }

    fn push_entry(&mut self, entry: Entry) {
        let idx = self.entries.len();
        self.indexes.add(idx, &entry.record);
        self.entries.push(entry);
    }

    /// Picks up entries appended by another writer since open.
    pub fn refresh(&mut self) -> Result<usize> {
        let mut file = File::open(&self.path).map_err(|source| self.io_err(source))?;
        file.seek(SeekFrom::Start(self.valid_len))
            .map_err(|source| self.io_err(source))?;
        let mut data = Vec::new();
        file.read_to_end(&mut data).map_err(|source| self.io_err(source))?;
        let parsed = parse_log(&data, self.valid_len, self.entries.len())?;
        let added = parsed.entries.len();
        if added > 0 {
            self.valid_len = parsed.valid_len;
        }
        self.warnings.extend(parsed.warnings);
        for e in parsed.entries {
            self.push_entry(e);
        }
        Ok(added)
    }

    fn io_err(&self, source: io::Error) -> StoreError {
        StoreError::Io {
            path: self.path.clone(),
            source,
        }
    }

    pub fn get(&self, key: &RecordKey) -> Option<&Record> {
        self.resolve(key.kind, &key.id)
    }

    pub fn entry(&self, key: &RecordKey) -> Option<&Entry> {
        self.indexes
            .by_id
            .get(&(key.kind, key.id.clone()))
            .map(|&i| &self.entries[i])
    }

    pub fn get_version(&self, kind: RecordKind, name: &str, version: &str) -> Option<&Record> {
        self.versions(kind, name)
            .find(|r| r.version().is_some_and(|v| v.as_str() == version))
    }

    /// All stored versions of `(kind, name)` in insertion order.
    pub fn versions<'a>(&'a self, kind: RecordKind, name: &str) -> impl Iterator<Item = &'a Record> {
        self.indexes
            .by_name
            .get(&(kind, name.to_owned()))
            .into_iter()
            .flatten()
            .map(|&i| &self.entries[i].record)
    }

    /// The maximal version of `(kind, name)` under the version order.
    pub fn latest(&self, kind: RecordKind, name: &str) -> Option<&Record> {
        self.versions(kind, name)
            .max_by(|a, b| match (a.version(), b.version()) {
                (Some(x), Some(y)) => x.cmp(y),
                _ => std::cmp::Ordering::Equal,
            })
    }

    /// Records of `kind` in insertion order, optionally narrowed by an
    /// indexed equality filter.
    pub fn scan<'a>(
        &'a self,
        kind: RecordKind,
        filter: Option<&ScanFilter>,
    ) -> Result<impl Iterator<Item = &'a Record> + 'a> {
        static EMPTY: Vec<usize> = Vec::new();
        let positions: Box<dyn Iterator<Item = usize> + 'a> = match filter {
            None => Box::new(self.indexes.by_kind.get(&kind).unwrap_or(&EMPTY).iter().copied()),
            Some(f) if !f.supported(kind) => {
                return Err(StoreError::UnsupportedFilter {
                    kind,
                    filter: f.label(),
                })
            }
            Some(ScanFilter::Name(n)) => Box::new(
                self.indexes
                    .by_name
                    .get(&(kind, n.clone()))
                    .unwrap_or(&EMPTY)
                    .iter()
                    .copied(),
            ),
            Some(ScanFilter::Task(t)) => Box::new(self.indexes.by_task.get(t).unwrap_or(&EMPTY).iter().copied()),
            Some(ScanFilter::DatasetId(d)) => Box::new(
                self.indexes
                    .by_dataset
                    .get(d)
                    .unwrap_or(&EMPTY)
                    .iter()
                    .copied()
                    .filter(move |&i| self.entries[i].record.kind() == kind),
            ),
        };
        Ok(positions.map(move |i| &self.entries[i].record))
    }

    /// Like [`StoreLog::scan`] with the kind given by name.
    pub fn scan_named<'a>(
        &'a self,
        kind: &str,
        filter: Option<&ScanFilter>,
    ) -> Result<impl Iterator<Item = &'a Record> + 'a> {
        let kind: RecordKind = kind.parse()?;
        self.scan(kind, filter)
    }

    pub fn put(&mut self, record: Record) -> Result<RecordKey> {
        self.put_with_status(record).map(|o| o.key)
    }

    /// Validates and appends `record`. Identical content is a no-op that
    /// returns the existing key.
    pub fn put_with_status(&mut self, record: Record) -> Result<PutOutcome> {
        let report = metamodel::validate(&record, self);
        if !report.is_valid() {
            return Err(StoreError::Validation(report));
        }
        let json = metamodel::encode(&record)?;
        let key = RecordKey::of(&record);

        if let Some(existing) = self.entry(&key) {
            return if existing.json == json {
                Ok(PutOutcome { key, created: false })
            } else {
                Err(StoreError::IdConflict(key))
            };
        }
        if let Some(name) = record.name() {
            let clash = self.versions(record.kind(), name).find(|r| {
                match (r.version(), record.version()) {
                    (Some(a), Some(b)) => a == b,
                    // unversioned kinds: names are unique
                    _ => true,
                }
            });
            if let Some(other) = clash {
                return Err(StoreError::VersionConflict {
                    kind: record.kind(),
                    name: name.to_owned(),
                    version: record.version().map(Version::to_string).unwrap_or_default(),
                    existing: RecordKey::of(other),
                });
            }
        }

        let offset = self.append_line(&json)?;
        self.push_entry(Entry { offset, record, json });
        Ok(PutOutcome { key, created: true })
    }

    fn append_line(&mut self, json: &str) -> Result<u64> {
        if self.file.is_none() {
            let file = OpenOptions::new()
                .create(true)
                .read(true)
                .write(true)
                .truncate(false)
                .open(&self.path)
                .map_err(|source| self.io_err(source))?;
            self.file = Some(file);
        }
        let valid_len = self.valid_len;
        let sync = self.sync;
        let file = self.file.as_mut().expect("opened above");
        let res = (|| {
            let len = file.metadata()?.len();
            if len != valid_len {
                // drop a torn tail before appending after it
                file.set_len(valid_len)?;
            }
            file.seek(SeekFrom::Start(valid_len))?;
            let line = format!("{} {}\n", checksum_hex(json), json);
            file.write_all(line.as_bytes())?;
            if sync {
                file.sync_data()?;
            }
            Ok::<u64, io::Error>(line.len() as u64)
        })();
        let written = res.map_err(|source| self.io_err(source))?;
        let offset = self.valid_len;
        self.valid_len += written;
        Ok(offset)
    }

    /// Re-reads the log and checks checksums, index consistency, reference
    /// closure and the per-kind uniqueness and count invariants.
    pub fn integrity_check(&self) -> IntegrityReport {
        let mut report = IntegrityReport {
            entries_checked: self.entries.len(),
            issues: Vec::new(),
        };
        let mut issue = |entry: Option<usize>, offset: Option<u64>, check: &str, msg: String| {
            report.issues.push(IntegrityIssue {
                entry,
                offset,
                check: check.to_owned(),
                message: msg,
            })
        };

        match fs::read(&self.path) {
            Ok(data) => {
                let data = &data[..data.len().min(self.valid_len as usize)];
                match parse_log(data, 0, 0) {
                    Ok(parsed) => {
                        if parsed.entries.len() != self.entries.len() {
                            issue(
                                None,
                                None,
                                "checksum",
                                format!(
                                    "log holds {} readable entries, store has {} loaded",
                                    parsed.entries.len(),
                                    self.entries.len()
                                ),
                            );
                        }
                        for (i, (disk, mem)) in parsed.entries.iter().zip(&self.entries).enumerate() {
                            if disk.json != mem.json || disk.offset != mem.offset {
                                issue(
                                    Some(i),
                                    Some(mem.offset),
                                    "checksum",
                                    "entry on disk differs from loaded entry".into(),
                                );
                            }
                        }
                    }
                    Err(StoreError::Corrupt { index, offset, reason }) => {
                        issue(Some(index), Some(offset), "checksum", reason)
                    }
                    Err(e) => issue(None, None, "checksum", e.to_string()),
                }
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound && self.entries.is_empty() => {}
            Err(e) => issue(None, None, "io", e.to_string()),
        }

        let mut rebuilt = Indexes::default();
        for (i, e) in self.entries.iter().enumerate() {
            rebuilt.add(i, &e.record);
        }
        if rebuilt != self.indexes {
            issue(None, None, "index", "secondary indexes out of sync with entries".into());
        }

        for (i, e) in self.entries.iter().enumerate() {
            let r = metamodel::validate(&e.record, self);
            for v in r.violations {
                issue(
                    Some(i),
                    Some(e.offset),
                    "validation",
                    format!("{} {}: {v}", e.record.kind(), e.record.id()),
                );
            }
            if let Some(m) = e.record.as_model() {
                let dup = self
                    .versions(RecordKind::Model, &m.name)
                    .filter(|r| r.version() == Some(&m.version))
                    .count();
                if dup > 1 {
                    issue(
                        Some(i),
                        Some(e.offset),
                        "uniqueness",
                        format!("model {}@{} stored {dup} times", m.name, m.version),
                    );
                }
            }
        }

        let mut instance_counts: HashMap<&str, u64> = HashMap::new();
        for inst in self.records().filter_map(Record::as_instance) {
            *instance_counts.entry(inst.dataset_id.id.as_str()).or_default() += 1;
        }
        for (i, e) in self.entries.iter().enumerate() {
            if let Some(ds) = e.record.as_dataset() {
                if let Some(&n) = instance_counts.get(ds.id.as_str()) {
                    if n != ds.instance_count {
                        issue(
                            Some(i),
                            Some(e.offset),
                            "instance_count",
                            format!(
                                "dataset {} declares {} instances, {} stored",
                                ds.id, ds.instance_count, n
                            ),
                        );
                    }
                }
            }
        }
        report
    }

    /// Latest version of every model name, in insertion order of first version.
    pub fn latest_models(&self) -> Vec<&metamodel::ModelRecord> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for m in self.records().filter_map(Record::as_model) {
            if seen.insert(m.name.as_str()) {
                if let Some(Record::Model(latest)) = self.latest(RecordKind::Model, &m.name) {
                    out.push(latest);
                }
            }
        }
        out
    }

    /// Latest stored version of the dataset called `name`.
    pub fn latest_dataset(&self, name: &str) -> Option<&metamodel::DatasetRecord> {
        self.latest(RecordKind::Dataset, name).and_then(Record::as_dataset)
    }
}

impl Resolver for StoreLog {
    fn resolve(&self, kind: RecordKind, id: &str) -> Option<&Record> {
        self.indexes
            .by_id
            .get(&(kind, id.to_owned()))
            .map(|&i| &self.entries[i].record)
    }
}

/// Orders `a` and `b` by version; unversioned records compare equal.
pub fn version_order(a: &Record, b: &Record) -> std::cmp::Ordering {
    match (a.version(), b.version()) {
        (Some(x), Some(y)) => compare_versions(x.as_str(), y.as_str()),
        _ => std::cmp::Ordering::Equal,
    }
}
