//! `mz`: scripted access to a registry store.
//!
//! Exit codes: 0 success, 1 other failure, 2 validation failure, 3 query
//! syntax or analysis error, 4 infeasible composition, 5 store corruption.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use mz_core::compare::{self, Matrix};
use mz_core::composer::{self, Composition, CompositionRequest};
use mz_core::ingest::{self, CrawlSummary, IngestError, SimulatedExecutor};
use mz_core::metamodel::Record;
use mz_core::mql::{self, EvalContext, MqlError};
use mz_core::store::StoreError;
use mz_core::StoreLog;

pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const QUERY: i32 = 3;
    pub const INFEASIBLE: i32 = 4;
    pub const CORRUPT: i32 = 5;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "mz", version, about = "Model-zoo metadata registry")]
pub struct Cli {
    /// Store directory.
    #[arg(long, env = "MZ_STORE", global = true)]
    pub store: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table", global = true)]
    pub format: Format,
    /// More log output (-v, -vv).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest a record envelope, or a JSON array of them.
    Ingest { file: PathBuf },
    /// Run an MQL query.
    Query { mql: String },
    /// Parse a query and print its canonical form. Needs no store.
    Parse { mql: String },
    /// Crawl recorded cards of an external zoo.
    Crawl {
        zoo: String,
        #[arg(long)]
        fixtures: PathBuf,
    },
    /// Run the simulated executor and store the resulting evaluation run.
    Eval {
        model: String,
        dataset: String,
        hardware: String,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Solve a composition request file.
    Compose {
        plan: PathBuf,
        /// Print the Pareto frontier instead of one plan.
        #[arg(long)]
        pareto: bool,
    },
    /// Metric matrix for the given model ids.
    Compare {
        #[arg(required = true)]
        ids: Vec<String>,
    },
    /// Verify store integrity.
    Check,
    /// Load the bundled seed zoo.
    Seed,
    /// List the canned example queries. Needs no store.
    Canned,
}

/// Runs one command, writing results to `out` and diagnostics to `err`.
/// Returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            match e.downcast_ref::<StoreError>() {
                Some(StoreError::Corrupt { .. }) => exit::CORRUPT,
                _ => exit::FAILURE,
            }
        }
    }
}

fn open_store(cli: &Cli) -> anyhow::Result<StoreLog> {
    let path = cli
        .store
        .as_ref()
        .ok_or_else(|| anyhow!("no store given; pass --store or set MZ_STORE"))?;
    let store = StoreLog::open(path)?;
    for w in store.warnings() {
        log::warn!("{w}");
    }
    Ok(store)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit_json(out: &mut dyn Write, value: &impl Serialize) -> anyhow::Result<()> {
    writeln!(out, "{}", serde_json::to_string(value)?)?;
    Ok(())
}

fn query_error(err: &mut dyn Write, format: Format, e: &MqlError) -> anyhow::Result<i32> {
    match format {
        Format::Json => emit_json(
            err,
            &json!({ "code": e.code(), "message": e.to_string(), "detail": e.detail() }),
        )?,
        Format::Table => writeln!(err, "{}: {e}", e.code())?,
    }
    Ok(exit::QUERY)
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    let format = cli.format;
    match &cli.command {
        Command::Parse { mql } => match mql::parse_text(mql) {
            Ok(q) => {
                let text = mql::pretty_print(&q);
                match format {
                    Format::Json => emit_json(out, &json!({ "query": text }))?,
                    Format::Table => writeln!(out, "{text}")?,
                }
                Ok(exit::OK)
            }
            Err(e) => query_error(err, format, &e),
        },
        Command::Canned => {
            match format {
                Format::Json => emit_json(out, &mql::CANNED_QUERIES)?,
                Format::Table => {
                    for q in mql::CANNED_QUERIES {
                        writeln!(out, "Q{}  {}\n    {}", q.id, q.question, q.mql)?;
                    }
                }
            }
            Ok(exit::OK)
        }
        Command::Query { mql: text } => {
            let store = open_store(cli)?;
            let res = match mql::run(text, EvalContext::new(&store)) {
                Ok(r) => r,
                Err(e) => return query_error(err, format, &e),
            };
            match format {
                Format::Json => emit_json(
                    out,
                    &json!({ "count": res.count, "plan": res.plan, "results": res.results }),
                )?,
                Format::Table => write!(out, "{}", results_table(&res.results))?,
            }
            Ok(exit::OK)
        }
        Command::Ingest { file } => {
            let value: serde_json::Value = read_json(file)?;
            let items = match value {
                serde_json::Value::Array(items) => items,
                one => vec![one],
            };
            let mut store = open_store(cli)?;
            let mut keys = Vec::new();
            for (i, item) in items.into_iter().enumerate() {
                let record: Record =
                    serde_json::from_value(item).with_context(|| format!("record {i} is not a valid envelope"))?;
                match ingest::ingest_manual_with_status(&mut store, record) {
                    Ok(o) => keys.push(o),
                    Err(IngestError::Store(StoreError::Validation(report))) => {
                        writeln!(err, "record {i} failed validation:")?;
                        for v in &report.violations {
                            writeln!(err, "  {v}")?;
                        }
                        return Ok(exit::VALIDATION);
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            match format {
                Format::Json => emit_json(out, &keys)?,
                Format::Table => {
                    for o in &keys {
                        let what = if o.created { "stored" } else { "unchanged" };
                        writeln!(out, "{what} {}", o.key)?;
                    }
                }
            }
            Ok(exit::OK)
        }
        Command::Crawl { zoo, fixtures } => {
            let adapter = ingest::adapter(zoo).ok_or_else(|| IngestError::UnknownZoo(zoo.clone()))?;
            let mut store = open_store(cli)?;
            let summary = ingest::crawl(&mut store, adapter.as_ref(), fixtures)?;
            match format {
                Format::Json => emit_json(out, &summary)?,
                Format::Table => write!(out, "{}", crawl_text(&summary))?,
            }
            Ok(exit::OK)
        }
        Command::Eval {
            model,
            dataset,
            hardware,
            manifest,
            seed,
        } => {
            let exec = SimulatedExecutor::load(manifest)?;
            let mut store = open_store(cli)?;
            let key = match ingest::run_evaluation(&mut store, &exec, model, dataset, hardware, *seed) {
                Ok(k) => k,
                Err(IngestError::Store(StoreError::Validation(report))) => {
                    writeln!(err, "executor output failed validation: {report}")?;
                    return Ok(exit::VALIDATION);
                }
                Err(e) => return Err(e.into()),
            };
            let record = store.get(&key).cloned().context("stored run vanished")?;
            match format {
                Format::Json => emit_json(out, &record)?,
                Format::Table => {
                    let run = record.as_evaluation().context("not a run")?;
                    writeln!(out, "stored {key}")?;
                    let rows = run
                        .metrics
                        .iter()
                        .map(|m| vec![m.name.clone(), m.value.to_string()])
                        .collect();
                    write!(out, "{}", table(&["METRIC", "VALUE"], rows))?;
                }
            }
            Ok(exit::OK)
        }
        Command::Compose { plan, pareto } => {
            let req: CompositionRequest = read_json(plan)?;
            let store = open_store(cli)?;
            if *pareto {
                let plans = composer::compose_pareto(&store, &req)?;
                match format {
                    Format::Json => emit_json(out, &plans)?,
                    Format::Table => {
                        let rows = plans
                            .iter()
                            .map(|p| {
                                vec![
                                    p.score.to_string(),
                                    p.latency_ms.to_string(),
                                    p.memory_mb.to_string(),
                                    if p.feasible { "yes" } else { "no" }.into(),
                                    p.model_ids().join(" -> "),
                                ]
                            })
                            .collect();
                        write!(
                            out,
                            "{}",
                            table(&["SCORE", "LATENCY_MS", "MEMORY_MB", "FEASIBLE", "MODELS"], rows)
                        )?;
                    }
                }
                return Ok(exit::OK);
            }
            let c = composer::compose(&store, &req)?;
            match format {
                Format::Json => emit_json(out, &c)?,
                Format::Table => write!(out, "{}", composition_text(&c))?,
            }
            Ok(if c.plan.is_some() { exit::OK } else { exit::INFEASIBLE })
        }
        Command::Compare { ids } => {
            let store = open_store(cli)?;
            let m = compare::compare(&store, ids)?;
            match format {
                Format::Json => emit_json(out, &m)?,
                Format::Table => write!(out, "{}", matrix_table(&m))?,
            }
            Ok(exit::OK)
        }
        Command::Check => {
            let store = open_store(cli)?;
            let report = store.integrity_check();
            match format {
                Format::Json => emit_json(out, &report)?,
                Format::Table => {
                    writeln!(out, "entries checked: {}", report.entries_checked)?;
                    writeln!(out, "issues: {}", report.issues.len())?;
                    for i in &report.issues {
                        let at = i.entry.map(|e| format!(" entry {e}")).unwrap_or_default();
                        writeln!(out, "  [{}]{at}: {}", i.check, i.message)?;
                    }
                }
            }
            Ok(if report.is_clean() { exit::OK } else { exit::CORRUPT })
        }
        Command::Seed => {
            let mut store = open_store(cli)?;
            let before = store.len();
            mz_core::seed::load_seed(&mut store)?;
            let added = store.len() - before;
            match format {
                Format::Json => emit_json(out, &json!({ "added": added, "total": store.len() }))?,
                Format::Table => writeln!(out, "added {added} records ({} total)", store.len())?,
            }
            Ok(exit::OK)
        }
    }
}

/// Left-aligned columns separated by two spaces, with a dashed rule.
pub fn table(headers: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for r in &rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i + 1 == cells.len() {
                s.push_str(c);
            } else {
                s.push_str(&format!("{c:<w$}  "));
            }
        }
        s.trim_end().to_owned() + "\n"
    };
    let mut out = line(headers.to_vec());
    out += &line(
        widths
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .iter()
            .map(String::as_str)
            .collect(),
    );
    let n = rows.len();
    for r in &rows {
        out += &line(r.iter().map(String::as_str).collect());
    }
    out += &format!("({n} row{})\n", if n == 1 { "" } else { "s" });
    out
}

fn results_table(results: &[&Record]) -> String {
    let datasets = results.first().is_some_and(|r| r.as_dataset().is_some());
    if datasets {
        let rows = results
            .iter()
            .filter_map(|r| r.as_dataset())
            .map(|d| {
                vec![
                    d.id.clone(),
                    d.name.clone(),
                    d.version.to_string(),
                    serde_json::to_value(d.modality)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_owned))
                        .unwrap_or_default(),
                    d.instance_count.to_string(),
                ]
            })
            .collect();
        return table(&["ID", "NAME", "VERSION", "MODALITY", "INSTANCES"], rows);
    }
    let rows = results
        .iter()
        .filter_map(|r| r.as_model())
        .map(|m| vec![m.id.clone(), m.name.clone(), m.version.to_string(), m.task.clone()])
        .collect();
    table(&["ID", "NAME", "VERSION", "TASK"], rows)
}

fn matrix_table(m: &Matrix) -> String {
    let mut headers = vec!["METRIC", "DATASET", "HARDWARE", "SLICE"];
    headers.extend(m.models.iter().map(String::as_str));
    let rows = m
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![
                r.key.metric.clone(),
                format!("{}@{}", r.key.dataset, r.key.dataset_version),
                r.key.hardware.clone(),
                r.key.slice.clone().unwrap_or_else(|| "-".into()),
            ];
            row.extend(r.values.iter().map(|v| v.map_or_else(|| "-".into(), |x| x.to_string())));
            row
        })
        .collect();
    table(&headers, rows)
}

fn crawl_text(s: &CrawlSummary) -> String {
    let mut out = format!(
        "zoo: {}\ncards: {}\nstored: {} ({} unchanged)\nrecords created: {}\nquarantined: {}\n",
        s.zoo,
        s.cards,
        s.stored,
        s.unchanged,
        s.records_created,
        s.quarantined.len()
    );
    for q in &s.quarantined {
        let name = q.file.file_name().map(|f| f.to_string_lossy()).unwrap_or_default();
        out += &format!("  {name}: {}\n", q.reason);
    }
    out
}

fn composition_text(c: &Composition) -> String {
    let mut out = format!("status: {}\nhardware: {}\n", c.status, c.hardware);
    if let Some(plan) = &c.plan {
        let rows = plan
            .assignment
            .iter()
            .map(|a| vec![a.node.clone(), a.model_id.clone(), a.name.clone(), a.version.clone()])
            .collect();
        out += &table(&["NODE", "MODEL", "NAME", "VERSION"], rows);
        out += &format!(
            "score: {}  latency_ms: {}  memory_mb: {}\n",
            plan.score, plan.latency_ms, plan.memory_mb
        );
    }
    if let Some(inf) = &c.infeasible {
        out += &format!("{inf}\n");
    }
    for r in &c.candidates {
        out += &format!(
            "node {}: {} candidates, {} excluded\n",
            r.node,
            r.candidates.len(),
            r.excluded.len()
        );
    }
    out
}
