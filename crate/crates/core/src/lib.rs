//! Metadata registry for ML model zoos.
//!
//! Records follow a four-package meta-model ([`metamodel`]), live in an
//! append-only checksummed log ([`store`]), and are queried through MQL
//! ([`mql`]). The [`composer`] picks one model per task of an inference
//! pipeline under latency and memory budgets, and [`ingest`] covers the
//! three acquisition paths: manual entry, external zoo cards and
//! evaluation runs.

pub mod compare;
pub mod composer;
pub mod ingest;
pub mod metamodel;
pub mod mql;
pub mod seed;
pub mod store;

pub use metamodel::{Record, RecordKind};
pub use store::{RecordKey, StoreLog};

/// Composition instance over floating-point metrics.
pub type Problem = composer::Problem<f64>;
/// Composition instance over exact rationals.
pub type ExactProblem = composer::Problem<num_rational::BigRational>;
pub type Plan = composer::Plan<f64>;
pub type ExactPlan = composer::Plan<num_rational::BigRational>;
