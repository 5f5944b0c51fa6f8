//! Record types of the model-zoo meta-model, grouped as in its four
//! packages (configuration, dataset, execution, evaluation), together with
//! validation and the canonical encoding used for storage.

mod canonical;
mod records;
mod validate;
mod version;

pub use canonical::{canonical_bytes, canonical_string, decode, encode, write_canonical, CodecError};
pub use records::*;
pub use validate::{validate, validate_metric, Empty, Layered, Resolver, ValidationReport, Violation};
pub use version::{compare_versions, Version};
