//! Holds no code. The suite lives in `tests/acceptance.rs` and runs with
//! `cargo test -p mz-acceptance --test acceptance`.
