//! Host crate for the acceptance run in `tests/acceptance.rs`.
//!
//! It is a separate package so the acceptance target runs after every other
//! test in `cargo test --workspace`, even when a criterion fails.
