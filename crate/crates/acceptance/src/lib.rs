//! Acceptance suite for `proxdiff`; the checks live in `tests/acceptance.rs`.
//!
//! Run with `cargo test -p proxdiff-acceptance`, optionally followed by
//! `-- 3 4` to select criteria. Criterion 11 runs the `proxdiff` binary
//! from the same target directory, so build it first when running this
//! package alone: `cargo build -p proxdiff`.
