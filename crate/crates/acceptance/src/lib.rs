//! Acceptance checks live in `tests/acceptance.rs`. Run with
//! `cargo test -p fstlab-acceptance --test acceptance`.
