//! Acceptance suite host crate; the checks live in `tests/acceptance.rs`.
