//! Acceptance criteria for the hybrid precoding workspace; see `tests/acceptance.rs`.
