//! Acceptance checks for the simulator live in `tests/acceptance.rs`.
