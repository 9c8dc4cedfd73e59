//! Sampling-based path replanning during execution. A manager runs a
//! trajectory execution loop, a collision checking loop and a replanning
//! loop over shared state, either on threads against the wall clock or
//! single-threaded on a virtual clock for reproducible runs.
//!
//! The `bench` module loads scenario files, runs seeded batches and replays
//! traces with a collision audit; the `replankit` binary wraps it.

// Validation is written as `!(x > 0.0)` on purpose so that NaN fails it.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod clock;
pub mod cspace;
pub mod error;
pub mod graph;
pub mod manager;
pub mod replanners;
pub mod scene;
pub mod solvers;
pub mod trace;
pub mod trajectory;
