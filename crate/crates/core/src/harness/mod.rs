//! Fixed-tick experiment orchestration: configuration, seeded noise streams,
//! the monitoring/command state machine, traces and batch sweeps.

pub mod config;
pub mod experiment;
pub mod filter_trace;
pub mod rng;
pub mod sweep;
pub mod trace;
