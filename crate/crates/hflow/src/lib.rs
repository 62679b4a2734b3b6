//! IO, file formats, and run orchestration around `hflow-core`.

pub mod config;
pub mod formats;
pub mod runner;
