//! File formats, cached parallel sweeps, reports and the command line on top
//! of `cge-core`.

pub mod cache;
pub mod commands;
pub mod config;
pub mod format;
pub mod report;

pub use cge_core as core;
