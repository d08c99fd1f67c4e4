//! Library surface of the scenario runner; the `conic` binary is a thin
//! wrapper over these modules.

pub mod artifacts;
pub mod config;
pub mod plots;
pub mod runner;
pub mod scenarios;
