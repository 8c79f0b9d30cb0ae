//! Replication harness, file formats, configuration and verification
//! suites on top of `netsim-core`.

pub mod config;
pub mod experiments;
pub mod formats;
pub mod sampling;
pub mod stats;
pub mod verify;
