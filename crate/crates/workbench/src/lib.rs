//! Command-line workbench around `reconcile-core`.
//!
//! A run is described by a TOML [`config::RunConfig`]; every artifact it
//! writes starts with a header naming the tool version, the seed and the
//! SHA-256 of the effective configuration. Identical configuration and seed
//! reproduce every file byte for byte.

pub mod cli;
pub mod commands;
pub mod config;
pub mod output;
pub mod panel;
