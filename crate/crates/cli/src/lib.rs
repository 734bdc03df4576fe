//! Command-line driver for the debate pipeline.

pub mod commands;
pub mod config;
