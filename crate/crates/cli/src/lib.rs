//! Library surface of the `mrb` binary: configuration parsing and command
//! implementations, reused by the acceptance suite.

pub mod commands;
pub mod config;
