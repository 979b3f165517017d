//! Config loading and subcommands for the `stirap` binary.

pub mod commands;
pub mod config;
pub mod expr;
