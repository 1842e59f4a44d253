//! Std companion to `biphoton-core`: output formats and the subcommand
//! implementations behind the `biphoton-lab` binary.

pub mod commands;
pub mod formats;
