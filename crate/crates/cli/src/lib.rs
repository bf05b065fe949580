//! Command-line front end: state files, condition reports and the
//! subcommands behind the `keyrate` binary.

pub mod commands;
pub mod report;
pub mod statefile;
