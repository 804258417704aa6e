//! Library side of the `wcop` binary: configuration, CSV input and output,
//! and the subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod study;
