//! Library side of the `msrg` command-line tool: file formats,
//! configuration, fit artifacts and the oracle suites behind `validate`.

pub mod artifact;
pub mod config;
pub mod io;
pub mod validate;
