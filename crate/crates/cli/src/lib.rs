//! Configuration loading, field dumps, sweep records and the drivers behind
//! the `choquard` binary.

pub mod config;
pub mod drivers;
pub mod io;
pub mod records;
