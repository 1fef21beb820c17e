//! Command line, file formats and the Monte Carlo oracle on top of
//! `fnvcg-core`.

pub mod cli;
pub mod config;
pub mod montecarlo;
pub mod report;
