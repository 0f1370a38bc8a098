//! File formats and command-line front end for the `fhpmip-core` simulator.

pub mod config;
pub mod output;
pub mod runner;
