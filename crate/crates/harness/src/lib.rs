//! Experiment runner: configuration, the per-frame pipeline, Monte Carlo
//! sweeps and the command-line subcommands.

pub mod commands;
pub mod config;
pub mod output;
pub mod pipeline;
pub mod sweep;
