//! File formats, configuration and the command-line driver for the
//! landslide-erosion Monte Carlo simulator. The algorithms live in
//! `slem-core`; this crate owns everything that touches the filesystem.

pub mod ascii;
pub mod cli;
pub mod config;
pub mod engine;
pub mod report;

pub use cli::{run, Cli};
