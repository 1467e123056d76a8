//! Experiment harness, file formats, plots and the command line for the
//! hawk-dove crossing game. The simulation itself lives in `hawkdove-core`.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod harness;
pub mod plot;

pub use error::{Error, ErrorKind};
