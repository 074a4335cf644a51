//! Library side of the `tsgraph` command-line tool.

pub mod commands;
pub mod data;
pub mod error;

pub use commands::{
    cmd_evaluate, cmd_learn, cmd_predict, cmd_simulate, cmd_spectra, replay, EvaluateConfig, LearnConfig,
    PairSelection, PredictConfig, SpectraConfig,
};
pub use data::{ingest_csv, log_return_transform, Preprocess, Smoothing};
pub use error::{CliError, Result};
