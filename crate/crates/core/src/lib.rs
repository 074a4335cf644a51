//! Graphical models for multivariate stationary time series.
//!
//! Series are summarised by (smoothed) periodograms, scored against
//! decomposable graphs with a hyper inverse Wishart prior on the spectral
//! density under the Whittle likelihood, and searched with stochastic
//! model-space exploration.

pub mod error;
pub mod graphs;
pub mod likelihood;
pub mod linalg;
pub mod search;
pub mod simulate;
pub mod spectral;

pub use error::{Error, Result};
pub use graphs::{DecomposableGraph, GraphPriorConfig};
pub use likelihood::{HiwPrior, ScoredGraph, Scorer};
pub use linalg::CMatrix;
pub use search::{fincs_run, mh_sampler, SearchConfig, SearchResult};
pub use simulate::{SimConfig, VarModel};
pub use spectral::{Series, SpectralStatistics, TimeSeriesPanel};
