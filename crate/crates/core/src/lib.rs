//! Exact Lasso reformulation of deep narrow absolute-value networks.
//!
//! The library builds dictionaries of reflection-anchored features, solves
//! the Lasso over them, turns solutions back into networks and checks the
//! geometric structure of the result.

pub mod cli;
pub mod data;
pub mod dict;
pub mod error;
pub mod geoalg;
pub mod lasso;
pub mod network;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Dataset = data::Dataset<f64>;
pub type FeatureSpec = dict::FeatureSpec<f64>;
pub type DictColumn = dict::DictColumn<f64>;
pub type Dictionary = dict::Dictionary<f64>;
pub type LassoProblem = lasso::LassoProblem<f64>;
pub type LassoSolution = lasso::LassoSolution<f64>;
pub type NetworkParams = network::NetworkParams<f64>;
pub type StandardParams = network::StandardParams<f64>;
