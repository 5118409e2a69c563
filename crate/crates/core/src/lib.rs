//! Trajectory forecasting under squared loss: path simulation, windowing,
//! baseline predictors, risk estimation, Monte-Carlo bound checks and an
//! experiment harness.

pub mod bounds;
pub mod error;
pub mod harness;
pub mod predictors;
pub mod risk;
pub mod rng;
pub mod sim;
pub mod windows;

pub use error::{Error, ErrorClass, Result, RowProblem};
pub use predictors::{Forecast, Forecaster, Predictor, PredictorKind};
pub use risk::{Estimate, RiskReport};
pub use sim::{Path, ProcessKind, ProcessModel};
pub use windows::{Dataset, SplitDataset, WindowPair};
