//! Gait-impairment classification from pose keypoint time series.

pub mod balance;
pub mod error;
pub mod evaluation;
pub mod explain;
pub mod features;
pub mod ingest;
pub mod learners;
pub mod matrix;
pub mod pipeline;
pub mod pose;
pub mod preprocess;
pub mod seed;
pub mod synth;
pub mod select;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use pose::{Direction, GaitClass, View};
