//! Supervised random walks for link prediction.
//!
//! A personalized PageRank walk whose edge strengths are learned from edge
//! features, so that nodes which later link to the seed outrank those that
//! do not.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod evalkit;
pub mod graph_model;
pub mod io;
pub mod loss;
pub mod pipeline;
pub mod strength;
pub mod synthgen;
pub mod trainer;
pub mod walker;

#[cfg(test)]
mod test_support;

pub use config::RunConfig;
pub use error::{Result, SrwError};
pub use evalkit::{Baseline, ExperimentConfig, ExperimentResult, MethodResult};
pub use graph_model::{EdgeType, FeatureTransform, Graph, GraphBuilder, NodeId, TrainingInstance};
pub use loss::LossSpec;
pub use strength::{EdgeTypeMode, Model, StrengthFamily};
pub use synthgen::{SynthConfig, TargetMode};
pub use trainer::{TrainConfig, TrainReport};
pub use walker::PowerConfig;
