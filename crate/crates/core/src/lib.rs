//! Visitor-behaviour analytics for museum audio-guide logs.

pub mod flow;
pub mod ingest;
pub mod museum;
pub mod scalar;
pub mod segmentation;
pub mod stats;
pub mod synth;
pub mod text;
pub mod tours;

pub use scalar::Scalar;

pub type DistanceMatrix = segmentation::DistanceMatrix<f64>;
pub type Dendrogram = segmentation::Dendrogram<f64>;
pub type ClusterSolution = segmentation::ClusterSolution<f64>;
pub type TransitionModel = flow::TransitionModel<f64>;
pub type PenaltyParams = flow::PenaltyParams<f64>;
pub type PenalizedDistanceField = flow::PenalizedDistanceField<f64>;
