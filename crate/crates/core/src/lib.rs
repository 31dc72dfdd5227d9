//! Parametric t-SNE whose embedding map is a variational quantum circuit,
//! simulated as a dense statevector.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix it to `f64`, which is what the experiments and the file
//! formats use.

pub mod ansatz;
pub mod datagen;
pub mod error;
pub mod landscape;
pub mod optimizer;
pub mod quantum;
pub mod scalar;
pub mod similarity;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Real;

pub type StateVector64 = quantum::StateVector<f64>;
pub type CircuitProgram64 = quantum::CircuitProgram<f64>;
pub type GateOp64 = quantum::GateOp<f64>;
pub type AnsatzSpec64 = ansatz::AnsatzSpec<f64>;
pub type Ansatz64 = ansatz::Ansatz<f64>;
pub type DistanceMatrix64 = similarity::DistanceMatrix<f64>;
pub type SimilarityMatrix64 = similarity::SimilarityMatrix<f64>;
pub type PerplexityConfig64 = similarity::PerplexityConfig<f64>;
pub type AdamState64 = optimizer::AdamState<f64>;
pub type SamConfig64 = optimizer::SamConfig<f64>;
pub type Dataset64 = trainer::Dataset<f64>;
pub type RunConfig64 = trainer::RunConfig<f64>;
pub type Problem64 = trainer::Problem<f64>;
pub type EmbeddingRun64 = trainer::EmbeddingRun<f64>;
pub type TrajectoryMatrix64 = landscape::TrajectoryMatrix<f64>;
pub type LandscapeGrid64 = landscape::LandscapeGrid<f64>;

pub type StateVector32 = quantum::StateVector<f32>;
pub type RunConfig32 = trainer::RunConfig<f32>;
