//! Purity-enhanced collective entanglement witnesses for two-qubit states.
//!
//! The numeric layers (`linalg`, `states`, `channel`, `collective`,
//! `witnesses`, `svm`) are generic over [`Real`]; the aliases below pin them
//! to `f64`, which is what the dataset and evaluation pipeline use.

pub mod channel;
pub mod collective;
pub mod dataset;
pub mod eval;
pub mod linalg;
pub mod noise;
pub mod pipeline;
pub mod reference;
pub mod rng;
pub mod scalar;
pub mod states;
pub mod svm;
pub mod witnesses;

pub use scalar::Real;

pub type Matrix = linalg::ComplexMatrix<f64>;
pub type Matrix32 = linalg::ComplexMatrix<f32>;
pub type State = states::DensityMatrix<f64>;
pub type State32 = states::DensityMatrix<f32>;
pub type Channel = channel::KrausChannel<f64>;
pub type Measurement = collective::MeasurementOperator<f64>;
pub type Record = witnesses::WitnessRecord<f64>;
pub type Svc = svm::TrainedSvc<f64>;
pub type Ensemble = svm::VotingEnsemble<f64>;
