//! Sparse recovery by weighted l1 minimization with prior support
//! information.

pub mod bounds;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod rip;
pub mod sharpness;
pub mod solvers;

pub use bounds::{evaluate_guarantee, ConstraintKind, GuaranteeInputs, GuaranteeReport};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, TrialRecord};
pub use linalg::{DenseMatrix, DenseVector};
pub use model::{
    EstimateProfile, IndexSet, NoiseKind, NoiseSpec, Rational, SignalInstance, SupportEstimate,
    WeightVector,
};
pub use rip::{RicValue, RocValue};
pub use sharpness::{CounterexampleInstance, SharpnessReport};
pub use solvers::{SolveConfig, SolveStatus, SolverResult};
