//! Exact quantum solutions: Liouvillian assembly, direct steady state, and
//! quantum-jump trajectory ensembles.

pub mod banded;
pub mod liouvillian;
pub mod mcwf;
pub mod steady;

pub use liouvillian::{liouvillian, liouvillian_reduced, Liouvillian, PairBasis};
pub use mcwf::{mcwf_ensemble, EnsembleStats, TrajectoryConfig, TrajectoryMoments};
pub use steady::{steady_state, steady_state_with, SolverDiagnostics, SteadyStateConfig, SteadyStateResult};
