pub mod analytics;
pub mod cli;
pub mod error;
pub mod hilbert;
pub mod model;
pub mod observables;
pub mod ode;
pub mod solvers;
pub mod sparse;

pub use error::{Error, Result};
pub use num_complex::Complex64;
