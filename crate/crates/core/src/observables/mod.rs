//! Phonon statistics and phase-space diagnostics.

pub mod stats;
pub mod wigner;

pub use stats::{phonon_stats, trace_distance, PhononStats, StandardErrors};
pub use wigner::{wigner, GridSpec, WignerGrid};
