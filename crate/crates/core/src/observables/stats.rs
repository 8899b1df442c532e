use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::hilbert::{FockOperator, QuantumState};

/// Bootstrap standard errors of ensemble phonon statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StandardErrors {
    pub mean_n: f64,
    pub mean_n2: f64,
    pub fano: Option<f64>,
    pub g2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhononStats {
    pub mean_n: f64,
    pub mean_n2: f64,
    /// `(⟨n²⟩ − ⟨n⟩²) / ⟨n⟩`, undefined for an empty mode.
    pub fano: Option<f64>,
    /// `(⟨n²⟩ − ⟨n⟩) / ⟨n⟩²`, equal to `1 + (F − 1)/⟨n⟩`.
    pub g2: Option<f64>,
    pub errors: Option<StandardErrors>,
}

impl PhononStats {
    pub fn from_moments(mean_n: f64, mean_n2: f64) -> Self {
        let (fano, g2) = if mean_n > 1e-300 {
            (
                Some((mean_n2 - mean_n * mean_n) / mean_n),
                Some((mean_n2 - mean_n) / (mean_n * mean_n)),
            )
        } else {
            (None, None)
        };
        Self {
            mean_n,
            mean_n2,
            fano,
            g2,
            errors: None,
        }
    }

    pub fn with_errors(self, errors: StandardErrors) -> Self {
        Self {
            errors: Some(errors),
            ..self
        }
    }
}

/// Phonon statistics of `state` for the number operator `number` (which must
/// already be expressed in the state's frame).
pub fn phonon_stats(state: &QuantumState, number: &FockOperator) -> Result<PhononStats> {
    let n = state.expect(number)?.re;
    let n2 = state.expect(&number.mul(number)?)?.re;
    Ok(PhononStats::from_moments(n, n2))
}

/// `½‖a − b‖₁` for Hermitian matrices.
pub fn trace_distance(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let diff = a - b;
    let diff = (&diff + diff.adjoint()) * Complex64::new(0.5, 0.0);
    0.5 * SymmetricEigen::new(diff).eigenvalues.iter().map(|v| v.abs()).sum::<f64>()
}

/// Sample standard deviation, `None` for fewer than two finite values.
pub(crate) fn sample_std(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.len() < 2 {
        return None;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    Some(var.sqrt())
}
