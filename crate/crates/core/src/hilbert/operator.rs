use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Mode, ModeDims};
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Largest total dimension for which [`FockOperator::to_dense`] is allowed.
pub const DENSE_LIMIT: usize = 256;

/// Sparse operator on the truncated three-mode space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    dims: ModeDims,
    matrix: SparseMatrix,
}

fn single_mode_destroy(n: usize) -> SparseMatrix {
    let t = (1..n)
        .map(|k| (k - 1, k, Complex64::new((k as f64).sqrt(), 0.0)))
        .collect();
    SparseMatrix::from_triplets(n, n, t)
}

impl FockOperator {
    pub fn from_matrix(dims: ModeDims, matrix: SparseMatrix) -> Result<Self> {
        let d = dims.total();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, dims {} need {d}x{d}",
                matrix.nrows(),
                matrix.ncols(),
                dims
            )));
        }
        Ok(Self { dims, matrix })
    }

    /// Lifts a single-mode matrix to the full space as `1 ⊗ … ⊗ m ⊗ … ⊗ 1`.
    pub fn embed(dims: ModeDims, mode: Mode, local: &SparseMatrix) -> Result<Self> {
        let n = dims.cutoff(mode);
        if local.nrows() != n || local.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "local operator is {}x{}, mode {mode} has cutoff {n}",
                local.nrows(),
                local.ncols()
            )));
        }
        let mut factors = [
            SparseMatrix::identity(dims.n_a),
            SparseMatrix::identity(dims.n_b),
            SparseMatrix::identity(dims.n_c),
        ];
        factors[mode.position()] = local.clone();
        let matrix = factors[0].kron(&factors[1]).kron(&factors[2]);
        Ok(Self { dims, matrix })
    }

    pub fn destroy(dims: ModeDims, mode: Mode) -> Self {
        Self::embed(dims, mode, &single_mode_destroy(dims.cutoff(mode)))
            .expect("cutoff matches by construction")
    }

    pub fn create(dims: ModeDims, mode: Mode) -> Self {
        Self::destroy(dims, mode).adjoint()
    }

    pub fn number(dims: ModeDims, mode: Mode) -> Self {
        let diag: Vec<Complex64> = (0..dims.cutoff(mode))
            .map(|k| Complex64::new(k as f64, 0.0))
            .collect();
        Self::embed(dims, mode, &SparseMatrix::diagonal(&diag)).expect("cutoff matches by construction")
    }

    pub fn identity(dims: ModeDims) -> Self {
        Self {
            dims,
            matrix: SparseMatrix::identity(dims.total()),
        }
    }

    pub fn zero(dims: ModeDims) -> Self {
        Self {
            dims,
            matrix: SparseMatrix::zeros(dims.total(), dims.total()),
        }
    }

    pub fn dims(&self) -> ModeDims {
        self.dims
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> SparseMatrix {
        self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.matrix.get(i, j)
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!(
                "operator dims {} vs {}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }

    pub fn adjoint(&self) -> Self {
        Self {
            dims: self.dims,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        Ok(Self {
            dims: self.dims,
            matrix: self.matrix.matmul(&other.matrix)?,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        Ok(Self {
            dims: self.dims,
            matrix: self.matrix.add(&other.matrix)?,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        Ok(Self {
            dims: self.dims,
            matrix: self.matrix.sub(&other.matrix)?,
        })
    }

    pub fn add_scaled(&self, other: &Self, s: Complex64) -> Result<Self> {
        self.check_dims(other)?;
        Ok(Self {
            dims: self.dims,
            matrix: self.matrix.add_scaled(&other.matrix, s)?,
        })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dims: self.dims,
            matrix: self.matrix.scale(s),
        }
    }

    /// `self + z·1`
    pub fn shift(&self, z: Complex64) -> Self {
        let id = SparseMatrix::identity(self.dims.total());
        Self {
            dims: self.dims,
            matrix: self.matrix.add_scaled(&id, z).expect("same shape"),
        }
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.max_abs()
    }

    /// Hermiticity holds when `max|O − O†| < 1e-12·max|O|`.
    pub fn is_hermitian(&self) -> bool {
        let scale = self.max_abs();
        self.matrix.hermiticity_defect() <= 1e-12 * scale
    }

    pub fn ensure_hermitian(&self, name: &str) -> Result<()> {
        if self.is_hermitian() {
            Ok(())
        } else {
            Err(Error::InvalidState(format!(
                "{name} is not Hermitian (defect {:.3e})",
                self.matrix.hermiticity_defect()
            )))
        }
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        let d = self.dims.total();
        if d > DENSE_LIMIT {
            return Err(Error::SizeLimit {
                what: "dense operator dimension",
                required: d,
                limit: DENSE_LIMIT,
                hint: "dense form is reserved for small test instances",
            });
        }
        Ok(self.matrix.to_dense())
    }

    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        self.matrix.mul_vec(psi)
    }
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm_dense(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.nrows();
    let norm1 = (0..n)
        .map(|j| m.column(j).iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m / Complex64::new(2f64.powi(squarings as i32), 0.0);
    let mut result = DMatrix::<Complex64>::identity(n, n);
    let mut term = DMatrix::<Complex64>::identity(n, n);
    for k in 1..=40 {
        term = &term * &scaled / Complex64::new(k as f64, 0.0);
        result += &term;
        if term.iter().map(|v| v.norm()).fold(0.0, f64::max) < 1e-20 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Displacement operator `D(amp) = exp(amp·m† − amp*·m)` on one mode, built in
/// the truncated space.
pub fn displacement(dims: ModeDims, mode: Mode, amp: Complex64) -> FockOperator {
    let n = dims.cutoff(mode);
    if amp.norm_sqr() > n as f64 / 4.0 {
        log::warn!(
            "displacement |amp|^2 = {:.3} exceeds cutoff/4 = {:.2} for mode {mode}; expect truncation artifacts",
            amp.norm_sqr(),
            n as f64 / 4.0
        );
    }
    let destroy = single_mode_destroy(n).to_dense();
    let generator = destroy.adjoint() * amp - destroy * amp.conj();
    let local = SparseMatrix::from_dense(&expm_dense(&generator));
    FockOperator::embed(dims, mode, &local).expect("cutoff matches by construction")
}
