use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::{FockOperator, Mode, ModeDims, TAIL_TOLERANCE};
use crate::error::{Error, Result};

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure { dims: ModeDims, psi: DVector<Complex64> },
    Mixed { dims: ModeDims, rho: DMatrix<Complex64> },
}

impl QuantumState {
    /// Normalizes `psi` and wraps it.
    pub fn from_vector(dims: ModeDims, mut psi: DVector<Complex64>) -> Result<Self> {
        if psi.len() != dims.total() {
            return Err(Error::DimensionMismatch(format!(
                "state vector has length {}, dims {} need {}",
                psi.len(),
                dims,
                dims.total()
            )));
        }
        let norm = psi.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState(format!("state vector norm is {norm}")));
        }
        psi.unscale_mut(norm);
        Ok(Self::Pure { dims, psi })
    }

    /// Wraps a density matrix after checking trace and hermiticity to 1e-10.
    pub fn from_density(dims: ModeDims, rho: DMatrix<Complex64>) -> Result<Self> {
        let d = dims.total();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "density matrix is {}x{}, dims {} need {d}x{d}",
                rho.nrows(),
                rho.ncols(),
                dims
            )));
        }
        let tr = rho.trace();
        if (tr - ONE).norm() > 1e-10 {
            return Err(Error::InvalidState(format!("trace is {tr}")));
        }
        let herm = (&rho - rho.adjoint()).camax();
        if herm > 1e-10 {
            return Err(Error::InvalidState(format!("density matrix hermiticity defect {herm:.3e}")));
        }
        Ok(Self::Mixed { dims, rho })
    }

    /// Tensor product of single-mode pure states in `a ⊗ b ⊗ c` order.
    pub fn product(dims: ModeDims, a: &[Complex64], b: &[Complex64], c: &[Complex64]) -> Result<Self> {
        for (mode, v) in Mode::ALL.iter().zip([a, b, c]) {
            if v.len() != dims.cutoff(*mode) {
                return Err(Error::DimensionMismatch(format!(
                    "mode {mode} factor has length {}, cutoff is {}",
                    v.len(),
                    dims.cutoff(*mode)
                )));
            }
        }
        let mut psi = DVector::zeros(dims.total());
        for (ia, &va) in a.iter().enumerate() {
            for (ib, &vb) in b.iter().enumerate() {
                let vab = va * vb;
                if vab == ZERO {
                    continue;
                }
                for (ic, &vc) in c.iter().enumerate() {
                    psi[dims.index(ia, ib, ic)] = vab * vc;
                }
            }
        }
        Self::from_vector(dims, psi)
    }

    pub fn dims(&self) -> ModeDims {
        match self {
            Self::Pure { dims, .. } | Self::Mixed { dims, .. } => *dims,
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, Self::Pure { .. })
    }

    pub fn to_density(&self) -> DMatrix<Complex64> {
        match self {
            Self::Pure { psi, .. } => psi * psi.adjoint(),
            Self::Mixed { rho, .. } => rho.clone(),
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            Self::Pure { psi, .. } => psi.norm_squared(),
            Self::Mixed { rho, .. } => rho.trace().re,
        }
    }

    /// `⟨O⟩` for pure states, `Tr(Oρ)` for mixed ones.
    pub fn expect(&self, op: &FockOperator) -> Result<Complex64> {
        if op.dims() != self.dims() {
            return Err(Error::DimensionMismatch(format!(
                "operator dims {} vs state dims {}",
                op.dims(),
                self.dims()
            )));
        }
        Ok(match self {
            Self::Pure { psi, .. } => {
                let opsi = op.apply(psi.as_slice());
                psi.iter().zip(opsi).map(|(p, q)| p.conj() * q).sum()
            }
            Self::Mixed { rho, .. } => op.matrix().triplets().map(|(i, j, v)| v * rho[(j, i)]).sum(),
        })
    }

    /// Reduced density matrix of one mode.
    pub fn partial_trace(&self, keep: Mode) -> DMatrix<Complex64> {
        let dims = self.dims();
        let n = dims.cutoff(keep);
        let mut out = DMatrix::zeros(n, n);
        let [na, nb, nc] = dims.as_array();
        let others: Vec<(usize, usize)> = match keep {
            Mode::A => (0..nb).flat_map(|x| (0..nc).map(move |y| (x, y))).collect(),
            Mode::B => (0..na).flat_map(|x| (0..nc).map(move |y| (x, y))).collect(),
            Mode::C => (0..na).flat_map(|x| (0..nb).map(move |y| (x, y))).collect(),
        };
        let idx = |k: usize, (x, y): (usize, usize)| match keep {
            Mode::A => dims.index(k, x, y),
            Mode::B => dims.index(x, k, y),
            Mode::C => dims.index(x, y, k),
        };
        match self {
            Self::Pure { psi, .. } => {
                for &o in &others {
                    for m in 0..n {
                        let pm = psi[idx(m, o)];
                        if pm == ZERO {
                            continue;
                        }
                        for k in 0..n {
                            out[(m, k)] += pm * psi[idx(k, o)].conj();
                        }
                    }
                }
            }
            Self::Mixed { rho, .. } => {
                for &o in &others {
                    for m in 0..n {
                        for k in 0..n {
                            out[(m, k)] += rho[(idx(m, o), idx(k, o))];
                        }
                    }
                }
            }
        }
        out
    }

    /// Smallest eigenvalue of the (Hermitian part of the) density matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        match self {
            Self::Pure { .. } => 0.0,
            Self::Mixed { rho, .. } => {
                let h = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
                SymmetricEigen::new(h).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Full invariant check: unit norm/trace, hermiticity and numerical positivity.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Pure { psi, .. } => {
                let n = psi.norm();
                if (n - 1.0).abs() > 1e-10 {
                    return Err(Error::InvalidState(format!("state norm {n}")));
                }
            }
            Self::Mixed { dims, rho } => {
                Self::from_density(*dims, rho.clone())?;
                let min = self.min_eigenvalue();
                if min < -1e-8 {
                    return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
                }
            }
        }
        Ok(())
    }
}

/// Normalized Fock amplitudes of a coherent state truncated to `n` levels,
/// together with the population that fell above the cutoff.
pub fn coherent_amplitudes(n: usize, amp: Complex64) -> (Vec<Complex64>, f64) {
    let mut v = Vec::with_capacity(n);
    let mut term = Complex64::new((-amp.norm_sqr() / 2.0).exp(), 0.0);
    for k in 0..n {
        if k > 0 {
            term *= amp / (k as f64).sqrt();
        }
        v.push(term);
    }
    let kept: f64 = v.iter().map(|x| x.norm_sqr()).sum();
    let tail = (1.0 - kept).max(0.0);
    let s = kept.sqrt();
    v.iter_mut().for_each(|x| *x /= s);
    (v, tail)
}

/// Normalized thermal populations on `n` levels and the truncated tail.
pub fn thermal_populations(n: usize, nbar: f64) -> (Vec<f64>, f64) {
    let x = nbar / (1.0 + nbar);
    let mut p: Vec<f64> = (0..n).map(|k| (1.0 - x) * x.powi(k as i32)).collect();
    let tail = x.powi(n as i32);
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    (p, tail)
}

fn vacuum_vec(n: usize) -> Vec<Complex64> {
    let mut v = vec![ZERO; n];
    v[0] = ONE;
    v
}

pub fn vacuum(dims: ModeDims) -> QuantumState {
    QuantumState::product(dims, &vacuum_vec(dims.n_a), &vacuum_vec(dims.n_b), &vacuum_vec(dims.n_c))
        .expect("vacuum factors match dims")
}

/// Coherent state with amplitude `amp` in `mode`, vacuum elsewhere.
pub fn coherent_state(dims: ModeDims, mode: Mode, amp: Complex64) -> QuantumState {
    let (v, tail) = coherent_amplitudes(dims.cutoff(mode), amp);
    if tail > TAIL_TOLERANCE {
        log::warn!("coherent state |{amp}| in mode {mode}: truncated tail {tail:.2e}");
    }
    let mut factors = [vacuum_vec(dims.n_a), vacuum_vec(dims.n_b), vacuum_vec(dims.n_c)];
    factors[mode.position()] = v;
    QuantumState::product(dims, &factors[0], &factors[1], &factors[2]).expect("factors match dims")
}

/// Thermal state with mean occupation `nbar` in `mode`, vacuum elsewhere.
pub fn thermal_state(dims: ModeDims, mode: Mode, nbar: f64) -> Result<QuantumState> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(Error::Usage(format!("thermal occupation must be >= 0, got {nbar}")));
    }
    let (p, tail) = thermal_populations(dims.cutoff(mode), nbar);
    if tail > TAIL_TOLERANCE {
        log::warn!("thermal state nbar={nbar} in mode {mode}: truncated tail {tail:.2e}");
    }
    let d = dims.total();
    let mut rho = DMatrix::zeros(d, d);
    for (k, pk) in p.into_iter().enumerate() {
        let i = match mode {
            Mode::A => dims.index(k, 0, 0),
            Mode::B => dims.index(0, k, 0),
            Mode::C => dims.index(0, 0, k),
        };
        rho[(i, i)] = Complex64::new(pk, 0.0);
    }
    QuantumState::from_density(dims, rho)
}
