//! Liouvillian superoperators on vectorized density matrices.
//!
//! A density matrix is addressed through a [`PairBasis`]: a list of retained
//! matrix elements `|i⟩⟨j|`. The full basis keeps every pair in row-major
//! order. When the model conserves a charge `q` (lab frame: `n_a − n_c`), the
//! steady state lives in the block with `q_i == q_j`, and the charge-sector
//! basis keeps only those pairs.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::LindbladModel;
use crate::sparse::SparseMatrix;

pub const DEFAULT_MAX_UNKNOWNS: usize = 2_000_000;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ABSENT: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct PairBasis {
    dim: usize,
    pairs: Vec<(u32, u32)>,
    lookup: Vec<u32>,
}

impl PairBasis {
    fn check_size(dim: usize, count: usize, max_unknowns: usize) -> Result<()> {
        if count > max_unknowns || dim.saturating_mul(dim) > u32::MAX as usize {
            return Err(Error::SizeLimit {
                what: "Liouvillian unknowns",
                required: count,
                limit: max_unknowns,
                hint: "reduce the Fock cutoffs or use trajectories",
            });
        }
        Ok(())
    }

    pub fn full(dim: usize, max_unknowns: usize) -> Result<Self> {
        Self::check_size(dim, dim.saturating_mul(dim), max_unknowns)?;
        let pairs = (0..dim as u32).flat_map(|i| (0..dim as u32).map(move |j| (i, j))).collect();
        let lookup = (0..(dim * dim) as u32).collect();
        Ok(Self { dim, pairs, lookup })
    }

    /// Pairs whose two basis states carry equal charge.
    pub fn charge_sector(charges: &[i64], max_unknowns: usize) -> Result<Self> {
        let dim = charges.len();
        let count: usize = {
            let mut sorted = charges.to_vec();
            sorted.sort_unstable();
            sorted
                .chunk_by(|a, b| a == b)
                .map(|g| g.len() * g.len())
                .sum()
        };
        Self::check_size(dim, count, max_unknowns)?;
        let mut pairs = Vec::with_capacity(count);
        let mut lookup = vec![ABSENT; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                if charges[i] == charges[j] {
                    lookup[i * dim + j] = pairs.len() as u32;
                    pairs.push((i as u32, j as u32));
                }
            }
        }
        Ok(Self { dim, pairs, lookup })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, k: usize) -> (usize, usize) {
        let (i, j) = self.pairs[k];
        (i as usize, j as usize)
    }

    pub fn index(&self, i: usize, j: usize) -> Option<usize> {
        match self.lookup[i * self.dim + j] {
            ABSENT => None,
            k => Some(k as usize),
        }
    }

    pub fn is_diagonal(&self, k: usize) -> bool {
        let (i, j) = self.pairs[k];
        i == j
    }

    /// Gathers the retained entries of a dense row-major matrix.
    pub fn gather(&self, rho: &nalgebra::DMatrix<Complex64>) -> Vec<Complex64> {
        self.pairs.iter().map(|&(i, j)| rho[(i as usize, j as usize)]).collect()
    }

    /// Scatters a coefficient vector into a dense matrix (absent pairs are zero).
    pub fn scatter(&self, x: &[Complex64]) -> nalgebra::DMatrix<Complex64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for (&(i, j), &v) in self.pairs.iter().zip(x) {
            m[(i as usize, j as usize)] = v;
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub basis: PairBasis,
    pub matrix: SparseMatrix,
}

impl Liouvillian {
    /// Applies the superoperator to a coefficient vector.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.matrix.mul_vec(x)
    }

    /// Largest |Σ_diag L[d, col]| over columns: zero for trace preservation.
    pub fn trace_defect(&self) -> f64 {
        let mut col = vec![Complex64::new(0.0, 0.0); self.basis.len()];
        for (r, c, v) in self.matrix.triplets() {
            if self.basis.is_diagonal(r) {
                col[c] += v;
            }
        }
        col.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Full superoperator `ρ̇ = −i[H, ρ] + Σ rate·(CρC† − ½{C†C, ρ})`.
pub fn liouvillian(model: &LindbladModel) -> Result<Liouvillian> {
    liouvillian_with_limit(model, DEFAULT_MAX_UNKNOWNS)
}

pub fn liouvillian_with_limit(model: &LindbladModel, max_unknowns: usize) -> Result<Liouvillian> {
    let basis = PairBasis::full(model.dims.total(), max_unknowns)?;
    assemble(model, basis)
}

/// Superoperator restricted to the zero-charge-difference sector when the
/// model has a conserved charge, otherwise the full one.
pub fn liouvillian_reduced(model: &LindbladModel, max_unknowns: usize) -> Result<Liouvillian> {
    match model.conserved_charge() {
        Some(q) => assemble(model, PairBasis::charge_sector(&q, max_unknowns)?),
        None => liouvillian_with_limit(model, max_unknowns),
    }
}

pub fn assemble(model: &LindbladModel, basis: PairBasis) -> Result<Liouvillian> {
    let heff = model.effective_hamiltonian()?;
    // Row k of the transpose is column k of H_eff.
    let heff_cols = heff.matrix().transpose();
    let jump_cols: Vec<(f64, SparseMatrix)> = model
        .collapse_ops
        .iter()
        .filter(|c| c.rate > 0.0)
        .map(|c| (c.rate, c.op.matrix().transpose()))
        .collect();

    let n = basis.len();
    let mut triplets: Vec<(usize, usize, Complex64)> = Vec::with_capacity(n * 8);
    let missing = |m: usize, l: usize| {
        Error::Solver(format!(
            "pair ({m}, {l}) leaves the retained sector; the model does not conserve the assumed charge"
        ))
    };
    for col in 0..n {
        let (k, l) = basis.pair(col);
        // −i H_eff |k⟩⟨l|
        for (m, h) in heff_cols.row(k) {
            let row = basis.index(m, l).ok_or_else(|| missing(m, l))?;
            triplets.push((row, col, -I * h));
        }
        // +i |k⟩⟨l| H_eff†
        for (m, h) in heff_cols.row(l) {
            let row = basis.index(k, m).ok_or_else(|| missing(k, m))?;
            triplets.push((row, col, I * h.conj()));
        }
        // rate · C|k⟩⟨l|C†
        for (rate, ccols) in &jump_cols {
            for (m, cm) in ccols.row(k) {
                for (nn, cn) in ccols.row(l) {
                    let row = basis.index(m, nn).ok_or_else(|| missing(m, nn))?;
                    triplets.push((row, col, *rate * cm * cn.conj()));
                }
            }
        }
    }
    let matrix = SparseMatrix::from_triplets(n, n, triplets);
    Ok(Liouvillian { basis, matrix })
}
