use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::banded::{reverse_cuthill_mckee, BandedLu};
use super::liouvillian::{liouvillian_reduced, liouvillian_with_limit, Liouvillian, DEFAULT_MAX_UNKNOWNS};
use crate::analytics;
use crate::error::{Error, Result};
use crate::hilbert::{ModeDims, QuantumState};
use crate::model::{Frame, LindbladModel};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateConfig {
    /// Restrict to the conserved-charge sector when the model has one.
    pub use_symmetry: bool,
    pub max_unknowns: usize,
    /// Bound on banded-factor storage, in complex entries.
    pub max_band_storage: usize,
    /// Required `‖L(ρ)‖₁ / ‖L‖₁`.
    pub residual_tol: f64,
    pub refinement_steps: usize,
}

impl Default for SteadyStateConfig {
    fn default() -> Self {
        Self {
            use_symmetry: true,
            max_unknowns: DEFAULT_MAX_UNKNOWNS,
            max_band_storage: 80_000_000,
            residual_tol: 1e-10,
            refinement_steps: 2,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverDiagnostics {
    pub unknowns: usize,
    pub nnz: usize,
    pub lower_bandwidth: usize,
    pub upper_bandwidth: usize,
    /// Complex entries held by the factorization (fill).
    pub fill: usize,
    pub refinement_steps: usize,
    /// Basis state whose population was pinned during the solve.
    pub anchor: usize,
    pub symmetry_reduced: bool,
}

#[derive(Debug, Clone)]
pub struct SteadyStateResult {
    pub rho: QuantumState,
    /// `‖L(ρ)‖₁` of the returned state.
    pub residual: f64,
    /// `residual / ‖L‖₁`.
    pub relative_residual: f64,
    pub diagnostics: SolverDiagnostics,
}

impl SteadyStateResult {
    /// Population of the top Fock level of each mode, a truncation indicator.
    pub fn edge_populations(&self) -> [f64; 3] {
        let dims = self.rho.dims();
        let rho = match &self.rho {
            QuantumState::Mixed { rho, .. } => rho,
            QuantumState::Pure { .. } => unreachable!("steady states are mixed"),
        };
        let mut edge = [0.0; 3];
        for i in 0..dims.total() {
            let lv = dims.levels(i);
            let p = rho[(i, i)].re;
            for (m, &n) in dims.as_array().iter().enumerate() {
                if n > 1 && lv[m] == n - 1 {
                    edge[m] += p;
                }
            }
        }
        edge
    }
}

pub fn steady_state(model: &LindbladModel) -> Result<SteadyStateResult> {
    steady_state_with(model, &SteadyStateConfig::default())
}

/// Basis state expected to carry sizeable population: the semiclassical
/// occupations in the lab frame, the fluctuation vacuum otherwise.
fn initial_anchor(model: &LindbladModel) -> usize {
    let dims = model.dims;
    let clamp = |x: f64, n: usize| (x.round().max(0.0) as usize).min(n - 1);
    match model.frame {
        Frame::Displaced { .. } => dims.index(0, 0, 0),
        Frame::Lab => match analytics::limit_cycle(&model.params) {
            Ok(lc) => dims.index(
                clamp(lc.alpha0.norm_sqr(), dims.n_a),
                clamp(lc.beta0.norm_sqr(), dims.n_b),
                clamp(lc.mean_phonons(), dims.n_c),
            ),
            Err(_) => {
                let (_, beta) = analytics::optical_amplitudes(&model.params, Complex64::new(0.0, 0.0));
                dims.index(0, clamp(beta.norm_sqr(), dims.n_b), clamp(model.params.nbar(), dims.n_c))
            }
        },
    }
}

pub fn steady_state_with(model: &LindbladModel, cfg: &SteadyStateConfig) -> Result<SteadyStateResult> {
    let lv = if cfg.use_symmetry {
        liouvillian_reduced(model, cfg.max_unknowns)?
    } else {
        liouvillian_with_limit(model, cfg.max_unknowns)?
    };
    let symmetry_reduced = lv.basis.len() < model.dims.total().pow(2);
    let first = initial_anchor(model);
    let (x, diag) = solve_anchored(&lv, first, cfg)?;
    let d = model.dims.total();
    let pops: Vec<f64> = (0..d)
        .map(|i| lv.basis.index(i, i).map_or(0.0, |k| x[k].re))
        .collect();
    let (best, pmax) = pops
        .iter()
        .copied()
        .enumerate()
        .fold((first, f64::MIN), |acc, (i, p)| if p > acc.1 { (i, p) } else { acc });
    let (x, diag) = if pops[first] < 1e-3 * pmax && best != first {
        log::debug!("re-anchoring steady-state solve on basis state {best}");
        solve_anchored(&lv, best, cfg)?
    } else {
        (x, diag)
    };
    finish(model.dims, &lv, x, SolverDiagnostics { symmetry_reduced, ..diag }, cfg)
}

/// Solves `L ρ = 0` with the row of the diagonal pair `anchor` replaced by the
/// constraint `ρ[anchor, anchor] = 1`, then normalizes the trace. This is the
/// trace-augmented system after a rank-one (Sherman–Morrison) reduction, and
/// keeps the band structure intact.
fn solve_anchored(lv: &Liouvillian, anchor: usize, cfg: &SteadyStateConfig) -> Result<(Vec<Complex64>, SolverDiagnostics)> {
    let n = lv.basis.len();
    let r = lv
        .basis
        .index(anchor, anchor)
        .expect("diagonal pairs are always retained");
    let mut t: Vec<(usize, usize, Complex64)> = lv.matrix.triplets().filter(|&(i, _, _)| i != r).collect();
    t.push((r, r, Complex64::new(1.0, 0.0)));
    let m = SparseMatrix::from_triplets(n, n, t);
    let mut b = vec![Complex64::new(0.0, 0.0); n];
    b[r] = Complex64::new(1.0, 0.0);

    let perm = reverse_cuthill_mckee(&m);
    let lu = BandedLu::factor(&m, perm, cfg.max_band_storage)?;
    let mut x = lu.solve(&b);
    for _ in 0..cfg.refinement_steps {
        let ax = m.mul_vec(&x);
        let res: Vec<Complex64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let dx = lu.solve(&res);
        x.iter_mut().zip(dx).for_each(|(xi, di)| *xi += di);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver("non-finite steady-state solution; the zero eigenvalue may be degenerate".into()));
    }
    let (kl, ku) = lu.bandwidths();
    Ok((
        x,
        SolverDiagnostics {
            unknowns: n,
            nnz: m.nnz(),
            lower_bandwidth: kl,
            upper_bandwidth: ku,
            fill: lu.storage(),
            refinement_steps: cfg.refinement_steps,
            anchor,
            symmetry_reduced: false,
        },
    ))
}

fn finish(
    dims: ModeDims,
    lv: &Liouvillian,
    x: Vec<Complex64>,
    diagnostics: SolverDiagnostics,
    cfg: &SteadyStateConfig,
) -> Result<SteadyStateResult> {
    let mut rho: DMatrix<Complex64> = lv.basis.scatter(&x);
    let tr = rho.trace();
    if tr.norm() < 1e-300 || !tr.is_finite() {
        return Err(Error::Solver(format!("steady state has trace {tr}")));
    }
    rho /= tr;
    rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let tr = rho.trace();
    rho /= tr;

    let xv = lv.basis.gather(&rho);
    let residual: f64 = lv.apply(&xv).iter().map(|v| v.norm()).sum();
    let lnorm = lv.matrix.norm_1();
    let relative_residual = residual / lnorm.max(f64::MIN_POSITIVE);
    if relative_residual > cfg.residual_tol {
        return Err(Error::Solver(format!(
            "steady-state residual {relative_residual:.3e} exceeds {:.1e}; the zero eigenvalue may be nearly degenerate",
            cfg.residual_tol
        )));
    }
    Ok(SteadyStateResult {
        rho: QuantumState::from_density(dims, rho)?,
        residual,
        relative_residual,
        diagnostics,
    })
}
