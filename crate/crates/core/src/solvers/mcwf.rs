//! Quantum-jump (Monte-Carlo wave-function) ensembles.
//!
//! Each trajectory integrates the unnormalized state under
//! `H_eff = H − (i/2) Σ rate·C†C` and jumps when its squared norm falls below
//! a uniform random threshold (waiting-time sampling). Steps whose norm loss
//! exceeds `max_jump_prob` are refused, so no step hides more than a small
//! jump probability. Trajectory `j` draws from its own ChaCha stream
//! `(seed, j)`, and the reduction runs in trajectory order, so results do not
//! depend on the thread count.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{coherent_amplitudes, FockOperator, Mode, QuantumState, TAIL_TOLERANCE};
use crate::model::LindbladModel;
use crate::observables::stats::{sample_std, trace_distance, PhononStats, StandardErrors};
use crate::ode::{next_step, Dopri5, Tolerances};
use crate::sparse::SparseMatrix;
use crate::analytics;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const NORM_FLOOR: f64 = 1e-12;
/// Stream reserved for bootstrap resampling.
const BOOTSTRAP_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryConfig {
    pub n_traj: usize,
    /// Evolution time; `None` means `5/γ`.
    pub tau: Option<f64>,
    pub seed: u64,
    /// Standard deviation of the complex Gaussian draw of the initial
    /// mechanical amplitude (variance `spread²/2` per quadrature).
    pub initial_spread: f64,
    pub tol: Tolerances,
    /// Largest norm loss (jump probability) allowed in one step.
    pub max_jump_prob: f64,
    /// Bootstrap resamples for standard errors (0 disables them).
    pub bootstrap: usize,
    /// Keep final states so the ensemble density matrix can be formed.
    pub record_density: bool,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            n_traj: 1000,
            tau: None,
            seed: 0,
            initial_spread: 1.0,
            tol: Tolerances::default(),
            max_jump_prob: 0.1,
            bootstrap: 200,
            record_density: false,
        }
    }
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_traj == 0 {
            return Err(Error::Usage("n_traj must be at least 1".into()));
        }
        if let Some(t) = self.tau {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Usage(format!("tau must be positive and finite, got {t}")));
            }
        }
        if !(self.initial_spread >= 0.0 && self.initial_spread.is_finite()) {
            return Err(Error::Usage(format!("initial_spread must be >= 0, got {}", self.initial_spread)));
        }
        if !(self.max_jump_prob > 0.0 && self.max_jump_prob < 1.0) {
            return Err(Error::Usage(format!("max_jump_prob must lie in (0, 1), got {}", self.max_jump_prob)));
        }
        if !(self.tol.rtol > 0.0 && self.tol.atol > 0.0) {
            return Err(Error::Usage("integrator tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Final-time moments of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryMoments {
    pub n: f64,
    pub n2: f64,
    pub jumps: usize,
}

#[derive(Debug, Clone)]
pub struct EnsembleStats {
    pub n_traj: usize,
    pub tau: f64,
    /// Lab-frame phonon statistics of the ensemble state σ.
    pub stats: PhononStats,
    /// `⟨O⟩_σ` for each requested observable.
    pub observables: Vec<Complex64>,
    /// Bootstrap standard errors of `observables` (real and imaginary parts combined).
    pub observable_errors: Vec<Option<f64>>,
    pub trajectories: Vec<TrajectoryMoments>,
    pub total_jumps: usize,
    /// Final normalized states, when recorded.
    pub states: Option<Vec<DVector<Complex64>>>,
}

impl EnsembleStats {
    /// `σ = Σ_j |ψ_j⟩⟨ψ_j| / n_traj`, when states were recorded.
    pub fn density(&self) -> Option<DMatrix<Complex64>> {
        let states = self.states.as_ref()?;
        let weights = vec![1.0; states.len()];
        Some(weighted_density(states, &weights))
    }

    /// Mean trace distance between bootstrap resamples of σ and σ itself:
    /// the statistical resolution of σ.
    pub fn density_bootstrap_scale(&self, resamples: usize, seed: u64) -> Option<f64> {
        let states = self.states.as_ref()?;
        let sigma = self.density()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(BOOTSTRAP_STREAM);
        let n = states.len();
        let mut total = 0.0;
        for _ in 0..resamples.max(1) {
            let mut counts = vec![0.0; n];
            for _ in 0..n {
                counts[rng.random_range(0..n)] += 1.0;
            }
            total += trace_distance(&weighted_density(states, &counts), &sigma);
        }
        Some(total / resamples.max(1) as f64)
    }
}

fn weighted_density(states: &[DVector<Complex64>], weights: &[f64]) -> DMatrix<Complex64> {
    let d = states.first().map_or(0, |s| s.len());
    let mut sigma = DMatrix::zeros(d, d);
    let total: f64 = weights.iter().sum();
    for (psi, &w) in states.iter().zip(weights) {
        if w != 0.0 {
            sigma.gerc(Complex64::new(w / total, 0.0), psi, psi, Complex64::new(1.0, 0.0));
        }
    }
    sigma
}

struct Propagator {
    heff: SparseMatrix,
    jumps: Vec<(f64, SparseMatrix)>,
    number: SparseMatrix,
    observables: Vec<SparseMatrix>,
    h0: f64,
}

struct Outcome {
    moments: TrajectoryMoments,
    obs: Vec<Complex64>,
    psi: Option<DVector<Complex64>>,
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Runs a trajectory ensemble on `model`, evaluating the lab-frame phonon
/// number and each of `observables` (given in the model's frame) at `tau`.
pub fn mcwf_ensemble(model: &LindbladModel, observables: &[FockOperator], cfg: &TrajectoryConfig) -> Result<EnsembleStats> {
    cfg.validate()?;
    for o in observables {
        if o.dims() != model.dims {
            return Err(Error::DimensionMismatch(format!("observable dims {} vs model {}", o.dims(), model.dims)));
        }
    }
    let tau = match cfg.tau {
        Some(t) => t,
        None => {
            let g = model.params.gamma();
            if !(g > 0.0) {
                return Err(Error::Usage("default tau = 5/γ needs γ > 0; set tau explicitly".into()));
            }
            5.0 / g
        }
    };
    let heff = model.effective_hamiltonian()?.into_matrix();
    let scale = heff.norm_1().max(1e-12);
    let prop = Propagator {
        jumps: model
            .collapse_ops
            .iter()
            .filter(|c| c.rate > 0.0)
            .map(|c| (c.rate, c.op.matrix().clone()))
            .collect(),
        number: model.phonon_number()?.into_matrix(),
        observables: observables.iter().map(|o| o.matrix().clone()).collect(),
        h0: (0.05 / scale).min(tau),
        heff,
    };

    let center = match analytics::limit_cycle(&model.params) {
        Ok(lc) => Complex64::new(lc.zeta0, 0.0),
        Err(_) => ZERO,
    };
    let offset = model.mechanical_offset();

    let outcomes: Vec<Outcome> = (0..cfg.n_traj)
        .into_par_iter()
        .map(|j| {
            run_trajectory(model, &prop, cfg, tau, center, offset, j).map_err(|e| Error::Trajectory {
                index: j,
                seed: cfg.seed,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(reduce(outcomes, observables.len(), cfg, tau))
}

fn reduce(outcomes: Vec<Outcome>, n_obs: usize, cfg: &TrajectoryConfig, tau: f64) -> EnsembleStats {
    let n = outcomes.len();
    let moments = |idx: &mut dyn Iterator<Item = usize>| {
        let (mut s1, mut s2) = (0.0, 0.0);
        let mut so = vec![ZERO; n_obs];
        let mut count = 0.0;
        for j in idx {
            let o = &outcomes[j];
            s1 += o.moments.n;
            s2 += o.moments.n2;
            for (acc, v) in so.iter_mut().zip(&o.obs) {
                *acc += v;
            }
            count += 1.0;
        }
        so.iter_mut().for_each(|v| *v /= count);
        (s1 / count, s2 / count, so)
    };
    let (mean_n, mean_n2, obs) = moments(&mut (0..n));
    let mut stats = PhononStats::from_moments(mean_n, mean_n2);

    let mut observable_errors = vec![None; n_obs];
    if cfg.bootstrap >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(BOOTSTRAP_STREAM);
        let mut samples: Vec<(PhononStats, Vec<Complex64>)> = Vec::with_capacity(cfg.bootstrap);
        for _ in 0..cfg.bootstrap {
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let (m1, m2, o) = moments(&mut idx.into_iter());
            samples.push((PhononStats::from_moments(m1, m2), o));
        }
        let opt_std = |f: &dyn Fn(&PhononStats) -> Option<f64>| {
            let v: Vec<f64> = samples.iter().filter_map(|(s, _)| f(s)).collect();
            if v.len() == samples.len() {
                sample_std(v)
            } else {
                None
            }
        };
        let errors = StandardErrors {
            mean_n: sample_std(samples.iter().map(|(s, _)| s.mean_n)).unwrap_or(0.0),
            mean_n2: sample_std(samples.iter().map(|(s, _)| s.mean_n2)).unwrap_or(0.0),
            fano: opt_std(&|s| s.fano),
            g2: opt_std(&|s| s.g2),
        };
        stats = stats.with_errors(errors);
        for (k, slot) in observable_errors.iter_mut().enumerate() {
            let re = sample_std(samples.iter().map(|(_, o)| o[k].re)).unwrap_or(0.0);
            let im = sample_std(samples.iter().map(|(_, o)| o[k].im)).unwrap_or(0.0);
            *slot = Some(re.hypot(im));
        }
    }

    let trajectories: Vec<TrajectoryMoments> = outcomes.iter().map(|o| o.moments).collect();
    let total_jumps = trajectories.iter().map(|m| m.jumps).sum();
    let states = cfg
        .record_density
        .then(|| outcomes.into_iter().map(|o| o.psi.expect("recorded")).collect());
    log::debug!("ensemble of {n} trajectories: {total_jumps} jumps, mean n {:.4}", mean_n);
    EnsembleStats {
        n_traj: n,
        tau,
        stats,
        observables: obs,
        observable_errors,
        trajectories,
        total_jumps,
        states,
    }
}

fn initial_state(model: &LindbladModel, amp: Complex64) -> Result<Vec<Complex64>> {
    let dims = model.dims;
    let (c, tail) = coherent_amplitudes(dims.cutoff(Mode::C), amp);
    if tail > 1e3 * TAIL_TOLERANCE {
        log::debug!("initial coherent amplitude {amp:.3} truncated, tail {tail:.2e}");
    }
    let mut a = vec![ZERO; dims.n_a];
    let mut b = vec![ZERO; dims.n_b];
    a[0] = Complex64::new(1.0, 0.0);
    b[0] = Complex64::new(1.0, 0.0);
    match QuantumState::product(dims, &a, &b, &c)? {
        QuantumState::Pure { psi, .. } => Ok(psi.as_slice().to_vec()),
        QuantumState::Mixed { .. } => unreachable!("product states are pure"),
    }
}

fn draw_threshold(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(NORM_FLOOR..1.0)
}

fn run_trajectory(
    model: &LindbladModel,
    prop: &Propagator,
    cfg: &TrajectoryConfig,
    tau: f64,
    center: Complex64,
    offset: Complex64,
    j: usize,
) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(j as u64);
    let xi = if cfg.initial_spread > 0.0 {
        let normal = Normal::new(0.0, cfg.initial_spread / std::f64::consts::SQRT_2)
            .map_err(|e| Error::Usage(format!("initial spread: {e}")))?;
        center + Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng))
    } else {
        center
    };
    let mut psi = initial_state(model, xi - offset)?;
    let d = psi.len();

    let heff = &prop.heff;
    let mut rhs = |_t: f64, y: &[Complex64], out: &mut [Complex64]| {
        heff.mul_vec_into(y, out);
        out.iter_mut().for_each(|v| *v = Complex64::new(v.im, -v.re));
    };
    let mut dp = Dopri5::new(d, cfg.tol);
    let mut next = vec![ZERO; d];
    let mut scratch = vec![ZERO; d];
    let mut t = 0.0;
    let mut h = prop.h0;
    let mut threshold = draw_threshold(&mut rng);
    let mut jumps = 0;

    while t < tau {
        let remaining = tau - t;
        let h_try = h.min(remaining);
        if h_try < 1e-14 * t.max(1.0) {
            return Err(Error::Integration {
                t,
                h: h_try,
                reason: "step size underflow".into(),
            });
        }
        let n0 = norm_sqr(&psi);
        let err = dp.try_step(&mut rhs, t, &psi, h_try, &mut next);
        let n1 = norm_sqr(&next);
        let loss = 1.0 - n1 / n0;
        if !err.is_finite() || !n1.is_finite() || n1 < NORM_FLOOR {
            h = 0.5 * h_try;
            continue;
        }
        if err > 1.0 || loss > cfg.max_jump_prob {
            h = if loss > cfg.max_jump_prob {
                h_try * 0.5 * (cfg.max_jump_prob / loss).max(0.1)
            } else {
                next_step(h_try, err)
            };
            continue;
        }
        if n1 <= threshold {
            let theta = locate_jump(&mut dp, &mut rhs, t, &psi, h_try, n0, n1, threshold, &mut next);
            t = if theta >= remaining { tau } else { t + theta };
            std::mem::swap(&mut psi, &mut next);
            apply_jump(prop, &mut psi, &mut scratch, &mut rng)?;
            threshold = draw_threshold(&mut rng);
            jumps += 1;
        } else {
            t = if h_try >= remaining { tau } else { t + h_try };
            std::mem::swap(&mut psi, &mut next);
            h = next_step(h_try, err);
        }
    }

    let norm = norm_sqr(&psi).sqrt();
    psi.iter_mut().for_each(|v| *v /= norm);
    let npsi = prop.number.mul_vec(&psi);
    let n = inner(&psi, &npsi).re;
    let n2 = norm_sqr(&npsi);
    let obs = prop
        .observables
        .iter()
        .map(|o| inner(&psi, &o.mul_vec(&psi)))
        .collect();
    Ok(Outcome {
        moments: TrajectoryMoments { n, n2, jumps },
        obs,
        psi: cfg.record_density.then(|| DVector::from_vec(psi)),
    })
}

/// Finds `θ ∈ (0, h]` with `‖ψ(t+θ)‖² = threshold` by the Illinois variant of
/// regula falsi on the log-norm, writing `ψ(t+θ)` into `out`.
#[allow(clippy::too_many_arguments)]
fn locate_jump<F>(
    dp: &mut Dopri5,
    rhs: &mut F,
    t: f64,
    psi: &[Complex64],
    h: f64,
    n0: f64,
    n1: f64,
    threshold: f64,
    out: &mut [Complex64],
) -> f64
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let target = threshold.ln();
    let (mut a, mut fa) = (0.0, n0.ln() - target);
    let (mut b, mut fb) = (h, n1.ln() - target);
    if fb == 0.0 {
        dp.try_step(rhs, t, psi, h, out);
        return h;
    }
    let mut best = b;
    for _ in 0..100 {
        let c = b - fb * (b - a) / (fb - fa);
        let c = c.clamp(0.0, h);
        dp.try_step(rhs, t, psi, c, out);
        let fc = norm_sqr(out).ln() - target;
        best = c;
        if fc.abs() < 1e-12 || (b - a).abs() < 1e-13 * h {
            return c;
        }
        if fc * fb < 0.0 {
            a = b;
            fa = fb;
        } else {
            fa *= 0.5;
        }
        b = c;
        fb = fc;
    }
    dp.try_step(rhs, t, psi, best, out);
    best
}

fn apply_jump(prop: &Propagator, psi: &mut Vec<Complex64>, scratch: &mut [Complex64], rng: &mut ChaCha8Rng) -> Result<()> {
    let weights: Vec<f64> = prop
        .jumps
        .iter()
        .map(|(rate, c)| {
            c.mul_vec_into(psi, scratch);
            rate * norm_sqr(scratch)
        })
        .collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidState("norm decayed but no jump channel is open".into()));
    }
    let mut u = rng.random::<f64>() * total;
    let mut k = weights.len() - 1;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            k = i;
            break;
        }
        u -= w;
    }
    prop.jumps[k].1.mul_vec_into(psi, scratch);
    let norm = norm_sqr(scratch).sqrt();
    for (p, s) in psi.iter_mut().zip(scratch.iter()) {
        *p = s / norm;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let bad = TrajectoryConfig {
            n_traj: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrajectoryConfig {
            tau: Some(-1.0),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(TrajectoryConfig::default().validate().is_ok());
    }
}
