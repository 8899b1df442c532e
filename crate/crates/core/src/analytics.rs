//! Semiclassical theory of the three-mode phonon laser.
//!
//! Rates are carried in whatever unit the caller uses, as long as it is the
//! same for every rate; the config layer normalizes everything to `κ = 1`.
//! Only [`drive_from_power`] and [`thermal_occupation`] touch SI units.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::ode::{self, IntegrationStats, Tolerances};

pub const HBAR: f64 = 1.054_571_817e-34;
pub const K_B: f64 = 1.380_649e-23;

/// Ratio above which a validity condition is flagged.
pub const VALIDITY_THRESHOLD: f64 = 0.1;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Sideband-cooling cavity attached to the mechanics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cooling {
    /// Damping induced by the cooling laser.
    pub gamma_l: f64,
    /// Linewidth of the cooling cavity.
    pub kappa_d: f64,
}

/// Physical parameters of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub g0: f64,
    /// Energy decay rate of both optical modes.
    pub kappa: f64,
    /// Bare mechanical energy decay rate.
    pub gamma0: f64,
    /// Bare mechanical bath occupation.
    pub nbar0: f64,
    /// Drive amplitude `E` of mode b.
    pub drive: f64,
    pub omega_m: f64,
    /// Detuning between the cavities; resonant operation means `delta == omega_m`.
    pub delta: f64,
    pub cooling: Option<Cooling>,
}

impl SystemParams {
    /// Parameters in units of `κ` with `Δ = ω_m` and no cooling.
    pub fn in_kappa_units(g0: f64, gamma0: f64, nbar0: f64, drive: f64, omega_m: f64) -> Self {
        Self {
            g0,
            kappa: 1.0,
            gamma0,
            nbar0,
            drive,
            omega_m,
            delta: omega_m,
            cooling: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("kappa", self.kappa), ("gamma0", self.gamma0), ("omega_m", self.omega_m)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Usage(format!("{name} must be > 0, got {v}")));
            }
        }
        let nonneg = [("g0", self.g0), ("drive", self.drive), ("nbar0", self.nbar0), ("delta", self.delta)];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Usage(format!("{name} must be >= 0, got {v}")));
            }
        }
        if let Some(c) = self.cooling {
            if !(c.gamma_l >= 0.0 && c.gamma_l.is_finite()) {
                return Err(Error::Usage(format!("gamma_l must be >= 0, got {}", c.gamma_l)));
            }
            if !(c.kappa_d > 0.0 && c.kappa_d.is_finite()) {
                return Err(Error::Usage(format!("kappa_d must be > 0, got {}", c.kappa_d)));
            }
        }
        Ok(())
    }

    /// Effective `(γ, n̄)` after the optional cooling cavity is eliminated.
    pub fn effective_bath(&self) -> (f64, f64) {
        match self.cooling {
            Some(c) => {
                let nbar_l = cooling_quantum_limit(c.kappa_d, self.omega_m);
                cooling_transform(self.gamma0, self.nbar0, c.gamma_l, nbar_l)
            }
            None => (self.gamma0, self.nbar0),
        }
    }

    pub fn gamma(&self) -> f64 {
        self.effective_bath().0
    }

    pub fn nbar(&self) -> f64 {
        self.effective_bath().1
    }

    pub fn sideband_ratio(&self) -> f64 {
        self.kappa / self.omega_m
    }

    /// Same system with every rate divided by `κ`.
    pub fn normalized(&self) -> Self {
        let k = self.kappa;
        Self {
            g0: self.g0 / k,
            kappa: 1.0,
            gamma0: self.gamma0 / k,
            nbar0: self.nbar0,
            drive: self.drive / k,
            omega_m: self.omega_m / k,
            delta: self.delta / k,
            cooling: self.cooling.map(|c| Cooling {
                gamma_l: c.gamma_l / k,
                kappa_d: c.kappa_d / k,
            }),
        }
    }

    /// Returns a copy whose drive is chosen to give gain `r`.
    pub fn with_gain(&self, r: f64) -> Result<Self> {
        if self.g0 <= 0.0 {
            return Err(Error::Usage("cannot set the gain with g0 = 0".into()));
        }
        if !(r >= 0.0) {
            return Err(Error::Usage(format!("gain must be >= 0, got {r}")));
        }
        let drive = (r * self.kappa.powi(3) * self.gamma() / (16.0 * self.g0 * self.g0)).sqrt();
        Ok(Self { drive, ..*self })
    }

    /// `h_ζ = g₀²|ζ|² + κ²/4`
    fn h(&self, zeta: Complex64) -> f64 {
        self.g0 * self.g0 * zeta.norm_sqr() + 0.25 * self.kappa * self.kappa
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub zeta: Complex64,
}

impl ClassicalState {
    pub fn mechanical(zeta: Complex64) -> Self {
        Self {
            alpha: Complex64::new(0.0, 0.0),
            beta: Complex64::new(0.0, 0.0),
            zeta,
        }
    }
}

/// Semiclassical limit cycle and the fluctuation statistics around it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitCycleSolution {
    /// Mechanical amplitude, real and non-negative.
    pub zeta0: f64,
    pub alpha0: Complex64,
    pub beta0: Complex64,
    pub gain: f64,
    /// Optically induced amplitude damping at the limit cycle.
    pub gamma_opt_fluct: f64,
    /// Total amplitude damping `Γ`.
    pub damping: f64,
    /// Total amplitude diffusion `D`.
    pub diffusion: f64,
    pub fano: f64,
    pub g2: f64,
    /// Intracavity photon number `|α₀|² + |β₀|²`.
    pub n_ph: f64,
}

impl LimitCycleSolution {
    pub fn mean_phonons(&self) -> f64 {
        self.zeta0 * self.zeta0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("below lasing threshold (gain {gain:.6} <= 1)")]
pub struct BelowThreshold {
    pub gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("no antibunching possible for bath occupation {nbar} >= 1")]
pub struct NoAntibunchingPossible {
    pub nbar: f64,
}

/// Adiabatic optical amplitudes `(α, β)` for a mechanical amplitude `ζ`.
pub fn optical_amplitudes(p: &SystemParams, zeta: Complex64) -> (Complex64, Complex64) {
    let h = p.h(zeta);
    let beta = Complex64::new(p.drive * p.kappa / (2.0 * h), 0.0);
    let alpha = -I * p.drive * p.g0 * zeta.conj() / h;
    (alpha, beta)
}

/// Optically mediated (anti)damping `γ_opt(ζ) = −g₀²E²κ/h_ζ²`.
pub fn classical_antidamping(p: &SystemParams, zeta: Complex64) -> f64 {
    let h = p.h(zeta);
    -p.g0 * p.g0 * p.drive * p.drive * p.kappa / (h * h)
}

/// Gain `ℛ = 16g₀²E²/(κ³γ)` with the effective damping.
pub fn gain(p: &SystemParams) -> f64 {
    16.0 * p.g0 * p.g0 * p.drive * p.drive / (p.kappa.powi(3) * p.gamma())
}

/// Optical diffusion `D_opt(ζ) = g₀²(κ/2)(|α|²+|β|²)/h_ζ`.
pub fn optical_diffusion(p: &SystemParams, zeta: Complex64) -> f64 {
    let (alpha, beta) = optical_amplitudes(p, zeta);
    p.g0 * p.g0 * 0.5 * p.kappa * (alpha.norm_sqr() + beta.norm_sqr()) / p.h(zeta)
}

pub fn limit_cycle(p: &SystemParams) -> std::result::Result<LimitCycleSolution, BelowThreshold> {
    let r = gain(p);
    // within rounding of ℛ = 1 counts as threshold
    if !(r > 1.0 + 4.0 * f64::EPSILON) {
        return Err(BelowThreshold { gain: r });
    }
    let (gamma, nbar) = p.effective_bath();
    let sr = r.sqrt();
    let zeta0 = (p.kappa / (2.0 * p.g0)) * (sr - 1.0).sqrt();
    let (alpha0, beta0) = optical_amplitudes(p, Complex64::new(zeta0, 0.0));
    let gamma_opt_fluct = gamma * (3.0 - 4.0 / sr);
    let damping = 4.0 * gamma * (1.0 - 1.0 / sr);
    debug_assert!((gamma + gamma_opt_fluct - damping).abs() <= 1e-12 * damping.abs().max(gamma));
    let fano = fano_from_gain(r, nbar);
    let g0k = p.g0 / p.kappa;
    Ok(LimitCycleSolution {
        zeta0,
        alpha0,
        beta0,
        gain: r,
        gamma_opt_fluct,
        damping,
        diffusion: gamma * (nbar + 1.0),
        fano,
        g2: 1.0 + 4.0 * g0k * g0k * (fano - 1.0) / (sr - 1.0),
        n_ph: p.kappa * gamma / (4.0 * p.g0 * p.g0) * sr,
    })
}

/// `F = ½(1+n̄)/(1−1/√ℛ)`, valid above threshold.
pub fn fano_from_gain(r: f64, nbar: f64) -> f64 {
    0.5 * (1.0 + nbar) / (1.0 - 1.0 / r.sqrt())
}

pub fn fano(p: &SystemParams) -> std::result::Result<f64, BelowThreshold> {
    let r = gain(p);
    // within rounding of ℛ = 1 counts as threshold
    if !(r > 1.0 + 4.0 * f64::EPSILON) {
        return Err(BelowThreshold { gain: r });
    }
    Ok(fano_from_gain(r, p.nbar()))
}

/// `g²(0) = 1 + (F−1)/⟨n̂⟩`; undefined for an empty mode.
pub fn g2_from_fano(fano: f64, mean_n: f64) -> Option<f64> {
    (mean_n > 0.0).then(|| 1.0 + (fano - 1.0) / mean_n)
}

/// `g²(0) − 1` at the limit cycle as a function of gain, in units of `(g₀/κ)²`.
pub fn g2_minus_one_units(r: f64, nbar: f64) -> f64 {
    4.0 * (fano_from_gain(r, nbar) - 1.0) / (r.sqrt() - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// Optimal photon number in units of `κγ/4g₀²` (equal to `√ℛ`).
    pub nph_units: f64,
    pub g2_opt: f64,
}

/// Photon number minimizing `g²(0)` and the minimum value.
pub fn optimal_operating_point(
    g0_over_kappa: f64,
    nbar: f64,
) -> std::result::Result<OperatingPoint, NoAntibunchingPossible> {
    if !(0.0..1.0).contains(&nbar) {
        return Err(NoAntibunchingPossible { nbar });
    }
    Ok(OperatingPoint {
        nph_units: (3.0 + nbar) / (1.0 - nbar),
        g2_opt: 1.0 - 0.5 * g0_over_kappa * g0_over_kappa * (1.0 - nbar).powi(2) / (1.0 + nbar),
    })
}

/// Effective damping and occupation with an extra cooling channel.
pub fn cooling_transform(gamma0: f64, nbar0: f64, gamma_l: f64, nbar_l: f64) -> (f64, f64) {
    let gamma = gamma0 + gamma_l;
    (gamma, (gamma0 * nbar0 + gamma_l * nbar_l) / gamma)
}

/// Sideband-cooling quantum limit `(κ_d/4ω_m)²`.
pub fn cooling_quantum_limit(kappa_d: f64, omega_m: f64) -> f64 {
    (kappa_d / (4.0 * omega_m)).powi(2)
}

/// Drive amplitude from input power (W), cavity decay rate (rad/s) and optical
/// angular frequency (rad/s).
pub fn drive_from_power(power: f64, kappa: f64, omega_b: f64) -> f64 {
    (kappa * power / (HBAR * omega_b)).sqrt()
}

/// Bose occupation at angular frequency `omega` (rad/s) and temperature (K).
pub fn thermal_occupation(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    1.0 / (HBAR * omega / (K_B * temperature)).exp_m1()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    /// `(n̄+1)γ/κ`
    pub thermal_ratio: f64,
    /// `g₀|α|/κ`
    pub alpha_ratio: f64,
    /// `g₀|β|/κ`
    pub beta_ratio: f64,
    /// `κ/ω_m`
    pub sideband_ratio: f64,
    /// `κ²/ω_m²`, the size of the dropped counter-rotating corrections.
    pub rwa_correction: f64,
    /// `4(ω_m/κ)²`
    pub enhancement: f64,
    pub flags: Vec<&'static str>,
}

impl ValidityReport {
    pub fn ok(&self) -> bool {
        self.flags.is_empty()
    }
}

pub fn validity_report(p: &SystemParams, zeta: Complex64) -> ValidityReport {
    let (gamma, nbar) = p.effective_bath();
    let (alpha, beta) = optical_amplitudes(p, zeta);
    let ratios = [
        ("thermal_ratio", (nbar + 1.0) * gamma / p.kappa),
        ("alpha_ratio", p.g0 * alpha.norm() / p.kappa),
        ("beta_ratio", p.g0 * beta.norm() / p.kappa),
        ("sideband_ratio", p.kappa / p.omega_m),
        ("rwa_correction", (p.kappa / p.omega_m).powi(2)),
    ];
    let flags = ratios
        .iter()
        .filter(|(_, v)| *v > VALIDITY_THRESHOLD)
        .map(|(n, _)| *n)
        .collect();
    ValidityReport {
        thermal_ratio: ratios[0].1,
        alpha_ratio: ratios[1].1,
        beta_ratio: ratios[2].1,
        sideband_ratio: ratios[3].1,
        rwa_correction: ratios[4].1,
        enhancement: 4.0 * (p.omega_m / p.kappa).powi(2),
        flags,
    }
}

#[derive(Debug, Clone)]
pub struct ClassicalTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<ClassicalState>,
    pub stats: IntegrationStats,
}

impl ClassicalTrajectory {
    pub fn last(&self) -> &ClassicalState {
        self.states.last().expect("trajectory holds at least the initial state")
    }
}

/// Integrates the noiseless amplitude equations
/// `α̇ = −ig₀βζ* − κα/2`, `β̇ = −ig₀αζ − κβ/2 + E`, `ζ̇ = −ig₀α*β − γζ/2`.
pub fn classical_evolve(
    p: &SystemParams,
    s0: ClassicalState,
    t_end: f64,
    tol: Tolerances,
) -> Result<ClassicalTrajectory> {
    p.validate()?;
    let g0 = p.g0;
    let half_k = 0.5 * p.kappa;
    let half_g = 0.5 * p.gamma();
    let drive = Complex64::new(p.drive, 0.0);
    let mut rhs = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let (a, b, z) = (y[0], y[1], y[2]);
        dy[0] = -I * g0 * b * z.conj() - half_k * a;
        dy[1] = -I * g0 * a * z - half_k * b + drive;
        dy[2] = -I * g0 * a.conj() * b - half_g * z;
    };
    let mut y = vec![s0.alpha, s0.beta, s0.zeta];
    let mut times = Vec::new();
    let mut states = Vec::new();
    let h_max = t_end / 50.0;
    let stats = ode::integrate(&mut rhs, 0.0, &mut y, t_end, tol, h_max, |t, y| {
        times.push(t);
        states.push(ClassicalState {
            alpha: y[0],
            beta: y[1],
            zeta: y[2],
        });
    })?;
    Ok(ClassicalTrajectory { times, states, stats })
}
