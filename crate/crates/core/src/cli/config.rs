//! TOML run configuration.
//!
//! ```toml
//! units = "kappa"            # or "si": frequencies in Hz (ω/2π), power in W
//! seed = 7
//!
//! [params]
//! g0 = 0.25
//! gamma = 0.0032
//! nbar = 0.0                 # or temperature = 0.2 (si only)
//! drive = 0.16               # or gain = 4.0, or power + omega_b (si only)
//! omega_m = 20.0
//! ```
//!
//! Rates are normalized to `κ = 1` before anything is computed.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::analytics::{self, Cooling, SystemParams};
use crate::error::{Error, Result};
use crate::model::FrameChoice;
use crate::ode::Tolerances;
use crate::solvers::TrajectoryConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Kappa,
    Si,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Analytics,
    Sweep,
    Steady,
    Mcwf,
    Wigner,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    /// Binary Wigner raster.
    Bin,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub units: Units,
    pub mode: Option<RunMode>,
    pub seed: Option<u64>,
    pub params: ParamsConfig,
    pub dims: Option<DimsConfig>,
    pub frame: Option<FrameChoice>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub trajectories: TrajectorySection,
    #[serde(default)]
    pub quantum: QuantumConfig,
    #[serde(default)]
    pub wigner: WignerConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub g0: f64,
    pub kappa: Option<f64>,
    pub gamma: f64,
    pub nbar: Option<f64>,
    /// Kelvin; converted with the mechanical frequency (si only).
    pub temperature: Option<f64>,
    pub drive: Option<f64>,
    pub gain: Option<f64>,
    /// Watts, together with `omega_b` (si only).
    pub power: Option<f64>,
    pub omega_b: Option<f64>,
    pub omega_m: f64,
    pub delta: Option<f64>,
    pub cooling: Option<CoolingConfig>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoolingConfig {
    pub gamma_l: f64,
    pub kappa_d: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimsConfig {
    pub n_a: usize,
    pub n_b: usize,
    pub n_c: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub variable: String,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl Axis {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.points == 0 {
            return Err(Error::Config(format!("axis {} needs at least one point", self.variable)));
        }
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::Config(format!("axis {} has a non-finite range", self.variable)));
        }
        if self.scale == Scale::Log && !(self.min > 0.0 && self.max > 0.0) {
            return Err(Error::Config(format!("log axis {} needs a positive range", self.variable)));
        }
        if self.points == 1 {
            return Ok(vec![self.min]);
        }
        let n = (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| {
                let t = i as f64 / n;
                match self.scale {
                    Scale::Linear => self.min + t * (self.max - self.min),
                    Scale::Log => (self.min.ln() + t * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub axes: Vec<Axis>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    pub n_traj: Option<usize>,
    pub tau: Option<f64>,
    pub initial_spread: Option<f64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub max_jump_prob: Option<f64>,
    pub bootstrap: Option<usize>,
}

impl TrajectorySection {
    pub fn to_config(&self, seed: u64) -> TrajectoryConfig {
        let d = TrajectoryConfig::default();
        let t = Tolerances::default();
        TrajectoryConfig {
            n_traj: self.n_traj.unwrap_or(d.n_traj),
            tau: self.tau.or(d.tau),
            seed,
            initial_spread: self.initial_spread.unwrap_or(d.initial_spread),
            tol: Tolerances {
                rtol: self.rtol.unwrap_or(t.rtol),
                atol: self.atol.unwrap_or(t.atol),
            },
            max_jump_prob: self.max_jump_prob.unwrap_or(d.max_jump_prob),
            bootstrap: self.bootstrap.unwrap_or(d.bootstrap),
            record_density: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scan {
    #[default]
    Point,
    Fano,
    Negativity,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl Default for GammaGrid {
    fn default() -> Self {
        Self {
            min: 1e-4,
            max: 1e-1,
            points: 20,
            scale: Scale::Log,
        }
    }
}

impl GammaGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        Axis {
            variable: "gamma".into(),
            min: self.min,
            max: self.max,
            points: self.points,
            scale: self.scale,
        }
        .values()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumConfig {
    #[serde(default)]
    pub scan: Scan,
    /// Coupling values `g₀/κ` of a scan.
    #[serde(default)]
    pub g0_values: Vec<f64>,
    /// Gains of a Fano scan.
    #[serde(default)]
    pub gains: Vec<f64>,
    /// Fixed `g₀E/κ²` of a Fano scan.
    #[serde(default = "default_coupling_drive")]
    pub coupling_drive: f64,
    /// Fixed `E/κ` of a negativity scan.
    #[serde(default = "default_negativity_drive")]
    pub drive: f64,
    /// Bath occupations of a negativity scan (defaults to `params.nbar`).
    pub nbar_values: Option<Vec<f64>>,
    #[serde(default)]
    pub gamma_grid: GammaGrid,
}

fn default_coupling_drive() -> f64 {
    0.04
}

fn default_negativity_drive() -> f64 {
    0.07
}

impl Default for QuantumConfig {
    fn default() -> Self {
        Self {
            scan: Scan::Point,
            g0_values: Vec::new(),
            gains: Vec::new(),
            coupling_drive: default_coupling_drive(),
            drive: default_negativity_drive(),
            nbar_values: None,
            gamma_grid: GammaGrid::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WignerSource {
    #[default]
    Steady,
    Mcwf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerConfig {
    #[serde(default = "default_wigner_points")]
    pub points: usize,
    /// Fixed half-width; the window is sized from the state otherwise.
    pub half_width: Option<f64>,
    pub center: Option<[f64; 2]>,
    #[serde(default)]
    pub source: WignerSource,
}

fn default_wigner_points() -> usize {
    201
}

impl Default for WignerConfig {
    fn default() -> Self {
        Self {
            points: default_wigner_points(),
            half_width: None,
            center: None,
            source: WignerSource::Steady,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// System parameters in units of `κ`.
    pub fn system_params(&self) -> Result<SystemParams> {
        self.params.to_system_params(self.units)
    }
}

impl ParamsConfig {
    pub fn to_system_params(&self, units: Units) -> Result<SystemParams> {
        let drive_sources = [self.drive.is_some(), self.gain.is_some(), self.power.is_some()]
            .iter()
            .filter(|&&b| b)
            .count();
        if drive_sources > 1 {
            return Err(Error::Config("give at most one of drive, gain, power".into()));
        }
        if self.nbar.is_some() && self.temperature.is_some() {
            return Err(Error::Config("give nbar or temperature, not both".into()));
        }
        let p = match units {
            Units::Kappa => {
                if let Some(k) = self.kappa {
                    if k != 1.0 {
                        return Err(Error::Config(format!("in kappa units kappa is 1, got {k}")));
                    }
                }
                if self.temperature.is_some() || self.power.is_some() || self.omega_b.is_some() {
                    return Err(Error::Config("temperature, power and omega_b need units = \"si\"".into()));
                }
                SystemParams {
                    g0: self.g0,
                    kappa: 1.0,
                    gamma0: self.gamma,
                    nbar0: self.nbar.unwrap_or(0.0),
                    drive: self.drive.unwrap_or(0.0),
                    omega_m: self.omega_m,
                    delta: self.delta.unwrap_or(self.omega_m),
                    cooling: self.cooling.map(|c| Cooling {
                        gamma_l: c.gamma_l,
                        kappa_d: c.kappa_d,
                    }),
                }
            }
            Units::Si => {
                let kappa = self
                    .kappa
                    .ok_or_else(|| Error::Config("si units need params.kappa (Hz)".into()))?;
                let nbar = match self.temperature {
                    Some(t) => analytics::thermal_occupation(TAU * self.omega_m, t),
                    None => self.nbar.unwrap_or(0.0),
                };
                let drive = match (self.drive, self.power) {
                    (Some(d), _) => TAU * d,
                    (None, Some(pw)) => {
                        let ob = self
                            .omega_b
                            .ok_or_else(|| Error::Config("power needs omega_b (optical frequency, Hz)".into()))?;
                        analytics::drive_from_power(pw, TAU * kappa, TAU * ob)
                    }
                    (None, None) => 0.0,
                };
                SystemParams {
                    g0: TAU * self.g0,
                    kappa: TAU * kappa,
                    gamma0: TAU * self.gamma,
                    nbar0: nbar,
                    drive,
                    omega_m: TAU * self.omega_m,
                    delta: TAU * self.delta.unwrap_or(self.omega_m),
                    cooling: self.cooling.map(|c| Cooling {
                        gamma_l: TAU * c.gamma_l,
                        kappa_d: TAU * c.kappa_d,
                    }),
                }
                .normalized()
            }
        };
        p.validate().map_err(|e| Error::Config(e.to_string()))?;
        match self.gain {
            Some(r) => p.with_gain(r).map_err(|e| Error::Config(e.to_string())),
            None => Ok(p),
        }
    }
}

/// Sets one named quantity on κ-normalized parameters.
pub fn set_variable(p: &SystemParams, name: &str, value: f64) -> Result<SystemParams> {
    let mut q = *p;
    match name {
        "g0" => q.g0 = value,
        "gamma" => q.gamma0 = value,
        "nbar" => q.nbar0 = value,
        "drive" => q.drive = value,
        "omega_m" => {
            let resonant = q.delta == q.omega_m;
            q.omega_m = value;
            if resonant {
                q.delta = value;
            }
        }
        "delta" => q.delta = value,
        "gain" => return p.with_gain(value).map_err(|e| Error::Config(e.to_string())),
        // photon number in units of κγ/4g₀² equals √ℛ
        "nph" => return p.with_gain(value * value).map_err(|e| Error::Config(e.to_string())),
        other => {
            return Err(Error::Config(format!(
                "unknown sweep variable {other:?}; expected one of {}",
                SWEEP_VARIABLES.join(", ")
            )))
        }
    }
    Ok(q)
}

pub const SWEEP_VARIABLES: [&str; 8] = ["g0", "gamma", "nbar", "drive", "omega_m", "delta", "gain", "nph"];
