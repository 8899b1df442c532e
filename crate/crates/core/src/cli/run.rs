use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;

use super::config::{set_variable, RunConfig, Scan, WignerSource};
use super::output::{Metadata, Table, Value};
use crate::analytics::{self, SystemParams};
use crate::error::{Error, Result};
use crate::hilbert::{Mode, ModeDims, QuantumState};
use crate::model::{build_model, FrameChoice, LindbladModel};
use crate::observables::{phonon_stats, wigner, GridSpec, PhononStats, WignerGrid};
use crate::solvers::{mcwf_ensemble, steady_state, SteadyStateResult, TrajectoryConfig};

/// Result of one CLI command.
#[derive(Debug, Clone)]
pub struct Report {
    pub table: Table,
    pub metadata: Metadata,
    /// Validity conditions that were violated (`validate` only).
    pub flags: Vec<&'static str>,
    pub grid: Option<WignerGrid>,
}

impl Report {
    fn table(table: Table, metadata: Metadata) -> Self {
        Self {
            table,
            metadata,
            flags: Vec::new(),
            grid: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Context {
    pub cfg: RunConfig,
    pub seed: u64,
    pub max_dim: usize,
}

pub const PARAM_COLUMNS: [&str; 9] = [
    "g0", "kappa", "gamma", "nbar", "drive", "omega_m", "delta", "gamma_eff", "nbar_eff",
];

pub const ANALYTIC_COLUMNS: [&str; 26] = [
    "gain",
    "above_threshold",
    "zeta0",
    "mean_phonons",
    "alpha0_re",
    "alpha0_im",
    "beta0_re",
    "beta0_im",
    "gamma_opt_fluct",
    "damping",
    "diffusion",
    "fano",
    "g2",
    "g2_minus_1_units",
    "n_photons",
    "nph_units",
    "opt_nph_units",
    "opt_g2",
    "opt_g2_minus_1",
    "thermal_ratio",
    "alpha_ratio",
    "beta_ratio",
    "sideband_ratio",
    "rwa_correction",
    "enhancement",
    "validity_flags",
];

fn param_values(p: &SystemParams) -> Vec<Value> {
    let (g, n) = p.effective_bath();
    vec![
        p.g0.into(),
        p.kappa.into(),
        p.gamma0.into(),
        p.nbar0.into(),
        p.drive.into(),
        p.omega_m.into(),
        p.delta.into(),
        g.into(),
        n.into(),
    ]
}

fn columns(groups: &[&[&'static str]]) -> Vec<&'static str> {
    groups.iter().flat_map(|g| g.iter().copied()).collect()
}

fn analytic_row(p: &SystemParams) -> Vec<Value> {
    let r = analytics::gain(p);
    let lc = analytics::limit_cycle(p).ok();
    let zeta = Complex64::new(lc.map_or(0.0, |l| l.zeta0), 0.0);
    let (alpha, beta) = analytics::optical_amplitudes(p, zeta);
    let v = analytics::validity_report(p, zeta);
    let nbar = p.nbar();
    let opt = analytics::optimal_operating_point(p.g0 / p.kappa, nbar).ok();
    let nph_unit = p.kappa * p.gamma() / (4.0 * p.g0 * p.g0);
    let mut row = param_values(p);
    row.extend([
        r.into(),
        lc.is_some().into(),
        zeta.re.into(),
        (zeta.re * zeta.re).into(),
        alpha.re.into(),
        alpha.im.into(),
        beta.re.into(),
        beta.im.into(),
        lc.map(|l| l.gamma_opt_fluct).into(),
        lc.map(|l| l.damping).into(),
        lc.map(|l| l.diffusion).into(),
        lc.map(|l| l.fano).into(),
        lc.map(|l| l.g2).into(),
        lc.map(|_| analytics::g2_minus_one_units(r, nbar)).into(),
        (alpha.norm_sqr() + beta.norm_sqr()).into(),
        lc.map(|l| l.n_ph / nph_unit).into(),
        opt.map(|o| o.nph_units).into(),
        opt.map(|o| o.g2_opt).into(),
        opt.map(|o| o.g2_opt - 1.0).into(),
        v.thermal_ratio.into(),
        v.alpha_ratio.into(),
        v.beta_ratio.into(),
        v.sideband_ratio.into(),
        v.rwa_correction.into(),
        v.enhancement.into(),
        v.flags.join(";").into(),
    ]);
    row
}

pub fn run_analytics(ctx: &Context) -> Result<Report> {
    let p = ctx.cfg.system_params()?;
    let mut t = Table::new(columns(&[&PARAM_COLUMNS, &ANALYTIC_COLUMNS]));
    t.push(analytic_row(&p));
    Ok(Report::table(t, Metadata::new("analytics", ctx.seed)))
}

/// Grid over one or two axes, applied in axis order, rows in row-major order.
pub fn run_sweep(ctx: &Context) -> Result<Report> {
    let base = ctx.cfg.system_params()?;
    let axes = &ctx.cfg.sweep.axes;
    if axes.is_empty() || axes.len() > 2 {
        return Err(Error::Config(format!("a sweep needs 1 or 2 axes, got {}", axes.len())));
    }
    let values: Vec<Vec<f64>> = axes.iter().map(|a| a.values()).collect::<Result<_>>()?;
    let mut points: Vec<Vec<f64>> = values[0].iter().map(|&v| vec![v]).collect();
    if let Some(second) = values.get(1) {
        points = points
            .into_iter()
            .flat_map(|p| second.iter().map(move |&v| [p.clone(), vec![v]].concat()))
            .collect();
    }
    let rows: Vec<Vec<Value>> = points
        .par_iter()
        .map(|pt| {
            let mut p = base;
            for (axis, &v) in axes.iter().zip(pt) {
                p = set_variable(&p, &axis.variable, v)?;
            }
            p.validate().map_err(|e| Error::Config(e.to_string()))?;
            Ok(analytic_row(&p))
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(columns(&[&PARAM_COLUMNS, &ANALYTIC_COLUMNS]));
    rows.into_iter().for_each(|r| t.push(r));
    let meta = Metadata::new("sweep", ctx.seed).with(
        "axes",
        json!(axes.iter().map(|a| &a.variable).collect::<Vec<_>>()),
    );
    Ok(Report::table(t, meta))
}

pub fn run_validate(ctx: &Context) -> Result<Report> {
    let p = ctx.cfg.system_params()?;
    let zeta = Complex64::new(analytics::limit_cycle(&p).map_or(0.0, |l| l.zeta0), 0.0);
    let v = analytics::validity_report(&p, zeta);
    let mut t = Table::new(columns(&[
        &PARAM_COLUMNS,
        &[
            "thermal_ratio",
            "alpha_ratio",
            "beta_ratio",
            "sideband_ratio",
            "rwa_correction",
            "enhancement",
            "threshold",
            "validity_flags",
        ],
    ]));
    let mut row = param_values(&p);
    row.extend([
        v.thermal_ratio.into(),
        v.alpha_ratio.into(),
        v.beta_ratio.into(),
        v.sideband_ratio.into(),
        v.rwa_correction.into(),
        v.enhancement.into(),
        analytics::VALIDITY_THRESHOLD.into(),
        v.flags.join(";").into(),
    ]);
    t.push(row);
    Ok(Report {
        flags: v.flags.clone(),
        ..Report::table(t, Metadata::new("validate", ctx.seed))
    })
}

/// Fock cutoffs that hold the semiclassical state with generous tails.
pub fn suggest_dims(p: &SystemParams, frame: FrameChoice, max_dim: usize) -> Result<ModeDims> {
    let nbar = p.nbar();
    let lc = analytics::limit_cycle(p).ok();
    let zeta = Complex64::new(lc.map_or(0.0, |l| l.zeta0), 0.0);
    let (alpha, beta) = analytics::optical_amplitudes(p, zeta);
    let optical = |n: f64| match frame {
        FrameChoice::Lab => (n + 5.0 * n.sqrt() + 3.0).ceil() as usize,
        FrameChoice::Displaced => 3,
    };
    let n_c = match (frame, lc) {
        (FrameChoice::Lab, Some(l)) => {
            let n = l.mean_phonons();
            (n + 6.0 * (l.fano.max(1.0) * n + nbar + 1.0).sqrt() + 6.0).ceil() as usize
        }
        (FrameChoice::Lab, None) => (nbar + 12.0 * (nbar * (nbar + 1.0)).sqrt() + 8.0).ceil() as usize,
        (FrameChoice::Displaced, _) => (4.0 * nbar + 12.0).ceil() as usize,
    };
    ModeDims::with_limit(optical(alpha.norm_sqr()), optical(beta.norm_sqr()), n_c, max_dim)
}

fn dims_for(ctx: &Context, p: &SystemParams, frame: FrameChoice) -> Result<ModeDims> {
    match ctx.cfg.dims {
        Some(d) => ModeDims::with_limit(d.n_a, d.n_b, d.n_c, ctx.max_dim),
        None => suggest_dims(p, frame, ctx.max_dim),
    }
}

fn frame_for(ctx: &Context, p: &SystemParams, mcwf: bool) -> FrameChoice {
    ctx.cfg.frame.unwrap_or(if mcwf && analytics::limit_cycle(p).is_ok() {
        FrameChoice::Displaced
    } else {
        FrameChoice::Lab
    })
}

const QUANTUM_COLUMNS: [&str; 20] = [
    "gain",
    "n_a",
    "n_b",
    "n_c",
    "frame",
    "solver",
    "mean_n",
    "mean_n2",
    "fano",
    "g2",
    "se_mean_n",
    "se_fano",
    "se_g2",
    "fano_analytic",
    "fano_rel_dev",
    "relative_residual",
    "edge_population_c",
    "n_traj",
    "tau",
    "total_jumps",
];

struct QuantumPoint {
    stats: PhononStats,
    residual: Option<f64>,
    edge: Option<f64>,
    n_traj: Option<usize>,
    tau: Option<f64>,
    jumps: Option<usize>,
}

fn solve_point(model: &LindbladModel, mcwf: Option<&TrajectoryConfig>) -> Result<QuantumPoint> {
    match mcwf {
        None => {
            let ss = steady_state(model)?;
            let stats = phonon_stats(&ss.rho, &model.phonon_number()?)?;
            Ok(QuantumPoint {
                stats,
                residual: Some(ss.relative_residual),
                edge: Some(ss.edge_populations()[2]),
                n_traj: None,
                tau: None,
                jumps: None,
            })
        }
        Some(cfg) => {
            let e = mcwf_ensemble(model, &[], cfg)?;
            Ok(QuantumPoint {
                stats: e.stats,
                residual: None,
                edge: None,
                n_traj: Some(e.n_traj),
                tau: Some(e.tau),
                jumps: Some(e.total_jumps),
            })
        }
    }
}

fn quantum_row(p: &SystemParams, model: &LindbladModel, frame: FrameChoice, q: &QuantumPoint) -> Vec<Value> {
    let f_an = analytics::fano(p).ok();
    let err = q.stats.errors;
    let mut row = param_values(p);
    row.extend([
        analytics::gain(p).into(),
        model.dims.n_a.into(),
        model.dims.n_b.into(),
        model.dims.n_c.into(),
        match frame {
            FrameChoice::Lab => "lab",
            FrameChoice::Displaced => "displaced",
        }
        .into(),
        if q.n_traj.is_some() { "mcwf" } else { "steady" }.into(),
        q.stats.mean_n.into(),
        q.stats.mean_n2.into(),
        q.stats.fano.into(),
        q.stats.g2.into(),
        err.map(|e| e.mean_n).into(),
        err.and_then(|e| e.fano).into(),
        err.and_then(|e| e.g2).into(),
        f_an.into(),
        f_an.zip(q.stats.fano).map(|(a, f)| (f - a) / a).into(),
        q.residual.into(),
        q.edge.into(),
        q.n_traj.map_or(Value::Missing, Value::from),
        q.tau.into(),
        q.jumps.map_or(Value::Missing, Value::from),
    ]);
    row
}

/// `steady` and `mcwf` commands: a single point, a Fano scan at fixed `g₀E/κ²`,
/// or a negativity scan optimized over `γ`.
pub fn run_quantum(ctx: &Context, use_mcwf: bool) -> Result<Report> {
    let base = ctx.cfg.system_params()?;
    let q = &ctx.cfg.quantum;
    let traj = use_mcwf.then(|| ctx.cfg.trajectories.to_config(ctx.seed));
    let command = if use_mcwf { "mcwf" } else { "steady" };
    match q.scan {
        Scan::Point => {
            let frame = frame_for(ctx, &base, use_mcwf);
            let model = build_model(&base, dims_for(ctx, &base, frame)?, frame)?;
            let point = solve_point(&model, traj.as_ref())?;
            let mut t = Table::new(columns(&[&PARAM_COLUMNS, &QUANTUM_COLUMNS]));
            t.push(quantum_row(&base, &model, frame, &point));
            Ok(Report::table(t, Metadata::new(command, ctx.seed)))
        }
        Scan::Fano => {
            let g0s = if q.g0_values.is_empty() { vec![base.g0] } else { q.g0_values.clone() };
            let gains = if q.gains.is_empty() {
                vec![analytics::gain(&base)]
            } else {
                q.gains.clone()
            };
            let mut points = Vec::new();
            for &g0 in &g0s {
                if !(g0 > 0.0) {
                    return Err(Error::Config(format!("g0 values must be positive, got {g0}")));
                }
                for &r in &gains {
                    let drive = q.coupling_drive / g0;
                    let gamma0 = 16.0 * g0 * g0 * drive * drive / r;
                    points.push(SystemParams {
                        g0,
                        drive,
                        gamma0,
                        cooling: None,
                        ..base
                    });
                }
            }
            let solve = |p: &SystemParams| -> Result<Vec<Value>> {
                let frame = frame_for(ctx, p, use_mcwf);
                let model = build_model(p, dims_for(ctx, p, frame)?, frame)?;
                let point = solve_point(&model, traj.as_ref())?;
                Ok(quantum_row(p, &model, frame, &point))
            };
            // trajectories parallelize internally
            let rows: Vec<Vec<Value>> = if use_mcwf {
                points.iter().map(solve).collect::<Result<_>>()?
            } else {
                points.par_iter().map(solve).collect::<Result<_>>()?
            };
            let mut t = Table::new(columns(&[&PARAM_COLUMNS, &QUANTUM_COLUMNS]));
            rows.into_iter().for_each(|r| t.push(r));
            let meta = Metadata::new(command, ctx.seed).with("coupling_drive", json!(q.coupling_drive));
            Ok(Report::table(t, meta))
        }
        Scan::Negativity => {
            if use_mcwf {
                return Err(Error::Config("the negativity scan uses the steady-state solver".into()));
            }
            run_negativity_scan(ctx, &base)
        }
    }
}

pub const NEGATIVITY_COLUMNS: [&str; 13] = [
    "g0",
    "nbar",
    "drive",
    "best_gamma",
    "best_gain",
    "best_negativity",
    "mean_n",
    "fano",
    "n_a",
    "n_b",
    "n_c",
    "gammas_scanned",
    "wigner_points",
];

struct NegativityPoint {
    gamma: f64,
    gain: f64,
    negativity: f64,
    stats: PhononStats,
    dims: ModeDims,
}

/// Steady state and mechanical Wigner negativity for one parameter point.
fn negativity_point(p: &SystemParams, dims: ModeDims, points: usize) -> Result<NegativityPoint> {
    let model = build_model(p, dims, FrameChoice::Lab)?;
    let ss = steady_state(&model)?;
    let stats = phonon_stats(&ss.rho, &model.phonon_number()?)?;
    let rho_c = ss.rho.partial_trace(Mode::C);
    let spec = GridSpec::auto(&rho_c, Complex64::new(0.0, 0.0), points);
    let grid = wigner::wigner(&rho_c, &spec, Complex64::new(0.0, 0.0))?;
    Ok(NegativityPoint {
        gamma: p.gamma0,
        gain: analytics::gain(p),
        negativity: grid.negativity()?,
        stats,
        dims,
    })
}

fn run_negativity_scan(ctx: &Context, base: &SystemParams) -> Result<Report> {
    let q = &ctx.cfg.quantum;
    let g0s = if q.g0_values.is_empty() { vec![base.g0] } else { q.g0_values.clone() };
    let nbars = q.nbar_values.clone().unwrap_or_else(|| vec![base.nbar0]);
    let gammas = q.gamma_grid.values()?;
    let points = ctx.cfg.wigner.points;
    let mut t = Table::new(NEGATIVITY_COLUMNS.to_vec());
    for &g0 in &g0s {
        for &nbar in &nbars {
            let results: Vec<NegativityPoint> = gammas
                .par_iter()
                .map(|&gamma0| {
                    let p = SystemParams {
                        g0,
                        nbar0: nbar,
                        drive: q.drive,
                        gamma0,
                        cooling: None,
                        ..*base
                    };
                    let dims = dims_for(ctx, &p, FrameChoice::Lab)?;
                    negativity_point(&p, dims, points)
                })
                .collect::<Result<_>>()?;
            // first minimum in grid order
            let best = results
                .iter()
                .fold(None::<&NegativityPoint>, |acc, r| match acc {
                    Some(b) if b.negativity <= r.negativity => Some(b),
                    _ => Some(r),
                })
                .expect("gamma grid is nonempty");
            t.push(vec![
                g0.into(),
                nbar.into(),
                q.drive.into(),
                best.gamma.into(),
                best.gain.into(),
                best.negativity.into(),
                best.stats.mean_n.into(),
                best.stats.fano.into(),
                best.dims.n_a.into(),
                best.dims.n_b.into(),
                best.dims.n_c.into(),
                gammas.len().into(),
                points.into(),
            ]);
        }
    }
    let meta = Metadata::new("steady", ctx.seed).with("wigner_convention", json!(WIGNER_CONVENTION));
    Ok(Report::table(t, meta))
}

const WIGNER_CONVENTION: &str = "x = sqrt(2) Re(alpha), p = sqrt(2) Im(alpha); integral over dx dp is 1";

/// Mechanical Wigner function of the steady state or of a trajectory ensemble.
pub fn run_wigner(ctx: &Context) -> Result<Report> {
    let p = ctx.cfg.system_params()?;
    let wc = &ctx.cfg.wigner;
    let (rho_c, offset, stats) = match wc.source {
        WignerSource::Steady => {
            let frame = ctx.cfg.frame.unwrap_or(FrameChoice::Lab);
            let model = build_model(&p, dims_for(ctx, &p, frame)?, frame)?;
            let ss: SteadyStateResult = steady_state(&model)?;
            let stats = phonon_stats(&ss.rho, &model.phonon_number()?)?;
            (ss.rho.partial_trace(Mode::C), model.mechanical_offset(), stats)
        }
        WignerSource::Mcwf => {
            let frame = frame_for(ctx, &p, true);
            let model = build_model(&p, dims_for(ctx, &p, frame)?, frame)?;
            let cfg = TrajectoryConfig {
                record_density: true,
                ..ctx.cfg.trajectories.to_config(ctx.seed)
            };
            let e = mcwf_ensemble(&model, &[], &cfg)?;
            let sigma = e.density().expect("density recorded");
            let sigma = (&sigma + sigma.adjoint()) * Complex64::new(0.5, 0.0);
            let tr = sigma.trace();
            let state = QuantumState::from_density(model.dims, sigma / tr)?;
            (state.partial_trace(Mode::C), model.mechanical_offset(), e.stats)
        }
    };
    let auto = GridSpec::auto(&rho_c, offset, wc.points);
    let spec = match (wc.half_width, wc.center) {
        (None, None) => auto,
        (hw, center) => {
            let c = center.map_or(((auto.x_min + auto.x_max) / 2.0, (auto.p_min + auto.p_max) / 2.0), |c| {
                (c[0], c[1])
            });
            let h = hw.unwrap_or((auto.x_max - auto.x_min).max(auto.p_max - auto.p_min) / 2.0);
            GridSpec::square(c, h, wc.points)
        }
    };
    let grid = wigner::wigner(&rho_c, &spec, offset)?;
    let negativity = grid.negativity()?;
    let mut t = Table::new(vec!["x", "p", "w"]);
    for (ip, &pv) in grid.p.iter().enumerate() {
        for (ix, &xv) in grid.x.iter().enumerate() {
            t.push(vec![xv.into(), pv.into(), grid.at(ix, ip).into()]);
        }
    }
    let meta = Metadata::new("wigner", ctx.seed)
        .with("convention", json!(WIGNER_CONVENTION))
        .with("negativity", json!(negativity))
        .with("integral", json!(grid.integral()))
        .with("min", json!(grid.min()))
        .with("max", json!(grid.max()))
        .with("mean_n", json!(stats.mean_n))
        .with("fano", json!(stats.fano))
        .with("grid", json!({"nx": grid.x.len(), "np": grid.p.len(),
            "x_min": spec.x_min, "x_max": spec.x_max, "p_min": spec.p_min, "p_max": spec.p_max}));
    Ok(Report {
        grid: Some(grid),
        ..Report::table(t, meta)
    })
}
