//! End-to-end acceptance checks. Runs without the libtest harness so that each
//! criterion prints exactly one PASS/FAIL line.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use phonon_laser::analytics::{self, ClassicalState, SystemParams};
use phonon_laser::cli::config::RunConfig;
use phonon_laser::cli::output::{Table, Value};
use phonon_laser::cli::run::{self, Context};
use phonon_laser::hilbert::{FockOperator, Mode, ModeDims, QuantumState};
use phonon_laser::model::{build_model, FrameChoice};
use phonon_laser::observables::{phonon_stats, wigner, GridSpec};
use phonon_laser::ode::Tolerances;
use phonon_laser::solvers::{mcwf_ensemble, steady_state, TrajectoryConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria known to miss their stated tolerance. A listed criterion that
/// starts passing is reported as an error too, so this list stays accurate.
const EXPECTED_FAIL: &[u32] = &[7];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn num(t: &Table, row: usize, col: &str) -> f64 {
    match t.get(row, col) {
        Some(Value::Num(v)) => *v,
        Some(Value::Int(v)) => *v as f64,
        other => panic!("column {col} row {row}: expected a number, got {other:?}"),
    }
}

fn ctx(toml: &str) -> Context {
    Context {
        cfg: RunConfig::from_toml(toml).expect("valid config"),
        seed: 0,
        max_dim: phonon_laser::hilbert::DEFAULT_MAX_DIM,
    }
}

fn identity_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let kappa = 10f64.powf(rng.random_range(-1.0..1.0));
        let g0 = kappa * 10f64.powf(rng.random_range(-2.0..0.5));
        let gamma = kappa * 10f64.powf(rng.random_range(-4.0..-1.0));
        let nbar = rng.random_range(0.0..5.0);
        let r = 1.0 + 10f64.powf(rng.random_range(-2.0..2.0));
        let base = SystemParams {
            kappa,
            ..SystemParams::in_kappa_units(g0, gamma, nbar, 0.0, 20.0 * kappa)
        };
        let p = base.with_gain(r).unwrap();
        let lc = analytics::limit_cycle(&p).unwrap();
        let z = Complex64::new(lc.zeta0, 0.0);

        // adiabatic amplitudes written out independently
        let h = g0 * g0 * lc.zeta0 * lc.zeta0 + kappa * kappa / 4.0;
        let alpha2 = (p.drive * g0 * lc.zeta0 / h).powi(2);
        let beta2 = (p.drive * kappa / (2.0 * h)).powi(2);
        let n_ph = kappa * gamma / (4.0 * g0 * g0) * r.sqrt();
        let fano = 0.5 * (1.0 + nbar) / (1.0 - 1.0 / r.sqrt());
        let n = lc.zeta0 * lc.zeta0;
        let g2_from_fano = 1.0 + (fano - 1.0) / n;
        let g2_units = 1.0 + (g0 / kappa).powi(2) * analytics::g2_minus_one_units(r, nbar);

        let errs = [
            rel(analytics::classical_antidamping(&p, z), -gamma),
            rel(analytics::optical_diffusion(&p, z), gamma / 2.0),
            rel(lc.n_ph, n_ph),
            rel(alpha2 + beta2, n_ph),
            rel(lc.fano, fano),
            rel(lc.g2, g2_from_fano),
            rel(g2_units, g2_from_fano),
            rel(analytics::g2_from_fano(lc.fano, n).unwrap(), lc.g2),
            rel(n, (kappa / (2.0 * g0)).powi(2) * (r.sqrt() - 1.0)),
        ];
        worst = errs.iter().fold(worst, |w, &e| w.max(e));
    }
    outcome(worst <= 1e-10, format!("1000 draws, worst relative error {worst:.2e}"))
}

fn contour() -> Outcome {
    let mut worst_f = 0.0_f64;
    let mut worst_g = 0.0_f64;
    for k in 0..200 {
        // n̄ = 1 − 2/√ℛ needs √ℛ > 2
        let s = 2.0 + 0.05 * k as f64;
        let r = s * s;
        let nbar = 1.0 - 2.0 / s;
        for g0 in [0.01, 0.1, 1.0] {
            let p = SystemParams::in_kappa_units(g0, 1e-3, nbar, 0.0, 20.0).with_gain(r).unwrap();
            let lc = analytics::limit_cycle(&p).unwrap();
            worst_f = worst_f.max((lc.fano - 1.0).abs());
            worst_g = worst_g.max((lc.g2 - 1.0).abs());
        }
    }
    let pass = worst_f <= 1e-12 && worst_g <= 1e-12;
    outcome(pass, format!("max |F-1| = {worst_f:.1e}, max |g2-1| = {worst_g:.1e}"))
}

fn optimum() -> Outcome {
    let mut worst_val = 0.0_f64;
    let mut worst_loc = 0.0_f64;
    let mut within = true;
    for x in [0.05, 0.1, 0.5] {
        for nbar in [0.0, 0.25, 0.5] {
            let g2 = |s: f64| 1.0 + x * x * analytics::g2_minus_one_units(s * s, nbar);
            // scan n_ph in units of κγ/4g₀², which equals √ℛ
            let (lo, hi, n) = (1.001, 40.0, 40_000);
            let step = (hi - lo) / n as f64;
            let k_min = (0..=n)
                .min_by(|&a, &b| g2(lo + a as f64 * step).total_cmp(&g2(lo + b as f64 * step)))
                .unwrap();
            let s_grid = lo + k_min as f64 * step;
            let expect_s = (3.0 + nbar) / (1.0 - nbar);
            within &= (s_grid - expect_s).abs() <= step;
            // refine within the bracketing cells
            let (mut a, mut b) = (s_grid - step, s_grid + step);
            let phi = 0.5 * (5f64.sqrt() - 1.0);
            while b - a > 1e-10 {
                let c = b - phi * (b - a);
                let d = a + phi * (b - a);
                if g2(c) < g2(d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            let s_min = 0.5 * (a + b);
            let g2_closed = 1.0 - 0.5 * x * x * (1.0 - nbar).powi(2) / (1.0 + nbar);
            let op = analytics::optimal_operating_point(x, nbar).unwrap();
            worst_val = worst_val.max((g2(s_min) - g2_closed).abs()).max((op.g2_opt - g2_closed).abs());
            worst_loc = worst_loc.max((s_grid - expect_s).abs()).max((op.nph_units - expect_s).abs());
        }
    }
    let pass = within && worst_val <= 1e-8;
    outcome(
        pass,
        format!("minimizer offset <= {worst_loc:.1e} (grid step 9.7e-4), minimum error {worst_val:.1e}"),
    )
}

fn case_study() -> Outcome {
    let ctx = ctx(r#"
units = "si"
[params]
g0 = 5e7
kappa = 5e8
gamma = 1e4
temperature = 0.2
omega_m = 5e9
"#);
    let report = run::run_analytics(&ctx).unwrap();
    let t = &report.table;
    let nbar = num(t, 0, "nbar");
    let g2m1 = num(t, 0, "opt_g2_minus_1");
    let pass = (nbar - 0.431).abs() <= 1e-3 && (g2m1 + 1.13e-3).abs() <= 1e-5;
    outcome(
        pass,
        format!("nbar = {nbar:.5}, g2_opt - 1 = {g2m1:.4e}"),
    )
}

fn classical_threshold() -> Outcome {
    let g0 = 0.1;
    let gamma = 1.0 / 200.0;
    let tol = Tolerances { rtol: 1e-9, atol: 1e-12 };
    let base = SystemParams::in_kappa_units(g0, gamma, 0.0, 0.0, 20.0);

    let below = base.with_gain(0.5).unwrap();
    let t_below = analytics::classical_evolve(&below, ClassicalState::mechanical(Complex64::new(1.0, 0.0)), 2e4, tol)
        .unwrap();
    let z_below = t_below.last().zeta.norm();

    let above = base.with_gain(2.0).unwrap();
    let t_above =
        analytics::classical_evolve(&above, ClassicalState::mechanical(Complex64::new(0.1, 0.0)), 2e4, tol).unwrap();
    let z_above = t_above.last().zeta.norm();
    let z0 = analytics::limit_cycle(&above).unwrap().zeta0;
    let dev = rel(z_above, z0);
    let pass = z_below < 1e-3 && dev <= 0.01;
    outcome(
        pass,
        format!("R=0.5: |zeta| = {z_below:.1e}; R=2: |zeta| = {z_above:.5} vs {z0:.5} ({:.2e} rel)", dev),
    )
}

fn quantum_baseline() -> Outcome {
    let thermal = SystemParams::in_kappa_units(0.3, 0.05, 0.5, 0.0, 20.0);
    let m = build_model(&thermal, ModeDims::new(2, 2, 30).unwrap(), FrameChoice::Lab).unwrap();
    let ss = steady_state(&m).unwrap();
    let s = phonon_stats(&ss.rho, &m.phonon_number().unwrap()).unwrap();
    let g2 = s.g2.unwrap();

    let e = 0.25;
    let driven = SystemParams::in_kappa_units(0.0, 0.05, 0.0, e, 20.0);
    let dims = ModeDims::new(2, 24, 2).unwrap();
    let m = build_model(&driven, dims, FrameChoice::Lab).unwrap();
    let ss = steady_state(&m).unwrap();
    let nb = expect(&ss.rho, &FockOperator::number(dims, Mode::B));
    let target = (2.0 * e).powi(2);

    let pass = (s.mean_n - 0.5).abs() <= 1e-6 && (g2 - 2.0).abs() <= 1e-3 && (nb - target).abs() <= 1e-6;
    outcome(
        pass,
        format!(
            "thermal <n> = {:.9}, g2 = {g2:.6}; driven |beta|^2 = {nb:.9} vs {target}",
            s.mean_n
        ),
    )
}

fn expect(state: &QuantumState, op: &FockOperator) -> f64 {
    state.expect(op).unwrap().re
}

const FANO_GAINS: [f64; 10] = [2.0, 2.3, 2.6, 3.0, 4.0, 5.0, 8.0, 12.0, 16.0, 20.0];

fn fano_reproduction() -> Outcome {
    let gains = FANO_GAINS.map(|g| g.to_string()).join(", ");
    let ctx = ctx(&format!(
        r#"
units = "kappa"
frame = "lab"
[params]
g0 = 0.25
gamma = 0.01
omega_m = 20.0
[dims]
n_a = 3
n_b = 3
n_c = 40
[quantum]
scan = "fano"
g0_values = [0.25]
gains = [{gains}]
coupling_drive = 0.04
"#
    ));
    let report = run::run_quantum(&ctx, false).unwrap();
    let t = &report.table;
    let mut worst = 0.0_f64;
    let mut failing = Vec::new();
    let mut cells = Vec::new();
    for (i, &r) in FANO_GAINS.iter().enumerate() {
        let f = num(t, i, "fano");
        let fa = num(t, i, "fano_analytic");
        let d = (f - fa).abs() / fa;
        worst = worst.max(d);
        if d >= 0.15 {
            failing.push(r);
        }
        cells.push(format!("R={r}: {f:.3}/{fa:.3}"));
    }
    outcome(
        failing.is_empty(),
        format!(
            "worst |dF|/F = {worst:.3}; outside 15% at R = {failing:?}; numeric/closed form {}",
            cells.join(", ")
        ),
    )
}

fn cross_validation() -> Outcome {
    let p = SystemParams::in_kappa_units(0.5, 0.02, 0.0, 0.2, 20.0);
    let m = build_model(&p, ModeDims::new(2, 2, 12).unwrap(), FrameChoice::Lab).unwrap();
    let ss = steady_state(&m).unwrap();
    let s = phonon_stats(&ss.rho, &m.phonon_number().unwrap()).unwrap();
    let cfg = TrajectoryConfig {
        n_traj: 500,
        tau: Some(5.0 / p.gamma()),
        ..Default::default()
    };
    let e = mcwf_ensemble(&m, &[], &cfg).unwrap();
    let err = e.stats.errors.unwrap();
    let zn = (e.stats.mean_n - s.mean_n).abs() / err.mean_n;
    let zf = (e.stats.fano.unwrap() - s.fano.unwrap()).abs() / err.fano.unwrap();
    outcome(
        zn <= 3.0 && zf <= 3.0,
        format!(
            "steady <n> = {:.4}, F = {:.4}; mcwf <n> = {:.4} ({zn:.2} SE), F = {:.4} ({zf:.2} SE)",
            s.mean_n,
            s.fano.unwrap(),
            e.stats.mean_n,
            e.stats.fano.unwrap()
        ),
    )
}

fn wigner_regression() -> Outcome {
    let zero = Complex64::new(0.0, 0.0);
    let mut fock1 = nalgebra::DMatrix::zeros(6, 6);
    fock1[(1, 1)] = Complex64::new(1.0, 0.0);
    let spec = GridSpec::square((0.0, 0.0), 6.0, 241);
    let w1 = wigner(&fock1, &spec, zero).unwrap();
    let q = w1.negativity().unwrap();
    let expected = -(1.5f64).exp() / 2.0;

    let mut vac = nalgebra::DMatrix::zeros(6, 6);
    vac[(0, 0)] = Complex64::new(1.0, 0.0);
    let w0 = wigner(&vac, &spec, zero).unwrap();
    let i0 = w0.integral();
    let i1 = w1.integral();
    let pass = (q - expected).abs() <= 0.02 && w0.min() >= -1e-9 && (i0 - 1.0).abs() <= 1e-3 && (i1 - 1.0).abs() <= 1e-3;
    outcome(
        pass,
        format!(
            "Fock 1 quotient {q:.4} vs {expected:.4}; vacuum min {:.1e}; integrals {i0:.6}, {i1:.6}",
            w0.min()
        ),
    )
}

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/negativity_scan.csv")
}

/// First differing cell, comparing numbers to 1e-8 relative.
fn golden_mismatch(golden: &str, actual: &str) -> Option<String> {
    let g: Vec<&str> = golden.lines().collect();
    let a: Vec<&str> = actual.lines().collect();
    if g.len() != a.len() || g.first() != a.first() {
        return Some("header or row count".into());
    }
    for (i, (gl, al)) in g.iter().zip(&a).enumerate().skip(1) {
        for (gc, ac) in gl.split(',').zip(al.split(',')) {
            let same = match (gc.parse::<f64>(), ac.parse::<f64>()) {
                (Ok(x), Ok(y)) => (x - y).abs() <= 1e-8 * x.abs().max(1e-300),
                _ => gc == ac,
            };
            if !same {
                return Some(format!("row {i}: {gc} vs {ac}"));
            }
        }
    }
    None
}

fn negativity_scan() -> Outcome {
    let ctx = ctx(r#"
units = "kappa"
frame = "lab"
[params]
g0 = 0.5
gamma = 0.01
nbar = 0.25
omega_m = 20.0
[dims]
n_a = 3
n_b = 3
n_c = 30
[quantum]
scan = "negativity"
g0_values = [0.5, 0.75, 1.0, 1.25, 1.5]
drive = 0.07
"#);
    let report = run::run_quantum(&ctx, false).unwrap();
    let t = &report.table;
    let negs: Vec<f64> = (0..t.rows.len()).map(|i| num(t, i, "best_negativity")).collect();
    let best = negs.iter().copied().fold(f64::INFINITY, f64::min);

    let mut csv = Vec::new();
    t.write_csv(&mut csv).unwrap();
    let golden = golden_path();
    let golden_note = if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(golden.parent().unwrap()).unwrap();
        std::fs::write(&golden, &csv).unwrap();
        "golden written".to_string()
    } else {
        match std::fs::read_to_string(&golden) {
            Ok(g) => match golden_mismatch(&g, std::str::from_utf8(&csv).unwrap()) {
                None => "matches golden".to_string(),
                Some(m) => return outcome(false, format!("golden mismatch: {m}")),
            },
            Err(_) => "no golden file".to_string(),
        }
    };
    let cells: Vec<String> = (0..t.rows.len())
        .map(|i| format!("g0={}: {:.4}", num(t, i, "g0"), negs[i]))
        .collect();
    outcome(best < 0.0, format!("best negativity {}; {golden_note}", cells.join(", ")))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "analytic identities", identity_suite),
        (2, "unit Fano contour", contour),
        (3, "antibunching optimum", optimum),
        (4, "case study", case_study),
        (5, "classical threshold", classical_threshold),
        (6, "quantum baselines", quantum_baseline),
        (7, "Fano factor vs closed form", fano_reproduction),
        (8, "steady state vs trajectories", cross_validation),
        (9, "Wigner regression", wigner_regression),
        (10, "Wigner negativity scan", negativity_scan),
    ];
    let filter: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut unexpected = Vec::new();
    for (id, name, f) in criteria {
        if filter.is_some_and(|k| k != id) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        let elapsed: Duration = start.elapsed();
        let status = if o.pass { "PASS" } else { "FAIL" };
        let known = EXPECTED_FAIL.contains(&id);
        let tag = match (o.pass, known) {
            (false, true) => " (expected)",
            (true, true) => " (unexpected pass)",
            _ => "",
        };
        println!("criterion {id:>2} {status}{tag} [{name}, {:.2?}]: {}", elapsed, o.detail);
        if o.pass == known {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("criteria with unexpected outcome: {unexpected:?}");
        std::process::exit(1);
    }
}
