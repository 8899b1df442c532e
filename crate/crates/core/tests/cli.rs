use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use phonon_laser::cli::config::RunConfig;
use phonon_laser::cli::output::Value;
use phonon_laser::cli::run::{self, Context};
use phonon_laser::observables::WignerGrid;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_phonon-laser");

const ANALYTICS_HEADER: &str = "g0,kappa,gamma,nbar,drive,omega_m,delta,gamma_eff,nbar_eff,gain,above_threshold,zeta0,\
mean_phonons,alpha0_re,alpha0_im,beta0_re,beta0_im,gamma_opt_fluct,damping,diffusion,fano,g2,g2_minus_1_units,\
n_photons,nph_units,opt_nph_units,opt_g2,opt_g2_minus_1,thermal_ratio,alpha_ratio,beta_ratio,sideband_ratio,\
rwa_correction,enhancement,validity_flags";

const STEADY_HEADER: &str = "g0,kappa,gamma,nbar,drive,omega_m,delta,gamma_eff,nbar_eff,gain,n_a,n_b,n_c,frame,\
solver,mean_n,mean_n2,fano,g2,se_mean_n,se_fano,se_g2,fano_analytic,fano_rel_dev,relative_residual,\
edge_population_c,n_traj,tau,total_jumps";

const NEGATIVITY_HEADER: &str =
    "g0,nbar,drive,best_gamma,best_gain,best_negativity,mean_n,fano,n_a,n_b,n_c,gammas_scanned,wigner_points";

// ℛ = 4 with κ/2g₀ = 1
const UNIT_LIMIT_CYCLE: &str = r#"
units = "kappa"
[params]
g0 = 0.5
gamma = 0.01
gain = 4.0
omega_m = 20.0
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run_bin(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env("SOURCE_DATE_EPOCH", "1700000000").output().unwrap()
}

fn ctx(text: &str) -> Context {
    Context { cfg: RunConfig::from_toml(text).unwrap(), seed: 0, max_dim: 50_000 }
}

fn num(v: Option<&Value>) -> f64 {
    match v {
        Some(Value::Num(x)) => *x,
        other => panic!("expected a number, got {other:?}"),
    }
}

fn csv_field(text: &str, column: &str, row: usize) -> String {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|c| *c == column).unwrap();
    lines.nth(row).unwrap().split(',').nth(k).unwrap().to_string()
}

#[test]
fn analytics_record_and_golden_header() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "a.toml", UNIT_LIMIT_CYCLE);
    let out = run_bin(&["analytics", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), ANALYTICS_HEADER);
    let f: f64 = csv_field(&text, "fano", 0).parse().unwrap();
    let n: f64 = csv_field(&text, "mean_phonons", 0).parse().unwrap();
    assert!((f - 1.0).abs() < 1e-11 && (n - 1.0).abs() < 1e-11);
    assert_eq!(csv_field(&text, "above_threshold", 0), "true");
}

#[test]
fn below_threshold_record_has_empty_limit_cycle_fields() {
    let r = run::run_analytics(&ctx(&UNIT_LIMIT_CYCLE.replace("gain = 4.0", "gain = 0.5"))).unwrap();
    assert_eq!(r.table.get(0, "above_threshold"), Some(&Value::Bool(false)));
    assert_eq!(r.table.get(0, "fano"), Some(&Value::Missing));
    assert_eq!(r.table.get(0, "zeta0"), Some(&Value::Num(0.0)));
}

#[test]
fn case_study_record() {
    let r = run::run_analytics(&ctx(r#"
units = "si"
[params]
g0 = 5e7
kappa = 5e8
gamma = 1e4
temperature = 0.2
omega_m = 5e9
"#))
    .unwrap();
    let v = num(r.table.get(0, "opt_g2_minus_1"));
    assert!((v + 1.13e-3).abs() < 1e-5, "{v}");
}

#[test]
fn sweep_reproduces_contour_and_photon_number() {
    // √ℛ = 2/(1 − n̄) lies on the unit-Fano contour
    let nbar = 0.25;
    let s_contour = 2.0 / (1.0 - nbar);
    let text = format!(
        r#"
units = "kappa"
[params]
g0 = 0.1
gamma = 0.001
nbar = {nbar}
omega_m = 20.0
[[sweep.axes]]
variable = "nph"
min = 2.0
max = {max}
points = 3
"#,
        max = 2.0 * s_contour - 2.0
    );
    let r = run::run_sweep(&ctx(&text)).unwrap();
    assert_eq!(r.table.rows.len(), 3);
    assert!((num(r.table.get(1, "fano")) - 1.0).abs() < 1e-12);
    assert!((num(r.table.get(1, "g2")) - 1.0).abs() < 1e-12);
    for row in 0..3 {
        let s = num(r.table.get(row, "gain")).sqrt();
        assert!((num(r.table.get(row, "nph_units")) - s).abs() < 1e-12);
    }
}

#[test]
fn two_axis_sweep_is_row_major_and_single_point_matches_analytics() {
    let text = format!(
        "{UNIT_LIMIT_CYCLE}\n[[sweep.axes]]\nvariable = \"nbar\"\nmin = 0.0\nmax = 1.0\npoints = 3\n\
         [[sweep.axes]]\nvariable = \"gain\"\nmin = 2.0\nmax = 8.0\npoints = 4\nscale = \"log\"\n"
    );
    let r = run::run_sweep(&ctx(&text)).unwrap();
    assert_eq!(r.table.rows.len(), 12);
    assert_eq!(num(r.table.get(4, "nbar")), 0.5);
    assert!((num(r.table.get(4, "gain")) - 2.0).abs() < 1e-12);
    assert!((num(r.table.get(5, "gain")) - 2.0 * 4f64.powf(1.0 / 3.0)).abs() < 1e-12);

    let single = format!("{UNIT_LIMIT_CYCLE}\n[[sweep.axes]]\nvariable = \"gain\"\nmin = 4.0\nmax = 4.0\npoints = 1\n");
    let s = run::run_sweep(&ctx(&single)).unwrap();
    let a = run::run_analytics(&ctx(UNIT_LIMIT_CYCLE)).unwrap();
    assert_eq!(s.table.columns, a.table.columns);
    assert_eq!(s.table.rows, a.table.rows);
}

#[test]
fn sweep_over_unknown_variable_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let text = format!("{UNIT_LIMIT_CYCLE}\n[[sweep.axes]]\nvariable = \"colour\"\nmin = 0.0\nmax = 1.0\npoints = 2\n");
    let cfg = write_config(dir.path(), "s.toml", &text);
    let out = run_bin(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad_units = write_config(dir.path(), "bad.toml", &UNIT_LIMIT_CYCLE.replace("\"kappa\"", "\"furlongs\""));
    assert_eq!(run_bin(&["analytics", "--config", bad_units.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run_bin(&["analytics"]).status.code(), Some(2));
    assert_eq!(run_bin(&["frobnicate"]).status.code(), Some(2));
    let missing = dir.path().join("nope.toml");
    assert_eq!(run_bin(&["analytics", "--config", missing.to_str().unwrap()]).status.code(), Some(2));

    let ok = write_config(dir.path(), "ok.toml", UNIT_LIMIT_CYCLE);
    let too_big = run_bin(&["steady", "--config", ok.to_str().unwrap(), "--max-dim", "10"]);
    assert_eq!(too_big.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&too_big.stderr).contains("size limit"));
    let bin_format = run_bin(&["analytics", "--config", ok.to_str().unwrap(), "--format", "bin"]);
    assert_eq!(bin_format.status.code(), Some(2));
}

#[test]
fn validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let crystal = write_config(
        dir.path(),
        "crystal.toml",
        r#"
units = "si"
[params]
g0 = 1e6
kappa = 5e8
gamma = 1e4
omega_m = 3.68e9
"#,
    );
    let out = run_bin(&["validate", "--config", crystal.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sideband_ratio"));
    let text = String::from_utf8(out.stdout).unwrap();
    let enh: f64 = csv_field(&text, "enhancement", 0).parse().unwrap();
    assert!((enh - 217.0).abs() < 0.5);

    let quiet = write_config(
        dir.path(),
        "quiet.toml",
        "units = \"kappa\"\n[params]\ng0 = 0.05\ngamma = 0.001\ndrive = 0.0\nomega_m = 20.0\n",
    );
    let out = run_bin(&["validate", "--config", quiet.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv_field(&text, "alpha_ratio", 0).parse::<f64>().unwrap(), 0.0);
    assert_eq!(csv_field(&text, "beta_ratio", 0).parse::<f64>().unwrap(), 0.0);
}

#[test]
fn outputs_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let text = format!("{UNIT_LIMIT_CYCLE}\n[dims]\nn_a = 2\nn_b = 2\nn_c = 8\n[trajectories]\nn_traj = 20\ntau = 30.0\n");
    let cfg = write_config(dir.path(), "m.toml", &text);
    let cfg = cfg.to_str().unwrap();
    for (cmd, format) in [("analytics", "json"), ("mcwf", "json"), ("mcwf", "csv")] {
        let a = dir.path().join(format!("{cmd}_a.{format}"));
        let b = dir.path().join(format!("{cmd}_b.{format}"));
        for (out, threads) in [(&a, "1"), (&b, "2")] {
            let o = run_bin(&[cmd, "--config", cfg, "--seed", "5", "--format", format, "--threads", threads, "--out", out.to_str().unwrap()]);
            assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{cmd} {format}");
    }
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("mcwf_a.json")).unwrap()).unwrap();
    assert_eq!(json["metadata"]["seed"], 5);
    assert_eq!(json["metadata"]["timestamp"], 1_700_000_000u64);
    assert_eq!(json["metadata"]["command"], "mcwf");
    assert_eq!(json["rows"][0]["solver"], "mcwf");
    assert_eq!(json["rows"][0]["n_traj"], 20);
}

#[test]
fn steady_point_header_and_values() {
    // top-level keys must precede tables
    let text = UNIT_LIMIT_CYCLE.replacen("units = \"kappa\"", "units = \"kappa\"\nframe = \"lab\"", 1);
    let r = run::run_quantum(&ctx(&text), false).unwrap();
    let mut csv = Vec::new();
    r.table.write_csv(&mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    assert_eq!(csv.lines().next().unwrap(), STEADY_HEADER);
    assert_eq!(r.table.get(0, "frame"), Some(&Value::Text("lab".into())));
    assert!(num(r.table.get(0, "relative_residual")) < 1e-10);
    assert!(num(r.table.get(0, "edge_population_c")) < 1e-6);
    assert_eq!(r.table.get(0, "n_traj"), Some(&Value::Missing));
}

#[test]
fn negativity_scan_with_a_single_gamma_returns_that_point() {
    let text = r#"
units = "kappa"
frame = "lab"
[params]
g0 = 1.0
gamma = 0.01
nbar = 0.25
drive = 0.07
omega_m = 20.0
[dims]
n_a = 3
n_b = 3
n_c = 20
[quantum]
scan = "negativity"
drive = 0.07
[quantum.gamma_grid]
min = 1e-3
max = 1e-3
points = 1
[wigner]
points = 101
"#;
    let r = run::run_quantum(&ctx(text), false).unwrap();
    let mut csv = Vec::new();
    r.table.write_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().next().unwrap(), NEGATIVITY_HEADER);
    assert_eq!(num(r.table.get(0, "best_gamma")), 1e-3);
    assert_eq!(r.table.get(0, "gammas_scanned"), Some(&Value::Int(1)));

    // the same point through the wigner command
    let w = run::run_wigner(&ctx(&text.replace("gamma = 0.01", "gamma = 1e-3"))).unwrap();
    let grid = w.grid.unwrap();
    assert!((grid.negativity().unwrap() - num(r.table.get(0, "best_negativity"))).abs() < 1e-12);
}

#[test]
fn wigner_binary_output() {
    let dir = TempDir::new().unwrap();
    let text = format!("{UNIT_LIMIT_CYCLE}\n[dims]\nn_a = 2\nn_b = 2\nn_c = 10\n[wigner]\npoints = 41\n");
    let cfg = write_config(dir.path(), "w.toml", &text);
    let out = dir.path().join("w.bin");
    let o = run_bin(&["wigner", "--config", cfg.to_str().unwrap(), "--format", "bin", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let grid = WignerGrid::read_raster(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!((grid.x.len(), grid.p.len()), (41, 41));
    assert!((grid.integral() - 1.0).abs() < 1e-3);
}
