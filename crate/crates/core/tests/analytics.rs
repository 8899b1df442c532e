use approx::assert_relative_eq;
use num_complex::Complex64;
use phonon_laser::analytics::{self, ClassicalState, Cooling, SystemParams};
use phonon_laser::ode::Tolerances;
use proptest::prelude::*;

fn z(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn above_threshold() -> impl Strategy<Value = SystemParams> {
    (0.2f64..5.0, -2.5f64..0.5, -4.0f64..-1.0, 0.0f64..4.0, 1.001f64..200.0).prop_map(|(kappa, lg, lgam, nbar, r)| {
        let p = SystemParams {
            kappa,
            ..SystemParams::in_kappa_units(kappa * 10f64.powf(lg), kappa * 10f64.powf(lgam), nbar, 0.0, 20.0 * kappa)
        };
        p.with_gain(r).unwrap()
    })
}

proptest! {
    #[test]
    fn fixed_point_identities(p in above_threshold()) {
        let lc = analytics::limit_cycle(&p).unwrap();
        let g = p.gamma();
        prop_assert!((analytics::classical_antidamping(&p, z(lc.zeta0)) + g).abs() <= 1e-10 * g);
        prop_assert!((analytics::optical_diffusion(&p, z(lc.zeta0)) - g / 2.0).abs() <= 1e-12 * g);
        prop_assert!((g + lc.gamma_opt_fluct - lc.damping).abs() <= 1e-12 * lc.damping);
        let r = analytics::gain(&p);
        prop_assert!((analytics::classical_antidamping(&p, z(0.0)).abs() / g - r).abs() <= 1e-12 * r);
    }

    #[test]
    fn adiabatic_amplitudes_are_stationary(p in above_threshold(), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let zeta = Complex64::new(re, im);
        let (a, b) = analytics::optical_amplitudes(&p, zeta);
        let i = Complex64::new(0.0, 1.0);
        let da = -i * p.g0 * b * zeta.conj() - 0.5 * p.kappa * a;
        let db = -i * p.g0 * a * zeta - 0.5 * p.kappa * b + p.drive;
        let scale = a.norm().max(b.norm()) * p.kappa;
        prop_assert!(da.norm() <= 1e-12 * scale && db.norm() <= 1e-12 * scale);
    }

    #[test]
    fn diffusion_formula_identity(p in above_threshold(), re in 0.0f64..5.0) {
        let zeta = z(re);
        let (a, b) = analytics::optical_amplitudes(&p, zeta);
        let h = p.g0 * p.g0 * re * re + p.kappa * p.kappa / 4.0;
        let lhs = analytics::optical_diffusion(&p, zeta) * h;
        let rhs = p.g0 * p.g0 * 0.5 * p.kappa * (a.norm_sqr() + b.norm_sqr());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn fano_g2_consistency(p in above_threshold()) {
        let lc = analytics::limit_cycle(&p).unwrap();
        prop_assert_eq!(analytics::fano(&p).unwrap(), lc.fano);
        let g2 = analytics::g2_from_fano(lc.fano, lc.mean_phonons()).unwrap();
        prop_assert!((g2 - lc.g2).abs() <= 1e-10 * lc.g2.abs().max(1.0));
    }

    #[test]
    fn cooling_preserves_decoherence_rate(g0 in 1e-4f64..1.0, n0 in 0.0f64..100.0, gl in 0.0f64..10.0, nl in 0.0f64..1.0) {
        let (g, n) = analytics::cooling_transform(g0, n0, gl, nl);
        prop_assert!((g - (g0 + gl)).abs() <= 1e-15 * g);
        prop_assert!((g * n - (g0 * n0 + gl * nl)).abs() <= 1e-12 * (g * n).max(1e-300));
    }
}

#[test]
fn substitution_examples() {
    let p = SystemParams { kappa: 2.0, ..SystemParams::in_kappa_units(1.0, 1.0, 0.0, 1.0, 40.0) };
    let (a, b) = analytics::optical_amplitudes(&p, z(1.0));
    assert_relative_eq!(b.re, 0.5);
    assert_relative_eq!(a.im, -0.5);
    assert_relative_eq!(analytics::gain(&p), 2.0);
    let (_, b0) = analytics::optical_amplitudes(&p, z(0.0));
    assert_relative_eq!(b0.re, 1.0);
    assert_relative_eq!(analytics::optical_diffusion(&p, z(0.0)), 8.0 / 8.0);

    // ℛ = 4, κ/2g₀ = 1
    let p = SystemParams::in_kappa_units(0.5, 0.01, 0.0, 0.0, 20.0).with_gain(4.0).unwrap();
    let lc = analytics::limit_cycle(&p).unwrap();
    assert_relative_eq!(lc.mean_phonons(), 1.0, max_relative = 1e-14);
    assert_relative_eq!(lc.damping, 0.02, max_relative = 1e-14);
    assert_relative_eq!(lc.diffusion, 0.01, max_relative = 1e-14);
    assert_relative_eq!(lc.fano, 1.0, max_relative = 1e-14);
}

#[test]
fn threshold_and_tails() {
    let base = SystemParams::in_kappa_units(0.3, 0.01, 0.0, 0.0, 20.0);
    assert!(analytics::limit_cycle(&base.with_gain(1.0).unwrap()).is_err());
    assert!(analytics::limit_cycle(&base.with_gain(0.5).unwrap()).is_err());
    let near = analytics::limit_cycle(&base.with_gain(1.0 + 1e-9).unwrap()).unwrap();
    assert!(near.mean_phonons() < 1e-8);
    let p = base.with_gain(3.0).unwrap();
    let far = 10.0 * p.kappa / p.g0;
    assert!(analytics::classical_antidamping(&p, z(far)).abs() < 1e-3 * analytics::classical_antidamping(&p, z(0.0)).abs());
    let doubled = SystemParams { drive: 2.0 * p.drive, ..p };
    assert_relative_eq!(analytics::gain(&doubled), 4.0 * analytics::gain(&p), max_relative = 1e-14);
}

#[test]
fn fano_limits() {
    assert_relative_eq!(analytics::fano_from_gain(1e16, 1.0), 1.0, max_relative = 1e-7);
    for s in [2.5, 4.0, 10.0] {
        assert!((analytics::fano_from_gain(s * s, 1.0 - 2.0 / s) - 1.0).abs() < 1e-12);
    }
    assert_eq!(analytics::g2_from_fano(1.0, 3.7), Some(1.0));
    assert_eq!(analytics::g2_from_fano(0.5, 0.0), None);
}

#[test]
fn optimum_closed_forms() {
    let op = analytics::optimal_operating_point(0.2, 0.0).unwrap();
    assert_relative_eq!(op.nph_units, 3.0);
    assert_relative_eq!(op.g2_opt - 1.0, -0.02, max_relative = 1e-12);
    assert!(analytics::optimal_operating_point(0.2, 1.0).is_err());
    assert!(analytics::optimal_operating_point(0.2, 1.5).is_err());
}

#[test]
fn cooling_examples() {
    assert_eq!(analytics::cooling_transform(0.3, 2.0, 0.0, 0.0), (0.3, 2.0));
    assert_eq!(analytics::cooling_transform(0.3, 2.0, 0.3, 0.0), (0.6, 1.0));
    assert_relative_eq!(analytics::cooling_quantum_limit(4.0, 1.0), 1.0);
    assert_relative_eq!(analytics::cooling_quantum_limit(0.1, 1.0), 6.25e-4);
    let p = SystemParams {
        cooling: Some(Cooling { gamma_l: 0.01, kappa_d: 0.4 }),
        ..SystemParams::in_kappa_units(0.3, 0.01, 4.0, 0.2, 10.0)
    };
    let (g, n) = p.effective_bath();
    assert_relative_eq!(g, 0.02);
    assert_relative_eq!(n, (0.04 + 0.01 * 1e-4) / 0.02, max_relative = 1e-12);
    // gain uses the effective damping
    assert_relative_eq!(analytics::gain(&p), 16.0 * 0.09 * 0.04 / 0.02, max_relative = 1e-12);
}

#[test]
fn si_conversions() {
    use std::f64::consts::TAU;
    assert_eq!(analytics::thermal_occupation(TAU * 5e9, 0.0), 0.0);
    let n = analytics::thermal_occupation(TAU * 5e9, 0.2);
    assert!((n - 0.431).abs() < 1e-3, "{n}");
    // high-temperature limit k_BT/ħω − 1/2
    let w = TAU * 1e6;
    let t = 10.0;
    let classical = analytics::K_B * t / (analytics::HBAR * w) - 0.5;
    assert_relative_eq!(analytics::thermal_occupation(w, t), classical, max_relative = 1e-6);
    let e1 = analytics::drive_from_power(1e-3, TAU * 5e8, TAU * 2e14);
    let e4 = analytics::drive_from_power(4e-3, TAU * 5e8, TAU * 2e14);
    assert_relative_eq!(e4, 2.0 * e1, max_relative = 1e-14);
}

#[test]
fn validity_report_flags() {
    use std::f64::consts::TAU;
    let crystal = SystemParams {
        kappa: TAU * 500e6,
        ..SystemParams::in_kappa_units(TAU * 1e6, TAU * 1e4, 0.0, 0.0, TAU * 3.68e9)
    };
    let v = analytics::validity_report(&crystal, z(0.0));
    assert!((v.enhancement - 217.0).abs() < 0.5, "{}", v.enhancement);
    assert_eq!(v.alpha_ratio, 0.0);
    assert_eq!(v.beta_ratio, 0.0);

    // (n̄+1)γ/κ just over and just under the threshold
    let over = SystemParams::in_kappa_units(0.01, 0.0505, 1.0, 0.0, 100.0);
    let under = SystemParams::in_kappa_units(0.01, 0.0495, 1.0, 0.0, 100.0);
    assert_eq!(analytics::validity_report(&over, z(0.0)).flags, vec!["thermal_ratio"]);
    assert!(analytics::validity_report(&under, z(0.0)).ok());
    let unresolved = SystemParams::in_kappa_units(0.01, 0.001, 0.0, 0.0, 9.0);
    assert_eq!(analytics::validity_report(&unresolved, z(0.0)).flags, vec!["sideband_ratio"]);
}

#[test]
fn classical_evolution_oracles() {
    let tol = Tolerances::default();
    // decoupled linear decay
    let p = SystemParams::in_kappa_units(0.0, 0.02, 0.0, 0.0, 20.0);
    let s0 = ClassicalState { alpha: z(1.0), beta: Complex64::new(0.0, 0.5), zeta: z(2.0) };
    let t = 30.0;
    let tr = analytics::classical_evolve(&p, s0, t, tol).unwrap();
    let last = tr.last();
    assert!((last.alpha - z((-0.5 * t).exp())).norm() < 1e-8);
    assert!((last.beta - Complex64::new(0.0, 0.5 * (-0.5 * t).exp())).norm() < 1e-8);
    assert!((last.zeta - z(2.0 * (-0.01 * t).exp())).norm() < 1e-8);

    let gamma = 0.005;
    let base = SystemParams::in_kappa_units(0.2, gamma, 0.0, 0.0, 20.0);
    let below = base.with_gain(0.5).unwrap();
    // small amplitudes decay at γ(1−ℛ)/2 = γ/4 and larger ones faster, so
    // e^{−5} bounds |ζ| at 20/γ; 1e-3 is reached by 40/γ
    let tr = analytics::classical_evolve(&below, ClassicalState::mechanical(z(1.0)), 20.0 / gamma, tol).unwrap();
    let z20 = tr.last().zeta.norm();
    assert!(z20 <= (-5.0f64).exp() && z20 > 0.5 * (-5.0f64).exp(), "{z20}");
    let tr = analytics::classical_evolve(&below, ClassicalState::mechanical(z(1.0)), 40.0 / gamma, tol).unwrap();
    assert!(tr.last().zeta.norm() < 1e-3);
    let above = base.with_gain(2.0).unwrap();
    let tr = analytics::classical_evolve(&above, ClassicalState::mechanical(z(0.1)), 40.0 / gamma, tol).unwrap();
    let z0 = analytics::limit_cycle(&above).unwrap().zeta0;
    assert!((tr.last().zeta.norm() - z0).abs() / z0 < 1e-2);
}
