use std::f64::consts::PI;

use proptest::prelude::*;
use wqed_core::model::{build_effective_model, derive_params, snap_block_length, EffectiveModel, PhysicalParams};

/// Coupling of mode nu written out from the sine mode shape, independent of
/// the library routine.
fn coupling_by_hand(g: f64, x0: f64, l: f64, phi: f64, nu: i32) -> f64 {
    let sign = (-1f64).powi(nu);
    g * sign * (2.0 / l).sqrt() * ((nu as f64) * PI * x0 / l + phi / 2.0).sin()
}

fn build(gamma: f64, tau: f64, phi: f64, ratio: f64, n_a: usize) -> EffectiveModel {
    let p = PhysicalParams::from_dimensionless(gamma, tau, phi, 100).unwrap();
    build_effective_model(&p, snap_block_length(&p, ratio).unwrap(), n_a).unwrap()
}

#[test]
fn paper_geometry_gives_unit_loss_rate() {
    let m = build(1.0, 2.0, PI / 2.0, 2.0, 3);
    assert!((m.l / m.params.x0 - 2.0).abs() < m.params.half_wavelength() / m.params.x0);
    assert!((m.gamma - 2.0 / m.l).abs() < 1e-15);
    assert!((m.gamma - 1.0).abs() < 0.02);
}

#[test]
fn model_round_trips_through_serialization() {
    let m = build(1.0, 0.25, PI, 1.0, 1);
    let s = serde_json::to_string(&m).unwrap();
    assert!(s.contains("\"N_A\":1") && s.contains("\"Omega_nu\""));
    let back: EffectiveModel = serde_json::from_str(&s).unwrap();
    assert_eq!(back, m);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derived_triple_is_exact(omega0 in 0.1f64..50.0, v in 0.1f64..5.0, x0 in 0.1f64..5.0, g in 0.01f64..3.0) {
        let p = derive_params(omega0, v, x0, g).unwrap();
        prop_assert_eq!(p.gamma, 2.0 * g * g / v);
        prop_assert_eq!(p.tau, 2.0 * x0 / v);
        prop_assert_eq!(p.phi, 2.0 * (omega0 / v) * x0);
        prop_assert!(p.phi_mod_2pi() >= 0.0 && p.phi_mod_2pi() < 2.0 * PI);
    }

    #[test]
    fn dimensionless_inputs_round_trip(gamma in 0.05f64..5.0, tau in 0.01f64..5.0, phi in 0.0f64..(2.0 * PI)) {
        let p = PhysicalParams::from_dimensionless(gamma, tau, phi, 100).unwrap();
        let q = derive_params(p.omega0, p.v, p.x0, p.g).unwrap();
        prop_assert!((q.gamma - gamma).abs() < 1e-12 * gamma);
        prop_assert!((q.tau - tau).abs() < 1e-12 * tau);
        let d = (q.phi_mod_2pi() - phi).rem_euclid(2.0 * PI);
        prop_assert!(d.min(2.0 * PI - d) < 1e-9);
    }

    #[test]
    fn mode_table_invariants(gamma in 0.1f64..3.0, tau in 0.05f64..5.0, phi in 0.0f64..(2.0 * PI), ratio in 1.0f64..4.0, n_a in 0usize..8) {
        let m = build(gamma, tau, phi, ratio, n_a);
        let p = m.params;
        let half = p.half_wavelength();
        prop_assert!(m.l > p.x0);
        prop_assert!(((m.l / half) - (m.l / half).round()).abs() < 1e-12 * (m.l / half));
        prop_assert_eq!(m.modes.len(), 2 * n_a + 1);
        prop_assert_eq!(m.modes[n_a].omega_nu, p.omega0);
        let bound = p.g * (2.0 / m.l).sqrt();
        for w in m.modes.windows(2) {
            prop_assert_eq!(w[1].nu, w[0].nu + 1);
            prop_assert!((w[1].omega_nu - w[0].omega_nu - p.v * PI / m.l).abs() < 1e-9 * p.omega0.max(1.0));
        }
        for md in &m.modes {
            prop_assert!(md.g_nu.abs() <= bound * (1.0 + 1e-15));
            let want = coupling_by_hand(p.g, p.x0, m.l, p.phi, md.nu);
            prop_assert!((md.g_nu - want).abs() < 1e-12 * bound);
            prop_assert!((m.mode_frequency(md.nu).unwrap() - p.v * md.nu as f64 * PI / m.l).abs() < 1e-12 * p.omega0);
        }
        prop_assert!((m.modes[n_a].g_nu - bound * (p.phi / 2.0).sin()).abs() < 1e-12 * bound);
        prop_assert_eq!(m.atom_frequency(), 0.0);
    }

    #[test]
    fn couplings_alternate_as_mirror_pairs(phi in 0.0f64..(2.0 * PI), n_a in 1usize..6) {
        let m = build(1.0, 2.0, phi, 2.0, n_a);
        let p = m.params;
        for nu in 1..=n_a as i32 {
            let prod = m.mode(nu).unwrap().g_nu * m.mode(-nu).unwrap().g_nu;
            let x = nu as f64 * PI * p.x0 / m.l;
            let want = -(x - p.phi / 2.0).sin() * (x + p.phi / 2.0).sin() * p.g * p.g * 2.0 / m.l;
            prop_assert!((prod - want).abs() < 1e-12 * p.g * p.g * 2.0 / m.l);
        }
    }

    #[test]
    fn paper_block_length_spaces_modes_by_pi_over_tau(tau in 0.1f64..5.0, n_a in 0usize..8) {
        let m = build(1.0, tau, PI / 2.0, 2.0, n_a);
        if (m.l - 2.0 * m.params.x0).abs() < 1e-12 * m.l {
            for md in &m.modes {
                prop_assert!((m.mode_frequency(md.nu).unwrap() * tau - md.nu as f64 * PI).abs() < 1e-9);
            }
        }
        // exact when L = 2 x0 after snapping; in general within one half wavelength
        let spacing = m.params.v * PI / m.l;
        prop_assert!((spacing * tau - PI).abs() < PI * m.params.half_wavelength() / m.params.x0 + 1e-12);
    }
}
