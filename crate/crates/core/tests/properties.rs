//! Property tests of cross-module invariants.

mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use ringbaw::bvd::{bvd_impedance, bvd_params_from_targets, BvdParams};
use ringbaw::design::{check_rules, scale_design, RingGeometry};
use ringbaw::material::{coupling_coefficient, load_material, rotate, CouplingPair, EulerZXZ, MaterialSet};
use ringbaw::sparams::{bode_q, s11_to_z, z_to_s11, ReflectionSpectrum};
use ringbaw::spectrum::{FrequencyGrid, ImpedanceSpectrum};

fn ln() -> MaterialSet {
    load_material("LiNbO3_congruent").unwrap()
}

fn max_rel<const R: usize, const C: usize>(
    a: &nalgebra::SMatrix<f64, R, C>,
    b: &nalgebra::SMatrix<f64, R, C>,
) -> f64 {
    (a - b).amax() / b.amax().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn rotation_matches_index_contraction(a in -360.0..360.0f64, b in -360.0..360.0f64, g in -360.0..360.0f64) {
        let m = ln();
        let r = rotate(&m, EulerZXZ::new(a, b, g));
        let (c, e, eps) = common::rotate_by_index(&m, common::euler_matrix(a, b, g));
        prop_assert!(max_rel(&r.stiffness_ce, &c) < 1e-9);
        prop_assert!(max_rel(&r.piezo_e, &e) < 1e-9);
        prop_assert!(max_rel(&r.permittivity_eps_s, &eps) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rotation_preserves_validity_and_invariants(a in 0.0..360.0f64, b in 0.0..360.0f64, g in 0.0..360.0f64) {
        let m = ln();
        let r = rotate(&m, EulerZXZ::new(a, b, g));
        prop_assert!(r.validate().is_ok());
        // tr ε and c_iijj are rotation invariants
        let tr = |x: &MaterialSet| x.permittivity_eps_s.trace();
        prop_assert!((tr(&r) / tr(&m) - 1.0).abs() < 1e-12);
        let inv = |x: &MaterialSet| {
            let mut s = 0.0;
            for i in 0..3 { for j in 0..3 { s += x.c(i, i, j, j); } }
            s
        };
        prop_assert!((inv(&r) / inv(&m) - 1.0).abs() < 1e-12);
        let back = rotate(&r, EulerZXZ::new(a, b, g).inverse());
        prop_assert!(max_rel(&back.stiffness_ce, &m.stiffness_ce) < 1e-12);
    }

    #[test]
    fn coupling_is_half_turn_periodic(theta in -180.0..180.0f64, i in 1usize..=3, j in 1usize..=6) {
        let m = ln();
        let pair = CouplingPair::new(i, j).unwrap();
        let k = |t: f64| coupling_coefficient(&rotate(&m, EulerZXZ::rotated_y_cut(t)), pair);
        prop_assert!((k(theta) - k(theta + 180.0)).abs() < 1e-9);
    }

    #[test]
    fn bvd_is_passive(
        fs in 1e6..1e8f64, k2 in 0.01..0.5f64, q in 50.0..1e4f64, c0 in 1e-12..1e-9f64,
        x in 0.5..1.5f64,
    ) {
        let p = bvd_params_from_targets(fs, k2, q, c0).unwrap();
        let z = p.impedance(x * fs);
        prop_assert!(z.re >= 0.0);
        let s = (z - 50.0) / (z + 50.0);
        prop_assert!(s.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn z_s11_round_trip(re in 1e-3..1e4f64, im in -1e4..1e4f64, z0 in 1.0..200.0f64) {
        let z = ImpedanceSpectrum::new(vec![1e6, 2e6], vec![Complex64::new(re, im), Complex64::new(re * 2.0, -im)]).unwrap();
        let back = s11_to_z(&z_to_s11(&z, z0).unwrap()).unwrap();
        for (a, b) in back.z().iter().zip(z.z()) {
            prop_assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0));
        }
    }

    #[test]
    fn bode_q_ignores_reference_phase(phase in -3.14..3.14f64, window in 1usize..30) {
        let p = BvdParams::new(1.6e-10, 5e-11, 5e-6, 2.0).unwrap();
        let g = FrequencyGrid::linear(0.95 * p.fs(), 1.05 * p.fp(), 400).to_vec().unwrap();
        let r = z_to_s11(&bvd_impedance(&p, &g).unwrap(), 50.0).unwrap();
        let rot = Complex64::from_polar(1.0, phase);
        let r2 = ReflectionSpectrum::new(g.clone(), r.s11().iter().map(|s| s * rot).collect(), 50.0).unwrap();
        let (a, b) = (bode_q(&r, window).unwrap(), bode_q(&r2, window).unwrap());
        for (x, y) in a.q.iter().zip(&b.q) {
            match (x, y) {
                (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 1e-6 * x.abs().max(1.0)),
                (None, None) => {}
                _ => prop_assert!(false, "validity differs"),
            }
        }
    }

    #[test]
    fn rules_monotone(gap in 10e-6..400e-6f64, ring in 0.1e-3..2.0e-3f64, dg in 0.0..50e-6f64, dr in 0.0..0.3e-3f64) {
        let g = RingGeometry::new(300e-6, 7e-3, gap, ring, 20e-3).unwrap();
        let wider = RingGeometry::new(300e-6, 7e-3, gap + dg, ring + dr, 20e-3).unwrap();
        let (decay, lambda) = (172e-6, 790e-6);
        let a = check_rules(&g, decay, lambda);
        let b = check_rules(&wider, decay, lambda);
        let pass = |r: &ringbaw::design::RuleReport, n: &str| r.rule(n).unwrap().pass;
        // a wider gap never starts passing, a wider ring never starts failing
        prop_assert!(!pass(&b, "gap_below_decay") || pass(&a, "gap_below_decay"));
        prop_assert!(!pass(&a, "ring_above_lambda") || pass(&b, "ring_above_lambda"));
        prop_assert_eq!(a.pass, pass(&a, "gap_below_decay") && pass(&a, "ring_above_lambda"));
    }

    #[test]
    fn scaling_composes(t1 in 50e-6..1e-3f64, t2 in 50e-6..1e-3f64) {
        let g = RingGeometry::new(300e-6, 7e-3, 100e-6, 1.2e-3, 18e-3).unwrap();
        let direct = scale_design(&g, t2).unwrap();
        let via = scale_design(&scale_design(&g, t1).unwrap(), t2).unwrap();
        for (x, y) in [
            (direct.active_radius, via.active_radius),
            (direct.gap_width, via.gap_width),
            (direct.ring_width, via.ring_width),
            (direct.die_side, via.die_side),
        ] {
            prop_assert!((x / y - 1.0).abs() < 1e-12);
        }
        let r = check_rules(&direct, 172e-6 * t2 / 300e-6, 790e-6 * t2 / 300e-6);
        prop_assert!(r.pass);
    }
}
