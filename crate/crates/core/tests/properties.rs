use std::f64::consts::PI;

use proptest::prelude::*;
use tns_core::inequality::{interpolation_ratio, piece_sobolev_ratio};
use tns_core::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn field(m: usize, a: f64, seed: u64) -> SpectralField {
    random_divfree_field(GridSpec::new(m, 0.1).unwrap(), a, seed)
}

fn modes() -> impl Strategy<Value = usize> {
    prop::sample::select(vec![8usize, 16])
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn round_trip_and_parseval(m in modes(), a in 1.0..3.0f64, seed in any::<u64>()) {
        let u = field(m, a, seed);
        let p = inverse_transform(&u).unwrap();
        let back = forward_transform(&p);
        let scale = u.max_abs();
        prop_assert!(back.sub(&u).unwrap().max_abs() <= 1e-12 * scale);
        let l2 = u.l2_norm_sq();
        prop_assert!((p.mean_square() - l2).abs() <= 1e-12 * l2);
    }

    #[test]
    fn decomposition_algebra(m in modes(), seed in any::<u64>(), n in 1u32..6) {
        let u = field(m, 2.0, seed);
        let v = low_cut(&u, n);
        let w = genuine3d_cut(&u, n);
        prop_assert_eq!(v.add(&w).unwrap(), u.clone());
        prop_assert_eq!(genuine3d_cut(&w, n), w.clone());
        prop_assert_eq!(v.inner(&w).unwrap(), 0.0);
        let (v1, v2, v3) = v_partition(&u, n);
        let parts = v1.l2_norm_sq() + v2.l2_norm_sq() + v3.l2_norm_sq() + w.l2_norm_sq();
        let total = u.l2_norm_sq();
        prop_assert!((parts - total).abs() <= 1e-12 * total);
        prop_assert_eq!(v1.add(&v2).unwrap().add(&v3).unwrap(), v);
    }

    #[test]
    fn w_norm_is_monotone_in_cut_level(m in modes(), seed in any::<u64>()) {
        let u = field(m, 1.5, seed);
        let norms: Vec<f64> = (1..=(m as u32 / 2)).map(|n| genuine3d_cut(&u, n).l2_norm()).collect();
        prop_assert!(norms.windows(2).all(|p| p[1] <= p[0]));
        prop_assert_eq!(*norms.last().unwrap(), 0.0);
    }

    #[test]
    fn leray_is_an_idempotent_projection(m in modes(), seed in any::<u64>()) {
        let g = GridSpec::new(m, 0.1).unwrap();
        // a gradient part plus a solenoidal part
        let u = random_divfree_field(g, 2.0, seed);
        let grad = u.map_multiplier(|k| (k[0] + 2 * k[1]) as f64);
        let mixed = leray_project(&u).add(&grad).unwrap();
        let p = leray_project(&mixed);
        prop_assert!(p.max_divergence() <= 1e-12 * p.l2_norm().max(1e-300));
        prop_assert!(leray_project(&p).sub(&p).unwrap().max_abs() <= 1e-14 * p.max_abs());
        prop_assert!(leray_project(&u).sub(&u).unwrap().max_abs() <= 1e-14 * u.max_abs());
    }

    #[test]
    fn spectrum_sums_to_stokes_norm(m in modes(), a in 0.5..3.0f64, seed in any::<u64>()) {
        let u = field(m, a, seed);
        let total = 4.0 * PI * PI * energy_spectrum(&u).total();
        let h1 = stokes_power(&u, 0.5).unwrap().l2_norm_sq();
        prop_assert!((total - h1).abs() <= 1e-12 * h1);
    }

    #[test]
    fn sobolev_zero_is_l2(m in modes(), seed in any::<u64>()) {
        let u = field(m, 2.0, seed);
        prop_assert!((sobolev_norm(&u, 0.0).unwrap() - u.l2_norm()).abs() <= 1e-14 * u.l2_norm());
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn trilinear_is_skew_in_last_two(seed in any::<u64>(), a in 1.0..3.0f64) {
        let g = GridSpec::new(16, 0.1).unwrap();
        let u = random_divfree_field(g, a, seed);
        let v = random_divfree_field(g, a, seed ^ 1);
        let w = random_divfree_field(g, a, seed ^ 2);
        let scale = u.l2_norm() * w.l2_norm() * gradient(&w).l2_norm_sq().sqrt();
        prop_assert!(trilinear_b(&u, &w, &w).unwrap().abs() <= 1e-10 * scale);
        let s = trilinear_b(&u, &v, &w).unwrap() + trilinear_b(&u, &w, &v).unwrap();
        prop_assert!(s.abs() <= 1e-10 * scale.max(u.l2_norm() * v.l2_norm() * w.l2_norm()));
    }

    #[test]
    fn partition_ratios_are_scale_invariant(seed in any::<u64>(), n in 1u32..4) {
        let u = field(16, 2.0, seed);
        for lambda in [0.1, 10.0] {
            let s = u.scaled(lambda);
            let pairs = [
                (interpolation_ratio(&u, n, 4.0).unwrap(), interpolation_ratio(&s, n, 4.0).unwrap()),
                (piece_sobolev_ratio(&u, 1, n, 4.0).unwrap(), piece_sobolev_ratio(&s, 1, n, 4.0).unwrap()),
            ];
            for (a, b) in pairs {
                let (a, b) = (a.unwrap(), b.unwrap());
                prop_assert!((a - b).abs() <= 1e-12 * a, "{} vs {}", a, b);
            }
        }
    }

    #[test]
    fn snapshot_round_trip(m in modes(), seed in any::<u64>(), t in 0.0..10.0f64) {
        let u = field(m, 2.0, seed);
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, &u, t).unwrap();
        let snap = read_snapshot(&bytes[..]).unwrap();
        prop_assert_eq!(snap.time, t);
        prop_assert_eq!(snap.field.grid(), u.grid());
        prop_assert!(snap.field.sub(&u).unwrap().max_abs() <= 1e-14 * u.max_abs());
        let mut again = Vec::new();
        write_snapshot(&mut again, &snap.field, t).unwrap();
        let snap2 = read_snapshot(&again[..]).unwrap();
        prop_assert!(snap2.field.sub(&snap.field).unwrap().max_abs() <= 1e-14 * u.max_abs());
    }
}
