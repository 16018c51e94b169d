use tns_core::monitor::SerrinSpec;
use tns_core::spectrum::{Binning, Shell};
use tns_core::*;

fn specs() -> Vec<SerrinSpec> {
    vec![
        SerrinSpec::velocity(3.0, f64::INFINITY),
        SerrinSpec::velocity(4.0, 8.0),
        SerrinSpec::gradient(2.0, 4.0),
    ]
}

#[test]
fn taylor_green_rows_are_zero() {
    let g = GridSpec::new(16, 0.01).unwrap();
    let cfg = TimeConfig::new(1e-3, 0.01, 1.0).unwrap();
    let mut mon = SerrinMonitor::new(&[1, 2, 4], &specs()).unwrap();
    let report = run(init_taylor_green(g).unwrap(), &cfg, &ForcingSpec::Zero, &mut [&mut mon]).unwrap();
    assert!(report.completed());
    let rep = mon.report(true);
    assert_eq!(rep.rows.len(), 9);
    assert!(rep.rows.iter().all(|r| r.value == 0.0));
    assert!(rep.samples.iter().all(|s| s.lq == 0.0 && s.l2 == 0.0));
    assert_eq!(rep.y_series.len(), 11);
    assert!(rep.y_series.windows(2).all(|p| p[1].y < p[0].y));
}

#[test]
fn random_run_rows_are_finite_and_vanish_above_the_band() {
    let g = GridSpec::new(16, 0.01).unwrap();
    let cfg = TimeConfig::new(1e-3, 0.005, 1.0).unwrap();
    let state = SolverState::new(random_divfree_field(g, 5.0 / 3.0, 2), 0.0).unwrap();
    let mut mon = SerrinMonitor::new(&[1, 2, 4, 8], &specs())
        .unwrap()
        .with_fractional_series();
    run(state, &cfg, &ForcingSpec::Zero, &mut [&mut mon]).unwrap();
    let rep = mon.report(true);
    for row in &rep.rows {
        assert!(row.value.is_finite() && row.value >= 0.0);
        if row.cut_level >= 8 {
            assert_eq!(row.value, 0.0);
        } else {
            assert!(row.value > 0.0);
        }
    }
    // L2 of w_N shrinks with N at every sample
    for spec in 0..3 {
        let mut by_time: Vec<Vec<f64>> = Vec::new();
        for s in rep.samples.iter().filter(|s| s.spec == spec) {
            if s.cut_level == 1 {
                by_time.push(Vec::new());
            }
            by_time.last_mut().unwrap().push(s.l2);
        }
        for row in by_time {
            assert!(row.windows(2).all(|p| p[1] <= p[0]));
        }
    }
    assert!(rep.y_series.iter().all(|y| y.fractional.is_some()));
    let mut csv = Vec::new();
    rep.write_summary_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 13);
}

#[test]
fn stride_thins_samples() {
    let g = GridSpec::new(8, 0.01).unwrap();
    let cfg = TimeConfig::new(1e-3, 0.01, 1.0).unwrap();
    let state = SolverState::new(random_divfree_field(g, 2.0, 2), 0.0).unwrap();
    let mut mon = SerrinMonitor::new(&[1], &specs()[..1]).unwrap().with_stride(5).unwrap();
    run(state, &cfg, &ForcingSpec::Zero, &mut [&mut mon]).unwrap();
    let times: Vec<f64> = mon.report(true).y_series.iter().map(|y| y.time).collect();
    assert_eq!(times.len(), 3);
    assert!((times[2] - 0.01).abs() < 1e-12);
}

#[test]
fn constant_field_gives_constant_weight_series() {
    let g = GridSpec::new(16, 0.01).unwrap();
    let u = random_divfree_field(g, 2.0, 5);
    let mut tr = SpectrumWeightTracker::new(&[2.5, 3.0], 1, 3).unwrap();
    for i in 0..6 {
        tr.record(i as f64 * 0.1, &u).unwrap();
    }
    let rep = tr.report();
    let first = rep.series[0].weights.clone();
    assert!(first.iter().all(|&w| w > 0.0));
    for s in &rep.series {
        assert_eq!(s.weights, first);
        assert_eq!(s.window_min, first);
    }
}

#[test]
fn zero_cut_gives_zero_weights() {
    let g = GridSpec::new(16, 0.01).unwrap();
    let mut tr = SpectrumWeightTracker::new(&[3.0], 8, 2).unwrap();
    tr.record(0.0, &random_divfree_field(g, 2.0, 5)).unwrap();
    assert_eq!(tr.report().series[0].weights, vec![0.0]);
}

#[test]
fn inverse_square_spectrum_weight_is_largest_shell_value() {
    // E(kappa) = kappa^-2 on every exact shell of the box, corner included
    let m = 64usize;
    let h = (m / 2) as i64;
    let shells: Vec<Shell> = (1..=3 * h * h)
        .map(|n2| {
            let kappa = (n2 as f64).sqrt();
            Shell {
                kappa,
                energy: kappa.powi(-2),
            }
        })
        .collect();
    let spec = ShellSpectrum::from_shells(shells, Binning::ExactNormSquared);
    for delta in [2.5, 3.0, 4.0] {
        let got = sup_weighted_spectrum(&spec, delta).unwrap();
        let want = (m as f64 * 3f64.sqrt() / 2.0).powf(delta - 2.0);
        assert!((got / want - 1.0).abs() <= 0.05, "{got} vs {want}");
    }
}
