//! Brute-force references at small resolution: direct convolution sums and
//! direct evaluation of Fourier series, no FFTs.

use std::f64::consts::PI;

use tns_core::operators::{dealias_keeps, leray_project};
use tns_core::*;

const M: usize = 8;

fn grid() -> GridSpec {
    GridSpec::new(M, 0.1).unwrap()
}

fn modes(u: &SpectralField) -> Vec<([i64; 3], [Complex64; 3])> {
    let mut out = Vec::new();
    u.grid().for_each_mode(|idx, k| {
        let c = [u.component(0)[idx], u.component(1)[idx], u.component(2)[idx]];
        if c.iter().any(|z| z.norm() > 0.0) {
            out.push((k, c));
        }
    });
    out
}

fn i2pi(k: i64) -> Complex64 {
    Complex64::new(0.0, 2.0 * PI * k as f64)
}

fn add(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[test]
fn nonlinear_term_matches_direct_convolution() {
    let g = grid();
    for seed in [1, 2] {
        let u = random_divfree_field(g, 1.0, seed);
        let kept: Vec<_> = modes(&u)
            .into_iter()
            .filter(|(k, _)| dealias_keeps(&g, *k))
            .collect();
        // (u . grad u)_j at k = sum_{p+q=k} sum_i u_i(p) 2 pi i q_i u_j(q)
        let mut conv = std::collections::HashMap::new();
        for (p, up) in &kept {
            for (q, uq) in &kept {
                let k = add(*p, *q);
                let e = conv.entry(k).or_insert([Complex64::default(); 3]);
                let adv: Complex64 = (0..3).map(|i| up[i] * i2pi(q[i])).sum();
                for j in 0..3 {
                    e[j] += adv * uq[j];
                }
            }
        }
        let entries: Vec<_> = conv
            .into_iter()
            .filter(|(k, _)| dealias_keeps(&g, *k) && *k != [0, 0, 0])
            .collect();
        let want = leray_project(&SpectralField::from_modes(g, &entries).unwrap());
        let got = nonlinear_term(&u);
        let err = got.sub(&want).unwrap().max_abs();
        assert!(err <= 1e-12 * want.max_abs(), "seed {seed}: {err:e}");
    }
}

fn trilinear_direct(phi: &SpectralField, psi: &SpectralField, eta: &SpectralField) -> f64 {
    let nyq = |k: &[i64; 3]| k.iter().any(|&x| x == (M / 2) as i64);
    let (a, b, c) = (modes(phi), modes(psi), modes(eta));
    let c: std::collections::HashMap<[i64; 3], [Complex64; 3]> =
        c.into_iter().filter(|(k, _)| !nyq(k)).collect();
    let mut sum = Complex64::default();
    for (p, fp) in a.iter().filter(|(k, _)| !nyq(k)) {
        for (q, sq) in b.iter().filter(|(k, _)| !nyq(k)) {
            let r = [-p[0] - q[0], -p[1] - q[1], -p[2] - q[2]];
            if let Some(er) = c.get(&r) {
                let adv: Complex64 = (0..3).map(|i| fp[i] * i2pi(q[i])).sum();
                for j in 0..3 {
                    sum += adv * sq[j] * er[j];
                }
            }
        }
    }
    assert!(sum.im.abs() <= 1e-10 * sum.norm().max(1.0));
    sum.re
}

#[test]
fn trilinear_matches_direct_triple_sum() {
    let g = grid();
    let phi = random_divfree_field(g, 1.0, 3);
    let psi = random_divfree_field(g, 1.5, 4);
    let eta = random_divfree_field(g, 0.5, 5);
    let want = trilinear_direct(&phi, &psi, &eta);
    let got = trilinear_b(&phi, &psi, &eta).unwrap();
    assert!((got - want).abs() <= 1e-12 * want.abs().max(1e-3), "{got} vs {want}");
}

/// Fourier series summed directly at the points of an `n^3` grid.
fn direct_samples(u: &SpectralField, n: usize) -> Vec<[f64; 3]> {
    let ms = modes(u);
    let mut out = Vec::with_capacity(n * n * n);
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let pt = [x as f64 / n as f64, y as f64 / n as f64, z as f64 / n as f64];
                let mut v = [0.0; 3];
                for (k, c) in &ms {
                    let ph = 2.0 * PI * (k[0] as f64 * pt[0] + k[1] as f64 * pt[1] + k[2] as f64 * pt[2]);
                    let e = Complex64::from_polar(1.0, ph);
                    for j in 0..3 {
                        v[j] += (c[j] * e).re;
                    }
                }
                out.push(v);
            }
        }
    }
    out
}

#[test]
fn inverse_transform_matches_direct_series() {
    let u = random_divfree_field(grid(), 1.0, 6);
    let p = inverse_transform(&u).unwrap();
    let direct = direct_samples(&u, M);
    for (i, d) in direct.iter().enumerate() {
        for j in 0..3 {
            assert!((p.component(j)[i] - d[j]).abs() <= 1e-12);
        }
    }
}

#[test]
fn l4_norm_matches_direct_quadrature() {
    // |u|^4 has band 4(M/2 - 1) = 12, so 16 points per axis integrate it exactly
    let u = random_divfree_field(grid(), 1.0, 7);
    let direct = direct_samples(&u, 16);
    let mean: f64 = direct
        .iter()
        .map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).powi(2))
        .sum::<f64>()
        / direct.len() as f64;
    let want = mean.powf(0.25);
    let got = lq_norm(&u, 4.0).unwrap();
    assert!((got - want).abs() <= 1e-12 * want, "{got} vs {want}");
}

#[test]
fn sobolev_norm_matches_mode_sum() {
    let u = random_divfree_field(grid(), 1.0, 8);
    for s in [0.0, 1.0 / 6.0, 0.25, 1.0 / 3.0, 0.5, 2.0 / 3.0, 1.0] {
        let want: f64 = modes(&u)
            .iter()
            .map(|(k, c)| {
                let lam = 4.0 * PI * PI * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
                let a: f64 = c.iter().map(|z| z.norm_sqr()).sum();
                if lam == 0.0 {
                    if s == 0.0 {
                        a
                    } else {
                        0.0
                    }
                } else {
                    lam.powf(2.0 * s) * a
                }
            })
            .sum::<f64>()
            .sqrt();
        let got = sobolev_norm(&u, s).unwrap();
        assert!((got - want).abs() <= 1e-12 * want, "s={s}: {got} vs {want}");
    }
}
