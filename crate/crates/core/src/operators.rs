//! Leray projection, Stokes powers, gradients, the advective nonlinearity
//! and the trilinear form `b`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{GradientField, SpectralField};
use crate::grid::{norm2, stokes_eigenvalue, GridSpec};
use crate::transform::{analyze_real, synthesize};

/// Orthogonal projection onto divergence-free, mean-zero fields:
/// `c^k -> c^k - k (k.c^k) / |k|^2`. Nyquist modes are not part of the
/// resolved divergence-free space and are removed.
pub fn leray_project(s: &SpectralField) -> SpectralField {
    let grid = *s.grid();
    let mut out = s.clone();
    {
        let comps = out.components_mut();
        grid.for_each_mode(|idx, k| {
            if idx == 0 || grid.is_nyquist(k) {
                for c in comps.iter_mut() {
                    c[idx] = Complex64::default();
                }
                return;
            }
            let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
            let dot = comps[0][idx] * kf[0] + comps[1][idx] * kf[1] + comps[2][idx] * kf[2];
            let scale = dot / norm2(k) as f64;
            for (j, c) in comps.iter_mut().enumerate() {
                c[idx] -= scale * kf[j];
            }
        });
    }
    out
}

fn check_unit_exponent(exponent: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&exponent) {
        return Err(Error::ExponentOutOfRange {
            value: exponent,
            range: "[0, 1]",
        });
    }
    Ok(())
}

/// `A^s u`: every coefficient multiplied by `(4 pi^2 |k|^2)^s`.
pub fn stokes_power(s: &SpectralField, exponent: f64) -> Result<SpectralField> {
    check_unit_exponent(exponent)?;
    Ok(s.map_multiplier(|k| {
        let k2 = norm2(k);
        if k2 == 0 {
            0.0
        } else {
            stokes_eigenvalue(k2).powf(exponent)
        }
    }))
}

/// `d_i u_j` with coefficients `2 pi i k_i c^k_j`. The derivative of a
/// Nyquist mode along its own axis is taken as zero.
pub fn gradient(s: &SpectralField) -> GradientField {
    let grid = *s.grid();
    let nyq = grid.nyquist() as i64;
    let n = grid.len();
    let mut comps = vec![vec![Complex64::default(); n]; 9];
    grid.for_each_mode(|idx, k| {
        for i in 0..3 {
            if k[i] == nyq {
                continue;
            }
            let factor = Complex64::new(0.0, 2.0 * PI * k[i] as f64);
            for j in 0..3 {
                comps[3 * i + j][idx] = factor * s.component(j)[idx];
            }
        }
    });
    GradientField::new(grid, comps)
}

/// True for modes kept by the dealiasing filter.
pub fn dealias_keeps(grid: &GridSpec, k: [i64; 3]) -> bool {
    let cut = grid.dealias_cutoff();
    !grid.is_nyquist(k) && k.iter().all(|&ki| ki.abs() <= cut)
}

pub fn dealias(s: &SpectralField) -> SpectralField {
    let grid = *s.grid();
    s.masked(|k| dealias_keeps(&grid, k))
}

/// `P(u . grad u)` for divergence-free `u`, evaluated pseudo-spectrally in
/// the conservative form `div(u (x) u)` with the dealiasing filter applied
/// to the input and to the product.
pub fn nonlinear_term(u: &SpectralField) -> SpectralField {
    let grid = *u.grid();
    let m = grid.modes();
    let du = dealias(u);
    let c = du.components();
    let phys = synthesize(3, m, &[&c[0], &c[1], &c[2]], m);
    let pairs = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
    let products: Vec<Vec<f64>> = pairs
        .iter()
        .map(|&(a, b)| phys[a].iter().zip(&phys[b]).map(|(x, y)| x * y).collect())
        .collect();
    let refs: Vec<&[f64]> = products.iter().map(|p| p.as_slice()).collect();
    let hat = analyze_real(3, m, &refs);
    let slot = |a: usize, b: usize| -> usize {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        pairs.iter().position(|&p| p == (a, b)).unwrap()
    };
    let mut out = SpectralField::zeros(grid);
    {
        let comps = out.components_mut();
        grid.for_each_mode(|idx, k| {
            if !dealias_keeps(&grid, k) {
                return;
            }
            for (j, comp) in comps.iter_mut().enumerate() {
                let mut acc = Complex64::default();
                for (i, &ki) in k.iter().enumerate() {
                    acc += hat[slot(i, j)][idx] * ki as f64;
                }
                comp[idx] = acc * Complex64::new(0.0, 2.0 * PI);
            }
        });
    }
    out.clear_mean();
    leray_project(&out)
}

/// `b(phi, psi, eta) = int sum_{i,j} phi_i d_i psi_j eta_j dx`.
///
/// The triple product of fields banded at `M/2` has band `3M/2`, so the
/// quadrature is done on the `2M` grid where it is exact. Nyquist modes are
/// dropped from all three arguments first.
pub fn trilinear_b(phi: &SpectralField, psi: &SpectralField, eta: &SpectralField) -> Result<f64> {
    let grid = *phi.grid();
    grid.check_same(psi.grid())?;
    grid.check_same(eta.grid())?;
    let strip = |f: &SpectralField| f.masked(|k| !grid.is_nyquist(k));
    let (phi, psi, eta) = (strip(phi), strip(psi), strip(eta));
    let grad = gradient(&psi);
    let m = grid.modes();
    let mut comps: Vec<&[Complex64]> = Vec::with_capacity(15);
    comps.extend(phi.components().iter().map(|c| c.as_slice()));
    comps.extend(eta.components().iter().map(|c| c.as_slice()));
    comps.extend(grad.components().iter().map(|c| c.as_slice()));
    let phys = synthesize(3, m, &comps, 2 * m);
    let n = phys[0].len();
    let mut sum = 0.0;
    for p in 0..n {
        for j in 0..3 {
            let mut adv = 0.0;
            for i in 0..3 {
                adv += phys[i][p] * phys[6 + 3 * i + j][p];
            }
            sum += adv * phys[3 + j][p];
        }
    }
    Ok(sum / n as f64)
}
