//! Spatial `L^q` norms and `A^s` Sobolev norms.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{GradientField, PhysicalField, SpectralField};
use crate::grid::{norm2, stokes_eigenvalue};
use crate::transform::{reduce_magnitude_sq, reduce_magnitude_sq_groups};

fn check_q(q: f64) -> Result<()> {
    if q.is_nan() || q <= 1.0 {
        return Err(Error::ExponentOutOfRange {
            value: q,
            range: "(1, inf]",
        });
    }
    Ok(())
}

fn power_of_square(q: f64) -> impl Fn(f64) -> f64 {
    let half = q / 2.0;
    let int = (half.fract() == 0.0 && half <= 8.0).then_some(half as i32);
    move |a: f64| match int {
        Some(p) => a.powi(p),
        None => a.powf(half),
    }
}

/// Quadrature of `(mean |f|^q)^{1/q}` from pointwise squared magnitudes;
/// `q = inf` gives the maximum.
fn lq_from_squares(sq: &[f64], q: f64) -> f64 {
    let max_sq = sq.iter().copied().fold(0.0, f64::max);
    if max_sq == 0.0 || q.is_infinite() {
        return max_sq.sqrt();
    }
    let inv = 1.0 / max_sq;
    let pow = power_of_square(q);
    let sum: f64 = sq.iter().map(|&a| pow(a * inv)).sum();
    max_sq.sqrt() * (sum / sq.len() as f64).powf(1.0 / q)
}

/// `L^q` norm of the real field whose components have the given Hermitian
/// coefficients on the `m^ndim` box.
///
/// `q = 2` uses Parseval. Other exponents sample `|f|` on the `2m` grid,
/// which integrates `|f|^4` exactly and suppresses aliasing for other `q`.
pub(crate) fn lq_norm_coefficients(
    ndim: usize,
    m: usize,
    comps: &[&[Complex64]],
    q: f64,
) -> Result<f64> {
    Ok(lq_norms_coefficients(ndim, m, &[comps.to_vec()], q)?[0])
}

/// For fields whose squared magnitudes overflow: divides the coefficients
/// by their absolute sum, which bounds `|f|`, and scales the norm back.
fn lq_norm_rescaled(ndim: usize, m: usize, f: &[&[Complex64]], q: f64) -> Result<f64> {
    let bound: f64 = f.iter().flat_map(|c| c.iter()).map(|z| z.norm()).sum();
    if !bound.is_finite() {
        return Ok(f64::INFINITY);
    }
    let inv = 1.0 / bound;
    let scaled: Vec<Vec<Complex64>> = f.iter().map(|c| c.iter().map(|z| z * inv).collect()).collect();
    let refs: Vec<&[Complex64]> = scaled.iter().map(Vec::as_slice).collect();
    Ok(bound * lq_norm_coefficients(ndim, m, &refs, q)?)
}

/// [`lq_norm_coefficients`] for several fields, sharing transforms.
pub(crate) fn lq_norms_coefficients(
    ndim: usize,
    m: usize,
    fields: &[Vec<&[Complex64]>],
    q: f64,
) -> Result<Vec<f64>> {
    check_q(q)?;
    if q == 2.0 {
        return Ok(fields
            .iter()
            .map(|f| {
                f.iter()
                    .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>())
                    .sum::<f64>()
                    .sqrt()
            })
            .collect());
    }
    let len = 2 * m;
    let n = len.pow(ndim as u32) as f64;
    let comps: Vec<(usize, &[Complex64])> = fields
        .iter()
        .enumerate()
        .flat_map(|(j, f)| f.iter().map(move |&c| (j, c)))
        .collect();
    if q.is_infinite() {
        let res = reduce_magnitude_sq_groups(ndim, m, &comps, fields.len(), len, |_| 0.0);
        return fields
            .iter()
            .zip(&res)
            .map(|(f, &(_, max_sq))| match max_sq.is_finite() {
                true => Ok(max_sq.sqrt()),
                false => lq_norm_rescaled(ndim, m, f, q),
            })
            .collect();
    }
    let pow = power_of_square(q);
    // constant exponents keep the hot loop free of libm calls
    let res = match q {
        3.0 => reduce_magnitude_sq_groups(ndim, m, &comps, fields.len(), len, |a| a * a.sqrt()),
        4.0 => reduce_magnitude_sq_groups(ndim, m, &comps, fields.len(), len, |a| a * a),
        6.0 => reduce_magnitude_sq_groups(ndim, m, &comps, fields.len(), len, |a| a * a * a),
        _ => reduce_magnitude_sq_groups(ndim, m, &comps, fields.len(), len, &pow),
    };
    let mut out = Vec::with_capacity(fields.len());
    for (f, &(sum, max_sq)) in fields.iter().zip(&res) {
        if max_sq == 0.0 {
            out.push(0.0);
        } else if !max_sq.is_finite() {
            out.push(lq_norm_rescaled(ndim, m, f, q)?);
        } else if sum.is_finite() && sum > 1e-250 {
            out.push((sum / n).powf(1.0 / q));
        } else {
            // out of floating range: repeat with the integrand scaled by the maximum
            let inv = 1.0 / max_sq;
            let (sum, _) = reduce_magnitude_sq(ndim, m, f, len, |a| pow(a * inv));
            out.push(max_sq.sqrt() * (sum / n).powf(1.0 / q));
        }
    }
    Ok(out)
}

/// `||u||_{L^q}` of a spectral velocity field.
pub fn lq_norm(u: &SpectralField, q: f64) -> Result<f64> {
    let c = u.components();
    lq_norm_coefficients(3, u.grid().modes(), &[&c[0], &c[1], &c[2]], q)
}

/// `L^q` norms of several fields on one grid. Equal to calling [`lq_norm`]
/// on each, but components of different fields share transforms.
pub fn lq_norm_many(fields: &[&SpectralField], q: f64) -> Result<Vec<f64>> {
    let Some(first) = fields.first() else {
        check_q(q)?;
        return Ok(Vec::new());
    };
    for f in fields {
        first.grid().check_same(f.grid())?;
    }
    let comps: Vec<Vec<&[Complex64]>> = fields
        .iter()
        .map(|f| f.components().iter().map(|c| c.as_slice()).collect())
        .collect();
    lq_norms_coefficients(3, first.grid().modes(), &comps, q)
}

/// `||grad u||_{L^q}` with the pointwise Frobenius norm of the tensor.
pub fn lq_norm_gradient(g: &GradientField, q: f64) -> Result<f64> {
    let comps: Vec<&[Complex64]> = g.components().iter().map(|c| c.as_slice()).collect();
    lq_norm_coefficients(3, g.grid().modes(), &comps, q)
}

/// `||p||_{L^q}` by direct quadrature over the stored samples.
pub fn lq_norm_physical(p: &PhysicalField, q: f64) -> Result<f64> {
    check_q(q)?;
    let sq: Vec<f64> = p.magnitude().iter().map(|a| a * a).collect();
    Ok(lq_from_squares(&sq, q))
}

/// `||A^s u||_{L^2} = (sum_k lambda_k^{2s} |c^k|^2)^{1/2}`.
pub fn sobolev_norm(u: &SpectralField, s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::ExponentOutOfRange {
            value: s,
            range: "[0, 1]",
        });
    }
    let grid = u.grid();
    let h = grid.nyquist() as usize;
    let weights: Vec<f64> = (0..=3 * h * h)
        .map(|n| {
            if n == 0 {
                0.0
            } else {
                stokes_eigenvalue(n as i64).powf(2.0 * s)
            }
        })
        .collect();
    let c = u.components();
    let mut total = 0.0;
    grid.for_each_mode(|idx, k| {
        let a = c[0][idx].norm_sqr() + c[1][idx].norm_sqr() + c[2][idx].norm_sqr();
        if a != 0.0 {
            total += weights[norm2(k) as usize] * a;
        }
    });
    Ok(total.sqrt())
}
