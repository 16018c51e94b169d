//! Seeded Gaussian random fields with prescribed shell spectra.
//!
//! Each mode draws from its own generator keyed by the seed and the wave
//! vector, so a
//! field generated at resolution `2M` shares every coefficient of the
//! field generated at `M` with the same seed (except shells cut by the box).

use rand::{RngCore, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use rustfft::num_complex::Complex64;

use crate::field::SpectralField;
use crate::grid::{wavenumber, GridSpec};
use crate::operators::leray_project;

/// Grid-independent stream id for a wave vector.
fn mode_key(k: &[i64]) -> u64 {
    let zigzag = |x: i64| ((x << 1) ^ (x >> 63)) as u64 & 0x1f_ffff;
    k.iter().fold(0u64, |acc, &x| (acc << 21) | zigzag(x))
}

/// Canonical member of a `+-k` pair: first nonzero component positive.
fn is_canonical(k: &[i64]) -> bool {
    k.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)
}

struct ModeRng {
    seed: u64,
}

impl ModeRng {
    fn new(seed: u64) -> Self {
        Self {
            seed: Xoshiro256PlusPlus::seed_from_u64(seed).next_u64(),
        }
    }

    fn normals<const N: usize>(&mut self, k: &[i64]) -> [f64; N] {
        let key = mode_key(k).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(self.seed ^ key);
        std::array::from_fn(|_| StandardNormal.sample(&mut rng))
    }
}

/// Lattice point counts per `|k|^2` over the Nyquist-free box of an
/// `ndim`-torus with `m` modes per axis, `k != 0`.
pub(crate) fn shell_counts(ndim: usize, m: usize) -> Vec<usize> {
    let h = (m / 2 - 1) as i64;
    let mut counts = vec![0usize; (ndim as i64 * h * h + 1) as usize];
    let mut k = vec![-h; ndim];
    loop {
        let n2: i64 = k.iter().map(|x| x * x).sum();
        counts[n2 as usize] += 1;
        let mut axis = 0;
        loop {
            if axis == ndim {
                counts[0] = 0;
                return counts;
            }
            k[axis] += 1;
            if k[axis] <= h {
                break;
            }
            k[axis] = -h;
            axis += 1;
        }
    }
}

/// Per-mode variance giving expected shell energy
/// `sum_{|k|^2 = n} |c^k|^2 n = n^{-exponent/2}` after dividing out the
/// shell population.
fn mode_variance(n2: usize, exponent: f64, counts: &[usize]) -> f64 {
    let n = n2 as f64;
    n.powf(-exponent / 2.0) / (n * counts[n2] as f64)
}

/// Random divergence-free velocity with `E(kappa) ~ kappa^{-spectrum_exponent}`
/// on exact `|k|^2` shells. Nyquist modes and the mean are zero.
pub fn random_divfree_field(grid: GridSpec, spectrum_exponent: f64, seed: u64) -> SpectralField {
    let m = grid.modes();
    let counts = shell_counts(3, m);
    let mut rng = ModeRng::new(seed);
    let mut field = SpectralField::zeros(grid);
    {
        let comps = field.components_mut();
        grid.for_each_mode(|idx, k| {
            if grid.is_nyquist(k) || !is_canonical(&k) {
                return;
            }
            let n2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as usize;
            // projection keeps two of three directions on average
            let sigma = (1.5 * mode_variance(n2, spectrum_exponent, &counts) / 6.0).sqrt();
            let z: [f64; 6] = rng.normals(&k);
            let p = grid.partner_index(idx);
            for j in 0..3 {
                let c = Complex64::new(z[2 * j], z[2 * j + 1]) * sigma;
                comps[j][idx] = c;
                comps[j][p] = c.conj();
            }
        });
    }
    leray_project(&field)
}

/// Random real scalar on the `ndim`-torus, coefficients in x-fastest order
/// over the `m^ndim` box, with the same shell shaping as
/// [`random_divfree_field`]. Mean and Nyquist modes are zero.
pub fn random_scalar_coefficients(
    ndim: usize,
    m: usize,
    exponent: f64,
    seed: u64,
) -> Vec<Complex64> {
    let counts = shell_counts(ndim, m);
    let mut rng = ModeRng::new(seed);
    let total = m.pow(ndim as u32);
    let mut out = vec![Complex64::default(); total];
    let mut idx_vec = vec![0usize; ndim];
    for idx in 0..total {
        let mut rest = idx;
        for slot in idx_vec.iter_mut() {
            *slot = rest % m;
            rest /= m;
        }
        let k: Vec<i64> = idx_vec.iter().map(|&i| wavenumber(i, m)).collect();
        if k.iter().any(|&x| x == (m / 2) as i64) || !is_canonical(&k) {
            continue;
        }
        let n2 = k.iter().map(|x| x * x).sum::<i64>() as usize;
        let sigma = (mode_variance(n2, exponent, &counts) / 2.0).sqrt();
        let z: [f64; 2] = rng.normals(&k);
        let c = Complex64::new(z[0], z[1]) * sigma;
        let partner: usize = idx_vec
            .iter()
            .rev()
            .fold(0, |acc, &i| acc * m + (m - i) % m);
        out[idx] = c;
        out[partner] = c.conj();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_counts_match_brute_force() {
        let c = shell_counts(2, 8);
        assert_eq!(c[1], 4);
        assert_eq!(c[2], 4);
        assert_eq!(c[9], 4);
        assert_eq!(c[18], 4);
        let c3 = shell_counts(3, 8);
        assert_eq!(c3[1], 6);
        assert_eq!(c3[3], 8);
        assert_eq!(c3.iter().sum::<usize>(), 7 * 7 * 7 - 1);
    }

    #[test]
    fn field_is_admissible_and_deterministic() {
        let g = GridSpec::new(16, 0.1).unwrap();
        let a = random_divfree_field(g, 2.0, 42);
        assert!(a.max_divergence() < 1e-14 * a.max_abs());
        assert_eq!(a.coeff([0, 0, 0]).unwrap(), [Complex64::default(); 3]);
        assert!(a.hermitian_defect() == 0.0);
        assert_eq!(a, random_divfree_field(g, 2.0, 42));
        assert_ne!(a, random_divfree_field(g, 2.0, 43));
    }

    #[test]
    fn coefficients_shared_across_resolutions() {
        let coarse = GridSpec::new(8, 0.1).unwrap();
        let fine = GridSpec::new(16, 0.1).unwrap();
        let a = random_divfree_field(coarse, 3.0, 5);
        let b = random_divfree_field(fine, 3.0, 5);
        // |k|^2 = 1 shell is fully inside both boxes
        let ca = a.coeff([1, 0, 0]).unwrap();
        let cb = b.coeff([1, 0, 0]).unwrap();
        for j in 0..3 {
            assert!((ca[j] - cb[j]).norm() < 1e-15);
        }
    }

    #[test]
    fn scalar_field_is_hermitian_with_zero_mean() {
        let c = random_scalar_coefficients(2, 8, 2.0, 1);
        assert_eq!(c[0], Complex64::default());
        for i2 in 0..8 {
            for i1 in 0..8 {
                let p = (8 - i1) % 8 + 8 * ((8 - i2) % 8);
                assert_eq!(c[i1 + 8 * i2], c[p].conj());
            }
        }
    }
}
