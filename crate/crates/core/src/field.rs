use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Velocity field as Fourier coefficients `c^k` of `u(x) = sum_k c^k e^{2 pi i k.x}`.
///
/// All `M^3` coefficients of each component are stored in x-fastest order.
/// Both members of every `+-k` pair are stored, so sums over the array count
/// each pair twice. The mean mode `c^0` is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    comps: [Vec<Complex64>; 3],
}

/// Real velocity samples on the uniform `M^3` grid, x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    grid: GridSpec,
    samples: [Vec<f64>; 3],
}

/// Spectral velocity gradient, `component(i, j)` holds `d_i u_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    grid: GridSpec,
    comps: Vec<Vec<Complex64>>,
}

impl SpectralField {
    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.len();
        Self {
            grid,
            comps: [
                vec![Complex64::default(); n],
                vec![Complex64::default(); n],
                vec![Complex64::default(); n],
            ],
        }
    }

    /// Wraps raw coefficient arrays; the mean mode is cleared.
    pub fn from_components(grid: GridSpec, comps: [Vec<Complex64>; 3]) -> Result<Self> {
        for c in &comps {
            if c.len() != grid.len() {
                return Err(Error::InvalidParameter {
                    name: "comps",
                    reason: format!("expected {} coefficients, got {}", grid.len(), c.len()),
                });
            }
        }
        let mut f = Self { grid, comps };
        f.clear_mean();
        Ok(f)
    }

    /// Builds a field from `(k, c^k)` pairs; each partner `c^{-k}` is set to
    /// `conj(c^k)`. Self-conjugate modes require real amplitudes.
    pub fn from_modes(grid: GridSpec, modes: &[([i64; 3], [Complex64; 3])]) -> Result<Self> {
        let mut f = Self::zeros(grid);
        for &(k, c) in modes {
            let idx = grid.index_of(k).ok_or(Error::ModeOutOfRange { k })?;
            let p = grid.partner_index(idx);
            if p == idx && c.iter().any(|z| z.im != 0.0) {
                return Err(Error::NotHermitian {
                    defect: c.iter().map(|z| z.im.abs()).fold(0.0, f64::max),
                });
            }
            for j in 0..3 {
                f.comps[j][idx] = c[j];
                f.comps[j][p] = c[j].conj();
            }
        }
        f.clear_mean();
        Ok(f)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn component(&self, j: usize) -> &[Complex64] {
        &self.comps[j]
    }

    pub fn components(&self) -> &[Vec<Complex64>; 3] {
        &self.comps
    }

    pub(crate) fn components_mut(&mut self) -> &mut [Vec<Complex64>; 3] {
        &mut self.comps
    }

    pub fn into_components(self) -> [Vec<Complex64>; 3] {
        self.comps
    }

    /// Coefficient vector `c^k`, or `None` outside the box.
    pub fn coeff(&self, k: [i64; 3]) -> Option<[Complex64; 3]> {
        let idx = self.grid.index_of(k)?;
        Some([self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]])
    }

    pub(crate) fn clear_mean(&mut self) {
        for c in &mut self.comps {
            c[0] = Complex64::default();
        }
    }

    /// Multiplies every mode by `f(k)`; the mean stays zero.
    pub fn map_multiplier(&self, f: impl Fn([i64; 3]) -> f64) -> Self {
        let mut out = self.clone();
        self.grid.for_each_mode(|idx, k| {
            let m = f(k);
            for c in out.comps.iter_mut() {
                c[idx] *= m;
            }
        });
        out.clear_mean();
        out
    }

    /// Keeps the modes where `keep(k)` holds and zeroes the rest.
    pub fn masked(&self, keep: impl Fn([i64; 3]) -> bool) -> Self {
        let mut out = Self::zeros(self.grid);
        self.grid.for_each_mode(|idx, k| {
            if idx != 0 && keep(k) {
                for (o, c) in out.comps.iter_mut().zip(&self.comps) {
                    o[idx] = c[idx];
                }
            }
        });
        out
    }

    /// True when every nonzero coefficient sits at a mode with `keep(k)`.
    pub fn supported_in(&self, keep: impl Fn([i64; 3]) -> bool) -> bool {
        let mut ok = true;
        self.grid.for_each_mode(|idx, k| {
            if !keep(k) && self.comps.iter().any(|c| c[idx] != Complex64::default()) {
                ok = false;
            }
        });
        ok
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let mut out = self.clone();
        for (o, c) in out.comps.iter_mut().zip(&other.comps) {
            for (x, y) in o.iter_mut().zip(c) {
                *x = *x * a + *y * b;
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(1.0, other, -1.0)
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        for c in out.comps.iter_mut() {
            for x in c.iter_mut() {
                *x *= a;
            }
        }
        out
    }

    /// `L^2` inner product over the unit torus, `sum_k c^k . conj(d^k)`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x * y.conj()).re).sum::<f64>())
            .sum())
    }

    /// `||u||^2_{L^2} = sum_k |c^k|^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.comps
            .iter()
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Kinetic energy `1/2 ||u||^2`.
    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.l2_norm_sq()
    }

    /// `max_k |k . c^k|` with integer wave vectors.
    pub fn max_divergence(&self) -> f64 {
        let mut worst: f64 = 0.0;
        self.grid.for_each_mode(|idx, k| {
            let d = self.comps[0][idx] * k[0] as f64
                + self.comps[1][idx] * k[1] as f64
                + self.comps[2][idx] * k[2] as f64;
            worst = worst.max(d.norm());
        });
        worst
    }

    /// `max_k |c^{-k} - conj(c^k)|`, taken over storage partners.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for idx in 0..self.grid.len() {
            let p = self.grid.partner_index(idx);
            for c in &self.comps {
                worst = worst.max((c[p] - c[idx].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

impl PhysicalField {
    pub fn new(grid: GridSpec, samples: [Vec<f64>; 3]) -> Result<Self> {
        for s in &samples {
            if s.len() != grid.len() {
                return Err(Error::InvalidParameter {
                    name: "samples",
                    reason: format!("expected {} samples, got {}", grid.len(), s.len()),
                });
            }
        }
        Ok(Self { grid, samples })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.len();
        Self {
            grid,
            samples: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    /// Samples `f(x)` at grid points `x = (i1, i2, i3) / M`.
    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let m = grid.modes();
        let h = 1.0 / m as f64;
        let mut out = Self::zeros(grid);
        let mut idx = 0;
        for i3 in 0..m {
            for i2 in 0..m {
                for i1 in 0..m {
                    let v = f([i1 as f64 * h, i2 as f64 * h, i3 as f64 * h]);
                    for j in 0..3 {
                        out.samples[j][idx] = v[j];
                    }
                    idx += 1;
                }
            }
        }
        out
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn component(&self, j: usize) -> &[f64] {
        &self.samples[j]
    }

    pub fn samples(&self) -> &[Vec<f64>; 3] {
        &self.samples
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| self.samples.iter().map(|s| s[i] * s[i]).sum::<f64>().sqrt())
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    /// Grid mean of `|u|^2`.
    pub fn mean_square(&self) -> f64 {
        let n = self.grid.len() as f64;
        self.samples
            .iter()
            .map(|s| s.iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
            / n
    }
}

impl GradientField {
    pub(crate) fn new(grid: GridSpec, comps: Vec<Vec<Complex64>>) -> Self {
        debug_assert_eq!(comps.len(), 9);
        Self { grid, comps }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Coefficients of `d_i u_j` (zero-based indices).
    pub fn component(&self, i: usize, j: usize) -> &[Complex64] {
        &self.comps[3 * i + j]
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.comps
    }

    /// `||grad u||^2_{L^2}` summed over all nine entries.
    pub fn l2_norm_sq(&self) -> f64 {
        self.comps
            .iter()
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}
