use crate::error::{Error, Result};

/// Default fraction of the band kept by the 2/3 dealiasing rule.
pub const TWO_THIRDS: f64 = 2.0 / 3.0;

/// Resolution and physical parameters of a periodic box `[0,1)^3`.
///
/// Wavenumbers along each axis span `-M/2 < k <= M/2`. Storage index `i`
/// maps to wavenumber `i` for `i <= M/2` and `i - M` above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    modes: usize,
    viscosity: f64,
    dealias_fraction: f64,
}

impl GridSpec {
    pub fn new(modes: usize, viscosity: f64) -> Result<Self> {
        Self::with_dealias(modes, viscosity, TWO_THIRDS)
    }

    pub fn with_dealias(modes: usize, viscosity: f64, dealias_fraction: f64) -> Result<Self> {
        if modes < 4 || modes % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "modes_per_dim must be even and >= 4, got {modes}"
            )));
        }
        if !(viscosity > 0.0) || !viscosity.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "viscosity must be positive, got {viscosity}"
            )));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "dealias_fraction must lie in (0,1], got {dealias_fraction}"
            )));
        }
        Ok(Self {
            modes,
            viscosity,
            dealias_fraction,
        })
    }

    /// Zero-viscosity grid for Euler diagnostics. Not a valid Navier-Stokes
    /// configuration; only the solver's conservation checks use it.
    pub fn inviscid(modes: usize) -> Result<Self> {
        let mut g = Self::new(modes, 1.0)?;
        g.viscosity = 0.0;
        Ok(g)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn viscosity(&self) -> f64 {
        self.viscosity
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Same resolution with a different viscosity.
    pub fn with_viscosity(&self, viscosity: f64) -> Result<Self> {
        Self::with_dealias(self.modes, viscosity, self.dealias_fraction)
    }

    /// Number of lattice points, `M^3`.
    pub fn len(&self) -> usize {
        self.modes * self.modes * self.modes
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nyquist(&self) -> usize {
        self.modes / 2
    }

    /// Largest `|k_i|` kept by the dealiasing filter.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.dealias_fraction * self.modes as f64 / 2.0 + 1e-9).floor() as i64
    }

    pub fn wavenumber(&self, i: usize) -> i64 {
        wavenumber(i, self.modes)
    }

    /// Signed wavenumber for each storage index along one axis.
    pub fn wavenumbers(&self) -> Vec<i64> {
        (0..self.modes).map(|i| self.wavenumber(i)).collect()
    }

    /// Storage offset of a wave vector, or `None` when outside the box.
    pub fn index_of(&self, k: [i64; 3]) -> Option<usize> {
        let m = self.modes as i64;
        let mut idx = 0usize;
        for axis in (0..3).rev() {
            let ki = k[axis];
            if ki <= -m / 2 || ki > m / 2 {
                return None;
            }
            idx = idx * self.modes + ki.rem_euclid(m) as usize;
        }
        Some(idx)
    }

    /// Offset of the Hermitian partner `-k` of the mode stored at `idx`.
    pub fn partner_index(&self, idx: usize) -> usize {
        let m = self.modes;
        let (i1, i2, i3) = (idx % m, (idx / m) % m, idx / (m * m));
        let neg = |i: usize| (m - i) % m;
        neg(i1) + m * (neg(i2) + m * neg(i3))
    }

    /// Visit every stored mode with its offset and wave vector, x-fastest.
    pub fn for_each_mode(&self, mut f: impl FnMut(usize, [i64; 3])) {
        let ks = self.wavenumbers();
        let mut idx = 0;
        for &k3 in &ks {
            for &k2 in &ks {
                for &k1 in &ks {
                    f(idx, [k1, k2, k3]);
                    idx += 1;
                }
            }
        }
    }

    /// True when any component sits on the Nyquist wavenumber `M/2`.
    pub fn is_nyquist(&self, k: [i64; 3]) -> bool {
        let n = self.nyquist() as i64;
        k.iter().any(|&ki| ki == n)
    }

    pub fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self.modes != other.modes {
            return Err(Error::GridMismatch {
                left: self.modes,
                right: other.modes,
            });
        }
        Ok(())
    }
}

pub(crate) fn wavenumber(i: usize, m: usize) -> i64 {
    if i <= m / 2 {
        i as i64
    } else {
        i as i64 - m as i64
    }
}

pub(crate) fn norm2(k: [i64; 3]) -> i64 {
    k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
}

/// Stokes eigenvalue `4 pi^2 |k|^2`.
pub fn stokes_eigenvalue(k2: i64) -> f64 {
    4.0 * std::f64::consts::PI * std::f64::consts::PI * k2 as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(6, 0.1).is_ok());
        assert!(GridSpec::new(2, 0.1).is_err());
        assert!(GridSpec::new(7, 0.1).is_err());
        assert!(GridSpec::new(8, 0.0).is_err());
        assert!(GridSpec::with_dealias(8, 0.1, 0.0).is_err());
        assert!(GridSpec::with_dealias(8, 0.1, 1.5).is_err());
    }

    #[test]
    fn index_roundtrip_and_partner() {
        let g = GridSpec::new(8, 0.1).unwrap();
        g.for_each_mode(|idx, k| {
            assert_eq!(g.index_of(k), Some(idx));
            let p = g.partner_index(idx);
            if !g.is_nyquist(k) {
                assert_eq!(g.index_of([-k[0], -k[1], -k[2]]), Some(p));
            }
        });
        assert_eq!(g.index_of([-4, 0, 0]), None);
        assert_eq!(g.index_of([4, 0, 0]), Some(4));
    }

    #[test]
    fn dealias_cutoff_is_robust_to_rounding() {
        assert_eq!(GridSpec::new(48, 0.1).unwrap().dealias_cutoff(), 16);
        assert_eq!(GridSpec::new(32, 0.1).unwrap().dealias_cutoff(), 10);
        let full = GridSpec::with_dealias(32, 0.1, 1.0).unwrap();
        assert_eq!(full.dealias_cutoff(), 16);
    }
}
