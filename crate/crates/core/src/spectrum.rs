//! Shell spectra `E(kappa) = sum_{|k| = kappa} |c^k|^2 |k|^2`.
//!
//! Both members of each `+-k` pair are summed, so a real single-mode field
//! `c^{(1,0,0)} = c^{(-1,0,0)}` with `|c|^2 = 1` has `E(1) = 2`. With this
//! convention `4 pi^2 sum_kappa E(kappa) = ||A^{1/2} u||^2`.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::norm2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binning {
    /// One shell per distinct integer `|k|^2`, `kappa = sqrt(|k|^2)`.
    ExactNormSquared,
    /// Shells `[n - 1/2, n + 1/2)` centred on integers. For plotting only.
    UnitWidth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shell {
    pub kappa: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShellSpectrum {
    shells: Vec<Shell>,
    binning: Binning,
}

impl ShellSpectrum {
    /// Spectrum from explicit `(kappa, energy)` pairs, sorted by `kappa`.
    pub fn from_shells(mut shells: Vec<Shell>, binning: Binning) -> Self {
        shells.sort_by(|a, b| a.kappa.total_cmp(&b.kappa));
        Self { shells, binning }
    }

    pub fn shells(&self) -> &[Shell] {
        &self.shells
    }

    pub fn binning(&self) -> Binning {
        self.binning
    }

    pub fn is_empty(&self) -> bool {
        self.shells.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.shells.iter().map(|s| s.energy).sum()
    }

    /// CSV with header `kappa,energy`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "kappa,energy")?;
        for s in &self.shells {
            writeln!(w, "{},{}", s.kappa, s.energy)?;
        }
        Ok(())
    }
}

fn shell_sums(u: &SpectralField) -> BTreeMap<i64, f64> {
    let mut bins = BTreeMap::new();
    u.grid().for_each_mode(|idx, k| {
        let n2 = norm2(k);
        let amp: f64 = u.components().iter().map(|c| c[idx].norm_sqr()).sum();
        if amp > 0.0 {
            *bins.entry(n2).or_insert(0.0) += amp * n2 as f64;
        }
    });
    bins
}

/// Exact-shell spectrum. Shells with zero energy are omitted.
pub fn energy_spectrum(u: &SpectralField) -> ShellSpectrum {
    let shells = shell_sums(u)
        .into_iter()
        .map(|(n2, e)| Shell {
            kappa: (n2 as f64).sqrt(),
            energy: e,
        })
        .collect();
    ShellSpectrum {
        shells,
        binning: Binning::ExactNormSquared,
    }
}

/// Unit-width spectrum for plotting.
pub fn energy_spectrum_unit_width(u: &SpectralField) -> ShellSpectrum {
    let mut bins: BTreeMap<i64, f64> = BTreeMap::new();
    for (n2, e) in shell_sums(u) {
        let centre = (n2 as f64).sqrt().round() as i64;
        *bins.entry(centre).or_insert(0.0) += e;
    }
    let shells = bins
        .into_iter()
        .map(|(c, e)| Shell {
            kappa: c as f64,
            energy: e,
        })
        .collect();
    ShellSpectrum {
        shells,
        binning: Binning::UnitWidth,
    }
}

/// Least-squares slope of `log E` against `log kappa` over shells with
/// `kappa_min <= kappa <= kappa_max` and positive energy.
pub fn decay_exponent(spec: &ShellSpectrum, shell_range: (f64, f64)) -> Result<f64> {
    let pts: Vec<(f64, f64)> = spec
        .shells
        .iter()
        .filter(|s| s.kappa >= shell_range.0 && s.kappa <= shell_range.1)
        .filter(|s| s.energy > 0.0 && s.kappa > 0.0)
        .map(|s| (s.kappa.ln(), s.energy.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::TooFewShells {
            needed: 3,
            found: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

/// `max_kappa kappa^delta E(kappa)` for `delta > 2`.
pub fn sup_weighted_spectrum(spec: &ShellSpectrum, delta: f64) -> Result<f64> {
    if delta.is_nan() || delta <= 2.0 {
        return Err(Error::ExponentOutOfRange {
            value: delta,
            range: "(2, inf)",
        });
    }
    Ok(spec
        .shells
        .iter()
        .map(|s| s.kappa.powf(delta) * s.energy)
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use rustfft::num_complex::Complex64;

    fn synthetic(exponent: f64) -> ShellSpectrum {
        let shells = (1..200)
            .map(|n| {
                let kappa = (n as f64).sqrt();
                Shell {
                    kappa,
                    energy: kappa.powf(exponent),
                }
            })
            .collect();
        ShellSpectrum::from_shells(shells, Binning::ExactNormSquared)
    }

    #[test]
    fn single_mode_counts_both_partners() {
        let g = GridSpec::new(8, 0.1).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let z = Complex64::default();
        let u = SpectralField::from_modes(g, &[([1, 0, 0], [z, one, z])]).unwrap();
        let spec = energy_spectrum(&u);
        assert_eq!(
            spec.shells(),
            &[Shell {
                kappa: 1.0,
                energy: 2.0
            }]
        );
        assert!(energy_spectrum(&SpectralField::zeros(g)).is_empty());
    }

    #[test]
    fn slopes_of_power_laws() {
        for e in [-5.0 / 3.0, -2.0] {
            let got = decay_exponent(&synthetic(e), (1.0, 100.0)).unwrap();
            assert!((got - e).abs() < 1e-10);
        }
        let flat = synthetic(0.0);
        assert!(decay_exponent(&flat, (1.0, 100.0)).unwrap().abs() < 1e-10);
        assert!(matches!(
            decay_exponent(&flat, (1.0, 1.5)),
            Err(Error::TooFewShells { .. })
        ));
    }

    #[test]
    fn weighted_sup() {
        let spec = synthetic(-3.0);
        assert!((sup_weighted_spectrum(&spec, 3.0).unwrap() - 1.0).abs() < 1e-12);
        let one = ShellSpectrum::from_shells(
            vec![Shell {
                kappa: 2.0,
                energy: 3.0,
            }],
            Binning::ExactNormSquared,
        );
        assert_eq!(sup_weighted_spectrum(&one, 3.0).unwrap(), 24.0);
        let empty = ShellSpectrum::from_shells(vec![], Binning::ExactNormSquared);
        assert_eq!(sup_weighted_spectrum(&empty, 2.5).unwrap(), 0.0);
        assert!(sup_weighted_spectrum(&one, 2.0).is_err());
    }

    #[test]
    fn csv_header() {
        let one = ShellSpectrum::from_shells(
            vec![Shell {
                kappa: 2.0,
                energy: 0.1,
            }],
            Binning::UnitWidth,
        );
        let mut buf = Vec::new();
        one.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "kappa,energy\n2,0.1\n");
    }
}
