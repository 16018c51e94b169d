//! Sampling checks of the embedding inequalities behind the low-mode
//! estimates. Each check records the largest ratio of left side to right
//! side (constants stripped) over random fields; the constants themselves
//! are never claimed.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::decomposition::{in_genuine3d_band, ModeLabel, ModePartition};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::{wavenumber, GridSpec};
use crate::norms::{lq_norm, lq_norm_coefficients, lq_norm_many, sobolev_norm};
use crate::random::{random_divfree_field, random_scalar_coefficients};

/// Range of the spectrum exponent drawn per sample.
pub const SAMPLE_EXPONENT_RANGE: (f64, f64) = (1.0, 3.0);

/// Which inequality a report refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InequalityId {
    /// `||h||_q <= C (||(-Delta)^s h|| + ||h||)` on the `n`-torus with
    /// `2s/n = 1/2 - 1/q`.
    FractionalEmbedding,
    /// `||v^i||_q <= C N^{1/2} ||A^s v^i||` with `1/q = 1/2 - s`.
    PieceSobolev,
    /// `||v_N||_q <= C N^{1/2} ||v_N||^{2/q} ||A^{1/2} v_N||^{1-2/q}`.
    LowModeInterpolation,
}

impl InequalityId {
    pub fn as_str(&self) -> &'static str {
        match self {
            InequalityId::FractionalEmbedding => "fractional-embedding",
            InequalityId::PieceSobolev => "piece-sobolev",
            InequalityId::LowModeInterpolation => "low-mode-interpolation",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            InequalityId::FractionalEmbedding,
            InequalityId::PieceSobolev,
            InequalityId::LowModeInterpolation,
        ]
        .into_iter()
        .find(|id| id.as_str() == s)
    }
}

impl fmt::Display for InequalityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameters of one sampled inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityParams {
    /// Torus dimension.
    pub dim: usize,
    pub s: f64,
    pub q: f64,
    /// Cut level `N`, for the partition inequalities.
    pub cut_level: Option<u32>,
    /// Piece index `i` in `1..=3`.
    pub component: Option<usize>,
    /// Modes per dimension.
    pub modes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub id: InequalityId,
    pub params: InequalityParams,
    /// Samples drawn, including ones skipped because a side vanished.
    pub samples: usize,
    /// Samples that entered the maximum.
    pub used: usize,
    pub max_ratio: f64,
    /// Index of the sample attaining `max_ratio`.
    pub argmax: usize,
}

pub const INEQUALITY_CSV_HEADER: &str =
    "id,dim,s,q,cut_level,component,modes,samples,used,max_ratio";

impl InequalityReport {
    pub fn write_csv_row<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let opt = |x: Option<String>| x.unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            self.id,
            self.params.dim,
            self.params.s,
            self.params.q,
            opt(self.params.cut_level.map(|n| n.to_string())),
            opt(self.params.component.map(|i| i.to_string())),
            self.params.modes,
            self.samples,
            self.used,
            self.max_ratio
        )
    }
}

/// Writes reports as CSV under [`INEQUALITY_CSV_HEADER`].
pub fn write_inequality_csv<W: Write>(
    reports: &[InequalityReport],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "{INEQUALITY_CSV_HEADER}")?;
    for r in reports {
        r.write_csv_row(&mut w)?;
    }
    Ok(())
}

/// Spectrum exponent and field seed of sample `i`.
pub fn sample_params(seed: u64, i: usize) -> (f64, u64) {
    let mut rng =
        Xoshiro256PlusPlus::seed_from_u64(seed ^ (i as u64).wrapping_mul(0xd134_2543_de82_ef95));
    let (lo, hi) = SAMPLE_EXPONENT_RANGE;
    (rng.random_range(lo..=hi), rng.random())
}

fn check_samples(samples: usize) -> Result<()> {
    if samples == 0 {
        return Err(Error::InvalidParameter {
            name: "samples",
            reason: "at least one sample is required".into(),
        });
    }
    Ok(())
}

fn check_modes(m: usize) -> Result<()> {
    if m < 4 || m % 2 != 0 {
        return Err(Error::InvalidGrid(format!(
            "modes must be even and at least 4, got {m}"
        )));
    }
    Ok(())
}

/// `s = n (1/2 - 1/q) / 2`, requiring `2 < q < inf` and `s < 1`.
pub fn embedding_exponent(dim: usize, q: f64) -> Result<f64> {
    if dim < 2 {
        return Err(Error::InvalidParameter {
            name: "dim",
            reason: format!("dimension must exceed 1, got {dim}"),
        });
    }
    if !(q > 2.0 && q.is_finite()) {
        return Err(Error::ExponentOutOfRange {
            value: q,
            range: "(2, inf)",
        });
    }
    let s = dim as f64 * (0.5 - 1.0 / q) / 2.0;
    if s >= 1.0 {
        return Err(Error::ExponentOutOfRange {
            value: s,
            range: "s < 1",
        });
    }
    Ok(s)
}

/// `q = 1 / (1/2 - s)` for `0 <= 2s < 1`.
pub fn piece_exponent_from_s(s: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&s) {
        return Err(Error::ExponentOutOfRange {
            value: s,
            range: "0 <= 2s < 1",
        });
    }
    Ok(1.0 / (0.5 - s))
}

/// `s = 1/2 - 1/q` for `2 <= q < inf`.
pub fn piece_s_from_exponent(q: f64) -> Result<f64> {
    if !(q >= 2.0 && q.is_finite()) {
        return Err(Error::ExponentOutOfRange {
            value: q,
            range: "[2, inf)",
        });
    }
    Ok(0.5 - 1.0 / q)
}

fn check_interpolation_q(q: f64) -> Result<()> {
    if !(q >= 2.0 && q.is_finite()) {
        return Err(Error::ExponentOutOfRange {
            value: q,
            range: "[2, inf)",
        });
    }
    Ok(())
}

/// `||h||_q / (||(-Delta)^s h|| + ||h||)` for a real scalar with Hermitian
/// coefficients on the `m^dim` box; `None` for `h = 0`.
pub fn fractional_embedding_ratio(
    dim: usize,
    m: usize,
    coeffs: &[Complex64],
    q: f64,
) -> Result<Option<f64>> {
    let s = embedding_exponent(dim, q)?;
    if coeffs.len() != m.pow(dim as u32) {
        return Err(Error::InvalidParameter {
            name: "coeffs",
            reason: format!(
                "expected {} coefficients, got {}",
                m.pow(dim as u32),
                coeffs.len()
            ),
        });
    }
    let mut l2 = 0.0;
    let mut hs = 0.0;
    for (idx, c) in coeffs.iter().enumerate() {
        let a = c.norm_sqr();
        if a == 0.0 {
            continue;
        }
        let mut rest = idx;
        let mut k2 = 0i64;
        for _ in 0..dim {
            let k = wavenumber(rest % m, m);
            k2 += k * k;
            rest /= m;
        }
        l2 += a;
        if k2 > 0 {
            hs += (4.0 * PI * PI * k2 as f64).powf(2.0 * s) * a;
        }
    }
    if l2 == 0.0 {
        return Ok(None);
    }
    let lhs = lq_norm_coefficients(dim, m, &[coeffs], q)?;
    Ok(Some(lhs / (hs.sqrt() + l2.sqrt())))
}

fn check_component(i: usize) -> Result<ModeLabel> {
    match i {
        1 => Ok(ModeLabel::V1),
        2 => Ok(ModeLabel::V2),
        3 => Ok(ModeLabel::V3),
        _ => Err(Error::InvalidParameter {
            name: "component",
            reason: format!("piece index must be 1, 2 or 3, got {i}"),
        }),
    }
}

fn check_cut_level(n: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "cut_level",
            reason: "cut level must be at least 1".into(),
        });
    }
    Ok(())
}

/// `||v^i||_q / (N^{1/2} ||A^s v^i||)` with `s = 1/2 - 1/q`; `None` when
/// `v^i = 0`.
pub fn piece_sobolev_ratio(
    u: &SpectralField,
    component: usize,
    n: u32,
    q: f64,
) -> Result<Option<f64>> {
    PartitionCheck::PieceSobolev { component, q }.ratio(u, n)
}

/// `||v_N||_q / (N^{1/2} ||v_N||^{2/q} ||A^{1/2} v_N||^{1-2/q})`; `None`
/// when `v_N = 0`.
pub fn interpolation_ratio(u: &SpectralField, n: u32, q: f64) -> Result<Option<f64>> {
    PartitionCheck::LowModeInterpolation { q }.ratio(u, n)
}

/// Running maximum with its position and the count of defined ratios.
#[derive(Debug, Clone, Copy)]
struct MaxAcc {
    max: f64,
    argmax: usize,
    used: usize,
}

impl MaxAcc {
    const EMPTY: Self = Self {
        max: 0.0,
        argmax: 0,
        used: 0,
    };

    fn one(i: usize, r: Option<f64>) -> Self {
        match r {
            Some(max) => Self {
                max,
                argmax: i,
                used: 1,
            },
            None => Self::EMPTY,
        }
    }

    fn merge(self, other: Self) -> Self {
        let used = self.used + other.used;
        // ties resolve to the lower sample index so the result is order-free
        let pick_other = other.used > 0
            && (self.used == 0
                || other.max > self.max
                || (other.max == self.max && other.argmax < self.argmax));
        if pick_other {
            Self { used, ..other }
        } else {
            Self { used, ..self }
        }
    }
}

/// Samples `samples` random scalars on the `dim`-torus at `m` modes.
pub fn verify_fractional_embedding(
    dim: usize,
    q: f64,
    samples: usize,
    seed: u64,
    m: usize,
) -> Result<InequalityReport> {
    let s = embedding_exponent(dim, q)?;
    if dim > 3 {
        return Err(Error::InvalidParameter {
            name: "dim",
            reason: format!("dimension must be 2 or 3, got {dim}"),
        });
    }
    check_samples(samples)?;
    check_modes(m)?;
    let acc = (0..samples)
        .into_par_iter()
        .map(|i| {
            let (a, field_seed) = sample_params(seed, i);
            let h = random_scalar_coefficients(dim, m, a, field_seed);
            Ok::<_, Error>(MaxAcc::one(i, fractional_embedding_ratio(dim, m, &h, q)?))
        })
        .try_reduce(|| MaxAcc::EMPTY, |x, y| Ok(x.merge(y)))?;
    Ok(InequalityReport {
        id: InequalityId::FractionalEmbedding,
        params: InequalityParams {
            dim,
            s,
            q,
            cut_level: None,
            component: None,
            modes: m,
        },
        samples,
        used: acc.used,
        max_ratio: acc.max,
        argmax: acc.argmax,
    })
}

/// One partition inequality to evaluate on every sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PartitionCheck {
    PieceSobolev { component: usize, q: f64 },
    LowModeInterpolation { q: f64 },
}

impl PartitionCheck {
    /// Checks the component index and the exponent range.
    pub fn validate(&self) -> Result<()> {
        match *self {
            PartitionCheck::PieceSobolev { component, q } => {
                check_component(component)?;
                piece_s_from_exponent(q)?;
            }
            PartitionCheck::LowModeInterpolation { q } => check_interpolation_q(q)?,
        }
        Ok(())
    }

    fn q(&self) -> f64 {
        match *self {
            PartitionCheck::PieceSobolev { q, .. } | PartitionCheck::LowModeInterpolation { q } => {
                q
            }
        }
    }

    /// The part of `u` on the left side: `v^i` or `v_N`.
    fn piece(&self, u: &SpectralField, n: u32) -> SpectralField {
        match *self {
            PartitionCheck::PieceSobolev { component, .. } => {
                let label = check_component(component).expect("validated component");
                let part = ModePartition::new(n);
                u.masked(|k| part.label(k) == label)
            }
            PartitionCheck::LowModeInterpolation { .. } => u.masked(|k| !in_genuine3d_band(k, n)),
        }
    }

    /// Right side without the constant; zero when `v = 0`.
    fn rhs(&self, v: &SpectralField, n: u32) -> Result<f64> {
        let root_n = (n as f64).sqrt();
        match *self {
            PartitionCheck::PieceSobolev { q, .. } => Ok(root_n * sobolev_norm(v, 0.5 - 1.0 / q)?),
            PartitionCheck::LowModeInterpolation { q } => {
                let l2 = v.l2_norm();
                if l2 == 0.0 {
                    return Ok(0.0);
                }
                let h1 = sobolev_norm(v, 0.5)?;
                Ok(root_n * l2.powf(2.0 / q) * h1.powf(1.0 - 2.0 / q))
            }
        }
    }

    fn ratio(&self, u: &SpectralField, n: u32) -> Result<Option<f64>> {
        self.validate()?;
        check_cut_level(n)?;
        let v = self.piece(u, n);
        let rhs = self.rhs(&v, n)?;
        if rhs == 0.0 {
            return Ok(None);
        }
        Ok(Some(lq_norm(&v, self.q())? / rhs))
    }

    fn params(&self, n: u32, m: usize) -> (InequalityId, InequalityParams) {
        let base = InequalityParams {
            dim: 3,
            s: 0.0,
            q: 0.0,
            cut_level: Some(n),
            component: None,
            modes: m,
        };
        match *self {
            PartitionCheck::PieceSobolev { component, q } => (
                InequalityId::PieceSobolev,
                InequalityParams {
                    s: 0.5 - 1.0 / q,
                    q,
                    component: Some(component),
                    ..base
                },
            ),
            PartitionCheck::LowModeInterpolation { q } => (
                InequalityId::LowModeInterpolation,
                InequalityParams { s: 0.5, q, ..base },
            ),
        }
    }
}

/// Evaluates every check at every cut level on the same random
/// divergence-free samples. Reports come out check-major, cut-minor.
pub fn verify_partition(
    checks: &[PartitionCheck],
    cut_levels: &[u32],
    samples: usize,
    seed: u64,
    m: usize,
) -> Result<Vec<InequalityReport>> {
    for c in checks {
        c.validate()?;
    }
    if cut_levels.is_empty() {
        return Err(Error::InvalidParameter {
            name: "cut_levels",
            reason: "at least one cut level is required".into(),
        });
    }
    for &n in cut_levels {
        check_cut_level(n)?;
    }
    check_samples(samples)?;
    check_modes(m)?;
    let grid = GridSpec::new(m, 1.0)?;
    let slots = checks.len() * cut_levels.len();
    let accs = (0..samples)
        .into_par_iter()
        .map(|i| {
            let (a, field_seed) = sample_params(seed, i);
            let u = random_divfree_field(grid, a, field_seed);
            let mut out = Vec::with_capacity(slots);
            for c in checks {
                let pieces: Vec<SpectralField> =
                    cut_levels.iter().map(|&n| c.piece(&u, n)).collect();
                let refs: Vec<&SpectralField> = pieces.iter().collect();
                let lhs = lq_norm_many(&refs, c.q())?;
                for ((v, &n), l) in pieces.iter().zip(cut_levels).zip(lhs) {
                    let rhs = c.rhs(v, n)?;
                    out.push(MaxAcc::one(i, (rhs > 0.0).then(|| l / rhs)));
                }
            }
            Ok::<_, Error>(out)
        })
        .try_reduce(
            || vec![MaxAcc::EMPTY; slots],
            |x, y| Ok(x.into_iter().zip(y).map(|(a, b)| a.merge(b)).collect()),
        )?;
    let mut reports = Vec::with_capacity(slots);
    let mut it = accs.into_iter();
    for c in checks {
        for &n in cut_levels {
            let acc = it.next().expect("one accumulator per slot");
            let (id, params) = c.params(n, m);
            reports.push(InequalityReport {
                id,
                params,
                samples,
                used: acc.used,
                max_ratio: acc.max,
                argmax: acc.argmax,
            });
        }
    }
    Ok(reports)
}

/// Largest `max_ratio(N) / max_ratio(N_first)` over reports sharing an id
/// and component, in the order given. Values above 1 indicate growth in
/// `N` beyond the `N^{1/2}` factor.
pub fn growth_over_cut_levels(reports: &[InequalityReport]) -> f64 {
    let first = match reports.first() {
        Some(r) if r.max_ratio > 0.0 => r.max_ratio,
        _ => return f64::NAN,
    };
    reports
        .iter()
        .map(|r| r.max_ratio / first)
        .fold(0.0, f64::max)
}
