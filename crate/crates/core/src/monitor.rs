//! Observers that turn a run into regularity diagnostics: mixed Serrin
//! norms of `w_N` over a list of cut levels, the series
//! `Y(t) = ||A^{1/2} u||^2`, and weighted spectrum maxima of `w_N`.
//!
//! The limit over `N` is replaced by the minimum over the supplied cut
//! levels, and the limit in time by a trailing-window minimum. Both are
//! proxies; nothing here certifies continuum regularity.

use std::collections::VecDeque;
use std::io::Write;

use crate::decomposition::genuine3d_cut;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::norms::{lq_norm_gradient, lq_norm_many, sobolev_norm};
use crate::operators::gradient;
use crate::serrin::{Scaling, SerrinAccumulator};
use crate::solver::{Observer, SolverState};
use crate::spectrum::{energy_spectrum, sup_weighted_spectrum};

/// One mixed norm `L^r(0,T; L^q)` of `w_N` or of `grad w_N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SerrinSpec {
    pub q: f64,
    pub r: f64,
    pub gradient_form: bool,
}

impl SerrinSpec {
    pub fn velocity(q: f64, r: f64) -> Self {
        Self {
            q,
            r,
            gradient_form: false,
        }
    }

    pub fn gradient(q: f64, r: f64) -> Self {
        Self {
            q,
            r,
            gradient_form: true,
        }
    }

    pub fn form(&self) -> &'static str {
        if self.gradient_form {
            "gradient"
        } else {
            "velocity"
        }
    }

    /// Whether `(q, r)` satisfies the scaling identity of its form.
    pub fn scaling_matches(&self) -> bool {
        let want = if self.gradient_form {
            Scaling::Gradient
        } else {
            Scaling::Velocity
        };
        Scaling::of(self.q, self.r) == want
    }
}

/// One time sample of one `(spec, N)` row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SerrinSample {
    pub time: f64,
    pub cut_level: u32,
    pub spec: usize,
    /// `||w_N||_q` or `||grad w_N||_q`.
    pub lq: f64,
    /// `||w_N||` or `||grad w_N||` in `L^2`.
    pub l2: f64,
    /// Mixed norm accumulated up to this sample.
    pub running: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YSample {
    pub time: f64,
    /// `||A^{1/2} u||^2`.
    pub y: f64,
    /// `||A^s u||` for `s = 1/6, 1/3, 2/3` when the extension is on.
    pub fractional: Option<[f64; 3]>,
}

/// Finalized (or, after a blowup, running) mixed norm of one row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SerrinRow {
    pub spec: SerrinSpec,
    pub cut_level: u32,
    pub value: f64,
}

/// Minimum over the cut levels of the finalized norms of one spec.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiminfProxy {
    pub spec: SerrinSpec,
    pub value: f64,
    pub argmin_cut_level: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub rows: Vec<SerrinRow>,
    pub liminf: Vec<LiminfProxy>,
    pub samples: Vec<SerrinSample>,
    pub y_series: Vec<YSample>,
    /// False when the run stopped early and the values are partial.
    pub completed: bool,
}

pub const SERRIN_SERIES_HEADER: &str = "time,cut_level,q,r,form,lq,l2,running";
pub const SERRIN_SUMMARY_HEADER: &str = "cut_level,q,r,form,scaling_matches,value";
pub const LIMINF_HEADER: &str = "q,r,form,scaling_matches,liminf_proxy,argmin_cut_level";
pub const Y_SERIES_HEADER: &str = "time,y,a_1_6,a_1_3,a_2_3";

impl CriterionReport {
    pub fn write_series_csv<W: Write>(&self, specs: &[SerrinSpec], mut w: W) -> Result<()> {
        writeln!(w, "{SERRIN_SERIES_HEADER}")?;
        for s in &self.samples {
            let spec = specs[s.spec];
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                s.time,
                s.cut_level,
                spec.q,
                spec.r,
                spec.form(),
                s.lq,
                s.l2,
                s.running
            )?;
        }
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{SERRIN_SUMMARY_HEADER}")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                row.cut_level,
                row.spec.q,
                row.spec.r,
                row.spec.form(),
                row.spec.scaling_matches(),
                row.value
            )?;
        }
        Ok(())
    }

    pub fn write_liminf_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{LIMINF_HEADER}")?;
        for l in &self.liminf {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                l.spec.q,
                l.spec.r,
                l.spec.form(),
                l.spec.scaling_matches(),
                l.value,
                l.argmin_cut_level
            )?;
        }
        Ok(())
    }

    /// Missing fractional columns are left empty.
    pub fn write_y_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{Y_SERIES_HEADER}")?;
        for s in &self.y_series {
            match s.fractional {
                Some([a, b, c]) => writeln!(w, "{},{},{},{},{}", s.time, s.y, a, b, c)?,
                None => writeln!(w, "{},{},,,", s.time, s.y)?,
            }
        }
        Ok(())
    }
}

fn check_cut_levels(cut_levels: &[u32]) -> Result<()> {
    if cut_levels.is_empty() {
        return Err(Error::InvalidParameter {
            name: "cut_levels",
            reason: "at least one cut level is required".into(),
        });
    }
    if cut_levels[0] == 0 || cut_levels.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::InvalidParameter {
            name: "cut_levels",
            reason: format!("must be positive and strictly increasing, got {cut_levels:?}"),
        });
    }
    Ok(())
}

/// Serrin norms of `w_N` for every spec and cut level, plus the `Y` series.
#[derive(Debug, Clone)]
pub struct SerrinMonitor {
    cut_levels: Vec<u32>,
    specs: Vec<SerrinSpec>,
    /// `accs[spec][n]`.
    accs: Vec<Vec<SerrinAccumulator>>,
    fractional: bool,
    stride: u64,
    samples: Vec<SerrinSample>,
    y_series: Vec<YSample>,
}

impl SerrinMonitor {
    pub fn new(cut_levels: &[u32], specs: &[SerrinSpec]) -> Result<Self> {
        check_cut_levels(cut_levels)?;
        if specs.is_empty() {
            return Err(Error::InvalidParameter {
                name: "specs",
                reason: "at least one (q, r) pair is required".into(),
            });
        }
        let accs = specs
            .iter()
            .map(|s| {
                cut_levels
                    .iter()
                    .map(|_| SerrinAccumulator::new(s.q, s.r))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for s in specs {
            if !s.scaling_matches() {
                log::info!(
                    "({}, {}) does not satisfy the {} scaling identity",
                    s.q,
                    s.r,
                    s.form()
                );
            }
        }
        Ok(Self {
            cut_levels: cut_levels.to_vec(),
            specs: specs.to_vec(),
            accs,
            fractional: false,
            stride: 1,
            samples: Vec::new(),
            y_series: Vec::new(),
        })
    }

    /// Also record `||A^s u||` for `s = 1/6, 1/3, 2/3`.
    pub fn with_fractional_series(mut self) -> Self {
        self.fractional = true;
        self
    }

    /// Sample only states whose step count is a multiple of `stride`.
    pub fn with_stride(mut self, stride: u64) -> Result<Self> {
        if stride == 0 {
            return Err(Error::InvalidParameter {
                name: "stride",
                reason: "must be at least 1".into(),
            });
        }
        self.stride = stride;
        Ok(self)
    }

    pub fn cut_levels(&self) -> &[u32] {
        &self.cut_levels
    }

    pub fn specs(&self) -> &[SerrinSpec] {
        &self.specs
    }

    /// Adds one snapshot `u` at time `t`, regardless of the stride.
    pub fn record(&mut self, t: f64, u: &SpectralField) -> Result<()> {
        let cuts: Vec<SpectralField> = self
            .cut_levels
            .iter()
            .map(|&n| genuine3d_cut(u, n))
            .collect();
        let empty: Vec<bool> = cuts.iter().map(|w| w.max_abs() == 0.0).collect();
        for (si, spec) in self.specs.iter().enumerate() {
            let (lq, l2): (Vec<f64>, Vec<f64>) = if spec.gradient_form {
                let mut lq = Vec::with_capacity(cuts.len());
                let mut l2 = Vec::with_capacity(cuts.len());
                for (w, &e) in cuts.iter().zip(&empty) {
                    if e {
                        lq.push(0.0);
                        l2.push(0.0);
                    } else {
                        let g = gradient(w);
                        lq.push(lq_norm_gradient(&g, spec.q)?);
                        l2.push(g.l2_norm_sq().sqrt());
                    }
                }
                (lq, l2)
            } else {
                let live: Vec<&SpectralField> = cuts
                    .iter()
                    .zip(&empty)
                    .filter(|(_, &e)| !e)
                    .map(|(w, _)| w)
                    .collect();
                let mut norms = lq_norm_many(&live, spec.q)?.into_iter();
                let lq = empty
                    .iter()
                    .map(|&e| if e { 0.0 } else { norms.next().expect("one norm per live cut") })
                    .collect();
                (lq, cuts.iter().map(|w| w.l2_norm()).collect())
            };
            for (ni, &n) in self.cut_levels.iter().enumerate() {
                let acc = &mut self.accs[si][ni];
                acc.push(t, lq[ni])?;
                self.samples.push(SerrinSample {
                    time: t,
                    cut_level: n,
                    spec: si,
                    lq: lq[ni],
                    l2: l2[ni],
                    running: acc.value(),
                });
            }
        }
        let y = sobolev_norm(u, 0.5)?.powi(2);
        let fractional = if self.fractional {
            Some([
                sobolev_norm(u, 1.0 / 6.0)?,
                sobolev_norm(u, 1.0 / 3.0)?,
                sobolev_norm(u, 2.0 / 3.0)?,
            ])
        } else {
            None
        };
        self.y_series.push(YSample {
            time: t,
            y,
            fractional,
        });
        Ok(())
    }

    /// Current values; `completed` marks whether the run reached its end.
    pub fn report(&self, completed: bool) -> CriterionReport {
        let mut rows = Vec::new();
        let mut liminf = Vec::new();
        for (si, spec) in self.specs.iter().enumerate() {
            let mut best = LiminfProxy {
                spec: *spec,
                value: f64::INFINITY,
                argmin_cut_level: self.cut_levels[0],
            };
            for (ni, &n) in self.cut_levels.iter().enumerate() {
                let value = self.accs[si][ni].value();
                rows.push(SerrinRow {
                    spec: *spec,
                    cut_level: n,
                    value,
                });
                if value < best.value {
                    best.value = value;
                    best.argmin_cut_level = n;
                }
            }
            liminf.push(best);
        }
        CriterionReport {
            rows,
            liminf,
            samples: self.samples.clone(),
            y_series: self.y_series.clone(),
            completed,
        }
    }
}

impl Observer for SerrinMonitor {
    fn observe(&mut self, state: &SolverState) -> Result<()> {
        if state.step_count % self.stride == 0 {
            self.record(state.t, &state.u)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSample {
    pub time: f64,
    /// `sup_kappa kappa^delta E(kappa)` of `w_N`, one per delta.
    pub weights: Vec<f64>,
    /// Minimum of `weights` over the trailing window, one per delta.
    pub window_min: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub cut_level: u32,
    pub deltas: Vec<f64>,
    pub window: usize,
    pub series: Vec<WeightSample>,
}

pub const SPECTRUM_WEIGHT_HEADER: &str = "time,cut_level,delta,weight,window_min";

impl SpectrumReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{SPECTRUM_WEIGHT_HEADER}")?;
        for s in &self.series {
            for (i, d) in self.deltas.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    s.time, self.cut_level, d, s.weights[i], s.window_min[i]
                )?;
            }
        }
        Ok(())
    }
}

/// Weighted spectrum maxima of `w_N` with a trailing-window minimum.
#[derive(Debug, Clone)]
pub struct SpectrumWeightTracker {
    cut_level: u32,
    deltas: Vec<f64>,
    window: usize,
    stride: u64,
    recent: VecDeque<Vec<f64>>,
    series: Vec<WeightSample>,
}

impl SpectrumWeightTracker {
    pub fn new(deltas: &[f64], cut_level: u32, window: usize) -> Result<Self> {
        if deltas.is_empty() {
            return Err(Error::InvalidParameter {
                name: "deltas",
                reason: "at least one exponent is required".into(),
            });
        }
        for &d in deltas {
            if d.is_nan() || d <= 2.0 || d.is_infinite() {
                return Err(Error::ExponentOutOfRange {
                    value: d,
                    range: "(2, inf)",
                });
            }
        }
        if window == 0 {
            return Err(Error::InvalidParameter {
                name: "window",
                reason: "must be at least 1".into(),
            });
        }
        Ok(Self {
            cut_level,
            deltas: deltas.to_vec(),
            window,
            stride: 1,
            recent: VecDeque::with_capacity(window),
            series: Vec::new(),
        })
    }

    pub fn with_stride(mut self, stride: u64) -> Result<Self> {
        if stride == 0 {
            return Err(Error::InvalidParameter {
                name: "stride",
                reason: "must be at least 1".into(),
            });
        }
        self.stride = stride;
        Ok(self)
    }

    pub fn record(&mut self, t: f64, u: &SpectralField) -> Result<()> {
        let spec = energy_spectrum(&genuine3d_cut(u, self.cut_level));
        let weights = self
            .deltas
            .iter()
            .map(|&d| sup_weighted_spectrum(&spec, d))
            .collect::<Result<Vec<f64>>>()?;
        if self.recent.len() == self.window {
            self.recent.pop_front();
        }
        self.recent.push_back(weights.clone());
        let window_min = (0..self.deltas.len())
            .map(|i| {
                self.recent
                    .iter()
                    .map(|w| w[i])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        self.series.push(WeightSample {
            time: t,
            weights,
            window_min,
        });
        Ok(())
    }

    pub fn report(&self) -> SpectrumReport {
        SpectrumReport {
            cut_level: self.cut_level,
            deltas: self.deltas.clone(),
            window: self.window,
            series: self.series.clone(),
        }
    }
}

impl Observer for SpectrumWeightTracker {
    fn observe(&mut self, state: &SolverState) -> Result<()> {
        if state.step_count % self.stride == 0 {
            self.record(state.t, &state.u)?;
        }
        Ok(())
    }
}
