//! Integrating-factor RK4 time stepping of the Navier-Stokes system in
//! spectral Galerkin form, and the coupled evolution of `v = P_N u` and
//! `w = Q_N u`.

use log::warn;
use rustfft::num_complex::Complex64;

use crate::decomposition::in_genuine3d_band;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::{norm2, stokes_eigenvalue, GridSpec};
use crate::operators::{nonlinear_term, stokes_power};
use crate::transform::inverse_unchecked;

/// Divergence tolerance, relative to `||u||`, for accepting a state.
const STATE_DIVERGENCE_TOLERANCE: f64 = 1e-8;

/// Growth of `||u||` over its initial value treated as blowup.
pub const BLOWUP_GROWTH: f64 = 1e6;

/// Velocity at time `t` after `step_count` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub u: SpectralField,
    pub t: f64,
    pub step_count: u64,
}

impl SolverState {
    /// Checks that `u` is divergence-free and `t` is a valid time.
    pub fn new(u: SpectralField, t: f64) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "t",
                reason: format!("time must be finite and nonnegative, got {t}"),
            });
        }
        let div = u.max_divergence();
        if div > STATE_DIVERGENCE_TOLERANCE * u.l2_norm() {
            return Err(Error::InvalidParameter {
                name: "u",
                reason: format!("velocity is not divergence-free (max |k.c| = {div:e})"),
            });
        }
        Ok(Self {
            u,
            t,
            step_count: 0,
        })
    }
}

/// Fixed step size, final time and the advisory CFL bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
    pub cfl_limit: f64,
}

impl TimeConfig {
    pub fn new(dt: f64, t_end: f64, cfl_limit: f64) -> Result<Self> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                })
            }
        };
        positive("dt", dt)?;
        positive("t_end", t_end)?;
        positive("cfl_limit", cfl_limit)?;
        if dt > t_end {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!("dt = {dt} exceeds t_end = {t_end}"),
            });
        }
        Ok(Self {
            dt,
            t_end,
            cfl_limit,
        })
    }

    /// Number of steps to reach `t_end`; the last one may be shorter.
    pub fn steps(&self) -> u64 {
        let n = self.t_end / self.dt;
        // absorb round-off in t_end / dt so 0.1 / 1e-3 gives 100 steps
        let r = n.round();
        if (n - r).abs() <= 1e-9 * r {
            r as u64
        } else {
            n.ceil() as u64
        }
    }

    /// Time after `n` steps.
    pub fn time_at(&self, n: u64) -> f64 {
        if n >= self.steps() {
            self.t_end
        } else {
            n as f64 * self.dt
        }
    }
}

/// Time-independent body force.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ForcingSpec {
    #[default]
    Zero,
    /// `(k, f^k)` pairs; partners are filled in by conjugation.
    Modes(Vec<([i64; 3], [Complex64; 3])>),
}

impl ForcingSpec {
    /// The forcing as a field on `grid`, or `None` for zero forcing.
    pub fn field(&self, grid: GridSpec) -> Result<Option<SpectralField>> {
        let modes = match self {
            ForcingSpec::Zero => return Ok(None),
            ForcingSpec::Modes(m) => m,
        };
        for &(k, c) in modes {
            if k == [0, 0, 0] && c.iter().any(|z| z.norm() != 0.0) {
                return Err(Error::InvalidParameter {
                    name: "forcing",
                    reason: "forcing must have zero mean".into(),
                });
            }
            if grid.is_nyquist(k) {
                return Err(Error::InvalidParameter {
                    name: "forcing",
                    reason: format!("wave vector {k:?} is a Nyquist mode"),
                });
            }
        }
        let f = SpectralField::from_modes(grid, modes)?;
        let div = f.max_divergence();
        if div > 1e-12 * f.l2_norm().max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidParameter {
                name: "forcing",
                reason: format!("forcing is not divergence-free (max |k.f| = {div:e})"),
            });
        }
        Ok(Some(f))
    }
}

/// `u = (sin 2 pi x cos 2 pi y, -cos 2 pi x sin 2 pi y, 0)` at `t = 0`.
pub fn init_taylor_green(grid: GridSpec) -> Result<SolverState> {
    if grid.modes() < 4 {
        return Err(Error::InvalidGrid(
            "Taylor-Green needs at least 4 modes per dimension".into(),
        ));
    }
    let q = Complex64::new(0.0, 0.25);
    let z = Complex64::default();
    let u = SpectralField::from_modes(grid, &[([1, 1, 0], [-q, q, z]), ([1, -1, 0], [-q, -q, z])])?;
    SolverState::new(u, 0.0)
}

/// One IFRK4 step of size `dt`, viscous factors precomputed.
#[derive(Debug, Clone)]
pub struct Integrator {
    grid: GridSpec,
    dt: f64,
    forcing: Option<SpectralField>,
    nonlinear: bool,
    full: Vec<f64>,
    half: Vec<f64>,
}

impl Integrator {
    pub fn new(grid: GridSpec, dt: f64, f: &ForcingSpec) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!("must be positive and finite, got {dt}"),
            });
        }
        let forcing = f.field(grid)?;
        let mut out = Self {
            grid,
            dt,
            forcing,
            nonlinear: true,
            full: Vec::new(),
            half: Vec::new(),
        };
        out.set_factors();
        Ok(out)
    }

    fn set_factors(&mut self) {
        let nu = self.grid.viscosity();
        let mut full = vec![0.0; self.grid.len()];
        let mut half = vec![0.0; self.grid.len()];
        self.grid.for_each_mode(|idx, k| {
            let rate = nu * stokes_eigenvalue(norm2(k));
            full[idx] = (-rate * self.dt).exp();
            half[idx] = (-rate * 0.5 * self.dt).exp();
        });
        self.full = full;
        self.half = half;
    }

    /// Diagnostic mode: the nonlinear term is dropped, leaving the exact
    /// viscous propagator plus forcing.
    pub fn without_nonlinearity(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    /// Same settings with a different step size.
    pub fn with_dt(&self, dt: f64) -> Self {
        let mut out = self.clone();
        out.dt = dt;
        out.set_factors();
        out
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn forcing(&self) -> Option<&SpectralField> {
        self.forcing.as_ref()
    }

    /// `-P(u . grad u) + f`.
    fn rhs(&self, u: &SpectralField) -> SpectralField {
        let mut out = if self.nonlinear {
            nonlinear_term(u).scaled(-1.0)
        } else {
            SpectralField::zeros(self.grid)
        };
        if let Some(f) = &self.forcing {
            add_scaled(&mut out, 1.0, f);
        }
        out
    }

    /// IFRK4 on a tuple of fields sharing one right-hand side.
    fn ifrk4(
        &self,
        x: &[SpectralField],
        rhs: impl Fn(&[SpectralField]) -> Vec<SpectralField>,
    ) -> Vec<SpectralField> {
        let h = self.dt;
        let a = rhs(x);
        let u2: Vec<_> = x
            .iter()
            .zip(&a)
            .map(|(xi, ai)| {
                let mut y = xi.clone();
                add_scaled(&mut y, 0.5 * h, ai);
                apply(&self.half, &y)
            })
            .collect();
        let b = rhs(&u2);
        let ex_half: Vec<_> = x.iter().map(|xi| apply(&self.half, xi)).collect();
        let u3: Vec<_> = ex_half
            .iter()
            .zip(&b)
            .map(|(e, bi)| {
                let mut y = e.clone();
                add_scaled(&mut y, 0.5 * h, bi);
                y
            })
            .collect();
        let c = rhs(&u3);
        let ex_full: Vec<_> = x.iter().map(|xi| apply(&self.full, xi)).collect();
        let u4: Vec<_> = ex_full
            .iter()
            .zip(&c)
            .map(|(e, ci)| {
                let mut y = e.clone();
                add_scaled(&mut y, h, &apply(&self.half, ci));
                y
            })
            .collect();
        let d = rhs(&u4);
        (0..x.len())
            .map(|i| {
                let mut bc = b[i].clone();
                add_scaled(&mut bc, 1.0, &c[i]);
                let mut y = ex_full[i].clone();
                add_scaled(&mut y, h / 6.0, &apply(&self.full, &a[i]));
                add_scaled(&mut y, h / 3.0, &apply(&self.half, &bc));
                add_scaled(&mut y, h / 6.0, &d[i]);
                y
            })
            .collect()
    }

    /// Advances `state` by `dt`.
    pub fn step(&self, state: &SolverState) -> Result<SolverState> {
        self.grid.check_same(state.u.grid())?;
        let mut out = self.ifrk4(std::slice::from_ref(&state.u), |x| vec![self.rhs(&x[0])]);
        let u = out.pop().expect("one field in, one out");
        let t = state.t + self.dt;
        let step_count = state.step_count + 1;
        if !u.is_finite() {
            return Err(Error::Blowup {
                time: t,
                step: step_count,
                reason: "non-finite coefficient".into(),
            });
        }
        Ok(SolverState { u, t, step_count })
    }

    /// Advances `v` (supported off the `Q_N` band) and `w` (on it) by `dt`.
    /// Each stage evaluates the nonlinearity at `v + w` and splits it with
    /// `P_N` and `Q_N`.
    pub fn coupled_step(
        &self,
        v: &SpectralField,
        w: &SpectralField,
        n: u32,
    ) -> Result<(SpectralField, SpectralField)> {
        self.grid.check_same(v.grid())?;
        self.grid.check_same(w.grid())?;
        if !v.supported_in(|k| !in_genuine3d_band(k, n)) {
            return Err(Error::SupportViolation { band: "P_N" });
        }
        if !w.supported_in(|k| in_genuine3d_band(k, n)) {
            return Err(Error::SupportViolation { band: "Q_N" });
        }
        let mut out = self.ifrk4(&[v.clone(), w.clone()], |x| {
            let mut u = x[0].clone();
            add_scaled(&mut u, 1.0, &x[1]);
            let r = self.rhs(&u);
            vec![
                r.masked(|k| !in_genuine3d_band(k, n)),
                r.masked(|k| in_genuine3d_band(k, n)),
            ]
        });
        let w = out.pop().expect("two fields");
        let v = out.pop().expect("two fields");
        if !v.is_finite() || !w.is_finite() {
            return Err(Error::Blowup {
                time: self.dt,
                step: 1,
                reason: "non-finite coefficient in coupled step".into(),
            });
        }
        Ok((v, w))
    }
}

/// `x += a * y` on matching grids.
fn add_scaled(x: &mut SpectralField, a: f64, y: &SpectralField) {
    for (xc, yc) in x.components_mut().iter_mut().zip(y.components()) {
        for (p, q) in xc.iter_mut().zip(yc) {
            *p += q * a;
        }
    }
}

/// Per-mode multiplication by precomputed factors.
fn apply(factors: &[f64], x: &SpectralField) -> SpectralField {
    let mut out = x.clone();
    for c in out.components_mut().iter_mut() {
        for (z, &e) in c.iter_mut().zip(factors) {
            *z *= e;
        }
    }
    out
}

/// A single step with a freshly built integrator.
pub fn step(state: &SolverState, cfg: &TimeConfig, f: &ForcingSpec) -> Result<SolverState> {
    Integrator::new(*state.u.grid(), cfg.dt, f)?.step(state)
}

/// Coupled step with a freshly built integrator.
pub fn coupled_step(
    v: &SpectralField,
    w: &SpectralField,
    n: u32,
    cfg: &TimeConfig,
    f: &ForcingSpec,
) -> Result<(SpectralField, SpectralField)> {
    Integrator::new(*v.grid(), cfg.dt, f)?.coupled_step(v, w, n)
}

/// Callback invoked at `t = 0` and after every step.
pub trait Observer {
    fn observe(&mut self, state: &SolverState) -> Result<()>;
}

impl<F: FnMut(&SolverState) -> Result<()>> Observer for F {
    fn observe(&mut self, state: &SolverState) -> Result<()> {
        self(state)
    }
}

/// How a run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Completed,
    Blowup {
        time: f64,
        step: u64,
        reason: String,
    },
}

/// Summary of a run. On blowup `state` is the last finite state and the
/// energy terms cover the interval up to it.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub outcome: RunOutcome,
    pub state: SolverState,
    pub steps_taken: u64,
    /// `1/2 ||u||^2` at the start and at the last accepted state.
    pub energy_initial: f64,
    pub energy_final: f64,
    /// `nu int ||A^{1/2} u||^2 dt`, trapezoidal.
    pub dissipation: f64,
    /// `int (f, u) dt`, trapezoidal.
    pub forcing_work: f64,
    /// Steps where `max|u| dt M` exceeded the CFL limit.
    pub cfl_violations: u64,
}

impl RunReport {
    /// `E(T) - E(0) + nu int ||A^{1/2}u||^2 - int (f, u)` with `E = 1/2 ||u||^2`.
    pub fn energy_residual(&self) -> f64 {
        self.energy_final - self.energy_initial + self.dissipation - self.forcing_work
    }

    /// Residual divided by the largest term of the balance.
    pub fn relative_energy_residual(&self) -> f64 {
        let scale = [
            self.energy_initial,
            self.energy_final,
            self.dissipation,
            self.forcing_work.abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        if scale == 0.0 {
            self.energy_residual().abs()
        } else {
            self.energy_residual().abs() / scale
        }
    }

    pub fn completed(&self) -> bool {
        self.outcome == RunOutcome::Completed
    }
}

fn cfl_number(u: &SpectralField, dt: f64) -> f64 {
    let p = inverse_unchecked(u);
    let max_sq = (0..u.grid().len())
        .map(|i| p.samples().iter().map(|c| c[i] * c[i]).sum::<f64>())
        .fold(0.0, f64::max);
    max_sq.sqrt() * dt * u.grid().modes() as f64
}

/// Integrates from `state` to `cfg.t_end`.
pub fn run(
    state: SolverState,
    cfg: &TimeConfig,
    f: &ForcingSpec,
    observers: &mut [&mut dyn Observer],
) -> Result<RunReport> {
    let integrator = Integrator::new(*state.u.grid(), cfg.dt, f)?;
    run_with(&integrator, state, cfg, observers)
}

/// [`run`] with a caller-built integrator, e.g. one without the
/// nonlinearity. `cfg.dt` must match the integrator.
pub fn run_with(
    integrator: &Integrator,
    state: SolverState,
    cfg: &TimeConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<RunReport> {
    if integrator.dt() != cfg.dt {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!(
                "integrator step {} differs from configured {}",
                integrator.dt(),
                cfg.dt
            ),
        });
    }
    integrator.grid().check_same(state.u.grid())?;
    let nu = integrator.grid().viscosity();
    let forcing = integrator.forcing().cloned();
    let balance_terms = |u: &SpectralField| -> Result<(f64, f64)> {
        let y = stokes_power(u, 0.5)?.l2_norm_sq();
        let fu = match &forcing {
            Some(f) => f.inner(u)?,
            None => 0.0,
        };
        Ok((nu * y, fu))
    };

    let start_t = state.t;
    let initial_norm = state.u.l2_norm();
    let energy_initial = state.u.kinetic_energy();
    let (mut prev_diss, mut prev_work) = balance_terms(&state.u)?;
    let mut dissipation = 0.0;
    let mut forcing_work = 0.0;
    let mut cfl_violations = 0;
    let mut outcome = RunOutcome::Completed;

    for obs in observers.iter_mut() {
        obs.observe(&state)?;
    }
    let mut state = state;
    let total = cfg.steps();
    let mut short: Option<Integrator> = None;
    for n in 1..=total {
        let target = start_t + cfg.time_at(n);
        let h = target - state.t;
        let stepper = if (h - cfg.dt).abs() <= 1e-12 * cfg.dt {
            integrator
        } else {
            short.get_or_insert_with(|| integrator.with_dt(h))
        };
        let mut next = match stepper.step(&state) {
            Ok(s) => s,
            Err(Error::Blowup { time, step, reason }) => {
                outcome = RunOutcome::Blowup { time, step, reason };
                break;
            }
            Err(e) => return Err(e),
        };
        next.t = target;
        let norm = next.u.l2_norm();
        if initial_norm > 0.0 && norm > BLOWUP_GROWTH * initial_norm {
            outcome = RunOutcome::Blowup {
                time: next.t,
                step: next.step_count,
                reason: format!("||u|| grew from {initial_norm:e} to {norm:e}"),
            };
            break;
        }
        let cfl = cfl_number(&next.u, h);
        if cfl > cfg.cfl_limit {
            if cfl_violations == 0 {
                warn!(
                    "CFL number {cfl:.3} exceeds limit {} at t = {}",
                    cfg.cfl_limit, next.t
                );
            }
            cfl_violations += 1;
        }
        let (diss, work) = balance_terms(&next.u)?;
        dissipation += 0.5 * h * (prev_diss + diss);
        forcing_work += 0.5 * h * (prev_work + work);
        prev_diss = diss;
        prev_work = work;
        state = next;
        for obs in observers.iter_mut() {
            obs.observe(&state)?;
        }
    }
    if cfl_violations > 1 {
        warn!("CFL limit exceeded on {cfl_violations} steps");
    }
    Ok(RunReport {
        outcome,
        energy_final: state.u.kinetic_energy(),
        steps_taken: state.step_count,
        state,
        energy_initial,
        dissipation,
        forcing_work,
        cfl_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::genuine3d_cut;
    use std::f64::consts::PI;

    fn grid(m: usize, nu: f64) -> GridSpec {
        GridSpec::new(m, nu).unwrap()
    }

    #[test]
    fn time_config_validation() {
        assert!(TimeConfig::new(0.0, 1.0, 1.0).is_err());
        assert!(TimeConfig::new(-1e-3, 1.0, 1.0).is_err());
        assert!(TimeConfig::new(2.0, 1.0, 1.0).is_err());
        assert!(TimeConfig::new(1e-3, 1.0, 0.0).is_err());
        let cfg = TimeConfig::new(1e-3, 0.1, 1.0).unwrap();
        assert_eq!(cfg.steps(), 100);
        assert_eq!(cfg.time_at(100), 0.1);
        let odd = TimeConfig::new(0.3, 1.0, 1.0).unwrap();
        assert_eq!(odd.steps(), 4);
        assert_eq!(odd.time_at(4), 1.0);
    }

    #[test]
    fn taylor_green_initial_state() {
        let s = init_taylor_green(grid(16, 0.01)).unwrap();
        assert_eq!(s.u.max_divergence(), 0.0);
        assert!((s.u.kinetic_energy() - 0.25).abs() < 1e-15);
        assert_eq!(genuine3d_cut(&s.u, 1).l2_norm(), 0.0);
        assert_eq!(s.t, 0.0);
    }

    #[test]
    fn linear_mode_decays_exactly() {
        let g = grid(16, 0.05);
        let c = Complex64::new(0.3, -0.2);
        let z = Complex64::default();
        let u = SpectralField::from_modes(g, &[([1, 2, 0], [c * 2.0, -c, z])]).unwrap();
        let state = SolverState::new(u.clone(), 0.0).unwrap();
        let dt = 0.01;
        let integ = Integrator::new(g, dt, &ForcingSpec::Zero)
            .unwrap()
            .without_nonlinearity();
        let next = integ.step(&state).unwrap();
        let factor = (-0.05 * 4.0 * PI * PI * 5.0 * dt).exp();
        let got = next.u.coeff([1, 2, 0]).unwrap();
        let want = u.coeff([1, 2, 0]).unwrap();
        for j in 0..3 {
            assert!((got[j] - want[j] * factor).norm() < 1e-16);
        }
    }

    #[test]
    fn zero_state_stays_zero() {
        let g = grid(8, 0.1);
        let cfg = TimeConfig::new(0.01, 0.05, 1.0).unwrap();
        let state = SolverState::new(SpectralField::zeros(g), 0.0).unwrap();
        let report = run(state, &cfg, &ForcingSpec::Zero, &mut []).unwrap();
        assert!(report.completed());
        assert_eq!(report.state.u.l2_norm(), 0.0);
        assert_eq!(report.steps_taken, 5);
    }

    #[test]
    fn observers_see_increasing_times() {
        let g = grid(8, 0.1);
        let cfg = TimeConfig::new(0.02, 0.05, 1.0).unwrap();
        let state = init_taylor_green(g).unwrap();
        let mut times = Vec::new();
        let mut obs = |s: &SolverState| {
            times.push(s.t);
            Ok(())
        };
        run(state, &cfg, &ForcingSpec::Zero, &mut [&mut obs]).unwrap();
        assert_eq!(times.len(), 4);
        assert!(times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*times.last().unwrap(), 0.05);
    }

    #[test]
    fn forcing_is_validated() {
        let g = grid(8, 0.1);
        let one = Complex64::new(1.0, 0.0);
        let z = Complex64::default();
        let bad = ForcingSpec::Modes(vec![([1, 0, 0], [one, z, z])]);
        assert!(bad.field(g).is_err());
        let nyq = ForcingSpec::Modes(vec![([4, 0, 0], [z, one, z])]);
        assert!(nyq.field(g).is_err());
        let good = ForcingSpec::Modes(vec![([1, 0, 0], [z, one, z])]);
        assert!(good.field(g).unwrap().is_some());
        assert!(ForcingSpec::Zero.field(g).unwrap().is_none());
    }

    #[test]
    fn steady_forced_linear_balance() {
        // u' = -nu lambda u + f with u(0) = 0 has u = f (1 - e^{-nu lambda t}) / (nu lambda)
        let g = grid(8, 0.1);
        let z = Complex64::default();
        let amp = Complex64::new(0.0, 0.5);
        let f = ForcingSpec::Modes(vec![([0, 1, 0], [amp, z, z])]);
        let integ = Integrator::new(g, 0.01, &f).unwrap().without_nonlinearity();
        let mut state = SolverState::new(SpectralField::zeros(g), 0.0).unwrap();
        for _ in 0..10 {
            state = integ.step(&state).unwrap();
        }
        let rate = 0.1 * 4.0 * PI * PI;
        let want = amp * (1.0 - (-rate * 0.1).exp()) / rate;
        let got = state.u.coeff([0, 1, 0]).unwrap()[0];
        assert!((got - want).norm() < 1e-9 * want.norm());
    }

    #[test]
    fn coupled_step_rejects_bad_supports() {
        let g = grid(8, 0.1);
        let s = init_taylor_green(g).unwrap();
        let cfg = TimeConfig::new(0.01, 0.1, 1.0).unwrap();
        let zero = SpectralField::zeros(g);
        assert_eq!(
            coupled_step(&zero, &s.u, 1, &cfg, &ForcingSpec::Zero).unwrap_err(),
            Error::SupportViolation { band: "Q_N" }
        );
        let one = Complex64::new(1.0, 0.0);
        let z = Complex64::default();
        let high = SpectralField::from_modes(g, &[([2, 2, 2], [one, -one, z])]).unwrap();
        assert_eq!(
            coupled_step(&high, &zero, 1, &cfg, &ForcingSpec::Zero).unwrap_err(),
            Error::SupportViolation { band: "P_N" }
        );
    }
}
