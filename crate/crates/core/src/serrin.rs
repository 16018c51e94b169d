//! Running mixed space-time norms `||f||_{L^r(0,T; L^q)}`.

use crate::error::{Error, Result};

/// Which Serrin scaling, if any, a `(q, r)` pair satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scaling {
    /// `3/q + 2/r = 1`, the velocity form.
    Velocity,
    /// `3/q + 2/r = 2`, the gradient form.
    Gradient,
    Neither,
}

impl Scaling {
    pub fn of(q: f64, r: f64) -> Self {
        let sum = 3.0 / q + 2.0 / r;
        if (sum - 1.0).abs() <= 1e-12 {
            Scaling::Velocity
        } else if (sum - 2.0).abs() <= 1e-12 {
            Scaling::Gradient
        } else {
            Scaling::Neither
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Scaling::Velocity => "velocity",
            Scaling::Gradient => "gradient",
            Scaling::Neither => "none",
        }
    }
}

/// Accumulates `int value^r dt` (trapezoidal) or `sup value` for `r = inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct SerrinAccumulator {
    q: f64,
    r: f64,
    running_integral: f64,
    running_sup: f64,
    last: Option<(f64, f64)>,
    sample_times: Vec<f64>,
}

impl SerrinAccumulator {
    pub fn new(q: f64, r: f64) -> Result<Self> {
        if q.is_nan() || q <= 1.0 {
            return Err(Error::ExponentOutOfRange {
                value: q,
                range: "(1, inf]",
            });
        }
        if r.is_nan() || r < 1.0 {
            return Err(Error::ExponentOutOfRange {
                value: r,
                range: "[1, inf]",
            });
        }
        Ok(Self {
            q,
            r,
            running_integral: 0.0,
            running_sup: 0.0,
            last: None,
            sample_times: Vec::new(),
        })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn scaling(&self) -> Scaling {
        Scaling::of(self.q, self.r)
    }

    pub fn sample_times(&self) -> &[f64] {
        &self.sample_times
    }

    /// Adds the sample `value` at time `t`, which must exceed the previous one.
    pub fn accumulate(mut self, t: f64, value: f64) -> Result<Self> {
        self.push(t, value)?;
        Ok(self)
    }

    pub fn push(&mut self, t: f64, value: f64) -> Result<()> {
        if let Some((prev, _)) = self.last {
            if !(t > prev) {
                return Err(Error::NonMonotoneTime { previous: prev, t });
            }
        }
        if !(value >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "value",
                reason: format!("norm samples must be nonnegative, got {value}"),
            });
        }
        if self.r.is_infinite() {
            self.running_sup = self.running_sup.max(value);
            self.last = Some((t, value));
        } else {
            let powered = value.powf(self.r);
            if let Some((prev, prev_pow)) = self.last {
                self.running_integral += 0.5 * (t - prev) * (prev_pow + powered);
            }
            self.last = Some((t, powered));
        }
        self.sample_times.push(t);
        Ok(())
    }

    /// `(int value^r dt)^{1/r}` so far, or the running sup for `r = inf`.
    pub fn value(&self) -> f64 {
        if self.r.is_infinite() {
            self.running_sup
        } else {
            self.running_integral.powf(1.0 / self.r)
        }
    }

    pub fn finalize(self) -> f64 {
        self.value()
    }
}
