use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};
use crate::quad::{integrate_log, TimeGrid};

/// Law of the hitting time of 0 for `Z` started at height `t`:
/// `mu_t(s) = t/(2 sqrt(pi)) exp(-t^2/(4s)) s^{-3/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitLaw {
    pub t: f64,
}

impl ExitLaw {
    pub fn new(t: f64) -> Result<Self> {
        if t > 0.0 && t.is_finite() {
            Ok(Self { t })
        } else {
            Err(invalid("t", format!("{t} must be > 0")))
        }
    }

    pub fn density(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        self.t / (2.0 * PI.sqrt()) * (-self.t * self.t / (4.0 * s)).exp() * s.powf(-1.5)
    }

    pub fn cdf(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        erfc(self.t / (2.0 * s.sqrt()))
    }

    /// Quadrature mass on `grid` plus the exact mass outside it.
    pub fn mass(&self, grid: &TimeGrid) -> f64 {
        grid.integrate(|s| self.density(s)) + self.cdf(grid.t_min) + (1.0 - self.cdf(grid.t_max))
    }
}

/// The two integrals bounded by the moment lemma for `mu_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentBounds {
    /// `int_0^M |s - 1/2| mu_1(ds)`.
    pub left: f64,
    /// `int_M^inf |1 - 1/(2s)| mu_1(ds)`.
    pub right: f64,
    pub left_bound: f64,
    pub right_bound: f64,
}

const S_FLOOR: f64 = 1e-4;
const S_CEIL: f64 = 1e12;

fn piecewise(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    let mut total = 0.0;
    let mut lo = a;
    for cut in [0.5, b] {
        let hi = cut.min(b);
        if hi > lo {
            total += integrate_log("moment integral", f, lo, hi, 1e-13, 1e-300)?;
            lo = hi;
        }
    }
    Ok(total)
}

pub fn mu_moment_bounds(m: f64) -> Result<MomentBounds> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(invalid("M", format!("{m} must be > 0")));
    }
    let mu = ExitLaw { t: 1.0 };
    let left = if m <= S_FLOOR { 0.0 } else { piecewise(&|s| (s - 0.5).abs() * mu.density(s), S_FLOOR, m)? };
    let start = m.max(S_FLOOR);
    let body = if start < S_CEIL { piecewise(&|s| (1.0 - 0.5 / s).abs() * mu.density(s), start, S_CEIL)? } else { 0.0 };
    // Beyond S_CEIL: (1 - 1/(2s))(1 - 1/(4s)) s^{-3/2} / (2 sqrt(pi)).
    let b = S_CEIL.max(start);
    let tail = (2.0 * b.powf(-0.5) - 0.5 * b.powf(-1.5)) / (2.0 * PI.sqrt());
    let right = body + tail;
    let bounds =
        MomentBounds { left, right, left_bound: m.sqrt() / PI.sqrt(), right_bound: 1.0 / (m.sqrt() * PI.sqrt()) };
    if left > bounds.left_bound + 1e-8 || right > bounds.right_bound + 1e-8 {
        return Err(Error::EstimateViolation(format!("moment bounds fail at M = {m}: {bounds:?}")));
    }
    Ok(bounds)
}
