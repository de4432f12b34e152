//! Off-grid evaluation of stable profiles from cached unit-time tables.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::profile::{profile_1d, Family};
use super::series::{eval_terms, tail_integral};
use crate::spectral::PowerTail;

const EXTENT: f64 = 256.0;
const STEPS_PER_UNIT: usize = 256;

/// Cubic-Hermite interpolant of `d_t^m d_x^k p(1, x)` on `[0, 256]`, with
/// the asymptotic series beyond. One-dimensional.
#[derive(Debug)]
pub struct StableKernel {
    pub beta: f64,
    pub m: usize,
    pub k: usize,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
    cumulative: Vec<f64>,
    tails: Vec<PowerTail>,
}

type Key = (u64, usize, usize);

fn cache() -> &'static Mutex<HashMap<Key, Arc<OnceLock<Arc<StableKernel>>>>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<OnceLock<Arc<StableKernel>>>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

impl StableKernel {
    /// Shared table for `(beta, m, k)`; built once per process.
    pub fn get(beta: f64, m: usize, k: usize) -> Arc<StableKernel> {
        let cell = {
            let mut map = cache().lock().expect("kernel cache poisoned");
            map.entry((beta.to_bits(), m, k)).or_default().clone()
        };
        cell.get_or_init(|| Arc::new(Self::build(beta, m, k))).clone()
    }

    fn build(beta: f64, m: usize, k: usize) -> Self {
        let step = 1.0 / STEPS_PER_UNIT as f64;
        let cells = 2 * (EXTENT as usize) * STEPS_PER_UNIT;
        let half = cells / 2;
        let fam = Family { beta, time: 1.0, m, k };
        let values = profile_1d(fam, step, cells, 4, 1)[half..].to_vec();
        let dfam = Family { k: k + 1, ..fam };
        let slopes = if k < 2 {
            profile_1d(dfam, step, cells, 4, 1)[half..].to_vec()
        } else {
            // Third derivative is only needed for interpolation slopes of
            // second-derivative tables; take centred differences.
            let n = values.len();
            (0..n)
                .map(|i| {
                    if i == 0 {
                        0.0
                    } else if i + 1 == n {
                        (values[i] - values[i - 1]) / step
                    } else {
                        (values[i + 1] - values[i - 1]) / (2.0 * step)
                    }
                })
                .collect()
        };
        let mut cumulative = vec![0.0; values.len()];
        for i in 1..values.len() {
            let seg = step * (values[i - 1] + values[i]) / 2.0 + step * step * (slopes[i - 1] - slopes[i]) / 12.0;
            cumulative[i] = cumulative[i - 1] + seg;
        }
        Self { beta, m, k, step, values, slopes, cumulative, tails: fam.tails() }
    }

    pub fn extent(&self) -> f64 {
        EXTENT
    }

    fn odd(&self) -> bool {
        self.k % 2 == 1
    }

    /// Value at time 1.
    pub fn unit(&self, x: f64) -> f64 {
        let ax = x.abs();
        let v = if ax >= EXTENT {
            eval_terms(&self.tails, ax)
        } else {
            let u = ax / self.step;
            let i = (u as usize).min(self.values.len() - 2);
            let s = u - i as f64;
            let (y0, y1) = (self.values[i], self.values[i + 1]);
            let (d0, d1) = (self.slopes[i] * self.step, self.slopes[i + 1] * self.step);
            let s2 = s * s;
            let s3 = s2 * s;
            (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * d1
        };
        if self.odd() && x < 0.0 {
            -v
        } else {
            v
        }
    }

    /// `d_t^m d_x^k p(t, x) = t^{-m-(1+k)/beta} F(x t^{-1/beta})`.
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let scale = t.powf(-1.0 / self.beta);
        t.powf(-(self.m as f64)) * scale.powi(1 + self.k as i32) * self.unit(x * scale)
    }

    /// `int_0^x F(y) dy` at time 1, for `x >= 0`.
    fn half_integral(&self, ax: f64) -> f64 {
        if ax >= EXTENT {
            let total = self.cumulative[self.cumulative.len() - 1] + tail_integral(&self.tails, EXTENT);
            return total - tail_integral(&self.tails, ax);
        }
        let u = ax / self.step;
        let i = (u as usize).min(self.values.len() - 2);
        let s = u - i as f64;
        let h = self.step;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        // Integral of the Hermite basis from 0 to s.
        let s2 = s * s;
        let s3 = s2 * s;
        let s4 = s3 * s;
        let part = (0.5 * s4 - s3 + s) * y0
            + (0.25 * s4 - 2.0 * s3 / 3.0 + 0.5 * s2) * d0
            + (-0.5 * s4 + s3) * y1
            + (0.25 * s4 - s3 / 3.0) * d1;
        self.cumulative[i] + h * part
    }

    /// Distribution function of the density (`m = k = 0`) at time `t`.
    pub fn cdf(&self, t: f64, x: f64) -> f64 {
        debug_assert!(self.m == 0 && self.k == 0);
        let ax = x.abs() * t.powf(-1.0 / self.beta);
        let h = self.half_integral(ax);
        if x >= 0.0 {
            0.5 + h
        } else {
            0.5 - h
        }
    }

    /// `int_0^inf F` at time 1 (0.5 for a density).
    pub fn half_mass(&self) -> f64 {
        self.half_integral(f64::MAX)
    }
}
