//! Exit law, vertical Green function and martingale checks.

use rayon::prelude::*;
use serde::Serialize;

use super::sampling::{correlation, ks_statistic, mean_and_se, path_rng};
use super::walk::{Walk, MAX_LEVELS};
use super::{censored_fraction, ks_threshold, run_paths, McConfig};
use crate::density::{ExitLaw, StableKernel};
use crate::error::{invalid, Result};
use crate::extension::{extend_at, TorusSpectrum, DEFAULT_PAD};
use crate::grid::{GridFunction, GridSpec};
use crate::params::StableParams;
use crate::quad::composite_gl;

/// Step sizes `dt, dt/2, dt/4` run on shared increments by the Green check.
pub const GREEN_LEVELS: usize = 3;
/// `t`-spacing of the extension table used by the martingale check.
const TABLE_STEP: f64 = 1.0 / 64.0;
/// The table reaches `a + 6 sqrt(2 s)` for the largest time `s`.
const TABLE_SIGMAS: f64 = 6.0;

#[derive(Debug, Clone, Serialize)]
pub struct ExitLawReport {
    pub a: f64,
    pub n: usize,
    /// KS distance of `t0` from `erfc(a / (2 sqrt s))` below `S_MAX`.
    pub t0_ks: f64,
    /// KS distance of `y_at_t0 - x` from the distribution function of `q_a`.
    pub y_ks: f64,
    pub ks_threshold: f64,
    /// Correlation of `mu_a(t0 <= .)` and `sign(y_at_t0 - x)`.
    pub correlation: f64,
    pub correlation_bound: f64,
    pub censored_fraction: f64,
    pub t0_median: f64,
}

impl ExitLawReport {
    pub fn passes(&self) -> bool {
        self.t0_ks < self.ks_threshold
            && self.y_ks < self.ks_threshold
            && self.correlation.abs() < self.correlation_bound
            && self.censored_fraction < 0.01
    }
}

/// Compare the simulated `T_0` and `Y_{T_0}` from `(0, a)` with their laws.
pub fn exit_law_check(params: &StableParams, config: &McConfig, a: f64) -> Result<ExitLawReport> {
    let paths = run_paths(params, config, (0.0, a), &[])?;
    let law = ExitLaw::new(a)?;
    let q = StableKernel::get(params.alpha / 2.0, 0, 0);
    let t0: Vec<f64> = paths.iter().map(|p| if p.censored { f64::INFINITY } else { p.t0 }).collect();
    let y: Vec<f64> = paths.iter().map(|p| p.y_at_t0).collect();
    let n = paths.len();
    let mut sorted = t0.clone();
    sorted.sort_by(f64::total_cmp);
    let u: Vec<f64> = t0.iter().map(|s| law.cdf(*s)).collect();
    let sign: Vec<f64> = y.iter().map(|v| v.signum()).collect();
    Ok(ExitLawReport {
        a,
        n,
        t0_ks: ks_statistic(&t0, |s| law.cdf(s)),
        y_ks: ks_statistic(&y, |v| q.cdf(a, v)),
        ks_threshold: ks_threshold(n),
        correlation: correlation(&u, &sign),
        correlation_bound: 3.0 / (n as f64).sqrt(),
        censored_fraction: censored_fraction(&paths),
        t0_median: sorted[n / 2],
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GreenReport {
    pub a: f64,
    pub support: (f64, f64),
    /// `int (s ^ a) f(s) ds`.
    pub exact: f64,
    /// Mean of the rectangle-rule path integrals at step `dt`.
    pub mc: f64,
    pub std_error: f64,
    pub dt: f64,
    /// Means at `dt`, `dt/2`, `dt/4` on shared increments.
    pub level_means: Vec<f64>,
    /// Mean differences between consecutive levels and their standard errors.
    pub level_diffs: Vec<f64>,
    pub diff_std_errors: Vec<f64>,
    /// Extrapolated bias at `dt`, `2 (m_dt - m_{dt/2})`.
    pub bias: f64,
    /// `(m_dt - m_{dt/2}) / (m_{dt/2} - m_{dt/4})`: 2 for a bias linear in `dt`.
    pub bias_ratio: f64,
}

impl GreenReport {
    /// `|mc - exact| <= 3 SE + |bias|`.
    pub fn within(&self) -> bool {
        (self.mc - self.exact).abs() <= 3.0 * self.std_error + self.bias.abs()
    }
}

/// `E^a int_0^{T_0} f(Z_s) ds` by simulation against `int_0^inf (s ^ a) f(s) ds`.
/// `f` must vanish outside `support = (lo, hi)`.
pub fn green_identity_check(
    f: &(dyn Fn(f64) -> f64 + Sync),
    support: (f64, f64),
    a: f64,
    config: &McConfig,
) -> Result<GreenReport> {
    let (lo, hi) = support;
    if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
        return Err(invalid("support", format!("({lo}, {hi}) must be a bounded interval in [0, inf)")));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(invalid("a", format!("{a} must be > 0")));
    }
    let weighted = |s: f64| s.min(a) * f(s);
    let exact = if lo < a && a < hi {
        composite_gl(weighted, lo, a, 64, 8) + composite_gl(weighted, a, hi, 64, 8)
    } else {
        composite_gl(weighted, lo, hi, 64, 8)
    };
    let walk = Walk { dt: config.dt, levels: GREEN_LEVELS, barrier: hi, occupation: Some(f), checkpoints: &[] };
    let runs: Vec<[f64; MAX_LEVELS]> = config.par_paths(|i| walk.run(a, &mut path_rng(config.seed, i)).occupation)?;
    let column = |l: usize| runs.iter().map(|r| r[l]).collect::<Vec<f64>>();
    let level_means: Vec<f64> = (0..GREEN_LEVELS).map(|l| mean_and_se(&column(l)).0).collect();
    let (mc, std_error) = mean_and_se(&column(0));
    let (level_diffs, diff_std_errors): (Vec<f64>, Vec<f64>) =
        (0..GREEN_LEVELS - 1).map(|l| mean_and_se(&runs.iter().map(|r| r[l] - r[l + 1]).collect::<Vec<f64>>())).unzip();
    Ok(GreenReport {
        a,
        support,
        exact,
        mc,
        std_error,
        dt: config.dt,
        bias: 2.0 * level_diffs[0],
        bias_ratio: level_diffs[0] / level_diffs[1],
        level_means,
        level_diffs,
        diff_std_errors,
    })
}

/// `u(x, t) = Q_t f(x)` tabulated on the grid of `f` at `t = j / 64`,
/// evaluated by bilinear interpolation; outside the table `u` is summed
/// directly against `q_t`.
#[derive(Debug, Clone)]
pub struct ExtensionTable {
    f: GridFunction,
    params: StableParams,
    t_step: f64,
    /// `Q_t (f - tail)` for each tabulated `t`, starting at `t = 0`.
    slices: Vec<Vec<f64>>,
}

impl ExtensionTable {
    pub fn new(f: &GridFunction, params: &StableParams, t_max: f64) -> Result<Self> {
        params.require_1d("ExtensionTable")?;
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(invalid("t_max", format!("{t_max} must be > 0")));
        }
        let shifted = GridFunction::new(f.spec, f.values.iter().map(|v| v - f.tail).collect())?;
        let spectrum = TorusSpectrum::new(&shifted, DEFAULT_PAD)?;
        let count = (t_max / TABLE_STEP).ceil() as usize;
        let mut slices = vec![shifted.values.clone()];
        let rest: Vec<Vec<f64>> = (1..=count)
            .into_par_iter()
            .map(|j| Ok(spectrum.stable_on_grid(params.alpha / 2.0, j as f64 * TABLE_STEP, 0)?.values))
            .collect::<Result<_>>()?;
        slices.extend(rest);
        Ok(Self { f: f.clone(), params: *params, t_step: TABLE_STEP, slices })
    }

    pub fn spec(&self) -> GridSpec {
        self.f.spec
    }

    pub fn t_max(&self) -> f64 {
        (self.slices.len() - 1) as f64 * self.t_step
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(invalid("t", format!("{t} must be >= 0")));
        }
        let spec = self.f.spec;
        let l = spec.half_extent;
        let inside = x.abs() <= l;
        if !inside && t == 0.0 {
            return Ok(self.f.tail);
        }
        if !inside || t > self.t_max() {
            return extend_at(&self.f, &self.params, x, t);
        }
        let u = (x + l) / spec.spacing;
        let i = (u.floor() as usize).min(spec.n() - 2);
        let p = u - i as f64;
        let v = t / self.t_step;
        let j = (v.floor() as usize).min(self.slices.len() - 2);
        let q = v - j as f64;
        let at = |row: &[f64]| row[i] * (1.0 - p) + row[i + 1] * p;
        let mixed =
            if q == 0.0 { at(&self.slices[j]) } else { at(&self.slices[j]) * (1.0 - q) + at(&self.slices[j + 1]) * q };
        Ok(self.f.tail + mixed)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MartingaleRow {
    pub s: f64,
    pub mc: f64,
    pub std_error: f64,
    /// `u(x, a)`.
    pub exact: f64,
    pub within: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MartingaleReport {
    pub start: (f64, f64),
    pub rows: Vec<MartingaleRow>,
}

impl MartingaleReport {
    pub fn passes(&self) -> bool {
        self.rows.iter().all(|r| r.within)
    }
}

/// Mean of `u(X_{s ^ T_0})` for each `s` in `times`, against `u(x, a)`.
pub fn martingale_check(
    f: &GridFunction,
    params: &StableParams,
    start: (f64, f64),
    times: &[f64],
    config: &McConfig,
) -> Result<MartingaleReport> {
    let (x, a) = start;
    let s_top = times.iter().cloned().fold(0.0, f64::max);
    let table = ExtensionTable::new(f, params, a + TABLE_SIGMAS * (2.0 * s_top).sqrt() + 2.0 * TABLE_STEP)?;
    let exact = table.eval(x, a)?;
    let paths = run_paths(params, config, start, times)?;
    let rows = times
        .iter()
        .map(|&s| {
            let k = paths[0]
                .sample_times
                .iter()
                .position(|tau| (tau - s).abs() <= 0.5 * config.dt)
                .expect("every requested time is sampled");
            let values: Vec<f64> =
                paths.par_iter().map(|p| table.eval(p.y_samples[k], p.z_samples[k])).collect::<Result<_>>()?;
            let (mc, std_error) = mean_and_se(&values);
            Ok(MartingaleRow { s, mc, std_error, exact, within: (mc - exact).abs() <= 3.0 * std_error })
        })
        .collect::<Result<_>>()?;
    Ok(MartingaleReport { start, rows })
}
