//! Monte Carlo simulation of `X_s = (Y_s, Z_s)` killed at the hitting time
//! `T_0` of `{Z = 0}`, with statistical checks of the exit law, the vertical
//! Green function, the martingale property of extensions, and empirical
//! Harnack ratios.

mod checks;
mod harnack;
mod sampling;
mod walk;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use checks::{
    exit_law_check, green_identity_check, martingale_check, ExitLawReport, ExtensionTable, GreenReport,
    MartingaleReport, MartingaleRow, GREEN_LEVELS,
};
pub use harnack::{harnack_sample, HarnackBoxes, HarnackReport, HarnackRow};
pub use sampling::{
    correlation, empirical_cf, ks_statistic, ks_two_sample, mean_and_se, path_rng, sample_stable, stable_variate,
};
pub use walk::S_MAX;

use crate::error::{invalid, Result};
use crate::params::StableParams;
use walk::{horizontal, Walk};

/// `1.63 / sqrt(n)`: the Kolmogorov-Smirnov acceptance bound.
pub fn ks_threshold(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub workers: usize,
}

impl McConfig {
    pub fn new(n_paths: usize, dt: f64, seed: u64, workers: usize) -> Result<Self> {
        let c = Self { n_paths, dt, seed, workers };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(invalid("n_paths", "must be at least 1"));
        }
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return Err(invalid("dt", format!("{} must lie in (0, 1]", self.dt)));
        }
        if self.workers == 0 {
            return Err(invalid("workers", "must be at least 1"));
        }
        Ok(())
    }

    /// Evaluate `op(i)` for every path index on `workers` threads, in index order.
    pub(crate) fn par_paths<T: Send>(&self, op: impl Fn(u64) -> T + Sync + Send) -> Result<Vec<T>> {
        self.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| invalid("workers", e.to_string()))?;
        Ok(pool.install(|| (0..self.n_paths as u64).into_par_iter().map(op).collect()))
    }
}

/// One trajectory, observed at `sample_times` (always starting with 0).
/// After `T_0` the path is frozen: `z = 0` and `y = y_at_t0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRecord {
    pub start: (f64, f64),
    pub dt: f64,
    pub sample_times: Vec<f64>,
    pub y_samples: Vec<f64>,
    pub z_samples: Vec<f64>,
    /// Hitting time of 0, interpolated on the crossing step; `S_MAX` when censored.
    pub t0: f64,
    pub y_at_t0: f64,
    pub censored: bool,
}

/// Fraction of paths still alive at [`S_MAX`].
pub fn censored_fraction(paths: &[PathRecord]) -> f64 {
    paths.iter().filter(|p| p.censored).count() as f64 / paths.len() as f64
}

fn checkpoints(dt: f64, observe: &[f64]) -> Result<Vec<u64>> {
    let mut ks = vec![0u64];
    for &s in observe {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(invalid("times", format!("{s} must be finite and >= 0")));
        }
        ks.push((s / dt).round() as u64);
    }
    ks.sort_unstable();
    ks.dedup();
    Ok(ks)
}

/// Simulate `config.n_paths` paths from `start = (x, a)`. `Y` is sampled at
/// the observation times and at `T_0`; `Z` moves by `N(0, 2 dt)` steps, and a
/// crossing inside a step is detected with the Brownian-bridge probability.
pub fn run_paths(
    params: &StableParams,
    config: &McConfig,
    start: (f64, f64),
    observe: &[f64],
) -> Result<Vec<PathRecord>> {
    params.require_1d("run_paths")?;
    let (x, a) = start;
    if !(a > 0.0 && a.is_finite()) || !x.is_finite() {
        return Err(invalid("start", format!("({x}, {a}) needs a finite x and a > 0")));
    }
    let cps = checkpoints(config.dt, observe)?;
    let sample_times: Vec<f64> = cps.iter().map(|k| *k as f64 * config.dt).collect();
    let walk = Walk { dt: config.dt, levels: 1, barrier: 0.0, occupation: None, checkpoints: &cps };
    config.par_paths(|i| {
        let mut rng = path_rng(config.seed, i);
        let out = walk.run(a, &mut rng);
        let alive = out.z_alive.len();
        let t0 = out.t0[0];
        let mut taus = sample_times[..alive].to_vec();
        taus.push(t0);
        let ys = horizontal(params.alpha, x, &taus, &mut rng);
        let y_at_t0 = ys[alive];
        let mut y_samples = ys;
        y_samples.truncate(alive);
        y_samples.resize(cps.len(), y_at_t0);
        let mut z_samples = out.z_alive;
        z_samples.resize(cps.len(), 0.0);
        PathRecord {
            start,
            dt: config.dt,
            sample_times: sample_times.clone(),
            y_samples,
            z_samples,
            t0,
            y_at_t0,
            censored: out.censored,
        }
    })
}
