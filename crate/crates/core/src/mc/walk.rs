//! Euler stepping of the vertical Brownian motion (variance `2 dt` per step)
//! with bridge crossing detection, and the horizontal stable component at
//! the observation times.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::sampling::stable_variate;

/// Paths still above ground at this time are censored.
pub const S_MAX: f64 = 1e4;
/// Several steps are merged into one draw when the start lies this many
/// standard deviations of the merged step above the barrier.
const BLOCK_SIGMAS: f64 = 8.0;
/// Largest number of nested step halvings on one path.
pub(crate) const MAX_LEVELS: usize = 4;
/// Bridge crossing probabilities below `exp(-40)` are not drawn.
const NEGLIGIBLE_EXPONENT: f64 = 40.0;

pub(crate) type Occupation<'a> = &'a (dyn Fn(f64) -> f64 + Sync);

/// One vertical path. Level 0 steps by `dt`, level `l` by `dt / 2^l`, all
/// levels sharing the finest increments; the crossing step of a coarse level
/// is the one containing the finest crossing.
pub(crate) struct Walk<'a> {
    pub dt: f64,
    pub levels: usize,
    /// Steps are merged only while `Z` stays above this level; at least the
    /// top of the support of `occupation`.
    pub barrier: f64,
    pub occupation: Option<Occupation<'a>>,
    /// Level-0 step indices at which `Z` is recorded, ascending.
    pub checkpoints: &'a [u64],
}

pub(crate) struct Outcome {
    pub t0: [f64; MAX_LEVELS],
    pub censored: bool,
    /// `Z` at the checkpoints reached before `T_0`.
    pub z_alive: Vec<f64>,
    /// Rectangle rule for `int_0^{T_0} f(Z_s) ds` at each level.
    pub occupation: [f64; MAX_LEVELS],
}

fn bridge_crosses(z0: f64, z1: f64, h: f64, rng: &mut ChaCha8Rng) -> bool {
    // P(min < 0 | Z_0 = z0, Z_h = z1) for variance 2 per unit time.
    let e = z0 * z1 / h;
    e < NEGLIGIBLE_EXPONENT && rng.gen::<f64>() < (-e).exp()
}

fn power_of_two_below(n: u64) -> u64 {
    1 << (63 - n.leading_zeros())
}

impl Walk<'_> {
    pub fn run(&self, a: f64, rng: &mut ChaCha8Rng) -> Outcome {
        debug_assert!((1..=MAX_LEVELS).contains(&self.levels));
        let fine = 1usize << (self.levels - 1);
        let h = self.dt / fine as f64;
        let step_sd = (2.0 * h).sqrt();
        let last = (S_MAX / self.dt).ceil() as u64;
        let mut out = Outcome {
            t0: [S_MAX; MAX_LEVELS],
            censored: false,
            z_alive: Vec::with_capacity(self.checkpoints.len()),
            occupation: [0.0; MAX_LEVELS],
        };
        let mut zs = [0.0f64; (1 << (MAX_LEVELS - 1)) + 1];
        let (mut z, mut k, mut next) = (a, 0u64, 0usize);
        loop {
            while self.checkpoints.get(next) == Some(&k) {
                out.z_alive.push(z);
                next += 1;
            }
            if k >= last {
                out.censored = true;
                out.t0 = [k as f64 * self.dt; MAX_LEVELS];
                return out;
            }
            let horizon = self.checkpoints.get(next).copied().unwrap_or(u64::MAX).min(last) - k;
            let room = (z - self.barrier) / BLOCK_SIGMAS;
            if room > 0.0 {
                let safe = (room * room / (2.0 * self.dt)).floor();
                if safe >= 1.0 {
                    let m = power_of_two_below((safe as u64).min(horizon));
                    let g: f64 = rng.sample(StandardNormal);
                    z += (2.0 * m as f64 * self.dt).sqrt() * g;
                    k += m;
                    continue;
                }
            }

            zs[0] = z;
            let mut hit = None;
            for j in 0..fine {
                let g: f64 = rng.sample(StandardNormal);
                zs[j + 1] = zs[j] + step_sd * g;
                if hit.is_none() && (zs[j + 1] <= 0.0 || bridge_crosses(zs[j], zs[j + 1], h, rng)) {
                    hit = Some(j);
                }
            }
            let t = k as f64 * self.dt;
            for level in 0..self.levels {
                let stride = fine >> level;
                let hl = self.dt / (1u64 << level) as f64;
                let stop = hit.map_or(1 << level, |j| j / stride);
                if let Some(f) = self.occupation {
                    out.occupation[level] += (0..stop).map(|i| f(zs[i * stride])).sum::<f64>() * hl;
                }
                if hit.is_some() {
                    // Linear interpolation towards the (reflected) endpoint.
                    let (za, zb) = (zs[stop * stride], zs[(stop + 1) * stride]);
                    let frac = za / (za + zb.abs());
                    if let Some(f) = self.occupation {
                        out.occupation[level] += f(za) * frac * hl;
                    }
                    out.t0[level] = t + (stop as f64 + frac) * hl;
                }
            }
            if hit.is_some() {
                return out;
            }
            z = zs[fine];
            k += 1;
        }
    }
}

/// `Y` at the ascending times `taus`, started at `x`: independent
/// increments `(tau_j - tau_{j-1})^{1/alpha} S_j`, equal in law to the sum of
/// the per-step increments `dt^{1/alpha} S`.
pub(crate) fn horizontal(alpha: f64, x: f64, taus: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut y = x;
    let mut prev = 0.0;
    taus.iter()
        .map(|&tau| {
            if tau > prev {
                y += (tau - prev).powf(1.0 / alpha) * stable_variate(alpha, rng);
                prev = tau;
            }
            y
        })
        .collect()
}
