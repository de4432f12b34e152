//! Symmetric stable variates, per-path random streams and the sample
//! statistics used by the checks.

use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::params::StableParams;

/// Variates drawn from one stream by [`sample_stable`].
const CHUNK: usize = 4096;

/// The stream for path (or chunk) `index` under `seed`. Streams never
/// overlap, so the assignment of indices to workers cannot change a draw.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One standard symmetric `alpha`-stable variate, `E exp(i xi S) =
/// exp(-|xi|^alpha)`, by Chambers-Mallows-Stuck.
pub fn stable_variate<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let v = loop {
        let v = rng.gen_range(-FRAC_PI_2..FRAC_PI_2);
        if v > -FRAC_PI_2 {
            break v;
        }
    };
    if alpha == 1.0 {
        return v.tan();
    }
    let w: f64 = Exp1.sample(rng);
    (alpha * v).sin() / v.cos().powf(1.0 / alpha) * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

/// `n` standard symmetric stable variates with index `params.alpha`.
pub fn sample_stable(params: &StableParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    let alpha = params.alpha;
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid("alpha", format!("{alpha} must lie in (0, 2)")));
    }
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = path_rng(seed, c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len).map(|_| stable_variate(alpha, &mut rng)).collect()
        })
        .collect();
    Ok(parts.concat())
}

/// `mean cos(xi S)`, the real part of the empirical characteristic function.
pub fn empirical_cf(samples: &[f64], xi: f64) -> f64 {
    samples.iter().map(|s| (xi * s).cos()).sum::<f64>() / samples.len() as f64
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// One-sample Kolmogorov-Smirnov statistic against `cdf`, the supremum
/// taken over the real line. Infinite samples (right-censored observations)
/// count towards `n` but are not evaluation points.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let v = sorted(samples);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .filter(|(_, x)| x.is_finite())
        .map(|(i, x)| {
            let f = cdf(*x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = match a[i].total_cmp(&b[j]) {
            Ordering::Greater => b[j],
            _ => a[i],
        };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Sample mean and its standard error. The mean is accumulated as offsets
/// from the first sample, so identical samples return that sample exactly.
pub fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let base = samples[0];
    let shift = samples.iter().map(|v| v - base).sum::<f64>() / n as f64;
    let mean = base + shift;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|v| (v - base - shift).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Pearson correlation of two equally long samples.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, _) = mean_and_se(a);
    let (mb, _) = mean_and_se(b);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (u, v) = (x - ma, y - mb);
        sab += u * v;
        saa += u * u;
        sbb += v * v;
    }
    sab / (saa * sbb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_exact_quantiles_is_half_a_step() {
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
        assert_eq!(ks_two_sample(&xs, &xs), 0.0);
        let shifted: Vec<f64> = xs.iter().map(|x| x + 0.25).collect();
        assert!((ks_two_sample(&xs, &shifted) - 0.25).abs() < 2e-3);
    }

    #[test]
    fn mean_of_identical_samples_is_exact() {
        let (m, se) = mean_and_se(&[0.1; 1000]);
        assert_eq!(m, 0.1);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn streams_are_independent_of_chunking() {
        let p = StableParams::one_d(1.5).unwrap();
        let a = sample_stable(&p, 5000, 7).unwrap();
        let b = sample_stable(&p, 9000, 7).unwrap();
        assert_eq!(a[..], b[..5000]);
    }
}
