//! Spectral evaluation of `d_t^m d_x^k p(t, x)` for the isotropic density
//! with symbol `exp(-t |xi|^beta)`, with periodic images removed.

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::series::{density_coefficient, tail_terms};
use crate::spectral::{taper, PowerTail, Torus};

/// One member of the family `(i xi)^k (-|xi|^beta)^m exp(-time |xi|^beta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Family {
    pub beta: f64,
    pub time: f64,
    pub m: usize,
    pub k: usize,
}

impl Family {
    pub fn symbol(&self, xi: f64) -> Complex64 {
        let a = xi.abs().powf(self.beta);
        let base = (-a).powi(self.m as i32) * (-self.time * a).exp();
        match self.k {
            0 => Complex64::new(base, 0.0),
            1 => Complex64::new(0.0, xi * base),
            _ => Complex64::new(-xi * xi * base, 0.0),
        }
    }

    /// Smallest refinement for which the symbol has decayed below `e^{-46}`
    /// where the taper begins, capped at 64.
    pub fn resolving_refine(&self, spacing: f64) -> usize {
        let xi = (46.0 / self.time).powf(1.0 / self.beta) / 0.9;
        let r = (xi * spacing / std::f64::consts::PI).ceil();
        if r.is_finite() {
            (r as usize).clamp(1, 64)
        } else {
            64
        }
    }

    pub fn tails(&self) -> Vec<PowerTail> {
        tail_terms(self.beta, self.time, self.m, self.k, 4)
    }
}

/// Values at `x_j = (j - c) * spacing`, `j = 0..=2c`, where `c = cells / 2`.
///
/// The torus has spacing `spacing / refine` and period `pad * cells * spacing`.
pub(crate) fn profile_1d(fam: Family, spacing: f64, cells: usize, pad: usize, refine: usize) -> Vec<f64> {
    let (raw, period) = periodic_profile_1d(fam, spacing, cells, pad * cells, refine);
    let tails = fam.tails();
    let c = cells / 2;
    raw.into_iter()
        .enumerate()
        .map(|(j, v)| {
            let x = (j as f64 - c as f64) * spacing;
            v - tails.iter().map(|t| t.image_sum(x, period)).sum::<f64>()
        })
        .collect()
}

/// The periodised profile `sum_k F(x + k P)` at the same points, for a torus
/// of `torus_cells` grid cells; also returns the period `P`.
pub(crate) fn periodic_profile_1d(
    fam: Family,
    spacing: f64,
    cells: usize,
    torus_cells: usize,
    refine: usize,
) -> (Vec<f64>, f64) {
    let refine = refine.max(fam.resolving_refine(spacing));
    let torus = Torus::new(torus_cells * refine, spacing / refine as f64);
    let xmax = torus.xi_max();
    let buf: Vec<Complex64> = torus.xi().iter().map(|&xi| fam.symbol(xi) * taper(xi.abs() / xmax)).collect();
    let raw = torus.inverse_real(buf);
    let c = cells / 2;
    let values = (0..=cells)
        .map(|j| {
            let off = j as i64 - c as i64;
            raw[torus.wrap(off * refine as i64)] / torus.delta
        })
        .collect();
    (values, torus.period())
}

/// `sum_{k != 0} F(x + k P)` at `x_j = (j - c) * spacing` for `|x_j| <= P / 2`,
/// where `P = torus_cells * spacing`: from the tail series while it converges
/// quickly at distance `P / 2`, otherwise as the resolved periodic profile
/// minus the unit-time kernel rescaled.
pub(crate) fn image_correction(fam: Family, spacing: f64, cells: usize, torus_cells: usize) -> Vec<f64> {
    let period = torus_cells as f64 * spacing;
    let c = cells / 2;
    let ratio = fam.time * (period / 2.0).powf(-fam.beta);
    if ratio <= 0.1 {
        let tails = tail_terms(fam.beta, fam.time, fam.m, fam.k, 8);
        let sum = |j: usize| {
            let x = (j as f64 - c as f64) * spacing;
            tails.iter().map(|t| t.image_sum(x, period)).sum::<f64>()
        };
        // The image sum varies on the scale of the period: sample it every
        // `stride` nodes and interpolate with cubics.
        let stride = (1..=6).map(|p| 1usize << p).rev().find(|s| cells.is_multiple_of(*s) && cells / s >= 8).unwrap_or(1);
        if stride == 1 {
            return (0..=cells).map(sum).collect();
        }
        let coarse: Vec<f64> = (0..=cells / stride).map(|i| sum(i * stride)).collect();
        let last = coarse.len() - 1;
        return (0..=cells)
            .map(|j| {
                let u = j as f64 / stride as f64;
                let i = (u.floor() as usize).clamp(1, last - 2);
                let s = u - i as f64;
                let (sm, s1, s2) = (s + 1.0, s - 1.0, s - 2.0);
                -s * s1 * s2 / 6.0 * coarse[i - 1] + sm * s1 * s2 / 2.0 * coarse[i] - sm * s * s2 / 2.0 * coarse[i + 1]
                    + sm * s * s1 / 6.0 * coarse[i + 2]
            })
            .collect();
    }
    let (raw, _) = periodic_profile_1d(fam, spacing, cells, torus_cells, 1);
    let kernel = super::StableKernel::get(fam.beta, fam.m, fam.k);
    raw.into_iter().enumerate().map(|(j, v)| v - kernel.eval(fam.time, (j as f64 - c as f64) * spacing)).collect()
}

/// Two-dimensional analogue: values on the `(cells+1)^2` grid, row-major,
/// for `k`-th derivative along `axis` (0 or 1).
pub(crate) fn profile_2d(
    beta: f64,
    time: f64,
    k: usize,
    axis: usize,
    spacing: f64,
    cells: usize,
    pad: usize,
) -> Vec<f64> {
    let n = pad * cells;
    let torus = Torus::new(n, spacing);
    let xi = torus.xi().to_vec();
    let xmax = torus.xi_max();
    let mut buf = vec![Complex64::default(); n * n];
    for i in 0..n {
        for j in 0..n {
            let r = (xi[i] * xi[i] + xi[j] * xi[j]).sqrt();
            let base = (-time * r.powf(beta)).exp() * taper(r / xmax);
            let xa = if axis == 0 { xi[i] } else { xi[j] };
            buf[i * n + j] = match k {
                0 => Complex64::new(base, 0.0),
                1 => Complex64::new(0.0, xa * base),
                _ => Complex64::new(-xa * xa * base, 0.0),
            };
        }
    }
    let mut planner = FftPlanner::new();
    let inv = planner.plan_fft_inverse(n);
    for row in buf.chunks_mut(n) {
        inv.process(row);
    }
    let mut col = vec![Complex64::default(); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = buf[i * n + j];
        }
        inv.process(&mut col);
        for i in 0..n {
            buf[i * n + j] = col[i];
        }
    }
    let norm = 1.0 / ((n * n) as f64 * spacing * spacing);
    let a1 = time * density_coefficient(beta, 2, 1);
    let e = beta + 2.0;
    let period = torus.period();
    let tail = |x: f64, y: f64| -> f64 {
        let r2 = x * x + y * y;
        let xa = if axis == 0 { x } else { y };
        match k {
            0 => a1 * r2.powf(-e / 2.0),
            1 => -e * a1 * xa * r2.powf(-e / 2.0 - 1.0),
            _ => -e * a1 * (r2.powf(-e / 2.0 - 1.0) - (e + 2.0) * xa * xa * r2.powf(-e / 2.0 - 2.0)),
        }
    };
    // Lattice images: direct sum on |k|_inf <= K, radial integral beyond.
    const K: i64 = 6;
    let far = if k == 0 {
        let r = (K as f64 + 0.5) * period;
        let ang = crate::quad::composite_gl(
            |th: f64| (r / th.cos()).powf(2.0 - e) / (e - 2.0),
            0.0,
            std::f64::consts::FRAC_PI_4,
            8,
            8,
        );
        8.0 * a1 * ang / (period * period)
    } else {
        0.0
    };
    let c = cells / 2;
    let mut out = Vec::with_capacity((cells + 1) * (cells + 1));
    for i in 0..=cells {
        for j in 0..=cells {
            let (oi, oj) = (i as i64 - c as i64, j as i64 - c as i64);
            let (x, y) = (oi as f64 * spacing, oj as f64 * spacing);
            let mut images = far;
            for ki in -K..=K {
                for kj in -K..=K {
                    if ki != 0 || kj != 0 {
                        images += tail(x + ki as f64 * period, y + kj as f64 * period);
                    }
                }
            }
            let v = buf[torus.wrap(oi) * n + torus.wrap(oj)].re * norm;
            out.push(v - images);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cauchy_profile() {
        let fam = Family { beta: 1.0, time: 1.0, m: 0, k: 0 };
        let v = profile_1d(fam, 1.0 / 16.0, 512, 4, 2);
        for (j, val) in v.iter().enumerate().step_by(37) {
            let x = (j as f64 - 256.0) / 16.0;
            let want = 1.0 / (PI * (1.0 + x * x));
            assert!((val - want).abs() < 1e-10, "x={x}: {val} vs {want}");
        }
    }

    #[test]
    fn cauchy_derivative_profile() {
        let fam = Family { beta: 1.0, time: 1.0, m: 0, k: 1 };
        let v = profile_1d(fam, 1.0 / 16.0, 512, 4, 2);
        for (j, val) in v.iter().enumerate().step_by(41) {
            let x = (j as f64 - 256.0) / 16.0;
            let want = -2.0 * x / (PI * (1.0 + x * x).powi(2));
            assert!((val - want).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn cauchy_2d() {
        let v = profile_2d(1.0, 1.0, 0, 0, 1.0 / 8.0, 128, 4);
        let n = 129;
        for (i, j) in [(64, 64), (64, 72), (80, 70), (0, 0), (10, 100)] {
            let x = (i as f64 - 64.0) / 8.0;
            let y = (j as f64 - 64.0) / 8.0;
            let want = 0.5 / PI * (1.0 + x * x + y * y).powf(-1.5);
            assert!((v[i * n + j] - want).abs() < 1e-6, "({x},{y})");
        }
    }
}
