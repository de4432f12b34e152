//! Gaussian mixtures over the one-sided `alpha/2`-stable subordinator.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use super::series::{subordinator_coefficient, subordinator_series};
use crate::error::{Error, Result};
use crate::params::StableParams;
use crate::quad::gauss_legendre;

const V_MAX: f64 = 1e6;
const LOG_STEP: f64 = 0.04;
const SERIES_FROM: f64 = 4.0;

/// Density of the one-sided `beta`-stable law with Laplace transform
/// `exp(-lambda^beta)`, `0 < beta < 1`.
pub fn subordinator_density(beta: f64, v: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    if beta == 0.5 {
        return 0.5 / PI.sqrt() * v.powf(-1.5) * (-0.25 / v).exp();
    }
    if v >= SERIES_FROM {
        return subordinator_series(beta, v);
    }
    bromwich(beta, v)
}

/// `g(v) = (e^{sigma v}/pi) int_0^inf Re exp(i y v - (sigma + i y)^beta) dy`.
fn bromwich(beta: f64, v: f64) -> f64 {
    let sigma = (1.0 / v).min(1.0);
    let decay = (beta * PI / 2.0).cos();
    let y_max = (40.0 / decay).powf(1.0 / beta);
    let width = (PI / v).min(0.5);
    let panels = (y_max / width).ceil() as usize;
    let (nodes, weights) = gauss_legendre(10);
    let mut sum = 0.0;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * width;
        let mut part = 0.0;
        for (z, w) in nodes.iter().zip(&weights) {
            let y = mid + 0.5 * width * z;
            let lam = Complex64::new(sigma, y);
            let e = Complex64::new(0.0, y * v) - lam.powf(beta);
            part += w * e.exp().re;
        }
        sum += 0.5 * width * part;
    }
    (sigma * v).exp() * sum / PI
}

/// Below this `v` the density is below `exp(-50)`.
fn lower_cutoff(beta: f64) -> f64 {
    let c = (1.0 - beta) * beta.powf(beta / (1.0 - beta));
    (c / 50.0).powf((1.0 - beta) / beta)
}

/// Log-spaced samples `(v_j, g(v_j))` on `[lower_cutoff, V_MAX]`, odd count.
struct SubordinatorTable {
    v: Vec<f64>,
    g: Vec<f64>,
    step: f64,
}

fn table(beta: f64) -> Arc<SubordinatorTable> {
    type Map = Mutex<HashMap<u64, Arc<OnceLock<Arc<SubordinatorTable>>>>>;
    static CACHE: OnceLock<Map> = OnceLock::new();
    let cell = CACHE
        .get_or_init(Default::default)
        .lock()
        .expect("subordinator cache poisoned")
        .entry(beta.to_bits())
        .or_default()
        .clone();
    cell.get_or_init(|| {
        let (a, b) = (lower_cutoff(beta).ln(), V_MAX.ln());
        let mut n = ((b - a) / LOG_STEP).ceil() as usize;
        if n % 2 == 1 {
            n += 1;
        }
        let step = (b - a) / n as f64;
        let v: Vec<f64> = (0..=n).map(|j| (a + j as f64 * step).exp()).collect();
        let g = v.iter().map(|&v| subordinator_density(beta, v)).collect();
        Arc::new(SubordinatorTable { v, g, step })
    })
    .clone()
}

fn gregory_weight(j: usize, n: usize) -> f64 {
    const G: [f64; 3] = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
    let e = j.min(n - 1 - j);
    if e < 3 {
        G[e]
    } else {
        1.0
    }
}

/// `p(s, x) = int (4 pi c w)^{-d/2} exp(-|x|^2/(4 c w)) g(w) dw`, `c = s^{2/alpha}`,
/// by a Gregory-corrected trapezoid in `ln w`; the result is compared with the
/// same rule on every other node and rejected if they differ by more than 1e-6.
pub fn subordination_density(params: &StableParams, s: f64, x: &[f64]) -> Result<f64> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(crate::error::invalid("s", format!("{s} must be > 0")));
    }
    if x.len() != params.dim {
        return Err(crate::error::invalid("x", "point dimension differs from params.dim"));
    }
    let beta = params.alpha / 2.0;
    let d = params.d();
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let c = s.powf(2.0 / params.alpha);
    let tab = table(beta);
    let integrand = |j: usize| -> f64 {
        let w = tab.v[j];
        let cw = c * w;
        w * (4.0 * PI * cw).powf(-d / 2.0) * (-r2 / (4.0 * cw)).exp() * tab.g[j]
    };
    let n = tab.v.len();
    let vals: Vec<f64> = (0..n).map(integrand).collect();
    let fine: f64 = vals.iter().enumerate().map(|(j, f)| gregory_weight(j, n) * f).sum::<f64>() * tab.step;
    let half = n.div_ceil(2);
    let coarse: f64 = (0..half).map(|i| gregory_weight(i, half) * vals[2 * i]).sum::<f64>() * 2.0 * tab.step;
    // Tail beyond V_MAX from the subordinator series, expanding the Gaussian to first order.
    let mut tail = 0.0;
    for k in 1..=3 {
        let b = subordinator_coefficient(beta, k);
        let e = k as f64 * beta + d / 2.0;
        tail += b * (V_MAX.powf(-e) / e - r2 / (4.0 * c) * V_MAX.powf(-e - 1.0) / (e + 1.0));
    }
    tail *= (4.0 * PI * c).powf(-d / 2.0);
    let change = (fine - coarse).abs() / fine.abs().max(f64::MIN_POSITIVE);
    if change > 1e-6 {
        return Err(Error::NoConvergence { what: "subordination integral".into(), change });
    }
    Ok(fine + tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Kanter's integral for the one-sided stable density; independent of
    /// the contour integral used by the implementation.
    fn kanter(beta: f64, v: f64) -> f64 {
        let a = |phi: f64| {
            (beta * phi).sin().powf(beta / (1.0 - beta)) * ((1.0 - beta) * phi).sin()
                / phi.sin().powf(1.0 / (1.0 - beta))
        };
        let z = v.powf(-beta / (1.0 - beta));
        let integral = crate::quad::composite_gl(|phi| a(phi) * (-a(phi) * z).exp(), 0.0, PI, 400, 8);
        beta / (1.0 - beta) * v.powf(-1.0 / (1.0 - beta)) * integral / PI
    }

    #[test]
    fn contour_matches_kanter() {
        for beta in [0.6, 0.75, 0.9] {
            for v in [0.3, 0.8, 1.5, 3.9] {
                let want = kanter(beta, v);
                let got = bromwich(beta, v);
                assert!((got - want).abs() < 1e-10 + 1e-8 * want, "beta={beta} v={v}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn contour_matches_series_at_switch() {
        for beta in [0.6, 0.75, 0.95] {
            let a = bromwich(beta, SERIES_FROM);
            let b = subordinator_series(beta, SERIES_FROM);
            assert!((a - b).abs() < 1e-11, "beta={beta}");
        }
    }

    #[test]
    fn cauchy_values() {
        let p = StableParams::one_d(1.0).unwrap();
        let v = subordination_density(&p, 1.0, &[0.0]).unwrap();
        assert!((v - 1.0 / PI).abs() < 1e-9);
        let v = subordination_density(&p, 2.0, &[0.0]).unwrap();
        assert!((v - 0.5 / PI).abs() < 1e-9);
        let v = subordination_density(&p, 1.0, &[3.0]).unwrap();
        assert!((v - 0.1 / PI).abs() < 1e-9);
        let p2 = StableParams::new(1.0, 2).unwrap();
        let v = subordination_density(&p2, 1.0, &[0.6, 0.8]).unwrap();
        assert!((v - 0.5 / PI * 2f64.powf(-1.5)).abs() < 1e-9);
    }
}
