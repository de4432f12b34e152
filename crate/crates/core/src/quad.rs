//! Quadrature rules: the log-spaced [`TimeGrid`] used for every `dt`
//! integral, Gauss-Legendre panels, and a convergence-checked composite rule.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Gregory end weights (third order) applied to both ends of a trapezoid.
const GREGORY: [f64; 3] = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];

/// Log-spaced nodes on `[t_min, t_max]` with weights for `int g(t) dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self::log_spaced(1e-4, 1e3, 256).expect("default time grid is valid")
    }
}

impl TimeGrid {
    /// Trapezoid rule in `u = ln t` with Gregory end corrections.
    pub fn log_spaced(t_min: f64, t_max: f64, n: usize) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) {
            return Err(invalid("t_min", format!("need 0 < t_min < t_max, got [{t_min}, {t_max}]")));
        }
        if n < 8 {
            return Err(invalid("n", format!("at least 8 nodes required, got {n}")));
        }
        let (a, b) = (t_min.ln(), t_max.ln());
        let h = (b - a) / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n)
            .map(|j| match j {
                0 => t_min,
                j if j == n - 1 => t_max,
                j => (a + j as f64 * h).exp(),
            })
            .collect();
        let weights = nodes
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                let end = j.min(n - 1 - j);
                let c = if end < GREGORY.len() { GREGORY[end] } else { 1.0 };
                c * h * t
            })
            .collect();
        Ok(Self { nodes, weights, t_min, t_max })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn log_step(&self) -> f64 {
        (self.t_max / self.t_min).ln() / (self.len() - 1) as f64
    }

    /// Same range with `factor` times as many intervals.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::log_spaced(self.t_min, self.t_max, (self.len() - 1) * factor + 1)
    }

    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * g(t)).sum()
    }

    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                z
            } else {
                p1
            };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss-Legendre rule with `panels` equal panels of `order` points.
pub fn composite_gl(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            s += wi * f(mid + 0.5 * h * xi);
        }
    }
    0.5 * h * s
}

/// Composite Gauss-Legendre with panel doubling until the relative change
/// drops below `rtol` (or the absolute change below `atol`).
pub fn integrate_converged(what: &str, f: impl Fn(f64) -> f64, a: f64, b: f64, rtol: f64, atol: f64) -> Result<f64> {
    let mut panels = 16;
    let mut prev = composite_gl(&f, a, b, panels, 8);
    let mut rel = f64::INFINITY;
    for _ in 0..14 {
        panels *= 2;
        let next = composite_gl(&f, a, b, panels, 8);
        let change = (next - prev).abs();
        if change <= rtol * next.abs() || change <= atol {
            return Ok(next);
        }
        rel = change / next.abs().max(f64::MIN_POSITIVE);
        prev = next;
    }
    Err(Error::NoConvergence { what: what.to_string(), change: rel })
}

/// `int_a^b f(t) dt` for `0 < a < b` after the substitution `t = e^u`,
/// with panel doubling as in [`integrate_converged`].
pub fn integrate_log(what: &str, f: impl Fn(f64) -> f64, a: f64, b: f64, rtol: f64, atol: f64) -> Result<f64> {
    if !(a > 0.0 && b > a) {
        return Err(invalid("interval", format!("need 0 < a < b, got [{a}, {b}]")));
    }
    integrate_converged(
        what,
        |u| {
            let t = u.exp();
            f(t) * t
        },
        a.ln(),
        b.ln(),
        rtol,
        atol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let g = TimeGrid::default();
        assert_eq!(g.len(), 256);
        assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(g.weights.iter().all(|&w| w > 0.0));
        assert_eq!(g.nodes[0], 1e-4);
        assert_eq!(*g.nodes.last().unwrap(), 1e3);
    }

    #[test]
    fn validation_integrand() {
        let g = TimeGrid::default();
        let got = g.integrate(|t| t * (-2.0 * t).exp());
        // The part below t_min is t_min^2 / 2 to leading order.
        let want = 0.25 - 0.5 * 1e-8;
        assert!(((got - want) / want).abs() < 1e-6, "{got}");
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let deg = 2 * n - 1;
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let want = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((got - want).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn log_integration() {
        let v = integrate_log("x^-1/2", |t| t.powf(-0.5), 1e-6, 1.0, 1e-12, 0.0).unwrap();
        assert!((v - 2.0 * (1.0 - 1e-3)).abs() < 1e-10);
    }
}
