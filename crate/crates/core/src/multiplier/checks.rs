//! Cancelation over annuli and the growth hypotheses on `kappa` and its
//! derivative.

use serde::Serialize;

use super::kernel::{KernelSpec, Symmetry};
use crate::error::{invalid, Result};
use crate::grid::GridSpec;
use crate::params::StableParams;
use crate::quad::composite_gl;

/// Gauss-Legendre panels per unit of `ln |x|`.
const PANELS_PER_E: f64 = 32.0;

/// Annuli `(r, R)` used by certification, restricted to `R <= L`.
pub fn default_radii(half_extent: f64) -> Vec<(f64, f64)> {
    [(1e-3, 1e-2), (1e-2, 1.0), (0.1, 1.0), (1.0, std::f64::consts::E), (0.5, 8.0), (1.0, half_extent)]
        .into_iter()
        .filter(|(_, big)| *big <= half_extent)
        .collect()
}

/// `max |int_{r < |x| < R} kappa|` over the given annuli, by Gauss-Legendre
/// in `ln |x|` (split at `|x| = 1`). Odd kernels give exactly 0.
pub fn check_cancelation(kernel: &KernelSpec, radii: &[(f64, f64)]) -> Result<f64> {
    for &(r, big) in radii {
        if !(r > 0.0 && r < big) {
            return Err(invalid("radii", format!("need 0 < r < R, got ({r}, {big})")));
        }
    }
    if kernel.symmetry == Symmetry::Odd {
        return Ok(0.0);
    }
    let g = |u: f64| {
        let x = u.exp();
        x * (kernel.eval(x) + kernel.eval(-x))
    };
    let annulus = |r: f64, big: f64| {
        let mut cuts = vec![r.ln()];
        if r < 1.0 && big > 1.0 {
            cuts.push(0.0);
        }
        cuts.push(big.ln());
        cuts.windows(2)
            .map(|w| {
                let panels = ((w[1] - w[0]) * PANELS_PER_E).ceil().max(1.0) as usize;
                composite_gl(g, w[0], w[1], panels, 8)
            })
            .sum::<f64>()
    };
    Ok(radii.iter().map(|&(r, big)| annulus(r, big).abs()).fold(0.0, f64::max))
}

/// Smallest constants for which the growth bounds hold on the grid.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GrowthConstants {
    /// `sup |kappa(x)| / (|x|^{-d} 1_{|x|<=1} + |x|^{-(d-1+alpha/2)} 1_{|x|>1})`.
    pub cond_i: f64,
    /// `sup |kappa'(x)| / (|x|^{-d-1} 1_{|x|<=1} + |x|^{-(d+alpha/2)} 1_{|x|>1})`,
    /// over `|x| >= 2 dx`.
    pub cond_ii: f64,
    /// Whether `cond_ii` used the analytic derivative.
    pub analytic_derivative: bool,
}

/// Growth constants over the nodes of `spec`. Without an analytic
/// derivative, `kappa'` is a centred difference at spacing `dx`.
pub fn check_growth(kernel: &KernelSpec, params: &StableParams, spec: &GridSpec) -> Result<GrowthConstants> {
    params.require_main_range()?;
    params.require_1d("check_growth")?;
    let d = params.d();
    let half = params.alpha / 2.0;
    let dx = spec.spacing;
    let bound_i = |a: f64| {
        if a <= 1.0 {
            a.powf(-d)
        } else {
            a.powf(-(d - 1.0 + half))
        }
    };
    let bound_ii = |a: f64| {
        if a <= 1.0 {
            a.powf(-d - 1.0)
        } else {
            a.powf(-(d + half))
        }
    };
    let mut cond_i = 0.0f64;
    let mut cond_ii = 0.0f64;
    for x in spec.xs() {
        let a = x.abs();
        if a == 0.0 {
            continue;
        }
        cond_i = cond_i.max(kernel.eval(x).abs() / bound_i(a));
        if a >= 2.0 * dx * (1.0 - 1e-12) {
            let slope =
                kernel.derivative(x).unwrap_or_else(|| (kernel.eval(x + dx) - kernel.eval(x - dx)) / (2.0 * dx));
            cond_ii = cond_ii.max(slope.abs() / bound_ii(a));
        }
    }
    Ok(GrowthConstants { cond_i, cond_ii, analytic_derivative: kernel.has_derivative() })
}
