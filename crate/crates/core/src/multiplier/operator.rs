//! The convolution operator `T f = f * kappa` on grid functions and its
//! `L^p` norms on the line.

use rayon::prelude::*;

use super::checks::check_cancelation;
use super::kernel::{KernelSpec, Symmetry};
use crate::error::{invalid, Error, Result};
use crate::grid::{lp_norm, lp_norm_slice, GridFunction};
use crate::quad::gauss_legendre;
use crate::spectral::CentredConvolver;

/// Cancelation below which a singular kernel has a principal value.
const PV_TOLERANCE: f64 = 1e-6;
/// Outer quadrature stops at `FAR_REACH * L`; beyond, a power-law tail.
const FAR_REACH: f64 = 1e6;
/// Geometric panels per factor 2 in `|x|` beyond the grid.
const PANELS_PER_OCTAVE: usize = 6;

fn principal_value_ok(kernel: &KernelSpec, f: &GridFunction) -> Result<()> {
    if kernel.symmetry == Symmetry::Odd {
        return Ok(());
    }
    let dx = f.spec.spacing;
    let defect = check_cancelation(kernel, &[(dx, 1.0)])?;
    if defect > PV_TOLERANCE {
        return Err(Error::KernelRejected(format!(
            "{}: int_{{{dx} < |x| < 1}} kappa = {defect:.3e}; the principal value is undefined",
            kernel.name
        )));
    }
    Ok(())
}

/// `int_{|y| < dx/2} y kappa(y) dy`.
fn central_moment(kernel: &KernelSpec, dx: f64) -> f64 {
    let (z, w) = gauss_legendre(16);
    let h = dx / 4.0;
    z.iter()
        .zip(&w)
        .map(|(zi, wi)| {
            let y = h * (1.0 + zi);
            h * wi * y * (kernel.eval(y) - kernel.eval(-y))
        })
        .sum()
}

/// `T f` at every node of the grid of `f`: the midpoint sum
/// `dx sum_{j != i} f_j kappa(x_i - x_j)` over the cells away from the
/// singularity, which pairs `+-h` symmetrically, and `-f'(x_i) int y kappa`
/// over the central cell.
fn apply_full(f: &GridFunction, kernel: &KernelSpec) -> Result<GridFunction> {
    if f.tail != 0.0 {
        return Err(invalid("f", "T is applied to decaying functions only (nonzero tail)"));
    }
    principal_value_ok(kernel, f)?;
    let spec = f.spec;
    let cells = spec.cells();
    let dx = spec.spacing;
    let taps: Vec<f64> =
        (0..=2 * cells).map(|m| if m == cells { 0.0 } else { kernel.eval((m as f64 - cells as f64) * dx) }).collect();
    let conv = CentredConvolver::new(&f.values).apply(&taps);
    let moment = central_moment(kernel, dx);
    let n = f.values.len();
    let values = conv
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
            let slope = (f.values[hi] - f.values[lo]) / ((hi - lo) as f64 * dx);
            v * dx - slope * moment
        })
        .collect();
    GridFunction::new(spec, values)
}

/// `T f` on the inner half-grid.
pub fn apply_t(f: &GridFunction, kernel: &KernelSpec) -> Result<GridFunction> {
    let inner = f.spec.inner()?;
    apply_full(f, kernel)?.restrict(inner)
}

/// `(||T f||_p, ||f||_p)` on the line, one entry per `p`. On the grid the
/// sums are trapezoidal; beyond `[-L, L]` (where `f` vanishes) `T f` is the
/// direct sum, integrated with geometric Gauss-Legendre panels, and past
/// `1e6 L` it is continued as `|x|^{-a}` with `a` the kernel's tail exponent.
/// An infinite norm is returned when `p a <= 1`.
pub fn operator_norms(f: &GridFunction, kernel: &KernelSpec, ps: &[f64]) -> Result<Vec<(f64, f64)>> {
    for &p in ps {
        if !(p >= 1.0) || p.is_infinite() {
            return Err(invalid("p", format!("{p} must lie in [1, inf)")));
        }
    }
    let tf = apply_full(f, kernel)?;
    let spec = f.spec;
    let l = spec.half_extent;
    let xs = spec.xs();
    let dx = spec.spacing;
    let at = |x: f64| -> f64 { xs.iter().zip(&f.values).map(|(y, v)| v * kernel.eval(x - y)).sum::<f64>() * dx };

    let (z, w) = gauss_legendre(8);
    let octaves = (FAR_REACH.log2()).ceil() as usize;
    let ratio = 2f64.powf(1.0 / PANELS_PER_OCTAVE as f64);
    let mut outer = Vec::new();
    let mut a = l;
    for _ in 0..octaves * PANELS_PER_OCTAVE {
        let b = a * ratio;
        for (zi, wi) in z.iter().zip(&w) {
            outer.push((0.5 * (a + b) + 0.5 * (b - a) * zi, 0.5 * (b - a) * wi));
        }
        a = b;
    }
    let reach = a;
    let samples: Vec<(f64, f64, f64)> = outer.par_iter().map(|&(x, wx)| (wx, at(x), at(-x))).collect();
    let edge = (at(reach).abs(), at(-reach).abs());
    let exponent = kernel.tail_exponent();

    ps.iter()
        .map(|&p| {
            let grid = lp_norm_slice(&tf.values, dx, p)?.powf(p);
            let far: f64 = samples.iter().map(|(wx, u, v)| wx * (u.abs().powf(p) + v.abs().powf(p))).sum();
            let rest = if edge.0 == 0.0 && edge.1 == 0.0 {
                0.0
            } else if p * exponent > 1.0 {
                (edge.0.powf(p) + edge.1.powf(p)) * reach / (p * exponent - 1.0)
            } else {
                f64::INFINITY
            };
            Ok(((grid + far + rest).powf(1.0 / p), lp_norm(f, p)?))
        })
        .collect()
}

/// `||T f||_p / ||f||_p` for each `p`.
pub fn norm_ratios(f: &GridFunction, kernel: &KernelSpec, ps: &[f64]) -> Result<Vec<f64>> {
    operator_norms(f, kernel, ps)?
        .into_iter()
        .map(|(t, n)| if n > 0.0 { Ok(t / n) } else { Err(invalid("f", "zero input has no norm ratio")) })
        .collect()
}
