//! Stable transition densities `p(s, x)`, the extension kernel `q_t`, their
//! derivatives, `psi = d_t q_t |_{t=1}`, and the Brownian exit law `mu_t`.

mod exit;
mod kernel;
mod profile;
pub mod series;
mod subordination;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use exit::{mu_moment_bounds, ExitLaw, MomentBounds};
pub use kernel::StableKernel;
pub use subordination::{subordination_density, subordinator_density};

use crate::error::{invalid, Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::params::StableParams;
use profile::{image_correction, profile_1d, profile_2d, Family};
use series::{density_coefficient, tail_integral, tail_terms};

/// Torus padding and refinement used for grid tables.
const PAD: usize = 4;
const REFINE: usize = 4;
/// Negative spectral ripple below this magnitude is clamped to zero.
const RIPPLE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildMethod {
    FourierInversion,
    Subordination,
    Scaling,
}

/// Which semigroup a table samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `p(s, .)`, symbol `exp(-s |xi|^alpha)`.
    Transition,
    /// `q_t`, symbol `exp(-t |xi|^{alpha/2})`.
    Extension,
}

/// A density sampled on a grid at a fixed time.
#[derive(Debug, Clone)]
pub struct DensityTable {
    pub params: StableParams,
    pub kind: KernelKind,
    /// `s` for transition tables, `t` for extension tables.
    pub time: f64,
    pub values: GridFunction,
    pub build_method: BuildMethod,
}

impl DensityTable {
    /// Exponent `beta` of the symbol `exp(-time |xi|^beta)`.
    pub fn beta(&self) -> f64 {
        exponent(&self.params, self.kind)
    }

    /// Mass on the grid plus the analytic mass outside it, minus the
    /// sampling alias `sum_{k != 0} exp(-time |2 pi k / dx|^beta)` (1-D).
    pub fn mass(&self) -> f64 {
        let spec = &self.values.spec;
        let alias = if spec.dim == 1 {
            let step = 2.0 * PI / spec.spacing;
            (1..=64).map(|k| 2.0 * (-self.time * (k as f64 * step).powf(self.beta())).exp()).sum()
        } else {
            0.0
        };
        self.values.integral() + outside_mass(self.beta(), self.time, spec) - alias
    }

    /// Largest increase of the table moving away from the origin along the
    /// axes (0 for a radially decreasing profile).
    pub fn monotonicity_defect(&self) -> f64 {
        let spec = self.values.spec;
        let n = spec.n();
        let c = spec.center();
        let v = &self.values.values;
        let line = |idx: &dyn Fn(usize) -> usize| -> f64 {
            let mut worst: f64 = 0.0;
            for i in c..n - 1 {
                worst = worst.max(v[idx(i + 1)] - v[idx(i)]);
                let (a, b) = (2 * c - i, 2 * c - i - 1);
                worst = worst.max(v[idx(b)] - v[idx(a)]);
            }
            worst
        };
        if spec.dim == 1 {
            line(&|i| i)
        } else {
            line(&|i| c * n + i).max(line(&|i| i * n + c))
        }
    }

    /// Check mass (1e-5), symmetry and monotonicity (1e-9 ripple).
    pub fn validate(&self) -> Result<()> {
        let m = self.mass();
        if (m - 1.0).abs() > 1e-5 {
            return Err(Error::EstimateViolation(format!("density mass {m} differs from 1")));
        }
        let d = self.monotonicity_defect();
        if d > RIPPLE {
            return Err(Error::EstimateViolation(format!("density increases by {d:e} away from 0")));
        }
        Ok(())
    }

    /// Value at an off-grid point by interpolation of the unit-time table
    /// and scaling (1-D).
    pub fn eval(&self, x: f64) -> f64 {
        StableKernel::get(self.beta(), 0, 0).eval(self.time, x)
    }
}

fn exponent(params: &StableParams, kind: KernelKind) -> f64 {
    match kind {
        KernelKind::Transition => params.alpha,
        KernelKind::Extension => params.alpha / 2.0,
    }
}

/// Integral of the leading tail terms over the complement of the grid box.
fn outside_mass(beta: f64, time: f64, spec: &GridSpec) -> f64 {
    let l = spec.half_extent;
    if spec.dim == 1 {
        2.0 * tail_integral(&tail_terms(beta, time, 0, 0, 12), l)
    } else {
        (1..=3)
            .map(|n| {
                let a = density_coefficient(beta, 2, n) * time.powi(n as i32);
                let e = n as f64 * beta + 2.0;
                let ang = crate::quad::composite_gl(
                    |th: f64| (l / th.cos()).powf(2.0 - e) / (e - 2.0),
                    0.0,
                    std::f64::consts::FRAC_PI_4,
                    8,
                    8,
                );
                8.0 * a * ang
            })
            .sum()
    }
}

fn check_time(name: &'static str, t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("{t} must be > 0")))
    }
}

fn check_grid(params: &StableParams, spec: &GridSpec) -> Result<()> {
    if params.dim != spec.dim {
        return Err(Error::GridMismatch(format!("params.dim = {} but grid dim = {}", params.dim, spec.dim)));
    }
    Ok(())
}

fn clamp_ripple(mut values: Vec<f64>, spec: &GridSpec) -> Result<Vec<f64>> {
    for (i, v) in values.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite(i));
        }
        if *v < 0.0 {
            if *v < -RIPPLE {
                return Err(Error::EstimateViolation(format!(
                    "density sample {v:e} at index {i} is negative (grid L = {})",
                    spec.half_extent
                )));
            }
            *v = 0.0;
        }
    }
    Ok(values)
}

fn spectral_table(params: &StableParams, kind: KernelKind, time: f64, spec: &GridSpec) -> Result<Vec<f64>> {
    let beta = exponent(params, kind);
    let raw = if spec.dim == 1 {
        profile_1d(Family { beta, time, m: 0, k: 0 }, spec.spacing, spec.cells(), PAD, REFINE)
    } else {
        profile_2d(beta, time, 0, 0, spec.spacing, spec.cells(), PAD)
    };
    clamp_ripple(raw, spec)
}

fn build(
    params: &StableParams,
    kind: KernelKind,
    time: f64,
    spec: &GridSpec,
    method: BuildMethod,
) -> Result<DensityTable> {
    check_time(if kind == KernelKind::Transition { "s" } else { "t" }, time)?;
    check_grid(params, spec)?;
    let values = match method {
        BuildMethod::FourierInversion => spectral_table(params, kind, time, spec)?,
        BuildMethod::Scaling => {
            params.require_1d("scaling tables")?;
            let k = StableKernel::get(exponent(params, kind), 0, 0);
            spec.xs().iter().map(|&x| k.eval(time, x)).collect()
        }
        BuildMethod::Subordination => {
            if kind != KernelKind::Transition {
                return Err(Error::Unsupported("subordination builds transition densities only".into()));
            }
            let xs = spec.xs();
            if spec.dim == 1 {
                xs.iter().map(|&x| subordination_density(params, time, &[x])).collect::<Result<_>>()?
            } else {
                let mut out = Vec::with_capacity(spec.len());
                for &x in &xs {
                    for &y in &xs {
                        out.push(subordination_density(params, time, &[x, y])?);
                    }
                }
                out
            }
        }
    };
    Ok(DensityTable { params: *params, kind, time, values: GridFunction::new(*spec, values)?, build_method: method })
}

/// `p(s, .)` on `spec` by inverse Fourier transform of `exp(-s |xi|^alpha)`.
pub fn stable_density(params: &StableParams, s: f64, spec: &GridSpec) -> Result<DensityTable> {
    build(params, KernelKind::Transition, s, spec, BuildMethod::FourierInversion)
}

pub fn stable_density_with(
    params: &StableParams,
    s: f64,
    spec: &GridSpec,
    method: BuildMethod,
) -> Result<DensityTable> {
    build(params, KernelKind::Transition, s, spec, method)
}

/// `q_t` on `spec` by inverse Fourier transform of `exp(-t |xi|^{alpha/2})`.
pub fn qt_kernel(params: &StableParams, t: f64, spec: &GridSpec) -> Result<DensityTable> {
    build(params, KernelKind::Extension, t, spec, BuildMethod::FourierInversion)
}

pub fn qt_kernel_with(params: &StableParams, t: f64, spec: &GridSpec, method: BuildMethod) -> Result<DensityTable> {
    build(params, KernelKind::Extension, t, spec, method)
}

/// Extremes of `p / min(s^{-d/beta}, s |x|^{-d-beta})` over the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSidedRatio {
    pub ratio_min: f64,
    pub ratio_max: f64,
}

pub fn check_two_sided(table: &DensityTable) -> Result<TwoSidedRatio> {
    let spec = table.values.spec;
    let beta = table.beta();
    let d = spec.dim as f64;
    let t = table.time;
    let inner = spec.half_extent / 2.0;
    let n = spec.n();
    let xs = spec.xs();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for (idx, &v) in table.values.values.iter().enumerate() {
        let r = if spec.dim == 1 { xs[idx].abs() } else { xs[idx / n].hypot(xs[idx % n]) };
        let envelope = t.powf(-d / beta).min(t * r.powf(-d - beta));
        if v <= 0.0 {
            if r <= inner {
                return Err(Error::EstimateViolation(format!("density is {v:e} at |x| = {r}")));
            }
            continue;
        }
        let ratio = v / envelope;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok(TwoSidedRatio { ratio_min: lo, ratio_max: hi })
}

/// `d^k/dx_axis^k p(s, .)` on `spec` by spectral differentiation.
pub fn density_derivative(
    params: &StableParams,
    s: f64,
    k: usize,
    axis: usize,
    spec: &GridSpec,
) -> Result<GridFunction> {
    check_time("s", s)?;
    check_grid(params, spec)?;
    if k != 1 && k != 2 {
        return Err(invalid("k", format!("derivative order {k} not in {{1,2}}")));
    }
    if axis >= spec.dim {
        return Err(invalid("axis", format!("axis {axis} out of range")));
    }
    let values = if spec.dim == 1 {
        profile_1d(Family { beta: params.alpha, time: s, m: 0, k }, spec.spacing, spec.cells(), PAD, REFINE)
    } else {
        profile_2d(params.alpha, s, k, axis, spec.spacing, spec.cells(), PAD)
    };
    GridFunction::new(*spec, values)
}

/// `sup |d^k p| / (min(s^{-k/alpha}, |x|^{-k}) p)` over the grid (1-D).
pub fn derivative_bound_constant(params: &StableParams, s: f64, k: usize, spec: &GridSpec) -> Result<f64> {
    params.require_1d("derivative bound")?;
    let p = stable_density(params, s, spec)?;
    let dp = density_derivative(params, s, k, 0, spec)?;
    let mut c: f64 = 0.0;
    for ((x, v), dv) in spec.xs().iter().zip(&p.values.values).zip(&dp.values) {
        if *v <= 0.0 {
            continue;
        }
        let env = s.powf(-(k as f64) / params.alpha).min(x.abs().powi(-(k as i32)));
        c = c.max(dv.abs() / (env * v));
    }
    Ok(c)
}

/// `psi = d_t q_t |_{t=1}` on `spec` (1-D), symbol `-|xi|^{alpha/2} exp(-|xi|^{alpha/2})`.
///
/// Cross-checked against the exit-law integral on a sample of points; a
/// disagreement above 1e-3 is an error.
pub fn psi(params: &StableParams, spec: &GridSpec) -> Result<GridFunction> {
    let f = psi_unchecked(params, spec)?;
    let err = psi_cross_check(params, &f, 64)?;
    if err > 1e-3 {
        return Err(Error::CrossCheck { what: "psi spectral vs integral form".into(), err, tol: 1e-3 });
    }
    Ok(f)
}

pub fn psi_unchecked(params: &StableParams, spec: &GridSpec) -> Result<GridFunction> {
    params.require_1d("psi")?;
    check_grid(params, spec)?;
    let fam = Family { beta: params.alpha / 2.0, time: 1.0, m: 1, k: 0 };
    GridFunction::new(*spec, profile_1d(fam, spec.spacing, spec.cells(), PAD, REFINE))
}

/// `d/dx psi` on `spec` (1-D).
pub fn psi_derivative(params: &StableParams, spec: &GridSpec) -> Result<GridFunction> {
    params.require_1d("psi")?;
    check_grid(params, spec)?;
    let fam = Family { beta: params.alpha / 2.0, time: 1.0, m: 1, k: 1 };
    GridFunction::new(*spec, profile_1d(fam, spec.spacing, spec.cells(), PAD, REFINE))
}

/// `int_0^inf p(s, x) (1 - 1/(2s)) mu_1(ds)`.
pub fn psi_integral_form(params: &StableParams, x: f64) -> f64 {
    let p = StableKernel::get(params.alpha, 0, 0);
    let mu = ExitLaw { t: 1.0 };
    let (a, b) = (1e-3f64.ln(), 1e10f64.ln());
    let n = 3000;
    let h = (b - a) / n as f64;
    let mut sum = 0.0;
    for j in 0..=n {
        let s = (a + j as f64 * h).exp();
        let w = if j == 0 || j == n { 0.5 } else { 1.0 };
        sum += w * s * p.eval(s, x) * (1.0 - 0.5 / s) * mu.density(s);
    }
    let big = b.exp();
    let e = 0.5 + 1.0 / params.alpha;
    sum * h + p.unit(0.0) / (2.0 * PI.sqrt()) * big.powf(-e) / e
}

/// Largest deviation between the spectral `psi` and the integral form over
/// `samples` evenly spread points of the inner half-grid.
pub fn psi_cross_check(params: &StableParams, f: &GridFunction, samples: usize) -> Result<f64> {
    let spec = f.spec;
    let inner = spec.half_extent / 2.0;
    let c = spec.center();
    let span = (inner / spec.spacing) as usize;
    let stride = (2 * span / samples.max(1)).max(1);
    let mut err: f64 = 0.0;
    let mut i = c - span;
    while i <= c + span {
        let x = spec.x(i);
        err = err.max((f.values[i] - psi_integral_form(params, x)).abs());
        i += stride;
    }
    Ok(err)
}

/// Summary of the `psi` checks on one grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiReport {
    pub psi0: f64,
    /// Grid integral plus analytic tails.
    pub integral: f64,
    /// `sup |psi| / min(1, |x|^{-d-alpha/2})`.
    pub envelope_const: f64,
    /// `sup |psi'| / min(1, |x|^{-d-1-alpha/2})`.
    pub gradient_envelope_const: f64,
    pub cross_check_err: f64,
}

pub fn psi_report(params: &StableParams, spec: &GridSpec) -> Result<PsiReport> {
    let f = psi_unchecked(params, spec)?;
    let df = psi_derivative(params, spec)?;
    let half = params.alpha / 2.0;
    let integral = f.integral() + 2.0 * tail_integral(&tail_terms(half, 1.0, 1, 0, 4), spec.half_extent);
    let mut c0: f64 = 0.0;
    let mut c1: f64 = 0.0;
    for ((x, v), dv) in spec.xs().iter().zip(&f.values).zip(&df.values) {
        let ax = x.abs();
        c0 = c0.max(v.abs() / 1f64.min(ax.powf(-1.0 - half)));
        c1 = c1.max(dv.abs() / 1f64.min(ax.powf(-2.0 - half)));
    }
    Ok(PsiReport {
        psi0: f.values[spec.center()],
        integral,
        envelope_const: c0,
        gradient_envelope_const: c1,
        cross_check_err: psi_cross_check(params, &f, 64)?,
    })
}

/// Periodic images `sum_{k != 0} g(x + k P)` of `g = d_t^m p_beta(t, .)` at
/// `x_j = (j - c) * spacing`, `j = 0..=cells`, for the period `torus_cells * spacing`.
pub(crate) fn periodic_images(beta: f64, t: f64, m: usize, spacing: f64, cells: usize, torus_cells: usize) -> Vec<f64> {
    image_correction(Family { beta, time: t, m, k: 0 }, spacing, cells, torus_cells)
}
