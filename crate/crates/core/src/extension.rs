//! The extension `f_t = Q_t f` (symbol `exp(-t |xi|^{alpha/2})`), its
//! `t`-derivative, and the transition semigroup `P_s`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{periodic_images, stable_density, StableKernel};
use crate::error::{invalid, Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::params::StableParams;
use crate::quad::TimeGrid;
use crate::spectral::{convolve, CentredConvolver, Torus};

/// Default torus padding: the torus period is `DEFAULT_PAD * 2L`.
pub const DEFAULT_PAD: usize = 4;

/// `f` transformed once onto a padded torus, ready for spectral multipliers.
#[derive(Debug, Clone)]
pub struct TorusSpectrum {
    pub spec: GridSpec,
    pub torus: Torus,
    pub spectrum: Vec<Complex64>,
    pub tail: f64,
    /// Convolver holding `f - tail`, for image corrections.
    images: Option<CentredConvolver>,
}

impl TorusSpectrum {
    pub fn new(f: &GridFunction, pad: usize) -> Result<Self> {
        let torus = Torus::for_grid(&f.spec, pad, 1)?;
        let shifted: Vec<f64> = f.values.iter().map(|v| v - f.tail).collect();
        let spectrum = torus.forward_real(&torus.embed(&f.spec, &shifted));
        let images = (pad >= 2).then(|| CentredConvolver::new(&shifted));
        Ok(Self { spec: f.spec, torus, spectrum, tail: f.tail, images })
    }

    /// Full torus array of `m(D) (f - tail)`.
    pub fn apply(&self, m: impl Fn(f64) -> f64) -> Vec<f64> {
        self.torus.apply(&self.spectrum, m)
    }

    /// Grid samples of `m(D) f`, with `m(0) * tail` added back. The result
    /// is the periodic convolution on the torus.
    pub fn apply_on_grid(&self, m: impl Fn(f64) -> f64) -> Result<GridFunction> {
        let tail = self.tail * m(0.0);
        let full = self.apply(m);
        let values = self.torus.extract(&self.spec, &full, 1).into_iter().map(|v| v + tail).collect();
        GridFunction::with_tail(self.spec, values, tail)
    }

    /// `d_t^order` of the stable semigroup with symbol `exp(-t |xi|^beta)`
    /// applied to `f` on the line: the torus result with the periodic images
    /// of the kernel removed.
    pub fn stable_on_grid(&self, beta: f64, t: f64, order: usize) -> Result<GridFunction> {
        let symbol = move |xi: f64| {
            let a = xi.abs().powf(beta);
            (-a).powi(order as i32) * (-t * a).exp()
        };
        let mut out = self.apply_on_grid(symbol)?;
        let Some(conv) = &self.images else {
            return Ok(out);
        };
        let dx = self.spec.spacing;
        let cells = self.spec.cells();
        let images = periodic_images(beta, t, order, dx, 2 * cells, self.torus.n);
        for (v, c) in out.values.iter_mut().zip(conv.apply(&images)) {
            *v -= c * dx;
        }
        Ok(out)
    }
}

/// Extension symbol `exp(-t |xi|^{alpha/2})`.
pub fn extension_symbol(alpha: f64, t: f64) -> impl Fn(f64) -> f64 {
    move |xi: f64| (-t * xi.abs().powf(alpha / 2.0)).exp()
}

/// `d/dt` of [`extension_symbol`].
pub fn extension_symbol_dt(alpha: f64, t: f64) -> impl Fn(f64) -> f64 {
    move |xi: f64| {
        let a = xi.abs().powf(alpha / 2.0);
        -a * (-t * a).exp()
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(invalid("t", format!("{t} must be > 0")))
    }
}

/// One cached level of an [`ExtensionField`].
#[derive(Debug, Clone)]
pub struct Slice {
    pub t: f64,
    pub values: GridFunction,
    pub dvalues: GridFunction,
}

/// `f` together with lazily built, shared slices `f_t` and `d_t f_t`.
#[derive(Debug)]
pub struct ExtensionField {
    pub base: GridFunction,
    pub params: StableParams,
    pub tgrid: TimeGrid,
    pub spectrum: TorusSpectrum,
    /// Torus padding; `1` means the grid is treated as periodic.
    pub pad: usize,
    cache: Mutex<HashMap<u64, Arc<OnceLock<Arc<Slice>>>>>,
}

impl ExtensionField {
    pub fn new(base: GridFunction, params: StableParams, tgrid: TimeGrid) -> Result<Self> {
        Self::with_pad(base, params, tgrid, DEFAULT_PAD)
    }

    pub fn with_pad(base: GridFunction, params: StableParams, tgrid: TimeGrid, pad: usize) -> Result<Self> {
        params.require_1d("the extension field")?;
        if base.spec.dim != 1 {
            return Err(Error::Unsupported("the extension field is one-dimensional".into()));
        }
        let spectrum = TorusSpectrum::new(&base, pad)?;
        Ok(Self { base, params, tgrid, spectrum, pad, cache: Mutex::new(HashMap::new()) })
    }

    pub fn spec(&self) -> GridSpec {
        self.base.spec
    }

    pub fn is_periodic(&self) -> bool {
        self.pad == 1
    }

    /// `(f_t, d_t f_t)` on the grid; concurrent requests for one `t` compute once.
    pub fn slice(&self, t: f64) -> Result<Arc<Slice>> {
        check_t(t)?;
        let cell = {
            let mut map = self.cache.lock().map_err(|_| Error::Unsupported("poisoned slice cache".into()))?;
            map.entry(t.to_bits()).or_default().clone()
        };
        if let Some(s) = cell.get() {
            return Ok(s.clone());
        }
        let built = self.build_slice(t)?;
        Ok(cell.get_or_init(|| Arc::new(built)).clone())
    }

    fn build_slice(&self, t: f64) -> Result<Slice> {
        let a = self.params.alpha;
        Ok(Slice {
            t,
            values: self.spectrum.stable_on_grid(a / 2.0, t, 0)?,
            dvalues: self.spectrum.stable_on_grid(a / 2.0, t, 1)?,
        })
    }

    /// All slices on the time grid, built in parallel.
    pub fn slices(&self) -> Result<Vec<Arc<Slice>>> {
        self.tgrid.nodes.par_iter().map(|&t| self.slice(t)).collect()
    }

    pub fn cached_count(&self) -> usize {
        self.cache.lock().map(|m| m.values().filter(|c| c.get().is_some()).count()).unwrap_or(0)
    }
}

/// `Q_t f` on the grid of `f`.
pub fn extend(f: &GridFunction, params: &StableParams, t: f64) -> Result<GridFunction> {
    extend_padded(f, params, t, DEFAULT_PAD)
}

/// `Q_t f` with an explicit torus padding (`pad = 1` treats the grid as periodic).
pub fn extend_padded(f: &GridFunction, params: &StableParams, t: f64, pad: usize) -> Result<GridFunction> {
    check_t(t)?;
    params.require_1d("extend")?;
    TorusSpectrum::new(f, pad)?.stable_on_grid(params.alpha / 2.0, t, 0)
}

/// `Q_t f (x)` at a single point, by the trapezoid rule against `q_t`
/// (`f - tail` only; the tail passes through unchanged).
pub fn extend_at(f: &GridFunction, params: &StableParams, x: f64, t: f64) -> Result<f64> {
    check_t(t)?;
    params.require_1d("extend_at")?;
    let q = StableKernel::get(params.alpha / 2.0, 0, 0);
    let n = f.values.len();
    let sum: f64 = f
        .spec
        .xs()
        .iter()
        .zip(&f.values)
        .enumerate()
        .map(|(i, (y, v))| {
            let w = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
            w * (v - f.tail) * q.eval(t, x - y)
        })
        .sum();
    Ok(f.tail + sum * f.spec.spacing)
}

/// `d/dt Q_t f` on the grid of `f`.
pub fn d_dt_extend(f: &GridFunction, params: &StableParams, t: f64) -> Result<GridFunction> {
    d_dt_extend_padded(f, params, t, DEFAULT_PAD)
}

pub fn d_dt_extend_padded(f: &GridFunction, params: &StableParams, t: f64, pad: usize) -> Result<GridFunction> {
    check_t(t)?;
    params.require_1d("d_dt_extend")?;
    TorusSpectrum::new(f, pad)?.stable_on_grid(params.alpha / 2.0, t, 1)
}

/// `P_s f` on the grid of `f` (symbol `exp(-s |xi|^alpha)`).
pub fn transition(f: &GridFunction, params: &StableParams, s: f64, pad: usize) -> Result<GridFunction> {
    check_t(s)?;
    params.require_1d("transition")?;
    TorusSpectrum::new(f, pad)?.stable_on_grid(params.alpha, s, 0)
}

/// `(int P_s f dx, int f dx)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Invariance {
    pub lhs: f64,
    pub rhs: f64,
}

/// Mass conservation of `P_s` for decaying `f`: `P_s f` is computed by linear
/// convolution and integrated over twice the extent of `f`; the mass it puts
/// beyond that window is added from the distribution function of `p_s`.
pub fn invariance_check(f: &GridFunction, params: &StableParams, s: f64) -> Result<Invariance> {
    check_t(s)?;
    params.require_1d("invariance_check")?;
    if f.tail != 0.0 {
        return Err(invalid("f", "invariance needs an integrable function (tail = 0)"));
    }
    let spec = f.spec;
    let window = 2.0 * spec.half_extent;
    let wide = GridSpec::new(2.0 * window, spec.spacing)?;
    let off = wide.center() - spec.center();
    let mut values = vec![0.0; wide.n()];
    values[off..off + spec.n()].copy_from_slice(&f.values);
    let fw = GridFunction::new(wide, values)?;
    let kernel = stable_density(params, s, &wide)?;
    let pf = convolve(&fw, &kernel.values)?;
    let inside = pf.restrict(GridSpec::new(window, spec.spacing)?)?.integral();
    let law = StableKernel::get(params.alpha, 0, 0);
    let escaped: f64 = spec
        .xs()
        .iter()
        .zip(&f.values)
        .map(|(y, v)| v * (1.0 - law.cdf(s, window - y) + law.cdf(s, -window - y)))
        .sum::<f64>()
        * spec.spacing;
    let rhs = f.integral();
    let lhs = inside + escaped;
    let scale = rhs.abs().max(f.sup_norm() * spec.spacing);
    if scale > 0.0 && ((lhs - rhs) / scale).abs() > 1e-5 {
        return Err(Error::EstimateViolation(format!("mass not conserved: {lhs} vs {rhs}")));
    }
    Ok(Invariance { lhs, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::Fixture;
    use std::f64::consts::PI;

    #[test]
    fn constants_are_fixed() {
        let spec = GridSpec::new(8.0, 1.0 / 8.0).unwrap();
        let one = Fixture::Constant(1.0).sample(spec).unwrap();
        let p = StableParams::one_d(1.5).unwrap();
        let e = extend(&one, &p, 2.0).unwrap();
        assert!(e.values.iter().all(|v| (v - 1.0).abs() < 1e-15));
        assert_eq!(e.tail, 1.0);
        let d = d_dt_extend(&one, &p, 2.0).unwrap();
        assert!(d.values.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn pure_frequency() {
        let spec = GridSpec::new(16.0 * PI, PI / 256.0).unwrap();
        let f = Fixture::Cos.sample(spec).unwrap();
        let p = StableParams::one_d(1.3).unwrap();
        for t in [0.1, 1.0, 3.0] {
            let e = extend_padded(&f, &p, t, 1).unwrap();
            let d = d_dt_extend_padded(&f, &p, t, 1).unwrap();
            for (x, (v, dv)) in spec.xs().iter().zip(e.values.iter().zip(&d.values)) {
                assert!((v - (-t).exp() * x.cos()).abs() < 1e-12);
                assert!((dv + (-t).exp() * x.cos()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cache_computes_once() {
        let spec = GridSpec::new(8.0, 1.0 / 8.0).unwrap();
        let f = Fixture::Gauss.sample(spec).unwrap();
        let field =
            ExtensionField::new(f, StableParams::one_d(1.5).unwrap(), TimeGrid::log_spaced(0.1, 10.0, 16).unwrap())
                .unwrap();
        let a = field.slice(1.0).unwrap();
        let b = field.slice(1.0).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        let all = field.slices().unwrap();
        assert_eq!(all.len(), 16);
        assert_eq!(field.cached_count(), 17);
    }
}
