//! Littlewood-Paley square functions of the extension `f_t = Q_t f`, the
//! area and `G^*` functionals, and the non-tangential and Hardy-Littlewood
//! maximal functions.
//!
//! A [`Functionals`] engine takes `f` on `S = [-L, L]`, embeds it in the
//! working grid `[-2L, 2L]`, computes the per-level energies on `S` and
//! reports values on `E = [-L/2, L/2]`.

mod jump;
mod maximal;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

pub use jump::{gamma_alpha, gamma_full, gamma_truncated};
use jump::{gamma_inner, gamma_periodic, FarModel, JumpTable, LineProfile, PERIODS};
pub use maximal::hl_values;
use maximal::{sliding_max, sliding_max_periodic};

use crate::density::StableKernel;
use crate::error::{invalid, Error, Result};
use crate::extension::{ExtensionField, TorusSpectrum};
use crate::grid::{lp_norm_slice, GridFunction, GridSpec};
use crate::params::StableParams;
use crate::quad::{composite_gl, gauss_legendre, integrate_converged, integrate_log, TimeGrid};
use crate::spectral::correlate_symmetric;

/// Largest relative move of `N_alpha` allowed when the time grid is refined.
const SUP_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FunctionalName {
    #[serde(rename = "G_up")]
    GUp,
    #[serde(rename = "G_arrow")]
    GArrow,
    #[serde(rename = "G_arrow_alpha")]
    GArrowAlpha,
    #[serde(rename = "G")]
    G,
    #[serde(rename = "G_alpha")]
    GAlpha,
    #[serde(rename = "A")]
    A,
    #[serde(rename = "G_star_arrow")]
    GStarArrow,
    #[serde(rename = "G_star_up")]
    GStarUp,
    #[serde(rename = "G_star")]
    GStar,
    #[serde(rename = "L_star")]
    LStar,
    #[serde(rename = "N_alpha")]
    NAlpha,
    #[serde(rename = "HL_max")]
    HlMax,
}

impl FunctionalName {
    pub const ALL: [FunctionalName; 12] = [
        Self::GUp,
        Self::GArrow,
        Self::GArrowAlpha,
        Self::G,
        Self::GAlpha,
        Self::A,
        Self::GStarArrow,
        Self::GStarUp,
        Self::GStar,
        Self::LStar,
        Self::NAlpha,
        Self::HlMax,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::GUp => "G_up",
            Self::GArrow => "G_arrow",
            Self::GArrowAlpha => "G_arrow_alpha",
            Self::G => "G",
            Self::GAlpha => "G_alpha",
            Self::A => "A",
            Self::GStarArrow => "G_star_arrow",
            Self::GStarUp => "G_star_up",
            Self::GStar => "G_star",
            Self::LStar => "L_star",
            Self::NAlpha => "N_alpha",
            Self::HlMax => "HL_max",
        }
    }

    /// Whether the functional depends on `lambda`.
    pub fn uses_lambda(&self) -> bool {
        matches!(self, Self::GStarArrow | Self::GStarUp | Self::GStar)
    }
}

impl fmt::Display for FunctionalName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FunctionalName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse(format!("unknown functional `{s}`")))
    }
}

/// One functional evaluated on the report grid.
#[derive(Debug, Clone, Serialize)]
pub struct FunctionalReport {
    pub name: FunctionalName,
    pub params: Option<StableParams>,
    pub lambda: Option<f64>,
    #[serde(skip)]
    pub values: GridFunction,
    /// `||values||_p` on the report grid, keyed by `p`.
    pub p_norms: BTreeMap<String, f64>,
    /// `L^2` norm over the whole line: the working grid plus the far-field
    /// model, where one is available.
    pub l2_extended: Option<f64>,
    /// Bound on the part of the functional coming from `t > t_max`.
    pub error_bar: Option<f64>,
    /// Comparison constants and diagnostics.
    pub constants: BTreeMap<String, f64>,
}

fn p_key(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

impl FunctionalReport {
    fn build(
        name: FunctionalName,
        params: Option<StableParams>,
        lambda: Option<f64>,
        values: GridFunction,
        ps: &[f64],
    ) -> Result<Self> {
        let mut p_norms = BTreeMap::new();
        for &p in ps {
            p_norms.insert(p_key(p), lp_norm_slice(&values.values, values.spec.spacing, p)?);
        }
        Ok(Self {
            name,
            params,
            lambda,
            values,
            p_norms,
            l2_extended: None,
            error_bar: None,
            constants: BTreeMap::new(),
        })
    }

    pub fn norm(&self, p: f64) -> Option<f64> {
        self.p_norms.get(&p_key(p)).copied()
    }

    pub fn sup(&self) -> f64 {
        self.values.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `M(f)` at every node of the grid of `f`.
pub fn hl_maximal(f: &GridFunction) -> Result<FunctionalReport> {
    if f.spec.dim != 1 {
        return Err(Error::Unsupported("the maximal function is one-dimensional".into()));
    }
    let values = GridFunction::new(f.spec, hl_values(f))?;
    FunctionalReport::build(FunctionalName::HlMax, None, None, values, &[2.0])
}

/// `K_t^lambda(x) = t^{-2/alpha} (t^{2/alpha} / (t^{2/alpha} + |x|))^lambda`, `d = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaKernel {
    pub lambda: f64,
    pub t: f64,
    pub alpha: f64,
}

impl LambdaKernel {
    pub fn new(lambda: f64, t: f64, params: &StableParams) -> Result<Self> {
        params.require_1d("the lambda kernel")?;
        if !(lambda > 1.0 && lambda.is_finite()) {
            return Err(invalid("lambda", format!("{lambda} must be > 1")));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid("t", format!("{t} must be > 0")));
        }
        Ok(Self { lambda, t, alpha: params.alpha })
    }

    pub fn radius(&self) -> f64 {
        self.t.powf(2.0 / self.alpha)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let r = self.radius();
        (r / (r + x.abs())).powf(self.lambda) / r
    }

    /// `int_a^b K` for `0 <= a <= b`, `b` possibly infinite.
    fn half_integral(&self, a: f64, b: f64) -> f64 {
        let r = self.radius();
        let e = 1.0 - self.lambda;
        let upper = if b.is_finite() { (r + b).powf(e) } else { 0.0 };
        r.powf(-e) * ((r + a).powf(e) - upper) / (self.lambda - 1.0)
    }

    /// `int_a^b K` in closed form.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if a > b {
            -self.integral(b, a)
        } else if a >= 0.0 {
            self.half_integral(a, b)
        } else if b <= 0.0 {
            self.half_integral(-b, -a)
        } else {
            self.half_integral(0.0, -a) + self.half_integral(0.0, b)
        }
    }

    /// `||K_t^lambda||_1` by quadrature.
    pub fn mass(&self) -> Result<f64> {
        let r = self.radius();
        let far = 1e12 * r;
        let core = integrate_converged("kernel core", |x| self.eval(x), 0.0, r, 1e-12, 0.0)?;
        let body = integrate_log("kernel body", |x| self.eval(x), r, far, 1e-12, 0.0)?;
        Ok(2.0 * (core + body + self.half_integral(far, f64::INFINITY)))
    }
}

/// `sup_u (1 + |u|)^{-lambda0} / q_1(u)`: the smallest `c` with
/// `K_t^{lambda0} <= c q_t` for every `t`.
pub fn comparability_constant(params: &StableParams) -> Result<f64> {
    params.require_1d("the comparability constant")?;
    let q = StableKernel::get(params.alpha / 2.0, 0, 0);
    let lambda = params.lambda0();
    let ratio = |u: f64| (1.0 + u).powf(-lambda) / q.unit(u);
    let mut best = ratio(0.0);
    let n = 4000;
    for j in 0..=n {
        let u = 1e-3 * (1e15f64).powf(j as f64 / n as f64);
        best = best.max(ratio(u));
    }
    Ok(best)
}

/// `int_0^inf y psi(y)^2 dy` with `psi = d_t q_t` at `t = 1`: the far field
/// of `G_up` is `m0^2 (alpha/2) C / x^2`.
fn up_tail_constant(alpha: f64) -> Result<f64> {
    let psi = StableKernel::get(alpha / 2.0, 1, 0);
    let g = |y: f64| y * psi.unit(y).powi(2);
    let top = 1e6;
    let head = integrate_converged("G_up tail constant", g, 0.0, 4.0, 1e-7, 0.0)?;
    let body = integrate_log("G_up tail constant", g, 4.0, top, 1e-7, 0.0)?;
    // psi ~ c y^{-1-alpha/2} beyond `top`.
    let rest = psi.unit(top).powi(2) * top * top / alpha;
    Ok(head + body + rest)
}

/// `int_0^inf y gamma(y) dy` with `gamma` the truncated jump energy of
/// `q_1` at radius 1: the far field of `G_arrow_alpha` is `m0^2 (alpha/2) C / x^2`.
fn arrow_tail_constant(alpha: f64) -> Result<f64> {
    let q = StableKernel::get(alpha / 2.0, 0, 0);
    let (z, w) = gauss_legendre(16);
    let e = 2.0 - alpha;
    // u = s^{1/e} turns u^{-1-alpha} du into u^{-2} ds / e.
    let energy = |y: f64| {
        let qy = q.unit(y);
        let panels = 4;
        let mut sum = 0.0;
        for p in 0..panels {
            let mid = (p as f64 + 0.5) / panels as f64;
            for (zi, wi) in z.iter().zip(&w) {
                let s = mid + 0.5 * zi / panels as f64;
                let u = s.powf(1.0 / e);
                let (a, b) = (q.unit(y + u) - qy, q.unit(y - u) - qy);
                sum += wi * (a * a + b * b) / (u * u);
            }
        }
        0.5 * sum / panels as f64 / e
    };
    let g = |y: f64| y * energy(y);
    let head = composite_gl(g, 0.0, 4.0, 64, 8);
    let body = composite_gl(|u| g(u.exp()) * u.exp(), 4f64.ln(), 1e4f64.ln(), 64, 8);
    Ok(head + body)
}

/// `C(alpha)` with `||G_arrow_alpha f||_2 = C(alpha) ||f||_2` for every `f`:
/// `C^2 = int_0^inf tau e^{-2 tau} int_{|u| < tau^{2/alpha}} (2 - 2 cos u) |u|^{-1-alpha} du dtau`.
pub fn horizontal_symbol_constant(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid("alpha", format!("{alpha} must lie in (0, 2)")));
    }
    let e = 2.0 - alpha;
    let bump = |u: f64| 4.0 * (0.5 * u).sin().powi(2);
    // Below u = 1 substitute v = u^{2-alpha}; the integrand becomes bump(u) / u^2.
    let near = |r: f64| {
        let g = |v: f64| {
            let u = v.powf(1.0 / e);
            if u == 0.0 {
                1.0
            } else {
                bump(u) / (u * u)
            }
        };
        composite_gl(g, 0.0, r.min(1.0).powf(e), 4, 8) / e
    };
    let far = |r: f64| {
        if r <= 1.0 {
            0.0
        } else {
            composite_gl(|u| bump(u) * u.powf(-1.0 - alpha), 1.0, r, r.ceil() as usize, 8)
        }
    };
    let inner = |tau: f64| {
        let r = tau.powf(2.0 / alpha);
        2.0 * (near(r) + far(r))
    };
    let c2 = composite_gl(
        |s| {
            let tau = s.exp();
            tau * tau * (-2.0 * tau).exp() * inner(tau)
        },
        1e-8f64.ln(),
        40f64.ln(),
        160,
        8,
    );
    Ok(c2.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Energy {
    /// `(d_t f_t)^2`.
    Up,
    /// `Gamma_alpha(f_t, f_t)`.
    Truncated,
    /// The untruncated jump energy.
    Full,
}

/// Per-level energies of one input, shared by all functionals.
#[derive(Debug)]
pub struct Functionals {
    params: StableParams,
    input: GridFunction,
    field: ExtensionField,
    report_spec: GridSpec,
    model: Option<FarModel>,
    table: JumpTable,
    p_list: Vec<f64>,
    up: OnceLock<Vec<Vec<f64>>>,
    truncated: OnceLock<Vec<Vec<f64>>>,
    full: OnceLock<Vec<Vec<f64>>>,
}

impl Functionals {
    /// Engine for `f` on the line (`f` vanishes or equals its tail outside its grid).
    pub fn new(f: &GridFunction, params: StableParams, tgrid: TimeGrid) -> Result<Self> {
        let spec = Self::check(f, &params)?;
        let wide = GridSpec::new(2.0 * spec.half_extent, spec.spacing)?;
        let off = wide.center() - spec.center();
        let mut values = vec![f.tail; wide.n()];
        values[off..off + spec.n()].copy_from_slice(&f.values);
        let base = GridFunction::with_tail(wide, values, f.tail)?;
        let field = ExtensionField::new(base, params, tgrid)?;
        let model = Some(FarModel::new(f, params.alpha));
        let table = JumpTable::new(params.alpha, spec.cells() / 2);
        Ok(Self::assemble(f, params, field, model, table))
    }

    /// Engine for a periodic `f` (its grid is one period; the end samples agree).
    pub fn periodic(f: &GridFunction, params: StableParams, tgrid: TimeGrid) -> Result<Self> {
        let spec = Self::check(f, &params)?;
        let field = ExtensionField::with_pad(f.clone(), params, tgrid, 1)?;
        let table = JumpTable::new(params.alpha, PERIODS * spec.cells());
        Ok(Self::assemble(f, params, field, None, table))
    }

    fn check(f: &GridFunction, params: &StableParams) -> Result<GridSpec> {
        params.require_1d("the square functions")?;
        let spec = f.spec;
        if spec.dim != 1 {
            return Err(Error::Unsupported("the square functions are one-dimensional".into()));
        }
        if !spec.cells().is_multiple_of(4) || spec.cells() < 32 {
            return Err(invalid("grid", "need 2L/dx divisible by 4 and at least 32"));
        }
        Ok(spec)
    }

    fn assemble(
        f: &GridFunction,
        params: StableParams,
        field: ExtensionField,
        model: Option<FarModel>,
        table: JumpTable,
    ) -> Self {
        let report_spec = f.spec.inner().expect("checked divisibility");
        Self {
            params,
            input: f.clone(),
            field,
            report_spec,
            model,
            table,
            p_list: vec![2.0],
            up: OnceLock::new(),
            truncated: OnceLock::new(),
            full: OnceLock::new(),
        }
    }

    /// Norms recorded in every report.
    pub fn with_p_norms(mut self, ps: &[f64]) -> Self {
        self.p_list = ps.to_vec();
        self
    }

    pub fn params(&self) -> &StableParams {
        &self.params
    }

    pub fn input(&self) -> &GridFunction {
        &self.input
    }

    pub fn field(&self) -> &ExtensionField {
        &self.field
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.field.tgrid
    }

    /// Grid `E` on which values are reported.
    pub fn report_spec(&self) -> GridSpec {
        self.report_spec
    }

    pub fn is_periodic(&self) -> bool {
        self.model.is_none()
    }

    /// `||f||_2` of the samples (over one period when periodic).
    pub fn input_l2(&self) -> f64 {
        let dx = self.input.spec.spacing;
        self.domain(&self.input.values).iter().map(|v| v * v * dx).sum::<f64>().sqrt()
    }

    /// The part of an `S`-array that tiles the line: one period, or all of `S`.
    fn domain<'a>(&self, values: &'a [f64]) -> &'a [f64] {
        if self.is_periodic() {
            &values[..self.input.spec.cells()]
        } else {
            values
        }
    }

    /// `S`-part of an array on the field grid.
    fn on_input<'a>(&self, values: &'a [f64]) -> &'a [f64] {
        let off = self.field.spec().center() - self.input.spec.center();
        &values[off..off + self.input.spec.n()]
    }

    /// `E`-part of an array on `S`.
    fn on_report<'a>(&self, values: &'a [f64]) -> &'a [f64] {
        let off = self.input.spec.center() - self.report_spec.center();
        &values[off..off + self.report_spec.n()]
    }

    fn levels(&self, which: Energy) -> Result<&[Vec<f64>]> {
        let cell = match which {
            Energy::Up => &self.up,
            Energy::Truncated => &self.truncated,
            Energy::Full => &self.full,
        };
        if let Some(v) = cell.get() {
            return Ok(v);
        }
        let built = self.time_grid().nodes.par_iter().map(|&t| self.level(t, which)).collect::<Result<Vec<_>>>()?;
        Ok(cell.get_or_init(|| built))
    }

    fn level(&self, t: f64, which: Energy) -> Result<Vec<f64>> {
        let slice = self.field.slice(t)?;
        let alpha = self.params.alpha;
        let radius = match which {
            Energy::Up => {
                return Ok(self.on_input(&slice.dvalues.values).iter().map(|v| v * v).collect());
            }
            Energy::Truncated => self.params.radius(t),
            Energy::Full => f64::INFINITY,
        };
        let values = &slice.values.values;
        Ok(match &self.model {
            None => gamma_periodic(&self.table, alpha, self.input.spec, values, radius),
            Some(model) => {
                let spec = self.field.spec();
                let profile = LineProfile { spec, values, model, t };
                gamma_inner(&self.table, alpha, spec, values, model.tail, radius, &profile)
            }
        })
    }

    /// `sum_t w_t factor(t) level_t` on `S`, in time-grid order.
    fn square(&self, which: Energy, factor: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        let levels = self.levels(which)?;
        let tg = self.time_grid();
        let mut acc = vec![0.0; self.input.spec.n()];
        for ((level, &t), &w) in levels.iter().zip(&tg.nodes).zip(&tg.weights) {
            let c = w * factor(t);
            for (a, v) in acc.iter_mut().zip(level) {
                *a += c * v;
            }
        }
        Ok(acc)
    }

    /// `sum_t w_t v_t` for per-level arrays on `E` built in parallel.
    fn accumulate(&self, per_level: impl Fn(usize, f64) -> Result<Vec<f64>> + Sync) -> Result<Vec<f64>> {
        let tg = self.time_grid();
        let parts = (0..tg.len()).into_par_iter().map(|j| per_level(j, tg.nodes[j])).collect::<Result<Vec<_>>>()?;
        let mut acc = vec![0.0; self.report_spec.n()];
        for (part, &w) in parts.iter().zip(&tg.weights) {
            for (a, v) in acc.iter_mut().zip(part) {
                *a += w * v;
            }
        }
        Ok(acc)
    }

    fn report(&self, name: FunctionalName, lambda: Option<f64>, squares_on_e: &[f64]) -> Result<FunctionalReport> {
        let values = squares_on_e.iter().map(|v| v.max(0.0).sqrt()).collect();
        let values = GridFunction::new(self.report_spec, values)?;
        FunctionalReport::build(name, Some(self.params), lambda, values, &self.p_list)
    }

    /// `(int of the square over the line)` from `S` plus the `x^{-2}` far field.
    fn extended_square(&self, square_on_s: &[f64], tail_constant: Option<f64>) -> Option<f64> {
        let dx = self.input.spec.spacing;
        let grid: f64 = self.domain(square_on_s).iter().sum::<f64>() * dx;
        match &self.model {
            None => Some(grid),
            Some(m) => tail_constant.map(|c| {
                let l = self.input.spec.half_extent;
                grid + m.m0 * m.m0 * 0.5 * self.params.alpha * c * (1.0 / (l - m.center) + 1.0 / (l + m.center))
            }),
        }
    }

    /// Time-tail bounds on the squares, `int_{t_max}^inf`, for the energies.
    fn tail_bounds(&self) -> Option<(f64, f64, f64)> {
        let m = self.model.as_ref()?;
        let a = self.params.alpha;
        let tmax = self.time_grid().t_max;
        let decay = tmax.powf(-4.0 / a) * m.mass * m.mass;
        let c_up = 2.0 / (a * PI) * gamma(2.0 / a + 1.0);
        let c_grad = 2.0 / (a * PI) * gamma(4.0 / a);
        let c_sup = gamma(2.0 / a + 1.0) / PI;
        let up = c_up * c_up * 0.25 * a * decay;
        let truncated = 2.0 * c_grad * c_grad / (2.0 - a) * 0.25 * a * decay;
        let full = truncated + 2.0 * c_sup * c_sup * decay;
        Some((up, truncated, full))
    }

    fn with_ratio(&self, mut r: FunctionalReport, square: Option<f64>, bound: Option<f64>) -> FunctionalReport {
        r.l2_extended = square.map(f64::sqrt);
        r.error_bar = bound.map(f64::sqrt);
        if let Some(l2) = r.l2_extended {
            r.constants.insert("l2_ratio".into(), l2 / self.input_l2());
        }
        r
    }

    /// `G_up(x) = (int t (d_t f_t(x))^2 dt)^{1/2}`.
    pub fn g_up(&self) -> Result<FunctionalReport> {
        let sq = self.square(Energy::Up, |t| t)?;
        let tail = match &self.model {
            Some(_) => Some(up_tail_constant(self.params.alpha)?),
            None => None,
        };
        let r = self.report(FunctionalName::GUp, None, self.on_report(&sq))?;
        let bound = self.tail_bounds().map(|b| b.0);
        Ok(self.with_ratio(r, self.extended_square(&sq, tail), bound))
    }

    /// `G_arrow_alpha(x) = (int t Gamma_alpha(f_t, f_t)(x) dt)^{1/2}`.
    pub fn g_arrow_alpha(&self) -> Result<FunctionalReport> {
        let sq = self.square(Energy::Truncated, |t| t)?;
        let tail = match &self.model {
            Some(_) => Some(arrow_tail_constant(self.params.alpha)?),
            None => None,
        };
        let r = self.report(FunctionalName::GArrowAlpha, None, self.on_report(&sq))?;
        let bound = self.tail_bounds().map(|b| b.1);
        Ok(self.with_ratio(r, self.extended_square(&sq, tail), bound))
    }

    /// The untruncated horizontal functional `G_arrow`.
    pub fn g_arrow(&self) -> Result<FunctionalReport> {
        let sq = self.square(Energy::Full, |t| t)?;
        let r = self.report(FunctionalName::GArrow, None, self.on_report(&sq))?;
        let bound = self.tail_bounds().map(|b| b.2);
        Ok(self.with_ratio(r, self.extended_square(&sq, None), bound))
    }

    fn combine(&self, name: FunctionalName, a: &FunctionalReport, b: &FunctionalReport) -> Result<FunctionalReport> {
        let sq: Vec<f64> = a.values.values.iter().zip(&b.values.values).map(|(x, y)| x * x + y * y).collect();
        let r = self.report(name, None, &sq)?;
        let both = |x: Option<f64>, y: Option<f64>| Some(x? * x? + y? * y?);
        Ok(self.with_ratio(r, both(a.l2_extended, b.l2_extended), both(a.error_bar, b.error_bar)))
    }

    /// `G_alpha = ((G_arrow_alpha)^2 + (G_up)^2)^{1/2}`.
    pub fn g_alpha(&self) -> Result<FunctionalReport> {
        self.combine(FunctionalName::GAlpha, &self.g_arrow_alpha()?, &self.g_up()?)
    }

    /// `G = ((G_arrow)^2 + (G_up)^2)^{1/2}`.
    pub fn g_full(&self) -> Result<FunctionalReport> {
        self.combine(FunctionalName::G, &self.g_arrow()?, &self.g_up()?)
    }

    /// `A_f(x)^2 = int t^{1-2/alpha} int_{|y|<t^{2/alpha}} Gamma_alpha(f_t, f_t)(x - y) dy dt`,
    /// with `Gamma_alpha` taken constant on grid cells.
    pub fn area(&self) -> Result<FunctionalReport> {
        let levels = self.levels(Energy::Truncated)?;
        let a = self.params.alpha;
        let s = self.input.spec;
        let dx = s.spacing;
        let periodic = self.is_periodic();
        let xs = self.report_spec.xs();
        let sq = self.accumulate(|j, t| {
            let g = self.domain(&levels[j]);
            let mut prefix = vec![0.0; g.len() + 1];
            for (i, v) in g.iter().enumerate() {
                prefix[i + 1] = prefix[i] + v * dx;
            }
            let total = prefix[g.len()];
            let start = s.x(0) - 0.5 * dx;
            let primitive = |y: f64| {
                let u = (y - start) / dx;
                let len = g.len() as f64;
                let (whole, u) = if periodic {
                    let q = (u / len).floor();
                    (q * total, u - q * len)
                } else {
                    (0.0, u.clamp(0.0, len))
                };
                let m = (u.floor() as usize).min(g.len() - 1);
                whole + prefix[m] + (u - m as f64) * g[m] * dx
            };
            let r = self.params.radius(t);
            let c = t.powf(1.0 - 2.0 / a);
            Ok(xs.iter().map(|&x| c * (primitive(x + r) - primitive(x - r))).collect())
        })?;
        let mut rep = self.report(FunctionalName::A, None, &sq)?;
        rep.error_bar = self.tail_bounds().map(|b| (2.0 * b.1).sqrt());
        Ok(rep)
    }

    /// `sum_t w_t t (K_t * level_t)` on `E`, with `K_t` integrated over cells.
    fn kernel_square(&self, which: Energy, cell_mass: impl Fn(f64, f64, f64) -> f64 + Sync) -> Result<Vec<f64>> {
        let levels = self.levels(which)?;
        let dx = self.input.spec.spacing;
        let reach = self.input.spec.center() + self.report_spec.center();
        self.accumulate(|j, t| {
            let half: Vec<f64> = (0..=reach)
                .map(|m| {
                    let c = m as f64 * dx;
                    cell_mass(t, c - 0.5 * dx, c + 0.5 * dx)
                })
                .collect();
            let conv = correlate_symmetric(&levels[j], &half);
            Ok(self.on_report(&conv).iter().map(|v| t * v).collect())
        })
    }

    fn require_line(&self, what: &str) -> Result<()> {
        if self.is_periodic() {
            Err(Error::Unsupported(format!("{what} is implemented for functions on the line")))
        } else {
            Ok(())
        }
    }

    fn g_star_square(&self, lambda: f64, which: Energy) -> Result<Vec<f64>> {
        self.require_line("G*")?;
        LambdaKernel::new(lambda, 1.0, &self.params)?;
        let params = self.params;
        self.kernel_square(which, |t, a, b| {
            LambdaKernel::new(lambda, t, &params).map(|k| k.integral(a, b)).unwrap_or(0.0)
        })
    }

    fn g_star_bound(&self, lambda: f64, which: usize) -> Option<f64> {
        let b = self.tail_bounds()?;
        let energy = if which == 0 { b.1 } else { b.0 };
        Some(energy * 2.0 / (lambda - 1.0))
    }

    /// `G*_arrow(x)^2 = int t (K_t^lambda * Gamma_alpha(f_t, f_t))(x) dt`.
    pub fn g_star_arrow(&self, lambda: f64) -> Result<FunctionalReport> {
        let sq = self.g_star_square(lambda, Energy::Truncated)?;
        let mut r = self.report(FunctionalName::GStarArrow, Some(lambda), &sq)?;
        r.error_bar = self.g_star_bound(lambda, 0).map(f64::sqrt);
        Ok(r)
    }

    /// `G*_up(x)^2 = int t (K_t^lambda * (d_t f_t)^2)(x) dt`.
    pub fn g_star_up(&self, lambda: f64) -> Result<FunctionalReport> {
        let sq = self.g_star_square(lambda, Energy::Up)?;
        let mut r = self.report(FunctionalName::GStarUp, Some(lambda), &sq)?;
        r.error_bar = self.g_star_bound(lambda, 1).map(f64::sqrt);
        Ok(r)
    }

    /// `G* = ((G*_arrow)^2 + (G*_up)^2)^{1/2}`.
    pub fn g_star(&self, lambda: f64) -> Result<FunctionalReport> {
        let a = self.g_star_arrow(lambda)?;
        let b = self.g_star_up(lambda)?;
        let sq: Vec<f64> = a.values.values.iter().zip(&b.values.values).map(|(x, y)| x * x + y * y).collect();
        let mut r = self.report(FunctionalName::GStar, Some(lambda), &sq)?;
        r.error_bar = match (a.error_bar, b.error_bar) {
            (Some(x), Some(y)) => Some((x * x + y * y).sqrt()),
            _ => None,
        };
        r.constants.insert("arrow_l2".into(), a.norm(2.0).unwrap_or(f64::NAN));
        r.constants.insert("up_l2".into(), b.norm(2.0).unwrap_or(f64::NAN));
        Ok(r)
    }

    /// `L*(x)^2 = int t Q_t(Gamma_alpha(f_t, f_t))(x) dt`.
    pub fn l_star(&self) -> Result<FunctionalReport> {
        let half_beta = self.params.alpha / 2.0;
        let sq = if self.is_periodic() {
            let levels = self.levels(Energy::Truncated)?;
            self.accumulate(|j, t| {
                let g = GridFunction::new(self.input.spec, levels[j].clone())?;
                let smoothed = TorusSpectrum::new(&g, 1)?.stable_on_grid(half_beta, t, 0)?;
                Ok(self.on_report(&smoothed.values).iter().map(|v| t * v.max(0.0)).collect())
            })?
        } else {
            let q = StableKernel::get(half_beta, 0, 0);
            self.kernel_square(Energy::Truncated, |t, a, b| q.cdf(t, b) - q.cdf(t, a))?
        };
        let mut r = self.report(FunctionalName::LStar, None, &sq)?;
        r.error_bar = self.tail_bounds().map(|b| b.1.sqrt());
        if !self.is_periodic() {
            r.constants.insert("comparability_c".into(), comparability_constant(&self.params)?);
        }
        Ok(r)
    }

    /// `sup{|f_t(y)| : t in tgrid, |x - y| < t^{2/alpha}}` on `E`, together
    /// with the `t -> 0` limit `|f(x)|`; also returns the number of levels
    /// whose window leaves the working grid.
    fn parabolic_sup(&self, tgrid: &TimeGrid, cached: bool) -> Result<(Vec<f64>, usize)> {
        let spec = self.field.spec();
        let dx = spec.spacing;
        let periodic = self.is_periodic();
        let first: Vec<f64> = self.on_report(&self.input.values).iter().map(|v| v.abs()).collect();
        let room = spec.half_extent - self.report_spec.half_extent;
        let parts = tgrid
            .nodes
            .par_iter()
            .map(|&t| {
                let values = if cached {
                    self.field.slice(t)?.values.values.clone()
                } else {
                    self.field.spectrum.stable_on_grid(self.params.alpha / 2.0, t, 0)?.values
                };
                let r = self.params.radius(t);
                let k = ((r / dx - 1e-9).ceil() as usize).saturating_sub(1);
                let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
                let window = if periodic {
                    let cells = spec.cells();
                    let mut w = sliding_max_periodic(&abs[..cells], k);
                    w.push(w[0]);
                    w
                } else {
                    sliding_max(&abs, k)
                };
                let on_e = self.on_report(self.on_input(&window)).to_vec();
                Ok((on_e, !periodic && r > room))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut sup = first;
        let mut clipped = 0;
        for (part, clip) in parts {
            clipped += clip as usize;
            for (s, v) in sup.iter_mut().zip(part) {
                *s = s.max(v);
            }
        }
        Ok((sup, clipped))
    }

    /// The non-tangential maximal function over the parabolic region
    /// `|x - y| < t^{2/alpha}`. Fails if tripling the time nodes moves the
    /// supremum by more than `1e-2` relative; the shift is the error bar.
    pub fn n_alpha(&self) -> Result<FunctionalReport> {
        let (coarse, clipped) = self.parabolic_sup(self.time_grid(), true)?;
        let (fine, _) = self.parabolic_sup(&self.time_grid().refined(3)?, false)?;
        let scale = fine.iter().fold(0.0f64, |m, v| m.max(*v));
        let shift = coarse.iter().zip(&fine).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let rel = if scale > 0.0 { shift / scale } else { 0.0 };
        if rel > SUP_TOLERANCE {
            return Err(Error::NoConvergence { what: "N_alpha time supremum".into(), change: rel });
        }
        let values = GridFunction::new(self.report_spec, fine)?;
        let mut r = FunctionalReport::build(FunctionalName::NAlpha, Some(self.params), None, values, &self.p_list)?;
        r.constants.insert("refinement_shift".into(), rel);
        r.constants.insert("clipped_levels".into(), clipped as f64);
        r.error_bar = Some(shift);
        Ok(r)
    }

    /// `M(f)` on the report grid.
    pub fn hl(&self) -> Result<FunctionalReport> {
        let all = hl_values(&self.input);
        let values = GridFunction::new(self.report_spec, self.on_report(&all).to_vec())?;
        let mut r = FunctionalReport::build(FunctionalName::HlMax, Some(self.params), None, values, &self.p_list)?;
        r.error_bar = Some(0.0);
        Ok(r)
    }

    /// Evaluate one functional by name; `lambda` defaults to `lambda0`.
    pub fn evaluate(&self, name: FunctionalName, lambda: Option<f64>) -> Result<FunctionalReport> {
        let lambda = lambda.unwrap_or_else(|| self.params.lambda0());
        match name {
            FunctionalName::GUp => self.g_up(),
            FunctionalName::GArrow => self.g_arrow(),
            FunctionalName::GArrowAlpha => self.g_arrow_alpha(),
            FunctionalName::G => self.g_full(),
            FunctionalName::GAlpha => self.g_alpha(),
            FunctionalName::A => self.area(),
            FunctionalName::GStarArrow => self.g_star_arrow(lambda),
            FunctionalName::GStarUp => self.g_star_up(lambda),
            FunctionalName::GStar => self.g_star(lambda),
            FunctionalName::LStar => self.l_star(),
            FunctionalName::NAlpha => self.n_alpha(),
            FunctionalName::HlMax => self.hl(),
        }
    }
}

/// `sup_x N(x) / M(x)` over the report grid (points where both vanish are skipped).
pub fn maximal_ratio(n: &FunctionalReport, m: &FunctionalReport) -> Result<f64> {
    if !n.values.spec.same_as(&m.values.spec) {
        return Err(Error::GridMismatch("N and M live on different grids".into()));
    }
    Ok(n.values
        .values
        .iter()
        .zip(&m.values.values)
        .filter(|(a, b)| **a > 0.0 || **b > 0.0)
        .map(|(a, b)| a / b)
        .fold(0.0, f64::max))
}
