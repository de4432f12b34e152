//! Convolution kernels: the built-in registry, tabulated kernels, and the
//! smooth split `kappa = kappa_1 + kappa_2` at `|x| ~ 1`.

use std::fmt;
use std::io::BufRead;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::GridSpec;
use crate::params::StableParams;

type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    Odd,
    Even,
    None,
}

impl FromStr for Symmetry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "odd" => Ok(Self::Odd),
            "even" => Ok(Self::Even),
            "none" => Ok(Self::None),
            _ => Err(Error::Parse(format!("unknown symmetry `{s}`"))),
        }
    }
}

/// Which growth hypothesis the kernel is claimed to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailClass {
    /// `|kappa| <= c |x|^{-d}`, `|grad kappa| <= c |x|^{-d-1}`.
    Classical,
    /// Tails `|x|^{-(d-1+alpha/2)}` and `|x|^{-(d+alpha/2)}` beyond `|x| = 1`.
    Weakened,
}

/// A real convolution kernel on the line, defined for `x != 0`.
#[derive(Clone)]
pub struct KernelSpec {
    pub name: String,
    pub symmetry: Symmetry,
    pub claimed_tail: TailClass,
    value: Profile,
    derivative: Option<Profile>,
    /// `|x|` beyond which the evaluator is an extrapolation (tables only).
    extent: Option<f64>,
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelSpec")
            .field("name", &self.name)
            .field("symmetry", &self.symmetry)
            .field("claimed_tail", &self.claimed_tail)
            .field("analytic_derivative", &self.derivative.is_some())
            .finish()
    }
}

/// Names accepted by [`KernelSpec::builtin`].
pub const BUILTIN_KERNELS: [&str; 5] = ["test", "test-reflected", "pv-inv", "abs-inv", "fat"];

/// Exponent by which the `fat` kernel's tail exceeds the weakened hypothesis.
const FAT_EXCESS: f64 = 0.2;

impl KernelSpec {
    pub fn new(
        name: impl Into<String>,
        symmetry: Symmetry,
        claimed_tail: TailClass,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), symmetry, claimed_tail, value: Arc::new(value), derivative: None, extent: None }
    }

    pub fn with_derivative(mut self, derivative: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(derivative));
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    /// Analytic derivative, when the kernel carries one.
    pub fn derivative(&self, x: f64) -> Option<f64> {
        self.derivative.as_ref().map(|d| d(x))
    }

    pub fn has_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    /// `sign(x) min(|x|^{-1}, |x|^{-alpha/2})`.
    pub fn test_kernel(params: &StableParams) -> Result<Self> {
        params.require_main_range()?;
        Ok(two_piece("test", params.alpha / 2.0, TailClass::Weakened))
    }

    /// `kappa*(x) = kappa(-x)`.
    pub fn reflected(&self) -> Self {
        let v = self.value.clone();
        let d = self.derivative.clone();
        Self {
            name: format!("{}*", self.name),
            symmetry: self.symmetry,
            claimed_tail: self.claimed_tail,
            value: Arc::new(move |x| v(-x)),
            derivative: d.map(|d| Arc::new(move |x: f64| -d(-x)) as Profile),
            extent: self.extent,
        }
    }

    /// `p.v. 1/x`.
    pub fn principal_value_inverse() -> Self {
        Self::new("pv-inv", Symmetry::Odd, TailClass::Classical, |x| 1.0 / x).with_derivative(|x| -1.0 / (x * x))
    }

    /// `1/|x|`: even, without cancelation.
    pub fn absolute_inverse() -> Self {
        Self::new("abs-inv", Symmetry::Even, TailClass::Classical, |x| 1.0 / x.abs())
            .with_derivative(|x| -x.signum() / (x * x))
    }

    /// As the test kernel with the tail `|x|^{-(alpha/2 - 0.2)}`.
    pub fn fat_tail(params: &StableParams) -> Result<Self> {
        params.require_main_range()?;
        Ok(two_piece("fat", params.alpha / 2.0 - FAT_EXCESS, TailClass::Weakened))
    }

    pub fn builtin(name: &str, params: &StableParams) -> Result<Self> {
        match name {
            "test" => Self::test_kernel(params),
            "test-reflected" => Ok(Self::test_kernel(params)?.reflected()),
            "pv-inv" => Ok(Self::principal_value_inverse()),
            "abs-inv" => Ok(Self::absolute_inverse()),
            "fat" => Self::fat_tail(params),
            _ => Err(invalid("kernel", format!("unknown kernel `{name}`; expected one of {BUILTIN_KERNELS:?}"))),
        }
    }

    /// A tabulated kernel. Odd and even tables list `x > 0` only; tables
    /// without symmetry list both signs. Values are interpolated linearly
    /// and continued by power laws fitted to the two outermost nodes on each
    /// side.
    pub fn from_table(name: impl Into<String>, symmetry: Symmetry, xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if xs.len() != values.len() || xs.len() < 4 {
            return Err(invalid("table", "needs at least 4 (x, value) rows"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("table", "x must be strictly increasing"));
        }
        if xs.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(invalid("table", "non-finite entry"));
        }
        if xs.contains(&0.0) {
            return Err(invalid("table", "x = 0 is not a kernel node"));
        }
        let halves = match symmetry {
            Symmetry::Odd | Symmetry::Even => {
                if xs[0] <= 0.0 {
                    return Err(invalid("table", "symmetric tables list x > 0 only"));
                }
                (None, Some(Branch::new(&xs, &values)?))
            }
            Symmetry::None => {
                let split = xs.partition_point(|x| *x < 0.0);
                let neg: Vec<f64> = xs[..split].iter().rev().map(|x| -x).collect();
                let negv: Vec<f64> = values[..split].iter().rev().cloned().collect();
                let left = (neg.len() >= 2).then(|| Branch::new(&neg, &negv)).transpose()?;
                let right = (xs.len() - split >= 2).then(|| Branch::new(&xs[split..], &values[split..])).transpose()?;
                (left, right)
            }
        };
        let extent = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let (left, right) = (halves.0.map(Arc::new), halves.1.map(Arc::new));
        let value = move |x: f64| -> f64 {
            let side = if x > 0.0 { &right } else { &left };
            match (symmetry, side) {
                (Symmetry::Odd, _) => x.signum() * right.as_ref().map_or(0.0, |b| b.eval(x.abs())),
                (Symmetry::Even, _) => right.as_ref().map_or(0.0, |b| b.eval(x.abs())),
                (Symmetry::None, Some(b)) => b.eval(x.abs()),
                (Symmetry::None, None) => 0.0,
            }
        };
        let mut k = Self::new(name, symmetry, TailClass::Weakened, value);
        k.extent = Some(extent);
        Ok(k)
    }

    /// Read `x,value` rows (an optional header line is skipped).
    pub fn read_csv<R: BufRead>(name: impl Into<String>, symmetry: Symmetry, r: R) -> Result<Self> {
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
                return Err(Error::Parse(format!("line {}: expected `x,value`", i + 1)));
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(v)) => {
                    xs.push(x);
                    vs.push(v);
                }
                _ if i == 0 => continue,
                _ => return Err(Error::Parse(format!("line {}: `{line}` is not numeric", i + 1))),
            }
        }
        Self::from_table(name, symmetry, xs, vs)
    }

    /// Finite values at every grid node `x != 0`, and exact oddness or
    /// evenness where declared.
    pub fn validate(&self, spec: &GridSpec) -> Result<()> {
        for x in spec.xs().into_iter().filter(|x| *x != 0.0) {
            let v = self.eval(x);
            if !v.is_finite() {
                return Err(Error::KernelRejected(format!("{} is not finite at x = {x}", self.name)));
            }
            let mirrored = self.eval(-x);
            let broken = match self.symmetry {
                Symmetry::Odd => mirrored != -v,
                Symmetry::Even => mirrored != v,
                Symmetry::None => false,
            };
            if broken {
                return Err(Error::KernelRejected(format!(
                    "{} is declared {:?} but kappa({x}) = {v}, kappa({}) = {mirrored}",
                    self.name, self.symmetry, -x
                )));
            }
        }
        Ok(())
    }

    /// Decay exponent `a` with `|kappa(x)| ~ |x|^{-a}`, from the log-slope
    /// over the outermost decade (of the table, or `[1e3, 1e4]`). The
    /// fatter side wins; a kernel vanishing there has `a = inf`.
    pub fn tail_exponent(&self) -> f64 {
        let far = self.extent.unwrap_or(1e4);
        let near = far / 10.0;
        [1.0, -1.0]
            .iter()
            .map(|s| {
                let (a, b) = (self.eval(s * near).abs(), self.eval(s * far).abs());
                if b == 0.0 {
                    f64::INFINITY
                } else if a == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    (a / b).ln() / 10f64.ln()
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `(kappa phi(x^2), kappa (1 - phi(x^2)))`; the second part is zero
    /// for `|x| <= 1` and is never evaluated at the origin.
    pub fn decompose(&self) -> (KernelSpec, KernelSpec) {
        let (v1, v2) = (self.value.clone(), self.value.clone());
        let inner = move |x: f64| {
            let c = cutoff(x * x);
            if c == 0.0 {
                0.0
            } else {
                c * v1(x)
            }
        };
        let outer = move |x: f64| {
            let c = 1.0 - cutoff(x * x);
            if c == 0.0 {
                0.0
            } else {
                c * v2(x)
            }
        };
        let mut k1 = KernelSpec::new(format!("{}_1", self.name), self.symmetry, self.claimed_tail, inner);
        let mut k2 = KernelSpec::new(format!("{}_2", self.name), self.symmetry, self.claimed_tail, outer);
        if let Some(d) = &self.derivative {
            let (v1, d1, v2, d2) = (self.value.clone(), d.clone(), self.value.clone(), d.clone());
            k1 = k1.with_derivative(move |x| {
                let c = cutoff(x * x);
                let dc = 2.0 * x * cutoff_derivative(x * x);
                if c == 0.0 && dc == 0.0 {
                    0.0
                } else {
                    c * d1(x) + dc * v1(x)
                }
            });
            k2 = k2.with_derivative(move |x| {
                let c = 1.0 - cutoff(x * x);
                let dc = -2.0 * x * cutoff_derivative(x * x);
                if c == 0.0 && dc == 0.0 {
                    0.0
                } else {
                    c * d2(x) + dc * v2(x)
                }
            });
        }
        k1.extent = self.extent;
        k2.extent = self.extent;
        (k1, k2)
    }
}

fn two_piece(name: &str, tail: f64, class: TailClass) -> KernelSpec {
    KernelSpec::new(name, Symmetry::Odd, class, move |x: f64| {
        let a = x.abs();
        x.signum() * if a <= 1.0 { 1.0 / a } else { a.powf(-tail) }
    })
    .with_derivative(move |x: f64| {
        let a = x.abs();
        if a <= 1.0 {
            -1.0 / (a * a)
        } else {
            -tail * a.powf(-tail - 1.0)
        }
    })
}

/// One side of a tabulated kernel on `(0, inf)`.
#[derive(Debug)]
struct Branch {
    xs: Vec<f64>,
    values: Vec<f64>,
    /// `(exponent, prefactor)` of the power laws below and above the table.
    below: (f64, f64),
    above: (f64, f64),
}

impl Branch {
    fn new(xs: &[f64], values: &[f64]) -> Result<Self> {
        let fit = |i: usize, j: usize| -> (f64, f64) {
            let (x0, x1, v0, v1) = (xs[i], xs[j], values[i], values[j]);
            if v0 == 0.0 || v1 == 0.0 || v0.signum() != v1.signum() {
                return (0.0, 0.0);
            }
            let e = (v1 / v0).abs().ln() / (x1 / x0).ln();
            (e, v0 / x0.powf(e))
        };
        let n = xs.len();
        Ok(Self { xs: xs.to_vec(), values: values.to_vec(), below: fit(0, 1), above: fit(n - 2, n - 1) })
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] {
            return self.below.1 * x.powf(self.below.0);
        }
        if x > self.xs[n - 1] {
            return self.above.1 * x.powf(self.above.0);
        }
        let j = self.xs.partition_point(|v| *v <= x).clamp(1, n - 1);
        let (x0, x1) = (self.xs[j - 1], self.xs[j]);
        let s = (x - x0) / (x1 - x0);
        self.values[j - 1] + s * (self.values[j] - self.values[j - 1])
    }
}

/// `e^{-1/u}` for `u > 0`, else 0.
fn flat(u: f64) -> f64 {
    if u > 0.0 {
        (-1.0 / u).exp()
    } else {
        0.0
    }
}

fn flat_derivative(u: f64) -> f64 {
    if u > 0.0 {
        (-1.0 / u).exp() / (u * u)
    } else {
        0.0
    }
}

/// Smooth step: 0 for `u <= 0`, 1 for `u >= 1`.
fn step(u: f64) -> f64 {
    let (a, b) = (flat(u), flat(1.0 - u));
    a / (a + b)
}

fn step_derivative(u: f64) -> f64 {
    let (a, b) = (flat(u), flat(1.0 - u));
    let (da, db) = (flat_derivative(u), -flat_derivative(1.0 - u));
    (da * b - a * db) / ((a + b) * (a + b))
}

/// `phi(r)`: 1 for `|r| <= 1`, 0 for `|r| >= 2`, `C^inf` in between.
pub fn cutoff(r: f64) -> f64 {
    step(2.0 - r.abs())
}

/// `phi'(r)`.
pub fn cutoff_derivative(r: f64) -> f64 {
    -r.signum() * step_derivative(2.0 - r.abs())
}
