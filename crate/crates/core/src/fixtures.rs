//! Named test functions with known transforms and norms.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum Fixture {
    /// `exp(-x^2)`.
    Gauss,
    /// `1_{[-1,1]}`, taking the value 1/2 at the jumps.
    Indicator,
    /// `cos(x) exp(-(x/8)^2)`.
    Coswin,
    /// Unwindowed `cos(x)`; meaningful on periodic grids with `L` a multiple of `pi`.
    Cos,
    /// The constant `c` everywhere, carried as a grid tail.
    Constant(f64),
    /// `f(x - shift)`.
    Translated(Box<Fixture>, f64),
}

impl Fixture {
    /// The three fixtures every norm check runs over.
    pub fn standard() -> Vec<Fixture> {
        vec![Fixture::Gauss, Fixture::Indicator, Fixture::Coswin]
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Fixture::Gauss => (-x * x).exp(),
            Fixture::Indicator => match x.abs() {
                a if a < 1.0 => 1.0,
                1.0 => 0.5,
                _ => 0.0,
            },
            Fixture::Coswin => x.cos() * (-(x / 8.0).powi(2)).exp(),
            Fixture::Cos => x.cos(),
            Fixture::Constant(c) => *c,
            Fixture::Translated(inner, s) => inner.eval(x - s),
        }
    }

    pub fn sample(&self, spec: GridSpec) -> Result<GridFunction> {
        if spec.dim != 1 {
            return Err(Error::Unsupported("fixtures are one-dimensional".into()));
        }
        match self {
            Fixture::Constant(c) => GridFunction::constant(spec, *c),
            _ => GridFunction::from_fn(spec, |x| self.eval(x)),
        }
    }

    /// Positive everywhere (on the grid or as a tail)?
    pub fn is_positive(&self) -> bool {
        match self {
            Fixture::Gauss => true,
            Fixture::Constant(c) => *c > 0.0,
            Fixture::Translated(inner, _) => inner.is_positive(),
            _ => false,
        }
    }

    /// Exact `||f||_2` on the line, where finite.
    pub fn l2_norm(&self) -> Option<f64> {
        match self {
            Fixture::Gauss => Some((PI / 2.0).powf(0.25)),
            Fixture::Indicator => Some(2f64.sqrt()),
            Fixture::Coswin => {
                // int cos^2 x e^{-x^2/32} = (1/2)(sqrt(32 pi) + sqrt(32 pi) e^{-32})
                let a = (32.0 * PI).sqrt();
                Some((0.5 * a * (1.0 + (-32.0f64).exp())).sqrt())
            }
            Fixture::Translated(inner, _) => inner.l2_norm(),
            _ => None,
        }
    }
}

impl fmt::Display for Fixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fixture::Gauss => write!(f, "gauss"),
            Fixture::Indicator => write!(f, "indicator"),
            Fixture::Coswin => write!(f, "coswin"),
            Fixture::Cos => write!(f, "cos"),
            Fixture::Constant(c) => write!(f, "const:{c}"),
            Fixture::Translated(inner, s) => write!(f, "{inner}@{s}"),
        }
    }
}

impl FromStr for Fixture {
    type Err = Error;

    /// `gauss`, `indicator`, `coswin`, `cos`, `const:<c>`, `one`, and
    /// `<name>@<shift>` for translates.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((name, shift)) = s.rsplit_once('@') {
            let shift: f64 = shift.parse().map_err(|_| Error::Parse(format!("bad shift in fixture `{s}`")))?;
            return Ok(Fixture::Translated(Box::new(name.parse()?), shift));
        }
        if let Some(c) = s.strip_prefix("const:") {
            let c: f64 = c.parse().map_err(|_| Error::Parse(format!("bad constant in `{s}`")))?;
            return Ok(Fixture::Constant(c));
        }
        match s {
            "gauss" => Ok(Fixture::Gauss),
            "indicator" => Ok(Fixture::Indicator),
            "coswin" => Ok(Fixture::Coswin),
            "cos" => Ok(Fixture::Cos),
            "one" => Ok(Fixture::Constant(1.0)),
            _ => Err(Error::Parse(format!("unknown fixture `{s}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for name in ["gauss", "indicator", "coswin", "cos", "const:2", "gauss@5", "coswin@-2.5"] {
            let f: Fixture = name.parse().unwrap();
            assert_eq!(f.to_string(), name);
        }
        assert!("nope".parse::<Fixture>().is_err());
        assert_eq!("one".parse::<Fixture>().unwrap(), Fixture::Constant(1.0));
    }

    #[test]
    fn l2_norms_match_grid() {
        let spec = GridSpec::new(64.0, 1.0 / 64.0).unwrap();
        for f in [Fixture::Gauss, Fixture::Coswin] {
            let g = f.sample(spec).unwrap();
            let n = crate::grid::lp_norm(&g, 2.0).unwrap();
            assert!((n - f.l2_norm().unwrap()).abs() < 1e-10, "{f}");
        }
    }
}
