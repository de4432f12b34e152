//! Uniform symmetric grids and the sampled functions that live on them.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A uniform grid covering `[-L, L]` (per axis) with spacing `dx`.
///
/// The number of samples per axis is `2L/dx + 1`, which is odd, so `x = 0`
/// is always a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_extent: f64,
    pub spacing: f64,
    pub dim: usize,
}

impl GridSpec {
    pub fn new(half_extent: f64, spacing: f64) -> Result<Self> {
        Self::with_dim(half_extent, spacing, 1)
    }

    pub fn with_dim(half_extent: f64, spacing: f64, dim: usize) -> Result<Self> {
        if !(half_extent > 0.0 && half_extent.is_finite()) {
            return Err(invalid("half_extent", format!("{half_extent} must be > 0")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(invalid("spacing", format!("{spacing} must be > 0")));
        }
        if dim != 1 && dim != 2 {
            return Err(invalid("dim", format!("{dim} not in {{1,2}}")));
        }
        let ratio = half_extent / spacing;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
            return Err(invalid("spacing", format!("L/dx = {ratio} must be a positive integer")));
        }
        Ok(Self { half_extent, spacing, dim })
    }

    /// Default analysis grid: `L = 64`, `dx = 1/64`.
    pub fn default_1d() -> Self {
        Self { half_extent: 64.0, spacing: 1.0 / 64.0, dim: 1 }
    }

    /// Cells per axis, `2L/dx` (always even).
    pub fn cells(&self) -> usize {
        (2.0 * self.half_extent / self.spacing).round() as usize
    }

    /// Samples per axis.
    pub fn n(&self) -> usize {
        self.cells() + 1
    }

    pub fn len(&self) -> usize {
        self.n().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the node `x = 0` along an axis.
    pub fn center(&self) -> usize {
        self.cells() / 2
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - self.center() as f64) * self.spacing
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.x(i)).collect()
    }

    /// Index of the node nearest to `x`, if it lies on the grid.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let k = (x / self.spacing).round() as i64 + self.center() as i64;
        (k >= 0 && (k as usize) < self.n()).then_some(k as usize)
    }

    /// Grid with the same spacing and half the extent.
    pub fn inner(&self) -> Result<Self> {
        Self::with_dim(self.half_extent / 2.0, self.spacing, self.dim)
    }

    /// Same extent, half the spacing.
    pub fn refined(&self) -> Self {
        Self { spacing: self.spacing / 2.0, ..*self }
    }

    /// Dual (frequency) grid of the discrete transform on this grid.
    pub fn dual(&self) -> Self {
        let n = self.n() as f64;
        let dxi = 2.0 * std::f64::consts::PI / (n * self.spacing);
        Self { half_extent: dxi * self.center() as f64, spacing: dxi, dim: self.dim }
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n() == other.n() && (self.spacing - other.spacing).abs() <= 1e-12 * self.spacing
    }

    /// Cell volume `dx^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }
}

/// A real function sampled on a [`GridSpec`].
///
/// `tail` is the constant value the function takes outside the grid (and the
/// value it tends to far away); decaying functions have `tail = 0`. Operators
/// that are exact on constants act on `values - tail` and add `tail` back.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub tail: f64,
}

impl GridFunction {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        Self::with_tail(spec, values, 0.0)
    }

    pub fn with_tail(spec: GridSpec, values: Vec<f64>, tail: f64) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::GridMismatch(format!("{} samples for a grid of {}", values.len(), spec.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if !tail.is_finite() {
            return Err(invalid("tail", "must be finite"));
        }
        Ok(Self { spec, values, tail })
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(f64) -> f64) -> Result<Self> {
        if spec.dim != 1 {
            return Err(Error::Unsupported("from_fn is one-dimensional".into()));
        }
        Self::new(spec, spec.xs().into_iter().map(f).collect())
    }

    pub fn from_fn_2d(spec: GridSpec, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if spec.dim != 2 {
            return Err(Error::Unsupported("from_fn_2d needs dim = 2".into()));
        }
        let xs = spec.xs();
        let mut values = Vec::with_capacity(spec.len());
        for &x in &xs {
            for &y in &xs {
                values.push(f(x, y));
            }
        }
        Self::new(spec, values)
    }

    /// The constant function `c`, represented exactly through its tail.
    pub fn constant(spec: GridSpec, c: f64) -> Result<Self> {
        Self::with_tail(spec, vec![c; spec.len()], c)
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, values: vec![0.0; spec.len()], tail: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at a node, or the tail outside the grid (1-D).
    pub fn at(&self, i: i64) -> f64 {
        if i < 0 || i as usize >= self.values.len() {
            self.tail
        } else {
            self.values[i as usize]
        }
    }

    pub fn value_at_x(&self, x: f64) -> Option<f64> {
        self.spec.index_of(x).map(|i| self.values[i])
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { spec: self.spec, values: self.values.iter().map(|v| v * c).collect(), tail: self.tail * c }
    }

    /// Shift by `k` cells: the result at `x` is `f(x - k dx)`.
    pub fn shift(&self, k: i64) -> Self {
        let values = (0..self.values.len() as i64).map(|i| self.at(i - k)).collect();
        Self { spec: self.spec, values, tail: self.tail }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(self.tail.abs(), |m, v| m.max(v.abs()))
    }

    /// Trapezoid-rule integral over the grid (tensor rule in 2-D).
    pub fn integral(&self) -> f64 {
        let n = self.spec.n();
        let w = |i: usize| if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        if self.spec.dim == 1 {
            let s: f64 = self.values.iter().enumerate().map(|(i, v)| w(i) * v).sum();
            s * self.spec.spacing
        } else {
            let s: f64 = self.values.iter().enumerate().map(|(k, v)| w(k / n) * w(k % n) * v).sum();
            s * self.spec.cell_volume()
        }
    }

    /// Restriction to the sub-grid `target` (same spacing, smaller extent).
    pub fn restrict(&self, target: GridSpec) -> Result<Self> {
        if self.spec.dim != 1 || target.dim != 1 {
            return Err(Error::Unsupported("restrict is one-dimensional".into()));
        }
        if (target.spacing - self.spec.spacing).abs() > 1e-12 * self.spec.spacing || target.cells() > self.spec.cells()
        {
            return Err(Error::GridMismatch("target is not a sub-grid".into()));
        }
        let off = self.spec.center() - target.center();
        Ok(Self { spec: target, values: self.values[off..off + target.n()].to_vec(), tail: self.tail })
    }

    /// Write as CSV with header `x,value` (or `x,y,value` in 2-D).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let xs = self.spec.xs();
        if self.spec.dim == 1 {
            writeln!(w, "x,value")?;
            for (x, v) in xs.iter().zip(&self.values) {
                writeln!(w, "{x:.15e},{v:.15e}")?;
            }
        } else {
            writeln!(w, "x,y,value")?;
            let n = self.spec.n();
            for (i, x) in xs.iter().enumerate() {
                for (j, y) in xs.iter().enumerate() {
                    writeln!(w, "{x:.15e},{y:.15e},{:.15e}", self.values[i * n + j])?;
                }
            }
        }
        Ok(())
    }

    /// Read a 1-D CSV written by [`GridFunction::write_csv`]. The grid is
    /// reconstructed from the abscissae, which must be uniform and symmetric.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))??;
        if header.trim() != "x,value" {
            return Err(Error::Parse(format!("unexpected header `{header}`")));
        }
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| Error::Parse(format!("line {}: missing field", lineno + 2)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))
            };
            xs.push(parse(it.next())?);
            vs.push(parse(it.next())?);
        }
        if xs.len() < 3 {
            return Err(Error::Parse("need at least 3 samples".into()));
        }
        let l = xs[xs.len() - 1];
        let dx = xs[1] - xs[0];
        if (xs[0] + l).abs() > 1e-9 * l {
            return Err(Error::Parse("abscissae are not symmetric".into()));
        }
        let spec = GridSpec::new(l, (2.0 * l) / (xs.len() - 1) as f64)?;
        if (spec.spacing - dx).abs() > 1e-9 * dx {
            return Err(Error::Parse("abscissae are not uniform".into()));
        }
        Self::new(spec, vs)
    }
}

/// A complex function on a grid, used for transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGridFunction {
    pub spec: GridSpec,
    pub values: Vec<Complex64>,
}

impl ComplexGridFunction {
    pub fn re(&self) -> GridFunction {
        GridFunction { spec: self.spec, values: self.values.iter().map(|c| c.re).collect(), tail: 0.0 }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, c| m.max(c.norm()))
    }
}

impl From<&GridFunction> for ComplexGridFunction {
    fn from(f: &GridFunction) -> Self {
        Self { spec: f.spec, values: f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect() }
    }
}

/// `(sum |f_i|^p dx^d)^{1/p}` over the grid samples.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    lp_norm_slice(&f.values, f.spec.cell_volume(), p)
}

pub(crate) fn lp_norm_slice(values: &[f64], cell: f64, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(invalid("p", format!("{p} must be >= 1")));
    }
    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::NonFinite(i));
    }
    if p.is_infinite() {
        return Ok(values.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    let s: f64 = values.iter().map(|v| (v.abs() / scale).powf(p)).sum();
    Ok(scale * (s * cell).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shape() {
        let g = GridSpec::new(1.0, 0.25).unwrap();
        assert_eq!(g.n(), 9);
        assert_eq!(g.center(), 4);
        assert_eq!(g.x(0), -1.0);
        assert_eq!(g.x(8), 1.0);
        assert!(GridSpec::new(1.0, 0.3).is_err());
        assert!(GridSpec::new(-1.0, 0.25).is_err());
        assert_eq!(GridSpec::default_1d().n(), 8193);
    }

    #[test]
    fn lp_norm_basics() {
        let g = GridSpec::new(4.0, 1.0 / 16.0).unwrap();
        let zero = GridFunction::zeros(g);
        assert_eq!(lp_norm(&zero, 2.0).unwrap(), 0.0);
        let ind = GridFunction::from_fn(g, |x| if x.abs() <= 1.0 { 1.0 } else { 0.0 }).unwrap();
        let n2 = lp_norm(&ind, 2.0).unwrap();
        assert!((n2 - 2f64.sqrt()).abs() < g.spacing);
        assert!(lp_norm(&ind, 0.5).is_err());
    }

    #[test]
    fn gaussian_l2() {
        let g = GridSpec::new(8.0, 1.0 / 32.0).unwrap();
        let f = GridFunction::from_fn(g, |x| (-x * x).exp()).unwrap();
        let want = (std::f64::consts::PI / 2.0).powf(0.25);
        assert!((lp_norm(&f, 2.0).unwrap() - want).abs() < 1e-6);
    }

    #[test]
    fn nan_rejected() {
        let g = GridSpec::new(1.0, 0.5).unwrap();
        assert!(GridFunction::new(g, vec![0.0, f64::NAN, 0.0, 0.0, 0.0]).is_err());
        assert!(lp_norm_slice(&[0.0, f64::NAN], 1.0, 2.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let g = GridSpec::new(2.0, 0.5).unwrap();
        let f = GridFunction::from_fn(g, |x| x.sin() / 3.0).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,value\n"));
        let back = GridFunction::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert!(back.spec.same_as(&f.spec));
        for (a, b) in back.values.iter().zip(&f.values) {
            assert!((a - b).abs() <= 1e-14 * a.abs().max(1e-300));
        }
    }

    #[test]
    fn shift_and_restrict() {
        let g = GridSpec::new(2.0, 0.5).unwrap();
        let f = GridFunction::from_fn(g, |x| x).unwrap();
        let s = f.shift(1);
        assert_eq!(s.values[3], f.values[2]);
        assert_eq!(s.values[0], 0.0);
        let r = f.restrict(g.inner().unwrap()).unwrap();
        assert_eq!(r.values, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }
}
