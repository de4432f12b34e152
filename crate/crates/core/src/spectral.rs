//! Discrete Fourier machinery: centred transforms on a [`GridSpec`],
//! zero-padded linear convolution, and the periodic [`Torus`] on which all
//! Fourier-multiplier operators are applied.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};
use crate::grid::{ComplexGridFunction, GridFunction, GridSpec};

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    }
}

/// Centred DFT of length `n` (odd) along one axis, in place, with the
/// continuous normalisation `sum f(x_j) e^{-i xi x_j} dx` (or its inverse).
fn centred_dft(buf: &mut [Complex64], fft: &dyn Fft<f64>, scale: f64) {
    let n = buf.len();
    let c = n / 2;
    let mut tmp: Vec<Complex64> = (0..n).map(|m| buf[(m + c) % n]).collect();
    fft.process(&mut tmp);
    for (k, out) in buf.iter_mut().enumerate() {
        *out = tmp[(k + n - c) % n] * scale;
    }
}

fn transform(f: &ComplexGridFunction, inverse: bool) -> ComplexGridFunction {
    let spec = f.spec;
    let n = spec.n();
    let fft = plan(n, inverse);
    let (out_spec, scale) = if inverse {
        // f.spec is a dual grid; the physical spacing is 2 pi / (n dxi).
        let dx = 2.0 * PI / (n as f64 * spec.spacing);
        let phys = GridSpec { half_extent: dx * spec.center() as f64, spacing: dx, dim: spec.dim };
        (phys, spec.spacing / (2.0 * PI))
    } else {
        (spec.dual(), spec.spacing)
    };
    let mut values = f.values.clone();
    if spec.dim == 1 {
        centred_dft(&mut values, fft.as_ref(), scale);
    } else {
        for row in values.chunks_mut(n) {
            centred_dft(row, fft.as_ref(), scale);
        }
        let mut col = vec![Complex64::default(); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = values[i * n + j];
            }
            centred_dft(&mut col, fft.as_ref(), scale);
            for i in 0..n {
                values[i * n + j] = col[i];
            }
        }
    }
    ComplexGridFunction { spec: out_spec, values }
}

/// Approximation of `f^(xi) = int f(x) e^{-i xi x} dx` on the dual grid.
pub fn fourier(f: &GridFunction) -> Result<ComplexGridFunction> {
    if f.tail != 0.0 {
        return Err(invalid("f", "transform needs a decaying function (tail = 0)"));
    }
    Ok(transform(&f.into(), false))
}

pub fn fourier_complex(f: &ComplexGridFunction) -> ComplexGridFunction {
    transform(f, false)
}

/// Inverse of [`fourier`]; `spec` must be a dual grid produced by it.
pub fn inverse_fourier(fhat: &ComplexGridFunction) -> ComplexGridFunction {
    transform(fhat, true)
}

/// Inverse transform checked against the physical grid `expected`.
pub fn inverse_fourier_onto(fhat: &ComplexGridFunction, expected: &GridSpec) -> Result<ComplexGridFunction> {
    if !fhat.spec.same_as(&expected.dual()) {
        return Err(Error::GridMismatch("spectrum does not live on the dual of the requested grid".into()));
    }
    let mut out = transform(fhat, true);
    out.spec = *expected;
    Ok(out)
}

/// `(f * g)(x) = int f(y) g(x - y) dy` on the common grid, by zero-padded FFT.
/// Values of `g` outside the grid are taken as zero.
pub fn convolve(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    if !f.spec.same_as(&g.spec) {
        return Err(Error::GridMismatch("convolve needs identical grids".into()));
    }
    if f.tail != 0.0 || g.tail != 0.0 {
        return Err(invalid("f", "convolve needs decaying functions (tail = 0)"));
    }
    let spec = f.spec;
    let n = spec.n();
    let c = spec.center();
    let m = (2 * n - 1).next_power_of_two();
    let fwd = plan(m, false);
    let inv = plan(m, true);
    let cell = spec.cell_volume();
    if spec.dim == 1 {
        let mut a = vec![Complex64::default(); m];
        let mut b = vec![Complex64::default(); m];
        for i in 0..n {
            a[i].re = f.values[i];
            b[i].re = g.values[i];
        }
        fwd.process(&mut a);
        fwd.process(&mut b);
        for (x, y) in a.iter_mut().zip(&b) {
            *x *= y;
        }
        inv.process(&mut a);
        let values = (0..n).map(|i| a[i + c].re / m as f64 * cell).collect();
        return GridFunction::new(spec, values);
    }
    // 2-D: row-column transforms on an m x m padded array.
    let mut a = vec![Complex64::default(); m * m];
    let mut b = vec![Complex64::default(); m * m];
    for i in 0..n {
        for j in 0..n {
            a[i * m + j].re = f.values[i * n + j];
            b[i * m + j].re = g.values[i * n + j];
        }
    }
    let fft2 = |buf: &mut Vec<Complex64>, p: &Arc<dyn Fft<f64>>| {
        for row in buf.chunks_mut(m) {
            p.process(row);
        }
        let mut col = vec![Complex64::default(); m];
        for j in 0..m {
            for i in 0..m {
                col[i] = buf[i * m + j];
            }
            p.process(&mut col);
            for i in 0..m {
                buf[i * m + j] = col[i];
            }
        }
    };
    fft2(&mut a, &fwd);
    fft2(&mut b, &fwd);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    fft2(&mut a, &inv);
    let norm = (m * m) as f64;
    let mut values = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            values.push(a[(i + c) * m + j + c].re / norm * cell);
        }
    }
    GridFunction::new(spec, values)
}

/// `c_i = sum_{|k| <= K} w_{|k|} s_{i+k}` for every index of `signal`, with
/// `s` taken as zero outside; `half_kernel[k] = w_k` for `k = 0..=K`.
pub(crate) fn correlate_symmetric(signal: &[f64], half_kernel: &[f64]) -> Vec<f64> {
    let n = signal.len();
    let kmax = half_kernel.len().saturating_sub(1);
    let m = (n + kmax).next_power_of_two();
    let mut a: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    a.resize(m, Complex64::default());
    let mut b = vec![Complex64::default(); m];
    for (k, &w) in half_kernel.iter().enumerate() {
        b[k].re = w;
        if k > 0 {
            b[m - k].re = w;
        }
    }
    let fwd = plan(m, false);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    plan(m, true).process(&mut a);
    a[..n].iter().map(|z| z.re / m as f64).collect()
}

/// Circular correlation `c_i = sum_m w_m s_{(i+m) mod n}` with `w` indexed
/// by offset modulo `n`.
pub(crate) fn correlate_circular(signal: &[f64], kernel: &[f64]) -> Vec<f64> {
    let n = signal.len();
    debug_assert_eq!(kernel.len(), n);
    let fwd = plan(n, false);
    let mut a: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut b: Vec<Complex64> = kernel.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y.conj();
    }
    plan(n, true).process(&mut a);
    a.into_iter().map(|z| z.re / n as f64).collect()
}

/// Smallest `2^a` or `3 * 2^a` that is at least `n`.
fn fast_len(n: usize) -> usize {
    let p = n.next_power_of_two();
    if 3 * p / 4 >= n && p >= 4 {
        3 * p / 4
    } else {
        p
    }
}

/// Convolution of a fixed sample vector `f` (`cells + 1` values) with
/// kernels `g` of `2 cells + 1` values centred at index `cells`:
/// `c_i = sum_k f_k g_{i - k + cells}`. The transform of `f` is kept.
#[derive(Clone)]
pub(crate) struct CentredConvolver {
    n: usize,
    fhat: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CentredConvolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CentredConvolver").field("n", &self.n).field("m", &self.fhat.len()).finish()
    }
}

impl CentredConvolver {
    pub fn new(f: &[f64]) -> Self {
        let n = f.len();
        // Outputs sit at indices cells..=2 cells of the linear convolution,
        // whose length is 3 cells + 1; wrap-around must miss them.
        let m = fast_len(2 * n - 1);
        let fwd = plan(m, false);
        let inv = plan(m, true);
        let mut fhat = vec![Complex64::default(); m];
        for (a, &v) in fhat.iter_mut().zip(f) {
            a.re = v;
        }
        fwd.process(&mut fhat);
        Self { n, fhat, fwd, inv }
    }

    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        let m = self.fhat.len();
        let cells = self.n - 1;
        debug_assert_eq!(g.len(), 2 * cells + 1);
        let mut b = vec![Complex64::default(); m];
        for (j, &v) in g.iter().enumerate() {
            b[j % m].re += v;
        }
        self.fwd.process(&mut b);
        for (x, y) in b.iter_mut().zip(&self.fhat) {
            *x *= y;
        }
        self.inv.process(&mut b);
        (0..self.n).map(|i| b[(i + cells) % m].re / m as f64).collect()
    }
}

/// C^2 spectral window: 1 on the inner 90% of the dual half-extent, then a
/// quintic smoothstep down to 0 at the edge.
pub fn taper(rho: f64) -> f64 {
    if rho <= 0.9 {
        1.0
    } else if rho >= 1.0 {
        0.0
    } else {
        let u = (rho - 0.9) / 0.1;
        1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
    }
}

/// Leading-order power-law tail `coef * |x|^{-exponent}` (times `sign(x)`
/// when `odd`), used to remove periodic images from torus computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTail {
    pub coef: f64,
    pub exponent: f64,
    pub odd: bool,
}

impl PowerTail {
    pub fn eval(&self, x: f64) -> f64 {
        let v = self.coef * x.abs().powf(-self.exponent);
        if self.odd {
            v * x.signum()
        } else {
            v
        }
    }

    /// `sum_{k != 0} tail(x + k T)` for `|x| < T/2`.
    pub fn image_sum(&self, x: f64, period: f64) -> f64 {
        const K: usize = 32;
        let mut s = 0.0;
        for k in 1..=K {
            let kt = k as f64 * period;
            s += self.eval(x + kt) + self.eval(x - kt);
        }
        // Remainder of each one-sided series by Euler-Maclaurin about the
        // midpoint K + 1/2.
        let e = self.exponent;
        let edge = (K as f64 + 0.5) * period;
        let rest = |y: f64| y.powf(1.0 - e) / ((e - 1.0) * period) - e * period * y.powf(-e - 1.0) / 24.0;
        let (up, down) = (rest(edge + x), rest(edge - x));
        s + self.coef * if self.odd { up - down } else { up + down }
    }
}

/// A periodic grid of `n` points with spacing `delta` (period `n * delta`).
/// Grid functions are embedded with `x = 0` at index 0.
#[derive(Clone)]
pub struct Torus {
    pub n: usize,
    pub delta: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    xi: Arc<Vec<f64>>,
}

impl std::fmt::Debug for Torus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Torus").field("n", &self.n).field("delta", &self.delta).finish()
    }
}

impl Torus {
    pub fn new(n: usize, delta: f64) -> Self {
        let dxi = 2.0 * PI / (n as f64 * delta);
        let xi = (0..n)
            .map(|k| {
                let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
                kk * dxi
            })
            .collect();
        Self { n, delta, fwd: plan(n, false), inv: plan(n, true), xi: Arc::new(xi) }
    }

    /// Torus for a 1-D grid: period `2L * pad`, spacing `dx / refine`.
    /// `pad = 1` treats the grid itself as periodic.
    pub fn for_grid(spec: &GridSpec, pad: usize, refine: usize) -> Result<Self> {
        if spec.dim != 1 {
            return Err(Error::Unsupported("torus operators are one-dimensional".into()));
        }
        if pad == 0 || refine == 0 {
            return Err(invalid("pad", "pad and refine must be >= 1"));
        }
        Ok(Self::new(pad * refine * spec.cells(), spec.spacing / refine as f64))
    }

    pub fn period(&self) -> f64 {
        self.n as f64 * self.delta
    }

    /// Wavenumbers in FFT order.
    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn xi_max(&self) -> f64 {
        PI / self.delta
    }

    pub fn wrap(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    /// Position of torus index `i`, in `[-period/2, period/2)`.
    pub fn x(&self, i: usize) -> f64 {
        let k = if i < self.n.div_ceil(2) { i as f64 } else { i as f64 - self.n as f64 };
        k * self.delta
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.fwd.process(buf);
    }

    /// Inverse FFT including the `1/n` normalisation.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inv.process(buf);
        let s = 1.0 / self.n as f64;
        for v in buf.iter_mut() {
            *v *= s;
        }
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    pub fn inverse_real(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        self.inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Apply the real multiplier `m(xi)` to a spectrum and return the real
    /// part of the inverse transform.
    pub fn apply(&self, spectrum: &[Complex64], m: impl Fn(f64) -> f64) -> Vec<f64> {
        let buf: Vec<Complex64> = spectrum.iter().zip(self.xi.iter()).map(|(s, &xi)| s * m(xi)).collect();
        self.inverse_real(buf)
    }

    /// Apply a complex multiplier.
    pub fn apply_complex(&self, spectrum: &[Complex64], m: impl Fn(f64) -> Complex64) -> Vec<f64> {
        let buf: Vec<Complex64> = spectrum.iter().zip(self.xi.iter()).map(|(s, &xi)| s * m(xi)).collect();
        self.inverse_real(buf)
    }

    /// Torus index of grid node `j` for a grid sampled every `refine` torus
    /// points.
    pub fn grid_index(&self, spec: &GridSpec, j: usize, refine: usize) -> usize {
        self.wrap((j as i64 - spec.center() as i64) * refine as i64)
    }

    /// Embed grid samples (refine = 1). When the torus is exactly the grid
    /// period the two end samples coincide and are averaged.
    pub fn embed(&self, spec: &GridSpec, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        let cells = spec.cells();
        for (j, &v) in values.iter().enumerate() {
            out[self.grid_index(spec, j, 1)] += v;
        }
        if self.n == cells {
            out[self.grid_index(spec, 0, 1)] *= 0.5;
        }
        out
    }

    pub fn extract(&self, spec: &GridSpec, torus_values: &[f64], refine: usize) -> Vec<f64> {
        (0..spec.n()).map(|j| torus_values[self.grid_index(spec, j, refine)]).collect()
    }

    /// Sample an even real symbol on this torus and invert it, giving the
    /// kernel `(1/2pi) int s(xi) e^{i xi x} dxi` at every torus point.
    pub fn kernel_from_symbol(&self, symbol: impl Fn(f64) -> f64, tapered: bool) -> Vec<f64> {
        let xmax = self.xi_max();
        let buf: Vec<Complex64> = self
            .xi
            .iter()
            .map(|&xi| {
                let w = if tapered { taper(xi.abs() / xmax) } else { 1.0 };
                Complex64::new(symbol(xi) * w, 0.0)
            })
            .collect();
        let inv = 1.0 / self.delta;
        self.inverse_real(buf).into_iter().map(|v| v * inv).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss_grid() -> (GridSpec, GridFunction) {
        let g = GridSpec::new(8.0, 1.0 / 16.0).unwrap();
        (g, GridFunction::from_fn(g, |x| (-x * x).exp()).unwrap())
    }

    #[test]
    fn gaussian_transform() {
        let (_, f) = gauss_grid();
        let fh = fourier(&f).unwrap();
        let xs = fh.spec.xs();
        for (xi, v) in xs.iter().zip(&fh.values) {
            let want = PI.sqrt() * (-xi * xi / 4.0).exp();
            assert!((v.re - want).abs() < 1e-8, "xi={xi}");
            assert!(v.im.abs() < 1e-8);
        }
    }

    #[test]
    fn round_trip_and_plancherel() {
        let (g, _) = gauss_grid();
        let f =
            GridFunction::from_fn(g, |x| (-x * x).exp() * (1.0 + x) + (x / 2.0).cos() * (-x * x / 4.0).exp()).unwrap();
        let fh = fourier(&f).unwrap();
        let back = inverse_fourier_onto(&fh, &g).unwrap();
        let scale = f.sup_norm();
        for (a, b) in back.values.iter().zip(&f.values) {
            assert!((a.re - b).abs() < 1e-10 * scale);
        }
        let lhs: f64 = f.values.iter().map(|v| v * v).sum::<f64>() * g.spacing;
        let rhs: f64 = fh.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * fh.spec.spacing / (2.0 * PI);
        assert!((lhs - rhs).abs() < 1e-8 * lhs);
    }

    #[test]
    fn indicator_transform_is_sinc() {
        let g = GridSpec::new(16.0, 1.0 / 64.0).unwrap();
        let f = GridFunction::from_fn(g, |x| if x.abs() <= 1.0 { 1.0 } else { 0.0 }).unwrap();
        let fh = fourier(&f).unwrap();
        for (xi, v) in fh.spec.xs().iter().zip(&fh.values) {
            if xi.abs() > 0.0 && xi.abs() < 20.0 {
                let want = 2.0 * xi.sin() / xi;
                assert!((v.re - want).abs() < 2.0 * g.spacing, "xi={xi}");
            }
        }
    }

    #[test]
    fn convolutions() {
        let g = GridSpec::new(8.0, 1.0 / 32.0).unwrap();
        let ind = GridFunction::from_fn(g, |x| if x.abs() <= 1.0 { 1.0 } else { 0.0 }).unwrap();
        let tri = convolve(&ind, &ind).unwrap();
        assert!((tri.value_at_x(0.0).unwrap() - 2.0).abs() <= g.spacing + 1e-12);
        assert!((tri.value_at_x(1.0).unwrap() - 1.0).abs() <= g.spacing + 1e-12);
        let ga = GridFunction::from_fn(g, |x| (-x * x).exp()).unwrap();
        let gg = convolve(&ga, &ga).unwrap();
        for (x, v) in g.xs().iter().zip(&gg.values) {
            let want = (PI / 2.0).sqrt() * (-x * x / 2.0).exp();
            assert!((v - want).abs() < 1e-10, "x={x}");
        }
        let other = GridSpec::new(4.0, 1.0 / 32.0).unwrap();
        assert!(convolve(&ga, &GridFunction::zeros(other)).is_err());
    }

    #[test]
    fn torus_kernel_matches_cauchy() {
        let g = GridSpec::new(16.0, 1.0 / 16.0).unwrap();
        let t = Torus::for_grid(&g, 8, 2).unwrap();
        let k = t.kernel_from_symbol(|xi| (-xi.abs()).exp(), false);
        let tail = PowerTail { coef: 1.0 / PI, exponent: 2.0, odd: false };
        for j in [0usize, 100, 256, 400] {
            let x = g.x(j);
            let raw = k[t.grid_index(&g, j, 2)];
            let corrected = raw - tail.image_sum(x, t.period());
            let want = 1.0 / (PI * (1.0 + x * x));
            assert!((corrected - want).abs() < 1e-9, "x={x}: {corrected} vs {want}");
        }
    }

    #[test]
    fn taper_is_smooth_step() {
        assert_eq!(taper(0.5), 1.0);
        assert_eq!(taper(1.0), 0.0);
        assert!((taper(0.95) - 0.5).abs() < 1e-12);
    }
}
