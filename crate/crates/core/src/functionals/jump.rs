//! Jump energies `int (F(x+h) - F(x))^2 |h|^{-1-alpha} dh` of sampled
//! functions: stencil weights, the far-field rule, and the pointwise
//! carré du champ of an extension.

use std::sync::Arc;

use crate::density::StableKernel;
use crate::error::{invalid, Error, Result};
use crate::extension::ExtensionField;
use crate::grid::{GridFunction, GridSpec};
use crate::quad::gauss_legendre;
use crate::spectral::{correlate_circular, correlate_symmetric};

/// Offsets summed directly before the FFT correlation takes over.
const NEAR: usize = 16;
/// Gauss-Legendre panels in `v = h^{-alpha}` beyond the in-grid stencil.
const FAR_PANELS: usize = 8;
/// Far-field integrals are evaluated every `FAR_STRIDE` nodes and
/// interpolated linearly.
const FAR_STRIDE: usize = 8;
/// Periods summed explicitly for periodic functions.
pub(crate) const PERIODS: usize = 16;

/// Weights `w_k` with `int_0^rho g(u) u^{-1-alpha} du ~ sum_k w_k g(k)`, for
/// `g` even in `h` and sampled at the integers `0..=kmax`.
///
/// On `[0, 1]` the sampled `g` is fitted by `a u^2 + b u^4 + c u^6` through
/// the nodes 1, 2, 3 and integrated exactly; on each later cell `g(u) / u^2`
/// is interpolated by a cubic through four neighbouring nodes (none at 0)
/// and integrated with 8-point Gauss-Legendre.
#[derive(Debug, Clone)]
pub(crate) struct JumpTable {
    alpha: f64,
    kmax: usize,
    head: [[f64; 3]; 3],
    cells: Vec<[f64; 4]>,
    gl: (Vec<f64>, Vec<f64>),
}

impl JumpTable {
    pub fn new(alpha: f64, kmax: usize) -> Self {
        assert!(kmax >= 4, "stencil too short");
        let gl = gauss_legendre(8);
        let head = invert3([[1.0, 1.0, 1.0], [4.0, 16.0, 64.0], [9.0, 81.0, 729.0]]);
        let mut cells = vec![[0.0; 4]; kmax];
        for (k, c) in cells.iter_mut().enumerate().skip(1) {
            *c = cell_weights(alpha, kmax, k, k as f64 + 1.0, &gl);
        }
        Self { alpha, kmax, head, cells, gl }
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    /// Weights for `u < rho`, clipped at `kmax`; `rho` may be infinite.
    pub fn weights(&self, rho: f64) -> Vec<f64> {
        let reach = rho.min(self.kmax as f64);
        let mut w = vec![0.0; self.kmax + 1];
        if reach <= 0.0 {
            return w;
        }
        let u = reach.min(1.0);
        for j in 0..3 {
            for r in 0..3 {
                let e = 2.0 * r as f64 + 2.0 - self.alpha;
                w[j + 1] += self.head[r][j] * u.powf(e) / e;
            }
        }
        let mut k = 1;
        while (k as f64) < reach {
            let c = if (k + 1) as f64 <= reach {
                self.cells[k]
            } else {
                cell_weights(self.alpha, self.kmax, k, reach, &self.gl)
            };
            let s = cell_start(k, self.kmax);
            for m in 0..4 {
                w[s + m] += c[m];
            }
            k += 1;
        }
        w
    }
}

fn cell_start(k: usize, kmax: usize) -> usize {
    (k - 1).clamp(1, kmax - 3)
}

/// `int_k^b L_m(u) u^{1-alpha} du / u_m^2` for the cubic Lagrange basis of
/// the cell.
fn cell_weights(alpha: f64, kmax: usize, k: usize, b: f64, gl: &(Vec<f64>, Vec<f64>)) -> [f64; 4] {
    let s = cell_start(k, kmax) as f64;
    let a = k as f64;
    let half = 0.5 * (b - a);
    let mut out = [0.0; 4];
    for (z, wz) in gl.0.iter().zip(&gl.1) {
        let u = a + half * (z + 1.0);
        let weight = half * wz * u.powf(1.0 - alpha);
        for (m, o) in out.iter_mut().enumerate() {
            let mut l = 1.0;
            for n in 0..4 {
                if n != m {
                    l *= (u - s - n as f64) / (m as f64 - n as f64);
                }
            }
            *o += weight * l;
        }
    }
    for (m, o) in out.iter_mut().enumerate() {
        *o /= (s + m as f64).powi(2);
    }
    out
}

fn invert3(m: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let mut inv = [[0.0; 3]; 3];
    for (i, row) in inv.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            *v = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
        }
    }
    inv
}

/// `int_{h0 < |h| < h1} (F(x + h) - fx)^2 |h|^{-1-alpha} dh` with Gauss-Legendre
/// panels in `v = h^{-alpha}`; `h1` may be infinite.
pub(crate) fn far_jump(alpha: f64, x: f64, fx: f64, h0: f64, h1: f64, profile: impl Fn(f64) -> f64) -> f64 {
    if h1 <= h0 {
        return 0.0;
    }
    let v0 = if h1.is_finite() { h1.powf(-alpha) } else { 0.0 };
    let v1 = h0.powf(-alpha);
    let (z, w) = gauss_legendre(8);
    let step = (v1 - v0) / FAR_PANELS as f64;
    let mut sum = 0.0;
    for p in 0..FAR_PANELS {
        let mid = v0 + (p as f64 + 0.5) * step;
        for (zi, wi) in z.iter().zip(&w) {
            let h = (mid + 0.5 * step * zi).powf(-1.0 / alpha);
            let a = profile(x + h) - fx;
            let b = profile(x - h) - fx;
            sum += wi * (a * a + b * b);
        }
    }
    0.5 * step * sum / alpha
}

/// Multipole model of `Q_t f` far from the support of `f - tail`:
/// `tail + m0 q_t(y - c) + (m2 / 2) q_t''(y - c)` with `c` the centroid and
/// `m2` the central second moment.
#[derive(Debug, Clone)]
pub(crate) struct FarModel {
    pub tail: f64,
    pub m0: f64,
    pub center: f64,
    pub m2: f64,
    /// `||f - tail||_1`.
    pub mass: f64,
    kernels: Option<(Arc<StableKernel>, Arc<StableKernel>)>,
}

impl FarModel {
    pub fn new(f: &GridFunction, alpha: f64) -> Self {
        let dx = f.spec.spacing;
        let xs = f.spec.xs();
        let (mut m0, mut m1, mut mass) = (0.0, 0.0, 0.0);
        for (x, v) in xs.iter().zip(&f.values) {
            let g = v - f.tail;
            m0 += g * dx;
            m1 += x * g * dx;
            mass += g.abs() * dx;
        }
        let center = if m0.abs() > 1e-12 * mass { m1 / m0 } else { 0.0 };
        let m2 = xs.iter().zip(&f.values).map(|(x, v)| (x - center).powi(2) * (v - f.tail) * dx).sum();
        let kernels =
            (mass > 0.0).then(|| (StableKernel::get(alpha / 2.0, 0, 0), StableKernel::get(alpha / 2.0, 0, 2)));
        Self { tail: f.tail, m0, center, m2, mass, kernels }
    }

    pub fn eval(&self, t: f64, y: f64) -> f64 {
        match &self.kernels {
            Some((q, q2)) => {
                let z = y - self.center;
                self.tail + self.m0 * q.eval(t, z) + 0.5 * self.m2 * q2.eval(t, z)
            }
            None => self.tail,
        }
    }
}

/// `f_t` anywhere on the line: cubic interpolation inside the grid, the far
/// model outside.
pub(crate) struct LineProfile<'a> {
    pub spec: GridSpec,
    pub values: &'a [f64],
    pub model: &'a FarModel,
    pub t: f64,
}

impl LineProfile<'_> {
    pub fn eval(&self, y: f64) -> f64 {
        let (l, dx) = (self.spec.half_extent, self.spec.spacing);
        if y.abs() > l - dx {
            return self.model.eval(self.t, y);
        }
        let u = (y + l) / dx;
        let i = (u.floor() as usize).clamp(1, self.spec.cells() - 2);
        let s = u - i as f64;
        let v = &self.values[i - 1..i + 3];
        let (sm, s1, s2) = (s + 1.0, s - 1.0, s - 2.0);
        -s * s1 * s2 / 6.0 * v[0] + sm * s1 * s2 / 2.0 * v[1] - sm * s * s2 / 2.0 * v[2] + sm * s * s1 / 6.0 * v[3]
    }
}

/// `Gamma` with truncation `radius` at every node of the inner half of
/// `spec`. `values` are `f_t` on `spec`; the stencil runs to `L/2` on the
/// grid, then to `radius` through `profile`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gamma_inner(
    table: &JumpTable,
    alpha: f64,
    spec: GridSpec,
    values: &[f64],
    tail: f64,
    radius: f64,
    profile: &LineProfile<'_>,
) -> Vec<f64> {
    let dx = spec.spacing;
    let kmax = spec.cells() / 4;
    debug_assert_eq!(table.kmax(), kmax);
    let n_in = spec.cells() / 2 + 1;
    let off = kmax;
    let s: Vec<f64> = values.iter().map(|v| v - tail).collect();
    let w = table.weights(radius / dx);

    let near = NEAR.min(kmax);
    let mut out: Vec<f64> = (0..n_in)
        .map(|i| {
            let g = off + i;
            let fi = s[g];
            (1..=near)
                .map(|k| {
                    let (a, b) = (s[g + k] - fi, s[g - k] - fi);
                    w[k] * (a * a + b * b)
                })
                .sum()
        })
        .collect();

    if w[near + 1..].iter().any(|&v| v != 0.0) {
        let mut half = w.clone();
        half[..=near].iter_mut().for_each(|v| *v = 0.0);
        let total: f64 = half.iter().sum();
        let sq: Vec<f64> = s.iter().map(|v| v * v).collect();
        let a2 = correlate_symmetric(&sq, &half);
        let a1 = correlate_symmetric(&s, &half);
        for (i, o) in out.iter_mut().enumerate() {
            let g = off + i;
            *o += a2[g] - 2.0 * s[g] * a1[g] + 2.0 * total * s[g] * s[g];
        }
    }
    let scale = dx.powf(-alpha);
    out.iter_mut().for_each(|v| *v *= scale);

    let h0 = kmax as f64 * dx;
    if radius > h0 {
        let far_at = |i: usize| {
            let g = off + i;
            far_jump(alpha, spec.x(g), values[g], h0, radius, |y| profile.eval(y))
        };
        let mut nodes: Vec<usize> = (0..n_in).step_by(FAR_STRIDE).collect();
        if *nodes.last().unwrap() != n_in - 1 {
            nodes.push(n_in - 1);
        }
        let far: Vec<f64> = nodes.iter().map(|&i| far_at(i)).collect();
        for pair in 0..nodes.len() - 1 {
            let (i0, i1) = (nodes[pair], nodes[pair + 1]);
            for i in i0..=i1 {
                let th = (i - i0) as f64 / (i1 - i0) as f64;
                out[i] += (1.0 - th) * far[pair] + th * far[pair + 1];
            }
        }
    }
    out.iter_mut().for_each(|v| *v = v.max(0.0));
    out
}

/// `Gamma` with truncation `radius` at every node of a periodic grid (the
/// last node repeats the first). The stencil wraps for `PERIODS` periods;
/// beyond, the period mean of `(f - f(x))^2` is integrated analytically.
pub(crate) fn gamma_periodic(table: &JumpTable, alpha: f64, spec: GridSpec, values: &[f64], radius: f64) -> Vec<f64> {
    let dx = spec.spacing;
    let cells = spec.cells();
    let mean = values[..cells].iter().sum::<f64>() / cells as f64;
    let s: Vec<f64> = values[..cells].iter().map(|v| v - mean).collect();
    let w = table.weights(radius / dx);
    let mut kern = vec![0.0; cells];
    for (k, &wk) in w.iter().enumerate().skip(1) {
        let m = k % cells;
        kern[m] += wk;
        kern[(cells - m) % cells] += wk;
    }
    let total: f64 = kern.iter().sum();
    let sq: Vec<f64> = s.iter().map(|v| v * v).collect();
    let c2 = correlate_circular(&sq, &kern);
    let c1 = correlate_circular(&s, &kern);
    let scale = dx.powf(-alpha);
    let h0 = table.kmax() as f64 * dx;
    let remainder = if radius > h0 {
        let inv = if radius.is_finite() { radius.powf(-alpha) } else { 0.0 };
        (2.0 / alpha) * (h0.powf(-alpha) - inv)
    } else {
        0.0
    };
    let msq = sq.iter().sum::<f64>() / cells as f64;
    let mut out: Vec<f64> = (0..cells)
        .map(|i| {
            let grid = c2[i] - 2.0 * s[i] * c1[i] + total * s[i] * s[i];
            let rest = remainder * (msq + s[i] * s[i]);
            (grid * scale + rest).max(0.0)
        })
        .collect();
    out.push(out[0]);
    out
}

/// Grid index of `x`, which must be a node.
pub(crate) fn node(spec: &GridSpec, x: f64) -> Result<usize> {
    let i = spec.index_of(x).ok_or(Error::Boundary { x })?;
    if (spec.x(i) - x).abs() > 1e-9 * spec.spacing.max(x.abs()) {
        return Err(invalid("x", format!("{x} is not a grid node")));
    }
    Ok(i)
}

/// `Gamma_alpha(f_t, f_t)(x)`: the jump energy of `f_t` at `x` over `|h| < t^{2/alpha}`.
pub fn gamma_alpha(field: &ExtensionField, t: f64, x: f64) -> Result<f64> {
    gamma_truncated(field, t, x, field.params.radius(t))
}

/// The untruncated jump energy `int (f_t(x+h) - f_t(x))^2 |h|^{-1-alpha} dh`.
pub fn gamma_full(field: &ExtensionField, t: f64, x: f64) -> Result<f64> {
    gamma_truncated(field, t, x, f64::INFINITY)
}

/// Jump energy of `f_t` at the node `x` over `|h| < radius` (`radius` may be
/// infinite). On a line field `x` must lie in the inner half of the grid.
pub fn gamma_truncated(field: &ExtensionField, t: f64, x: f64, radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(invalid("radius", format!("{radius} must be > 0")));
    }
    let spec = field.spec();
    let alpha = field.params.alpha;
    let dx = spec.spacing;
    let i = node(&spec, x)?;
    let slice = field.slice(t)?;
    let f = &slice.values.values;
    let fx = f[i];
    if field.is_periodic() {
        let cells = spec.cells();
        let table = JumpTable::new(alpha, PERIODS * cells);
        let w = table.weights(radius / dx);
        let i = i % cells;
        let mean = f[..cells].iter().sum::<f64>() / cells as f64;
        let mut sum = 0.0;
        for (k, &wk) in w.iter().enumerate().skip(1) {
            if wk == 0.0 {
                continue;
            }
            let (a, b) = (f[(i + k) % cells] - fx, f[(i + cells - k % cells) % cells] - fx);
            sum += wk * (a * a + b * b);
        }
        let h0 = table.kmax() as f64 * dx;
        let mut total = sum * dx.powf(-alpha);
        if radius > h0 {
            let inv = if radius.is_finite() { radius.powf(-alpha) } else { 0.0 };
            let msq = f[..cells].iter().map(|v| (v - mean).powi(2)).sum::<f64>() / cells as f64;
            total += (2.0 / alpha) * (h0.powf(-alpha) - inv) * (msq + (fx - mean).powi(2));
        }
        return Ok(total.max(0.0));
    }
    if x.abs() > spec.half_extent / 2.0 + 1e-9 * dx {
        return Err(Error::Boundary { x });
    }
    let kmax = spec.cells() / 4;
    let table = JumpTable::new(alpha, kmax);
    let w = table.weights(radius / dx);
    let mut sum = 0.0;
    for (k, &wk) in w.iter().enumerate().skip(1) {
        let (a, b) = (f[i + k] - fx, f[i - k] - fx);
        sum += wk * (a * a + b * b);
    }
    let mut total = sum * dx.powf(-alpha);
    let h0 = kmax as f64 * dx;
    if radius > h0 {
        let model = FarModel::new(&field.base, alpha);
        let profile = LineProfile { spec, values: f, model: &model, t };
        total += far_jump(alpha, x, fx, h0, radius, |y| profile.eval(y));
    }
    Ok(total.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_head_matrix() {
        let m = [[1.0, 1.0, 1.0], [4.0, 16.0, 64.0], [9.0, 81.0, 729.0]];
        let inv = invert3(m);
        for i in 0..3 {
            for j in 0..3 {
                let p: f64 = (0..3).map(|k| m[i][k] * inv[k][j]).sum();
                assert!((p - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn weights_integrate_polynomial_energies() {
        // u^2 and u^4 are reproduced exactly everywhere, u^6 on the head.
        let alpha = 1.3;
        let table = JumpTable::new(alpha, 64);
        for rho in [0.4, 1.0, 2.5, 7.0, 64.0] {
            let w = table.weights(rho);
            for e in [2, 4] {
                let got: f64 = w.iter().enumerate().map(|(k, wk)| wk * (k as f64).powi(e)).sum();
                let want = rho.powf(e as f64 - alpha) / (e as f64 - alpha);
                assert!((got - want).abs() < 1e-9 * want, "rho={rho}: {got} vs {want}");
            }
        }
        let w = table.weights(0.7);
        for e in [4, 6] {
            let got: f64 = w.iter().enumerate().map(|(k, wk)| wk * (k as f64).powi(e)).sum();
            let want = 0.7f64.powf(e as f64 - alpha) / (e as f64 - alpha);
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn far_rule_on_constant_energy() {
        let alpha = 1.5;
        let got = far_jump(alpha, 0.0, 1.0, 2.0, f64::INFINITY, |_| 0.0);
        let want = 2.0 * 2f64.powf(-alpha) / alpha;
        assert!((got - want).abs() < 1e-13);
    }
}
