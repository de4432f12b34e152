//! Centred Hardy-Littlewood maximal function and sliding-window maxima.

use std::collections::VecDeque;

use crate::grid::GridFunction;

/// Ratio between consecutive radii of the averaging menu.
const RADIUS_RATIO: f64 = 1.01;

/// `int_{-inf}^y |f|` up to a constant, for the piecewise-linear interpolant
/// of `|f|` on the grid and `|tail|` outside.
struct AbsPrimitive<'a> {
    f: &'a GridFunction,
    prefix: Vec<f64>,
}

impl<'a> AbsPrimitive<'a> {
    fn new(f: &'a GridFunction) -> Self {
        let dx = f.spec.spacing;
        let mut prefix = vec![0.0; f.values.len()];
        for i in 1..prefix.len() {
            prefix[i] = prefix[i - 1] + 0.5 * dx * (f.values[i - 1].abs() + f.values[i].abs());
        }
        Self { f, prefix }
    }

    fn at(&self, y: f64) -> f64 {
        let spec = self.f.spec;
        let (l, dx) = (spec.half_extent, spec.spacing);
        let tail = self.f.tail.abs();
        if y <= -l {
            return (y + l) * tail;
        }
        let last = self.prefix.len() - 1;
        if y >= l {
            return self.prefix[last] + (y - l) * tail;
        }
        let u = (y + l) / dx;
        let m = (u.floor() as usize).min(last - 1);
        let th = u - m as f64;
        let (a, b) = (self.f.values[m].abs(), self.f.values[m + 1].abs());
        self.prefix[m] + dx * th * (a + 0.5 * th * (b - a))
    }
}

/// `M(f)(x) = sup_r (2r)^{-1} int_{x-r}^{x+r} |f|` at every node, over the
/// radii `dx/2 * 1.01^k` up to `4L`, together with the `r -> 0` limit `|f(x)|`.
pub fn hl_values(f: &GridFunction) -> Vec<f64> {
    let spec = f.spec;
    let prim = AbsPrimitive::new(f);
    let mut radii = Vec::new();
    let mut r = spec.spacing / 2.0;
    while r <= 4.0 * spec.half_extent {
        radii.push(r);
        r *= RADIUS_RATIO;
    }
    spec.xs()
        .iter()
        .zip(&f.values)
        .map(|(&x, v)| radii.iter().map(|&r| (prim.at(x + r) - prim.at(x - r)) / (2.0 * r)).fold(v.abs(), f64::max))
        .collect()
}

/// `max_{|j - i| <= k} a_j` for every `i`, with the window clipped to the array.
pub(crate) fn sliding_max(a: &[f64], k: usize) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n];
    let mut q: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for (i, o) in out.iter_mut().enumerate() {
        let hi = (i + k).min(n - 1);
        while next <= hi {
            while q.back().is_some_and(|&j| a[j] <= a[next]) {
                q.pop_back();
            }
            q.push_back(next);
            next += 1;
        }
        while q.front().is_some_and(|&j| j + k < i) {
            q.pop_front();
        }
        *o = a[q[0]];
    }
    out
}

/// As [`sliding_max`] on a periodic array.
pub(crate) fn sliding_max_periodic(a: &[f64], k: usize) -> Vec<f64> {
    let n = a.len();
    if 2 * k + 1 >= n {
        let m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        return vec![m; n];
    }
    let ext: Vec<f64> = (0..n + 2 * k).map(|j| a[(j + n - k) % n]).collect();
    sliding_max(&ext, k)[k..k + n].to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sliding_max_matches_brute_force() {
        let a: Vec<f64> = (0..50).map(|i| ((i * 37 % 23) as f64).sin()).collect();
        for k in [0, 1, 3, 10, 60] {
            let got = sliding_max(&a, k);
            for i in 0..a.len() {
                let lo = i.saturating_sub(k);
                let hi = (i + k).min(a.len() - 1);
                let want = a[lo..=hi].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(got[i], want);
            }
            let got = sliding_max_periodic(&a, k);
            for i in 0..a.len() {
                let want =
                    (0..=2 * k).map(|d| a[(i + a.len() * 4 + d - k) % a.len()]).fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(got[i], want);
            }
        }
    }
}
