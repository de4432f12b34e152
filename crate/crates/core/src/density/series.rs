//! Large-|x| expansions of isotropic stable densities and of the one-sided
//! stable subordinator density.

use std::f64::consts::PI;

use statrs::function::gamma::{gamma, ln_gamma};

use crate::spectral::PowerTail;

/// Coefficient `a_n` in `p(t, x) ~ sum_n a_n t^n |x|^{-n beta - d}` for the
/// density with symbol `exp(-t |xi|^beta)` in dimension `d`.
pub fn density_coefficient(beta: f64, d: usize, n: usize) -> f64 {
    let nb = n as f64 * beta;
    let dd = d as f64;
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    let log_mag = ln_gamma(nb / 2.0 + 1.0) + ln_gamma((nb + dd) / 2.0) + nb * 2f64.ln()
        - ln_gamma(n as f64 + 1.0)
        - (dd / 2.0 + 1.0) * PI.ln();
    sign * log_mag.exp() * (n as f64 * PI * beta / 2.0).sin()
}

/// Leading tail terms of `d_t^m d_x^k p(t, x)` in one dimension, evaluated
/// at `time`.
pub fn tail_terms(beta: f64, time: f64, m: usize, k: usize, nterms: usize) -> Vec<PowerTail> {
    let mut out = Vec::with_capacity(nterms);
    for n in 1..=nterms {
        if n < m {
            continue;
        }
        let a = density_coefficient(beta, 1, n);
        if a == 0.0 {
            continue;
        }
        // d_t^m t^n = n!/(n-m)! t^{n-m}
        let falling: f64 = (0..m).map(|j| (n - j) as f64).product();
        let mut coef = a * falling * time.powi((n - m) as i32);
        let mut exponent = n as f64 * beta + 1.0;
        for _ in 0..k {
            coef *= -exponent;
            exponent += 1.0;
        }
        out.push(PowerTail { coef, exponent, odd: k % 2 == 1 });
    }
    out
}

pub fn eval_terms(terms: &[PowerTail], x: f64) -> f64 {
    terms.iter().map(|t| t.eval(x)).sum()
}

/// `int_L^inf` of the tail terms (even terms only; odd terms integrate to
/// zero over symmetric regions).
pub fn tail_integral(terms: &[PowerTail], l: f64) -> f64 {
    terms.iter().filter(|t| !t.odd).map(|t| t.coef * l.powf(1.0 - t.exponent) / (t.exponent - 1.0)).sum()
}

/// Series `g(v) = (1/pi) sum (-1)^{n+1} Gamma(n beta + 1)/n! sin(n pi beta) v^{-n beta - 1}`
/// of the one-sided `beta`-stable density with Laplace transform `exp(-lambda^beta)`.
pub fn subordinator_series(beta: f64, v: f64) -> f64 {
    let lv = v.ln();
    let mut sum = 0.0;
    for n in 1..400 {
        let nb = n as f64 * beta;
        let s = (n as f64 * PI * beta).sin();
        let mag = (ln_gamma(nb + 1.0) - ln_gamma(n as f64 + 1.0) - (nb + 1.0) * lv).exp();
        let term = if n % 2 == 1 { mag * s } else { -mag * s };
        sum += term;
        if n > 4 && mag < 1e-18 * sum.abs() {
            break;
        }
    }
    sum / PI
}

/// Coefficients `b_n` of the subordinator tail `g(v) ~ sum b_n v^{-n beta - 1}`.
pub fn subordinator_coefficient(beta: f64, n: usize) -> f64 {
    let nb = n as f64 * beta;
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    sign * gamma(nb + 1.0) / gamma(n as f64 + 1.0) * (n as f64 * PI * beta).sin() / PI
}
