use std::f64::consts::PI;

use proptest::prelude::*;
use stablelp::density::StableKernel;
use stablelp::extension::ExtensionField;
use stablelp::fixtures::Fixture;
use stablelp::functionals::{
    comparability_constant, gamma_alpha, gamma_full, gamma_truncated, hl_maximal, horizontal_symbol_constant,
    maximal_ratio, FunctionalName, Functionals, LambdaKernel,
};
use stablelp::quad::{composite_gl, gauss_legendre};
use stablelp::{GridFunction, GridSpec, StableParams, TimeGrid};

fn periodic_spec() -> GridSpec {
    GridSpec::new(8.0 * PI, PI / 64.0).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `int_{|h|<r} g(h) |h|^{-1-alpha} dh` for even `g` vanishing like `h^2` or faster
/// at the origin. `h = r w^m` with `m (2 - alpha) = 2` makes the integrand
/// regular at `w = 0`.
fn singular_even(g: impl Fn(f64) -> f64, alpha: f64, r: f64) -> f64 {
    let m = 2.0 / (2.0 - alpha);
    let panels = (64.0 * (1.0 + r)).ceil() as usize;
    2.0 * composite_gl(
        |w: f64| {
            if w == 0.0 {
                return 0.0;
            }
            let h = r * w.powf(m);
            g(h) * h.powf(-1.0 - alpha) * r * m * w.powf(m - 1.0)
        },
        0.0,
        1.0,
        panels.min(20_000),
        8,
    )
}

/// `int_0^inf F(t) dt` on `u = ln t` over `[ln 1e-7, ln 40]`.
fn time_integral(f: impl Fn(f64) -> f64) -> f64 {
    composite_gl(|u: f64| f(u.exp()) * u.exp(), (1e-7f64).ln(), 40f64.ln(), 160, 8)
}

fn a_moment(alpha: f64, r: f64) -> f64 {
    singular_even(|h| (1.0 - h.cos()).powi(2), alpha, r)
}

fn b_moment(alpha: f64, r: f64) -> f64 {
    singular_even(|h| h.sin().powi(2), alpha, r)
}

#[test]
fn truncated_energy_of_cosine() {
    let p = StableParams::one_d(1.0).unwrap();
    let f = Fixture::Cos.sample(periodic_spec()).unwrap();
    let field = ExtensionField::with_pad(f, p, TimeGrid::default(), 1).unwrap();
    let got = gamma_alpha(&field, 1.0, 0.0).unwrap();
    // f_1 = e^{-1} cos, radius 1
    let (nodes, weights) = gauss_legendre(40);
    let direct: f64 = nodes
        .iter()
        .zip(&weights)
        .map(|(s, w)| {
            let h = 0.5 * (s + 1.0);
            0.5 * w * ((1.0 - h.cos()) / h).powi(2)
        })
        .sum::<f64>()
        * 2.0
        * (-2.0f64).exp();
    assert!(rel(got, direct) < 1e-4, "{got} vs {direct}");
    // int_R (1 - cos h)^2 / h^2 dh = pi
    let full = gamma_full(&field, 1.0, 0.0).unwrap();
    let want = PI * (-2.0f64).exp();
    assert!(rel(full, want) < 1e-4, "{full} vs {want}");
}

#[test]
fn truncated_energy_at_other_points_and_orders() {
    let spec = periodic_spec();
    let f = Fixture::Cos.sample(spec).unwrap();
    for alpha in [0.7, 1.5, 1.9] {
        let p = StableParams::one_d(alpha).unwrap();
        let field = ExtensionField::with_pad(f.clone(), p, TimeGrid::default(), 1).unwrap();
        for (t, x) in [(0.3f64, 0.0f64), (1.0, spec.x(spec.center() + 40)), (2.5, spec.x(17))] {
            let r = t.powf(2.0 / alpha);
            let decay = (-2.0 * t).exp();
            let want = decay * (x.cos().powi(2) * a_moment(alpha, r) + x.sin().powi(2) * b_moment(alpha, r));
            let got = gamma_alpha(&field, t, x).unwrap();
            assert!(rel(got, want) < 1e-4, "alpha={alpha} t={t} x={x}: {got} vs {want}");
        }
    }
}

#[test]
fn truncation_is_monotone_and_full_dominates() {
    let spec = GridSpec::new(16.0, 1.0 / 32.0).unwrap();
    let p = StableParams::one_d(1.5).unwrap();
    let f = Fixture::Gauss.sample(spec).unwrap();
    let field = ExtensionField::new(f, p, TimeGrid::default()).unwrap();
    for t in [0.05f64, 0.5, 2.0] {
        let r = t.powf(2.0 / 1.5);
        for x in [0.0, 0.5, -3.0, 7.5] {
            let whole = gamma_alpha(&field, t, x).unwrap();
            let half = gamma_truncated(&field, t, x, r / 2.0).unwrap();
            let full = gamma_full(&field, t, x).unwrap();
            assert!(half <= whole * (1.0 + 1e-12), "t={t} x={x}");
            assert!(whole <= full * (1.0 + 1e-12), "t={t} x={x}");
        }
    }
}

#[test]
fn stencil_outside_inner_half_rejected() {
    let spec = GridSpec::new(16.0, 1.0 / 32.0).unwrap();
    let p = StableParams::one_d(1.5).unwrap();
    let field = ExtensionField::new(Fixture::Gauss.sample(spec).unwrap(), p, TimeGrid::default()).unwrap();
    assert!(gamma_alpha(&field, 1.0, 12.0).is_err());
    assert!(gamma_alpha(&field, 0.0, 0.0).is_err());
    assert!(gamma_alpha(&field, 1.0, 0.01).is_err());
}

#[test]
fn pure_frequency_vertical_functional() {
    let p = StableParams::one_d(1.5).unwrap();
    let f = Fixture::Cos.sample(periodic_spec()).unwrap();
    let e = Functionals::periodic(&f, p, TimeGrid::default()).unwrap();
    let up = e.g_up().unwrap();
    let spec = up.values.spec;
    // (int t e^{-2t} dt)^{1/2} cos x
    for i in [spec.center(), spec.center() + 21, 5] {
        let want = 0.5 * spec.x(i).cos().abs();
        assert!((up.values.values[i] - want).abs() < 1e-3, "x={}", spec.x(i));
    }
}

/// For even `f`, `G(0)^2 = int int g(xi) g(eta) (xi eta)^b / (xi^b + eta^b)^2`
/// with `b = alpha / 2` and `g = f_hat / pi` on the half line.
#[test]
fn windowed_cosine_vertical_functional_at_origin() {
    let spec = GridSpec::new(64.0, 1.0 / 32.0).unwrap();
    let alpha = 1.5;
    let p = StableParams::one_d(alpha).unwrap();
    let f = Fixture::Coswin.sample(spec).unwrap();
    let up = Functionals::new(&f, p, TimeGrid::default()).unwrap().g_up().unwrap();
    let at0 = up.values.value_at_x(0.0).unwrap();

    let b = alpha / 2.0;
    let g =
        |xi: f64| (16.0 * PI).sqrt() * ((-16.0 * (xi - 1.0).powi(2)).exp() + (-16.0 * (xi + 1.0).powi(2)).exp()) / PI;
    let (z, w) = gauss_legendre(64);
    let nodes: Vec<(f64, f64)> = (0..12)
        .flat_map(|panel| {
            let lo = 0.25 * panel as f64;
            z.iter().zip(&w).map(move |(zi, wi)| (lo + 0.125 * (zi + 1.0), 0.125 * wi))
        })
        .collect();
    let mut sum = 0.0;
    for &(xi, wx) in &nodes {
        for &(eta, we) in &nodes {
            let (a, c) = (xi.powf(b), eta.powf(b));
            sum += wx * we * g(xi) * g(eta) * a * c / (a + c).powi(2);
        }
    }
    let want = sum.sqrt();
    assert!((want - 0.5).abs() < 5e-3);
    assert!((at0 - want).abs() < 1e-3 * want, "{at0} vs {want}");
}

#[test]
fn area_functional_of_cosine() {
    let alpha = 1.5;
    let p = StableParams::one_d(alpha).unwrap();
    let f = Fixture::Cos.sample(periodic_spec()).unwrap();
    let got = Functionals::periodic(&f, p, TimeGrid::default()).unwrap().area().unwrap();
    let got = got.values.value_at_x(0.0).unwrap();
    let want = time_integral(|t| {
        let r = t.powf(2.0 / alpha);
        let s = (2.0 * r).sin() / 2.0;
        t.powf(1.0 - 2.0 / alpha) * (-2.0 * t).exp() * (a_moment(alpha, r) * (r + s) + b_moment(alpha, r) * (r - s))
    })
    .sqrt();
    assert!(rel(got, want) < 1e-3, "{got} vs {want}");
}

#[test]
fn smoothed_functional_of_cosine() {
    let alpha = 1.5;
    let p = StableParams::one_d(alpha).unwrap();
    let f = Fixture::Cos.sample(periodic_spec()).unwrap();
    let got = Functionals::periodic(&f, p, TimeGrid::default()).unwrap().l_star().unwrap();
    let got = got.values.value_at_x(0.0).unwrap();
    let want = time_integral(|t| {
        let r = t.powf(2.0 / alpha);
        let (a, b) = (a_moment(alpha, r), b_moment(alpha, r));
        let damp = (-t * 2f64.powf(alpha / 2.0)).exp();
        t * (-2.0 * t).exp() * ((a + b) / 2.0 + (a - b) / 2.0 * damp)
    })
    .sqrt();
    assert!(rel(got, want) < 1e-3, "{got} vs {want}");
}

#[test]
fn horizontal_ratio_matches_symbol_constant() {
    let alpha = 1.5;
    // C(alpha)^2 = int tau e^{-2 tau} int_{|u| < tau^{2/alpha}} (2 - 2 cos u) |u|^{-1-alpha} du dtau
    let c2 = time_integral(|tau| {
        tau * (-2.0 * tau).exp() * singular_even(|u| 2.0 - 2.0 * u.cos(), alpha, tau.powf(2.0 / alpha))
    });
    let c = c2.sqrt();
    let h = horizontal_symbol_constant(alpha).unwrap();
    assert!(rel(h, c) < 1e-4, "{h} vs {c}");
    assert!((h - 0.947137).abs() < 1e-6, "{h}");
    let spec = GridSpec::new(32.0, 1.0 / 32.0).unwrap();
    let p = StableParams::one_d(alpha).unwrap();
    for fx in [Fixture::Gauss, Fixture::Indicator] {
        let f = fx.sample(spec).unwrap();
        let r = Functionals::new(&f, p, TimeGrid::default()).unwrap().g_arrow_alpha().unwrap();
        let ratio = r.constants["l2_ratio"];
        assert!(rel(ratio, c) < 1e-2, "{fx}: {ratio} vs {c}");
    }
}

#[test]
fn lambda_kernel_mass() {
    let p = StableParams::one_d(1.5).unwrap();
    let two = LambdaKernel::new(2.0, 1.0, &p).unwrap().mass().unwrap();
    assert!((two - 2.0).abs() < 1e-6, "{two}");
    for lambda in [1.25, 1.75, 3.0] {
        let want = 2.0 / (lambda - 1.0);
        for t in [1e-3, 0.1, 1.0, 30.0] {
            let m = LambdaKernel::new(lambda, t, &p).unwrap().mass().unwrap();
            assert!(rel(m, want) < 1e-5, "lambda={lambda} t={t}: {m}");
        }
    }
    assert!(LambdaKernel::new(1.0, 1.0, &p).is_err());
    let k = LambdaKernel::new(1.75, 0.4, &p).unwrap();
    let xs: Vec<f64> = (0..200).map(|i| i as f64 * 0.1).collect();
    assert!(xs.windows(2).all(|w| k.eval(w[1]) <= k.eval(w[0])));
}

#[test]
fn comparability_constant_bounds_kernel_ratio() {
    for alpha in [1.0, 1.5] {
        let p = StableParams::one_d(alpha).unwrap();
        let c = comparability_constant(&p).unwrap();
        let q = StableKernel::get(alpha / 2.0, 0, 0);
        for u in [0.0f64, 0.3, 1.0, 4.0, 50.0, 1e3, 1e5] {
            let k = (1.0 + u).powf(-p.lambda0());
            assert!(k <= c * q.eval(1.0, u) * (1.0 + 1e-9), "alpha={alpha} u={u}");
        }
    }
}

#[test]
fn hardy_littlewood_on_indicator() {
    let spec = GridSpec::new(8.0, 1.0 / 64.0).unwrap();
    let f = Fixture::Indicator.sample(spec).unwrap();
    let m = hl_maximal(&f).unwrap();
    assert!((m.values.value_at_x(0.0).unwrap() - 1.0).abs() < spec.spacing);
    assert!((m.values.value_at_x(2.0).unwrap() - 1.0 / 3.0).abs() < spec.spacing);
    let g = Fixture::Gauss.sample(spec).unwrap();
    let mg = hl_maximal(&g).unwrap();
    assert!(mg.values.values.iter().zip(&g.values).all(|(m, v)| *m >= v.abs()));
}

#[test]
fn parabolic_maximal_function() {
    let spec = GridSpec::new(32.0, 1.0 / 32.0).unwrap();
    let p = StableParams::one_d(1.5).unwrap();
    let f = Fixture::Gauss.sample(spec).unwrap();
    let e = Functionals::new(&f, p, TimeGrid::default()).unwrap();
    let n = e.n_alpha().unwrap();
    let m = e.hl().unwrap();
    assert!((n.values.value_at_x(0.0).unwrap() - 1.0).abs() < 1e-3);
    let c = maximal_ratio(&n, &m).unwrap();
    assert!(c.is_finite() && c >= 1.0 - 1e-12, "{c}");

    let one = Fixture::Constant(1.0).sample(spec).unwrap();
    let n1 = Functionals::new(&one, p, TimeGrid::default()).unwrap().n_alpha().unwrap();
    assert!(n1.values.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
}

#[test]
fn zero_input_gives_zero_everywhere() {
    let spec = GridSpec::new(8.0, 1.0 / 16.0).unwrap();
    let p = StableParams::one_d(1.5).unwrap();
    let zero = GridFunction::zeros(spec);
    let e = Functionals::new(&zero, p, TimeGrid::default()).unwrap();
    for name in FunctionalName::ALL {
        let r = e.evaluate(name, None).unwrap();
        assert!(r.values.values.iter().all(|v| *v == 0.0), "{name}");
    }
}

#[test]
fn constant_input_has_no_oscillation() {
    let spec = GridSpec::new(8.0, 1.0 / 16.0).unwrap();
    let p = StableParams::one_d(1.2).unwrap();
    let c = Fixture::Constant(2.5).sample(spec).unwrap();
    let e = Functionals::new(&c, p, TimeGrid::default()).unwrap();
    for name in [FunctionalName::GUp, FunctionalName::GArrowAlpha, FunctionalName::A, FunctionalName::LStar] {
        let r = e.evaluate(name, None).unwrap();
        assert!(r.sup() < 1e-9, "{name}: {}", r.sup());
    }
}

#[test]
fn pointwise_chains_on_line() {
    let spec = GridSpec::new(16.0, 1.0 / 32.0).unwrap();
    let p = StableParams::one_d(1.5).unwrap();
    let f = Fixture::Gauss.sample(spec).unwrap();
    let e = Functionals::new(&f, p, TimeGrid::default()).unwrap();
    let l0 = p.lambda0();
    let area = e.area().unwrap();
    let star = e.g_star_arrow(l0).unwrap();
    let lstar = e.l_star().unwrap();
    let c = lstar.constants["comparability_c"];
    let up = e.g_up().unwrap();
    let ga = e.g_alpha().unwrap();
    for i in 0..area.values.len() {
        assert!(area.values.values[i] <= 2f64.powf(l0 / 2.0) * star.values.values[i] + 1e-12);
        assert!(star.values.values[i] <= c.sqrt() * lstar.values.values[i] + 1e-12);
        assert!(ga.values.values[i] >= up.values.values[i]);
    }
    assert!(e.g_star(1.0).is_err());
}

#[test]
fn periodic_star_is_unsupported() {
    let p = StableParams::one_d(1.5).unwrap();
    let f = Fixture::Cos.sample(periodic_spec()).unwrap();
    let e = Functionals::periodic(&f, p, TimeGrid::default()).unwrap();
    assert!(e.g_star_arrow(p.lambda0()).is_err());
}

#[test]
fn report_serialises_norms() {
    let spec = GridSpec::new(8.0, 1.0 / 16.0).unwrap();
    let p = StableParams::one_d(1.5).unwrap();
    let f = Fixture::Gauss.sample(spec).unwrap();
    let r =
        Functionals::new(&f, p, TimeGrid::default()).unwrap().with_p_norms(&[2.0, 3.0, f64::INFINITY]).g_up().unwrap();
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["name"], "G_up");
    assert!(json["p_norms"]["inf"].as_f64().unwrap() > 0.0);
    assert!(r.norm(3.0).unwrap() > 0.0);
}

fn bumps() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((-2.0f64..2.0, -3.0f64..3.0, 0.3f64..2.0), 1..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn energy_is_nonnegative_and_quadratic(b in bumps(), c in -3.0f64..3.0, t in 0.05f64..3.0, alpha in 0.6f64..1.9) {
        let spec = GridSpec::new(8.0, 1.0 / 16.0).unwrap();
        let p = StableParams::one_d(alpha).unwrap();
        let g = |x: f64| b.iter().map(|(a, m, w)| a * (-((x - m) / w).powi(2)).exp()).sum::<f64>();
        let f = GridFunction::from_fn(spec, g).unwrap();
        let fc = f.scale(c);
        let field = ExtensionField::new(f, p, TimeGrid::default()).unwrap();
        let scaled = ExtensionField::new(fc, p, TimeGrid::default()).unwrap();
        for x in [0.0, -1.25, 3.0] {
            let one = gamma_alpha(&field, t, x).unwrap();
            let two = gamma_alpha(&scaled, t, x).unwrap();
            let full = gamma_full(&field, t, x).unwrap();
            prop_assert!(one >= 0.0 && full >= one);
            let sup = field.slice(t).unwrap().values.sup_norm().powi(2).max(1e-300);
            prop_assert!((two - c * c * one).abs() <= 1e-10 * c * c * sup.max(one));
        }
    }
}
