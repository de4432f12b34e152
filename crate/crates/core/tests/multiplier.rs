use std::f64::consts::{E, PI, SQRT_2};

use proptest::prelude::*;
use rayon::prelude::*;
use stablelp::density::psi_integral_form;
use stablelp::fixtures::Fixture;
use stablelp::multiplier::{
    apply_t, certify, check_cancelation, check_growth, cutoff, cutoff_derivative, dtqt_kernel_bound, norm_ratios,
    tail_split, KernelSpec, Symmetry, TailClass, Verdict,
};
use stablelp::quad::composite_gl;
use stablelp::{GridFunction, GridSpec, StableParams};

fn params() -> StableParams {
    StableParams::one_d(1.5).unwrap()
}

fn small_grid() -> GridSpec {
    GridSpec::new(16.0, 1.0 / 16.0).unwrap()
}

#[test]
fn cancelation_values() {
    let p = params();
    let radii = [(1.0, E), (0.01, 3.0), (2.0, 16.0)];
    assert_eq!(check_cancelation(&KernelSpec::principal_value_inverse(), &radii).unwrap(), 0.0);
    assert_eq!(check_cancelation(&KernelSpec::test_kernel(&p).unwrap(), &radii).unwrap(), 0.0);
    let even = KernelSpec::absolute_inverse();
    let one = check_cancelation(&even, &[(1.0, E)]).unwrap();
    assert!((one - 2.0).abs() < 1e-6, "{one}");
    // 2 ln(R / r), largest over the list
    let all = check_cancelation(&even, &radii).unwrap();
    assert!((all - 2.0 * 300f64.ln()).abs() < 1e-6, "{all}");
    let mirrored = check_cancelation(&even.reflected(), &radii).unwrap();
    assert!((mirrored - all).abs() < 1e-12);
    assert!(check_cancelation(&even, &[(2.0, 1.0)]).is_err());
    assert!(check_cancelation(&even, &[(0.0, 1.0)]).is_err());
}

#[test]
fn cancelation_of_asymmetric_kernel() {
    // kappa = 1_{x>0} x^{-1/2}: int_{r<|x|<R} = 2 (sqrt R - sqrt r)
    let k =
        KernelSpec::new("half", Symmetry::None, TailClass::Weakened, |x: f64| if x > 0.0 { x.powf(-0.5) } else { 0.0 });
    let got = check_cancelation(&k, &[(0.25, 4.0)]).unwrap();
    assert!((got - 3.0).abs() < 1e-9, "{got}");
}

#[test]
fn growth_constants_of_test_kernel() {
    let p = params();
    let spec = small_grid();
    let g = check_growth(&KernelSpec::test_kernel(&p).unwrap(), &p, &spec).unwrap();
    assert!((g.cond_i - 1.0).abs() < 1e-6, "{}", g.cond_i);
    assert!(g.cond_ii <= 1.0 + spec.spacing, "{}", g.cond_ii);
    let classical = check_growth(&KernelSpec::principal_value_inverse(), &p, &spec).unwrap();
    assert!((classical.cond_i - 1.0).abs() < 1e-12);
    // centred differences instead of the analytic derivative
    let plain = KernelSpec::new("test-plain", Symmetry::Odd, TailClass::Weakened, move |x: f64| {
        let a = x.abs();
        x.signum() * if a <= 1.0 { 1.0 / a } else { a.powf(-0.75) }
    });
    let fd = check_growth(&plain, &p, &spec).unwrap();
    assert!(!fd.analytic_derivative);
    assert!(fd.cond_ii.is_finite() && fd.cond_ii < 1.5, "{}", fd.cond_ii);
    assert!(check_growth(&plain, &StableParams::one_d(0.8).unwrap(), &spec).is_err());
}

#[test]
fn smooth_cutoff_shape() {
    assert_eq!(cutoff(0.0), 1.0);
    assert_eq!(cutoff(1.0), 1.0);
    assert_eq!(cutoff(-0.7), 1.0);
    assert_eq!(cutoff(2.0), 0.0);
    assert_eq!(cutoff(5.0), 0.0);
    assert!((cutoff(1.5) - 0.5).abs() < 1e-15);
    let rs: Vec<f64> = (0..=300).map(|i| 1.0 + i as f64 / 300.0).collect();
    assert!(rs.windows(2).all(|w| cutoff(w[1]) <= cutoff(w[0])));
    for r in [1.1, 1.37, 1.5, 1.8, 1.95] {
        let h = 1e-6;
        let fd = (cutoff(r + h) - cutoff(r - h)) / (2.0 * h);
        assert!((fd - cutoff_derivative(r)).abs() < 1e-6, "r={r}");
    }
}

#[test]
fn decomposition_is_a_partition() {
    let p = params();
    for kernel in [KernelSpec::test_kernel(&p).unwrap(), KernelSpec::absolute_inverse()] {
        let (inner, outer) = kernel.decompose();
        for x in small_grid().xs().into_iter().filter(|x| *x != 0.0) {
            let k = kernel.eval(x);
            assert!((inner.eval(x) + outer.eval(x) - k).abs() <= 4.0 * f64::EPSILON * k.abs(), "x={x}");
            if x.abs() <= 1.0 {
                assert_eq!(outer.eval(x), 0.0);
            }
            if x.abs() > SQRT_2 {
                assert_eq!(inner.eval(x), 0.0);
            }
            if kernel.symmetry == Symmetry::Odd {
                assert_eq!(inner.eval(-x), -inner.eval(x));
                assert_eq!(outer.eval(-x), -outer.eval(x));
            }
        }
        assert_eq!(outer.eval(0.0), 0.0);
        for x in [1.05, 1.2, 1.4, 3.0] {
            let h = 1e-6;
            let fd = (outer.eval(x + h) - outer.eval(x - h)) / (2.0 * h);
            assert!((fd - outer.derivative(x).unwrap()).abs() < 1e-5, "x={x}");
        }
    }
}

#[test]
fn decay_bound_for_test_kernel() {
    let p = params();
    let spec = GridSpec::new(16.0, 1.0 / 16.0).unwrap();
    let (_, outer) = KernelSpec::test_kernel(&p).unwrap().decompose();
    let b = dtqt_kernel_bound(&outer, &p, p.multiplier_lambda(), &spec).unwrap();
    assert_eq!(b.lambda, 1.25);
    assert!(b.holds, "{b:?}");
    assert!(b.decay_const.is_finite() && b.decay_const > 0.0);
    assert!(b.spectral_gap <= 1e-4, "{}", b.spectral_gap);
    assert!(b.drift < 0.05);
    assert!(b.values.value_at_x(0.0).unwrap().abs() < 1e-8);
}

/// `(kappa_2 * psi)(x)` by the trapezoid rule on `y = j / 16`, `|y| <= 400`,
/// with `psi` from its subordination integral.
#[test]
fn decay_values_match_subordinated_psi() {
    let p = params();
    let spec = GridSpec::new(16.0, 1.0 / 16.0).unwrap();
    let (_, outer) = KernelSpec::test_kernel(&p).unwrap().decompose();
    let b = dtqt_kernel_bound(&outer, &p, 1.25, &spec).unwrap();
    let (h, reach) = (1.0 / 16.0, 6400i64);
    let psi: Vec<f64> =
        (-reach - 80..=reach + 80).into_par_iter().map(|j| psi_integral_form(&p, j as f64 * h)).collect();
    let at = |j: i64| psi[(j + reach + 80) as usize];
    for xj in [8i64, 32, 80] {
        let sum: f64 = (-reach..=reach).map(|j| outer.eval(j as f64 * h) * at(xj - j)).sum();
        let want = sum * h;
        let got = b.values.value_at_x(xj as f64 * h).unwrap();
        assert!((got - want).abs() < 2e-4, "x={}: {got} vs {want}", xj as f64 * h);
    }
}

#[test]
fn zero_kernel_has_zero_bound() {
    let p = params();
    let zero = KernelSpec::new("zero", Symmetry::Odd, TailClass::Weakened, |_| 0.0);
    let b = dtqt_kernel_bound(&zero, &p, 1.25, &small_grid()).unwrap();
    assert_eq!(b.decay_const, 0.0);
    assert!(b.values.values.iter().all(|v| *v == 0.0));
}

#[test]
fn fat_tail_is_gated() {
    let p = params();
    let (_, outer) = KernelSpec::fat_tail(&p).unwrap().decompose();
    assert!((outer.tail_exponent() - 0.55).abs() < 1e-9);
    assert!(dtqt_kernel_bound(&outer, &p, 1.25, &small_grid()).is_err());
    assert!(dtqt_kernel_bound(&outer, &p, 1.0, &small_grid()).is_err());
}

#[test]
fn three_region_split() {
    let p = params();
    let spec = GridSpec::new(64.0, 1.0 / 16.0).unwrap();
    let (_, outer) = KernelSpec::test_kernel(&p).unwrap().decompose();
    let xs = [2.0, 4.0, 8.0, 16.0];
    let split = tail_split(&outer, &p, 1.25, &xs).unwrap();
    assert!(split.constants.iter().all(|c| c.is_finite()));
    assert!(split.drift < 0.05, "{}", split.drift);
    let b = dtqt_kernel_bound(&outer, &p, 1.25, &spec).unwrap();
    for s in &split.points {
        let whole: f64 = s.parts.iter().sum();
        let direct = b.values.value_at_x(s.x).unwrap();
        assert!((whole - direct).abs() < 1e-9, "x={}: {whole} vs {direct}", s.x);
        for (k, part) in s.parts.iter().enumerate() {
            assert!(part.abs() <= split.constants[k] * s.x.abs().powf(-1.25) * (1.0 + 1e-12));
        }
    }
    assert!(tail_split(&outer, &p, 1.25, &[0.5]).is_err());
}

#[test]
fn hilbert_kernel_l2_constant() {
    let spec = GridSpec::new(64.0, 1.0 / 64.0).unwrap();
    let f = Fixture::Gauss.sample(spec).unwrap();
    let r = norm_ratios(&f, &KernelSpec::principal_value_inverse(), &[2.0]).unwrap()[0];
    assert!((r - PI).abs() < 1e-2, "{r}");
}

/// The Hilbert transform of `exp(-x^2)`, `p.v. int f(x-y)/y dy`, equals
/// `2 sqrt(pi) D(x)` with `D` Dawson's function.
#[test]
fn hilbert_kernel_pointwise() {
    let spec = GridSpec::new(16.0, 1.0 / 64.0).unwrap();
    let f = Fixture::Gauss.sample(spec).unwrap();
    let tf = apply_t(&f, &KernelSpec::principal_value_inverse()).unwrap();
    let dawson = |x: f64| composite_gl(|s: f64| (s * s - x * x).exp(), 0.0, x, 64, 8);
    for x in [0.0, 0.5, 1.0, 2.5, -3.0] {
        let want = 2.0 * PI.sqrt() * dawson(x);
        let got = tf.value_at_x(x).unwrap();
        assert!((got - want).abs() < 1e-4, "x={x}: {got} vs {want}");
    }
}

#[test]
fn operator_is_linear_and_translation_equivariant() {
    let p = params();
    let spec = small_grid();
    let k = KernelSpec::test_kernel(&p).unwrap();
    let zero = GridFunction::zeros(spec);
    assert!(apply_t(&zero, &k).unwrap().values.iter().all(|v| *v == 0.0));
    let f = Fixture::Gauss.sample(spec).unwrap();
    let tf = apply_t(&f, &k).unwrap();
    let shifted = apply_t(&f.shift(1), &k).unwrap();
    for i in 1..tf.values.len() {
        assert!((shifted.values[i] - tf.values[i - 1]).abs() < 1e-13);
    }
    assert!(apply_t(&f, &KernelSpec::absolute_inverse()).is_err());
    let c = Fixture::Constant(1.0).sample(spec).unwrap();
    assert!(apply_t(&c, &k).is_err());
}

#[test]
fn certification_verdicts() {
    let p = params();
    let spec = GridSpec::new(32.0, 1.0 / 32.0).unwrap();
    let fixtures = Fixture::standard();
    let ps = [1.5, 2.0, 3.0];
    let test = certify(&KernelSpec::test_kernel(&p).unwrap(), &p, None, &spec, &fixtures, &ps).unwrap();
    assert_eq!(test.verdict, Verdict::Certified, "{:?}", test.notes);
    assert_eq!(test.cancelation_max, 0.0);
    assert!(test.cond_i_const <= 1.0 + 1e-6 && test.cond_ii_const <= 1.0 + 1e-6);
    assert!(test.ratios_bounded(), "{:?}", test.ratio_spread);
    assert_eq!(test.norm_ratios.len(), 3);

    let reflected =
        certify(&KernelSpec::test_kernel(&p).unwrap().reflected(), &p, None, &spec, &fixtures, &[2.0]).unwrap();
    assert_eq!(reflected.verdict, Verdict::Certified);

    let even = certify(&KernelSpec::absolute_inverse(), &p, None, &spec, &fixtures, &ps).unwrap();
    assert_eq!(even.verdict, Verdict::Violated);
    assert!(even.norm_ratios.is_empty());

    let fat = certify(&KernelSpec::fat_tail(&p).unwrap(), &p, None, &spec, &fixtures, &ps).unwrap();
    assert_eq!(fat.verdict, Verdict::Inconclusive);
    assert!(fat.decay_const.is_none());

    let json = serde_json::to_value(&test).unwrap();
    assert_eq!(json["verdict"], "certified");
}

#[test]
fn tabulated_kernel_round_trip() {
    let p = params();
    let k = KernelSpec::test_kernel(&p).unwrap();
    let xs: Vec<f64> = (1..=4000).map(|i| i as f64 / 64.0).collect();
    let mut csv = String::from("x,value\n");
    for x in &xs {
        csv.push_str(&format!("{x},{}\n", k.eval(*x)));
    }
    let t = KernelSpec::read_csv("tab", Symmetry::Odd, csv.as_bytes()).unwrap();
    for x in [0.3, 0.9, 1.7, 12.25, -4.0] {
        assert!((t.eval(x) - k.eval(x)).abs() < 2e-3 * k.eval(x).abs(), "x={x}");
    }
    assert!((t.tail_exponent() - 0.75).abs() < 1e-6);
    assert!(t.validate(&small_grid()).is_ok());
    assert!(KernelSpec::read_csv("bad", Symmetry::Odd, "x,value\n1,2\nfoo,bar\n".as_bytes()).is_err());
    assert!(KernelSpec::from_table("neg", Symmetry::Even, vec![-1.0, 1.0, 2.0, 3.0], vec![1.0; 4]).is_err());
}

#[test]
fn declared_symmetry_is_checked() {
    let wrong = KernelSpec::new("wrong", Symmetry::Odd, TailClass::Classical, |x: f64| 1.0 / x.abs());
    assert!(wrong.validate(&small_grid()).is_err());
    assert!(KernelSpec::builtin("nope", &params()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn odd_kernels_cancel(a in 0.1f64..1.9, r in 1e-3f64..1.0, span in 1.1f64..100.0) {
        let k = KernelSpec::new("odd", Symmetry::Odd, TailClass::Weakened, move |x: f64| x.signum() * x.abs().powf(-a));
        prop_assert_eq!(check_cancelation(&k, &[(r, r * span)]).unwrap(), 0.0);
    }

    #[test]
    fn operator_is_linear(c in -4.0f64..4.0, m in -3.0f64..3.0, w in 0.4f64..2.0) {
        let spec = GridSpec::new(8.0, 1.0 / 16.0).unwrap();
        let k = KernelSpec::test_kernel(&params()).unwrap();
        let f = Fixture::Gauss.sample(spec).unwrap();
        let g = GridFunction::from_fn(spec, |x| (-((x - m) / w).powi(2)).exp()).unwrap();
        let sum = GridFunction::new(spec, f.values.iter().zip(&g.values).map(|(a, b)| a + c * b).collect()).unwrap();
        let (tf, tg, ts) = (apply_t(&f, &k).unwrap(), apply_t(&g, &k).unwrap(), apply_t(&sum, &k).unwrap());
        for i in 0..ts.values.len() {
            prop_assert!((ts.values[i] - tf.values[i] - c * tg.values[i]).abs() < 1e-12 * (1.0 + c.abs()));
        }
    }
}
