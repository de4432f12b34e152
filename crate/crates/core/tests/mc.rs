use std::f64::consts::PI;

use proptest::prelude::*;
use stablelp::extension::extend_at;
use stablelp::fixtures::Fixture;
use stablelp::mc::*;
use stablelp::{GridFunction, GridSpec, StableParams};

fn params() -> StableParams {
    StableParams::one_d(1.5).unwrap()
}

fn quantile(samples: &[f64], q: f64) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v[((v.len() as f64 - 1.0) * q).round() as usize]
}

#[test]
fn cauchy_quartiles() {
    let n = 200_000;
    let s = sample_stable(&StableParams::one_d(1.0).unwrap(), n, 3).unwrap();
    // quantile SE sqrt(q(1-q)/n) / density, density at +-1 is 1/(2 pi)
    let se = (0.1875 / n as f64).sqrt() * 2.0 * PI;
    assert!((quantile(&s, 0.25) + 1.0).abs() < 4.0 * se);
    assert!((quantile(&s, 0.75) - 1.0).abs() < 4.0 * se);
    assert!(quantile(&s, 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt() * PI);
}

#[test]
fn characteristic_function_of_samples() {
    let n = 100_000;
    for alpha in [0.5, 1.0, 1.5, 1.999] {
        let s = sample_stable(&StableParams::one_d(alpha).unwrap(), n, 1).unwrap();
        for xi in [0.5f64, 1.0, 2.0] {
            let got = empirical_cf(&s, xi);
            let want = (-xi.powf(alpha)).exp();
            assert!((got - want).abs() < 3.0 / (n as f64).sqrt(), "alpha={alpha} xi={xi}: {got} vs {want}");
        }
        let sign = s.iter().map(|v| v.signum()).sum::<f64>() / n as f64;
        assert!(sign.abs() < 2.0 / (n as f64).sqrt(), "alpha={alpha}: mean sign {sign}");
    }
    let bad = StableParams { alpha: 2.0, dim: 1 };
    assert!(sample_stable(&bad, 10, 1).is_err());
}

#[test]
fn sampling_is_reproducible() {
    let p = params();
    assert_eq!(sample_stable(&p, 10_000, 5).unwrap(), sample_stable(&p, 10_000, 5).unwrap());
    assert_ne!(sample_stable(&p, 100, 5).unwrap(), sample_stable(&p, 100, 6).unwrap());
}

#[test]
fn path_invariants() {
    let p = params();
    let c = McConfig::new(2000, 1e-3, 9, 2).unwrap();
    let paths = run_paths(&p, &c, (0.5, 1.0), &[0.1, 0.5, 2.0]).unwrap();
    for path in &paths {
        assert_eq!(path.z_samples[0], 1.0);
        assert_eq!(path.y_samples[0], 0.5);
        assert_eq!(path.sample_times, vec![0.0, 0.1, 0.5, 2.0]);
        assert!(path.t0 > 0.0);
        for (k, tau) in path.sample_times.iter().enumerate() {
            if *tau < path.t0 {
                assert!(path.z_samples[k] > 0.0);
            } else {
                assert_eq!(path.z_samples[k], 0.0);
                assert_eq!(path.y_samples[k], path.y_at_t0);
            }
        }
    }
    assert!(censored_fraction(&paths) < 0.01);
    assert!(run_paths(&p, &c, (0.0, 0.0), &[]).is_err());
    assert!(run_paths(&p, &c, (0.0, 1.0), &[-1.0]).is_err());
    assert!(McConfig::new(0, 1e-3, 1, 1).is_err());
    assert!(McConfig::new(10, 0.0, 1, 1).is_err());
    assert!(McConfig::new(10, 1e-3, 1, 0).is_err());
}

#[test]
fn start_near_boundary_exits_at_once() {
    let c = McConfig::new(5000, 1e-5, 1, 1).unwrap();
    let paths = run_paths(&params(), &c, (0.0, 0.01), &[]).unwrap();
    let t0: Vec<f64> = paths.iter().map(|p| p.t0).collect();
    assert!(quantile(&t0, 0.5) < 1e-3);
}

#[test]
fn exit_law_matches_erfc() {
    let c = McConfig::new(20_000, 1e-3, 2, 1).unwrap();
    let r = exit_law_check(&params(), &c, 1.0).unwrap();
    assert!(r.passes(), "{r:?}");
    // median of mu_1: erfc(1 / (2 sqrt s)) = 1/2 at s = 1 / (4 erfc^{-1}(1/2)^2)
    let median = 1.0 / (4.0 * 0.476_936_276_204_469_9f64.powi(2));
    assert!((r.t0_median - median).abs() < 0.05 * median, "{}", r.t0_median);
}

#[test]
fn exit_law_for_other_heights_and_indices() {
    for (alpha, a) in [(0.8, 0.5), (1.2, 1.5)] {
        let c = McConfig::new(20_000, 1e-3, 4, 1).unwrap();
        let r = exit_law_check(&StableParams::one_d(alpha).unwrap(), &c, a).unwrap();
        assert!(r.passes(), "alpha={alpha} a={a}: {r:?}");
    }
}

#[test]
fn reproducible_across_worker_counts() {
    let p = params();
    let one = McConfig::new(3000, 1e-3, 77, 1).unwrap();
    let three = McConfig { workers: 3, ..one };
    let a = run_paths(&p, &one, (0.0, 1.0), &[0.5]).unwrap();
    assert_eq!(a, run_paths(&p, &one, (0.0, 1.0), &[0.5]).unwrap());
    let b = run_paths(&p, &three, (0.0, 1.0), &[0.5]).unwrap();
    let ta: Vec<f64> = a.iter().map(|r| r.t0).collect();
    let tb: Vec<f64> = b.iter().map(|r| r.t0).collect();
    assert!(ks_two_sample(&ta, &tb) < 1.36 * (2.0 / 3000.0f64).sqrt());
}

#[test]
fn green_identity_for_indicators() {
    let c = McConfig::new(40_000, 1e-3, 5, 1).unwrap();
    for (b, a) in [(1.0, 1.0), (0.5, 1.0)] {
        let f = move |s: f64| if s > 0.0 && s <= b { 1.0 } else { 0.0 };
        let g = green_identity_check(&f, (0.0, b), a, &c).unwrap();
        assert!((g.exact - b * b / 2.0).abs() < 1e-12);
        assert!(g.within(), "{g:?}");
    }
    // beyond the start: int_0^2 (s ^ 1) ds = 1/2 + 1
    let f = |s: f64| if s > 0.0 && s <= 2.0 { 1.0 } else { 0.0 };
    let g = green_identity_check(&f, (0.0, 2.0), 1.0, &c).unwrap();
    assert!((g.exact - 1.5).abs() < 1e-12);
    assert!(g.within(), "{g:?}");
    let zero = |_: f64| 0.0;
    let g = green_identity_check(&zero, (0.0, 1.0), 1.0, &c).unwrap();
    assert_eq!((g.exact, g.mc), (0.0, 0.0));
    assert!(green_identity_check(&zero, (1.0, 0.5), 1.0, &c).is_err());
}

#[test]
fn green_bias_is_linear_in_dt() {
    let c = McConfig::new(40_000, 1e-3, 6, 1).unwrap();
    let f = |s: f64| if s > 0.0 && s <= 1.0 { 1.0 } else { 0.0 };
    let g = green_identity_check(&f, (0.0, 1.0), 1.0, &c).unwrap();
    assert!(g.level_diffs[1].abs() > 4.0 * g.diff_std_errors[1]);
    assert!(g.bias_ratio > 1.5 && g.bias_ratio < 3.0, "{g:?}");
}

#[test]
fn extension_table_interpolates() {
    let p = params();
    let f = Fixture::Gauss.sample(GridSpec::new(32.0, 1.0 / 64.0).unwrap()).unwrap();
    let table = ExtensionTable::new(&f, &p, 4.0).unwrap();
    for (x, t) in [(0.0, 1.0), (0.3, 0.37), (-2.1, 2.5), (7.77, 0.05), (0.01, 3.99)] {
        let direct = extend_at(&f, &p, x, t).unwrap();
        let tab = table.eval(x, t).unwrap();
        assert!((tab - direct).abs() < 2e-4, "({x}, {t}): {tab} vs {direct}");
    }
    assert_eq!(table.eval(40.0, 0.0).unwrap(), 0.0);
    assert!((table.eval(40.0, 1.0).unwrap() - extend_at(&f, &p, 40.0, 1.0).unwrap()).abs() < 1e-15);
    assert!((table.eval(0.5, 0.0).unwrap() - (-0.25f64).exp()).abs() < 1e-12);
}

#[test]
fn martingale_property() {
    let p = params();
    let spec = GridSpec::new(32.0, 1.0 / 64.0).unwrap();
    let c = McConfig::new(20_000, 1e-3, 8, 1).unwrap();
    let one = GridFunction::constant(spec, 1.0).unwrap();
    let r = martingale_check(&one, &p, (0.0, 1.0), &[0.0, 0.5, 2.0], &c).unwrap();
    assert!(r.rows.iter().all(|row| row.mc == 1.0 && row.exact == 1.0));
    let f = Fixture::Gauss.sample(spec).unwrap();
    let r = martingale_check(&f, &p, (0.0, 1.0), &[0.0, 0.1, 0.5, 2.0], &c).unwrap();
    assert_eq!(r.rows[0].mc, r.rows[0].exact);
    assert!(r.passes(), "{r:?}");
}

#[test]
fn harnack_ratios() {
    let p = params();
    let spec = GridSpec::new(16.0, 1.0 / 32.0).unwrap();
    let boxes = HarnackBoxes::new(20.0).unwrap();
    let fx = vec![Fixture::Constant(1.0), Fixture::Gauss, Fixture::Translated(Box::new(Fixture::Gauss), 5.0)];
    let r = harnack_sample(&p, &fx, spec, &boxes, 9).unwrap();
    assert_eq!(r.rows[0].ratio, 1.0);
    assert!(r.rows.iter().all(|row| row.ratio.is_finite() && row.ratio >= 1.0 && row.drift < 0.05));
    assert!(r.rows[2].ratio < 2.0 * r.rows[1].ratio && r.rows[1].ratio < 2.0 * r.rows[2].ratio);
    assert_eq!(boxes.half_widths(32.0, 1.5), (32f64.powf(4.0 / 3.0) / 2.0, 16.0));
    assert!(HarnackBoxes::new(16.0).is_err());
    assert!(harnack_sample(&p, &[Fixture::Coswin], spec, &boxes, 9).is_err());
    assert!(harnack_sample(&p, &[], spec, &boxes, 9).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ks_is_a_distance(xs in prop::collection::vec(-5.0f64..5.0, 1..200)) {
        let d = ks_statistic(&xs, |x| 1.0 / (1.0 + (-x).exp()));
        prop_assert!(d >= 0.5 / xs.len() as f64 - 1e-12 && d <= 1.0);
        prop_assert_eq!(ks_two_sample(&xs, &xs), 0.0);
    }

    #[test]
    fn paths_depend_only_on_seed(seed in any::<u64>(), workers in 1usize..4) {
        let p = params();
        let c = McConfig::new(64, 1e-2, seed, 1).unwrap();
        let a = run_paths(&p, &c, (0.0, 1.0), &[0.3]).unwrap();
        let b = run_paths(&p, &McConfig { workers, ..c }, (0.0, 1.0), &[0.3]).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn mean_is_shift_equivariant(xs in prop::collection::vec(-1e3f64..1e3, 2..100), c in -1e3f64..1e3) {
        let (m, se) = mean_and_se(&xs);
        let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
        let (m2, se2) = mean_and_se(&shifted);
        prop_assert!((m2 - m - c).abs() < 1e-9);
        prop_assert!((se2 - se).abs() < 1e-9 * (1.0 + se));
    }
}
