//! The acceptance suite: one check per criterion, each reported as a
//! [`CheckRecord`].

use std::f64::consts::PI;
use std::time::Instant;

use serde_json::{json, Value};

use crate::density::{
    check_two_sided, mu_moment_bounds, psi_report, qt_kernel, stable_density, subordination_density, StableKernel,
};
use crate::error::{invalid, Result};
use crate::fixtures::Fixture;
use crate::functionals::{
    gamma_alpha, gamma_full, hl_maximal, horizontal_symbol_constant, maximal_ratio, Functionals, LambdaKernel,
};
use crate::grid::{GridFunction, GridSpec};
use crate::mc::{
    exit_law_check, green_identity_check, harnack_sample, martingale_check, run_paths, HarnackBoxes, McConfig,
};
use crate::multiplier::{certify, norm_ratios, KernelSpec, Verdict};
use crate::params::StableParams;
use crate::quad::TimeGrid;
use crate::report::{CheckRecord, CheckStatus, SuiteReport};
use crate::spectral::convolve;

/// Criterion names, in order.
pub const CRITERIA: [&str; 9] = [
    "density",
    "psi",
    "plancherel",
    "horizontal_scaling",
    "pointwise_chains",
    "maximal",
    "multiplier",
    "monte_carlo",
    "harnack",
];

const TOLERANCES: [&str; 9] = [
    "p(1,0,0) = 1/pi +- 1e-6; two-sided ratio in [1/(2pi), 1/pi] +- 1e-6; subordination 1e-4; mass 1e-5; scaling 1e-6; semigroup 1e-5",
    "psi(0) = -4/pi +- 1e-5; int psi = 0 +- 1e-6; cross-check 1e-4; envelope drift < 5%; moment margins >= 0",
    "||G_up||/||f|| = 0.5 +- 1e-3",
    "spread across fixtures 1e-2 rel; oracle constant 1e-2 rel",
    "A <= 2^{lambda0/2} G*; gamma_full >= gamma_alpha; G_alpha >= G_up; K mass 1e-5; lambda=2 mass 2 +- 1e-6",
    "M(1)(0) = 1, M(1)(2) = 1/3 +- dx; N <= c M, c finite, drift < 5%",
    "pv L2 ratio pi +- 1e-2; test certified; abs-inv violated; fat inconclusive; spread < 10",
    "KS < 1.63/sqrt(n); Green within 3 SE + bias; bias ratio in [1.5, 3]; martingale 3 SE; bit-reproducible",
    "ratios finite; f = 1 gives 1; drift < 5%",
];

/// What the suite runs with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    /// Stability index for the criteria that take one (4, 5, 6, 7, 8, 9).
    pub alpha: f64,
    /// Fewer Monte Carlo paths.
    pub quick: bool,
    pub seed: u64,
    pub workers: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { alpha: 1.5, quick: false, seed: 42, workers: 1 }
    }
}

impl SuiteOptions {
    pub fn n_paths(&self) -> usize {
        if self.quick {
            20_000
        } else {
            100_000
        }
    }

    fn params(&self) -> Result<StableParams> {
        let p = StableParams::one_d(self.alpha)?;
        p.require_main_range()?;
        Ok(p)
    }
}

struct Outcome {
    pass: bool,
    value: Value,
    notes: Vec<String>,
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn at(f: &GridFunction, x: f64) -> Result<f64> {
    f.value_at_x(x).ok_or_else(|| invalid("x", format!("{x} is not a grid node")))
}

fn failed(notes: &mut Vec<String>, ok: bool, what: &str) -> bool {
    if !ok {
        notes.push(format!("{what} out of tolerance"));
    }
    ok
}

fn density(_: &SuiteOptions) -> Result<Outcome> {
    let spec = GridSpec::default_1d();
    let mut notes = Vec::new();
    let cauchy = stable_density(&StableParams::one_d(1.0)?, 1.0, &spec)?;
    let p0 = at(&cauchy.values, 0.0)?;
    let two = check_two_sided(&cauchy)?;

    let mut subordination_err = 0.0f64;
    let mut mass_err = 0.0f64;
    let mut scaling_err = 0.0f64;
    let inner = spec.half_extent / 2.0;
    for alpha in [1.0, 1.5] {
        let p = StableParams::one_d(alpha)?;
        let table = stable_density(&p, 1.0, &spec)?;
        table.validate()?;
        mass_err = mass_err.max((table.mass() - 1.0).abs());
        for x in [0.0, 0.25, 1.0, 2.5, 5.0, 10.0, -7.0] {
            let want = subordination_density(&p, 1.0, &[x])?;
            subordination_err = subordination_err.max(rel(at(&table.values, x)?, want));
        }
        let k = StableKernel::get(alpha, 0, 0);
        let q = StableKernel::get(alpha / 2.0, 0, 0);
        for s in [0.5, 2.0] {
            let pt = stable_density(&p, s, &spec)?;
            let qt = qt_kernel(&p, s, &spec)?;
            for (i, x) in spec.xs().iter().enumerate().step_by(7) {
                if x.abs() > inner {
                    continue;
                }
                let sp = s.powf(-1.0 / alpha);
                let sq = s.powf(-2.0 / alpha);
                scaling_err = scaling_err
                    .max(rel(pt.values.values[i], sp * k.unit(x * sp)))
                    .max(rel(qt.values.values[i], sq * q.unit(x * sq)));
            }
        }
    }

    let p = StableParams::one_d(1.5)?;
    let ab = convolve(&stable_density(&p, 0.4, &spec)?.values, &stable_density(&p, 0.6, &spec)?.values)?;
    let c = stable_density(&p, 1.0, &spec)?;
    let semigroup_err = spec
        .xs()
        .iter()
        .enumerate()
        .filter(|(_, x)| x.abs() <= inner)
        .map(|(i, _)| (ab.values[i] - c.values.values[i]).abs())
        .fold(0.0, f64::max);

    let pass = [
        failed(&mut notes, (p0 - 1.0 / PI).abs() <= 1e-6, "p(1,0,0)"),
        failed(&mut notes, two.ratio_min >= 0.5 / PI - 1e-6 && two.ratio_max <= 1.0 / PI + 1e-6, "two-sided ratio"),
        failed(&mut notes, subordination_err <= 1e-4, "subordination agreement"),
        failed(&mut notes, mass_err <= 1e-5, "mass"),
        failed(&mut notes, scaling_err <= 1e-6, "scaling"),
        failed(&mut notes, semigroup_err <= 1e-5, "semigroup"),
    ]
    .iter()
    .all(|b| *b);
    Ok(Outcome {
        pass,
        value: json!({
            "p_1_0_0": p0,
            "ratio_min": two.ratio_min,
            "ratio_max": two.ratio_max,
            "subordination_rel_err": subordination_err,
            "mass_err": mass_err,
            "scaling_rel_err": scaling_err,
            "semigroup_err": semigroup_err,
        }),
        notes,
    })
}

fn psi(_: &SuiteOptions) -> Result<Outcome> {
    let spec = GridSpec::default_1d();
    let mut notes = Vec::new();
    let cauchy = psi_report(&StableParams::one_d(1.0)?, &spec)?;
    let p = StableParams::one_d(1.5)?;
    let coarse = psi_report(&p, &spec)?;
    let fine = psi_report(&p, &spec.refined())?;
    let drift = rel(fine.envelope_const, coarse.envelope_const)
        .max(rel(fine.gradient_envelope_const, coarse.gradient_envelope_const));
    let mut margin = f64::INFINITY;
    let mut moments = serde_json::Map::new();
    for m in [1e-3, 0.1, 1.0, 10.0, 1e3] {
        let b = mu_moment_bounds(m)?;
        margin = margin.min(b.left_bound - b.left).min(b.right_bound - b.right);
        moments.insert(format!("{m}"), serde_json::to_value(b)?);
    }
    let integral = cauchy.integral.abs().max(coarse.integral.abs());
    let pass = [
        failed(&mut notes, (cauchy.psi0 + 4.0 / PI).abs() <= 1e-5, "psi(0)"),
        failed(&mut notes, integral <= 1e-6, "int psi"),
        failed(&mut notes, cauchy.cross_check_err.max(coarse.cross_check_err) <= 1e-4, "integral-form cross-check"),
        failed(&mut notes, drift < 0.05 && coarse.envelope_const.is_finite(), "envelope constants"),
        failed(&mut notes, margin >= 0.0, "moment bounds"),
    ]
    .iter()
    .all(|b| *b);
    Ok(Outcome {
        pass,
        value: json!({
            "psi0": cauchy.psi0,
            "integral_max": integral,
            "cross_check_err": cauchy.cross_check_err.max(coarse.cross_check_err),
            "envelope_const": coarse.envelope_const,
            "gradient_envelope_const": coarse.gradient_envelope_const,
            "envelope_drift": drift,
            "moment_margin": margin,
            "moments": moments,
        }),
        notes,
    })
}

fn ratio_table(spec: GridSpec, alpha: f64, which: impl Fn(&Functionals) -> Result<f64>) -> Result<Vec<(String, f64)>> {
    let p = StableParams::one_d(alpha)?;
    Fixture::standard()
        .iter()
        .map(|fx| Ok((fx.to_string(), which(&Functionals::new(&fx.sample(spec)?, p, TimeGrid::default())?)?)))
        .collect()
}

fn l2_ratio(r: crate::functionals::FunctionalReport) -> Result<f64> {
    r.constants.get("l2_ratio").copied().ok_or_else(|| invalid("report", "no l2_ratio"))
}

fn plancherel(_: &SuiteOptions) -> Result<Outcome> {
    let spec = GridSpec::new(32.0, 1.0 / 32.0)?;
    let mut value = serde_json::Map::new();
    let mut worst = 0.0f64;
    for alpha in [1.2, 1.5, 1.8] {
        let rows = ratio_table(spec, alpha, |e| l2_ratio(e.g_up()?))?;
        for (name, r) in rows {
            worst = worst.max((r - 0.5).abs());
            value.insert(format!("{name}@{alpha}"), json!(r));
        }
    }
    value.insert("max_err".into(), json!(worst));
    let mut notes = Vec::new();
    let pass = failed(&mut notes, worst <= 1e-3, "l2 ratio");
    Ok(Outcome { pass, value: value.into(), notes })
}

fn horizontal_scaling(opts: &SuiteOptions) -> Result<Outcome> {
    let spec = GridSpec::new(32.0, 1.0 / 32.0)?;
    let oracle = horizontal_symbol_constant(opts.alpha)?;
    let rows = ratio_table(spec, opts.alpha, |e| l2_ratio(e.g_arrow_alpha()?))?;
    let hi = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let lo = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let spread = hi / lo - 1.0;
    let oracle_err = rows.iter().map(|r| rel(r.1, oracle)).fold(0.0, f64::max);
    let mut notes = Vec::new();
    let pass = [
        failed(&mut notes, spread <= 1e-2, "fixture spread"),
        failed(&mut notes, oracle_err <= 1e-2, "oracle agreement"),
    ]
    .iter()
    .all(|b| *b);
    let mut value: serde_json::Map<String, Value> = rows.into_iter().map(|(n, r)| (n, json!(r))).collect();
    value.insert("oracle".into(), json!(oracle));
    value.insert("spread".into(), json!(spread));
    value.insert("oracle_rel_err".into(), json!(oracle_err));
    Ok(Outcome { pass, value: value.into(), notes })
}

fn pointwise_chains(opts: &SuiteOptions) -> Result<Outcome> {
    let spec = GridSpec::new(16.0, 1.0 / 32.0)?;
    let p = opts.params()?;
    let f = Fixture::Gauss.sample(spec)?;
    let e = Functionals::new(&f, p, TimeGrid::default())?;
    let l0 = p.lambda0();
    let area = e.area()?;
    let star = e.g_star_arrow(l0)?;
    let up = e.g_up()?;
    let ga = e.g_alpha()?;
    let factor = 2f64.powf(l0 / 2.0);
    let mut area_gap = f64::NEG_INFINITY;
    let mut alpha_gap = f64::INFINITY;
    for i in 0..area.values.len() {
        area_gap = area_gap.max(area.values.values[i] - factor * star.values.values[i]);
        alpha_gap = alpha_gap.min(ga.values.values[i] - up.values.values[i]);
    }
    let mut gamma_gap = f64::INFINITY;
    for t in [0.1, 1.0, 3.0] {
        for x in [0.0, 0.5, 2.0, -3.0] {
            gamma_gap = gamma_gap.min(gamma_full(e.field(), t, x)? - gamma_alpha(e.field(), t, x)?);
        }
    }
    let mut mass_err = 0.0f64;
    for lambda in [1.25, 1.75, 3.0] {
        let want = 2.0 / (lambda - 1.0);
        for t in [1e-3, 0.1, 1.0, 30.0] {
            mass_err = mass_err.max(rel(LambdaKernel::new(lambda, t, &p)?.mass()?, want));
        }
    }
    let two = LambdaKernel::new(2.0, 1.0, &p)?.mass()?;
    let mut notes = Vec::new();
    let pass = [
        failed(&mut notes, area_gap <= 1e-12, "A <= 2^{lambda0/2} G*"),
        failed(&mut notes, gamma_gap >= -1e-12, "gamma_full >= gamma_alpha"),
        failed(&mut notes, alpha_gap >= 0.0, "G_alpha >= G_up"),
        failed(&mut notes, mass_err <= 1e-5, "K mass"),
        failed(&mut notes, (two - 2.0).abs() <= 1e-6, "lambda = 2 mass"),
    ]
    .iter()
    .all(|b| *b);
    Ok(Outcome {
        pass,
        value: json!({
            "area_minus_bound_max": area_gap,
            "gamma_full_minus_alpha_min": gamma_gap,
            "g_alpha_minus_g_up_min": alpha_gap,
            "k_mass_rel_err": mass_err,
            "lambda2_mass": two,
        }),
        notes,
    })
}

fn maximal(opts: &SuiteOptions) -> Result<Outcome> {
    let spec = GridSpec::new(8.0, 1.0 / 64.0)?;
    let m = hl_maximal(&Fixture::Indicator.sample(spec)?)?;
    let (m0, m2) = (at(&m.values, 0.0)?, at(&m.values, 2.0)?);
    let p = opts.params()?;
    let constant = |spec: GridSpec| -> Result<f64> {
        let e = Functionals::new(&Fixture::Gauss.sample(spec)?, p, TimeGrid::default())?;
        maximal_ratio(&e.n_alpha()?, &e.hl()?)
    };
    let coarse = GridSpec::new(16.0, 1.0 / 32.0)?;
    let c = constant(coarse)?;
    let c_fine = constant(coarse.refined())?;
    let drift = rel(c_fine, c);
    let mut notes = Vec::new();
    let pass = [
        failed(&mut notes, (m0 - 1.0).abs() <= spec.spacing, "M(0)"),
        failed(&mut notes, (m2 - 1.0 / 3.0).abs() <= spec.spacing, "M(2)"),
        failed(&mut notes, c.is_finite() && drift < 0.05, "N <= c M"),
    ]
    .iter()
    .all(|b| *b);
    Ok(Outcome {
        pass,
        value: json!({ "m_at_0": m0, "m_at_2": m2, "c": c, "c_refined": c_fine, "drift": drift }),
        notes,
    })
}

fn multiplier(opts: &SuiteOptions) -> Result<Outcome> {
    let p = opts.params()?;
    let pv = norm_ratios(
        &Fixture::Gauss.sample(GridSpec::new(64.0, 1.0 / 64.0)?)?,
        &KernelSpec::principal_value_inverse(),
        &[2.0],
    )?[0];
    let spec = GridSpec::new(32.0, 1.0 / 32.0)?;
    let fixtures = Fixture::standard();
    let ps = [1.5, 2.0, 3.0];
    let test = certify(&KernelSpec::test_kernel(&p)?, &p, None, &spec, &fixtures, &ps)?;
    let even = certify(&KernelSpec::absolute_inverse(), &p, None, &spec, &fixtures, &ps)?;
    let fat = certify(&KernelSpec::fat_tail(&p)?, &p, None, &spec, &fixtures, &ps)?;
    let mut notes = test.notes.clone();
    let pass = [
        failed(&mut notes, (pv - PI).abs() <= 1e-2, "pv L2 ratio"),
        failed(
            &mut notes,
            test.verdict == Verdict::Certified
                && test.cancelation_max == 0.0
                && test.cond_i_const <= 1.0 + 1e-6
                && test.cond_ii_const <= 1.0 + 1e-6,
            "test kernel certification",
        ),
        failed(&mut notes, test.ratios_bounded(), "norm ratio spread"),
        failed(&mut notes, even.verdict == Verdict::Violated, "abs-inv verdict"),
        failed(&mut notes, fat.verdict == Verdict::Inconclusive, "fat verdict"),
    ]
    .iter()
    .all(|b| *b);
    Ok(Outcome {
        pass,
        value: json!({
            "pv_l2_ratio": pv,
            "test": {
                "verdict": test.verdict,
                "cancelation_max": test.cancelation_max,
                "cond_i_const": test.cond_i_const,
                "cond_ii_const": test.cond_ii_const,
                "decay_const": test.decay_const,
                "decay_drift": test.decay.as_ref().map(|d| d.drift),
                "norm_ratios": test.norm_ratios,
                "ratio_spread": test.ratio_spread,
            },
            "abs_inv_verdict": even.verdict,
            "fat_verdict": fat.verdict,
        }),
        notes,
    })
}

fn monte_carlo(opts: &SuiteOptions) -> Result<Outcome> {
    let p = opts.params()?;
    let config = McConfig::new(opts.n_paths(), 1e-3, opts.seed, opts.workers)?;
    let exit = exit_law_check(&p, &config, 1.0)?;
    let unit = |s: f64| if s > 0.0 && s <= 1.0 { 1.0 } else { 0.0 };
    let green = green_identity_check(&unit, (0.0, 1.0), 1.0, &config)?;
    let gauss = Fixture::Gauss.sample(GridSpec::new(32.0, 1.0 / 64.0)?)?;
    let mart = martingale_check(&gauss, &p, (0.0, 1.0), &[0.1, 0.5, 2.0], &config)?;

    let small = McConfig { n_paths: config.n_paths.min(2_000), ..config };
    let first = run_paths(&p, &small, (0.0, 1.0), &[0.5])?;
    let again = run_paths(&p, &small, (0.0, 1.0), &[0.5])?;
    let other = run_paths(&p, &McConfig { workers: small.workers + 1, ..small }, (0.0, 1.0), &[0.5])?;
    let reproducible = first == again && first == other;

    let mut notes = Vec::new();
    let pass = [
        failed(&mut notes, exit.t0_ks < exit.ks_threshold, "t0 KS"),
        failed(&mut notes, exit.y_ks < exit.ks_threshold, "y KS"),
        failed(&mut notes, green.within(), "Green identity"),
        failed(&mut notes, (1.5..=3.0).contains(&green.bias_ratio), "Green bias ratio"),
        failed(&mut notes, mart.passes(), "martingale"),
        failed(&mut notes, reproducible, "bit-reproducibility"),
    ]
    .iter()
    .all(|b| *b);
    if !exit.passes() {
        notes.push(format!(
            "exit-law side checks: correlation {:.3e} (bound {:.3e}), censored {:.3e}",
            exit.correlation, exit.correlation_bound, exit.censored_fraction
        ));
    }
    Ok(Outcome {
        pass,
        value: json!({
            "n_paths": config.n_paths,
            "dt": config.dt,
            "exit_law": exit,
            "green": green,
            "martingale": mart,
            "reproducible": reproducible,
        }),
        notes,
    })
}

fn harnack(opts: &SuiteOptions) -> Result<Outcome> {
    let p = opts.params()?;
    let spec = GridSpec::new(16.0, 1.0 / 32.0)?;
    let boxes = HarnackBoxes::new(20.0)?;
    let fixtures = vec![Fixture::Constant(1.0), Fixture::Gauss, Fixture::Translated(Box::new(Fixture::Gauss), 5.0)];
    let r = harnack_sample(&p, &fixtures, spec, &boxes, 9)?;
    let mut notes = Vec::new();
    let pass = [
        failed(&mut notes, r.rows.iter().all(|row| row.ratio.is_finite()), "finite ratios"),
        failed(&mut notes, r.rows[0].ratio == 1.0, "constant ratio"),
        failed(&mut notes, r.max_drift < 0.05, "refinement drift"),
    ]
    .iter()
    .all(|b| *b);
    Ok(Outcome { pass, value: serde_json::to_value(&r)?, notes })
}

/// Run criterion `k` (1-based). Errors inside the check become a `fail`
/// record; only an unknown `k` is an error.
pub fn run_criterion(k: usize, opts: &SuiteOptions) -> Result<CheckRecord> {
    let check: fn(&SuiteOptions) -> Result<Outcome> = match k {
        1 => density,
        2 => psi,
        3 => plancherel,
        4 => horizontal_scaling,
        5 => pointwise_chains,
        6 => maximal,
        7 => multiplier,
        8 => monte_carlo,
        9 => harnack,
        _ => return Err(invalid("criterion", format!("{k} is not in 1..=9"))),
    };
    let clock = Instant::now();
    let outcome = check(opts);
    let runtime_s = clock.elapsed().as_secs_f64();
    let (status, value, notes) = match outcome {
        Ok(o) => (if o.pass { CheckStatus::Pass } else { CheckStatus::Fail }, o.value, o.notes),
        Err(e) => (CheckStatus::Fail, Value::Null, vec![e.to_string()]),
    };
    Ok(CheckRecord {
        name: format!("{k}_{}", CRITERIA[k - 1]),
        status,
        value,
        tolerance: TOLERANCES[k - 1].into(),
        runtime_s,
        notes,
    })
}

/// Every criterion in order.
pub fn run_suite(opts: &SuiteOptions, config_hash: &str) -> Result<SuiteReport> {
    let checks = (1..=CRITERIA.len()).map(|k| run_criterion(k, opts)).collect::<Result<_>>()?;
    Ok(SuiteReport::new(config_hash, checks))
}
