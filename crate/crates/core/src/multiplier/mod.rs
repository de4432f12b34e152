//! Certification of convolution kernels against the weakened growth
//! hypotheses: cancelation, growth constants, the smooth split at `|x| ~ 1`,
//! decay of `(d_t Q_t kappa_2)_{t=1}`, and measured `L^p` norm ratios.

mod checks;
mod decay;
mod kernel;
mod operator;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

pub use checks::{check_cancelation, check_growth, default_radii, GrowthConstants};
pub use decay::{
    dtqt_kernel_bound, tail_split, DecayBound, TailSplit, TailSplitReport, CROSS_CHECK_TOLERANCE, REFINEMENT_TOLERANCE,
};
pub use kernel::{cutoff, cutoff_derivative, KernelSpec, Symmetry, TailClass, BUILTIN_KERNELS};
pub use operator::{apply_t, norm_ratios, operator_norms};

use crate::error::Result;
use crate::fixtures::Fixture;
use crate::grid::GridSpec;
use crate::params::StableParams;

/// Cancelation above this is a violation.
pub const CANCELATION_TOLERANCE: f64 = 1e-6;
/// Largest admissible spread (max / min over fixtures) of a norm ratio.
pub const RATIO_SPREAD_LIMIT: f64 = 10.0;
/// Points at which the three-region split is evaluated.
pub const SPLIT_POINTS: [f64; 8] = [2.0, 4.0, 8.0, 16.0, -2.0, -4.0, -8.0, -16.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Certified,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificationReport {
    pub kernel: String,
    pub params: StableParams,
    pub cancelation_max: f64,
    pub cond_i_const: f64,
    pub cond_ii_const: f64,
    pub lambda_used: f64,
    /// `None` when the tail-exponent gate rejected the kernel.
    pub decay_const: Option<f64>,
    pub decay: Option<DecayBound>,
    pub tail_split: Option<TailSplitReport>,
    /// fixture -> p -> `||T f||_p / ||f||_p`.
    pub norm_ratios: BTreeMap<String, BTreeMap<String, f64>>,
    /// p -> max / min of the ratio over fixtures.
    pub ratio_spread: BTreeMap<String, f64>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl CertificationReport {
    /// Whether every spread is finite and below [`RATIO_SPREAD_LIMIT`].
    pub fn ratios_bounded(&self) -> bool {
        !self.ratio_spread.is_empty() && self.ratio_spread.values().all(|s| s.is_finite() && *s < RATIO_SPREAD_LIMIT)
    }
}

fn p_key(p: f64) -> String {
    format!("{p}")
}

/// Run every check on `kernel` over `spec` and measure the norm ratios over
/// `fixtures x ps`. The verdict is `certified` when cancelation is below
/// `1e-6`, both growth constants are finite and the decay bound holds;
/// `violated` when cancelation or growth fails; otherwise `inconclusive`.
pub fn certify(
    kernel: &KernelSpec,
    params: &StableParams,
    lambda: Option<f64>,
    spec: &GridSpec,
    fixtures: &[Fixture],
    ps: &[f64],
) -> Result<CertificationReport> {
    params.require_main_range()?;
    params.require_1d("certify")?;
    kernel.validate(spec)?;
    let lambda = lambda.unwrap_or_else(|| params.multiplier_lambda());
    let mut notes = Vec::new();

    let cancelation_max = check_cancelation(kernel, &default_radii(spec.half_extent))?;
    let growth = check_growth(kernel, params, spec)?;
    let (_, outer) = kernel.decompose();
    let (decay, tail) = match dtqt_kernel_bound(&outer, params, lambda, spec) {
        Ok(bound) => (Some(bound), Some(tail_split(&outer, params, lambda, &SPLIT_POINTS)?)),
        Err(crate::Error::KernelRejected(why)) => {
            notes.push(why);
            (None, None)
        }
        Err(e) => return Err(e),
    };

    let verdict = if cancelation_max > CANCELATION_TOLERANCE {
        notes.push(format!("cancelation {cancelation_max:.3e} exceeds {CANCELATION_TOLERANCE:.0e}"));
        Verdict::Violated
    } else if !(growth.cond_i.is_finite() && growth.cond_ii.is_finite()) {
        notes.push("growth constants are not finite".into());
        Verdict::Violated
    } else {
        match &decay {
            Some(b) if b.holds => Verdict::Certified,
            Some(b) => {
                notes.push(format!(
                    "decay bound not established: constant {:.4e}, drift {:.3e}, spectral gap {:.3e}",
                    b.decay_const, b.drift, b.spectral_gap
                ));
                Verdict::Inconclusive
            }
            None => Verdict::Inconclusive,
        }
    };

    let mut ratios = BTreeMap::new();
    let mut ratio_spread = BTreeMap::new();
    if verdict != Verdict::Violated {
        let rows: Vec<(String, Vec<f64>)> = fixtures
            .par_iter()
            .map(|fx| Ok((fx.to_string(), operator::norm_ratios(&fx.sample(*spec)?, kernel, ps)?)))
            .collect::<Result<_>>()?;
        for (j, &p) in ps.iter().enumerate() {
            let column: Vec<f64> = rows.iter().map(|(_, r)| r[j]).collect();
            let hi = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = column.iter().cloned().fold(f64::INFINITY, f64::min);
            ratio_spread.insert(p_key(p), hi / lo);
        }
        for (name, r) in rows {
            ratios.insert(name, ps.iter().zip(r).map(|(p, v)| (p_key(*p), v)).collect());
        }
    }

    Ok(CertificationReport {
        kernel: kernel.name.clone(),
        params: *params,
        cancelation_max,
        cond_i_const: growth.cond_i,
        cond_ii_const: growth.cond_ii,
        lambda_used: lambda,
        decay_const: decay.as_ref().map(|b| b.decay_const),
        decay,
        tail_split: tail,
        norm_ratios: ratios,
        ratio_spread,
        verdict,
        notes,
    })
}
