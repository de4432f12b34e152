//! Empirical Harnack ratios of extensions over the box `D_1`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::extension::extend_at;
use crate::fixtures::Fixture;
use crate::grid::GridSpec;
use crate::params::StableParams;

/// Nested boxes `D_r = {|x - x_c| < r^{2/alpha} / 2, |t - t_c| < r / 2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarnackBoxes {
    pub center_x: f64,
    pub center_t: f64,
}

impl HarnackBoxes {
    /// Boxes centred at `(0, center_t)`; `D_32` must lie in the upper half-plane.
    pub fn new(center_t: f64) -> Result<Self> {
        if !(center_t > 16.0 && center_t.is_finite()) {
            return Err(invalid("center_t", format!("{center_t} must exceed 16 so that D_32 lies above t = 0")));
        }
        Ok(Self { center_x: 0.0, center_t })
    }

    /// Half-widths of `D_r` in `x` and `t`.
    pub fn half_widths(&self, r: f64, alpha: f64) -> (f64, f64) {
        (r.powf(2.0 / alpha) / 2.0, r / 2.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HarnackRow {
    pub fixture: String,
    /// `sup_{D_1} u / inf_{D_1} u` over the sample.
    pub ratio: f64,
    /// The same with `dx/2` and a twice denser sample.
    pub refined_ratio: f64,
    pub drift: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HarnackReport {
    pub boxes: HarnackBoxes,
    pub rows: Vec<HarnackRow>,
    pub max_ratio: f64,
    pub max_drift: f64,
}

fn box_ratio(
    fixture: &Fixture,
    params: &StableParams,
    spec: GridSpec,
    boxes: &HarnackBoxes,
    samples: usize,
) -> Result<f64> {
    let f = fixture.sample(spec)?;
    let (wx, wt) = boxes.half_widths(1.0, params.alpha);
    let node = |c: f64, w: f64, i: usize| c - w + 2.0 * w * i as f64 / (samples - 1) as f64;
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..samples {
        for j in 0..samples {
            let u = extend_at(&f, params, node(boxes.center_x, wx, i), node(boxes.center_t, wt, j))?;
            hi = hi.max(u);
            lo = lo.min(u);
        }
    }
    if !(lo > 0.0) {
        return Err(Error::EstimateViolation(format!("{fixture}: extension not positive on D_1 (min {lo:.3e})")));
    }
    Ok(hi / lo)
}

/// Harnack ratios of `Q_t f` on `D_1` for positive fixtures sampled on
/// `spec`, from a `samples x samples` grid of the closed box, and again with
/// `dx/2` and `2 samples - 1` points per side.
pub fn harnack_sample(
    params: &StableParams,
    fixtures: &[Fixture],
    spec: GridSpec,
    boxes: &HarnackBoxes,
    samples: usize,
) -> Result<HarnackReport> {
    params.require_1d("harnack_sample")?;
    if fixtures.is_empty() {
        return Err(invalid("fixtures", "empty fixture list"));
    }
    if samples < 2 {
        return Err(invalid("samples", "need at least 2 points per side"));
    }
    let mut rows = Vec::with_capacity(fixtures.len());
    for fx in fixtures {
        if !fx.is_positive() {
            return Err(invalid("fixtures", format!("{fx} is not positive")));
        }
        let ratio = box_ratio(fx, params, spec, boxes, samples)?;
        let refined_ratio = box_ratio(fx, params, spec.refined(), boxes, 2 * samples - 1)?;
        rows.push(HarnackRow {
            fixture: fx.to_string(),
            ratio,
            refined_ratio,
            drift: (refined_ratio - ratio).abs() / ratio,
        });
    }
    Ok(HarnackReport {
        boxes: *boxes,
        max_ratio: rows.iter().map(|r| r.ratio).fold(1.0, f64::max),
        max_drift: rows.iter().map(|r| r.drift).fold(0.0, f64::max),
        rows,
    })
}
