use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Stability index and spatial dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    pub alpha: f64,
    pub dim: usize,
}

impl StableParams {
    pub fn new(alpha: f64, dim: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(invalid("alpha", format!("{alpha} is outside (0, 2)")));
        }
        if dim != 1 && dim != 2 {
            return Err(invalid("dim", format!("{dim} is not 1 or 2")));
        }
        Ok(Self { alpha, dim })
    }

    pub fn one_d(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1)
    }

    /// Operations of the multiplier theorem need `alpha` in `(1, 2)`.
    pub fn require_main_range(&self) -> Result<()> {
        if self.alpha > 1.0 && self.alpha < 2.0 {
            Ok(())
        } else {
            Err(invalid("alpha", format!("{} is outside (1, 2)", self.alpha)))
        }
    }

    pub fn require_1d(&self, what: &str) -> Result<()> {
        if self.dim == 1 {
            Ok(())
        } else {
            Err(Error::Unsupported(format!("{what} is implemented for d = 1 only")))
        }
    }

    pub fn d(&self) -> f64 {
        self.dim as f64
    }

    /// `(2d + alpha) / (2d)`: the exponent at which `K_t^lambda` and `q_t`
    /// are comparable.
    pub fn lambda0(&self) -> f64 {
        (2.0 * self.d() + self.alpha) / (2.0 * self.d())
    }

    /// `1 + (alpha - 1) / (2d)`: decay exponent used for the weakened kernels.
    pub fn multiplier_lambda(&self) -> f64 {
        1.0 + (self.alpha - 1.0) / (2.0 * self.d())
    }

    /// Radius `t^{2/alpha}` of the parabolic region at height `t`.
    pub fn radius(&self, t: f64) -> f64 {
        t.powf(2.0 / self.alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert!(StableParams::new(0.0, 1).is_err());
        assert!(StableParams::new(2.0, 1).is_err());
        assert!(StableParams::new(f64::NAN, 1).is_err());
        assert!(StableParams::new(1.5, 3).is_err());
        let p = StableParams::one_d(1.5).unwrap();
        assert!(p.require_main_range().is_ok());
        assert!(StableParams::one_d(1.0).unwrap().require_main_range().is_err());
        assert!((p.lambda0() - 1.75).abs() < 1e-15);
        assert!((p.multiplier_lambda() - 1.25).abs() < 1e-15);
    }
}
