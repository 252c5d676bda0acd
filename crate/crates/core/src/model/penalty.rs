use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Regularization weights: `lambda1` (entrywise L1), `lambda2` (input-group
/// L2 norms per output row), `lambda3` (output-group L2 norms per input
/// column) and `lambda4` (entrywise L1 on interaction columns).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig<F> {
    pub lambda1: F,
    pub lambda2: F,
    pub lambda3: F,
    pub lambda4: F,
}

impl<F: Scalar> PenaltyConfig<F> {
    /// `lambda4` defaults to `lambda1`.
    pub fn new(lambda1: F, lambda2: F, lambda3: F) -> Result<Self> {
        Self::with_interaction(lambda1, lambda2, lambda3, lambda1)
    }

    pub fn with_interaction(lambda1: F, lambda2: F, lambda3: F, lambda4: F) -> Result<Self> {
        let pc = Self {
            lambda1,
            lambda2,
            lambda3,
            lambda4,
        };
        pc.validate()?;
        Ok(pc)
    }

    pub fn lasso(lambda1: F) -> Self {
        Self {
            lambda1,
            lambda2: F::zero(),
            lambda3: F::zero(),
            lambda4: lambda1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
            ("lambda4", self.lambda4),
        ] {
            if !v.is_finite() || v < F::zero() {
                return Err(Error::input(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Entrywise L1 weight for an input column.
    #[inline]
    pub fn l1_weight(&self, interaction: bool) -> F {
        if interaction {
            self.lambda4
        } else {
            self.lambda1
        }
    }
}
