use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An (ε, δ) privacy budget. `delta = 0` denotes pure ε-DP.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBudget", into = "RawBudget")]
pub struct PrivacyBudget {
    epsilon: f64,
    delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::param(format!("epsilon must be finite and > 0, got {epsilon}")));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::param(format!("delta must lie in [0, 1), got {delta}")));
        }
        Ok(PrivacyBudget { epsilon, delta })
    }

    pub fn pure(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 0.0)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn is_pure(&self) -> bool {
        self.delta == 0.0
    }
}

#[derive(Serialize, Deserialize)]
struct RawBudget {
    epsilon: f64,
    delta: f64,
}

impl TryFrom<RawBudget> for PrivacyBudget {
    type Error = Error;

    fn try_from(raw: RawBudget) -> Result<Self> {
        PrivacyBudget::new(raw.epsilon, raw.delta)
    }
}

impl From<PrivacyBudget> for RawBudget {
    fn from(b: PrivacyBudget) -> Self {
        RawBudget { epsilon: b.epsilon, delta: b.delta }
    }
}
