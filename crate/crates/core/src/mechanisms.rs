//! Laplace releases calibrated to global or smooth sensitivity.

use serde::{Deserialize, Serialize};

use crate::budget::PrivacyBudget;
use crate::error::{Error, Result};
use crate::laplace::{laplace_from_uniform, LaplaceParams};
use crate::population::{Bounds, Population};
use crate::rng::RngStream;
use crate::sensitivity::{smooth_sensitivity_median, SensitivityKind, SensitivityReport, Statistic};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mechanism {
    /// Noise scale `Δ^G / ε`, pure ε-DP.
    GlobalLaplace,
    /// Noise scale `2 Δ^S / ε`, (ε, δ)-DP, median only.
    SmoothLaplace,
}

impl Mechanism {
    pub fn sensitivity_kind(self) -> SensitivityKind {
        match self {
            Mechanism::GlobalLaplace => SensitivityKind::Global,
            Mechanism::SmoothLaplace => SensitivityKind::Smooth,
        }
    }

    /// Laplace scale for sensitivity `value` at privacy parameter `eps`.
    pub fn noise_scale(self, value: f64, eps: f64) -> f64 {
        match self {
            Mechanism::GlobalLaplace => value / eps,
            Mechanism::SmoothLaplace => 2.0 * value / eps,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub n: usize,
    pub population_size: usize,
    /// Whether the budget was raised to the amplified sample budget.
    pub amplified: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivatizedEstimate {
    pub raw_value: f64,
    pub noisy_value: f64,
    /// The realised Laplace draw, `noisy_value − raw_value` unless clamped.
    pub noise: f64,
    pub noise_scale: f64,
    pub mechanism: Mechanism,
    /// The budget spent on the data the statistic was computed from.
    pub budget: PrivacyBudget,
    pub sensitivity: SensitivityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleMeta>,
    /// Set when `noisy_value` was clamped into the bounds after release.
    #[serde(default)]
    pub clamped: bool,
}

impl PrivatizedEstimate {
    pub fn with_sample(mut self, meta: SampleMeta) -> Self {
        self.sample = Some(meta);
        self
    }

    /// Post-processing: clamp the noisy value into `bounds`. Off unless
    /// requested.
    pub fn clamp_into(mut self, bounds: Bounds) -> Self {
        self.noisy_value = bounds.clamp(self.noisy_value);
        self.clamped = true;
        self
    }
}

/// Releases `raw` with Laplace noise built from the uniform `u`.
///
/// The mechanism follows from `sensitivity.kind`: global sensitivity needs a
/// pure budget, smooth sensitivity a positive δ. Local sensitivity is
/// rejected because calibrating to it does not give differential privacy.
pub fn release_with_uniform(
    raw: f64,
    sensitivity: SensitivityReport,
    budget: PrivacyBudget,
    u: f64,
) -> Result<PrivatizedEstimate> {
    let mechanism = match sensitivity.kind {
        SensitivityKind::Global => {
            if !budget.is_pure() {
                return Err(Error::param(format!(
                    "the global Laplace mechanism is pure ε-DP; got delta = {}",
                    budget.delta()
                )));
            }
            Mechanism::GlobalLaplace
        }
        SensitivityKind::Smooth => {
            if budget.is_pure() {
                return Err(Error::param("the smooth Laplace mechanism requires delta > 0"));
            }
            Mechanism::SmoothLaplace
        }
        SensitivityKind::Local => {
            return Err(Error::Unsupported("noise calibrated to local sensitivity is not private".into()))
        }
    };
    if !raw.is_finite() {
        return Err(Error::param(format!("raw statistic must be finite, got {raw}")));
    }
    let noise_scale = mechanism.noise_scale(sensitivity.value, budget.epsilon());
    let noise = laplace_from_uniform(LaplaceParams::new(0.0, noise_scale)?, u);
    Ok(PrivatizedEstimate {
        raw_value: raw,
        noisy_value: raw + noise,
        noise,
        noise_scale,
        mechanism,
        budget,
        sensitivity,
        sample: None,
        clamped: false,
    })
}

/// `raw + Laplace(0, Δ^G / ε)`.
pub fn privatize_global(
    raw: f64,
    sensitivity: SensitivityReport,
    budget: PrivacyBudget,
    rng: &mut RngStream,
) -> Result<PrivatizedEstimate> {
    if sensitivity.kind != SensitivityKind::Global {
        return Err(Error::param(format!("expected a global sensitivity, got {:?}", sensitivity.kind)));
    }
    release_with_uniform(raw, sensitivity, budget, rng.next_open01())
}

/// The median of `pop` plus `Laplace(0, 2 Δ^S / ε)`.
pub fn privatize_smooth_median(
    pop: &Population,
    budget: PrivacyBudget,
    rng: &mut RngStream,
) -> Result<PrivatizedEstimate> {
    let sensitivity = smooth_sensitivity_median(pop, budget)?;
    let raw = Statistic::Median.evaluate(pop.values());
    release_with_uniform(raw, sensitivity, budget, rng.next_open01())
}
