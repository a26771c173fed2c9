//! Differentially private release of means and medians with the Laplace
//! mechanism, the amplification-by-subsampling calculus for simple random
//! sampling without replacement, and a reproducible Monte-Carlo harness that
//! measures when releasing a privatized estimate from a subsample beats
//! releasing the privatized population statistic.
//!
//! The crate is organised bottom-up:
//!
//! * [`rng`], [`laplace`], [`population`] and [`budget`] are the foundation:
//!   seedable per-stream randomness, the Laplace distribution, and the
//!   validated domain types.
//! * [`sensitivity`] computes global, local and smooth sensitivities.
//! * [`mechanisms`] adds calibrated Laplace noise and records provenance.
//! * [`amplification`] holds every closed-form amplification and variance
//!   formula, plus the critical-ε solver.
//! * [`sampling`] draws and enumerates simple random samples.
//! * [`popgen`] generates the synthetic populations used in the studies.
//! * [`experiments`] runs the replication protocol and writes CSV results.
//! * [`oracle`] holds brute-force verifiers that are independent of the
//!   closed forms above.
//!
//! ```
//! use dpamp::{amplification, PrivacyBudget, SamplingRate};
//!
//! let target = PrivacyBudget::pure(1.0).unwrap();
//! let rate = SamplingRate::new(0.01).unwrap();
//! let sample_budget = amplification::amplified_budget(target, rate).unwrap();
//! assert!((sample_budget.epsilon() - 5.152).abs() < 5e-4);
//! ```

pub mod amplification;
pub mod budget;
pub mod error;
pub mod experiments;
pub mod laplace;
pub mod mechanisms;
pub mod oracle;
pub mod popgen;
pub mod population;
pub mod rng;
pub mod roots;
pub mod sampling;
pub mod sensitivity;

pub use amplification::SamplingRate;
pub use budget::PrivacyBudget;
pub use error::{Error, Result};
pub use laplace::LaplaceParams;
pub use mechanisms::PrivatizedEstimate;
pub use population::{Bounds, Population, PopulationStats};
pub use rng::RngStream;
pub use sensitivity::{SensitivityKind, SensitivityReport, Statistic};
