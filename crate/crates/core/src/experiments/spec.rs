use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::budget::PrivacyBudget;
use crate::error::{Error, Result};
use crate::mechanisms::Mechanism;
use crate::popgen;
use crate::population::{Bounds, Population};
use crate::rng::{tags, RngStream};
use crate::sensitivity::{SmoothSearch, Statistic};

/// Where the population comes from. Generated populations draw from stream
/// `(seed, POPULATION)`, independent of the replicate streams.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PopulationSource {
    Beta {
        size: usize,
        a: f64,
        b: f64,
        seed: u64,
    },
    Lognormal {
        size: usize,
        mu: f64,
        sigma: f64,
        seed: u64,
    },
    Bimodal {
        size: usize,
        seed: u64,
    },
    /// Single-column CSV. A relative path is resolved against the spec file.
    Csv {
        path: PathBuf,
        #[serde(default)]
        bounds: Option<[f64; 2]>,
    },
}

impl PopulationSource {
    pub fn build(&self) -> Result<Population> {
        match self {
            PopulationSource::Beta { size, a, b, seed } => popgen::gen_beta(*size, *a, *b, &mut pop_rng(*seed)),
            PopulationSource::Lognormal { size, mu, sigma, seed } => {
                popgen::gen_lognormal(*size, *mu, *sigma, &mut pop_rng(*seed))
            }
            PopulationSource::Bimodal { size, seed } => popgen::gen_bimodal_beta_mix(*size, &mut pop_rng(*seed)),
            PopulationSource::Csv { path, bounds } => {
                let bounds = bounds.map(|[lo, hi]| Bounds::new(lo, hi)).transpose()?;
                Population::load_csv(path, bounds)
            }
        }
    }
}

/// The stream a generated population is drawn from.
pub fn pop_rng(seed: u64) -> RngStream {
    RngStream::new(seed, tags::POPULATION)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceReduction {
    /// Replicates `2p` and `2p + 1` share their sample and use reflected
    /// noise uniforms `u` and `1 − u`.
    #[default]
    Antithetic,
    /// Every replicate draws its own sample and noise.
    None,
}

fn default_replicates() -> usize {
    1000
}

fn default_name() -> String {
    "experiment".into()
}

/// A replication study, as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "default_name")]
    pub name: String,
    pub population: PopulationSource,
    pub statistic: Statistic,
    pub mechanism: MechanismName,
    /// Target (population-level) ε values.
    pub epsilons: Vec<f64>,
    /// Target δ. Defaults to `1 / (2N)` for the smooth mechanism and 0 for the
    /// global one.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub sample_sizes: Vec<usize>,
    /// Converted to `n = round(rate · N)`; see [`ExperimentSpec::resolve`].
    #[serde(default)]
    pub rates: Vec<f64>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub master_seed: Option<u64>,
    #[serde(default)]
    pub variance_reduction: VarianceReduction,
    /// Clamp noisy values into the population bounds (post-processing).
    #[serde(default)]
    pub clamp_output: bool,
    #[serde(default)]
    pub smooth_search: SmoothSearch,
}

/// Mechanism names as written in spec files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MechanismName {
    GlobalLaplace,
    SmoothLaplace,
}

impl From<MechanismName> for Mechanism {
    fn from(m: MechanismName) -> Mechanism {
        match m {
            MechanismName::GlobalLaplace => Mechanism::GlobalLaplace,
            MechanismName::SmoothLaplace => Mechanism::SmoothLaplace,
        }
    }
}

/// A validated spec with its population built and every default filled in.
#[derive(Clone, Debug)]
pub struct ResolvedSpec {
    pub spec: ExperimentSpec,
    pub population: Population,
    pub mechanism: Mechanism,
    pub master_seed: u64,
    pub delta: f64,
    pub budgets: Vec<PrivacyBudget>,
    /// Sample sizes in spec order: explicit sizes first, then the ones from
    /// rates, without repeats.
    pub sample_sizes: Vec<usize>,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads a spec file, resolving a relative CSV path against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut spec = Self::from_json(&std::fs::read_to_string(path)?)?;
        if let PopulationSource::Csv { path: csv, .. } = &mut spec.population {
            if csv.is_relative() {
                if let Some(dir) = path.parent() {
                    *csv = dir.join(&*csv);
                }
            }
        }
        Ok(spec)
    }

    /// Sample size for a rate: `round(rate · N)` clamped to `[1, N]`. When an
    /// odd size is required an even result moves up by one (down at `N`).
    pub fn size_for_rate(rate: f64, population_size: usize, odd: bool) -> Result<usize> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::param(format!("rate must lie in (0, 1], got {rate}")));
        }
        let mut n = ((rate * population_size as f64).round() as usize).clamp(1, population_size);
        if odd && n.is_multiple_of(2) {
            n = if n < population_size { n + 1 } else { n - 1 };
        }
        Ok(n)
    }

    /// Validates the spec, builds the population and fills in defaults.
    /// `seed_override` takes precedence over `master_seed`.
    pub fn resolve(&self, seed_override: Option<u64>) -> Result<ResolvedSpec> {
        let master_seed = seed_override
            .or(self.master_seed)
            .ok_or_else(|| Error::param("no master seed: set master_seed in the spec or pass a seed"))?;
        if self.replicates == 0 {
            return Err(Error::param("replicates must be at least 1"));
        }
        if self.epsilons.is_empty() {
            return Err(Error::param("epsilons is empty"));
        }
        let population = self.population.build()?;
        let big_n = population.len();
        let mechanism: Mechanism = self.mechanism.into();
        let smooth = mechanism == Mechanism::SmoothLaplace;
        if smooth && self.statistic != Statistic::Median {
            return Err(Error::Unsupported("the smooth Laplace mechanism is only available for the median".into()));
        }
        if !smooth && population.bounds().is_none() {
            return Err(Error::Unbounded);
        }
        if smooth && big_n % 2 == 0 {
            return Err(Error::EvenSize(big_n));
        }
        let delta = match (self.delta, smooth) {
            (Some(d), _) => d,
            (None, true) => 1.0 / (2.0 * big_n as f64),
            (None, false) => 0.0,
        };
        if !smooth && delta != 0.0 {
            return Err(Error::param("the global Laplace mechanism is pure ε-DP; delta must be 0"));
        }
        if smooth && delta <= 0.0 {
            return Err(Error::param("the smooth Laplace mechanism requires delta > 0"));
        }
        let budgets = self.epsilons.iter().map(|&e| PrivacyBudget::new(e, delta)).collect::<Result<Vec<_>>>()?;
        let mut sizes: Vec<usize> = Vec::new();
        for &n in &self.sample_sizes {
            if n == 0 || n > big_n {
                return Err(Error::param(format!("sample size {n} outside 1..={big_n}")));
            }
            if smooth && n % 2 == 0 {
                return Err(Error::EvenSize(n));
            }
            if !sizes.contains(&n) {
                sizes.push(n);
            }
        }
        for &r in &self.rates {
            let n = Self::size_for_rate(r, big_n, smooth)?;
            if !sizes.contains(&n) {
                sizes.push(n);
            }
        }
        Ok(ResolvedSpec { spec: self.clone(), population, mechanism, master_seed, delta, budgets, sample_sizes: sizes })
    }
}
