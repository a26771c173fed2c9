//! The replication protocol and the studies built on it.
//!
//! For each replicate `t` and each target budget, the protocol
//!
//! 1. privatizes the population statistic at the target budget,
//! 2. draws a simple random sample of every requested size, and
//! 3. privatizes each sample statistic at the amplified budget.
//!
//! Replicate `t` reads its randomness from streams keyed by
//! `(master_seed, t)` (or by its antithetic pair), so results do not depend
//! on the number of threads. All releases of one replicate share one noise
//! uniform and one shuffle: the samples are nested prefixes of the shuffle
//! and the noise of each release is the same Laplace quantile scaled by its
//! own noise scale. Comparisons between cells are then paired, which removes
//! most Monte-Carlo noise from differences in MSE.

mod aggregate;
mod output;
mod protocol;
mod spec;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use aggregate::{aggregate, quantile_sorted, variance, Aggregate};
pub use output::{
    read_csv, read_schema, write_csv, write_csv_to, AGGREGATES_SCHEMA, MSE_CURVE_SCHEMA, REPLICATES_SCHEMA,
};
pub use protocol::{replicate_streams, Release, ReplicateRecord};
pub use spec::{pop_rng, ExperimentSpec, MechanismName, PopulationSource, ResolvedSpec, VarianceReduction};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub name: String,
    pub master_seed: u64,
    pub population_label: String,
    pub population_size: usize,
    pub true_value: f64,
    pub cells_per_replicate: usize,
    pub records: Vec<ReplicateRecord>,
    pub aggregates: Vec<Aggregate>,
}

/// Runs every replicate of `spec` on `threads` worker threads.
pub fn run_protocol(spec: &ResolvedSpec, threads: usize) -> Result<ExperimentResult> {
    let plan = protocol::plan(spec)?;
    let records = protocol::run_records(spec, &plan, threads)?;
    let aggregates = aggregate(&records, plan.cells.len());
    Ok(ExperimentResult {
        name: spec.spec.name.clone(),
        master_seed: spec.master_seed,
        population_label: spec.population.label().to_owned(),
        population_size: spec.population.len(),
        true_value: plan.true_value,
        cells_per_replicate: plan.cells.len(),
        records,
        aggregates,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputPaths {
    pub replicates: PathBuf,
    pub aggregates: PathBuf,
}

impl ExperimentResult {
    fn provenance(&self) -> Vec<(&'static str, String)> {
        vec![
            ("experiment", self.name.clone()),
            ("population", self.population_label.clone()),
            ("master_seed", self.master_seed.to_string()),
            ("replicates", (self.records.len() / self.cells_per_replicate.max(1)).to_string()),
        ]
    }

    /// Writes `replicates.csv` and `aggregates.csv` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<OutputPaths> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let paths = OutputPaths { replicates: dir.join("replicates.csv"), aggregates: dir.join("aggregates.csv") };
        let prov = self.provenance();
        write_csv(&paths.replicates, REPLICATES_SCHEMA, &prov, &self.records)?;
        write_csv(&paths.aggregates, AGGREGATES_SCHEMA, &prov, &self.aggregates)?;
        Ok(paths)
    }
}

/// One point of a log-MSE-versus-rate curve. Rate 1 is the population
/// release.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MseRow {
    pub epsilon: f64,
    pub rate: f64,
    pub n: usize,
    pub mse: f64,
    pub log_mse: f64,
}

/// The MSE view of a result, grouped by ε and sorted by rate. Sample cells
/// with `n = N` are dropped because they repeat the population cell.
pub fn mse_table(result: &ExperimentResult) -> Vec<MseRow> {
    let mut rows: Vec<MseRow> = result
        .aggregates
        .iter()
        .filter(|a| a.release == Release::Population || a.n < a.population_size)
        .map(|a| MseRow { epsilon: a.epsilon, rate: a.rate, n: a.n, mse: a.mse, log_mse: a.log_mse })
        .collect();
    rows.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon).then(a.rate.total_cmp(&b.rate)));
    rows
}

/// Runs the protocol and returns the result with its MSE view.
pub fn mse_curve(spec: &ResolvedSpec, threads: usize) -> Result<(ExperimentResult, Vec<MseRow>)> {
    let result = run_protocol(spec, threads)?;
    let rows = mse_table(&result);
    Ok((result, rows))
}

/// Noise and sensitivity summaries per cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSummary {
    pub release: Release,
    pub epsilon: f64,
    pub n: usize,
    pub abs_noise_q50: f64,
    pub abs_noise_q90: f64,
    pub noise_variance: f64,
    pub sensitivity_ratio_q50: f64,
    pub sensitivity_ratio_below_one: f64,
}

pub fn noise_distribution_study(result: &ExperimentResult) -> Vec<NoiseSummary> {
    result
        .aggregates
        .iter()
        .map(|a| NoiseSummary {
            release: a.release,
            epsilon: a.epsilon,
            n: a.n,
            abs_noise_q50: a.abs_noise_q50,
            abs_noise_q90: a.abs_noise_q90,
            noise_variance: a.noise_variance,
            sensitivity_ratio_q50: a.sensitivity_ratio_q50,
            sensitivity_ratio_below_one: a.sensitivity_ratio_below_one,
        })
        .collect()
}

/// `Var(noisy) ≈ E[Var(noise | sample)] + Var(raw)` per cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceDecomposition {
    pub release: Release,
    pub epsilon: f64,
    pub n: usize,
    pub expected_noise_variance: f64,
    pub sampling_variance: f64,
    /// Empirical variance of the noisy estimates, for comparison with the sum.
    pub empirical_total: f64,
}

pub fn variance_decomposition(result: &ExperimentResult) -> Result<Vec<VarianceDecomposition>> {
    if result.records.len() < 2 * result.cells_per_replicate {
        return Err(Error::param("variance decomposition needs at least 2 replicates"));
    }
    Ok(result
        .aggregates
        .iter()
        .map(|a| VarianceDecomposition {
            release: a.release,
            epsilon: a.epsilon,
            n: a.n,
            expected_noise_variance: a.expected_noise_variance,
            sampling_variance: a.raw_variance,
            empirical_total: a.noisy_variance,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(json: &str) -> ResolvedSpec {
        ExperimentSpec::from_json(json).unwrap().resolve(Some(11)).unwrap()
    }

    const BETA_MEAN: &str = r#"{
        "population": {"kind": "beta", "size": 201, "a": 2, "b": 10, "seed": 3},
        "statistic": "mean", "mechanism": "global-laplace",
        "epsilons": [0.5, 2], "sample_sizes": [201, 21], "rates": [0.5], "replicates": 40
    }"#;

    const SMOOTH: &str = r#"{
        "population": {"kind": "bimodal", "size": 301, "seed": 4},
        "statistic": "median", "mechanism": "smooth-laplace",
        "epsilons": [1], "sample_sizes": [301, 31, 101], "replicates": 30
    }"#;

    #[test]
    fn full_sample_repeats_population() {
        for s in [spec(BETA_MEAN), spec(SMOOTH)] {
            let res = run_protocol(&s, 1).unwrap();
            for chunk in res.records.chunks(res.cells_per_replicate) {
                let pop = chunk.iter().find(|r| r.release == Release::Population).unwrap();
                let full = chunk.iter().find(|r| r.release == Release::Sample && r.n == r.population_size).unwrap();
                assert_eq!(ReplicateRecord { release: Release::Population, ..*full }, *pop);
            }
        }
    }

    #[test]
    fn thread_count_does_not_matter() {
        let s = spec(SMOOTH);
        let a = run_protocol(&s, 1).unwrap();
        let b = run_protocol(&s, 3).unwrap();
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn recorded_budgets_match_amplification() {
        use crate::amplification::{amplified_budget, SamplingRate};
        use crate::budget::PrivacyBudget;
        let res = run_protocol(&spec(SMOOTH), 1).unwrap();
        for r in &res.records {
            let want = amplified_budget(
                PrivacyBudget::new(r.epsilon, r.delta).unwrap(),
                SamplingRate::from_counts(r.n, r.population_size).unwrap(),
            )
            .unwrap();
            assert!((r.eps_n - want.epsilon()).abs() <= 1e-12 * want.epsilon());
            assert!((r.delta_n - want.delta()).abs() <= 1e-12 * want.delta());
        }
    }

    #[test]
    fn antithetic_pairs_share_samples() {
        let res = run_protocol(&spec(BETA_MEAN), 1).unwrap();
        let k = res.cells_per_replicate;
        for p in 0..20 {
            let (a, b) = (&res.records[2 * p * k..(2 * p + 1) * k], &res.records[(2 * p + 1) * k..(2 * p + 2) * k]);
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.raw, y.raw);
                assert_eq!(x.noise, -y.noise);
            }
        }
    }

    #[test]
    fn mean_mse_never_beats_population() {
        // shared noise uniforms and antithetic pairs make this hold replicate
        // pair by replicate pair, not just in expectation
        let res = run_protocol(&spec(BETA_MEAN), 2).unwrap();
        let rows = mse_table(&res);
        for eps in [0.5, 2.0] {
            let pop = rows.iter().find(|r| r.epsilon == eps && r.rate == 1.0).unwrap();
            for r in rows.iter().filter(|r| r.epsilon == eps && r.rate < 1.0) {
                assert!(r.log_mse > pop.log_mse, "{r:?} vs {pop:?}");
            }
        }
    }

    #[test]
    fn decomposition_zero_terms() {
        let res = run_protocol(&spec(BETA_MEAN), 1).unwrap();
        let d = variance_decomposition(&res).unwrap();
        for v in d.iter().filter(|v| v.n == 201) {
            assert!(v.sampling_variance < 1e-30);
        }
        let mut one = ExperimentSpec::from_json(BETA_MEAN).unwrap();
        one.replicates = 1;
        let res = run_protocol(&one.resolve(Some(1)).unwrap(), 1).unwrap();
        assert!(variance_decomposition(&res).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let res = run_protocol(&spec(SMOOTH), 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = res.write(dir.path()).unwrap();
        let back: Vec<ReplicateRecord> = read_csv(&paths.replicates).unwrap();
        assert_eq!(back, res.records);
        let agg: Vec<Aggregate> = read_csv(&paths.aggregates).unwrap();
        assert_eq!(agg.len(), res.aggregates.len());
        assert_eq!(read_schema(&paths.replicates).unwrap().as_deref(), Some(REPLICATES_SCHEMA));
    }
}
