use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{ResolvedSpec, VarianceReduction};
use crate::amplification::{amplified_budget, SamplingRate};
use crate::budget::PrivacyBudget;
use crate::error::{Error, Result};
use crate::laplace::{laplace_from_uniform, LaplaceParams};
use crate::mechanisms::Mechanism;
use crate::rng::{tags, RngStream};
use crate::sampling::partial_shuffle;
use crate::sensitivity::{smooth_median_sorted, smoothing_beta, Statistic};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Release {
    /// Population statistic at the target budget.
    Population,
    /// Sample statistic at the amplified budget.
    Sample,
}

impl Release {
    pub fn as_str(self) -> &'static str {
        match self {
            Release::Population => "population",
            Release::Sample => "sample",
        }
    }
}

/// One privatized release in one replicate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub release: Release,
    /// Target ε and δ.
    pub epsilon: f64,
    pub delta: f64,
    pub n: usize,
    pub population_size: usize,
    pub rate: f64,
    pub raw: f64,
    pub sensitivity: f64,
    pub noise_scale: f64,
    pub noise: f64,
    pub noisy: f64,
    /// Budget spent on the data the statistic was computed from.
    pub eps_n: f64,
    pub delta_n: f64,
    pub true_value: f64,
}

/// A (target budget, release, sample size) combination. Every replicate
/// produces one record per cell, in cell order.
#[derive(Clone, Debug)]
pub(crate) struct Cell {
    pub release: Release,
    pub target: PrivacyBudget,
    pub spent: PrivacyBudget,
    pub n: usize,
    pub rate: f64,
    /// Sensitivity when it does not depend on the replicate.
    pub fixed_sensitivity: Option<f64>,
    /// Smoothing parameter of the spent budget (smooth mechanism only).
    pub beta: Option<f64>,
}

pub(crate) struct Plan {
    pub cells: Vec<Cell>,
    pub sorted_population: Vec<f64>,
    pub true_value: f64,
}

pub(crate) fn plan(r: &ResolvedSpec) -> Result<Plan> {
    let pop = &r.population;
    let big_n = pop.len();
    let sorted_population = pop.sorted_values();
    let true_value = r.spec.statistic.of_sorted(&sorted_population);
    let search = r.spec.smooth_search;
    let mut cells = Vec::new();
    for &target in &r.budgets {
        let pop_cell = cell(r, Release::Population, target, target, big_n)?;
        let pop_sens = match pop_cell.beta {
            Some(beta) => smooth_median_sorted(&sorted_population, pop.bounds(), beta, search)?.0,
            None => pop_cell.fixed_sensitivity.expect("global cells are fixed"),
        };
        cells.push(Cell { fixed_sensitivity: Some(pop_sens), ..pop_cell });
        for &n in &r.sample_sizes {
            let rate = SamplingRate::from_counts(n, big_n)?;
            let spent = amplified_budget(target, rate)?;
            let mut c = cell(r, Release::Sample, target, spent, n)?;
            if n == big_n {
                // the full "sample" is the population itself
                c.fixed_sensitivity = Some(pop_sens);
            }
            cells.push(c);
        }
    }
    Ok(Plan { cells, sorted_population, true_value })
}

fn cell(r: &ResolvedSpec, release: Release, target: PrivacyBudget, spent: PrivacyBudget, n: usize) -> Result<Cell> {
    let big_n = r.population.len();
    let (fixed_sensitivity, beta) = match r.mechanism {
        Mechanism::GlobalLaplace => {
            let range = r.population.range().ok_or(Error::Unbounded)?;
            let s = match r.spec.statistic {
                Statistic::Mean => range / n as f64,
                Statistic::Median => range,
            };
            (Some(s), None)
        }
        Mechanism::SmoothLaplace => (None, Some(smoothing_beta(spent)?)),
    };
    Ok(Cell { release, target, spent, n, rate: SamplingRate::from_counts(n, big_n)?.value(), fixed_sensitivity, beta })
}

/// Streams for replicate `t`: the sample stream and the noise uniform.
///
/// With antithetic pairing, replicates `2p` and `2p + 1` use the streams of
/// pair `p`, the second one reflected.
pub fn replicate_streams(master_seed: u64, t: usize, vr: VarianceReduction) -> (RngStream, f64) {
    let (key, reflect) = match vr {
        VarianceReduction::Antithetic => (t / 2, t % 2 == 1),
        VarianceReduction::None => (t, false),
    };
    let base = RngStream::new(master_seed, key as u64);
    let sampling = base.substream(tags::SAMPLING);
    let mut noise = base.substream(tags::NOISE);
    if reflect {
        noise = noise.antithetic();
    }
    (sampling, noise.next_open01())
}

pub(crate) fn run_replicate(r: &ResolvedSpec, plan: &Plan, t: usize) -> Result<Vec<ReplicateRecord>> {
    let pop = &r.population;
    let big_n = pop.len();
    let statistic = r.spec.statistic;
    let (mut srng, u) = replicate_streams(r.master_seed, t, r.spec.variance_reduction);

    // One shuffle per replicate; every sample size takes a prefix, so the
    // samples of one replicate are nested.
    let n_max = r.sample_sizes.iter().copied().filter(|&n| n < big_n).max().unwrap_or(0);
    let mut perm: Vec<usize> = (0..big_n).collect();
    partial_shuffle(&mut perm, n_max, &mut srng);
    let values = pop.values();
    let samples: Vec<(usize, Vec<f64>)> = r
        .sample_sizes
        .iter()
        .filter(|&&n| n < big_n)
        .map(|&n| {
            let mut s: Vec<f64> = perm[..n].iter().map(|&i| values[i]).collect();
            s.sort_by(f64::total_cmp);
            (n, s)
        })
        .collect();
    let sorted_for = |n: usize| -> &[f64] {
        if n == big_n {
            &plan.sorted_population
        } else {
            &samples.iter().find(|(m, _)| *m == n).expect("sample drawn").1
        }
    };

    plan.cells
        .iter()
        .map(|c| {
            let sorted = sorted_for(c.n);
            let raw = statistic.of_sorted(sorted);
            let sensitivity = match (c.fixed_sensitivity, c.beta) {
                (Some(s), _) => s,
                (None, Some(beta)) => smooth_median_sorted(sorted, pop.bounds(), beta, r.spec.smooth_search)?.0,
                (None, None) => unreachable!("cells carry a sensitivity or a beta"),
            };
            let noise_scale = r.mechanism.noise_scale(sensitivity, c.spent.epsilon());
            let noise = laplace_from_uniform(LaplaceParams::new(0.0, noise_scale)?, u);
            let mut noisy = raw + noise;
            if r.spec.clamp_output {
                if let Some(b) = pop.bounds() {
                    noisy = b.clamp(noisy);
                }
            }
            Ok(ReplicateRecord {
                replicate: t,
                release: c.release,
                epsilon: c.target.epsilon(),
                delta: c.target.delta(),
                n: c.n,
                population_size: big_n,
                rate: c.rate,
                raw,
                sensitivity,
                noise_scale,
                noise,
                noisy,
                eps_n: c.spent.epsilon(),
                delta_n: c.spent.delta(),
                true_value: plan.true_value,
            })
        })
        .collect()
}

/// Per-replicate records, in replicate order then cell order.
pub(crate) fn run_records(r: &ResolvedSpec, plan: &Plan, threads: usize) -> Result<Vec<ReplicateRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::param(format!("thread pool: {e}")))?;
    let per_replicate: Vec<Vec<ReplicateRecord>> = pool.install(|| {
        (0..r.spec.replicates).into_par_iter().map(|t| run_replicate(r, plan, t)).collect::<Result<Vec<_>>>()
    })?;
    Ok(per_replicate.into_iter().flatten().collect())
}
