//! Simple random sampling without replacement.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::Population;
use crate::rng::RngStream;

/// Limit on `C(N, n)` for [`enumerate_samples`].
pub const ENUMERATION_GUARD: u128 = 1_000_000;

/// Sorted, distinct 1-based unit indices of a sample of size `n` from `N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSelection {
    indices: Vec<usize>,
    population_size: usize,
}

impl SampleSelection {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn n(&self) -> usize {
        self.indices.len()
    }

    pub fn population_size(&self) -> usize {
        self.population_size
    }

    /// The selected values of `values` (indexed from 0), in index order.
    pub fn pick<'a>(&'a self, values: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        self.indices.iter().map(move |&i| values[i - 1])
    }
}

/// Draws the first `n` positions of a Fisher–Yates shuffle of `0..N` into the
/// front of `perm`. Uses exactly `n` bounded draws from `rng` (fewer only when
/// `n = N`, where the last swap is fixed).
pub fn partial_shuffle(perm: &mut [usize], n: usize, rng: &mut RngStream) {
    let len = perm.len();
    for i in 0..n.min(len.saturating_sub(1)) {
        let j = rng.random_range(i..len);
        perm.swap(i, j);
    }
}

/// Uniformly random size-`n` sample of `pop`, together with the
/// sub-population (label suffixed, bounds inherited).
pub fn srswor(pop: &Population, n: usize, rng: &mut RngStream) -> Result<(SampleSelection, Population)> {
    let big_n = pop.len();
    if n == 0 || n > big_n {
        return Err(Error::param(format!("sample size must satisfy 1 <= n <= N, got n = {n}, N = {big_n}")));
    }
    let mut perm: Vec<usize> = (0..big_n).collect();
    partial_shuffle(&mut perm, n, rng);
    let mut picked = perm[..n].to_vec();
    picked.sort_unstable();
    let sub = pop.subset(&picked, format!("{} [srswor n={n}]", pop.label()));
    let sel = SampleSelection { indices: picked.into_iter().map(|i| i + 1).collect(), population_size: big_n };
    Ok((sel, sub))
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Every size-`n` subset of `1..=N` in lexicographic order. `n = 0` yields a
/// single empty selection.
pub fn enumerate_samples(population_size: usize, n: usize) -> Result<SampleIter> {
    if n > population_size {
        return Err(Error::param(format!("sample size {n} exceeds population size {population_size}")));
    }
    let count = binomial(population_size, n);
    if count > ENUMERATION_GUARD {
        return Err(Error::GuardExceeded(format!("C({population_size}, {n}) = {count} exceeds {ENUMERATION_GUARD}")));
    }
    Ok(SampleIter { current: Some((1..=n).collect()), population_size })
}

pub struct SampleIter {
    current: Option<Vec<usize>>,
    population_size: usize,
}

impl Iterator for SampleIter {
    type Item = SampleSelection;

    fn next(&mut self) -> Option<SampleSelection> {
        let cur = self.current.take()?;
        let out = SampleSelection { indices: cur.clone(), population_size: self.population_size };
        let (n, big_n) = (cur.len(), self.population_size);
        // advance: rightmost position that can still move right
        let mut next = cur;
        if let Some(p) = (0..n).rev().find(|&p| next[p] < big_n - (n - 1 - p)) {
            next[p] += 1;
            for q in p + 1..n {
                next[q] = next[q - 1] + 1;
            }
            self.current = Some(next);
        }
        Some(out)
    }
}
