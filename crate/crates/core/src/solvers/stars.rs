//! All-star / dog-star frequency analysis and seeding.
//!
//! All-stars are the assets held most often by the best results of a pool,
//! dog-stars those held most often by the worst.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::{cmp_candidates, SolveResult};
use crate::error::{Error, Result};
use crate::mask::SetBits;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarEntry {
    pub asset: usize,
    pub frequency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarReport {
    pub universe: usize,
    /// Assets held by the `k` best results, most frequent first.
    pub all_stars: Vec<StarEntry>,
    /// Assets held by the `k` worst results, most frequent first.
    pub dog_stars: Vec<StarEntry>,
    pub pool_size: usize,
}

fn frequencies(masks: impl Iterator<Item = u64>, universe: usize, k: usize) -> Vec<StarEntry> {
    let mut counts = vec![0usize; universe];
    for m in masks {
        SetBits(m).for_each(|i| counts[i] += 1);
    }
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(asset, &c)| StarEntry {
            asset,
            frequency: c as f64 / k as f64,
        })
        .sorted_by(|a, b| b.frequency.total_cmp(&a.frequency).then(a.asset.cmp(&b.asset)))
        .collect()
}

/// Ranks results by [`SolveResult::score`] and counts asset inclusion among
/// the `k` best and the `k` worst.
pub fn star_analysis(pool: &[SolveResult], k: usize) -> Result<StarReport> {
    if k == 0 || pool.len() < 2 * k {
        return Err(Error::InsufficientPool { pool: pool.len(), k });
    }
    let universe = pool[0].portfolio.universe();
    if pool.iter().any(|r| r.portfolio.universe() != universe) {
        return Err(Error::MalformedData("pool mixes universe sizes".into()));
    }
    let ranked: Vec<u64> = pool
        .iter()
        .map(|r| (r.score(), r.portfolio.bits()))
        .sorted_by(|a, b| cmp_candidates(*a, *b))
        .map(|(_, m)| m)
        .collect();
    Ok(StarReport {
        universe,
        all_stars: frequencies(ranked[..k].iter().copied(), universe, k),
        dog_stars: frequencies(ranked[ranked.len() - k..].iter().copied(), universe, k),
        pool_size: k,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedOptions {
    pub extras: usize,
    pub max_masks: usize,
    /// Assets at or above this dog-star frequency are never added as extras.
    pub dog_cutoff: f64,
}

impl Default for SeedOptions {
    fn default() -> Self {
        SeedOptions {
            extras: 1,
            max_masks: 256,
            dog_cutoff: 0.5,
        }
    }
}

/// The top `n − extras` all-stars combined with each choice of `extras`
/// further assets that are not dog-stars.
pub fn heuristic_seed(report: &StarReport, target_size: usize, opts: &SeedOptions) -> Result<Vec<u64>> {
    if report.all_stars.is_empty() {
        return Err(Error::InsufficientStars {
            needed: 1,
            available: 0,
        });
    }
    if target_size == 0 || target_size > report.universe || opts.extras > target_size {
        return Err(Error::UnsupportedSize {
            size: target_size,
            universe: report.universe,
        });
    }
    let core_len = target_size - opts.extras;
    if core_len > report.all_stars.len() {
        return Err(Error::InsufficientStars {
            needed: core_len,
            available: report.all_stars.len(),
        });
    }
    let core: u64 = report.all_stars[..core_len].iter().fold(0, |m, e| m | 1 << e.asset);
    let dogs: u64 = report
        .dog_stars
        .iter()
        .filter(|e| e.frequency >= opts.dog_cutoff)
        .fold(0, |m, e| m | 1 << e.asset);

    // remaining all-stars first, then the rest of the universe
    let candidates: Vec<usize> = report.all_stars[core_len..]
        .iter()
        .map(|e| e.asset)
        .chain(0..report.universe)
        .filter(|&a| core >> a & 1 == 0 && dogs >> a & 1 == 0)
        .unique()
        .collect();

    Ok(candidates
        .into_iter()
        .combinations(opts.extras)
        .map(|extra| extra.iter().fold(core, |m, &a| m | 1 << a))
        .take(opts.max_masks)
        .collect())
}
