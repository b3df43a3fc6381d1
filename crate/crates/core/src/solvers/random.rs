//! Uniform random sampling over nonempty masks.

use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use super::{better, check_universe, Method, Objective, SolveResult};
use crate::error::{Error, Result};
use crate::mask::full_mask;
use crate::rng::unit_rng;

const CHUNK: u64 = 1 << 15;

/// Objective statistics for one portfolio size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SizeStat {
    pub count: u64,
    /// Mean over finite objective values.
    pub mean: f64,
    pub best: f64,
    #[serde(skip)]
    pub best_mask: u64,
    #[serde(skip)]
    finite: u64,
    #[serde(skip)]
    sum: f64,
}

impl SizeStat {
    fn empty() -> Self {
        SizeStat {
            count: 0,
            mean: f64::NAN,
            best: f64::INFINITY,
            best_mask: 0,
            finite: 0,
            sum: 0.0,
        }
    }

    fn push(&mut self, value: f64, bits: u64) {
        self.count += 1;
        if value.is_finite() {
            self.finite += 1;
            self.sum += value;
        }
        if self.best_mask == 0 || better((value, bits), (self.best, self.best_mask)) {
            self.best = value;
            self.best_mask = bits;
        }
    }

    fn merge(&mut self, other: &SizeStat) {
        self.count += other.count;
        self.finite += other.finite;
        self.sum += other.sum;
        if other.best_mask != 0 && (self.best_mask == 0 || better((other.best, other.best_mask), (self.best, self.best_mask))) {
            self.best = other.best;
            self.best_mask = other.best_mask;
        }
    }

    fn finish(&mut self) {
        self.mean = if self.finite > 0 {
            self.sum / self.finite as f64
        } else {
            f64::NAN
        };
    }
}

/// Size distribution and per-size objective statistics of a sample run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleSummary {
    pub samples: u64,
    /// Indexed by portfolio size, `0..=universe`.
    pub per_size: Vec<SizeStat>,
}

impl SampleSummary {
    pub fn size_counts(&self) -> Vec<u64> {
        self.per_size.iter().map(|s| s.count).collect()
    }

    pub fn fraction_of_size(&self, size: usize) -> f64 {
        self.per_size.get(size).map_or(0.0, |s| s.count as f64 / self.samples as f64)
    }
}

/// Draws `samples` masks uniformly from all bitstrings, redrawing the empty
/// mask. Sample chunks use independent streams of `seed`.
pub fn random_sample(objective: &dyn Objective, samples: u64, seed: u64) -> Result<(SolveResult, SampleSummary)> {
    let universe = objective.universe();
    check_universe(universe)?;
    if samples == 0 {
        return Err(Error::ParamOutOfRange("samples must be at least 1".into()));
    }
    let started = Instant::now();
    let all = full_mask(universe);
    let chunks = samples.div_ceil(CHUNK);

    let parts: Vec<Vec<SizeStat>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = unit_rng(seed, c);
            let mut stats = vec![SizeStat::empty(); universe + 1];
            for _ in 0..CHUNK.min(samples - c * CHUNK) {
                let bits = loop {
                    let b = rng.random::<u64>() & all;
                    if b != 0 {
                        break b;
                    }
                };
                stats[bits.count_ones() as usize].push(objective.value(bits), bits);
            }
            stats
        })
        .collect();

    let mut per_size = vec![SizeStat::empty(); universe + 1];
    for part in &parts {
        for (acc, s) in per_size.iter_mut().zip(part) {
            acc.merge(s);
        }
    }
    per_size.iter_mut().for_each(SizeStat::finish);

    let (value, bits) = per_size
        .iter()
        .filter(|s| s.best_mask != 0)
        .map(|s| (s.best, s.best_mask))
        .reduce(|a, b| if better(b, a) { b } else { a })
        .expect("at least one sample");

    let mut result = SolveResult::new(objective, bits, value, Method::Random)?;
    result.evaluations = samples;
    result.wall_time = started.elapsed().as_secs_f64();
    Ok((result, SampleSummary { samples, per_size }))
}
