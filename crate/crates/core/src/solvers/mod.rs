//! Classical minimizers over binary portfolio masks.
//!
//! Every solver minimizes an [`Objective`] and breaks ties by the lower mask,
//! so results are fully ordered by `(value, mask)` and independent of the
//! number of worker threads.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marketdata::ReturnStats;
use crate::mask::Portfolio;
use crate::qubo::{DenseQubo, QuboMatrix};
use crate::scoring::cqns;

mod anneal;
mod brute;
mod genetic;
mod random;
mod stars;

pub use anneal::{anneal_restarts, anneal_runs, simulated_anneal, AnnealRun, SaConfig};
pub use brute::{brute_force, read_checkpoint, BruteOptions, Checkpoint, DEFAULT_BRUTE_CAP};
pub use genetic::{genetic, GaConfig};
pub use random::{random_sample, SampleSummary, SizeStat};
pub use stars::{heuristic_seed, star_analysis, SeedOptions, StarEntry, StarReport};

/// A function of a mask to be minimized.
pub trait Objective: Sync {
    fn universe(&self) -> usize;

    fn value(&self, bits: u64) -> f64;

    /// Exact CQNS of `bits`, when the objective carries return statistics.
    fn cqns(&self, _bits: u64) -> Option<f64> {
        None
    }
}

/// Exact CQNS; masks where it is undefined evaluate to `+∞`.
#[derive(Clone, Copy, Debug)]
pub struct CqnsObjective<'a> {
    pub stats: &'a ReturnStats,
    pub alpha: f64,
}

impl<'a> CqnsObjective<'a> {
    pub fn new(stats: &'a ReturnStats, alpha: f64) -> Self {
        CqnsObjective { stats, alpha }
    }
}

impl Objective for CqnsObjective<'_> {
    fn universe(&self) -> usize {
        self.stats.len()
    }

    fn value(&self, bits: u64) -> f64 {
        self.cqns(bits).unwrap_or(f64::INFINITY)
    }

    fn cqns(&self, bits: u64) -> Option<f64> {
        let p = Portfolio::new(bits, self.stats.len()).ok()?;
        cqns(self.stats, &p, self.alpha).ok()
    }
}

/// QUBO energy, optionally re-scored by exact CQNS.
#[derive(Clone, Debug)]
pub struct QuboObjective<'a> {
    dense: DenseQubo,
    scoring: Option<CqnsObjective<'a>>,
}

impl<'a> QuboObjective<'a> {
    pub fn new(q: &QuboMatrix) -> Self {
        QuboObjective {
            dense: q.dense(),
            scoring: None,
        }
    }

    pub fn with_scoring(mut self, stats: &'a ReturnStats, alpha: f64) -> Result<Self> {
        if stats.len() != self.dense.dim() {
            return Err(Error::Dimension {
                expected: self.dense.dim(),
                got: stats.len(),
            });
        }
        self.scoring = Some(CqnsObjective::new(stats, alpha));
        Ok(self)
    }

    pub fn dense(&self) -> &DenseQubo {
        &self.dense
    }
}

impl Objective for QuboObjective<'_> {
    fn universe(&self) -> usize {
        self.dense.dim()
    }

    fn value(&self, bits: u64) -> f64 {
        self.dense.energy(bits)
    }

    fn cqns(&self, bits: u64) -> Option<f64> {
        self.scoring.as_ref().and_then(|s| s.cqns(bits))
    }
}

/// Wraps a closure as an objective.
pub struct FnObjective<F> {
    pub universe: usize,
    pub f: F,
}

impl<F: Fn(u64) -> f64 + Sync> Objective for FnObjective<F> {
    fn universe(&self) -> usize {
        self.universe
    }

    fn value(&self, bits: u64) -> f64 {
        (self.f)(bits)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Brute,
    Random,
    Sa,
    Ga,
    GaSeeded,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Brute => "brute",
            Method::Random => "random",
            Method::Sa => "sa",
            Method::Ga => "ga",
            Method::GaSeeded => "ga_seeded",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "brute" => Method::Brute,
            "random" => Method::Random,
            "sa" => Method::Sa,
            "ga" => Method::Ga,
            "ga_seeded" => Method::GaSeeded,
            other => return Err(Error::ParamOutOfRange(format!("unknown method {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub portfolio: Portfolio,
    /// Value of the minimized objective at `portfolio`.
    pub energy: f64,
    /// Exact CQNS, when the objective could compute it.
    pub cqns: Option<f64>,
    pub method: Method,
    /// Seconds.
    pub wall_time: f64,
    pub evaluations: u64,
}

impl SolveResult {
    pub(crate) fn new(objective: &dyn Objective, bits: u64, energy: f64, method: Method) -> Result<Self> {
        Ok(SolveResult {
            portfolio: Portfolio::new(bits, objective.universe())?,
            energy,
            cqns: objective.cqns(bits),
            method,
            wall_time: 0.0,
            evaluations: 0,
        })
    }

    /// Ranking key: CQNS when known, otherwise the objective value.
    pub fn score(&self) -> f64 {
        self.cqns.unwrap_or(self.energy)
    }
}

/// Total order on `(value, mask)`.
#[inline]
pub(crate) fn better(a: (f64, u64), b: (f64, u64)) -> bool {
    cmp_candidates(a, b) == Ordering::Less
}

#[inline]
pub(crate) fn cmp_candidates(a: (f64, u64), b: (f64, u64)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

pub(crate) fn check_universe(universe: usize) -> Result<()> {
    if universe == 0 || universe > crate::mask::MAX_UNIVERSE {
        return Err(Error::ParamOutOfRange(format!(
            "universe size {universe} must be in 1..={}",
            crate::mask::MAX_UNIVERSE
        )));
    }
    Ok(())
}
