//! Single-bit-flip simulated annealing with geometric cooling.

use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cmp_candidates, Method, QuboObjective, SolveResult};
use crate::error::{Error, Result};
use crate::mask::full_mask;
use crate::qubo::DenseQubo;
use crate::rng::{unit_rng, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaConfig {
    pub initial_temp: f64,
    /// Multiplicative temperature factor per step, in (0, 1).
    pub cooling_rate: f64,
    pub steps: u64,
    pub restarts: u64,
    pub seed: u64,
    /// Also track the best visited mask of this size.
    #[serde(default)]
    pub target_size: Option<usize>,
}

impl SaConfig {
    /// Starting temperature at the mean absolute flip delta of random states,
    /// cooled to a thousandth of that over `steps`.
    pub fn for_qubo(q: &DenseQubo, steps: u64, restarts: u64, seed: u64) -> Self {
        let mut rng = unit_rng(seed, u64::MAX);
        let all = full_mask(q.dim());
        let mut total = 0.0;
        let mut count = 0.0;
        for _ in 0..32 {
            let bits = rng.random::<u64>() & all;
            for k in 0..q.dim() {
                total += q.flip_delta(bits, k).abs();
                count += 1.0;
            }
        }
        let t0 = if total > 0.0 { total / count } else { 1.0 };
        SaConfig {
            initial_temp: t0,
            cooling_rate: 1e-3f64.powf(1.0 / steps.max(1) as f64),
            steps,
            restarts,
            seed,
            target_size: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cooling_rate > 0.0 && self.cooling_rate < 1.0) {
            return Err(Error::ParamOutOfRange(format!(
                "cooling_rate {} must be in (0, 1)",
                self.cooling_rate
            )));
        }
        if self.steps < 1 || self.restarts < 1 {
            return Err(Error::ParamOutOfRange("steps and restarts must be at least 1".into()));
        }
        if !(self.initial_temp >= 0.0 && self.initial_temp.is_finite()) {
            return Err(Error::ParamOutOfRange(format!(
                "initial_temp {} must be finite and non-negative",
                self.initial_temp
            )));
        }
        Ok(())
    }
}

struct RunOutcome {
    best: (f64, u64),
    at_target: Option<(f64, u64)>,
    evaluations: u64,
}

/// One restart. The incumbent only tracks nonempty masks; `trace` receives the
/// energy after every accepted move.
fn anneal_run(q: &DenseQubo, cfg: &SaConfig, rng: &mut Rng, mut trace: Option<&mut Vec<f64>>) -> RunOutcome {
    let n = q.dim();
    let all = full_mask(n);
    let mut bits = loop {
        let b = rng.random::<u64>() & all;
        if b != 0 {
            break b;
        }
    };
    let mut energy = q.energy(bits);
    let mut best = (energy, bits);
    let target = cfg.target_size.map(|n| n as u32);
    let mut at_target = (target == Some(bits.count_ones())).then_some((energy, bits));
    let mut temp = cfg.initial_temp;

    for _ in 0..cfg.steps {
        let k = rng.random_range(0..n);
        let delta = q.flip_delta(bits, k);
        let accept = delta <= 0.0 || (temp > 0.0 && rng.random::<f64>() < (-delta / temp).exp());
        if accept {
            bits ^= 1 << k;
            energy += delta;
            if let Some(t) = trace.as_deref_mut() {
                t.push(energy);
            }
            if bits != 0 && cmp_candidates((energy, bits), best).is_lt() {
                best = (energy, bits);
            }
            if target == Some(bits.count_ones()) && at_target.is_none_or(|t| cmp_candidates((energy, bits), t).is_lt()) {
                at_target = Some((energy, bits));
            }
        }
        temp *= cfg.cooling_rate;
    }
    // incremental sums drift; report the exact energy of the incumbent
    best.0 = q.energy(best.1);
    let at_target = at_target.map(|(_, b)| (q.energy(b), b));
    RunOutcome {
        best,
        at_target,
        evaluations: cfg.steps + 1,
    }
}

/// Outcome of one restart.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnealRun {
    pub best: SolveResult,
    /// Lowest-energy visited mask of `target_size`, when one was tracked and
    /// visited.
    pub at_target: Option<SolveResult>,
}

/// Every restart, in restart order.
pub fn anneal_runs(objective: &QuboObjective<'_>, cfg: &SaConfig) -> Result<Vec<AnnealRun>> {
    cfg.validate()?;
    let q = objective.dense();
    (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let started = Instant::now();
            let mut rng = unit_rng(cfg.seed, r);
            let out = anneal_run(q, cfg, &mut rng, None);
            let wall_time = started.elapsed().as_secs_f64();
            let finish = |(energy, bits): (f64, u64)| -> Result<SolveResult> {
                let mut res = SolveResult::new(objective, bits, energy, Method::Sa)?;
                res.evaluations = out.evaluations;
                res.wall_time = wall_time;
                Ok(res)
            };
            Ok(AnnealRun {
                best: finish(out.best)?,
                at_target: out.at_target.map(finish).transpose()?,
            })
        })
        .collect()
}

/// Best result of each restart, in restart order.
pub fn anneal_restarts(objective: &QuboObjective<'_>, cfg: &SaConfig) -> Result<Vec<SolveResult>> {
    Ok(anneal_runs(objective, cfg)?.into_iter().map(|r| r.best).collect())
}

/// Best mask over all restarts, re-scored by exact CQNS when the objective
/// carries statistics.
pub fn simulated_anneal(objective: &QuboObjective<'_>, cfg: &SaConfig) -> Result<SolveResult> {
    let started = Instant::now();
    let runs = anneal_restarts(objective, cfg)?;
    let evaluations = runs.iter().map(|r| r.evaluations).sum();
    let mut best = runs
        .into_iter()
        .min_by(|a, b| cmp_candidates((a.energy, a.portfolio.bits()), (b.energy, b.portfolio.bits())))
        .expect("restarts >= 1");
    best.evaluations = evaluations;
    best.wall_time = started.elapsed().as_secs_f64();
    Ok(best)
}
