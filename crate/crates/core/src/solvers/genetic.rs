//! Generational genetic algorithm over masks.
//!
//! Tournament selection, uniform crossover and per-bit mutation. The best
//! individual always survives into the next generation, so the result is
//! never worse than any seed. Offspring are bred sequentially from one stream
//! and evaluated in parallel.

use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_universe, cmp_candidates, Method, Objective, SolveResult};
use crate::error::{Error, Result};
use crate::mask::full_mask;
use crate::rng::{rng, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub elitism_prob: f64,
    /// Per-bit flip probability; `None` means `1/N`.
    pub mutation_prob: Option<f64>,
    pub tournament: usize,
    pub seeds: Vec<u64>,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 256,
            generations: 200,
            elitism_prob: 0.1,
            mutation_prob: None,
            tournament: 3,
            seeds: Vec::new(),
            seed: 0,
        }
    }
}

impl GaConfig {
    fn validate(&self, universe: usize) -> Result<()> {
        if self.population < 2 {
            return Err(Error::ParamOutOfRange(format!(
                "population {} must be at least 2",
                self.population
            )));
        }
        if self.tournament < 1 {
            return Err(Error::ParamOutOfRange("tournament size must be at least 1".into()));
        }
        let probs = [Some(self.elitism_prob), self.mutation_prob];
        if probs.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::ParamOutOfRange("probabilities must lie in [0, 1]".into()));
        }
        let all = full_mask(universe);
        if let Some(bad) = self.seeds.iter().find(|&&s| s == 0 || s & !all != 0) {
            return Err(Error::ParamOutOfRange(format!("seed mask {bad:x} is empty or outside the universe")));
        }
        Ok(())
    }
}

type Individual = (f64, u64);

fn random_mask(rng: &mut Rng, all: u64) -> u64 {
    loop {
        let b = rng.random::<u64>() & all;
        if b != 0 {
            return b;
        }
    }
}

fn bernoulli_mask(rng: &mut Rng, n: usize, p: f64) -> u64 {
    let mut m = 0;
    for i in 0..n {
        if rng.random::<f64>() < p {
            m |= 1 << i;
        }
    }
    m
}

fn tournament(rng: &mut Rng, pop: &[Individual], size: usize) -> u64 {
    // population is sorted, so the lowest drawn rank wins
    (0..size).map(|_| rng.random_range(0..pop.len())).min().map(|i| pop[i].1).unwrap()
}

fn evaluate(objective: &dyn Objective, masks: Vec<u64>) -> Vec<Individual> {
    masks.into_par_iter().map(|b| (objective.value(b), b)).collect()
}

pub fn genetic(objective: &dyn Objective, cfg: &GaConfig) -> Result<SolveResult> {
    let universe = objective.universe();
    check_universe(universe)?;
    cfg.validate(universe)?;
    let started = Instant::now();
    let all = full_mask(universe);
    let mutation = cfg.mutation_prob.unwrap_or(1.0 / universe as f64);
    let mut rng = rng(cfg.seed);

    let mut initial: Vec<u64> = cfg.seeds.iter().take(cfg.population).copied().collect();
    while initial.len() < cfg.population {
        initial.push(random_mask(&mut rng, all));
    }
    let mut pop = evaluate(objective, initial);
    let mut evaluations = pop.len() as u64;
    pop.sort_by(|a, b| cmp_candidates(*a, *b));

    for _ in 0..cfg.generations {
        let mut next: Vec<Individual> = vec![pop[0]];
        let mut children = Vec::new();
        while next.len() + children.len() < cfg.population {
            let rank = next.len() + children.len();
            if rng.random::<f64>() < cfg.elitism_prob {
                next.push(pop[rank]);
                continue;
            }
            let a = tournament(&mut rng, &pop, cfg.tournament);
            let b = tournament(&mut rng, &pop, cfg.tournament);
            let pick = rng.random::<u64>();
            let mut child = ((a & pick) | (b & !pick)) ^ bernoulli_mask(&mut rng, universe, mutation);
            child &= all;
            if child == 0 {
                child = 1 << rng.random_range(0..universe);
            }
            children.push(child);
        }
        evaluations += children.len() as u64;
        next.extend(evaluate(objective, children));
        next.sort_by(|a, b| cmp_candidates(*a, *b));
        pop = next;
    }

    let (value, bits) = pop[0];
    let mut result = SolveResult::new(objective, bits, value, if cfg.seeds.is_empty() { Method::Ga } else { Method::GaSeeded })?;
    result.evaluations = evaluations;
    result.wall_time = started.elapsed().as_secs_f64();
    Ok(result)
}
