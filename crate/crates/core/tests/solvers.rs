use qubo_portfolio::qubo::{build_qubo, BuildMode};
use qubo_portfolio::rng::derive_seed;
use qubo_portfolio::scoring::cqns;
use qubo_portfolio::solvers::*;
use qubo_portfolio::synthetic::random_stats;
use qubo_portfolio::{Error, Portfolio};
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};

/// Plain loop over every nonempty mask.
fn oracle_min(objective: &dyn Objective) -> (f64, u64) {
    let n = objective.universe();
    let mut best = (f64::INFINITY, 0);
    for bits in 1..(1u64 << n) {
        let v = objective.value(bits);
        if v < best.0 {
            best = (v, bits);
        }
    }
    best
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn brute_small_cases() {
    let stats = random_stats(1, 3);
    let r = brute_force(&CqnsObjective::new(&stats, 1.0), &BruteOptions::default()).unwrap();
    assert_eq!(r.portfolio.bits(), 1);

    let stats = random_stats(2, 4);
    let obj = CqnsObjective::new(&stats, 0.0);
    let by_hand = [1u64, 2, 3]
        .into_iter()
        .map(|b| (cqns(&stats, &Portfolio::new(b, 2).unwrap(), 0.0).unwrap(), b))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap();
    let r = brute_force(&obj, &BruteOptions::default()).unwrap();
    assert_eq!((r.energy, r.portfolio.bits()), by_hand);
    assert_eq!(r.evaluations, 3);
}

#[test]
fn brute_resume_matches_uninterrupted() {
    let stats = random_stats(14, 31);
    let obj = CqnsObjective::new(&stats, 1.0);
    let full = brute_force(&obj, &BruteOptions::default()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let cp = dir.path().join("bf.ckpt");
    let half = BruteOptions {
        checkpoint: Some(cp.clone()),
        checkpoint_every: 1000,
        stop_after: Some(1 << 13),
        ..Default::default()
    };
    assert!(matches!(brute_force(&obj, &half), Err(Error::Interrupted { .. })));
    let saved = read_checkpoint(&cp).unwrap().unwrap();
    assert_eq!(saved.last_index, 1 << 13);
    let resumed = brute_force(
        &obj,
        &BruteOptions {
            checkpoint: Some(cp),
            checkpoint_every: 1000,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(resumed.portfolio, full.portfolio);
    assert_eq!(resumed.energy.to_bits(), full.energy.to_bits());
    assert_eq!(resumed.evaluations, full.evaluations);
}

#[test]
fn brute_cap() {
    let obj = FnObjective { universe: 30, f: |_| 0.0 };
    assert!(matches!(brute_force(&obj, &BruteOptions::default()), Err(Error::BudgetExceeded { .. })));
}

#[test]
fn oracle_dominance() {
    for seed in 0..4 {
        let stats = random_stats(11, seed);
        let obj = CqnsObjective::new(&stats, 1.0);
        let oracle = oracle_min(&obj);
        let brute = brute_force(&obj, &BruteOptions::default()).unwrap();
        assert_eq!((brute.energy, brute.portfolio.bits()), oracle);
        let (random, _) = random_sample(&obj, 5000, seed).unwrap();
        let ga = genetic(&obj, &GaConfig { population: 32, generations: 20, seed, ..Default::default() }).unwrap();
        for r in [random, ga] {
            assert!(r.energy >= brute.energy);
        }
    }
}

#[test]
fn random_size_distribution_is_binomial() {
    let n = 20;
    let samples = 200_000u64;
    let obj = FnObjective { universe: n, f: |_| 0.0 };
    let (_, summary) = random_sample(&obj, samples, 99).unwrap();
    let counts = summary.size_counts();
    // nonempty draws: Binomial(n, 1/2) conditioned on size >= 1
    let binom = Binomial::new(0.5, n as u64).unwrap();
    let norm = 1.0 - binom.pmf(0);
    let mut chi2 = 0.0;
    let mut cells = 0;
    let mut pooled = (0.0, 0.0);
    for (k, &observed) in counts.iter().enumerate().skip(1) {
        let expected = samples as f64 * binom.pmf(k as u64) / norm;
        if expected < 5.0 {
            pooled.0 += observed as f64;
            pooled.1 += expected;
            continue;
        }
        chi2 += (observed as f64 - expected).powi(2) / expected;
        cells += 1;
    }
    if pooled.1 > 0.0 {
        chi2 += (pooled.0 - pooled.1).powi(2) / pooled.1;
        cells += 1;
    }
    let critical = ChiSquared::new((cells - 1) as f64).unwrap().inverse_cdf(0.999);
    assert!(chi2 < critical, "chi2 {chi2} >= {critical}");
}

#[test]
fn random_small_universe_finds_optimum() {
    let stats = random_stats(3, 8);
    let obj = CqnsObjective::new(&stats, 1.0);
    let (r, _) = random_sample(&obj, 10_000, 5).unwrap();
    assert_eq!((r.energy, r.portfolio.bits()), oracle_min(&obj));
}

#[test]
fn solvers_ignore_thread_count() {
    let stats = random_stats(12, 40);
    let obj = CqnsObjective::new(&stats, 1.0);
    let q = build_qubo(&stats, 5, 0.0, BuildMode::ExactAlpha0).unwrap();
    let qo = QuboObjective::new(&q).with_scoring(&stats, 1.0).unwrap();
    let run = || {
        let (r, s) = random_sample(&obj, 100_000, 1).unwrap();
        let ga = genetic(&obj, &GaConfig { population: 64, generations: 30, seed: 2, ..Default::default() }).unwrap();
        let sa = anneal_restarts(&qo, &SaConfig::for_qubo(qo.dense(), 2000, 8, 3)).unwrap();
        (
            (r.portfolio, r.energy.to_bits(), s.size_counts()),
            (ga.portfolio, ga.energy.to_bits()),
            sa.iter().map(|x| (x.portfolio, x.energy.to_bits())).collect::<Vec<_>>(),
        )
    };
    let one = in_pool(1, run);
    let four = in_pool(4, run);
    assert_eq!(one, four);
}

#[test]
fn ga_large_population_matches_oracle() {
    let stats = random_stats(14, 1028);
    let obj = CqnsObjective::new(&stats, 1.0);
    let oracle = oracle_min(&obj);
    let hits = (0..20)
        .filter(|&t| {
            let cfg = GaConfig {
                population: 1028,
                generations: 200,
                seed: derive_seed(t, "ga-oracle"),
                ..Default::default()
            };
            genetic(&obj, &cfg).unwrap().portfolio.bits() == oracle.1
        })
        .count();
    assert!(hits >= 18, "{hits}/20");
}

#[test]
fn ga_never_worse_than_seed() {
    let stats = random_stats(16, 7);
    let obj = CqnsObjective::new(&stats, 1.0);
    for t in 0..10u64 {
        let seed_mask = (t * 2654435761) & 0xffff | 1;
        let cfg = GaConfig {
            population: 8,
            generations: 3,
            seeds: vec![seed_mask],
            seed: t,
            ..Default::default()
        };
        assert!(genetic(&obj, &cfg).unwrap().energy <= obj.value(seed_mask));
    }
}

fn pool_from(stats: &qubo_portfolio::marketdata::ReturnStats) -> Vec<SolveResult> {
    // every nonempty mask of the universe, via the brute-force objective
    let obj = CqnsObjective::new(stats, 1.0);
    let n = stats.len();
    let masks: Vec<u64> = (1..(1u64 << n)).collect();
    let mut out = Vec::new();
    for bits in masks {
        let cfg = GaConfig {
            population: 2,
            generations: 0,
            seeds: vec![bits, bits],
            ..Default::default()
        };
        out.push(genetic(&obj, &cfg).unwrap());
    }
    out
}

#[test]
fn star_frequencies_match_counting_oracle() {
    let stats = random_stats(10, 12);
    let pool = pool_from(&stats);
    assert_eq!(pool.len(), 1023);
    let k = 32;
    let report = star_analysis(&pool, k).unwrap();

    let mut ranked: Vec<(f64, u64)> = pool.iter().map(|r| (r.cqns.unwrap(), r.portfolio.bits())).collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let count = |slice: &[(f64, u64)], asset: usize| slice.iter().filter(|(_, m)| m >> asset & 1 == 1).count();
    for e in &report.all_stars {
        assert_eq!(e.frequency, count(&ranked[..k], e.asset) as f64 / k as f64);
    }
    for e in &report.dog_stars {
        assert_eq!(e.frequency, count(&ranked[ranked.len() - k..], e.asset) as f64 / k as f64);
    }
    let listed = report.all_stars.len();
    assert_eq!(listed, (0..10).filter(|&a| count(&ranked[..k], a) > 0).count());
    assert!(report.all_stars.windows(2).all(|w| w[0].frequency >= w[1].frequency));
}

#[test]
fn seed_counts() {
    let report = StarReport {
        universe: 8,
        all_stars: [5, 2, 7].iter().map(|&asset| StarEntry { asset, frequency: 0.8 }).collect(),
        dog_stars: vec![StarEntry { asset: 0, frequency: 0.9 }, StarEntry { asset: 1, frequency: 0.2 }],
        pool_size: 10,
    };
    let zero = SeedOptions { extras: 0, ..Default::default() };
    assert_eq!(heuristic_seed(&report, 3, &zero).unwrap(), vec![(1 << 5) | (1 << 2) | (1 << 7)]);
    // core {5, 2}; candidates 7, 1, 3, 4, 6 (0 is a dog)
    let seeds = heuristic_seed(&report, 3, &SeedOptions::default()).unwrap();
    assert_eq!(seeds.len(), 5);
    assert!(seeds.iter().all(|s| s.count_ones() == 3 && s & 1 == 0));
}

#[test]
fn star_seeds_help_short_genetic_runs() {
    let stats = random_stats(12, 2024);
    let obj = CqnsObjective::new(&stats, 1.0);
    let pool: Vec<SolveResult> = (0..20u64)
        .map(|t| {
            let cfg = GaConfig { population: 16, generations: 5, seed: derive_seed(t, "pool"), ..Default::default() };
            genetic(&obj, &cfg).unwrap()
        })
        .collect();
    let report = star_analysis(&pool, 5).unwrap();
    let seeds: Vec<u64> = (2..=6)
        .filter_map(|n| heuristic_seed(&report, n, &SeedOptions::default()).ok())
        .flatten()
        .collect();
    assert!(!seeds.is_empty());

    let wins = (0..20u64)
        .filter(|&t| {
            let base = GaConfig { population: 24, generations: 4, seed: derive_seed(t, "paired"), ..Default::default() };
            let seeded = GaConfig { seeds: seeds.clone(), ..base.clone() };
            genetic(&obj, &seeded).unwrap().energy <= genetic(&obj, &base).unwrap().energy
        })
        .count();
    assert!(wins >= 16, "{wins}/20");
}
