//! End-to-end experiment runner.
//!
//! A run ingests prices, computes and filters statistics, anchors the shift on
//! an unseeded genetic search, builds one QUBO per portfolio size, solves them
//! with every configured method and writes a comparison report. Output is
//! staged in a sibling directory and renamed into place only when every step
//! succeeded. All files except `timings.csv` are byte-identical for a given
//! config and seed, whatever the worker count.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marketdata::{
    apply_filters, build_weighted_market_context, composite_market_returns, compute_log_returns, compute_stats,
    load_prices, period_returns, repair_psd, FilterReport, MarketContext, ReturnStats,
};
use crate::mask::Portfolio;
use crate::qubo::{
    apply_shift, build_qubo, export_qubo, landscape_profile, shift_factor, tanh_scale, write_landscape_csv,
    QuboMatrix, SampleBudget, ShiftParams,
};
use crate::rng::derive_seed;
use crate::scoring::{score_all, ScoreSet};
use crate::solvers::{
    anneal_runs, brute_force, genetic, heuristic_seed, random_sample, star_analysis, BruteOptions,
    CqnsObjective, GaConfig, Method, QuboObjective, SaConfig, SeedOptions, SolveResult,
    StarReport,
};

mod config;
mod report;

pub use config::{
    BruteSection, DataConfig, ExperimentConfig, GaSection, LandscapeSection, Params, RandomConfig, SaSection,
    StarSection,
};
pub use report::{
    compare_by_size, emit_frontier_csv, normalize_pool, read_pool_csv, write_comparison_csv, write_pool_csv,
    BaselineStat, ScoredResult, SizeBaseline, SizeComparison,
};

/// Largest allowed gap between a stored CQNS and a fresh re-score.
pub const RESCORE_TOLERANCE: f64 = 1e-12;

/// Filtered, repaired statistics of the investable universe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Universe {
    pub stats: ReturnStats,
    pub context: MarketContext,
    pub filter: FilterReport,
    /// Whether the covariance needed eigenvalue clipping.
    pub repaired: bool,
}

/// Loads the three data files, aligns them on common dates and derives the
/// filtered universe.
pub fn load_universe(data: &DataConfig, params: &Params) -> Result<Universe> {
    let prices = load_prices(&data.prices)?;
    let indices = load_prices(&data.indices)?;
    let rates = load_prices(&data.risk_free)?;

    let (prices, rates) = prices.align(&rates)?;
    let (prices, indices) = prices.align(&indices)?;
    let (_, rates) = prices.align(&rates)?;

    let returns = compute_log_returns(&prices)?;
    let index_returns = compute_log_returns(&indices)?;
    let weights = data.index_weights.as_deref();
    let market = composite_market_returns(&index_returns, weights)?;
    let rf: Vec<f64> = rates.prices().column(0).iter().copied().collect();
    let context = build_weighted_market_context(&period_returns(&index_returns), weights, &rf, params.floor)?;

    let stats = compute_stats(prices.tickers(), &returns, &market, &context)?;
    let (filtered, filter) = apply_filters(&stats, &prices, params.required_days)?;
    let cov = repair_psd(&filtered.cov, params.clip_threshold)?;
    let repaired = cov != filtered.cov;
    Ok(Universe {
        stats: filtered.with_cov(cov),
        context,
        filter,
        repaired,
    })
}

/// Inclusive size range of a run over `universe` assets.
pub fn size_range(params: &Params, universe: usize) -> Result<(usize, usize)> {
    let n_max = if params.n_max == 0 { universe } else { params.n_max };
    if n_max > universe {
        return Err(Error::Config(format!(
            "n_max {n_max} exceeds the filtered universe of {universe} assets"
        )));
    }
    if params.n_min < 2 || params.n_min > n_max {
        return Err(Error::Config(format!("size range {}..={n_max} is empty", params.n_min)));
    }
    Ok((params.n_min, n_max))
}

pub fn ga_config(section: &GaSection, seeds: Vec<u64>, seed: u64) -> GaConfig {
    GaConfig {
        population: section.population,
        generations: section.generations,
        elitism_prob: section.elitism_prob,
        mutation_prob: section.mutation_prob,
        tournament: section.tournament,
        seeds,
        seed,
    }
}

pub fn sa_config(section: &SaSection, objective: &QuboObjective<'_>, seed: u64) -> SaConfig {
    let mut cfg = SaConfig::for_qubo(objective.dense(), section.steps, section.restarts, seed);
    if let Some(t) = section.initial_temp {
        cfg.initial_temp = t;
    }
    if let Some(r) = section.cooling_rate {
        cfg.cooling_rate = r;
    }
    cfg
}

/// Unseeded genetic search on exact CQNS; its best value anchors the shift.
pub fn anchor_search(cfg: &ExperimentConfig, stats: &ReturnStats) -> Result<SolveResult> {
    let objective = CqnsObjective::new(stats, cfg.experiment.alpha);
    genetic(&objective, &ga_config(&cfg.ga, Vec::new(), derive_seed(cfg.seed, "ga")))
}

/// Size-`n` QUBO after the shift, and after optional tanh scaling.
pub fn size_qubo(params: &Params, stats: &ReturnStats, g: f64, n: usize) -> Result<(QuboMatrix, QuboMatrix)> {
    let base = build_qubo(stats, n, params.alpha, params.mode)?;
    let shift = shift_factor(g, params.multiplier, n, stats.len())?;
    let shifted = apply_shift(&base, &shift)?;
    let solved = if params.scale {
        tanh_scale(&shifted, params.tanh_tau)?
    } else {
        shifted.clone()
    };
    Ok((shifted, solved))
}

/// Where the anchor score came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub g: f64,
    pub source: Method,
    #[serde(rename = "mask-hex")]
    pub mask_hex: String,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub universe: usize,
    pub tickers: Vec<String>,
    pub n_min: usize,
    pub n_max: usize,
    pub params: Params,
    pub random: RandomConfig,
    pub sa: SaSection,
    pub ga: GaSection,
    pub brute: BruteSection,
    pub stars: StarSection,
    pub covariance_repaired: bool,
    pub anchor: Anchor,
    pub shifts: Vec<ShiftParams>,
    pub seeds_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    #[serde(rename = "mask-hex")]
    pub mask_hex: String,
    pub size: usize,
    pub best_cqns: f64,
    pub evaluations: u64,
    /// Seconds; left out of the report file so that it stays reproducible.
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub method: Method,
    #[serde(rename = "mask-hex")]
    pub mask_hex: String,
    pub std_dev: f64,
    pub expected_return: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub metadata: RunMetadata,
    pub all_assets: ScoreSet,
    pub methods: Vec<MethodSummary>,
    pub by_size: Vec<SizeComparison>,
    pub frontier: Vec<FrontierPoint>,
    pub stars: Option<StarReport>,
}

impl ComparisonReport {
    pub fn method(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    std::io::Write::write_all(&mut w, b"\n").map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn staging_dir(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_else(|| "out".into());
    name.push(".partial");
    output.with_file_name(name)
}

/// Runs the whole pipeline and moves its files into `cfg.output`, replacing
/// any previous contents. Nothing is left behind on failure.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;

    let staging = staging_dir(&cfg.output);
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
    }
    fs::create_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;

    match pool.install(|| execute(cfg, &staging)) {
        Ok(report) => {
            if cfg.output.exists() {
                fs::remove_dir_all(&cfg.output).map_err(|e| Error::io(&cfg.output, e))?;
            }
            fs::rename(&staging, &cfg.output).map_err(|e| Error::io(&cfg.output, e))?;
            Ok(report)
        }
        Err(e) => {
            let _ = fs::remove_dir_all(&staging);
            Err(e)
        }
    }
}

struct Timings(Vec<(String, f64)>);

impl Timings {
    fn record(&mut self, stage: impl Into<String>, started: Instant) {
        self.0.push((stage.into(), started.elapsed().as_secs_f64()));
    }

    fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(create(path)?);
        w.write_record(["stage", "seconds"])?;
        for (stage, secs) in &self.0 {
            w.write_record([stage.as_str(), &secs.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn execute(cfg: &ExperimentConfig, dir: &Path) -> Result<ComparisonReport> {
    let total = Instant::now();
    let mut timings = Timings(Vec::new());
    let params = &cfg.experiment;
    let alpha = params.alpha;

    let t = Instant::now();
    let universe = load_universe(&cfg.data, params)?;
    let stats = &universe.stats;
    let ctx = &universe.context;
    let u = stats.len();
    let (n_min, n_max) = size_range(params, u)?;
    write_json(&dir.join("universe.json"), &universe)?;
    let all_assets = score_all(stats, ctx, &Portfolio::all(u)?, alpha)?;
    timings.record("ingest", t);

    let t = Instant::now();
    let ga = anchor_search(cfg, stats)?;
    timings.record("ga", t);
    let anchor = Anchor {
        g: ga.energy,
        source: Method::Ga,
        mask_hex: ga.portfolio.to_hex(),
        seed: derive_seed(cfg.seed, "ga"),
    };

    let qubo_dir = dir.join("qubo");
    let landscape_dir = dir.join("landscape");
    fs::create_dir(&qubo_dir).map_err(|e| Error::io(&qubo_dir, e))?;
    if cfg.landscape.enabled {
        fs::create_dir(&landscape_dir).map_err(|e| Error::io(&landscape_dir, e))?;
    }

    let mut shifts = Vec::new();
    let mut sa_runs: Vec<SolveResult> = Vec::new();
    let mut sa_best_per_size: Vec<SolveResult> = Vec::new();
    for n in n_min..=n_max {
        let t = Instant::now();
        let (shifted, solved) = size_qubo(params, stats, anchor.g, n)?;
        shifts.push(*shifted.shift().expect("shift applied"));
        export_qubo(&solved, qubo_dir.join(format!("qubo_n{n}.txt")))?;
        if cfg.landscape.enabled {
            let budget = (u > cfg.landscape.exhaustive_max).then(|| SampleBudget {
                samples: cfg.landscape.samples,
                seed: derive_seed(cfg.seed, &format!("landscape_n{n}")),
            });
            let points = landscape_profile(&shifted, stats, alpha, budget)?;
            write_landscape_csv(create(&landscape_dir.join(format!("landscape_n{n}.csv")))?, &points)?;
        }
        timings.record(format!("qubo_n{n}"), t);

        let t = Instant::now();
        let objective = QuboObjective::new(&solved).with_scoring(stats, alpha)?;
        let mut sa = sa_config(&cfg.sa, &objective, derive_seed(cfg.seed, &format!("sa_n{n}")));
        sa.target_size = Some(n);
        let mut runs = Vec::new();
        for run in anneal_runs(&objective, &sa)? {
            runs.push(run.best);
            runs.extend(run.at_target);
        }
        // prefer the target size; the unconstrained minimum can sit elsewhere
        let best = runs
            .iter()
            .filter(|r| r.portfolio.size() == n)
            .min_by(|a, b| a.score().total_cmp(&b.score()).then(a.portfolio.bits().cmp(&b.portfolio.bits())))
            .or_else(|| runs.iter().min_by(|a, b| a.score().total_cmp(&b.score())))
            .expect("restarts >= 1")
            .clone();
        sa_best_per_size.push(best);
        sa_runs.extend(runs);
        timings.record(format!("sa_n{n}"), t);
    }

    let cqns_objective = CqnsObjective::new(stats, alpha);
    let t = Instant::now();
    let (random_best, summary) = random_sample(&cqns_objective, cfg.random.samples, derive_seed(cfg.seed, "random"))?;
    timings.record("random", t);
    write_json(&dir.join("random_summary.json"), &summary)?;

    let brute = if cfg.brute.enabled && u <= cfg.brute.cap {
        let t = Instant::now();
        let opts = BruteOptions {
            cap: cfg.brute.cap,
            ..Default::default()
        };
        let r = brute_force(&cqns_objective, &opts)?;
        timings.record("brute", t);
        Some(r)
    } else {
        None
    };

    let t = Instant::now();
    let k = cfg.stars.k.unwrap_or((sa_runs.len() / 4).max(1));
    let stars = if sa_runs.len() >= 2 * k {
        Some(star_analysis(&sa_runs, k)?)
    } else {
        None
    };
    let mut seeds: Vec<u64> = vec![ga.portfolio.bits()];
    let mut by_score = sa_best_per_size.clone();
    by_score.sort_by(|a, b| a.score().total_cmp(&b.score()).then(a.portfolio.bits().cmp(&b.portfolio.bits())));
    seeds.extend(by_score.iter().map(|r| r.portfolio.bits()));
    if let Some(report) = &stars {
        let opts = SeedOptions {
            extras: cfg.stars.extras,
            max_masks: cfg.stars.max_masks,
            dog_cutoff: cfg.stars.dog_cutoff,
        };
        for n in n_min..=n_max {
            // sizes beyond the available all-stars simply contribute nothing
            if let Ok(masks) = heuristic_seed(report, n, &opts) {
                seeds.extend(masks);
            }
        }
    }
    let mut seen = std::collections::HashSet::new();
    seeds.retain(|s| seen.insert(*s));
    seeds.truncate(cfg.ga.population);
    let seeds_used = seeds.len();
    let seeded = genetic(&cqns_objective, &ga_config(&cfg.ga, seeds, derive_seed(cfg.seed, "ga_seeded")))?;
    timings.record("ga_seeded", t);
    if let Some(report) = &stars {
        write_json(&dir.join("stars.json"), report)?;
    }

    // per-size random bests give the baseline its own frontier points
    let random_per_size: Vec<SolveResult> = summary
        .per_size
        .iter()
        .filter(|s| s.best_mask != 0)
        .map(|s| SolveResult::new(&cqns_objective, s.best_mask, s.best, Method::Random))
        .collect::<Result<_>>()?;

    let mut results: Vec<&SolveResult> = Vec::new();
    results.extend(brute.iter());
    results.push(&random_best);
    results.extend(random_per_size.iter());
    results.extend(sa_runs.iter());
    results.push(&ga);
    results.push(&seeded);

    let mut pool = Vec::with_capacity(results.len());
    for r in &results {
        let scored = ScoredResult::from_result(r, stats, ctx, alpha)?;
        if let Some(stored) = r.cqns {
            if (stored - scored.cqns()).abs() > RESCORE_TOLERANCE {
                return Err(Error::MalformedData(format!(
                    "{} result {} stored CQNS {stored:e} but re-scores to {:e}",
                    r.method,
                    r.portfolio.to_hex(),
                    scored.cqns()
                )));
            }
        }
        pool.push(scored);
    }
    normalize_pool(&mut pool);

    let baseline = SizeBaseline::from_summary(&summary);
    let by_size = compare_by_size(&pool, &baseline);

    let mut methods = Vec::new();
    let sa_evaluations = sa_runs.iter().map(|r| r.evaluations).sum();
    let sa_time = sa_runs.iter().map(|r| r.wall_time).sum();
    let sa_overall = sa_best_per_size
        .iter()
        .min_by(|a, b| a.score().total_cmp(&b.score()).then(a.portfolio.bits().cmp(&b.portfolio.bits())))
        .expect("at least one size");
    let mut summarize = |r: &SolveResult, evaluations: u64, wall_time: f64| {
        methods.push(MethodSummary {
            method: r.method,
            mask_hex: r.portfolio.to_hex(),
            size: r.portfolio.size(),
            best_cqns: r.score(),
            evaluations,
            wall_time,
        })
    };
    if let Some(b) = &brute {
        summarize(b, b.evaluations, b.wall_time);
    }
    summarize(&random_best, random_best.evaluations, random_best.wall_time);
    summarize(sa_overall, sa_evaluations, sa_time);
    summarize(&ga, ga.evaluations, ga.wall_time);
    summarize(&seeded, seeded.evaluations, seeded.wall_time);

    let frontier = pool
        .iter()
        .map(|r| FrontierPoint {
            method: r.method,
            mask_hex: r.scores.mask_hex.clone(),
            std_dev: r.scores.std_dev,
            expected_return: r.scores.expected_return,
        })
        .collect();

    let report = ComparisonReport {
        metadata: RunMetadata {
            seed: cfg.seed,
            universe: u,
            tickers: stats.tickers.clone(),
            n_min,
            n_max,
            params: params.clone(),
            random: cfg.random.clone(),
            sa: cfg.sa.clone(),
            ga: cfg.ga.clone(),
            brute: cfg.brute.clone(),
            stars: cfg.stars.clone(),
            covariance_repaired: universe.repaired,
            anchor,
            shifts,
            seeds_used,
        },
        all_assets,
        methods,
        by_size,
        frontier,
        stars,
    };

    write_pool_csv(create(&dir.join("pool.csv"))?, &pool, false)?;
    emit_frontier_csv(create(&dir.join("frontier.csv"))?, &pool)?;
    write_comparison_csv(create(&dir.join("by_size.csv"))?, &report.by_size)?;
    write_json(&dir.join("report.json"), &report)?;

    for m in &report.methods {
        timings.0.push((format!("method_{}", m.method), m.wall_time));
    }
    timings.record("total", total);
    timings.write(&dir.join("timings.csv"))?;
    Ok(report)
}

/// Reads a finished run's report.
pub fn read_report(path: impl AsRef<Path>) -> Result<ComparisonReport> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// The summary a run keeps of its random baseline.
pub fn read_random_summary(path: impl AsRef<Path>) -> Result<SizeBaseline> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let per_size = value
        .get("per_size")
        .and_then(|v| v.as_array())
        .ok_or_else(|| Error::MalformedData(format!("{} has no per_size array", path.display())))?;
    let mut baseline = SizeBaseline::default();
    for (size, s) in per_size.iter().enumerate() {
        let field = |name: &str| s.get(name).and_then(|v| v.as_f64());
        if let (Some(count), Some(mean), Some(best)) = (field("count"), field("mean"), field("best")) {
            if count > 0.0 {
                baseline.per_size.insert(
                    size,
                    BaselineStat {
                        count: count as u64,
                        mean,
                        best,
                    },
                );
            }
        }
    }
    Ok(baseline)
}
