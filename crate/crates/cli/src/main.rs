//! Command-line front end for the portfolio QUBO toolkit.
//!
//! Every subcommand reads market data either from `--config` or from explicit
//! `--prices/--indices/--risk-free` paths; the remaining flags override the
//! matching config fields. Failures print one JSON line on stderr,
//! `{"error": <kind>, "message": <text>}`, and exit nonzero.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qubo_portfolio::harness::{
    self, anchor_search, compare_by_size, ga_config, load_universe, normalize_pool, read_pool_csv,
    run_experiment, sa_config, size_qubo, write_comparison_csv, write_pool_csv, DataConfig,
    ExperimentConfig, ScoredResult, SizeBaseline,
};
use qubo_portfolio::qubo::{
    build_qubo, export_qubo, import_qubo, landscape_profile, write_landscape_csv, BuildMode, QuboMatrix,
    SampleBudget,
};
use qubo_portfolio::rng::derive_seed;
use qubo_portfolio::scoring::{score_all, write_scores_csv};
use qubo_portfolio::solvers::{
    anneal_runs, brute_force, genetic, random_sample, BruteOptions, CqnsObjective, Method, Objective,
    QuboObjective, SolveResult,
};
use qubo_portfolio::{Error, Portfolio, Result};

#[derive(Parser)]
#[command(name = "qubo-portfolio", version, about = "Equal-weight portfolio selection via per-size QUBOs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct DataArgs {
    /// Experiment config (TOML); other flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    prices: Option<PathBuf>,
    #[arg(long)]
    indices: Option<PathBuf>,
    #[arg(long)]
    risk_free: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    multiplier: Option<f64>,
    #[arg(long)]
    floor: Option<f64>,
    #[arg(long)]
    clip_threshold: Option<f64>,
    #[arg(long)]
    required_days: Option<usize>,
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Skip tanh scaling.
    #[arg(long)]
    no_scale: bool,
    #[arg(long)]
    tau: Option<f64>,
    /// Worker threads; 0 uses one per core.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    ExactAlpha0,
    Paper,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Brute,
    Random,
    Sa,
    Ga,
}

#[derive(Subcommand)]
enum Command {
    /// Compute, filter and repair the return statistics.
    Ingest {
        #[command(flatten)]
        data: DataArgs,
        /// Write the universe JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score portfolios given as hex masks (the whole universe by default).
    Score {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long = "mask")]
        masks: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the QUBO for one target size.
    BuildQubo {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        size: usize,
        /// Anchor score for the shift; found by a genetic search when absent.
        #[arg(long)]
        g: Option<f64>,
        /// Leave the matrix unshifted (and unscaled).
        #[arg(long)]
        no_shift: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Energy/CQNS profile of one size's shifted QUBO.
    Landscape {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        size: usize,
        #[arg(long)]
        g: Option<f64>,
        /// Sample this many masks instead of enumerating.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one solver and write its scored results.
    Solve {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Minimize this QUBO file instead of exact CQNS.
        #[arg(long)]
        qubo: Option<PathBuf>,
        /// Build and minimize the QUBO of this size.
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        restarts: Option<u64>,
        #[arg(long)]
        population: Option<usize>,
        #[arg(long)]
        generations: Option<usize>,
        /// Seed masks (hex) for the genetic search.
        #[arg(long = "seed-mask")]
        seed_masks: Vec<String>,
        /// Brute-force checkpoint file; resumed from when it exists.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Enumerate beyond the brute-force cap.
        #[arg(long)]
        override_cap: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the QUBO of every size in the configured range.
    ExportQubo {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full experiment.
    Run {
        #[command(flatten)]
        data: DataArgs,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-size comparison of a result pool against a baseline pool.
    Compare {
        /// Pool CSV to compare.
        #[arg(long)]
        pool: PathBuf,
        /// Baseline pool CSV; the pool's own `random` rows when absent.
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Universe size the masks refer to.
        #[arg(long)]
        universe: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn config(args: &DataArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => match (&args.prices, &args.indices, &args.risk_free) {
            (Some(p), Some(i), Some(r)) => ExperimentConfig::new(DataConfig {
                prices: p.clone(),
                indices: i.clone(),
                risk_free: r.clone(),
                index_weights: None,
            }),
            _ => {
                return Err(Error::Config(
                    "give --config or all of --prices, --indices and --risk-free".into(),
                ))
            }
        },
    };
    if let Some(p) = &args.prices {
        cfg.data.prices = p.clone();
    }
    if let Some(p) = &args.indices {
        cfg.data.indices = p.clone();
    }
    if let Some(p) = &args.risk_free {
        cfg.data.risk_free = p.clone();
    }
    let e = &mut cfg.experiment;
    macro_rules! set {
        ($($field:ident),*) => {$(if let Some(v) = args.$field { e.$field = v; })*};
    }
    set!(alpha, multiplier, floor, clip_threshold, required_days, n_min, n_max);
    if let Some(m) = args.mode {
        e.mode = match m {
            ModeArg::ExactAlpha0 => BuildMode::ExactAlpha0,
            ModeArg::Paper => BuildMode::Paper,
        };
    }
    if args.no_scale {
        e.scale = false;
    }
    if args.tau.is_some() {
        e.tanh_tau = args.tau;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if cfg.workers > 0 {
        // only fails when the global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build_global();
    }
    Ok(cfg)
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_error(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_error(path: &Path, e: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn anchor(cfg: &ExperimentConfig, stats: &qubo_portfolio::marketdata::ReturnStats, g: Option<f64>) -> Result<f64> {
    match g {
        Some(g) => Ok(g),
        None => Ok(anchor_search(cfg, stats)?.energy),
    }
}

fn print_json(value: &serde_json::Value) {
    println!("{value}");
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { data, out } => {
            let cfg = config(&data)?;
            let universe = load_universe(&cfg.data, &cfg.experiment)?;
            let mut w = output(&out)?;
            serde_json::to_writer_pretty(&mut w, &universe)?;
            writeln!(w).map_err(|e| io_error(Path::new("<stdout>"), e))?;
            w.flush().map_err(|e| io_error(Path::new("<stdout>"), e))?;
            if out.is_some() {
                print_json(&serde_json::json!({
                    "kept": universe.filter.kept.len(),
                    "removed": universe.filter.removed.len(),
                    "repaired": universe.repaired,
                }));
            }
        }
        Command::Score { data, masks, out } => {
            let cfg = config(&data)?;
            let u = load_universe(&cfg.data, &cfg.experiment)?;
            let n = u.stats.len();
            let portfolios = if masks.is_empty() {
                vec![Portfolio::all(n)?]
            } else {
                masks.iter().map(|m| Portfolio::from_hex(m, n)).collect::<Result<_>>()?
            };
            let scores = portfolios
                .iter()
                .map(|p| score_all(&u.stats, &u.context, p, cfg.experiment.alpha))
                .collect::<Result<Vec<_>>>()?;
            write_scores_csv(output(&out)?, &scores)?;
        }
        Command::BuildQubo {
            data,
            size,
            g,
            no_shift,
            out,
        } => {
            let cfg = config(&data)?;
            let u = load_universe(&cfg.data, &cfg.experiment)?;
            let p = &cfg.experiment;
            let q = if no_shift {
                build_qubo(&u.stats, size, p.alpha, p.mode)?
            } else {
                size_qubo(p, &u.stats, anchor(&cfg, &u.stats, g)?, size)?.1
            };
            write_matrix(&q, &out)?;
        }
        Command::Landscape {
            data,
            size,
            g,
            samples,
            out,
        } => {
            let cfg = config(&data)?;
            let u = load_universe(&cfg.data, &cfg.experiment)?;
            let (shifted, _) = size_qubo(&cfg.experiment, &u.stats, anchor(&cfg, &u.stats, g)?, size)?;
            let budget = samples.map(|samples| SampleBudget {
                samples,
                seed: derive_seed(cfg.seed, &format!("landscape_n{size}")),
            });
            let points = landscape_profile(&shifted, &u.stats, cfg.experiment.alpha, budget)?;
            write_landscape_csv(output(&out)?, &points)?;
        }
        Command::Solve {
            data,
            method,
            qubo,
            size,
            samples,
            steps,
            restarts,
            population,
            generations,
            seed_masks,
            checkpoint,
            override_cap,
            out,
        } => {
            let mut cfg = config(&data)?;
            if let Some(s) = samples {
                cfg.random.samples = s;
            }
            if let Some(s) = steps {
                cfg.sa.steps = s;
            }
            if let Some(r) = restarts {
                cfg.sa.restarts = r;
            }
            if let Some(p) = population {
                cfg.ga.population = p;
            }
            if let Some(g) = generations {
                cfg.ga.generations = g;
            }
            let u = load_universe(&cfg.data, &cfg.experiment)?;
            let alpha = cfg.experiment.alpha;
            let matrix: Option<QuboMatrix> = match (&qubo, size) {
                (Some(path), _) => Some(import_qubo(path)?),
                (None, Some(n)) => Some(size_qubo(&cfg.experiment, &u.stats, anchor(&cfg, &u.stats, None)?, n)?.1),
                (None, None) => None,
            };
            let cqns_objective = CqnsObjective::new(&u.stats, alpha);
            let qubo_objective = match &matrix {
                Some(q) => Some(QuboObjective::new(q).with_scoring(&u.stats, alpha)?),
                None => None,
            };
            let objective: &dyn Objective = match &qubo_objective {
                Some(q) => q,
                None => &cqns_objective,
            };
            let seeds = seed_masks
                .iter()
                .map(|m| Portfolio::from_hex(m, u.stats.len()).map(|p| p.bits()))
                .collect::<Result<Vec<_>>>()?;

            let results: Vec<SolveResult> = match method {
                MethodArg::Brute => {
                    let opts = BruteOptions {
                        cap: cfg.brute.cap,
                        override_cap,
                        checkpoint,
                        ..Default::default()
                    };
                    vec![brute_force(objective, &opts)?]
                }
                MethodArg::Random => {
                    vec![random_sample(objective, cfg.random.samples, derive_seed(cfg.seed, "random"))?.0]
                }
                MethodArg::Ga => {
                    let label = if seeds.is_empty() { "ga" } else { "ga_seeded" };
                    vec![genetic(objective, &ga_config(&cfg.ga, seeds, derive_seed(cfg.seed, label)))?]
                }
                MethodArg::Sa => {
                    let q = qubo_objective
                        .as_ref()
                        .ok_or_else(|| Error::Config("sa needs --qubo or --size".into()))?;
                    let mut sa = sa_config(&cfg.sa, q, derive_seed(cfg.seed, "sa"));
                    sa.target_size = matrix.as_ref().map(|m| m.target_size());
                    anneal_runs(q, &sa)?
                        .into_iter()
                        .flat_map(|r| std::iter::once(r.best).chain(r.at_target))
                        .collect()
                }
            };
            let mut pool = results
                .iter()
                .map(|r| ScoredResult::from_result(r, &u.stats, &u.context, alpha))
                .collect::<Result<Vec<_>>>()?;
            normalize_pool(&mut pool);
            write_pool_csv(output(&out)?, &pool, true)?;
            if out.is_some() {
                let best = results
                    .iter()
                    .min_by(|a, b| a.score().total_cmp(&b.score()).then(a.portfolio.bits().cmp(&b.portfolio.bits())))
                    .expect("solvers return at least one result");
                print_json(&serde_json::json!({
                    "method": best.method.as_str(),
                    "mask-hex": best.portfolio.to_hex(),
                    "size": best.portfolio.size(),
                    "energy": best.energy,
                    "cqns": best.cqns,
                    "evaluations": best.evaluations,
                    "wall_time": best.wall_time,
                }));
            }
        }
        Command::ExportQubo { data, out } => {
            let cfg = config(&data)?;
            let u = load_universe(&cfg.data, &cfg.experiment)?;
            let (n_min, n_max) = harness::size_range(&cfg.experiment, u.stats.len())?;
            let g = anchor(&cfg, &u.stats, None)?;
            fs::create_dir_all(&out).map_err(|e| io_error(&out, e))?;
            for n in n_min..=n_max {
                let (_, q) = size_qubo(&cfg.experiment, &u.stats, g, n)?;
                export_qubo(&q, out.join(format!("qubo_n{n}.txt")))?;
            }
            print_json(&serde_json::json!({ "sizes": n_max - n_min + 1, "g": g }));
        }
        Command::Run { data, out } => {
            let mut cfg = config(&data)?;
            if let Some(o) = out {
                cfg.output = o;
            }
            let report = run_experiment(&cfg)?;
            let methods: Vec<_> = report
                .methods
                .iter()
                .map(|m| {
                    serde_json::json!({
                        "method": m.method.as_str(),
                        "mask-hex": m.mask_hex,
                        "size": m.size,
                        "cqns": m.best_cqns,
                    })
                })
                .collect();
            print_json(&serde_json::json!({
                "output": cfg.output,
                "universe": report.metadata.universe,
                "methods": methods,
            }));
        }
        Command::Compare {
            pool,
            baseline,
            universe,
            out,
        } => {
            let read = |path: &Path| -> Result<Vec<ScoredResult>> {
                read_pool_csv(File::open(path).map_err(|e| io_error(path, e))?, universe)
            };
            let results = read(&pool)?;
            let base = match &baseline {
                Some(path) => {
                    let b = read(path)?;
                    let method = b.first().map_or(Method::Random, |r| r.method);
                    SizeBaseline::from_pool(&b, method)
                }
                None => SizeBaseline::from_pool(&results, Method::Random),
            };
            write_comparison_csv(output(&out)?, &compare_by_size(&results, &base))?;
        }
    }
    Ok(())
}

fn write_matrix(q: &QuboMatrix, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => export_qubo(q, path),
        None => {
            let mut w = io::stdout().lock();
            qubo_portfolio::qubo::write_qubo(q, &mut w).map_err(|e| io_error(Path::new("<stdout>"), e))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": "UsageError", "message": e.to_string().trim_end() })
            );
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
