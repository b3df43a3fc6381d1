//! Scored result pools, per-size comparison against a baseline, and the CSV
//! files they are written to.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marketdata::{MarketContext, ReturnStats};
use crate::mask::Portfolio;
use crate::scoring::{score_all, ScoreSet};
use crate::solvers::{cmp_candidates, Method, SampleSummary, SolveResult};

/// A solver result with every score of its portfolio.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredResult {
    pub method: Method,
    pub portfolio: Portfolio,
    pub scores: ScoreSet,
    /// Seconds; `None` when the run did not time it.
    pub wall_time: Option<f64>,
}

impl ScoredResult {
    pub fn from_result(r: &SolveResult, stats: &ReturnStats, ctx: &MarketContext, alpha: f64) -> Result<Self> {
        Ok(ScoredResult {
            method: r.method,
            portfolio: r.portfolio,
            scores: score_all(stats, ctx, &r.portfolio, alpha)?,
            wall_time: Some(r.wall_time),
        })
    }

    pub fn cqns(&self) -> f64 {
        self.scores.cqns
    }

    fn key(&self) -> (Method, f64, u64) {
        (self.method, self.scores.cqns, self.portfolio.bits())
    }
}

/// Sorts by method, then CQNS, then mask, and keeps the first of each
/// `(method, mask)` pair.
pub fn normalize_pool(pool: &mut Vec<ScoredResult>) {
    pool.sort_by(|a, b| {
        let (ma, va, ba) = a.key();
        let (mb, vb, bb) = b.key();
        ma.cmp(&mb).then(cmp_candidates((va, ba), (vb, bb)))
    });
    pool.dedup_by_key(|r| (r.method, r.portfolio.bits()));
}

const POOL_COLUMNS: [&str; 11] = [
    "method",
    "mask-hex",
    "size",
    "expected_return",
    "variance",
    "std_dev",
    "sharpe",
    "cqr",
    "cqns",
    "momentum",
    "alpha",
];

/// Score-set columns led by `method`; `wall_time` is appended when
/// `with_time` is set.
pub fn write_pool_csv<W: Write>(writer: W, pool: &[ScoredResult], with_time: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = POOL_COLUMNS.to_vec();
    if with_time {
        header.push("wall_time");
    }
    w.write_record(&header)?;
    for r in pool {
        let s = &r.scores;
        let mut row = vec![
            r.method.to_string(),
            s.mask_hex.clone(),
            s.size.to_string(),
            s.expected_return.to_string(),
            s.variance.to_string(),
            s.std_dev.to_string(),
            s.sharpe.to_string(),
            s.cqr.to_string(),
            s.cqns.to_string(),
            s.momentum.to_string(),
            s.alpha.to_string(),
        ];
        if with_time {
            row.push(r.wall_time.map(|t| t.to_string()).unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[derive(Deserialize)]
struct PoolRow {
    method: String,
    #[serde(rename = "mask-hex")]
    mask_hex: String,
    size: usize,
    expected_return: f64,
    variance: f64,
    std_dev: f64,
    sharpe: f64,
    cqr: f64,
    cqns: f64,
    momentum: f64,
    alpha: f64,
    #[serde(default)]
    wall_time: Option<f64>,
}

impl PoolRow {
    fn scores(&self) -> ScoreSet {
        ScoreSet {
            mask_hex: self.mask_hex.clone(),
            size: self.size,
            expected_return: self.expected_return,
            variance: self.variance,
            std_dev: self.std_dev,
            sharpe: self.sharpe,
            cqr: self.cqr,
            cqns: self.cqns,
            momentum: self.momentum,
            alpha: self.alpha,
        }
    }
}

/// Reads a pool CSV. Masks are interpreted in a universe of `universe`
/// assets.
pub fn read_pool_csv<R: Read>(reader: R, universe: usize) -> Result<Vec<ScoredResult>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row: PoolRow = record.deserialize(Some(&headers))?;
        let portfolio = Portfolio::from_hex(&row.mask_hex, universe)?;
        if portfolio.size() != row.size {
            return Err(Error::MalformedData(format!("mask {} does not have size {}", row.mask_hex, row.size)));
        }
        out.push(ScoredResult {
            method: row.method.parse()?,
            portfolio,
            scores: row.scores(),
            wall_time: row.wall_time,
        });
    }
    Ok(out)
}

/// Frontier CSV: one row per pooled portfolio, in pool order.
pub fn emit_frontier_csv<W: Write>(writer: W, pool: &[ScoredResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "method",
        "mask-hex",
        "size",
        "std_dev",
        "expected_return",
        "sharpe",
        "cqr",
        "cqns",
        "momentum",
    ])?;
    for r in pool {
        let s = &r.scores;
        w.write_record([
            r.method.to_string(),
            s.mask_hex.clone(),
            s.size.to_string(),
            s.std_dev.to_string(),
            s.expected_return.to_string(),
            s.sharpe.to_string(),
            s.cqr.to_string(),
            s.cqns.to_string(),
            s.momentum.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineStat {
    pub count: u64,
    pub mean: f64,
    pub best: f64,
}

/// Baseline CQNS statistics per portfolio size.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SizeBaseline {
    pub per_size: BTreeMap<usize, BaselineStat>,
}

impl SizeBaseline {
    /// Sizes the sample actually hit; the objective must have been CQNS.
    pub fn from_summary(summary: &SampleSummary) -> Self {
        let per_size = summary
            .per_size
            .iter()
            .enumerate()
            .filter(|(_, s)| s.count > 0 && s.mean.is_finite())
            .map(|(size, s)| {
                (
                    size,
                    BaselineStat {
                        count: s.count,
                        mean: s.mean,
                        best: s.best,
                    },
                )
            })
            .collect();
        SizeBaseline { per_size }
    }

    /// Per-size statistics of the pooled results of one method.
    pub fn from_pool(pool: &[ScoredResult], method: Method) -> Self {
        let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for r in pool.iter().filter(|r| r.method == method) {
            groups.entry(r.scores.size).or_default().push(r.cqns());
        }
        let per_size = groups
            .into_iter()
            .map(|(size, v)| {
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                let best = v.iter().copied().fold(f64::INFINITY, f64::min);
                (
                    size,
                    BaselineStat {
                        count: v.len() as u64,
                        mean,
                        best,
                    },
                )
            })
            .collect();
        SizeBaseline { per_size }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeComparison {
    pub size: usize,
    pub method: Method,
    pub best_cqns: f64,
    #[serde(rename = "mask-hex")]
    pub mask_hex: String,
    /// Baseline fields are `None` when the baseline never reached this size.
    pub baseline_mean: Option<f64>,
    pub baseline_best: Option<f64>,
    /// `baseline_best − best_cqns`; positive when the method found a lower
    /// CQNS than the baseline.
    pub advantage: Option<f64>,
    pub beats_baseline_mean: bool,
}

/// Best pooled CQNS of each `(size, method)` against the baseline at that
/// size, ordered by size and then method.
pub fn compare_by_size(results: &[ScoredResult], baseline: &SizeBaseline) -> Vec<SizeComparison> {
    results
        .iter()
        .into_group_map_by(|r| (r.scores.size, r.method))
        .into_iter()
        .sorted_by_key(|(k, _)| *k)
        .map(|((size, method), group)| {
            let best = group
                .into_iter()
                .min_by(|a, b| cmp_candidates((a.cqns(), a.portfolio.bits()), (b.cqns(), b.portfolio.bits())))
                .expect("groups are nonempty");
            let base = baseline.per_size.get(&size);
            SizeComparison {
                size,
                method,
                best_cqns: best.cqns(),
                mask_hex: best.scores.mask_hex.clone(),
                baseline_mean: base.map(|b| b.mean),
                baseline_best: base.map(|b| b.best),
                advantage: base.map(|b| b.best - best.cqns()),
                beats_baseline_mean: base.is_some_and(|b| best.cqns() < b.mean),
            }
        })
        .collect()
}

/// Empty cells stand for absent baseline values.
pub fn write_comparison_csv<W: Write>(writer: W, rows: &[SizeComparison]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "size",
        "method",
        "best_cqns",
        "mask-hex",
        "baseline_mean",
        "baseline_best",
        "advantage",
        "beats_baseline_mean",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.size.to_string(),
            r.method.to_string(),
            r.best_cqns.to_string(),
            r.mask_hex.clone(),
            opt(r.baseline_mean),
            opt(r.baseline_best),
            opt(r.advantage),
            r.beats_baseline_mean.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scored(method: Method, bits: u64, cqns: f64) -> ScoredResult {
        let p = Portfolio::new(bits, 8).unwrap();
        ScoredResult {
            method,
            portfolio: p,
            scores: ScoreSet {
                mask_hex: p.to_hex(),
                size: p.size(),
                expected_return: 0.001,
                variance: 1e-4,
                std_dev: 1e-2,
                sharpe: 0.1,
                cqr: 0.2,
                cqns,
                momentum: 0.002,
                alpha: 1.0,
            },
            wall_time: None,
        }
    }

    #[test]
    fn pool_round_trips() {
        let mut pool = vec![
            scored(Method::Sa, 0b11, 2.0),
            scored(Method::Ga, 0b101, 1.5),
            scored(Method::Sa, 0b11, 2.0),
        ];
        normalize_pool(&mut pool);
        assert_eq!(pool.len(), 2);
        assert_eq!(pool[0].method, Method::Sa);
        for with_time in [false, true] {
            let mut buf = Vec::new();
            write_pool_csv(&mut buf, &pool, with_time).unwrap();
            let back = read_pool_csv(buf.as_slice(), 8).unwrap();
            assert_eq!(back, pool);
        }
    }

    #[test]
    fn absent_baseline_size_is_marked() {
        let pool = vec![
            scored(Method::Sa, 0b11, 2.0),
            scored(Method::Sa, 0b110, 1.0),
            scored(Method::Ga, 0b111, 0.5),
            scored(Method::Random, 0b1001, 3.0),
            scored(Method::Random, 0b1100, 5.0),
        ];
        let baseline = SizeBaseline::from_pool(&pool, Method::Random);
        let rows = compare_by_size(&pool, &baseline);
        assert_eq!(rows.len(), 3);
        let sa = &rows[1];
        assert_eq!((sa.size, sa.method), (2, Method::Sa));
        assert_eq!(sa.best_cqns, 1.0);
        assert_eq!(sa.advantage, Some(2.0));
        assert!(sa.beats_baseline_mean);
        let ga = &rows[2];
        assert_eq!(ga.size, 3);
        assert_eq!(ga.baseline_mean, None);
        assert!(!ga.beats_baseline_mean);
    }
}
