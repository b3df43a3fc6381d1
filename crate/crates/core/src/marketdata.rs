//! Price ingestion, return statistics, universe filters and covariance repair.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trading days in one year of daily history.
pub const DEFAULT_REQUIRED_DAYS: usize = 253;
pub const DEFAULT_CLIP_THRESHOLD: f64 = 1e-6;
pub const DEFAULT_FLOOR: f64 = 0.0;
pub const BETA_MIN: f64 = 0.0;
pub const BETA_MAX: f64 = 10.0;

/// Date-aligned adjusted close prices, one column per ticker.
#[derive(Clone, Debug, PartialEq)]
pub struct PriceSeries {
    tickers: Vec<String>,
    dates: Vec<NaiveDate>,
    prices: DMatrix<f64>,
}

impl PriceSeries {
    /// Rows of `prices` are dates, columns are tickers. Rows are reordered so
    /// dates ascend.
    pub fn new(tickers: Vec<String>, dates: Vec<NaiveDate>, prices: DMatrix<f64>) -> Result<Self> {
        if prices.ncols() != tickers.len() {
            return Err(Error::MalformedData(format!(
                "{} price columns for {} tickers",
                prices.ncols(),
                tickers.len()
            )));
        }
        if prices.nrows() != dates.len() {
            return Err(Error::MalformedData(format!(
                "{} price rows for {} dates",
                prices.nrows(),
                dates.len()
            )));
        }
        if dates.len() < 2 {
            return Err(Error::InsufficientHistory {
                rows: dates.len(),
                needed: 2,
            });
        }
        if let Some(bad) = prices.iter().find(|p| !p.is_finite()) {
            return Err(Error::MalformedData(format!("non-finite price {bad}")));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = tickers.iter().find(|t| !seen.insert(t.as_str())) {
            return Err(Error::MalformedData(format!("duplicate ticker {dup}")));
        }

        let mut order: Vec<usize> = (0..dates.len()).collect();
        order.sort_by_key(|&r| dates[r]);
        if let Some(w) = order.windows(2).find(|w| dates[w[0]] == dates[w[1]]) {
            return Err(Error::MalformedData(format!("duplicate date {}", dates[w[0]])));
        }
        let sorted_dates = order.iter().map(|&r| dates[r]).collect();
        let sorted = DMatrix::from_fn(prices.nrows(), prices.ncols(), |r, c| prices[(order[r], c)]);

        Ok(PriceSeries {
            tickers,
            dates: sorted_dates,
            prices: sorted,
        })
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn prices(&self) -> &DMatrix<f64> {
        &self.prices
    }

    pub fn rows(&self) -> usize {
        self.dates.len()
    }

    /// Restricts both series to the dates they share.
    pub fn align(&self, other: &PriceSeries) -> Result<(PriceSeries, PriceSeries)> {
        let theirs: HashSet<_> = other.dates.iter().collect();
        let keep_self: Vec<usize> = (0..self.rows()).filter(|&r| theirs.contains(&self.dates[r])).collect();
        let ours: HashSet<_> = self.dates.iter().collect();
        let keep_other: Vec<usize> = (0..other.rows()).filter(|&r| ours.contains(&other.dates[r])).collect();
        Ok((self.select_rows(&keep_self)?, other.select_rows(&keep_other)?))
    }

    fn select_rows(&self, rows: &[usize]) -> Result<PriceSeries> {
        let prices = DMatrix::from_fn(rows.len(), self.prices.ncols(), |r, c| self.prices[(rows[r], c)]);
        PriceSeries::new(
            self.tickers.clone(),
            rows.iter().map(|&r| self.dates[r]).collect(),
            prices,
        )
    }
}

/// Reads a price CSV: header `date,<T1>,<T2>,...`, ISO-8601 dates, decimal
/// prices, no empty cells.
pub fn load_prices(path: impl AsRef<Path>) -> Result<PriceSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_prices(file)
}

pub fn read_prices<R: std::io::Read>(reader: R) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 2 {
        return Err(Error::MalformedData("header needs a date column and at least one ticker".into()));
    }
    let tickers: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();

    let mut dates = Vec::new();
    let mut values = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let row = line + 2;
        if record.len() != header.len() {
            return Err(Error::MalformedData(format!(
                "row {row} has {} cells, expected {}",
                record.len(),
                header.len()
            )));
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| Error::MalformedData(format!("row {row}: bad date {:?}: {e}", &record[0])))?;
        dates.push(date);
        for (col, cell) in record.iter().enumerate().skip(1) {
            if cell.is_empty() {
                return Err(Error::MalformedData(format!("row {row}: missing price for {}", tickers[col - 1])));
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::MalformedData(format!("row {row}: non-numeric price {cell:?}")))?;
            values.push(v);
        }
    }
    let prices = DMatrix::from_row_slice(dates.len(), tickers.len(), &values);
    PriceSeries::new(tickers, dates, prices)
}

/// Source of the raw series a run consumes.
pub trait DataSource {
    fn prices(&self) -> Result<PriceSeries>;
    fn indices(&self) -> Result<PriceSeries>;
    /// Risk-free rate observations, in the same per-period units as returns.
    fn risk_free(&self) -> Result<Vec<f64>>;
}

/// Local CSV files in the price-CSV layout.
#[derive(Clone, Debug)]
pub struct CsvSource {
    pub prices: PathBuf,
    pub indices: PathBuf,
    pub risk_free: PathBuf,
}

impl DataSource for CsvSource {
    fn prices(&self) -> Result<PriceSeries> {
        load_prices(&self.prices)
    }

    fn indices(&self) -> Result<PriceSeries> {
        load_prices(&self.indices)
    }

    /// First data column of the risk-free file.
    fn risk_free(&self) -> Result<Vec<f64>> {
        let series = load_prices(&self.risk_free)?;
        Ok(series.prices().column(0).iter().copied().collect())
    }
}

/// Daily log returns `ln(p[t+1] / p[t])`, one row fewer than the input.
pub fn compute_log_returns(prices: &PriceSeries) -> Result<DMatrix<f64>> {
    let p = prices.prices();
    if let Some(bad) = p.iter().find(|&&v| v <= 0.0) {
        return Err(Error::Domain(format!("log return of non-positive price {bad}")));
    }
    Ok(DMatrix::from_fn(p.nrows() - 1, p.ncols(), |t, i| (p[(t + 1, i)] / p[(t, i)]).ln()))
}

/// Per-date weighted average of index return columns. `weights = None` is the
/// unweighted mean.
pub fn composite_market_returns(index_returns: &DMatrix<f64>, weights: Option<&[f64]>) -> Result<Vec<f64>> {
    let k = index_returns.ncols();
    if k == 0 {
        return Err(Error::MalformedData("no index columns".into()));
    }
    let w: Vec<f64> = match weights {
        Some(w) if w.len() != k => {
            return Err(Error::Dimension {
                expected: k,
                got: w.len(),
            })
        }
        Some(w) => {
            let total: f64 = w.iter().sum();
            if !(total > 0.0) || w.iter().any(|x| *x < 0.0 || !x.is_finite()) {
                return Err(Error::ParamOutOfRange("index weights must be non-negative with positive sum".into()));
            }
            w.iter().map(|x| x / total).collect()
        }
        None => vec![1.0 / k as f64; k],
    };
    Ok(index_returns
        .row_iter()
        .map(|row| row.iter().zip(&w).map(|(r, w)| r * w).sum())
        .collect())
}

/// Total log return of each index over the window.
pub fn period_returns(index_returns: &DMatrix<f64>) -> Vec<f64> {
    index_returns.column_iter().map(|c| c.sum()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarketContext {
    /// Per-index return after flooring.
    pub index_returns: Vec<f64>,
    pub floor: f64,
    pub risk_free_rate: f64,
    pub market_return: f64,
}

pub fn build_market_context(index_returns: &[f64], risk_free_series: &[f64], floor: f64) -> Result<MarketContext> {
    build_weighted_market_context(index_returns, None, risk_free_series, floor)
}

/// Floors each index return, then combines them with `weights` (unweighted
/// mean when `None`).
pub fn build_weighted_market_context(
    index_returns: &[f64],
    weights: Option<&[f64]>,
    risk_free_series: &[f64],
    floor: f64,
) -> Result<MarketContext> {
    if index_returns.is_empty() {
        return Err(Error::MalformedData("market context needs at least one index".into()));
    }
    if risk_free_series.is_empty() {
        return Err(Error::MalformedData("empty risk-free series".into()));
    }
    if !floor.is_finite() || index_returns.iter().chain(risk_free_series).any(|v| !v.is_finite()) {
        return Err(Error::MalformedData("non-finite market input".into()));
    }
    let floored: Vec<f64> = index_returns.iter().map(|r| r.max(floor)).collect();
    let combined = DMatrix::from_row_slice(1, floored.len(), &floored);
    let market_return = composite_market_returns(&combined, weights)?[0];
    let risk_free_rate = risk_free_series.iter().sum::<f64>() / risk_free_series.len() as f64;
    Ok(MarketContext {
        index_returns: floored,
        floor,
        risk_free_rate,
        market_return,
    })
}

/// Per-asset return statistics at the frequency of the input returns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnStats {
    pub tickers: Vec<String>,
    pub mu: Vec<f64>,
    pub cov: DMatrix<f64>,
    pub market_cov: Vec<f64>,
    pub beta: Vec<f64>,
    pub n_days: usize,
    pub risk_free_rate: f64,
}

impl ReturnStats {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Sub-universe of the given asset indices, in that order. Values are
    /// copied, never recomputed.
    pub fn select(&self, keep: &[usize]) -> ReturnStats {
        ReturnStats {
            tickers: keep.iter().map(|&i| self.tickers[i].clone()).collect(),
            mu: keep.iter().map(|&i| self.mu[i]).collect(),
            cov: DMatrix::from_fn(keep.len(), keep.len(), |r, c| self.cov[(keep[r], keep[c])]),
            market_cov: keep.iter().map(|&i| self.market_cov[i]).collect(),
            beta: keep.iter().map(|&i| self.beta[i]).collect(),
            n_days: self.n_days,
            risk_free_rate: self.risk_free_rate,
        }
    }

    pub fn with_cov(mut self, cov: DMatrix<f64>) -> Self {
        self.cov = cov;
        self
    }
}

/// Column means, sample covariance (divisor `n - 1`), covariance with the
/// market series, and β against it.
pub fn compute_stats(
    tickers: &[String],
    returns: &DMatrix<f64>,
    market_returns: &[f64],
    ctx: &MarketContext,
) -> Result<ReturnStats> {
    let (n, k) = returns.shape();
    if tickers.len() != k {
        return Err(Error::Dimension {
            expected: k,
            got: tickers.len(),
        });
    }
    if market_returns.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: market_returns.len(),
        });
    }
    if n < 2 {
        return Err(Error::InsufficientHistory { rows: n, needed: 2 });
    }
    let denom = (n - 1) as f64;

    let mu: Vec<f64> = returns.column_iter().map(|c| c.mean()).collect();
    let centered = DMatrix::from_fn(n, k, |t, i| returns[(t, i)] - mu[i]);

    let m_mean = market_returns.iter().sum::<f64>() / n as f64;
    let m_centered: Vec<f64> = market_returns.iter().map(|m| m - m_mean).collect();
    let m_var = m_centered.iter().map(|m| m * m).sum::<f64>() / denom;
    if !(m_var > 0.0) {
        return Err(Error::DegenerateMarket);
    }

    let mut cov = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let c = centered.column(i).dot(&centered.column(j)) / denom;
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }
    let market_cov: Vec<f64> = centered
        .column_iter()
        .map(|c| c.iter().zip(&m_centered).map(|(a, b)| a * b).sum::<f64>() / denom)
        .collect();
    let beta = market_cov.iter().map(|c| c / m_var).collect();

    Ok(ReturnStats {
        tickers: tickers.to_vec(),
        mu,
        cov,
        market_cov,
        beta,
        n_days: n,
        risk_free_rate: ctx.risk_free_rate,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalReason {
    BetaLow,
    BetaHigh,
    DiscontinuousHistory,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Removal {
    pub ticker: String,
    pub reason: RemovalReason,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub kept: Vec<String>,
    pub removed: Vec<Removal>,
}

/// Longest run of consecutive return observations with valid prices at both
/// ends.
pub fn contiguous_observations(prices: &PriceSeries, column: usize) -> usize {
    let p = prices.prices();
    let valid = |t: usize| p[(t, column)].is_finite() && p[(t, column)] > 0.0;
    let (mut best, mut run) = (0, 0);
    for t in 1..p.nrows() {
        if valid(t - 1) && valid(t) {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

/// Drops assets with short history or β outside `[0, 10]`; survivors keep the
/// statistics they already had.
pub fn apply_filters(
    stats: &ReturnStats,
    prices: &PriceSeries,
    required_days: usize,
) -> Result<(ReturnStats, FilterReport)> {
    if prices.tickers() != stats.tickers.as_slice() {
        return Err(Error::MalformedData("stats and prices cover different tickers".into()));
    }
    let mut report = FilterReport::default();
    let mut keep = Vec::new();
    for (i, ticker) in stats.tickers.iter().enumerate() {
        let reason = if contiguous_observations(prices, i) < required_days {
            Some(RemovalReason::DiscontinuousHistory)
        } else if stats.beta[i] < BETA_MIN {
            Some(RemovalReason::BetaLow)
        } else if stats.beta[i] > BETA_MAX {
            Some(RemovalReason::BetaHigh)
        } else {
            None
        };
        match reason {
            Some(reason) => report.removed.push(Removal {
                ticker: ticker.clone(),
                reason,
            }),
            None => {
                keep.push(i);
                report.kept.push(ticker.clone());
            }
        }
    }
    if keep.is_empty() {
        return Err(Error::EmptyUniverse);
    }
    Ok((stats.select(&keep), report))
}

/// Lower-triangular factor of a positive semi-definite matrix.
///
/// Pivots within `tol` of zero are accepted as exact zeros (the column below
/// must then vanish to the same tolerance); any pivot below `-tol` fails.
pub fn psd_cholesky(m: &DMatrix<f64>, tol: f64) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return None;
    }
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d < -tol {
            return None;
        }
        if d <= tol {
            for i in j + 1..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if s.abs() > tol.sqrt() * m[(i, i)].abs().max(tol).sqrt() {
                    return None;
                }
            }
            continue;
        }
        let root = d.sqrt();
        l[(j, j)] = root;
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / root;
        }
    }
    Some(l)
}

/// Rounding tolerance for pivots of `m`.
pub fn pivot_tolerance(m: &DMatrix<f64>) -> f64 {
    let scale = m.diagonal().iter().fold(0.0f64, |a, d| a.max(d.abs()));
    64.0 * f64::EPSILON * m.nrows().max(1) as f64 * scale.max(f64::MIN_POSITIVE)
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// Returns `cov` unchanged when it factors; otherwise zeroes eigenvalues with
/// `|λ| < clip_threshold` and reassembles a symmetric matrix.
pub fn repair_psd(cov: &DMatrix<f64>, clip_threshold: f64) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    if cov.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            got: cov.ncols(),
        });
    }
    if !(clip_threshold > 0.0) {
        return Err(Error::ParamOutOfRange("clip_threshold must be positive".into()));
    }
    if psd_cholesky(cov, pivot_tolerance(cov)).is_some() {
        return Ok(cov.clone());
    }

    let eig = SymmetricEigen::new(cov.clone());
    if let Some(&worst) = eig.eigenvalues.iter().find(|&&l| l <= -clip_threshold) {
        return Err(Error::NotRepairable {
            eigenvalue: worst,
            threshold: clip_threshold,
        });
    }
    let clipped = eig.eigenvalues.map(|l| if l.abs() < clip_threshold { 0.0 } else { l });
    let v = &eig.eigenvectors;
    let rebuilt = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    Ok(DMatrix::from_fn(n, n, |i, j| 0.5 * (rebuilt[(i, j)] + rebuilt[(j, i)])))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn series(cols: &[&[f64]]) -> PriceSeries {
        let rows = cols[0].len();
        let tickers = (0..cols.len()).map(|i| format!("T{i}")).collect();
        let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let dates = (0..rows).map(|r| start + chrono::Days::new(r as u64)).collect();
        PriceSeries::new(tickers, dates, DMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r])).unwrap()
    }

    #[test]
    fn parses_three_rows() {
        let csv = "date,AAA,BBB\n2020-01-03,1,2\n2020-01-01,3,4\n2020-01-02,5,6\n";
        let p = read_prices(csv.as_bytes()).unwrap();
        assert_eq!(p.rows(), 3);
        assert_eq!(p.tickers(), ["AAA", "BBB"]);
        assert!(p.dates().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(p.prices()[(0, 0)], 3.0);
    }

    #[test]
    fn rejects_bad_cells() {
        let empty = "date,A,B\n2020-01-01,1,\n2020-01-02,1,2\n";
        assert!(matches!(read_prices(empty.as_bytes()), Err(Error::MalformedData(_))));
        let text = "date,A\n2020-01-01,abc\n2020-01-02,1\n";
        assert!(matches!(read_prices(text.as_bytes()), Err(Error::MalformedData(_))));
        let short = "date,A\n2020-01-01,1\n";
        assert!(matches!(read_prices(short.as_bytes()), Err(Error::InsufficientHistory { .. })));
        let dup = "date,A\n2020-01-01,1\n2020-01-01,2\n";
        assert!(matches!(read_prices(dup.as_bytes()), Err(Error::MalformedData(_))));
    }

    #[test]
    fn log_returns_examples() {
        let r = compute_log_returns(&series(&[&[100.0, 110.0]])).unwrap();
        assert!(close(r[(0, 0)], 0.095310, 1e-6));
        let r = compute_log_returns(&series(&[&[50.0, 50.0, 50.0]])).unwrap();
        assert_eq!(r.as_slice(), &[0.0, 0.0]);
        let r = compute_log_returns(&series(&[&[100.0, 105.0, 99.75]])).unwrap();
        assert!(close(r[(0, 0)], 1.05f64.ln(), 1e-15));
        assert!(close(r[(1, 0)], 0.95f64.ln(), 1e-15));
        assert!(matches!(compute_log_returns(&series(&[&[1.0, 0.0]])), Err(Error::Domain(_))));
    }

    #[test]
    fn market_context_floors() {
        let ctx = build_market_context(&[0.10, -0.05], &[0.0], 0.0).unwrap();
        assert_eq!(ctx.index_returns, vec![0.10, 0.0]);
        assert!(close(ctx.market_return, 0.05, 1e-15));

        let ctx = build_market_context(&[0.08], &[0.02, 0.02], 0.0).unwrap();
        assert_eq!(ctx.market_return, 0.08);
        assert_eq!(ctx.risk_free_rate, 0.02);

        let ctx = build_market_context(&[0.12, 0.09, -0.04], &[0.01], 0.0).unwrap();
        assert_eq!(ctx.index_returns[2], 0.0);
        assert!(close(ctx.market_return, 0.07, 1e-15));
        assert!(ctx.market_return >= ctx.floor);

        assert!(matches!(build_market_context(&[], &[0.0], 0.0), Err(Error::MalformedData(_))));

        let weighted = build_weighted_market_context(&[0.1, 0.0], Some(&[3.0, 1.0]), &[0.0], 0.0).unwrap();
        assert!(close(weighted.market_return, 0.075, 1e-15));
    }

    fn ctx() -> MarketContext {
        build_market_context(&[0.05], &[0.0], 0.0).unwrap()
    }

    #[test]
    fn beta_of_scaled_market() {
        let market = [0.01, -0.02, 0.015, 0.003, -0.007];
        let returns = DMatrix::from_fn(5, 2, |t, i| market[t] * (i + 1) as f64);
        let tickers = vec!["A".into(), "B".into()];
        let s = compute_stats(&tickers, &returns, &market, &ctx()).unwrap();
        assert!(close(s.beta[0], 1.0, 1e-12));
        assert!(close(s.beta[1], 2.0, 1e-12));
        assert_eq!(s.cov, s.cov.transpose());

        let flat = [0.01; 5];
        assert!(matches!(
            compute_stats(&tickers, &returns, &flat, &ctx()),
            Err(Error::DegenerateMarket)
        ));
    }

    fn stats_with_betas(betas: &[f64]) -> ReturnStats {
        let k = betas.len();
        ReturnStats {
            tickers: (0..k).map(|i| format!("T{i}")).collect(),
            mu: vec![0.001; k],
            cov: DMatrix::identity(k, k),
            market_cov: betas.to_vec(),
            beta: betas.to_vec(),
            n_days: 253,
            risk_free_rate: 0.0,
        }
    }

    #[test]
    fn filters_by_beta_and_history() {
        let prices = series(&[&[1.0; 254], &[1.0; 254], &[1.0; 254]]);
        let stats = stats_with_betas(&[-0.5, 10.5, 1.0]);
        let (kept, report) = apply_filters(&stats, &prices, 253).unwrap();
        assert_eq!(report.kept, vec!["T2"]);
        assert_eq!(report.removed[0].reason, RemovalReason::BetaLow);
        assert_eq!(report.removed[1].reason, RemovalReason::BetaHigh);
        assert_eq!(kept.beta, vec![1.0]);
        assert_eq!(kept.cov[(0, 0)], 1.0);

        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["removed"][0]["reason"], "beta_low");

        let short = series(&[&[1.0; 200]]);
        let err = apply_filters(&stats_with_betas(&[1.0]), &short, 253).unwrap_err();
        assert!(matches!(err, Error::EmptyUniverse));
    }

    #[test]
    fn repair_examples() {
        let eye = DMatrix::<f64>::identity(4, 4);
        assert_eq!(repair_psd(&eye, 1e-6).unwrap(), eye);

        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(repair_psd(&bad, 1e-6), Err(Error::NotRepairable { .. })));
        assert!(repair_psd(&eye, 0.0).is_err());
    }

    #[test]
    fn semidefinite_cholesky_accepts_rank_deficient() {
        // rank one: v v^T
        let v = [1.0, 2.0, 3.0];
        let m = DMatrix::from_fn(3, 3, |i, j| v[i] * v[j]);
        assert!(psd_cholesky(&m, pivot_tolerance(&m)).is_some());
        let mut neg = m.clone();
        neg[(2, 2)] -= 1e-6;
        assert!(psd_cholesky(&neg, pivot_tolerance(&neg)).is_none());
    }
}
