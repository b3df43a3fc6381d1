//! Seeded single-factor market simulator for fixtures and benchmarks.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::marketdata::{
    build_market_context, compute_log_returns, compute_stats, period_returns, PriceSeries, ReturnStats,
};
use crate::rng::rng;

#[derive(Clone, Debug)]
pub struct SyntheticMarket {
    pub prices: PriceSeries,
    pub indices: PriceSeries,
    /// Daily risk-free rate, one value per date.
    pub risk_free: Vec<f64>,
    pub dates: Vec<NaiveDate>,
}

/// `days` consecutive weekdays starting 2023-01-02.
pub fn business_days(days: usize) -> Vec<NaiveDate> {
    let mut d = NaiveDate::from_ymd_opt(2023, 1, 2).expect("valid date");
    let mut out = Vec::with_capacity(days);
    while out.len() < days {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

/// Returns `days` rows of prices for `assets` tickers driven by one market
/// factor, plus three noisy index series tracking that factor.
pub fn simulate_market(assets: usize, days: usize, seed: u64) -> SyntheticMarket {
    let mut r = rng(seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let market_sd = 0.01;
    let market_mean = 4e-4;

    let factor: Vec<f64> = (0..days - 1)
        .map(|_| market_mean + market_sd * std_normal.sample(&mut r))
        .collect();

    let mut prices = DMatrix::zeros(days, assets);
    for i in 0..assets {
        let beta = r.random_range(0.3..1.8);
        let drift = 2e-4 + 3e-4 * std_normal.sample(&mut r);
        let idio = r.random_range(0.008..0.025);
        let mut level: f64 = r.random_range(20.0..200.0);
        prices[(0, i)] = level;
        for t in 1..days {
            level *= (drift + beta * factor[t - 1] + idio * std_normal.sample(&mut r)).exp();
            prices[(t, i)] = level;
        }
    }

    let mut indices = DMatrix::zeros(days, 3);
    for k in 0..3 {
        let mut level = 1000.0 * (k + 1) as f64;
        indices[(0, k)] = level;
        for t in 1..days {
            level *= (factor[t - 1] + 0.002 * std_normal.sample(&mut r)).exp();
            indices[(t, k)] = level;
        }
    }

    let dates = business_days(days);
    let tickers = (0..assets).map(|i| format!("S{i:02}")).collect();
    let index_names = ["IDX_BROAD", "IDX_LARGE", "IDX_SMALL"].map(String::from).to_vec();
    SyntheticMarket {
        prices: PriceSeries::new(tickers, dates.clone(), prices).expect("simulated prices are valid"),
        indices: PriceSeries::new(index_names, dates.clone(), indices).expect("simulated indices are valid"),
        risk_free: (0..days).map(|_| 0.02 / 252.0).collect(),
        dates,
    }
}

/// Statistics of a 254-day simulated market with `assets` tickers.
pub fn random_stats(assets: usize, seed: u64) -> ReturnStats {
    let m = simulate_market(assets, 254, seed);
    let returns = compute_log_returns(&m.prices).expect("positive prices");
    let idx = compute_log_returns(&m.indices).expect("positive prices");
    let market = crate::marketdata::composite_market_returns(&idx, None).expect("three indices");
    let ctx = build_market_context(&period_returns(&idx), &m.risk_free, 0.0).expect("finite inputs");
    compute_stats(m.prices.tickers(), &returns, &market, &ctx).expect("non-degenerate market")
}

/// Writes a series in the price-CSV layout.
pub fn write_series_csv<W: std::io::Write>(writer: W, series: &PriceSeries) -> crate::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["date".to_string()];
    header.extend(series.tickers().iter().cloned());
    w.write_record(&header)?;
    for (t, date) in series.dates().iter().enumerate() {
        let mut row = vec![date.format("%Y-%m-%d").to_string()];
        row.extend(series.prices().row(t).iter().map(|v| format!("{v:.6}")));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| crate::Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_rates_csv<W: std::io::Write>(writer: W, dates: &[NaiveDate], rates: &[f64]) -> crate::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "TBILL_13W"])?;
    for (d, r) in dates.iter().zip(rates) {
        w.write_record([d.format("%Y-%m-%d").to_string(), format!("{r:.10}")])?;
    }
    w.flush().map_err(|e| crate::Error::io("<csv>", e))?;
    Ok(())
}
