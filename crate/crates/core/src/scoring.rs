//! Equal-weight portfolio scores: Sharpe ratio, CQR and CQNS.
//!
//! Every score is built from the same two moments of the equal-weight
//! portfolio return, so `score_all` and the individual functions agree
//! bit-for-bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marketdata::{MarketContext, ReturnStats};
use crate::mask::Portfolio;

pub const DEFAULT_ALPHA: f64 = 1.0;

fn check(stats: &ReturnStats, p: &Portfolio) -> Result<f64> {
    if p.universe() != stats.len() {
        return Err(Error::Dimension {
            expected: stats.len(),
            got: p.universe(),
        });
    }
    p.weight().ok_or(Error::EmptyPortfolio)
}

/// `E[R_w] = (1/n) Σ μ_i` over included assets.
pub fn portfolio_mean_return(stats: &ReturnStats, p: &Portfolio) -> Result<f64> {
    let w = check(stats, p)?;
    Ok(p.indices().map(|i| stats.mu[i]).sum::<f64>() * w)
}

/// `w^t Cov w = (1/n²)(Σ v_i + 2 Σ_{i<j} cov_ij)`. Rounding residue below zero
/// is clamped to zero.
pub fn portfolio_variance(stats: &ReturnStats, p: &Portfolio) -> Result<f64> {
    let w = check(stats, p)?;
    let mut diag = 0.0;
    let mut off = 0.0;
    for i in p.indices() {
        diag += stats.cov[(i, i)];
        let above = p.bits() & !((2u64 << i).wrapping_sub(1));
        for j in crate::mask::SetBits(above) {
            off += stats.cov[(i, j)];
        }
    }
    Ok(((diag + 2.0 * off) * w * w).max(0.0))
}

/// Equal-weight average of asset betas.
pub fn portfolio_beta(stats: &ReturnStats, p: &Portfolio) -> Result<f64> {
    let w = check(stats, p)?;
    Ok(p.indices().map(|i| stats.beta[i]).sum::<f64>() * w)
}

/// `w · Cov_im`, the portfolio's covariance with the market.
pub fn momentum(stats: &ReturnStats, p: &Portfolio) -> Result<f64> {
    let w = check(stats, p)?;
    Ok(p.indices().map(|i| stats.market_cov[i]).sum::<f64>() * w)
}

fn std_dev_of(variance: f64) -> Result<f64> {
    if variance > 0.0 {
        Ok(variance.sqrt())
    } else {
        Err(Error::DegeneratePortfolio)
    }
}

fn sharpe_from(beta: f64, mean: f64, risk_free: f64, std_dev: f64) -> f64 {
    (beta * (mean - risk_free) + risk_free) / std_dev
}

/// `(β_w (E[R_w] − R_b) + R_b) / σ`.
pub fn sharpe(stats: &ReturnStats, ctx: &MarketContext, p: &Portfolio) -> Result<f64> {
    let sd = std_dev_of(portfolio_variance(stats, p)?)?;
    Ok(sharpe_from(
        portfolio_beta(stats, p)?,
        portfolio_mean_return(stats, p)?,
        ctx.risk_free_rate,
        sd,
    ))
}

/// `(w · Cov_im) / σ`.
pub fn cqr(stats: &ReturnStats, p: &Portfolio) -> Result<f64> {
    let sd = std_dev_of(portfolio_variance(stats, p)?)?;
    Ok(momentum(stats, p)? / sd)
}

/// `variance − mean^(2+α)`.
///
/// Integer exponents use repeated multiplication and accept any sign of
/// `mean`; other exponents need `mean ≥ 0`.
pub fn cqns_from_moments(variance: f64, mean: f64, alpha: f64) -> Result<f64> {
    if !alpha.is_finite() {
        return Err(Error::ParamOutOfRange(format!("alpha {alpha} is not finite")));
    }
    let exponent = 2.0 + alpha;
    let power = if exponent == 2.0 {
        mean * mean
    } else if exponent.fract() == 0.0 && exponent.abs() < i32::MAX as f64 {
        mean.powi(exponent as i32)
    } else if mean < 0.0 {
        return Err(Error::Domain(format!(
            "negative expected return {mean:e} raised to non-integer power {exponent}"
        )));
    } else {
        mean.powf(exponent)
    };
    Ok(variance - power)
}

pub fn cqns(stats: &ReturnStats, p: &Portfolio, alpha: f64) -> Result<f64> {
    cqns_from_moments(portfolio_variance(stats, p)?, portfolio_mean_return(stats, p)?, alpha)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    #[serde(rename = "mask-hex")]
    pub mask_hex: String,
    pub size: usize,
    pub expected_return: f64,
    pub variance: f64,
    pub std_dev: f64,
    pub sharpe: f64,
    pub cqr: f64,
    pub cqns: f64,
    pub momentum: f64,
    pub alpha: f64,
}

pub fn score_all(stats: &ReturnStats, ctx: &MarketContext, p: &Portfolio, alpha: f64) -> Result<ScoreSet> {
    let mean = portfolio_mean_return(stats, p)?;
    let variance = portfolio_variance(stats, p)?;
    let std_dev = std_dev_of(variance)?;
    let momentum = momentum(stats, p)?;
    Ok(ScoreSet {
        mask_hex: p.to_hex(),
        size: p.size(),
        expected_return: mean,
        variance,
        std_dev,
        sharpe: sharpe_from(portfolio_beta(stats, p)?, mean, ctx.risk_free_rate, std_dev),
        cqr: momentum / std_dev,
        cqns: cqns_from_moments(variance, mean, alpha)?,
        momentum,
        alpha,
    })
}

/// Writes score sets as CSV with the `ScoreSet` column order.
pub fn write_scores_csv<W: std::io::Write>(writer: W, scores: &[ScoreSet]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for s in scores {
        w.serialize(s)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
