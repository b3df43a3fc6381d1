use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use super::QuboMatrix;
use crate::error::{Error, Result};
use crate::marketdata::ReturnStats;
use crate::mask::{full_mask, Portfolio};
use crate::rng::unit_rng;
use crate::scoring::cqns;

/// Largest universe enumerated exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 24;
const CHUNK: u64 = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleBudget {
    pub samples: u64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LandscapePoint {
    pub size: usize,
    #[serde(skip)]
    pub mask: u64,
    pub energy: f64,
    pub cqns: f64,
}

/// QUBO energy and raw CQNS of every nonempty mask (or of `budget` uniform
/// samples), ordered by `(size, mask)`.
pub fn landscape_profile(
    q: &QuboMatrix,
    stats: &ReturnStats,
    alpha: f64,
    budget: Option<SampleBudget>,
) -> Result<Vec<LandscapePoint>> {
    let n = q.dim();
    if stats.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: stats.len(),
        });
    }
    let point = |bits: u64| -> Result<LandscapePoint> {
        let p = Portfolio::new(bits, n)?;
        Ok(LandscapePoint {
            size: p.size(),
            mask: bits,
            energy: q.energy_bits(bits),
            cqns: cqns(stats, &p, alpha)?,
        })
    };

    let mut points: Vec<LandscapePoint> = match budget {
        None if n > EXHAUSTIVE_LIMIT => {
            return Err(Error::BudgetRequired {
                universe: n,
                limit: EXHAUSTIVE_LIMIT,
            })
        }
        None => {
            let last = full_mask(n);
            let chunks = last.div_ceil(CHUNK);
            let parts: Vec<Vec<LandscapePoint>> = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let lo = (c * CHUNK).max(1);
                    let hi = ((c + 1) * CHUNK).min(last + 1);
                    (lo..hi).map(point).collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?;
            parts.into_iter().flatten().collect()
        }
        Some(b) => {
            if b.samples == 0 {
                return Err(Error::ParamOutOfRange("sample budget must be positive".into()));
            }
            let all = full_mask(n);
            let chunks = b.samples.div_ceil(CHUNK);
            let parts: Vec<Vec<LandscapePoint>> = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng = unit_rng(b.seed, c);
                    let count = CHUNK.min(b.samples - c * CHUNK);
                    (0..count)
                        .map(|_| loop {
                            let bits = rng.random::<u64>() & all;
                            if bits != 0 {
                                break point(bits);
                            }
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?;
            parts.into_iter().flatten().collect()
        }
    };
    points.sort_by_key(|p| (p.size, p.mask));
    Ok(points)
}

/// CSV with columns `size,energy,cqns`.
pub fn write_landscape_csv<W: std::io::Write>(writer: W, points: &[LandscapePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in points {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
