//! Exhaustive enumeration in binary counting order with resumable checkpoints.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::{better, check_universe, Method, Objective, SolveResult};
use crate::error::{Error, Result};
use crate::mask::full_mask;

pub const DEFAULT_BRUTE_CAP: usize = 26;
const DEFAULT_CHECKPOINT_EVERY: u64 = 1 << 20;

#[derive(Clone, Debug)]
pub struct BruteOptions {
    pub cap: usize,
    /// Enumerate even when the universe exceeds `cap`.
    pub override_cap: bool,
    pub checkpoint: Option<PathBuf>,
    /// Masks between checkpoint writes.
    pub checkpoint_every: u64,
    /// Stop (as if interrupted) once this mask index has been evaluated.
    pub stop_after: Option<u64>,
}

impl Default for BruteOptions {
    fn default() -> Self {
        BruteOptions {
            cap: DEFAULT_BRUTE_CAP,
            override_cap: false,
            checkpoint: None,
            checkpoint_every: DEFAULT_CHECKPOINT_EVERY,
            stop_after: None,
        }
    }
}

/// Progress line: `<last_mask_index> <incumbent_mask_hex> <incumbent_energy>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Checkpoint {
    pub last_index: u64,
    pub incumbent: u64,
    pub energy: f64,
}

pub fn read_checkpoint(path: &Path) -> Result<Option<Checkpoint>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(Error::io(path, e)),
    };
    let bad = || Error::MalformedData(format!("bad checkpoint in {}", path.display()));
    let mut parts = text.split_whitespace();
    let last_index = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let incumbent = parts
        .next()
        .and_then(|s| u64::from_str_radix(s, 16).ok())
        .ok_or_else(bad)?;
    let energy = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    Ok(Some(Checkpoint {
        last_index,
        incumbent,
        energy,
    }))
}

fn write_checkpoint(path: &Path, cp: &Checkpoint, universe: usize) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let line = format!(
        "{} {:0width$x} {:.16e}\n",
        cp.last_index,
        cp.incumbent,
        cp.energy,
        width = universe.div_ceil(4)
    );
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(line.as_bytes())
        .and_then(|_| f.sync_all())
        .map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Global minimizer over all nonempty masks, in constant memory.
///
/// With a checkpoint path, progress is persisted every `checkpoint_every`
/// masks and an existing checkpoint is resumed from. `evaluations` counts
/// masks enumerated across all sessions, so a resumed run reports the same
/// count as an uninterrupted one.
pub fn brute_force(objective: &dyn Objective, opts: &BruteOptions) -> Result<SolveResult> {
    let universe = objective.universe();
    check_universe(universe)?;
    if universe > opts.cap && !opts.override_cap {
        return Err(Error::BudgetExceeded { universe, cap: opts.cap });
    }
    let last = full_mask(universe);
    let every = opts.checkpoint_every.max(1);
    let started = Instant::now();

    let resume = match &opts.checkpoint {
        Some(path) => read_checkpoint(path)?,
        None => None,
    };
    let (mut start, mut best) = match resume {
        Some(cp) if cp.last_index > last || cp.incumbent > last => {
            return Err(Error::MalformedData("checkpoint does not match universe".into()))
        }
        Some(cp) => (cp.last_index + 1, (cp.energy, cp.incumbent)),
        None => (1, (f64::INFINITY, 0)),
    };

    while start <= last {
        let mut end = last.min(start.saturating_add(every - 1));
        if let Some(stop) = opts.stop_after {
            end = end.min(stop.max(start));
        }
        for bits in start..=end {
            let v = objective.value(bits);
            if best.1 == 0 || better((v, bits), best) {
                best = (v, bits);
            }
        }
        if let Some(path) = &opts.checkpoint {
            let cp = Checkpoint {
                last_index: end,
                incumbent: best.1,
                energy: best.0,
            };
            write_checkpoint(path, &cp, universe)?;
        }
        if opts.stop_after.is_some_and(|s| end >= s) && end < last {
            return Err(Error::Interrupted { last_index: end });
        }
        start = end + 1;
    }

    let mut result = SolveResult::new(objective, best.1, best.0, Method::Brute)?;
    result.evaluations = last;
    result.wall_time = started.elapsed().as_secs_f64();
    Ok(result)
}
