//! Binary asset-inclusion vectors.
//!
//! A portfolio over a universe of at most [`MAX_UNIVERSE`] assets is stored as
//! the low bits of a `u64`; bit `i` set means asset `i` is held with weight
//! `1/n`, where `n` is the popcount.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_UNIVERSE: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Portfolio {
    bits: u64,
    universe: usize,
}

impl Portfolio {
    pub fn new(bits: u64, universe: usize) -> Result<Self> {
        if universe == 0 || universe > MAX_UNIVERSE {
            return Err(Error::ParamOutOfRange(format!(
                "universe size {universe} must be in 1..={MAX_UNIVERSE}"
            )));
        }
        if bits & !full_mask(universe) != 0 {
            return Err(Error::Dimension {
                expected: universe,
                got: 64 - bits.leading_zeros() as usize,
            });
        }
        Ok(Portfolio { bits, universe })
    }

    pub fn from_indices(indices: &[usize], universe: usize) -> Result<Self> {
        let mut bits = 0u64;
        for &i in indices {
            if i >= universe {
                return Err(Error::Dimension {
                    expected: universe,
                    got: i + 1,
                });
            }
            bits |= 1 << i;
        }
        Portfolio::new(bits, universe)
    }

    pub fn all(universe: usize) -> Result<Self> {
        Portfolio::new(full_mask(universe), universe)
    }

    /// Parses the hexadecimal form written by [`Portfolio::to_hex`]. An
    /// optional `0x` prefix is accepted.
    pub fn from_hex(s: &str, universe: usize) -> Result<Self> {
        let digits = s.trim().trim_start_matches("0x");
        let bits = u64::from_str_radix(digits, 16)
            .map_err(|e| Error::MalformedData(format!("bad mask {s:?}: {e}")))?;
        Portfolio::new(bits, universe)
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn size(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn contains(&self, asset: usize) -> bool {
        asset < self.universe && self.bits >> asset & 1 == 1
    }

    pub fn indices(&self) -> SetBits {
        SetBits(self.bits)
    }

    /// Zero-padded lowercase hex, one digit per four assets.
    pub fn to_hex(&self) -> String {
        format!("{:0width$x}", self.bits, width = self.universe.div_ceil(4))
    }

    /// Implied equal weight of each included asset.
    pub fn weight(&self) -> Option<f64> {
        (!self.is_empty()).then(|| 1.0 / self.size() as f64)
    }
}

impl fmt::Display for Portfolio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Iterator over set bit positions, lowest first.
#[derive(Clone, Copy, Debug)]
pub struct SetBits(pub u64);

impl Iterator for SetBits {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for SetBits {}

#[inline]
pub fn full_mask(universe: usize) -> u64 {
    if universe >= 64 {
        u64::MAX
    } else {
        (1u64 << universe) - 1
    }
}
