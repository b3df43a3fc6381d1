//! Per-size QUBO compilation of the CQNS objective.
//!
//! A [`QuboMatrix`] is upper triangular: the diagonal holds linear terms and
//! the strict upper triangle holds pairwise terms, so the energy of a binary
//! vector `x` is `Σ_i Q_ii x_i + Σ_{i<j} Q_ij x_i x_j`.
//!
//! The transformation pipeline is build → shift → tanh scale. Shifting a
//! scaled matrix is rejected.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marketdata::ReturnStats;
use crate::mask::{Portfolio, SetBits, MAX_UNIVERSE};

mod io;
mod ising;
mod landscape;

pub use io::{export_qubo, import_qubo, read_qubo, write_qubo};
pub use ising::{to_ising, IsingModel};
pub use landscape::{landscape_profile, write_landscape_csv, LandscapePoint, SampleBudget, EXHAUSTIVE_LIMIT};

/// Bounds of the tanh-scaled coefficient range.
pub const TANH_CUTOFF: f64 = 0.99;
/// Open interval for the shift multiplier.
pub const MULTIPLIER_RANGE: (f64, f64) = (1.5, 20.0);
pub const DEFAULT_MULTIPLIER: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildMode {
    /// `Q = (Cov − μμᵀ)/n²`; the energy of every size-n mask is CQNS at α = 0.
    ExactAlpha0,
    /// Literal per-size divisors: variances over `n²(n−1)`, covariances over
    /// `n²`, returns over `n` with the sign reversed.
    Paper,
}

impl BuildMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            BuildMode::ExactAlpha0 => "exact_alpha0",
            BuildMode::Paper => "paper",
        }
    }
}

impl fmt::Display for BuildMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BuildMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact_alpha0" => Ok(BuildMode::ExactAlpha0),
            "paper" => Ok(BuildMode::Paper),
            other => Err(Error::MalformedData(format!("unknown build mode {other:?}"))),
        }
    }
}

/// Shift factor `s_n = −2·g·n·m/|U|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftParams {
    /// Best classical score the shift is anchored on.
    pub g: f64,
    /// Empirical multiplier, strictly inside (1.5, 20).
    pub m: f64,
    pub n: usize,
    pub universe: usize,
    pub s_n: f64,
}

pub fn shift_factor(g: f64, m: f64, n: usize, universe: usize) -> Result<ShiftParams> {
    let (lo, hi) = MULTIPLIER_RANGE;
    if !(m > lo && m < hi) {
        return Err(Error::ParamOutOfRange(format!("multiplier {m} outside ({lo}, {hi})")));
    }
    if n < 2 || n > universe {
        return Err(Error::UnsupportedSize { size: n, universe });
    }
    if !g.is_finite() {
        return Err(Error::ParamOutOfRange(format!("score {g} is not finite")));
    }
    Ok(ShiftParams {
        g,
        m,
        n,
        universe,
        s_n: -2.0 * g * n as f64 * m / universe as f64,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuboMatrix {
    coeffs: DMatrix<f64>,
    target_size: usize,
    mode: BuildMode,
    alpha: f64,
    shift: Option<ShiftParams>,
    scaled: bool,
}

impl QuboMatrix {
    /// Wraps an upper-triangular coefficient matrix.
    pub fn from_coeffs(coeffs: DMatrix<f64>, target_size: usize, mode: BuildMode, alpha: f64) -> Result<Self> {
        let n = coeffs.nrows();
        if coeffs.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                got: coeffs.ncols(),
            });
        }
        if n == 0 || n > MAX_UNIVERSE {
            return Err(Error::ParamOutOfRange(format!("QUBO dimension {n} must be in 1..={MAX_UNIVERSE}")));
        }
        if target_size < 1 || target_size > n {
            return Err(Error::UnsupportedSize {
                size: target_size,
                universe: n,
            });
        }
        for j in 0..n {
            for i in j + 1..n {
                if coeffs[(i, j)] != 0.0 {
                    return Err(Error::MalformedData(format!("nonzero below diagonal at ({i}, {j})")));
                }
            }
        }
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::MalformedData(format!("non-finite coefficient {bad}")));
        }
        Ok(QuboMatrix {
            coeffs,
            target_size,
            mode,
            alpha,
            shift: None,
            scaled: false,
        })
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn target_size(&self) -> usize {
        self.target_size
    }

    pub fn mode(&self) -> BuildMode {
        self.mode
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn shift(&self) -> Option<&ShiftParams> {
        self.shift.as_ref()
    }

    pub fn is_scaled(&self) -> bool {
        self.scaled
    }

    /// `Q_sym` with `x^t Q_sym x` equal to the QUBO energy for binary `x`.
    pub fn symmetric(&self) -> DMatrix<f64> {
        symmetric_view(&self.coeffs)
    }

    /// Row-major dense form used by the solvers.
    pub fn dense(&self) -> DenseQubo {
        DenseQubo::new(&self.coeffs)
    }

    pub fn energy_bits(&self, bits: u64) -> f64 {
        let n = self.dim();
        let c = self.coeffs.as_slice();
        let mut e = 0.0;
        for i in SetBits(bits) {
            e += c[i + i * n];
            let above = bits & !((2u64 << i).wrapping_sub(1));
            for j in SetBits(above) {
                e += c[i + j * n];
            }
        }
        e
    }
}

pub(crate) fn symmetric_view(coeffs: &DMatrix<f64>) -> DMatrix<f64> {
    let n = coeffs.nrows();
    DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => coeffs[(i, i)],
        std::cmp::Ordering::Less => 0.5 * coeffs[(i, j)],
        std::cmp::Ordering::Greater => 0.5 * coeffs[(j, i)],
    })
}

/// Compiles the equal-weight CQNS for portfolios of exactly `target_size`
/// assets.
pub fn build_qubo(stats: &ReturnStats, target_size: usize, alpha: f64, mode: BuildMode) -> Result<QuboMatrix> {
    let universe = stats.len();
    if target_size < 2 || target_size > universe {
        return Err(Error::UnsupportedSize {
            size: target_size,
            universe,
        });
    }
    let n = target_size as f64;
    let n2 = n * n;
    let mu = &stats.mu;
    let cov = &stats.cov;
    let coeffs = DMatrix::from_fn(universe, universe, |i, j| {
        if i > j {
            return 0.0;
        }
        match (mode, i == j) {
            (BuildMode::ExactAlpha0, true) => (cov[(i, i)] - mu[i] * mu[i]) / n2,
            (BuildMode::ExactAlpha0, false) => 2.0 * (cov[(i, j)] - mu[i] * mu[j]) / n2,
            (BuildMode::Paper, true) => cov[(i, i)] / (n2 * (n - 1.0)) - mu[i] / n,
            (BuildMode::Paper, false) => 2.0 * cov[(i, j)] / n2,
        }
    });
    QuboMatrix::from_coeffs(coeffs, target_size, mode, alpha)
}

/// Adds `s_n/n` to every linear term and `2·s_n/(n−1)` to every pairwise term.
pub fn apply_shift(q: &QuboMatrix, s: &ShiftParams) -> Result<QuboMatrix> {
    if q.scaled {
        return Err(Error::InvalidPhaseOrder("shift must be applied before tanh scaling".into()));
    }
    if q.shift.is_some() {
        return Err(Error::InvalidPhaseOrder("matrix is already shifted".into()));
    }
    if s.n != q.target_size || s.universe != q.dim() {
        return Err(Error::ParamOutOfRange(format!(
            "shift for size {} of {} applied to a size-{} QUBO of {}",
            s.n,
            s.universe,
            q.target_size,
            q.dim()
        )));
    }
    let linear = s.s_n / s.n as f64;
    let pairwise = 2.0 * s.s_n / (q.target_size - 1) as f64;
    let dim = q.dim();
    let mut out = q.clone();
    for j in 0..dim {
        for i in 0..=j {
            out.coeffs[(i, j)] += if i == j { linear } else { pairwise };
        }
    }
    out.shift = Some(*s);
    Ok(out)
}

/// `c ↦ clamp(tanh(c/τ), −0.99, 0.99)`. `tau = None` uses the largest
/// coefficient magnitude (1 for an all-zero matrix).
pub fn tanh_scale(q: &QuboMatrix, tau: Option<f64>) -> Result<QuboMatrix> {
    let tau = match tau {
        Some(t) if t > 0.0 && t.is_finite() => t,
        Some(t) => return Err(Error::ParamOutOfRange(format!("tanh pre-scale {t} must be positive"))),
        None => {
            let max = q.coeffs.amax();
            if max > 0.0 {
                max
            } else {
                1.0
            }
        }
    };
    let mut out = q.clone();
    out.coeffs
        .apply(|c| *c = (*c / tau).tanh().clamp(-TANH_CUTOFF, TANH_CUTOFF));
    out.scaled = true;
    Ok(out)
}

pub fn qubo_energy(q: &QuboMatrix, mask: &Portfolio) -> Result<f64> {
    if mask.universe() != q.dim() {
        return Err(Error::Dimension {
            expected: q.dim(),
            got: mask.universe(),
        });
    }
    Ok(q.energy_bits(mask.bits()))
}

/// Dense symmetric coupling layout for incremental bit-flip evaluation.
#[derive(Clone, Debug)]
pub struct DenseQubo {
    n: usize,
    linear: Vec<f64>,
    /// Row-major `n × n`; `pair[i*n + j] = pair[j*n + i] = Q_ij` for `i < j`,
    /// zero on the diagonal.
    pair: Vec<f64>,
}

impl DenseQubo {
    pub fn new(coeffs: &DMatrix<f64>) -> Self {
        let n = coeffs.nrows();
        let mut pair = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                pair[i * n + j] = coeffs[(i, j)];
                pair[j * n + i] = coeffs[(i, j)];
            }
        }
        DenseQubo {
            n,
            linear: (0..n).map(|i| coeffs[(i, i)]).collect(),
            pair,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn energy(&self, bits: u64) -> f64 {
        let mut e = 0.0;
        for i in SetBits(bits) {
            e += self.linear[i];
            let row = &self.pair[i * self.n..(i + 1) * self.n];
            let above = bits & !((2u64 << i).wrapping_sub(1));
            for j in SetBits(above) {
                e += row[j];
            }
        }
        e
    }

    /// Energy change from flipping bit `k` of `bits`: one row dot product.
    #[inline]
    pub fn flip_delta(&self, bits: u64, k: usize) -> f64 {
        let row = &self.pair[k * self.n..(k + 1) * self.n];
        let mut field = self.linear[k];
        for j in SetBits(bits & !(1u64 << k)) {
            field += row[j];
        }
        if bits >> k & 1 == 1 {
            -field
        } else {
            field
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::full_mask;

    fn zero_stats(v: &[f64]) -> ReturnStats {
        let k = v.len();
        ReturnStats {
            tickers: (0..k).map(|i| format!("A{i}")).collect(),
            mu: vec![0.0; k],
            cov: DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(v)),
            market_cov: vec![0.0; k],
            beta: vec![1.0; k],
            n_days: 10,
            risk_free_rate: 0.0,
        }
    }

    #[test]
    fn exact_build_with_diagonal_cov_has_no_couplings() {
        let q = build_qubo(&zero_stats(&[0.1, 0.2, 0.3]), 2, 0.0, BuildMode::ExactAlpha0).unwrap();
        for i in 0..3 {
            for j in i + 1..3 {
                assert_eq!(q.coeffs()[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn paper_build_divisors() {
        let q = build_qubo(&zero_stats(&[0.1, 0.2]), 2, 1.0, BuildMode::Paper).unwrap();
        assert!((q.coeffs()[(0, 0)] - 0.1 / 4.0).abs() < 1e-17);
        assert!((q.coeffs()[(1, 1)] - 0.2 / 4.0).abs() < 1e-17);

        let mut s = zero_stats(&[0.1, 0.2, 0.3]);
        s.mu = vec![0.01, 0.02, 0.03];
        s.cov[(0, 1)] = 0.05;
        s.cov[(1, 0)] = 0.05;
        let q = build_qubo(&s, 3, 1.0, BuildMode::Paper).unwrap();
        assert!((q.coeffs()[(2, 2)] - (0.3 / 18.0 - 0.01)).abs() < 1e-16);
        assert!((q.coeffs()[(0, 1)] - 0.1 / 9.0).abs() < 1e-16);
    }

    #[test]
    fn build_rejects_small_sizes() {
        let s = zero_stats(&[0.1, 0.2]);
        assert!(matches!(build_qubo(&s, 1, 0.0, BuildMode::ExactAlpha0), Err(Error::UnsupportedSize { .. })));
        assert!(matches!(build_qubo(&s, 3, 0.0, BuildMode::ExactAlpha0), Err(Error::UnsupportedSize { .. })));
    }

    #[test]
    fn shift_factor_examples() {
        let s = shift_factor(-0.05, 5.0, 20, 40).unwrap();
        assert!((s.s_n - 0.25).abs() < 1e-15);
        assert_eq!(shift_factor(0.0, 7.0, 3, 10).unwrap().s_n, 0.0);
        assert!(shift_factor(1.0, 30f64.sqrt(), 3, 10).is_ok());
        assert!(shift_factor(1.0, 5.477, 3, 10).is_ok());
        assert!(matches!(shift_factor(1.0, 1.5, 3, 10), Err(Error::ParamOutOfRange(_))));
        assert!(matches!(shift_factor(1.0, 20.0, 3, 10), Err(Error::ParamOutOfRange(_))));
    }

    #[test]
    fn shift_examples() {
        let zero = QuboMatrix::from_coeffs(DMatrix::zeros(40, 40), 20, BuildMode::ExactAlpha0, 0.0).unwrap();
        let s = shift_factor(-0.05, 5.0, 20, 40).unwrap();
        let shifted = apply_shift(&zero, &s).unwrap();
        assert!((shifted.coeffs()[(3, 3)] - 0.0125).abs() < 1e-15);
        assert!((shifted.coeffs()[(3, 7)] - 0.026316).abs() < 1e-6);
        assert_eq!(shifted.coeffs()[(7, 3)], 0.0);
        assert_eq!(shifted.shift().unwrap().s_n, s.s_n);

        let none = shift_factor(0.0, 5.0, 20, 40).unwrap();
        assert_eq!(apply_shift(&zero, &none).unwrap().coeffs(), zero.coeffs());

        let scaled = tanh_scale(&zero, None).unwrap();
        assert!(matches!(apply_shift(&scaled, &s), Err(Error::InvalidPhaseOrder(_))));
        assert!(matches!(apply_shift(&shifted, &s), Err(Error::InvalidPhaseOrder(_))));
    }

    #[test]
    fn tanh_examples() {
        let c = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, 0.0, 0.0]);
        let q = QuboMatrix::from_coeffs(c, 2, BuildMode::Paper, 1.0).unwrap();
        let s = tanh_scale(&q, Some(1.0)).unwrap();
        assert!((s.coeffs()[(0, 0)] - 0.46212).abs() < 1e-5);
        assert_eq!(s.coeffs()[(0, 1)], -s.coeffs()[(0, 0)]);
        assert_eq!(s.coeffs()[(1, 1)], 0.0);
        assert!(s.is_scaled());

        let tail = tanh_scale(&q, Some(0.1)).unwrap();
        assert_eq!(tail.coeffs()[(0, 0)], 0.99);
        assert_eq!(tail.coeffs()[(0, 1)], -0.99);

        let zero = QuboMatrix::from_coeffs(DMatrix::zeros(3, 3), 2, BuildMode::Paper, 1.0).unwrap();
        let z = tanh_scale(&zero, None).unwrap();
        assert!(z.is_scaled());
        assert_eq!(z.coeffs(), zero.coeffs());
    }

    #[test]
    fn energy_examples() {
        let c = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 0.0, 4.0, 5.0, 0.0, 0.0, 6.0]);
        let q = QuboMatrix::from_coeffs(c, 2, BuildMode::Paper, 1.0).unwrap();
        assert_eq!(qubo_energy(&q, &Portfolio::new(0, 3).unwrap()).unwrap(), 0.0);
        assert_eq!(qubo_energy(&q, &Portfolio::all(3).unwrap()).unwrap(), 21.0);
        assert!(matches!(qubo_energy(&q, &Portfolio::all(2).unwrap()), Err(Error::Dimension { .. })));

        let dense = q.dense();
        for bits in 0..=full_mask(3) {
            assert_eq!(dense.energy(bits), q.energy_bits(bits));
            for k in 0..3 {
                let d = dense.flip_delta(bits, k);
                assert_eq!(q.energy_bits(bits ^ 1 << k) - q.energy_bits(bits), d);
            }
        }
    }

    #[test]
    fn rejects_lower_entries() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        assert!(QuboMatrix::from_coeffs(c, 2, BuildMode::Paper, 0.0).is_err());
    }
}
