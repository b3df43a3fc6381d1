use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{symmetric_view, QuboMatrix};
use crate::error::{Error, Result};

/// `x^t Q x = z^t J z + c·z + k` under the change of variables `z = a·x + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingModel {
    pub couplings: DMatrix<f64>,
    pub field: DVector<f64>,
    pub offset: f64,
    pub a: f64,
    pub b: f64,
}

impl IsingModel {
    /// From upper-triangular QUBO coefficients.
    ///
    /// With `x = (z − b)/a`, `x^t Q x = z^t J z − 2b (J·1)·z + b² 1^t J 1`
    /// where `J = Q_sym/a²`.
    pub fn from_coeffs(coeffs: &DMatrix<f64>, a: f64, b: f64) -> Result<Self> {
        if a == 0.0 || !a.is_finite() {
            return Err(Error::DegenerateTransform);
        }
        let couplings = symmetric_view(coeffs) / (a * a);
        let row_sums = DVector::from_iterator(couplings.nrows(), couplings.row_iter().map(|r| r.sum()));
        let field = row_sums * (-2.0 * b);
        let offset = b * b * couplings.sum();
        Ok(IsingModel {
            couplings,
            field,
            offset,
            a,
            b,
        })
    }

    pub fn dim(&self) -> usize {
        self.field.len()
    }

    /// Maps a binary vector to the spin coordinates `z = a·x + b`.
    pub fn spins(&self, bits: u64) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| self.a * (bits >> i & 1) as f64 + self.b)
    }

    pub fn energy(&self, z: &DVector<f64>) -> f64 {
        z.dot(&(&self.couplings * z)) + self.field.dot(z) + self.offset
    }
}

/// `(a, b) = (2, −1)` gives the standard spin map `z = 2x − 1`.
pub fn to_ising(q: &QuboMatrix, a: f64, b: f64) -> Result<IsingModel> {
    IsingModel::from_coeffs(q.coeffs(), a, b)
}
