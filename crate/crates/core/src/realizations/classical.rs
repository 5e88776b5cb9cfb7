use nalgebra::{DMatrix, DVector, RowDVector};

use crate::linalg::{null_vector_real, singular_values};
use crate::quasi::{letter_sum, QuasiRealization};
use crate::word::Alphabet;
use crate::{Error, Result};

/// A hidden Markov model in transition–emission form: non-negative symbol
/// matrices whose sum is row-stochastic, and a stationary distribution.
/// `D_u[i][j]` is the probability of emitting `u` and moving from `i` to `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct PositiveRealization {
    alphabet: Alphabet,
    pi: RowDVector<f64>,
    matrices: Vec<DMatrix<f64>>,
}

impl PositiveRealization {
    /// Checks non-negativity, stochasticity and stationarity within `tol`.
    pub fn new(alphabet: Alphabet, pi: Vec<f64>, matrices: Vec<DMatrix<f64>>, tol: f64) -> Result<Self> {
        let d = pi.len();
        if d == 0 {
            return Err(Error::Dimension("need at least one hidden state".into()));
        }
        if matrices.len() != alphabet.size() {
            return Err(Error::Dimension("one matrix per symbol is required".into()));
        }
        if matrices.iter().any(|m| m.shape() != (d, d)) {
            return Err(Error::Dimension(format!("symbol matrices must be {d}×{d}")));
        }
        if matrices.iter().flat_map(|m| m.iter()).chain(pi.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("HMM parameters".into()));
        }
        if let Some((u, x)) = matrices
            .iter()
            .enumerate()
            .flat_map(|(u, m)| m.iter().map(move |&x| (u, x)))
            .find(|&(_, x)| x < 0.0)
        {
            return Err(Error::Validity(format!("matrix of symbol {u} has negative entry {x:.3e}")));
        }
        let sum = letter_sum(&matrices);
        for (i, row) in sum.row_iter().enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(Error::Validity(format!("row {i} of the transition matrix sums to {s}")));
            }
        }
        let pi = RowDVector::from_vec(pi);
        if pi.iter().any(|&x| x < -tol) || (pi.sum() - 1.0).abs() > tol {
            return Err(Error::Validity("pi is not a probability vector".into()));
        }
        let residual = (&pi * &sum - &pi).amax();
        if residual > tol {
            return Err(Error::Validity(format!("pi is not stationary (residual {residual:.3e})")));
        }
        Ok(Self { alphabet, pi, matrices })
    }

    /// Builds the model with `π` the unique stationary distribution.
    pub fn with_stationary(alphabet: Alphabet, matrices: Vec<DMatrix<f64>>, tol: f64) -> Result<Self> {
        let sum = letter_sum(&matrices);
        let d = sum.nrows();
        if d == 0 {
            return Err(Error::Dimension("need at least one hidden state".into()));
        }
        let shifted = (&sum - DMatrix::identity(d, d)).transpose();
        let sv = singular_values(&shifted)?;
        if d > 1 && sv[d - 2] <= 1e-10 {
            return Err(Error::DegenerateStationarity("stationary distribution is not unique".into()));
        }
        let (v, _) = null_vector_real(&shifted)?;
        let total = v.sum();
        if total.abs() < 1e-14 {
            return Err(Error::DegenerateStationarity("stationary vector sums to zero".into()));
        }
        let pi: Vec<f64> = v.iter().map(|x| (x / total).max(0.0)).collect();
        let s: f64 = pi.iter().sum();
        let pi = pi.into_iter().map(|x| x / s).collect();
        Self::new(alphabet, pi, matrices, tol)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.pi.len()
    }

    pub fn pi(&self) -> &RowDVector<f64> {
        &self.pi
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    /// Identity embedding with `τ` the all-ones vector.
    pub fn to_quasi(&self) -> Result<QuasiRealization> {
        QuasiRealization::new(
            self.alphabet.clone(),
            self.pi.clone(),
            DVector::from_element(self.num_states(), 1.0),
            self.matrices.clone(),
        )
    }
}
