//! Quasi-realizations `(π, {D_u}, τ)` and their evaluation and validation.

use std::path::Path;

use nalgebra::{DMatrix, DVector, RowDVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::check_finite;
use crate::word::{Alphabet, Word};
use crate::{Error, Result};

/// Numerical tolerances shared by the validation routines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative fixed-point tolerance; the absolute tolerance is
    /// `fix_rel · (1 + ‖D̄‖_F)`.
    pub fix_rel: f64,
    /// Absolute tolerance on probabilities and their sums.
    pub prob: f64,
    /// Relative tolerance used for eigenvalue comparisons.
    pub eig: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { fix_rel: 1e-10, prob: 1e-9, eig: 1e-8 }
    }
}

impl Tolerances {
    pub fn fix_for(&self, letter_sum: &DMatrix<f64>) -> f64 {
        self.fix_rel * (1.0 + letter_sum.norm())
    }
}

/// A finite linear model of a stochastic process: `p(u) = π D_{u1} ⋯ D_{uℓ} τ`.
///
/// Construction only checks shapes and finiteness; whether the model defines a
/// probability measure is reported by [`QuasiRealization::validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiRealization {
    alphabet: Alphabet,
    pi: RowDVector<f64>,
    tau: DVector<f64>,
    matrices: Vec<DMatrix<f64>>,
}

impl QuasiRealization {
    pub fn new(
        alphabet: Alphabet,
        pi: RowDVector<f64>,
        tau: DVector<f64>,
        matrices: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let d = tau.len();
        if d == 0 {
            return Err(Error::Dimension("state space must be non-trivial".into()));
        }
        if pi.len() != d {
            return Err(Error::Dimension(format!("pi has length {} but tau has length {d}", pi.len())));
        }
        if matrices.len() != alphabet.size() {
            return Err(Error::Dimension(format!(
                "{} symbol matrices for an alphabet of size {}",
                matrices.len(),
                alphabet.size()
            )));
        }
        for (u, m) in matrices.iter().enumerate() {
            if m.shape() != (d, d) {
                return Err(Error::Dimension(format!(
                    "matrix of symbol {u} has shape {:?}, expected ({d}, {d})",
                    m.shape()
                )));
            }
            check_finite(m, &format!("matrix of symbol {u}"))?;
        }
        if !pi.iter().chain(tau.iter()).all(|x| x.is_finite()) {
            return Err(Error::NonFinite("pi or tau".into()));
        }
        Ok(Self { alphabet, pi, tau, matrices })
    }

    /// Builds a model from plain vectors with an unlabelled alphabet.
    pub fn from_parts(pi: Vec<f64>, tau: Vec<f64>, matrices: Vec<DMatrix<f64>>) -> Result<Self> {
        let alphabet = Alphabet::new(matrices.len())?;
        Self::new(alphabet, RowDVector::from_vec(pi), DVector::from_vec(tau), matrices)
    }

    pub fn dim(&self) -> usize {
        self.tau.len()
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn num_symbols(&self) -> usize {
        self.matrices.len()
    }

    pub fn pi(&self) -> &RowDVector<f64> {
        &self.pi
    }

    pub fn tau(&self) -> &DVector<f64> {
        &self.tau
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    pub fn matrix(&self, symbol: usize) -> Result<&DMatrix<f64>> {
        self.matrices
            .get(symbol)
            .ok_or(Error::InvalidWord { symbol, alphabet_size: self.num_symbols() })
    }

    /// Returns a copy with a different (same-size) alphabet.
    pub fn with_alphabet(mut self, alphabet: Alphabet) -> Result<Self> {
        if alphabet.size() != self.num_symbols() {
            return Err(Error::Dimension("alphabet size does not match the symbol matrices".into()));
        }
        self.alphabet = alphabet;
        Ok(self)
    }

    /// `p(u)`, by row-vector propagation from the left.
    pub fn evaluate(&self, word: &Word) -> Result<f64> {
        Ok(self.forward(word)?.dot(&self.tau.transpose()))
    }

    /// The row vector `π D_{u1} ⋯ D_{uℓ}`.
    pub fn forward(&self, word: &Word) -> Result<RowDVector<f64>> {
        self.alphabet.check(word)?;
        let mut row = self.pi.clone();
        for &s in word.symbols() {
            row = &row * &self.matrices[s];
        }
        Ok(row)
    }

    /// The column vector `D_{u1} ⋯ D_{uℓ} τ`.
    pub fn backward(&self, word: &Word) -> Result<DVector<f64>> {
        self.alphabet.check(word)?;
        let mut col = self.tau.clone();
        for &s in word.symbols().iter().rev() {
            col = &self.matrices[s] * &col;
        }
        Ok(col)
    }

    /// Evaluates many words. Each word is computed independently with the
    /// same operation order, so the parallel and sequential paths agree
    /// bit for bit.
    pub fn evaluate_batch(&self, words: &[Word], parallel: bool) -> Result<Vec<f64>> {
        if parallel {
            words.par_iter().map(|w| self.evaluate(w)).collect()
        } else {
            words.iter().map(|w| self.evaluate(w)).collect()
        }
    }

    /// The product `D_{u1} ⋯ D_{uℓ}`, multiplied left to right.
    pub fn matrix_of(&self, word: &Word) -> Result<DMatrix<f64>> {
        self.alphabet.check(word)?;
        let mut acc = DMatrix::identity(self.dim(), self.dim());
        for &s in word.symbols() {
            acc = &acc * &self.matrices[s];
        }
        Ok(acc)
    }

    /// `D̄ = Σ_u D_u`.
    pub fn letter_sum(&self) -> DMatrix<f64> {
        letter_sum(&self.matrices)
    }

    /// Norms of `πD̄ − π`, `D̄τ − τ` and `πτ − 1`.
    pub fn fixed_point_residuals(&self) -> (f64, f64, f64) {
        let sum = self.letter_sum();
        let left = (&self.pi * &sum - &self.pi).norm();
        let right = (&sum * &self.tau - &self.tau).norm();
        let norm = (self.pi.dot(&self.tau.transpose()) - 1.0).abs();
        (left, right, norm)
    }

    /// Conjugates the model by an invertible `t`: `D_u ↦ t D_u t⁻¹`,
    /// `π ↦ π t⁻¹`, `τ ↦ t τ`. Word probabilities are unchanged.
    pub fn transform(&self, t: &DMatrix<f64>) -> Result<Self> {
        if t.shape() != (self.dim(), self.dim()) {
            return Err(Error::Dimension("similarity transform has the wrong shape".into()));
        }
        let t_inv = t
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("similarity transform is singular".into()))?;
        Ok(Self {
            alphabet: self.alphabet.clone(),
            pi: &self.pi * &t_inv,
            tau: t * &self.tau,
            matrices: self.matrices.iter().map(|m| t * m * &t_inv).collect(),
        })
    }

    /// Runs the finite checks necessary for the model to define a stationary
    /// probability measure: fixed points, normalization, non-negativity and
    /// the level sums up to `max_len`, and both marginalizations.
    pub fn validate(&self, max_len: usize, tol: &Tolerances) -> ValidationReport {
        let sum = self.letter_sum();
        let tol_fix = tol.fix_for(&sum);
        let (left, right, norm) = self.fixed_point_residuals();
        let m = self.num_symbols();

        let mut report = ValidationReport {
            max_len,
            tol_fix,
            tol_prob: tol.prob,
            fixed_point_left: left,
            fixed_point_right: right,
            normalization: norm,
            min_probability: f64::INFINITY,
            min_word: None,
            worst_sum_deviation: 0.0,
            worst_sum_length: 0,
            worst_consistency: 0.0,
            consistency_word: None,
            words_checked: 0,
            passed: true,
            violations: Vec::new(),
        };
        if left > tol_fix {
            report.violations.push(format!("left fixed-point residual {left:.3e} exceeds {tol_fix:.3e}"));
        }
        if right > tol_fix {
            report.violations.push(format!("right fixed-point residual {right:.3e} exceeds {tol_fix:.3e}"));
        }
        if norm > tol_fix {
            report.violations.push(format!("normalization residual |πτ − 1| = {norm:.3e} exceeds {tol_fix:.3e}"));
        }

        // Level-by-level enumeration; level ℓ stores p(u) for all m^ℓ words in
        // lexicographic order, so that index(uσ) = m·index(u) + σ and
        // index(σu) = σ·m^ℓ + index(u).
        let mut rows: Vec<RowDVector<f64>> = vec![self.pi.clone()];
        let mut prev: Vec<f64> = vec![self.pi.dot(&self.tau.transpose())];
        let mut level_words = 1usize;
        for len in 0..=max_len {
            let probs = &prev;
            report.words_checked += probs.len();
            for (code, &p) in probs.iter().enumerate() {
                if p < report.min_probability {
                    report.min_probability = p;
                    report.min_word = Some(decode(code, len, m));
                }
            }
            let total: f64 = probs.iter().sum();
            let dev = (total - 1.0).abs();
            if dev > report.worst_sum_deviation {
                report.worst_sum_deviation = dev;
                report.worst_sum_length = len;
            }
            if len == max_len {
                break;
            }
            let next_rows: Vec<RowDVector<f64>> = rows
                .iter()
                .flat_map(|r| self.matrices.iter().map(move |d| r * d))
                .collect();
            let next: Vec<f64> = next_rows.iter().map(|r| r.dot(&self.tau.transpose())).collect();
            for (code, &p) in probs.iter().enumerate() {
                let right_sum: f64 = (0..m).map(|s| next[code * m + s]).sum();
                let left_sum: f64 = (0..m).map(|s| next[s * level_words + code]).sum();
                let worst = (right_sum - p).abs().max((left_sum - p).abs());
                if worst > report.worst_consistency {
                    report.worst_consistency = worst;
                    report.consistency_word = Some(decode(code, len, m));
                }
            }
            rows = next_rows;
            prev = next;
            level_words *= m;
        }

        if report.min_probability < -tol.prob {
            let w = report.min_word.as_ref().map(|w| self.alphabet.format(w)).unwrap_or_default();
            report
                .violations
                .push(format!("negative probability {:.3e} for word {w}", report.min_probability));
        }
        if report.worst_sum_deviation > tol.prob {
            report.violations.push(format!(
                "probabilities of length {} sum to 1 {:+.3e}",
                report.worst_sum_length, report.worst_sum_deviation
            ));
        }
        if report.worst_consistency > tol.prob {
            let w = report.consistency_word.as_ref().map(|w| self.alphabet.format(w)).unwrap_or_default();
            report.violations.push(format!(
                "marginalization mismatch {:.3e} at word {w}",
                report.worst_consistency
            ));
        }
        report.passed = report.violations.is_empty();
        report
    }

    pub fn to_model_file(&self) -> ModelFile {
        let alphabet = match self.alphabet.labels() {
            Some(l) => AlphabetSpec::Labels(l.to_vec()),
            None => AlphabetSpec::Size(self.num_symbols()),
        };
        ModelFile {
            alphabet,
            d: self.dim(),
            pi: self.pi.iter().copied().collect(),
            tau: self.tau.iter().copied().collect(),
            matrices: self
                .matrices
                .iter()
                .map(|m| MatrixSpec::Nested(m.row_iter().map(|r| r.iter().copied().collect()).collect()))
                .collect(),
        }
    }

    pub fn from_model_file(file: ModelFile) -> Result<Self> {
        let alphabet = match file.alphabet {
            AlphabetSpec::Size(m) => Alphabet::new(m)?,
            AlphabetSpec::Labels(l) => Alphabet::with_labels(l)?,
        };
        let d = file.d;
        if file.pi.len() != d || file.tau.len() != d {
            return Err(Error::Dimension(format!("pi and tau must have length d = {d}")));
        }
        let matrices = file
            .matrices
            .into_iter()
            .enumerate()
            .map(|(u, m)| m.into_matrix(d).map_err(|e| Error::Dimension(format!("symbol {u}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(alphabet, RowDVector::from_vec(file.pi), DVector::from_vec(file.tau), matrices)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_model_file(serde_json::from_str(text)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_model_file())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }
}

/// Element-wise sum of a list of equally shaped matrices.
pub fn letter_sum(matrices: &[DMatrix<f64>]) -> DMatrix<f64> {
    let (r, c) = matrices.first().map(|m| m.shape()).unwrap_or((0, 0));
    matrices.iter().fold(DMatrix::zeros(r, c), |acc, m| acc + m)
}

fn decode(mut code: usize, len: usize, m: usize) -> Word {
    let mut symbols = vec![0; len];
    for slot in symbols.iter_mut().rev() {
        *slot = code % m;
        code /= m;
    }
    Word::from(symbols)
}

/// Outcome of [`QuasiRealization::validate`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidationReport {
    pub max_len: usize,
    pub tol_fix: f64,
    pub tol_prob: f64,
    pub fixed_point_left: f64,
    pub fixed_point_right: f64,
    pub normalization: f64,
    pub min_probability: f64,
    pub min_word: Option<Word>,
    pub worst_sum_deviation: f64,
    pub worst_sum_length: usize,
    pub worst_consistency: f64,
    pub consistency_word: Option<Word>,
    pub words_checked: usize,
    pub passed: bool,
    pub violations: Vec<String>,
}

/// On-disk JSON representation of a quasi-realization.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub alphabet: AlphabetSpec,
    pub d: usize,
    pub pi: Vec<f64>,
    pub tau: Vec<f64>,
    #[serde(rename = "D")]
    pub matrices: Vec<MatrixSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphabetSpec {
    Size(usize),
    Labels(Vec<String>),
}

/// A `d×d` matrix given either as nested rows or as a flat row-major list.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Nested(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

impl MatrixSpec {
    pub fn into_matrix(self, d: usize) -> std::result::Result<DMatrix<f64>, String> {
        let flat: Vec<f64> = match self {
            MatrixSpec::Nested(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(format!("expected {d}×{d} nested rows"));
                }
                rows.into_iter().flatten().collect()
            }
            MatrixSpec::Flat(v) => {
                if v.len() != d * d {
                    return Err(format!("expected {} row-major entries", d * d));
                }
                v
            }
        };
        Ok(DMatrix::from_row_slice(d, d, &flat))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin(p: f64) -> QuasiRealization {
        QuasiRealization::from_parts(
            vec![1.0],
            vec![1.0],
            vec![DMatrix::from_element(1, 1, p), DMatrix::from_element(1, 1, 1.0 - p)],
        )
        .unwrap()
    }

    #[test]
    fn empty_word_has_probability_one() {
        let q = coin(0.3);
        assert_eq!(q.evaluate(&Word::empty()).unwrap(), 1.0);
    }

    #[test]
    fn iid_probabilities() {
        let q = coin(0.3);
        let p = q.evaluate(&Word::from(vec![0, 1, 1])).unwrap();
        assert!((p - 0.3 * 0.7 * 0.7).abs() < 1e-15);
        assert!(q.validate(6, &Tolerances::default()).passed);
    }

    #[test]
    fn invalid_symbol_is_rejected() {
        let q = coin(0.3);
        assert!(matches!(q.evaluate(&Word::from(vec![2])), Err(Error::InvalidWord { .. })));
    }

    #[test]
    fn negated_matrix_fails_validation_with_witness() {
        let q = coin(0.3);
        let mut m = q.matrices().to_vec();
        m[0] = -m[0].clone();
        let bad = QuasiRealization::from_parts(vec![1.0], vec![1.0], m).unwrap();
        let r = bad.validate(3, &Tolerances::default());
        assert!(!r.passed);
        assert_eq!(r.min_word, Some(Word::from(vec![0])));
    }

    #[test]
    fn letter_sum_of_identity() {
        let q = QuasiRealization::from_parts(vec![1.0, 0.0], vec![1.0, 0.0], vec![DMatrix::identity(2, 2)]).unwrap();
        assert_eq!(q.letter_sum(), DMatrix::identity(2, 2));
    }

    #[test]
    fn json_round_trip_and_nan_rejection() {
        let q = coin(0.25);
        let text = q.to_json_string().unwrap();
        assert_eq!(QuasiRealization::from_json_str(&text).unwrap(), q);
        let flat = r#"{"alphabet":["x","y"],"d":1,"pi":[1],"tau":[1],"D":[[0.5],[0.5]]}"#;
        assert!(QuasiRealization::from_json_str(flat).is_ok());
        let bad = r#"{"alphabet":1,"d":1,"pi":[1],"tau":[1],"D":[[NaN]]}"#;
        assert!(QuasiRealization::from_json_str(bad).is_err());
        let extra = r#"{"alphabet":1,"d":1,"pi":[1],"tau":[1],"D":[[1.0]],"x":1}"#;
        assert!(QuasiRealization::from_json_str(extra).is_err());
    }
}
