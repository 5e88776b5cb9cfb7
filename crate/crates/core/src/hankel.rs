//! Finite Hankel blocks `H[u][v] = p(uv)`, their numerical rank, and
//! recovery of a regular quasi-realization by rank factorization:
//! with `H ≈ P Q` from a truncated SVD,
//! `D_σ = P⁺ H_σ Q⁺`, `τ = P⁺ h_ε` and `π = (ε-row) Q⁺`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, RowDVector};
use rayon::prelude::*;

use crate::frdn::ChainOracle;
use crate::realizations::HiddenQuantumModel;
use crate::word::{Alphabet, Word};
use crate::{Error, QuasiRealization, Result};

/// Default relative singular-value threshold for numerical rank.
pub const DEFAULT_REL_THRESHOLD: f64 = 1e-8;
/// Smallest acceptable `σ_r / σ₁` when learning a rank-`r` realization.
pub const MIN_CONDITION: f64 = 1e-12;

/// Anything that assigns probabilities to words over `{0, …, m−1}`.
pub trait WordProbability: Sync {
    fn alphabet_size(&self) -> usize;
    fn probability(&self, word: &Word) -> Result<f64>;
}

impl WordProbability for QuasiRealization {
    fn alphabet_size(&self) -> usize {
        self.num_symbols()
    }

    fn probability(&self, word: &Word) -> Result<f64> {
        self.evaluate(word)
    }
}

impl WordProbability for ChainOracle {
    fn alphabet_size(&self) -> usize {
        2
    }

    fn probability(&self, word: &Word) -> Result<f64> {
        self.prob(word)
    }
}

impl WordProbability for HiddenQuantumModel {
    fn alphabet_size(&self) -> usize {
        self.alphabet().size()
    }

    fn probability(&self, word: &Word) -> Result<f64> {
        self.trace_probability(word)
    }
}

/// A closure-backed source, e.g. empirical frequencies.
pub struct FnSource<F> {
    size: usize,
    f: F,
}

impl<F: Fn(&Word) -> f64 + Sync> FnSource<F> {
    pub fn new(alphabet_size: usize, f: F) -> Self {
        Self { size: alphabet_size, f }
    }
}

impl<F: Fn(&Word) -> f64 + Sync> WordProbability for FnSource<F> {
    fn alphabet_size(&self) -> usize {
        self.size
    }

    fn probability(&self, word: &Word) -> Result<f64> {
        if let Some(&s) = word.symbols().iter().find(|&&s| s >= self.size) {
            return Err(Error::InvalidWord { symbol: s, alphabet_size: self.size });
        }
        Ok((self.f)(word))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HankelBlock {
    pub prefixes: Vec<Word>,
    pub suffixes: Vec<Word>,
    /// `H[u][v] = p(uv)`.
    pub h: DMatrix<f64>,
    /// `H_σ[u][v] = p(uσv)`, one block per symbol.
    pub shifted: Vec<DMatrix<f64>>,
    /// Column `p(u)` of the empty suffix.
    pub eps_col: DVector<f64>,
    /// Row `p(v)` of the empty prefix.
    pub eps_row: RowDVector<f64>,
}

impl HankelBlock {
    pub fn alphabet_size(&self) -> usize {
        self.shifted.len()
    }

    /// CSV with prefixes as rows and suffixes as columns; the empty word is
    /// written `ε`.
    pub fn to_csv(&self, alphabet: &Alphabet, which: Option<usize>) -> Result<String> {
        let m = match which {
            None => &self.h,
            Some(s) => self.shifted.get(s).ok_or(Error::InvalidWord { symbol: s, alphabet_size: self.shifted.len() })?,
        };
        let mut out = String::from("prefix");
        for v in &self.suffixes {
            write!(out, ",{}", csv_field(&alphabet.format(v))).expect("string write");
        }
        out.push('\n');
        for (i, u) in self.prefixes.iter().enumerate() {
            out.push_str(&csv_field(&alphabet.format(u)));
            for j in 0..self.suffixes.len() {
                write!(out, ",{:.17e}", m[(i, j)]).expect("string write");
            }
            out.push('\n');
        }
        Ok(out)
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Evaluates `p(uv)` and `p(uσv)` for all `u ∈ prefixes`, `v ∈ suffixes`.
pub fn build_hankel<S: WordProbability + ?Sized>(
    source: &S,
    prefixes: &[Word],
    suffixes: &[Word],
    parallel: bool,
) -> Result<HankelBlock> {
    if prefixes.is_empty() || suffixes.is_empty() {
        return Err(Error::Parameter("Hankel bases must be nonempty".into()));
    }
    let pe = prefixes.iter().position(Word::is_empty);
    let se = suffixes.iter().position(Word::is_empty);
    let (Some(pe), Some(se)) = (pe, se) else {
        return Err(Error::Parameter("Hankel bases must contain the empty word".into()));
    };
    let m = source.alphabet_size();
    let (nu, nv) = (prefixes.len(), suffixes.len());
    let fill = |middle: Option<usize>| -> Result<DMatrix<f64>> {
        let cell = |k: usize| {
            let (i, j) = (k % nu, k / nu);
            let u = match middle {
                Some(s) => prefixes[i].pushed(s),
                None => prefixes[i].clone(),
            };
            source.probability(&u.concat(&suffixes[j]))
        };
        let vals: Vec<f64> = if parallel {
            (0..nu * nv).into_par_iter().map(cell).collect::<Result<_>>()?
        } else {
            (0..nu * nv).map(cell).collect::<Result<_>>()?
        };
        Ok(DMatrix::from_vec(nu, nv, vals))
    };
    let h = fill(None)?;
    let shifted = (0..m).map(|s| fill(Some(s))).collect::<Result<Vec<_>>>()?;
    let eps_col = h.column(se).into_owned();
    let eps_row = h.row(pe).into_owned();
    Ok(HankelBlock { prefixes: prefixes.to_vec(), suffixes: suffixes.to_vec(), h, shifted, eps_col, eps_row })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankInfo {
    pub rank: usize,
    /// Descending.
    pub singular_values: Vec<f64>,
    /// `σ_r / σ_{r+1}`; infinite when nothing lies below the threshold.
    pub gap_ratio: f64,
}

/// Number of singular values above `rel_threshold · σ₁`.
pub fn numerical_rank(h: &DMatrix<f64>, rel_threshold: f64) -> Result<RankInfo> {
    let sv = crate::linalg::singular_values(h)?;
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Ok(RankInfo { rank: 0, singular_values: sv, gap_ratio: f64::INFINITY });
    }
    let rank = sv.iter().take_while(|&&s| s > rel_threshold * top).count();
    let gap_ratio = match sv.get(rank) {
        Some(&next) if next > 0.0 => sv[rank - 1] / next,
        _ => f64::INFINITY,
    };
    Ok(RankInfo { rank, singular_values: sv, gap_ratio })
}

/// Rank-`r` spectral recovery of a quasi-realization from a Hankel block.
pub fn learn_regular(block: &HankelBlock, r: usize) -> Result<QuasiRealization> {
    let (nu, nv) = block.h.shape();
    if r == 0 || r > nu.min(nv) {
        return Err(Error::Parameter(format!("rank {r} is not in 1..={}", nu.min(nv))));
    }
    let svd = block.h.clone().try_svd(true, true, f64::EPSILON, 10_000).ok_or_else(|| {
        Error::Numerical("SVD of the Hankel block did not converge".into())
    })?;
    let u = svd.u.as_ref().expect("requested");
    let vt = svd.v_t.as_ref().expect("requested");
    // nalgebra does not sort singular values; order them explicitly.
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let keep = &order[..r];
    let s1 = svd.singular_values[order[0]];
    let sr = svd.singular_values[keep[r - 1]];
    let ratio = if s1 > 0.0 { sr / s1 } else { 0.0 };
    if ratio < MIN_CONDITION {
        return Err(Error::RankDeficient { ratio });
    }
    // P⁺ = S_r⁻¹ U_rᵀ and Q⁺ = V_r.
    let p_pinv = DMatrix::from_fn(r, nu, |k, i| u[(i, keep[k])] / svd.singular_values[keep[k]]);
    let q_pinv = DMatrix::from_fn(nv, r, |j, k| vt[(keep[k], j)]);
    let matrices: Vec<DMatrix<f64>> = block.shifted.iter().map(|hs| &p_pinv * hs * &q_pinv).collect();
    let tau = &p_pinv * &block.eps_col;
    let pi = &block.eps_row * &q_pinv;
    QuasiRealization::new(Alphabet::new(block.alphabet_size())?, pi, tau, matrices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words_up_to;

    fn coin() -> FnSource<impl Fn(&Word) -> f64 + Sync> {
        FnSource::new(2, |w: &Word| 0.5f64.powi(w.len() as i32))
    }

    #[test]
    fn iid_coin_block() {
        let basis: Vec<Word> = words_up_to(2, 2).collect();
        let b = build_hankel(&coin(), &basis, &basis, false).unwrap();
        for (i, u) in basis.iter().enumerate() {
            for (j, v) in basis.iter().enumerate() {
                assert_eq!(b.h[(i, j)], 0.5f64.powi((u.len() + v.len()) as i32));
            }
        }
        assert_eq!(b.h[(0, 0)], 1.0);
        let info = numerical_rank(&b.h, DEFAULT_REL_THRESHOLD).unwrap();
        assert_eq!(info.rank, 1);
        let qr = learn_regular(&b, 1).unwrap();
        assert_eq!(qr.dim(), 1);
        for m in qr.matrices() {
            assert!((m[(0, 0)] - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn rank_of_trivial_matrices() {
        let z = DMatrix::<f64>::zeros(4, 3);
        assert_eq!(numerical_rank(&z, 1e-8).unwrap().rank, 0);
        let a = DVector::from_row_slice(&[1.0, 2.0, 3.0]);
        let b = DVector::from_row_slice(&[0.5, -1.0]);
        assert_eq!(numerical_rank(&(&a * b.transpose()), 1e-8).unwrap().rank, 1);
    }

    #[test]
    fn bases_must_contain_empty_word() {
        let basis: Vec<Word> = vec![Word::from(vec![0])];
        assert!(matches!(build_hankel(&coin(), &basis, &basis, false), Err(Error::Parameter(_))));
    }

    #[test]
    fn over_ranked_learning_is_rejected() {
        let basis: Vec<Word> = words_up_to(2, 2).collect();
        let b = build_hankel(&coin(), &basis, &basis, false).unwrap();
        assert!(matches!(learn_regular(&b, 2), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn csv_layout() {
        let basis: Vec<Word> = words_up_to(2, 1).collect();
        let b = build_hankel(&coin(), &basis, &basis, false).unwrap();
        let a = Alphabet::with_labels(["h", "t"]).unwrap();
        let csv = b.to_csv(&a, None).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "prefix,ε,h,t");
        assert!(lines[1].starts_with("ε,1.00000000000000000e0,"));
        assert_eq!(lines.len(), 4);
    }
}
