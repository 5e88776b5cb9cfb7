//! The FRDN family of processes: a renewal chain on the non-negative
//! integers with return probabilities `h_ℓ = λ^ℓ sin²(ℓα/2)`, observed
//! through `f(0) = a`, `f(ℓ > 0) = b`.
//!
//! Three equivalent implementations are provided: a forward algorithm on the
//! truncated chain, an explicit four-dimensional quasi-realization and a
//! qutrit hidden quantum Markov model. A depolarized qubit family is provided
//! for the noise-robustness analysis.

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{c, hermitian_eigenvalues, CMatrix};
use crate::quasi::QuasiRealization;
use crate::realizations::{measure_prepare_map, measure_prepare_signed, HiddenQuantumModel, KrausMap, TOL_CP};
use crate::word::{Alphabet, Word};
use crate::{Error, Result};

/// Symbol index of `a` (the return to state 0).
pub const A: usize = 0;
/// Symbol index of `b`.
pub const B: usize = 1;

/// Guard keeping the `atanh` argument away from one.
const ATANH_GUARD: f64 = 1.0 - 1e-12;

pub fn alphabet() -> Alphabet {
    Alphabet::with_labels(["a", "b"]).expect("static labels are valid")
}

/// Parameters of an FRDN process.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrdnParams {
    lambda: f64,
    alpha: f64,
    truncation: usize,
}

impl FrdnParams {
    /// Requires `0 < λ ≤ 1/2`; the truncation defaults to
    /// [`default_truncation`].
    pub fn new(lambda: f64, alpha: f64) -> Result<Self> {
        if !lambda.is_finite() || !alpha.is_finite() {
            return Err(Error::Parameter("lambda and alpha must be finite".into()));
        }
        if !(lambda > 0.0 && lambda <= 0.5) {
            return Err(Error::Parameter(format!("lambda = {lambda} must lie in (0, 1/2]")));
        }
        Ok(Self { lambda, alpha, truncation: default_truncation(lambda) })
    }

    pub fn with_truncation(mut self, truncation: usize) -> Result<Self> {
        if truncation < 1 {
            return Err(Error::Parameter("truncation must be positive".into()));
        }
        self.truncation = truncation;
        Ok(self)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// `h_ℓ = λ^ℓ sin²(ℓα/2)` for `ℓ ≥ 1`.
    pub fn h(&self, l: usize) -> f64 {
        let s = (l as f64 * self.alpha / 2.0).sin();
        self.lambda.powi(l as i32) * s * s
    }

    /// Closed form of `Σ_{ℓ≥n} h_ℓ`, the probability of at least `n` `b`s
    /// after an `a`:
    /// `λⁿ/4 · (2/(1−λ) − e^{inα}/(1−λe^{iα}) − e^{−inα}/(1−λe^{−iα}))`.
    pub fn tail(&self, n: usize) -> f64 {
        if n == 0 {
            return 1.0;
        }
        let z = Complex64::from_polar(1.0, self.alpha);
        let zn = Complex64::from_polar(1.0, n as f64 * self.alpha);
        let term = zn / (c(1.0, 0.0) - z * self.lambda);
        self.lambda.powi(n as i32) / 4.0 * (2.0 / (1.0 - self.lambda) - 2.0 * term.re)
    }

    /// `Σ_{ℓ=1}^{N} h_ℓ` over the truncation.
    pub fn tail_sum(&self) -> f64 {
        (1..=self.truncation).map(|l| self.h(l)).sum()
    }

    /// `Σ_{ℓ=1}^{N} ℓ h_ℓ`, the mean excursion length.
    pub fn mean_excursion(&self) -> f64 {
        (1..=self.truncation).map(|l| l as f64 * self.h(l)).sum()
    }

    /// Stationary probability of emitting `a`: `1 / (1 + Σ ℓ h_ℓ)` (the
    /// inverse mean return time of state 0).
    pub fn stationary_prob_a(&self) -> f64 {
        1.0 / (1.0 + self.mean_excursion())
    }

    /// `r = ½ atanh((1−λ)/|1−λe^{iα}|)`.
    pub fn squeezing(&self) -> Result<f64> {
        let x = (1.0 - self.lambda) / (c(1.0, 0.0) - Complex64::from_polar(self.lambda, self.alpha)).norm();
        atanh_half(x)
    }

    /// Phase `φ` of `|ξ⟩ = (e^{iφ}|0⟩ + e^{−iφ}|1⟩)/√2`:
    /// `tan φ = e^{2r} tan(θ/2)` with `θ = arg(1 − λe^{−iα})⁻¹`.
    pub fn xi_phase(&self, r: f64) -> f64 {
        let theta = (self.lambda * self.alpha.sin()).atan2(1.0 - self.lambda * self.alpha.cos());
        ((2.0 * r).exp() * (theta / 2.0).tan()).atan()
    }

    /// Weight of `|ξ⟩⟨ξ|` in the state prepared after `a`:
    /// `1/(2(1−λ)) − (1−λcos α)/(2(1+λ²−2λcos α))`.
    pub fn xi_weight(&self) -> f64 {
        let (l, ca) = (self.lambda, self.alpha.cos());
        1.0 / (2.0 * (1.0 - l)) - (1.0 - l * ca) / (2.0 * (1.0 + l * l - 2.0 * l * ca))
    }
}

/// `max(200, ⌈16 ln 10 / ln(1/λ)⌉)`: enough terms that `λ^N < 1e−16`.
pub fn default_truncation(lambda: f64) -> usize {
    let needed = (16.0 * std::f64::consts::LN_10 / (1.0 / lambda).ln()).ceil();
    (needed as usize).max(200)
}

fn atanh_half(x: f64) -> Result<f64> {
    if x.is_nan() || x.abs() >= ATANH_GUARD {
        return Err(Error::Parameter(format!("atanh argument {x} is not below 1")));
    }
    Ok(0.25 * ((1.0 + x) / (1.0 - x)).ln())
}

/// Forward algorithm on the chain truncated to states `0..=N`.
#[derive(Clone, Debug)]
pub struct ChainOracle {
    params: FrdnParams,
    /// `h_0 … h_N` with `h_0 = 1 − Σ_{ℓ≥1} h_ℓ`.
    returns: Vec<f64>,
    stationary: Vec<f64>,
    residual: f64,
}

impl ChainOracle {
    pub fn new(params: FrdnParams) -> Result<Self> {
        let n = params.truncation();
        let mut returns: Vec<f64> = (0..=n).map(|l| if l == 0 { 0.0 } else { params.h(l) }).collect();
        let total: f64 = returns.iter().sum();
        returns[0] = 1.0 - total;
        if !(0.0..=1.0).contains(&returns[0]) {
            return Err(Error::Parameter(format!("h_0 = {} outside [0, 1]", returns[0])));
        }
        // μ(ℓ) ∝ Σ_{k≥ℓ} h_k for ℓ ≥ 1, μ(0) ∝ 1.
        let mut stationary = vec![0.0; n + 1];
        stationary[0] = 1.0;
        let mut tail = 0.0;
        for l in (1..=n).rev() {
            tail += returns[l];
            stationary[l] = tail;
        }
        let z: f64 = stationary.iter().sum();
        stationary.iter_mut().for_each(|x| *x /= z);
        // Residual of μP = μ.
        let mut image = vec![0.0; n + 1];
        for (l, &h) in returns.iter().enumerate() {
            image[l] += stationary[0] * h;
        }
        for l in 1..=n {
            image[l - 1] += stationary[l];
        }
        let residual = image.iter().zip(&stationary).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if residual > 1e-12 {
            return Err(Error::Truncation { residual });
        }
        Ok(Self { params, returns, stationary, residual })
    }

    pub fn params(&self) -> &FrdnParams {
        &self.params
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn stationarity_residual(&self) -> f64 {
        self.residual
    }

    /// `P(Y_1 … Y_ℓ = u)` for the stationary chain.
    pub fn prob(&self, word: &Word) -> Result<f64> {
        alphabet().check(word)?;
        let n = self.params.truncation();
        let mut state: Vec<f64> = Vec::new();
        for (t, &sym) in word.symbols().iter().enumerate() {
            state = if t == 0 {
                self.stationary.clone()
            } else {
                let mut next = vec![0.0; n + 1];
                for (l, &h) in self.returns.iter().enumerate() {
                    next[l] += state[0] * h;
                }
                for l in 1..=n {
                    next[l - 1] += state[l];
                }
                next
            };
            if sym == A {
                state[1..].iter_mut().for_each(|x| *x = 0.0);
            } else {
                state[0] = 0.0;
            }
        }
        if word.is_empty() {
            return Ok(1.0);
        }
        Ok(state.iter().sum())
    }
}

/// Convenience wrapper: [`ChainOracle::prob`] for a single word.
pub fn chain_oracle_prob(params: &FrdnParams, word: &Word) -> Result<f64> {
    ChainOracle::new(*params)?.prob(word)
}

/// `D_b = λ (0 ⊕ 1 ⊕ [[cos α, sin α], [−sin α, cos α]])`.
pub fn quasi_db(params: &FrdnParams) -> DMatrix<f64> {
    let (l, ca, sa) = (params.lambda, params.alpha.cos(), params.alpha.sin());
    DMatrix::from_row_slice(4, 4, &[
        0.0, 0.0, 0.0, 0.0, //
        0.0, l, 0.0, 0.0, //
        0.0, 0.0, l * ca, l * sa, //
        0.0, 0.0, -l * sa, l * ca,
    ])
}

/// The functional `π₀` with `π₀ D_bⁿ τ = Σ_{ℓ≥n} h_ℓ`.
pub fn quasi_pi0(params: &FrdnParams) -> RowDVector<f64> {
    let (l, ca, sa) = (params.lambda, params.alpha.cos(), params.alpha.sin());
    let den = (1.0 - l * ca).powi(2) + l * l * sa * sa;
    let a = (1.0 - l * ca + l * sa) / den;
    let b = (1.0 - l * ca - l * sa) / den;
    RowDVector::from_row_slice(&[
        1.0 - (2.0 / (1.0 - l) - a - b) / 4.0,
        1.0 / (2.0 * (1.0 - l)),
        -b / 4.0,
        -a / 4.0,
    ])
}

/// The column `w` with `(w π₀ + D_b) τ = τ`, i.e. `w = τ − D_b τ`.
pub fn quasi_w(params: &FrdnParams) -> DVector<f64> {
    let (l, ca, sa) = (params.lambda, params.alpha.cos(), params.alpha.sin());
    DVector::from_row_slice(&[1.0, 1.0 - l, 1.0 - l * (sa + ca), 1.0 + l * (sa - ca)])
}

/// The explicit four-dimensional quasi-realization, `τ = (1, 1, 1, 1)`,
/// `D_a = w π₀`, and `π ∝ π₀ (I − D_b)⁻¹` normalized by `πτ = 1`.
pub fn build_quasi(params: &FrdnParams) -> Result<QuasiRealization> {
    let db = quasi_db(params);
    let pi0 = quasi_pi0(params);
    let w = quasi_w(params);
    let da = &w * &pi0;
    let tau = DVector::from_element(4, 1.0);
    let resolvent = (DMatrix::identity(4, 4) - &db)
        .try_inverse()
        .ok_or_else(|| Error::Numerical("I − D_b is singular".into()))?;
    let row = &pi0 * resolvent;
    let pi = &row / row.dot(&tau.transpose());
    QuasiRealization::new(alphabet(), pi, tau, vec![da, db])
}

fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

/// `e^{tX} = cosh t · I + sinh t · X`.
fn exp_x(t: f64) -> CMatrix {
    CMatrix::identity(2, 2) * c(t.cosh(), 0.0) + pauli_x() * c(t.sinh(), 0.0)
}

/// The qubit operator `e^{−rX} e^{iαZ/2} e^{rX}` (without the `√λ` factor).
pub fn squeezed_rotation(r: f64, alpha: f64) -> CMatrix {
    let phase = CMatrix::from_diagonal(&DVector::from_row_slice(&[
        Complex64::from_polar(1.0, alpha / 2.0),
        Complex64::from_polar(1.0, -alpha / 2.0),
    ]));
    exp_x(-r) * phase * exp_x(r)
}

/// Eigenvalues (ascending) of `Φ†(I) = λ K†K` for the squeezed rotation
/// `K` at the canonical squeezing; they equal `{λ², 1}`.
pub fn phi_adjoint_identity_eigenvalues(params: &FrdnParams) -> Result<Vec<f64>> {
    let k = squeezed_rotation(params.squeezing()?, params.alpha);
    Ok(hermitian_eigenvalues(&(k.adjoint() * &k * c(params.lambda, 0.0))))
}

fn embed_qutrit(k: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(3, 3);
    out.view_mut((0, 0), (2, 2)).copy_from(k);
    out
}

fn xi_vector(phi: f64, dim: usize) -> DVector<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = DVector::zeros(dim);
    v[0] = Complex64::from_polar(s, phi);
    v[1] = Complex64::from_polar(s, -phi);
    v
}

fn qutrit_maps(params: &FrdnParams, r: f64, checked: bool) -> Result<Vec<KrausMap>> {
    let k = embed_qutrit(&(squeezed_rotation(r, params.alpha) * c(params.lambda.sqrt(), 0.0)));
    let db = KrausMap::new(3, vec![k.clone()])?;
    let effect = CMatrix::identity(3, 3) - k.adjoint() * &k;
    let p = params.xi_weight();
    let xi = xi_vector(params.xi_phase(r), 3);
    let mut sigma = &xi * xi.adjoint() * c(p, 0.0);
    sigma[(2, 2)] += c(1.0 - p, 0.0);
    let da = if checked {
        measure_prepare_map(&effect, &sigma, TOL_CP).map_err(|e| match e {
            Error::InvalidEffect { eigenvalue } => Error::Construction(format!(
                "effect I − Φ†(I) has eigenvalue {eigenvalue:.3e}; (λ, α) outside the valid region"
            )),
            other => other,
        })?
    } else {
        measure_prepare_signed(&effect, &sigma)?
    };
    Ok(vec![da, db])
}

/// The qutrit hidden quantum Markov model realizing the FRDN process.
pub fn build_hqmm(params: &FrdnParams) -> Result<HiddenQuantumModel> {
    let r = params.squeezing()?;
    let model = HiddenQuantumModel::with_stationary_state(alphabet(), qutrit_maps(params, r, true)?)?;
    let cert = model.certificate(TOL_CP);
    if !cert.passed {
        return Err(Error::Construction(format!("qutrit model fails the CP certificate: {cert:?}")));
    }
    Ok(model)
}

/// The same construction with an arbitrary squeezing `r` and no validity
/// checks; the `a` map carries negative weights when its effect is not
/// positive semidefinite.
pub fn build_hqmm_with_squeezing(params: &FrdnParams, r: f64) -> Result<HiddenQuantumModel> {
    HiddenQuantumModel::with_stationary_state(alphabet(), qutrit_maps(params, r, false)?)
}

/// Parameters of the depolarized qubit family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub q: f64,
    pub s: f64,
    pub r: f64,
    pub lambda: f64,
    pub alpha: f64,
}

impl NoiseParams {
    pub fn new(q: f64, s: f64, r: f64, lambda: f64, alpha: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&q) {
            return Err(Error::Parameter(format!("q = {q} must lie in [0, 1)")));
        }
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::Parameter(format!("s = {s} must lie in (0, 1]")));
        }
        if !r.is_finite() || !alpha.is_finite() {
            return Err(Error::Parameter("r and alpha must be finite".into()));
        }
        FrdnParams::new(lambda, alpha)?;
        Ok(Self { q, s, r, lambda, alpha })
    }

    /// Uses `r = ½ atanh((1−λ)/(1+λ))`, the smallest canonical squeezing
    /// over all phases, for which `I − Φ†(I) ⪰ 0` holds for every `α`.
    pub fn with_uniform_squeezing(q: f64, s: f64, lambda: f64, alpha: f64) -> Result<Self> {
        let r = uniform_squeezing(lambda)?;
        Self::new(q, s, r, lambda, alpha)
    }

    pub fn frdn(&self) -> FrdnParams {
        FrdnParams::new(self.lambda, self.alpha).expect("validated at construction")
    }
}

/// `½ atanh((1−λ)/(1+λ))`.
pub fn uniform_squeezing(lambda: f64) -> Result<f64> {
    atanh_half((1.0 - lambda) / (1.0 + lambda))
}

fn depolarizing_terms(weight: f64) -> Vec<(f64, CMatrix)> {
    let mut out = Vec::new();
    if weight <= 0.0 {
        return out;
    }
    for i in 0..2 {
        for j in 0..2 {
            let mut k = CMatrix::zeros(2, 2);
            k[(i, j)] = c(1.0, 0.0);
            out.push((weight / 2.0, k));
        }
    }
    out
}

/// The qubit (`p = 1`) model mixed with completely depolarizing noise:
/// `D_b = qΦ + (1−q)s·(I/2)Tr` and
/// `D_a = q·Tr[(I − Φ†(I))·]|ξ⟩⟨ξ| + (1−q)(1−s)·(I/2)Tr`.
pub fn build_noisy_hqmm(np: &NoiseParams) -> Result<HiddenQuantumModel> {
    let params = np.frdn();
    let k = squeezed_rotation(np.r, np.alpha) * c(np.lambda.sqrt(), 0.0);
    let phi = KrausMap::new(2, vec![k.clone()])?;
    let mut db_terms: Vec<(f64, CMatrix)> = phi.scaled(np.q).terms().to_vec();
    db_terms.extend(depolarizing_terms((1.0 - np.q) * np.s));
    let db = KrausMap::weighted(2, db_terms)?;

    let effect = CMatrix::identity(2, 2) - k.adjoint() * &k;
    let xi = xi_vector(params.xi_phase(np.r), 2);
    let sigma = &xi * xi.adjoint();
    let reset = measure_prepare_map(&effect, &sigma, TOL_CP).map_err(|e| match e {
        Error::InvalidEffect { eigenvalue } => {
            Error::Construction(format!("effect I − Φ†(I) has eigenvalue {eigenvalue:.3e} for r = {}", np.r))
        }
        other => other,
    })?;
    let mut da_terms: Vec<(f64, CMatrix)> = reset.scaled(np.q).terms().to_vec();
    da_terms.extend(depolarizing_terms((1.0 - np.q) * (1.0 - np.s)));
    let da = KrausMap::weighted(2, da_terms)?;

    let model = HiddenQuantumModel::with_stationary_state(alphabet(), vec![da, db])?;
    let cert = model.certificate(TOL_CP);
    if !cert.passed {
        return Err(Error::Construction(format!("noisy model fails the CP certificate: {cert:?}")));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words_up_to;

    fn params() -> FrdnParams {
        FrdnParams::new(0.4, 1.0).unwrap()
    }

    #[test]
    fn lambda_range_is_enforced() {
        assert!(FrdnParams::new(0.9, 1.0).is_err());
        assert!(FrdnParams::new(0.0, 1.0).is_err());
        assert!(FrdnParams::new(0.5, 1.0).is_ok());
    }

    #[test]
    fn truncation_rule() {
        assert_eq!(default_truncation(0.4), 200);
        assert_eq!(default_truncation(0.5), 200);
    }

    #[test]
    fn tail_closed_form_matches_series() {
        let p = params();
        for n in 0..25 {
            let series: f64 = if n == 0 { 1.0 } else { (n..=400).map(|l| p.h(l)).sum() };
            assert!((p.tail(n) - series).abs() < 1e-15, "n = {n}");
        }
    }

    #[test]
    fn quasi_reproduces_conditional_tails() {
        let p = params();
        let db = quasi_db(&p);
        let pi0 = quasi_pi0(&p);
        let tau = DVector::from_element(4, 1.0);
        let mut row = pi0.clone();
        for n in 0..20 {
            assert!((row.dot(&tau.transpose()) - p.tail(n)).abs() < 1e-14);
            row = &row * &db;
        }
    }

    #[test]
    fn oracle_levels_sum_to_one() {
        let o = ChainOracle::new(params()).unwrap();
        let total: f64 = crate::words_of_length(2, 5).map(|w| o.prob(&w).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(o.prob(&Word::empty()).unwrap(), 1.0);
    }

    #[test]
    fn qutrit_matches_quasi() {
        let p = params();
        let q = build_quasi(&p).unwrap();
        let h = build_hqmm(&p).unwrap().to_quasi().unwrap();
        for w in words_up_to(2, 6) {
            assert!((q.evaluate(&w).unwrap() - h.evaluate(&w).unwrap()).abs() < 1e-12, "{w}");
        }
    }

    #[test]
    fn effect_spectrum_is_one_and_lambda_squared() {
        let p = params();
        let ev = phi_adjoint_identity_eigenvalues(&p).unwrap();
        assert!((ev[0] - 0.16).abs() < 1e-12);
        assert!((ev[1] - 1.0).abs() < 1e-12);
        let w = p.xi_weight();
        assert!((0.0..=1.0).contains(&w));
    }
}
