use std::path::Path;

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::basis::{trace_product, HermitianBasis};
use crate::linalg::{c, hermitian_eigen, hermitian_eigenvalues, hermitian_norm, singular_values, CMatrix, C64};
use crate::quasi::{letter_sum, QuasiRealization};
use crate::word::{Alphabet, Word};
use crate::{Error, Result};

/// Default absolute tolerance on eigenvalues of unit-normalized Choi matrices.
pub const TOL_CP: f64 = 1e-9;

/// A linear map on `d×d` operators, `ρ ↦ Σ_k w_k K_k ρ K_k†`.
///
/// Completely positive maps have all weights non-negative; signed weights
/// are allowed so that non-CP perturbations can be represented and detected
/// by the Choi certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausMap {
    dim: usize,
    terms: Vec<(f64, CMatrix)>,
}

impl KrausMap {
    pub fn new(dim: usize, operators: Vec<CMatrix>) -> Result<Self> {
        Self::weighted(dim, operators.into_iter().map(|k| (1.0, k)).collect())
    }

    pub fn weighted(dim: usize, terms: Vec<(f64, CMatrix)>) -> Result<Self> {
        for (w, k) in &terms {
            if k.shape() != (dim, dim) {
                return Err(Error::Dimension(format!("Kraus operator of shape {:?}, expected {dim}×{dim}", k.shape())));
            }
            if !w.is_finite() || k.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite("Kraus operator".into()));
            }
        }
        Ok(Self { dim, terms })
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[(f64, CMatrix)] {
        &self.terms
    }

    /// Returns the map scaled by a non-negative factor.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { dim: self.dim, terms: self.terms.iter().map(|(w, k)| (w * factor, k.clone())).collect() }
    }

    /// Sum of two maps (concatenated Kraus lists).
    pub fn plus(&self, other: &KrausMap) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { dim: self.dim, terms }
    }

    /// Schrödinger picture: `Φ(ρ)`.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        self.terms
            .iter()
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, (w, k)| acc + k * rho * k.adjoint() * c(*w, 0.0))
    }

    /// Heisenberg picture: `Φ†(X)`.
    pub fn adjoint_apply(&self, x: &CMatrix) -> CMatrix {
        self.terms
            .iter()
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, (w, k)| acc + k.adjoint() * x * k * c(*w, 0.0))
    }

    /// The effect `Φ†(I)`.
    pub fn effect(&self) -> CMatrix {
        self.terms
            .iter()
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, (w, k)| acc + k.adjoint() * k * c(*w, 0.0))
    }

    /// Real matrix `S[i][j] = Re Tr(B_i Φ(B_j))` over the Hermitian basis.
    pub fn superoperator(&self, basis: &HermitianBasis) -> DMatrix<f64> {
        let n = basis.len();
        let mut s = DMatrix::zeros(n, n);
        for (j, bj) in basis.elements().iter().enumerate() {
            let image = self.apply(bj);
            for (i, bi) in basis.elements().iter().enumerate() {
                s[(i, j)] = trace_product(bi, &image).re;
            }
        }
        s
    }

    /// Unit-normalized Choi matrix `(1/d) Σ_{ab} |a⟩⟨b| ⊗ Φ(|a⟩⟨b|)`.
    pub fn choi(&self) -> CMatrix {
        let d = self.dim;
        let mut out = CMatrix::zeros(d * d, d * d);
        for (w, k) in &self.terms {
            let v = DVector::from_iterator(d * d, (0..d).flat_map(|a| (0..d).map(move |i| k[(i, a)])));
            out += &v * v.adjoint() * c(*w / d as f64, 0.0);
        }
        out
    }
}

/// Choi matrix of a map given by its real superoperator over `basis`; agrees
/// with [`KrausMap::choi`] for the same map.
pub fn choi_from_superoperator(s: &DMatrix<f64>, basis: &HermitianBasis) -> CMatrix {
    let d = basis.dim();
    let images: Vec<CMatrix> = (0..basis.len())
        .map(|j| {
            basis
                .elements()
                .iter()
                .enumerate()
                .fold(CMatrix::zeros(d, d), |acc, (i, bi)| acc + bi * c(s[(i, j)], 0.0))
        })
        .collect();
    let mut out = CMatrix::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            // Φ(|a⟩⟨b|) = Σ_j Tr(B_j |a⟩⟨b|) Φ(B_j), with Tr(B_j |a⟩⟨b|) = B_j[b][a].
            let mut image = CMatrix::zeros(d, d);
            for (j, bj) in basis.elements().iter().enumerate() {
                image += &images[j] * bj[(b, a)];
            }
            for i in 0..d {
                for jj in 0..d {
                    out[(a * d + i, b * d + jj)] = image[(i, jj)] / c(d as f64, 0.0);
                }
            }
        }
    }
    out
}

/// The measure-and-prepare map `ρ ↦ Tr(Fρ) σ` as an explicit Kraus list.
pub fn measure_prepare_map(effect: &CMatrix, state: &CMatrix, tol: f64) -> Result<KrausMap> {
    let (f, e) = hermitian_eigen(effect);
    if let Some(&bad) = f.iter().find(|&&x| x < -tol || x > 1.0 + tol) {
        return Err(Error::InvalidEffect { eigenvalue: bad });
    }
    let (s, v) = hermitian_eigen(state);
    if let Some(&bad) = s.iter().find(|&&x| x < -tol) {
        return Err(Error::Parameter(format!("prepared state has eigenvalue {bad:.3e}")));
    }
    let trace: f64 = s.iter().sum();
    if (trace - 1.0).abs() > tol.max(1e-12) {
        return Err(Error::Parameter(format!("prepared state has trace {trace}")));
    }
    let d = effect.nrows();
    let mut terms = Vec::new();
    for (i, &si) in s.iter().enumerate() {
        for (j, &fj) in f.iter().enumerate() {
            let w = si.max(0.0) * fj.max(0.0);
            if w > 0.0 {
                terms.push((1.0, outer(&v, i, &e, j) * c(w.sqrt(), 0.0)));
            }
        }
    }
    KrausMap::weighted(d, terms)
}

/// Like [`measure_prepare_map`] but without range checks: negative effect
/// eigenvalues become negative weights, yielding a map that is not
/// completely positive.
pub fn measure_prepare_signed(effect: &CMatrix, state: &CMatrix) -> Result<KrausMap> {
    let (f, e) = hermitian_eigen(effect);
    let (s, v) = hermitian_eigen(state);
    let mut terms = Vec::new();
    for (i, &si) in s.iter().enumerate() {
        for (j, &fj) in f.iter().enumerate() {
            let w = si * fj;
            if w != 0.0 {
                terms.push((w, outer(&v, i, &e, j)));
            }
        }
    }
    KrausMap::weighted(effect.nrows(), terms)
}

/// `|v_i⟩⟨e_j|` from eigenvector columns.
fn outer(v: &CMatrix, i: usize, e: &CMatrix, j: usize) -> CMatrix {
    v.column(i) * e.column(j).adjoint()
}

/// Numerical certificate for a completely positive realization.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CpCertificate {
    /// Minimum eigenvalue of each symbol's unit-normalized Choi matrix.
    pub min_choi_eigenvalues: Vec<f64>,
    /// Spectral norm of `Σ_u Φ_u†(I) − I`.
    pub unitality_residual: f64,
    /// Spectral norm of `Σ_u Φ_u(ρ) − ρ`.
    pub stationarity_residual: f64,
    pub rho_min_eigenvalue: f64,
    pub rho_trace_error: f64,
    pub tol_cp: f64,
    pub passed: bool,
}

/// A hidden quantum Markov model: one CP map per symbol and a stationary
/// density matrix. Kraus lists are the source of truth; real superoperators
/// over the Hermitian basis are derived once at construction.
#[derive(Clone, Debug)]
pub struct HiddenQuantumModel {
    alphabet: Alphabet,
    maps: Vec<KrausMap>,
    rho: CMatrix,
    basis: HermitianBasis,
    superops: Vec<DMatrix<f64>>,
}

impl HiddenQuantumModel {
    pub fn new(alphabet: Alphabet, maps: Vec<KrausMap>, rho: CMatrix) -> Result<Self> {
        let hdim = rho.nrows();
        if hdim == 0 || !rho.is_square() {
            return Err(Error::Dimension("density matrix must be square and non-empty".into()));
        }
        if maps.len() != alphabet.size() {
            return Err(Error::Dimension(format!("{} maps for {} symbols", maps.len(), alphabet.size())));
        }
        if maps.iter().any(|m| m.dim() != hdim) {
            return Err(Error::Dimension("map dimension differs from the density matrix".into()));
        }
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("density matrix".into()));
        }
        let basis = HermitianBasis::new(hdim);
        let superops = maps.iter().map(|m| m.superoperator(&basis)).collect();
        Ok(Self { alphabet, maps, rho, basis, superops })
    }

    /// Builds the model with `ρ` the unique fixed point of the sum channel.
    pub fn with_stationary_state(alphabet: Alphabet, maps: Vec<KrausMap>) -> Result<Self> {
        let hdim = maps.first().map(|m| m.dim()).ok_or_else(|| Error::Dimension("no maps".into()))?;
        let placeholder = CMatrix::identity(hdim, hdim) * c(1.0 / hdim as f64, 0.0);
        let mut model = Self::new(alphabet, maps, placeholder)?;
        model.rho = model.stationary_state()?;
        Ok(model)
    }

    /// The unique trace-one fixed point of `Σ_u Φ_u`.
    pub fn stationary_state(&self) -> Result<CMatrix> {
        let total = letter_sum(&self.superops);
        let n = total.nrows();
        let shifted = &total - DMatrix::identity(n, n);
        let sv = singular_values(&shifted)?;
        let scale = 1.0 + total.norm();
        let smallest = sv[n - 1];
        if smallest > 1e-9 * scale {
            return Err(Error::DegenerateStationarity(format!(
                "sum channel has no fixed point (smallest singular value {smallest:.3e})"
            )));
        }
        if n > 1 && sv[n - 2] <= 1e-8 * scale {
            return Err(Error::DegenerateStationarity("sum channel has several fixed points".into()));
        }
        let (x, _) = crate::linalg::null_vector_real(&shifted)?;
        let mut rho = self.basis.from_coordinates(&x);
        let tr = rho.trace();
        if tr.norm() < 1e-12 {
            return Err(Error::DegenerateStationarity("fixed point is traceless".into()));
        }
        rho /= tr;
        Ok((&rho + rho.adjoint()) * c(0.5, 0.0))
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn hdim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn maps(&self) -> &[KrausMap] {
        &self.maps
    }

    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }

    pub fn basis(&self) -> &HermitianBasis {
        &self.basis
    }

    /// Real superoperators `S_u[i][j] = Re Tr(B_i Φ_u(B_j))`.
    pub fn superoperators(&self) -> &[DMatrix<f64>] {
        &self.superops
    }

    /// Effects `E_u = Φ_u†(I)`, so that `P(u | ρ) = Tr(E_u ρ)`.
    pub fn effects(&self) -> Vec<CMatrix> {
        self.maps.iter().map(KrausMap::effect).collect()
    }

    /// `Tr(Φ_{uℓ} ∘ ⋯ ∘ Φ_{u1}(ρ))` by direct operator propagation.
    pub fn trace_probability(&self, word: &Word) -> Result<f64> {
        self.alphabet.check(word)?;
        let mut r = self.rho.clone();
        for &s in word.symbols() {
            r = self.maps[s].apply(&r);
        }
        Ok(r.trace().re)
    }

    pub fn certificate(&self, tol_cp: f64) -> CpCertificate {
        let d = self.hdim();
        let min_choi: Vec<f64> = self
            .maps
            .iter()
            .map(|m| hermitian_eigenvalues(&m.choi()).first().copied().unwrap_or(0.0))
            .collect();
        let total_effect = self.effects().into_iter().fold(CMatrix::zeros(d, d), |a, e| a + e);
        let unitality = hermitian_norm(&(total_effect - CMatrix::identity(d, d)));
        let image = self.maps.iter().fold(CMatrix::zeros(d, d), |a, m| a + m.apply(&self.rho));
        let stationarity = spectral_norm(&(image - &self.rho));
        let rho_min = hermitian_eigenvalues(&self.rho)[0];
        let rho_trace_error = (self.rho.trace() - c(1.0, 0.0)).norm();
        let passed = min_choi.iter().all(|&x| x >= -tol_cp)
            && unitality <= tol_cp
            && stationarity <= tol_cp
            && rho_min >= -tol_cp
            && rho_trace_error <= tol_cp;
        CpCertificate {
            min_choi_eigenvalues: min_choi,
            unitality_residual: unitality,
            stationarity_residual: stationarity,
            rho_min_eigenvalue: rho_min,
            rho_trace_error,
            tol_cp,
            passed,
        }
    }

    /// The real-vector-space view: `D_u = S_uᵀ`, `π` the coordinates of `ρ`,
    /// `τ` the coordinates of the identity. Errors if the certificate fails.
    pub fn to_quasi(&self) -> Result<QuasiRealization> {
        let cert = self.certificate(TOL_CP);
        if !cert.passed {
            return Err(Error::Validity(format!("CP certificate failed: {cert:?}")));
        }
        self.to_quasi_unchecked()
    }

    /// The same conversion without validity checks.
    pub fn to_quasi_unchecked(&self) -> Result<QuasiRealization> {
        let pi = RowDVector::from_iterator(self.basis.len(), self.basis.coordinates(&self.rho).iter().copied());
        let tau = self.basis.coordinates(&CMatrix::identity(self.hdim(), self.hdim()));
        let mats = self.superops.iter().map(|s| s.transpose()).collect();
        QuasiRealization::new(self.alphabet.clone(), pi, tau, mats)
    }

    pub fn to_json_value(&self) -> Result<Value> {
        let mut kraus = Map::new();
        for (u, m) in self.maps.iter().enumerate() {
            let mut ops = Vec::new();
            for (w, k) in m.terms() {
                if *w < 0.0 {
                    return Err(Error::Validity("maps with negative weights cannot be serialized as Kraus lists".into()));
                }
                ops.push(complex_to_json(&(k * c(w.sqrt(), 0.0))));
            }
            kraus.insert(self.alphabet.label(u), Value::Array(ops));
        }
        let labels: Vec<Value> = (0..self.alphabet.size()).map(|u| Value::String(self.alphabet.label(u))).collect();
        let mut obj = Map::new();
        obj.insert("hdim".into(), Value::from(self.hdim()));
        obj.insert("alphabet".into(), Value::Array(labels));
        obj.insert("kraus".into(), Value::Object(kraus));
        obj.insert("rho".into(), complex_to_json(&self.rho));
        Ok(Value::Object(obj))
    }

    /// Parses `{ "hdim", "kraus": {label: [[ [re, im], … ], …]}, "rho"?, "alphabet"? }`.
    /// Without `rho` the stationary state is computed.
    pub fn from_json_value(v: &Value) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| Error::Parameter("HQMM file must be a JSON object".into()))?;
        for key in obj.keys() {
            if !["hdim", "kraus", "rho", "alphabet"].contains(&key.as_str()) {
                return Err(Error::Parameter(format!("unknown key {key:?} in HQMM file")));
            }
        }
        let hdim = obj
            .get("hdim")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parameter("missing integer \"hdim\"".into()))? as usize;
        let kraus = obj
            .get("kraus")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::Parameter("missing object \"kraus\"".into()))?;
        let labels: Vec<String> = match obj.get("alphabet") {
            Some(Value::Array(a)) => a
                .iter()
                .map(|x| x.as_str().map(String::from).ok_or_else(|| Error::Parameter("alphabet labels must be strings".into())))
                .collect::<Result<_>>()?,
            Some(_) => return Err(Error::Parameter("\"alphabet\" must be a list of labels".into())),
            None => kraus.keys().cloned().collect(),
        };
        if labels.len() != kraus.len() {
            return Err(Error::Parameter("alphabet and kraus keys differ".into()));
        }
        let alphabet = Alphabet::with_labels(labels.clone())?;
        let maps = labels
            .iter()
            .map(|l| {
                let ops = kraus
                    .get(l)
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Parameter(format!("no Kraus list for symbol {l:?}")))?;
                let ops = ops.iter().map(|o| complex_from_json(o, hdim)).collect::<Result<Vec<_>>>()?;
                KrausMap::new(hdim, ops)
            })
            .collect::<Result<Vec<_>>>()?;
        match obj.get("rho") {
            Some(r) => Self::new(alphabet, maps, complex_from_json(r, hdim)?),
            None => Self::with_stationary_state(alphabet, maps),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let v: Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::from_json_value(&v)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.to_json_value()?)?)?;
        Ok(())
    }
}

/// Largest singular value of a complex matrix.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(&(m.adjoint() * m)).last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

fn complex_to_json(m: &CMatrix) -> Value {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(Value::Array(vec![Value::from(m[(i, j)].re), Value::from(m[(i, j)].im)]));
        }
    }
    Value::Array(out)
}

fn complex_from_json(v: &Value, d: usize) -> Result<CMatrix> {
    let entries = v.as_array().ok_or_else(|| Error::Parameter("matrix must be a list of [re, im] pairs".into()))?;
    if entries.len() != d * d {
        return Err(Error::Dimension(format!("expected {} entries, found {}", d * d, entries.len())));
    }
    let mut m = CMatrix::zeros(d, d);
    for (idx, e) in entries.iter().enumerate() {
        let pair = e.as_array().filter(|p| p.len() == 2).ok_or_else(|| Error::Parameter("entries must be [re, im]".into()))?;
        let re = pair[0].as_f64().ok_or_else(|| Error::Parameter("non-numeric entry".into()))?;
        let im = pair[1].as_f64().ok_or_else(|| Error::Parameter("non-numeric entry".into()))?;
        if !re.is_finite() || !im.is_finite() {
            return Err(Error::NonFinite("matrix entry".into()));
        }
        m[(idx / d, idx % d)] = C64::new(re, im);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pvm_split_of_unitary() -> Vec<KrausMap> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]);
        let p0 = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let p1 = CMatrix::identity(2, 2) - &p0;
        vec![KrausMap::new(2, vec![&p0 * &h]).unwrap(), KrausMap::new(2, vec![&p1 * &h]).unwrap()]
    }

    #[test]
    fn valid_instrument_passes_certificate() {
        let a = Alphabet::new(2).unwrap();
        let m = HiddenQuantumModel::with_stationary_state(a, pvm_split_of_unitary()).unwrap();
        let cert = m.certificate(TOL_CP);
        assert!(cert.passed, "{cert:?}");
        let q = m.to_quasi().unwrap();
        for w in crate::words_up_to(2, 4) {
            let p = q.evaluate(&w).unwrap();
            assert!((p - m.trace_probability(&w).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn scaled_kraus_breaks_unitality() {
        let a = Alphabet::new(2).unwrap();
        let maps: Vec<KrausMap> = pvm_split_of_unitary()
            .into_iter()
            .map(|m| KrausMap::new(2, m.terms().iter().map(|(_, k)| k * c(1.1, 0.0)).collect()).unwrap())
            .collect();
        let rho = CMatrix::identity(2, 2) * c(0.5, 0.0);
        let m = HiddenQuantumModel::new(a, maps, rho).unwrap();
        let cert = m.certificate(TOL_CP);
        assert!(!cert.passed);
        assert!((cert.unitality_residual - 0.21).abs() < 1e-12);
    }

    #[test]
    fn choi_agrees_between_representations() {
        let basis = HermitianBasis::new(2);
        for m in pvm_split_of_unitary() {
            let a = m.choi();
            let b = choi_from_superoperator(&m.superoperator(&basis), &basis);
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn measure_prepare_extremes() {
        let sigma = CMatrix::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.0)]);
        let reset = measure_prepare_map(&CMatrix::identity(2, 2), &sigma, TOL_CP).unwrap();
        let rho = CMatrix::from_row_slice(2, 2, &[c(0.4, 0.0), c(0.0, 0.1), c(0.0, -0.1), c(0.6, 0.0)]);
        assert!((reset.apply(&rho) - &sigma).norm() < 1e-14);
        assert!((reset.effect() - CMatrix::identity(2, 2)).norm() < 1e-14);
        let zero = measure_prepare_map(&CMatrix::zeros(2, 2), &sigma, TOL_CP).unwrap();
        assert!(zero.apply(&rho).norm() < 1e-15);
        let too_big = CMatrix::identity(2, 2) * c(1.5, 0.0);
        assert!(matches!(measure_prepare_map(&too_big, &sigma, TOL_CP), Err(Error::InvalidEffect { .. })));
    }

    #[test]
    fn json_round_trip() {
        let a = Alphabet::with_labels(["x", "y"]).unwrap();
        let m = HiddenQuantumModel::with_stationary_state(a, pvm_split_of_unitary()).unwrap();
        let v = m.to_json_value().unwrap();
        let back = HiddenQuantumModel::from_json_value(&v).unwrap();
        assert_eq!(back.alphabet(), m.alphabet());
        assert!((back.rho() - m.rho()).norm() < 1e-15);
        let w = Word::from(vec![0, 1, 1]);
        assert!((back.trace_probability(&w).unwrap() - m.trace_probability(&w).unwrap()).abs() < 1e-15);
    }
}
