//! Dense eigenvalue analysis and Perron-type fixed points.

use nalgebra::{DMatrix, DVector, RowDVector, Schur};
use serde::{Serialize, Serializer};

use crate::linalg::{null_vector_real, C64};
use crate::quasi::letter_sum;
use crate::{Error, Result};

const SCHUR_MAX_ITER: usize = 10_000;

/// Eigenvalues of a real square matrix with leading-eigenvector data.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    /// Sorted by decreasing modulus, then decreasing real part, then
    /// increasing imaginary part (comparisons grouped at the eigenvalue
    /// tolerance).
    #[serde(serialize_with = "serialize_complex_list")]
    pub eigenvalues: Vec<C64>,
    pub spectral_radius: f64,
    /// The leading eigenvalue is the only one in the top modulus shell.
    pub is_leading_simple: bool,
    /// Present iff the leading eigenvalue is real and simple.
    pub leading_left: Option<Vec<f64>>,
    pub leading_right: Option<Vec<f64>>,
    /// Largest modulus strictly below the top shell (0 if none).
    pub second_modulus: f64,
}

impl SpectrumReport {
    pub fn leading(&self) -> C64 {
        self.eigenvalues[0]
    }
}

pub(crate) fn serialize_complex_list<S: Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
    pairs.serialize(s)
}

/// Raw complex eigenvalues via a real Schur decomposition.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(Error::Dimension("eigenvalues need a square matrix".into()));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix passed to the eigensolver".into()));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER).ok_or_else(|| {
        Error::Numerical(format!(
            "Schur iteration did not converge (n = {}, ‖M‖_F = {:.3e})",
            m.nrows(),
            m.norm()
        ))
    })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Sorts eigenvalues into the canonical order, grouping values whose moduli
/// or real parts agree to relative tolerance `tol`.
pub fn sort_eigenvalues(mut ev: Vec<C64>, tol: f64) -> Vec<C64> {
    ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let scale = ev.first().map(|z| z.norm()).unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(ev.len());
    for mut shell in group_by_tol(ev, |z| z.norm(), tol * scale) {
        shell.sort_by(|a, b| b.re.total_cmp(&a.re));
        for mut same_re in group_by_tol(shell, |z| z.re, tol * scale) {
            same_re.sort_by(|a, b| a.im.total_cmp(&b.im));
            out.extend(same_re);
        }
    }
    out
}

/// Splits an already monotone sequence into runs whose key stays within
/// `width` of the run's first element.
fn group_by_tol(v: Vec<C64>, key: impl Fn(&C64) -> f64, width: f64) -> Vec<Vec<C64>> {
    let mut groups: Vec<Vec<C64>> = Vec::new();
    for z in v {
        match groups.last_mut() {
            Some(g) if (key(&g[0]) - key(&z)).abs() <= width => g.push(z),
            _ => groups.push(vec![z]),
        }
    }
    groups
}

/// Eigenvalues, spectral radius and (when well defined) leading eigenvectors.
pub fn spectrum(m: &DMatrix<f64>, tol_eig: f64) -> Result<SpectrumReport> {
    let ev = sort_eigenvalues(eigenvalues(m)?, tol_eig);
    let rho = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let width = tol_eig * rho.max(f64::MIN_POSITIVE);
    let top = ev.iter().filter(|z| rho - z.norm() <= width).count();
    let second_modulus = ev.iter().map(|z| z.norm()).filter(|&r| rho - r > width).fold(0.0, f64::max);
    let is_leading_simple = !ev.is_empty() && top == 1;
    let mut report = SpectrumReport {
        eigenvalues: ev,
        spectral_radius: rho,
        is_leading_simple,
        leading_left: None,
        leading_right: None,
        second_modulus,
    };
    if is_leading_simple && report.eigenvalues[0].im.abs() <= width {
        let lead = report.eigenvalues[0].re;
        let n = m.nrows();
        let shifted = m - DMatrix::identity(n, n) * lead;
        let (right, _) = null_vector_real(&shifted)?;
        let (left, _) = null_vector_real(&shifted.transpose())?;
        let scale = 1.0 + m.norm();
        let res_r = (m * &right - &right * lead).norm();
        let res_l = (m.transpose() * &left - &left * lead).norm();
        if res_r > tol_eig * scale || res_l > tol_eig * scale {
            return Err(Error::Numerical(format!(
                "leading eigenvector residuals {res_r:.3e} / {res_l:.3e} exceed tolerance"
            )));
        }
        report.leading_right = Some(right.iter().copied().collect());
        report.leading_left = Some(left.iter().copied().collect());
    }
    Ok(report)
}

/// Normalized fixed points of `ν Σ_u D_u`.
#[derive(Clone, Debug)]
pub struct StationaryPair {
    pub pi: RowDVector<f64>,
    pub tau: DVector<f64>,
    /// `1 / ρ(Σ_u D_u)`.
    pub nu: f64,
    pub is_simple: bool,
    /// `|λ₂| / ρ` of the summed matrix; below one certifies uniqueness.
    pub gap_ratio: f64,
}

/// Left and right Perron vectors of the (rescaled) letter sum, normalized so
/// that `πτ = 1` and the last coordinate of `τ` is positive.
pub fn stationary_pair(matrices: &[DMatrix<f64>], tol_eig: f64) -> Result<StationaryPair> {
    if matrices.is_empty() {
        return Err(Error::Dimension("need at least one symbol matrix".into()));
    }
    let sum = letter_sum(matrices);
    let rep = spectrum(&sum, tol_eig)?;
    let rho = rep.spectral_radius;
    if rho <= f64::MIN_POSITIVE {
        return Err(Error::DegenerateStationarity("letter sum is nilpotent".into()));
    }
    if !rep.is_leading_simple {
        return Err(Error::DegenerateStationarity(format!(
            "leading eigenvalue of modulus {rho:.6e} is not simple"
        )));
    }
    let lead = rep.leading();
    if lead.im.abs() > tol_eig * rho {
        return Err(Error::DegenerateStationarity(format!(
            "leading eigenvalue {:.6} {:+.6}i is complex",
            lead.re, lead.im
        )));
    }
    if lead.re < 0.0 {
        return Err(Error::DegenerateStationarity(format!(
            "leading eigenvalue {:.6e} is negative",
            lead.re
        )));
    }
    let nu = 1.0 / rho;
    let mut tau = DVector::from_vec(rep.leading_right.clone().expect("present for simple real lead"));
    let left = rep.leading_left.clone().expect("present for simple real lead");
    let mut pi = RowDVector::from_vec(left);

    let d = tau.len();
    let pivot = if tau[d - 1].abs() > 1e-12 * tau.amax() {
        d - 1
    } else {
        tau.iamax()
    };
    if tau[pivot] < 0.0 {
        tau = -tau;
    }
    let overlap = pi.dot(&tau.transpose());
    if overlap.abs() <= 1e-14 * pi.norm() * tau.norm() {
        return Err(Error::DegenerateStationarity("left and right fixed points are orthogonal".into()));
    }
    pi /= overlap;

    let check = spectrum(&(&sum * nu), tol_eig)?;
    if (check.spectral_radius - 1.0).abs() > 1e-12 {
        return Err(Error::Numerical(format!(
            "rescaled letter sum has spectral radius {:.15}",
            check.spectral_radius
        )));
    }
    Ok(StationaryPair {
        pi,
        tau,
        nu,
        is_simple: true,
        gap_ratio: rep.second_modulus / rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn scaled_rotation() {
        let (l, t) = (0.7_f64, 0.9_f64);
        let m = DMatrix::from_row_slice(2, 2, &[l * t.cos(), -l * t.sin(), l * t.sin(), l * t.cos()]);
        let r = spectrum(&m, 1e-8).unwrap();
        assert!((r.spectral_radius - l).abs() < 1e-14);
        assert!((r.eigenvalues[0] - c(l * t.cos(), -l * t.sin())).norm() < 1e-14);
        assert!((r.eigenvalues[1] - c(l * t.cos(), l * t.sin())).norm() < 1e-14);
        assert!(!r.is_leading_simple);
    }

    #[test]
    fn identity_is_not_simple() {
        let r = spectrum(&DMatrix::identity(3, 3), 1e-8).unwrap();
        assert!(r.eigenvalues.iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-15));
        assert!(!r.is_leading_simple);
        assert!(r.leading_right.is_none());
        let e = stationary_pair(&[DMatrix::identity(3, 3)], 1e-8).unwrap_err();
        assert!(matches!(e, Error::DegenerateStationarity(_)));
    }

    #[test]
    fn stochastic_matrix_recovers_ones() {
        let p = DMatrix::from_row_slice(3, 3, &[0.5, 0.5, 0.0, 0.2, 0.3, 0.5, 0.1, 0.1, 0.8]);
        let parts = vec![p.map(|x| 0.4 * x), p.map(|x| 0.6 * x)];
        let sp = stationary_pair(&parts, 1e-8).unwrap();
        assert!((sp.nu - 1.0).abs() < 1e-12);
        for i in 0..3 {
            assert!((sp.tau[i] - sp.tau[2]).abs() < 1e-12);
        }
        assert!((sp.pi.dot(&sp.tau.transpose()) - 1.0).abs() < 1e-12);
        assert!((&sp.pi * &p - &sp.pi).norm() < 1e-12);
        assert!(sp.gap_ratio < 1.0);
    }

    #[test]
    fn complex_leading_pair_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(matches!(stationary_pair(&[m], 1e-8), Err(Error::DegenerateStationarity(_))));
    }
}
