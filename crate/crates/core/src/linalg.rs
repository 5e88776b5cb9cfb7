//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| c(x, 0.0))
}

/// Induced infinity norm (maximum absolute row sum).
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let mut ev: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigen-decomposition of a Hermitian matrix: `(eigenvalues, eigenvectors as columns)`.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let e = h.symmetric_eigen();
    (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
}

/// Largest absolute eigenvalue of a Hermitian matrix.
pub fn hermitian_norm(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m)
        .into_iter()
        .fold(0.0, |acc, x| acc.max(x.abs()))
}

/// The `k` right singular vectors with the smallest singular values, together
/// with all singular values sorted in decreasing order.
pub fn null_space_complex(m: &CMatrix, k: usize) -> Result<(CMatrix, Vec<f64>)> {
    let n = m.ncols();
    // Pad to square so that the full right singular basis is available.
    let sq = if m.nrows() < n {
        let mut p = CMatrix::zeros(n, n);
        p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = sq
        .try_svd(false, true, 1e-15, 10_000)
        .ok_or_else(|| Error::Numerical("singular value decomposition did not converge".into()))?;
    let v_t = svd.v_t.expect("requested v_t");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut basis = CMatrix::zeros(n, k);
    for (col, &idx) in order.iter().rev().take(k).enumerate() {
        let row = v_t.row(idx);
        for j in 0..n {
            basis[(j, col)] = row[j].conj();
        }
    }
    Ok((basis, sv))
}

/// Unit right null vector of a real matrix (smallest singular value).
pub fn null_vector_real(m: &DMatrix<f64>) -> Result<(DVector<f64>, f64)> {
    let n = m.ncols();
    let svd = m
        .clone()
        .try_svd(false, true, 1e-15, 10_000)
        .ok_or_else(|| Error::Numerical("singular value decomposition did not converge".into()))?;
    let v_t = svd.v_t.expect("requested v_t");
    let (idx, smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, s)| (i, *s))
        .ok_or_else(|| Error::Numerical("empty matrix".into()))?;
    let v = DVector::from_iterator(n, v_t.row(idx).iter().copied());
    Ok((v, smin))
}

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    let svd = m
        .clone()
        .try_svd(false, false, 1e-15, 10_000)
        .ok_or_else(|| Error::Numerical("singular value decomposition did not converge".into()))?;
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Optimal matching distance `min_g max_i |a_i - b_{g(i)}|` between two
/// equally sized multisets of complex numbers. Exhaustive for up to eight
/// entries; for larger inputs a greedy matching gives an upper bound.
pub fn matching_distance(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len(), "multisets must have equal size");
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    if n <= 8 {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            let d = (0..n).map(|i| (a[i] - b[p[i]]).norm()).fold(0.0, f64::max);
            if d < best {
                best = d;
            }
        });
        best
    } else {
        let mut used = vec![false; n];
        let mut worst: f64 = 0.0;
        for x in a {
            let (j, d) = b
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, y)| (j, (x - y).norm()))
                .min_by(|p, q| p.1.total_cmp(&q.1))
                .expect("unused entry remains");
            used[j] = true;
            worst = worst.max(d);
        }
        worst
    }
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_distance_finds_best_permutation() {
        let a = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)];
        let b = [c(-1.0, 0.1), c(1.0, 0.0), c(0.0, 1.0)];
        assert!((matching_distance(&a, &b) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn null_space_of_rank_one() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        let (v, sv) = null_space_complex(&m, 1).unwrap();
        assert!(sv[1] < 1e-14);
        assert!((&m * &v).norm() < 1e-14);
    }
}
