//! Non-negative least squares by the Lawson–Hanson active-set method.

use nalgebra::{DMatrix, DVector};

/// Solution of `min ‖A c − b‖₂` subject to `c ≥ 0`.
#[derive(Clone, Debug)]
pub struct NnlsSolution {
    pub coefficients: DVector<f64>,
    pub residual: f64,
    pub iterations: usize,
}

pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> NnlsSolution {
    let (m, n) = a.shape();
    assert_eq!(b.len(), m, "right-hand side has the wrong length");
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let scale = a.amax().max(f64::MIN_POSITIVE) * b.amax().max(f64::MIN_POSITIVE);
    let tol = 1e-13 * scale * (m.max(n) as f64);
    let max_iter = 3 * n + 50;
    let mut iterations = 0;

    loop {
        let r = b - a * &x;
        let w = a.transpose() * &r;
        let candidate = (0..n).filter(|&j| !passive[j] && w[j] > tol).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        if iterations >= max_iter {
            break;
        }
        passive[j] = true;

        loop {
            iterations += 1;
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let z_p = solve_ls(a, b, &idx);
            if idx.iter().zip(z_p.iter()).all(|(_, &v)| v > 0.0) {
                for (k, &i) in idx.iter().enumerate() {
                    x[i] = z_p[k];
                }
                break;
            }
            // Step back towards the feasible region until a coefficient hits zero.
            let mut alpha = f64::INFINITY;
            for (k, &i) in idx.iter().enumerate() {
                if z_p[k] <= 0.0 {
                    let step = x[i] / (x[i] - z_p[k]);
                    alpha = alpha.min(step);
                }
            }
            for (k, &i) in idx.iter().enumerate() {
                x[i] += alpha * (z_p[k] - x[i]);
            }
            for &i in &idx {
                if x[i] <= tol.max(1e-300) {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
            if iterations >= max_iter {
                break;
            }
        }
        if iterations >= max_iter {
            break;
        }
    }
    let residual = (b - a * &x).norm();
    NnlsSolution { coefficients: x, residual, iterations }
}

/// Unconstrained least squares on the columns in `idx`.
fn solve_ls(a: &DMatrix<f64>, b: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    let sub = a.select_columns(idx.iter());
    let svd = sub.svd(true, true);
    svd.solve(b, 1e-14 * svd.singular_values.max().max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DVector::zeros(idx.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_non_negative_combination() {
        let a = DMatrix::from_row_slice(3, 4, &[1.0, 0.0, 1.0, 2.0, 0.0, 1.0, 1.0, 0.5, 1.0, 1.0, 0.0, 0.1]);
        let c = DVector::from_row_slice(&[0.5, 0.0, 2.0, 0.0]);
        let b = &a * &c;
        let s = nnls(&a, &b);
        assert!(s.residual < 1e-12);
        assert!(s.coefficients.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn outside_point_has_positive_residual() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let b = DVector::from_row_slice(&[-1.0, 2.0]);
        let s = nnls(&a, &b);
        assert!((s.residual - 1.0).abs() < 1e-12);
        assert!((s.coefficients[1] - 2.0).abs() < 1e-12);
    }
}
