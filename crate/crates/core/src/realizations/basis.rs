use nalgebra::DVector;

use crate::linalg::{c, CMatrix};

/// Orthonormal basis of the Hermitian `d×d` matrices under `⟨A, B⟩ = Tr(AB)`:
/// `I/√d`, then the generalized Gell-Mann matrices ordered symmetric,
/// antisymmetric, diagonal.
#[derive(Clone, Debug)]
pub struct HermitianBasis {
    dim: usize,
    elements: Vec<CMatrix>,
}

impl HermitianBasis {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "Hilbert dimension must be positive");
        let mut elements = Vec::with_capacity(dim * dim);
        elements.push(CMatrix::identity(dim, dim) * c(1.0 / (dim as f64).sqrt(), 0.0));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for j in 0..dim {
            for k in j + 1..dim {
                let mut m = CMatrix::zeros(dim, dim);
                m[(j, k)] = c(s, 0.0);
                m[(k, j)] = c(s, 0.0);
                elements.push(m);
            }
        }
        for j in 0..dim {
            for k in j + 1..dim {
                let mut m = CMatrix::zeros(dim, dim);
                m[(j, k)] = c(0.0, -s);
                m[(k, j)] = c(0.0, s);
                elements.push(m);
            }
        }
        for l in 1..dim {
            let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
            let mut m = CMatrix::zeros(dim, dim);
            for j in 0..l {
                m[(j, j)] = c(norm, 0.0);
            }
            m[(l, l)] = c(-(l as f64) * norm, 0.0);
            elements.push(m);
        }
        Self { dim, elements }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    /// Real coordinates `Re Tr(B_i A)`; exact for Hermitian `A`.
    pub fn coordinates(&self, a: &CMatrix) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.elements.iter().map(|b| trace_product(b, a).re))
    }

    /// Complex coordinates `Tr(B_i A)` of an arbitrary matrix.
    pub fn complex_coordinates(&self, a: &CMatrix) -> Vec<num_complex::Complex64> {
        self.elements.iter().map(|b| trace_product(b, a)).collect()
    }

    pub fn from_coordinates(&self, x: &DVector<f64>) -> CMatrix {
        self.elements
            .iter()
            .zip(x.iter())
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, (b, &xi)| acc + b * c(xi, 0.0))
    }
}

/// `Tr(AB)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> num_complex::Complex64 {
    let n = a.nrows();
    let mut acc = c(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_is_orthonormal_and_hermitian() {
        for d in 1..=4 {
            let b = HermitianBasis::new(d);
            assert_eq!(b.len(), d * d);
            for (i, x) in b.elements().iter().enumerate() {
                assert!((x - x.adjoint()).norm() < 1e-15);
                for (j, y) in b.elements().iter().enumerate() {
                    let ip = trace_product(x, y);
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - c(expect, 0.0)).norm() < 1e-14, "d={d} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn coordinates_round_trip() {
        let b = HermitianBasis::new(3);
        let mut h = CMatrix::zeros(3, 3);
        h[(0, 0)] = c(0.5, 0.0);
        h[(0, 2)] = c(0.1, -0.2);
        h[(2, 0)] = c(0.1, 0.2);
        h[(1, 1)] = c(-0.3, 0.0);
        let x = b.coordinates(&h);
        assert!((b.from_coordinates(&x) - h).norm() < 1e-14);
    }
}
