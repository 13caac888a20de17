//! Tridiagonal factorization shared by the elliptic solves and the Cayley step.

use std::ops::{Div, Mul, Sub};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("zero pivot at row {0}")]
    ZeroPivot(usize),
    #[error("dimension mismatch: matrix {matrix}, vector {vector}")]
    Dimension { matrix: usize, vector: usize },
}

pub trait Scalar: Copy + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> {
    fn is_zero_pivot(&self) -> bool;
}

impl Scalar for f64 {
    fn is_zero_pivot(&self) -> bool {
        *self == 0.0 || !self.is_finite()
    }
}

impl Scalar for num_complex::Complex64 {
    fn is_zero_pivot(&self) -> bool {
        self.norm_sqr() == 0.0 || !self.is_finite()
    }
}

/// LU factors of a tridiagonal matrix (Thomas algorithm, no pivoting).
///
/// Only used for matrices whose Hermitian part is positive definite, where
/// elimination without pivoting is stable.
#[derive(Debug, Clone)]
pub struct Tridiagonal<T> {
    lower: Vec<T>,
    upper: Vec<T>,
    pivots: Vec<T>,
}

impl<T: Scalar> Tridiagonal<T> {
    /// `lower[i]` couples row `i+1` to column `i`, `upper[i]` row `i` to
    /// column `i+1`.
    pub fn factor(lower: Vec<T>, diag: Vec<T>, upper: Vec<T>) -> Result<Self, LinalgError> {
        let n = diag.len();
        if lower.len() + 1 != n || upper.len() + 1 != n {
            return Err(LinalgError::Dimension { matrix: n, vector: lower.len() + 1 });
        }
        let mut pivots = diag;
        // pivots[i] <- d_i - l_{i-1} u_{i-1} / pivots[i-1]
        for i in 0..n {
            if i > 0 {
                let m = lower[i - 1] / pivots[i - 1];
                pivots[i] = pivots[i] - m * upper[i - 1];
            }
            if pivots[i].is_zero_pivot() {
                return Err(LinalgError::ZeroPivot(i));
            }
        }
        Ok(Self { lower, upper, pivots })
    }

    pub fn len(&self) -> usize {
        self.pivots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pivots.is_empty()
    }

    pub fn solve_in_place(&self, rhs: &mut [T]) -> Result<(), LinalgError> {
        let n = self.len();
        if rhs.len() != n {
            return Err(LinalgError::Dimension { matrix: n, vector: rhs.len() });
        }
        for i in 1..n {
            let m = self.lower[i - 1] / self.pivots[i - 1];
            rhs[i] = rhs[i] - m * rhs[i - 1];
        }
        rhs[n - 1] = rhs[n - 1] / self.pivots[n - 1];
        for i in (0..n - 1).rev() {
            rhs[i] = (rhs[i] - self.upper[i] * rhs[i + 1]) / self.pivots[i];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn solves_real_system() {
        // [2 -1 0; -1 2 -1; 0 -1 2] x = [1 0 1] -> x = [1 1 1]
        let t = Tridiagonal::factor(vec![-1.0, -1.0], vec![2.0, 2.0, 2.0], vec![-1.0, -1.0]).unwrap();
        let mut x = vec![1.0, 0.0, 1.0];
        t.solve_in_place(&mut x).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn solves_complex_shifted_system() {
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let n = 50;
        let lower = vec![-0.3 * i; n - 1];
        let upper = lower.clone();
        let diag = vec![one + 0.6 * i; n];
        let t = Tridiagonal::factor(lower.clone(), diag.clone(), upper.clone()).unwrap();
        let x: Vec<Complex64> = (0..n).map(|k| Complex64::new(k as f64, 1.0 / (k as f64 + 1.0))).collect();
        let mut b: Vec<Complex64> = (0..n)
            .map(|k| {
                let mut s = diag[k] * x[k];
                if k > 0 {
                    s += lower[k - 1] * x[k - 1];
                }
                if k + 1 < n {
                    s += upper[k] * x[k + 1];
                }
                s
            })
            .collect();
        t.solve_in_place(&mut b).unwrap();
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn reports_zero_pivot() {
        assert!(matches!(
            Tridiagonal::factor(vec![1.0], vec![1.0, 1.0], vec![1.0]),
            Err(LinalgError::ZeroPivot(1))
        ));
    }
}
