//! LU factorisation with partial pivoting for dense complex systems.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major complex LU factors `P A = L U` of a square matrix.
#[derive(Debug, Clone)]
pub struct ComplexLu<T> {
    n: usize,
    lu: Vec<Complex<T>>,
    perm: Vec<usize>,
}

impl<T: Real> ComplexLu<T> {
    /// Factorises the `n x n` row-major matrix `a`.
    pub fn factor(n: usize, mut a: Vec<Complex<T>>) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::Dimension(format!("{} entries for {n}x{n}", a.len())));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (pivot, mag) = (k..n)
                .map(|i| (i, a[i * n + k].norm()))
                .fold((k, T::neg_infinity()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if mag == T::zero() || !mag.is_finite() {
                return Err(Error::numerical(format!("singular pivot in column {k}")));
            }
            if pivot != k {
                for j in 0..n {
                    a.swap(k * n + j, pivot * n + j);
                }
                perm.swap(k, pivot);
            }
            let d = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / d;
                a[i * n + k] = f;
                if f == Complex::new(T::zero(), T::zero()) {
                    continue;
                }
                for j in k + 1..n {
                    let u = a[k * n + j];
                    a[i * n + j] -= f * u;
                }
            }
        }
        Ok(Self { n, lu: a, perm })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// Ratio of the largest to the smallest pivot magnitude; a cheap lower
    /// estimate of the condition number.
    pub fn pivot_ratio(&self) -> T {
        let mags = (0..self.n).map(|i| self.lu[i * self.n + i].norm());
        let (lo, hi) = mags.fold((T::infinity(), T::zero()), |(lo, hi), m| (lo.min(m), hi.max(m)));
        hi / lo
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [Complex<T>]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<Complex<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc / self.lu[i * n + i];
        }
        b.copy_from_slice(&x);
    }
}
