//! Small dense linear algebra for the Newton iterations.

use crate::scalar::Scalar;

/// Row-major square matrix.
#[derive(Debug, Clone)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = T::zero());
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.n + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.n + col] = value;
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.n + col] += value;
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.data[row * self.n..(row + 1) * self.n]
    }

    /// Solves `A x = b` in place (b is overwritten by x) with row
    /// equilibration and partial pivoting. The matrix is destroyed.
    pub fn solve_in_place(&mut self, b: &mut [T]) -> Result<(), SingularMatrix> {
        let n = self.n;
        assert_eq!(b.len(), n);
        for r in 0..n {
            let scale = self
                .row(r)
                .iter()
                .fold(T::zero(), |acc, v| acc.max(v.abs()));
            if scale == T::zero() || !scale.is_finite() {
                return Err(SingularMatrix { row: r });
            }
            let inv = T::one() / scale;
            for c in 0..n {
                self.data[r * n + c] *= inv;
            }
            b[r] *= inv;
        }
        let tiny = T::epsilon() * T::epsilon();
        for k in 0..n {
            let mut piv = k;
            let mut best = self.get(k, k).abs();
            for r in (k + 1)..n {
                let v = self.get(r, k).abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best <= tiny || !best.is_finite() {
                return Err(SingularMatrix { row: k });
            }
            if piv != k {
                for c in 0..n {
                    self.data.swap(k * n + c, piv * n + c);
                }
                b.swap(k, piv);
            }
            let pivot = self.get(k, k);
            for r in (k + 1)..n {
                let factor = self.get(r, k) / pivot;
                if factor == T::zero() {
                    continue;
                }
                for c in k..n {
                    let v = self.get(k, c);
                    self.data[r * n + c] -= factor * v;
                }
                let bk = b[k];
                b[r] -= factor * bk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for c in (k + 1)..n {
                acc -= self.get(k, c) * b[c];
            }
            b[k] = acc / self.get(k, k);
        }
        Ok(())
    }
}

/// Raised when elimination meets a zero pivot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("singular matrix at row {row}")]
pub struct SingularMatrix {
    pub row: usize,
}
