//! Small dense linear algebra: Gaussian elimination with partial pivoting.

use crate::scalar::Scalar;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = self.data[i * self.n + j] + v;
    }

    /// Solve `A x = b`, consuming a copy of `A`. `None` when a pivot vanishes
    /// relative to the largest matrix entry.
    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if scale == T::zero() || !scale.is_finite() {
            return if n == 0 { Some(x) } else { None };
        }
        let tol = scale * T::epsilon() * T::from_usize_lossy(n.max(1));
        for k in 0..n {
            let (p, pv) = (k..n)
                .map(|r| (r, a[r * n + k].abs()))
                .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pv <= tol {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                x.swap(k, p);
            }
            let piv = a[k * n + k];
            for r in k + 1..n {
                let f = a[r * n + k] / piv;
                if f == T::zero() {
                    continue;
                }
                for j in k..n {
                    a[r * n + j] = a[r * n + j] - f * a[k * n + j];
                }
                x[r] = x[r] - f * x[k];
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..n {
                s = s - a[k * n + j] * x[j];
            }
            x[k] = s / a[k * n + k];
        }
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}

/// Thomas algorithm for a tridiagonal system; `lower[0]` and `upper[n-1]` are ignored.
pub fn solve_tridiagonal<T: Scalar>(lower: &[T], diag: &[T], upper: &[T], rhs: &[T]) -> Vec<T> {
    let n = diag.len();
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    if n == 0 {
        return d;
    }
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / m } else { T::zero() };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        d[i] = d[i] - c[i] * d[i + 1];
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_pivoting_system() {
        // First pivot is zero; needs a row swap.
        let a = Matrix::from_fn(3, |i, j| [[0.0f64, 2.0, 1.0], [1.0, 1.0, 1.0], [2.0, 1.0, 3.0]][i][j]);
        let x = a.solve(&[5.0, 4.0, 7.0]).unwrap();
        for (got, want) in x.iter().zip([1.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_is_detected() {
        let a = Matrix::from_fn(2, |i, j| [[1.0, 2.0], [2.0, 4.0]][i][j]);
        assert!(a.solve(&[1.0, 2.0]).is_none());
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let lower = [0.0f64, 1.0, 1.0, 1.0];
        let diag = [4.0, 4.0, 4.0, 4.0];
        let upper = [1.0, 1.0, 1.0, 0.0];
        let rhs = [1.0, 2.0, 3.0, 4.0];
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs);
        let dense = Matrix::from_fn(4, |i, j| {
            if i == j {
                4.0
            } else if i.abs_diff(j) == 1 {
                1.0
            } else {
                0.0
            }
        });
        let y = dense.solve(&rhs).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
