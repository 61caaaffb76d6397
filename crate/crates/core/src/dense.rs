//! Small dense matrices with partial-pivoting LU, used by the monolithic oracle.

use crate::error::{Error, Result};
use crate::grid::SpaceGrid;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * x[j]).sum())
            .collect()
    }

    /// Solves `self · x = b` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| {
                    a[i * n + k]
                        .abs()
                        .partial_cmp(&a[j * n + k].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(k);
            let piv = a[p * n + k];
            if piv == T::zero() || !piv.is_finite() {
                return Err(Error::Singular { column: k });
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                x.swap(k, p);
            }
            for i in k + 1..n {
                let l = a[i * n + k] / piv;
                if l == T::zero() {
                    continue;
                }
                for j in k..n {
                    a[i * n + j] = a[i * n + j] - l * a[k * n + j];
                }
                x[i] = x[i] - l * x[k];
            }
        }
        for k in (0..n).rev() {
            let s: T = (k + 1..n).map(|j| a[k * n + j] * x[j]).sum();
            x[k] = (x[k] - s) / a[k * n + k];
        }
        Ok(x)
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

/// Dense Neumann Laplacian, built row by row from the mirrored 3-point stencil
/// on each axis.
pub fn neumann_laplacian<T: Real>(grid: &SpaceGrid<T>) -> DenseMatrix<T> {
    let n = grid.len();
    let nx = grid.nx();
    let mut a = DenseMatrix::zeros(n);
    for k in 0..n {
        let (ix, iy) = (k % nx, k / nx);
        let mut axis = |i: usize, len: usize, stride: usize, h: T| {
            let s = (h * h).recip();
            // ghost neighbours reflect across the boundary node
            let left = if i == 0 { k + stride } else { k - stride };
            let right = if i + 1 == len { k - stride } else { k + stride };
            a[(k, left)] = a[(k, left)] + s;
            a[(k, right)] = a[(k, right)] + s;
            a[(k, k)] = a[(k, k)] - s - s;
        };
        axis(ix, nx, 1, grid.x_axis().h);
        if let Some(ay) = grid.y_axis() {
            axis(iy, ay.n, nx, ay.h);
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let mut m = DenseMatrix::<f64>::zeros(3);
        let rows = [[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]];
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        let x = m.solve(&[5.0, 3.0, 6.0]).unwrap();
        let back = m.matvec(&x);
        for (a, b) in back.iter().zip([5.0, 3.0, 6.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_detected() {
        assert!(DenseMatrix::<f64>::zeros(2).solve(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let g = SpaceGrid::<f64>::unit(2, 4).unwrap();
        let a = neumann_laplacian(&g);
        for i in 0..a.dim() {
            let s: f64 = (0..a.dim()).map(|j| a[(i, j)]).sum();
            assert!(s.abs() < 1e-10);
        }
    }
}
