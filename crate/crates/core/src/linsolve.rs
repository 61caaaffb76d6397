//! Sparse assembly and direct factorization of the implicit-step matrices.
//!
//! Every left-hand side in the solvers has the form
//!
//! ```text
//! M = a·I − L + e·A²,   L = A·diag(c)  (coefficient inside Δh)
//!                       L = diag(c)·A  (coefficient outside Δh)
//! ```
//!
//! with `A` the mirrored Neumann Laplacian. Natural node ordering keeps `M`
//! banded (half-bandwidth 2 in 1D, `2·nx` in 2D), so a banded LU with partial
//! pivoting serves as the direct solver in both cases.

use crate::error::{Error, Result};
use crate::grid::{Field, SpaceGrid};
use crate::scalar::Real;

/// Coefficient multiplying the Laplacian term.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient<T> {
    Scalar(T),
    Nodal(Vec<T>),
}

impl<T: Real> Coefficient<T> {
    #[inline]
    fn at(&self, i: usize) -> T {
        match self {
            Coefficient::Scalar(c) => *c,
            Coefficient::Nodal(v) => v[i],
        }
    }

    fn all_finite(&self) -> bool {
        match self {
            Coefficient::Scalar(c) => c.is_finite(),
            Coefficient::Nodal(v) => v.iter().all(|c| c.is_finite()),
        }
    }
}

/// Where a nodal coefficient sits relative to the Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// `A·diag(c)`, as in `Δh(c·z)`.
    Inside,
    /// `diag(c)·A`, as in `c·Δh z`.
    Outside,
}

/// Square sparse matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> SparseOperator<T> {
    fn from_rows(rows: Vec<Vec<(usize, T)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (j, v) in row {
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        SparseOperator {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    /// Identity scaled by `a`.
    pub fn scaled_identity(n: usize, a: T) -> Self {
        Self::from_rows((0..n).map(|i| vec![(i, a)]).collect())
    }

    /// The mirrored Neumann Laplacian of `grid` as a matrix.
    pub fn laplacian(grid: &SpaceGrid<T>) -> Self {
        let n = grid.len();
        let nx = grid.nx();
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::with_capacity(5); n];
        let two = T::lit(2.0);
        let mut push_axis = |stride: usize, len: usize, h: T, pos: &dyn Fn(usize) -> usize| {
            let s = (h * h).recip();
            for k in 0..n {
                let i = pos(k);
                let row = &mut rows[k];
                if i == 0 {
                    row.push((k, -two * s));
                    row.push((k + stride, two * s));
                } else if i + 1 == len {
                    row.push((k - stride, two * s));
                    row.push((k, -two * s));
                } else {
                    row.push((k - stride, s));
                    row.push((k, -two * s));
                    row.push((k + stride, s));
                }
            }
        };
        let ax = *grid.x_axis();
        push_axis(1, ax.n, ax.h, &|k| k % nx);
        if let Some(ay) = grid.y_axis().copied() {
            push_axis(nx, ay.n, ay.h, &|k| k / nx);
        }
        for row in rows.iter_mut() {
            merge_row(row);
        }
        Self::from_rows(rows)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.row(i)
            .find(|&(c, _)| c == j)
            .map_or(T::zero(), |(_, v)| v)
    }

    /// Largest `|i − j|` over stored entries.
    pub fn half_bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn norm_inf(&self) -> T {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    /// Row-major dense copy, for tests and diagnostics on small systems.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = row[j] + v;
            }
        }
        d
    }

    /// Sparse product `self · other`.
    pub fn matmul(&self, other: &Self) -> Self {
        let mut acc = vec![T::zero(); other.n];
        let mut seen = vec![false; other.n];
        let mut touched = Vec::new();
        let rows = (0..self.n)
            .map(|i| {
                for (k, a) in self.row(i) {
                    for (j, b) in other.row(k) {
                        if !seen[j] {
                            seen[j] = true;
                            touched.push(j);
                        }
                        acc[j] = acc[j] + a * b;
                    }
                }
                touched.sort_unstable();
                let row = touched
                    .drain(..)
                    .map(|j| {
                        seen[j] = false;
                        (j, std::mem::replace(&mut acc[j], T::zero()))
                    })
                    .collect();
                row
            })
            .collect();
        Self::from_rows(rows)
    }
}

/// Sorts a row by column and sums duplicate entries.
fn merge_row<T: Real>(row: &mut Vec<(usize, T)>) {
    row.sort_by_key(|&(j, _)| j);
    let mut merged: Vec<(usize, T)> = Vec::with_capacity(row.len());
    for &(j, v) in row.iter() {
        match merged.last_mut() {
            Some((lj, lv)) if *lj == j => *lv = *lv + v,
            _ => merged.push((j, v)),
        }
    }
    *row = merged;
}

/// Builds `a·I − L + e·A²` on `grid`; see the module docs for `L`.
pub fn assemble<T: Real>(
    grid: &SpaceGrid<T>,
    identity: T,
    lap: &Coefficient<T>,
    placement: Placement,
    bilap: T,
) -> Result<SparseOperator<T>> {
    if !identity.is_finite() || !bilap.is_finite() || !lap.all_finite() {
        return Err(Error::NonFinite("operator assembly"));
    }
    if let Coefficient::Nodal(c) = lap {
        if c.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: c.len(),
            });
        }
    }
    grid.require_min_points("operator assembly", 3)?;
    let a = SparseOperator::laplacian(grid);
    let a2 = if bilap != T::zero() {
        Some(a.matmul(&a))
    } else {
        None
    };
    let rows = (0..grid.len())
        .map(|i| {
            let mut row: Vec<(usize, T)> = Vec::with_capacity(13);
            row.push((i, identity));
            for (j, v) in a.row(i) {
                let c = match placement {
                    Placement::Inside => lap.at(j),
                    Placement::Outside => lap.at(i),
                };
                row.push((j, -c * v));
            }
            if let Some(a2) = &a2 {
                row.extend(a2.row(i).map(|(j, v)| (j, bilap * v)));
            }
            merge_row(&mut row);
            row
        })
        .collect();
    Ok(SparseOperator::from_rows(rows))
}

/// Banded LU factorization with partial pivoting.
///
/// Row `r` stores columns `r − kl ..= r + ku + kl`; the extra `kl` columns hold
/// the fill-in that row interchanges create in `U`.
#[derive(Debug, Clone)]
pub struct FactoredOperator<T> {
    op: SparseOperator<T>,
    kl: usize,
    width: usize,
    lu: Vec<T>,
    pivots: Vec<usize>,
}

impl<T: Real> FactoredOperator<T> {
    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        r * self.width + (c + self.kl - r)
    }

    pub fn dimension(&self) -> usize {
        self.op.n
    }

    pub fn operator(&self) -> &SparseOperator<T> {
        &self.op
    }

    pub fn solve_slice(&self, rhs: &[T]) -> Result<Vec<T>> {
        let n = self.op.n;
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rhs.len(),
            });
        }
        let kl = self.kl;
        let ku2 = self.width - 1 - kl;
        let mut x = rhs.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != T::zero() {
                for i in k + 1..(k + kl + 1).min(n) {
                    x[i] = x[i] - self.lu[self.idx(i, k)] * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let base = self.idx(k, k);
            let end = (k + ku2 + 1).min(n);
            let s: T = self.lu[base + 1..base + (end - k)]
                .iter()
                .zip(&x[k + 1..end])
                .map(|(&u, &xj)| u * xj)
                .sum();
            x[k] = (x[k] - s) / self.lu[base];
        }
        debug_assert!(
            {
                let r = relative_residual(&self.op, &x, rhs);
                r <= residual_tolerance::<T>()
            },
            "direct solve residual above tolerance"
        );
        Ok(x)
    }
}

/// Normwise backward error `‖Mx − b‖∞ / (‖M‖∞‖x‖∞ + ‖b‖∞)`.
pub fn relative_residual<T: Real>(op: &SparseOperator<T>, x: &[T], b: &[T]) -> T {
    let mx = op.apply(x);
    let r = mx
        .iter()
        .zip(b)
        .fold(T::zero(), |m, (&a, &bb)| m.max((a - bb).abs()));
    let xn = x.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let bn = b.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let denom = op.norm_inf() * xn + bn;
    if denom == T::zero() {
        r
    } else {
        r / denom
    }
}

/// Acceptance bound for [`relative_residual`] after a direct solve.
pub fn residual_tolerance<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(64.0))
}

pub fn factorize<T: Real>(op: &SparseOperator<T>) -> Result<FactoredOperator<T>> {
    let n = op.n;
    let kl = op.half_bandwidth();
    let ku = kl;
    let width = 2 * kl + ku + 1;
    let mut f = FactoredOperator {
        op: op.clone(),
        kl,
        width,
        lu: vec![T::zero(); n * width],
        pivots: vec![0; n],
    };
    // Last column holding a nonzero in each (current) row; bounds the update work.
    let mut row_end = vec![0usize; n];
    for i in 0..n {
        for (j, v) in op.row(i) {
            let k = f.idx(i, j);
            f.lu[k] = f.lu[k] + v;
            row_end[i] = row_end[i].max(j);
        }
    }
    let scale = f.lu.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let tiny = scale * T::epsilon() * T::lit(1e-3);
    let span = kl + ku;
    for k in 0..n {
        let last_row = (k + kl).min(n - 1);
        let mut p = k;
        let mut best = f.lu[f.idx(k, k)].abs();
        for i in k + 1..=last_row {
            let v = f.lu[f.idx(i, k)].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if !(best > tiny) || !best.is_finite() {
            return Err(Error::Singular { column: k });
        }
        f.pivots[k] = p;
        if p != k {
            let last_col = row_end[k].max(row_end[p]).min(k + span);
            for j in k..=last_col {
                let (a, b) = (f.idx(k, j), f.idx(p, j));
                f.lu.swap(a, b);
            }
            row_end.swap(k, p);
        }
        let last_col = row_end[k].max(k);
        let pivot_at = f.idx(k, k);
        let pivot = f.lu[pivot_at];
        let len = last_col - k;
        for i in k + 1..=last_row {
            let lik_at = f.idx(i, k);
            let l = f.lu[lik_at] / pivot;
            f.lu[lik_at] = l;
            if l == T::zero() {
                continue;
            }
            let src = f.idx(k, k + 1);
            let dst = f.idx(i, k + 1);
            let (head, tail) = f.lu.split_at_mut(dst);
            let urow = &head[src..src + len];
            for (d, &u) in tail[..len].iter_mut().zip(urow) {
                *d = *d - l * u;
            }
            row_end[i] = row_end[i].max(last_col);
        }
    }
    Ok(f)
}

pub fn solve<T: Real>(f: &FactoredOperator<T>, rhs: &Field<T>) -> Result<Field<T>> {
    Field::from_values(*rhs.grid(), f.solve_slice(rhs.values())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> SpaceGrid<f64> {
        SpaceGrid::unit(1, n).unwrap()
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let g = grid(7);
        let m = assemble(&g, 1.0, &Coefficient::Scalar(0.0), Placement::Inside, 0.0).unwrap();
        let f = factorize(&m).unwrap();
        let b = Field::from_fn(g, |x, _| x.sin() + 0.3);
        assert_eq!(solve(&f, &b).unwrap(), b);
    }

    #[test]
    fn diagonal_solve_halves() {
        let f = factorize(&SparseOperator::scaled_identity(5, 2.0)).unwrap();
        let x = f.solve_slice(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(x, vec![0.5, 1.0, 1.5, 2.0, 2.5]);
    }

    #[test]
    fn operator_terms_vanish_on_constants() {
        let g = grid(6);
        let c = Coefficient::Nodal(vec![0.3, -1.0, 2.0, 0.5, 1.0, 4.0]);
        let outside = assemble(&g, 0.0, &c, Placement::Outside, 0.7).unwrap();
        let inside = assemble(&g, 0.0, &Coefficient::Scalar(0.3), Placement::Inside, 0.7).unwrap();
        for m in [outside, inside] {
            for v in m.apply(&[2.0; 6]) {
                assert!(v.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // Permutation-like matrix: [[0,1],[1,0]]
        let m = SparseOperator::from_rows(vec![vec![(1, 1.0)], vec![(0, 1.0)]]);
        let x = factorize(&m).unwrap().solve_slice(&[3.0, 4.0]).unwrap();
        assert_eq!(x, vec![4.0, 3.0]);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let g = grid(5);
        let m = assemble(&g, 0.0, &Coefficient::Scalar(1.0), Placement::Inside, 0.0).unwrap();
        assert!(matches!(factorize(&m), Err(Error::Singular { .. })));
    }

    #[test]
    fn non_finite_coefficients_rejected() {
        let g = grid(5);
        let r = assemble(
            &g,
            f64::NAN,
            &Coefficient::Scalar(1.0),
            Placement::Inside,
            0.0,
        );
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn bandwidth_matches_grid_dimension() {
        let g1 = grid(9);
        let m1 = assemble(&g1, 1.0, &Coefficient::Scalar(1.0), Placement::Inside, 1.0).unwrap();
        assert_eq!(m1.half_bandwidth(), 2);
        let g2 = SpaceGrid::<f64>::unit(2, 6).unwrap();
        let m2 = assemble(&g2, 1.0, &Coefficient::Scalar(1.0), Placement::Inside, 1.0).unwrap();
        assert_eq!(m2.half_bandwidth(), 12);
        // 13-point bilaplacian stencil at an interior node
        assert_eq!(m2.row(2 * 6 + 2).count(), 13);
    }

    #[test]
    fn dimension_mismatch_on_solve() {
        let f = factorize(&SparseOperator::scaled_identity(3, 1.0)).unwrap();
        assert!(f.solve_slice(&[1.0, 2.0]).is_err());
    }
}
