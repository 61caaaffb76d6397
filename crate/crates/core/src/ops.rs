//! Difference operators with zero-flux (mirror ghost node) boundary closure.
//!
//! On each axis the ghost values are `z[-1] := z[1]` and `z[n] := z[n-2]`, so the
//! boundary rows of the Laplacian read `2 (z[1] - z[0]) / h^2`. The same mirror
//! applied to `Δh z` closes the second boundary condition, which makes the
//! discrete bilaplacian exactly the square of the Laplacian.

use crate::error::{Error, Result};
use crate::grid::{Field, SpaceGrid};
use crate::scalar::Real;

/// Second difference along one line of `n` nodes spaced `stride` apart,
/// accumulated into `out`.
fn add_line_second_difference<T: Real>(
    z: &[T],
    out: &mut [T],
    start: usize,
    stride: usize,
    n: usize,
    inv_h2: T,
) {
    let two = T::lit(2.0);
    let at = |i: usize| start + i * stride;
    out[at(0)] = out[at(0)] + two * (z[at(1)] - z[at(0)]) * inv_h2;
    for i in 1..n - 1 {
        let (l, c, r) = (z[at(i - 1)], z[at(i)], z[at(i + 1)]);
        out[at(i)] = out[at(i)] + (l - two * c + r) * inv_h2;
    }
    let last = n - 1;
    out[at(last)] = out[at(last)] + two * (z[at(last - 1)] - z[at(last)]) * inv_h2;
}

/// `out = Δh z` for raw nodal slices. Caller guarantees at least 3 nodes per axis.
pub(crate) fn laplacian_into<T: Real>(grid: &SpaceGrid<T>, z: &[T], out: &mut [T]) {
    debug_assert_eq!(z.len(), grid.len());
    debug_assert_eq!(out.len(), grid.len());
    out.iter_mut().for_each(|v| *v = T::zero());
    let ax = grid.x_axis();
    let nx = ax.n;
    let inv_hx2 = (ax.h * ax.h).recip();
    for row in 0..grid.ny() {
        add_line_second_difference(z, out, row * nx, 1, nx, inv_hx2);
    }
    if let Some(ay) = grid.y_axis() {
        let inv_hy2 = (ay.h * ay.h).recip();
        for col in 0..nx {
            add_line_second_difference(z, out, col, nx, ay.n, inv_hy2);
        }
    }
}

pub(crate) fn laplacian_vec<T: Real>(grid: &SpaceGrid<T>, z: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); z.len()];
    laplacian_into(grid, z, &mut out);
    out
}

/// Discrete Neumann Laplacian: 3-point stencil in 1D, 5-point in 2D.
pub fn laplacian<T: Real>(z: &Field<T>) -> Result<Field<T>> {
    z.grid().require_min_points("laplacian", 3)?;
    Field::from_values(*z.grid(), laplacian_vec(z.grid(), z.values()))
}

/// Discrete bilaplacian `Δh Δh`.
pub fn bilaplacian<T: Real>(z: &Field<T>) -> Result<Field<T>> {
    z.grid().require_min_points("bilaplacian", 4)?;
    let lap = laplacian_vec(z.grid(), z.values());
    Field::from_values(*z.grid(), laplacian_vec(z.grid(), &lap))
}

/// Backward difference `(z_i - z_{i-1}) / h`; the first node sees its mirror ghost and yields 0.
pub fn diff_backward<T: Real>(z: &Field<T>) -> Result<Field<T>> {
    if z.grid().dim() != 1 {
        return Err(Error::NotOneDimensional {
            op: "diff_backward",
        });
    }
    z.grid().require_min_points("diff_backward", 2)?;
    Field::from_values(
        *z.grid(),
        backward_along(z.grid(), z.values(), Direction::X),
    )
}

#[derive(Clone, Copy)]
pub(crate) enum Direction {
    X,
    Y,
}

/// Backward differences along one axis; first node of every line is 0.
pub(crate) fn backward_along<T: Real>(grid: &SpaceGrid<T>, z: &[T], dir: Direction) -> Vec<T> {
    let nx = grid.nx();
    let mut out = vec![T::zero(); z.len()];
    match dir {
        Direction::X => {
            let inv_h = grid.x_axis().h.recip();
            for (k, o) in out.iter_mut().enumerate() {
                if k % nx != 0 {
                    *o = (z[k] - z[k - 1]) * inv_h;
                }
            }
        }
        Direction::Y => {
            let inv_h = grid.y_axis().expect("y axis").h.recip();
            for (k, o) in out.iter_mut().enumerate().skip(nx) {
                *o = (z[k] - z[k - nx]) * inv_h;
            }
        }
    }
    out
}
