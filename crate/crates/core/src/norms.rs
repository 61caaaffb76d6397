//! Discrete inner product, norms and mass.
//!
//! The L² inner product carries trapezoid weights so magnitudes do not depend on the
//! mesh size. The H¹ and H² seminorms are plain `h^d`-weighted sums.

use crate::error::Result;
use crate::grid::Field;
use crate::ops::{backward_along, laplacian_vec, Direction};
use crate::scalar::Real;

pub fn inner_product<T: Real>(y: &Field<T>, z: &Field<T>) -> Result<T> {
    y.check_same_grid(z)?;
    let w = y.grid().weights();
    Ok(w.iter()
        .zip(y.values())
        .zip(z.values())
        .map(|((&w, &a), &b)| w * a * b)
        .sum())
}

pub fn norm_l2<T: Real>(z: &Field<T>) -> T {
    inner_product(z, z).expect("same grid").sqrt()
}

pub fn seminorm_h1<T: Real>(z: &Field<T>) -> T {
    let grid = z.grid();
    let mut dirs = vec![Direction::X];
    if grid.dim() == 2 {
        dirs.push(Direction::Y);
    }
    let sum: T = dirs
        .into_iter()
        .flat_map(|d| backward_along(grid, z.values(), d))
        .map(|v| v * v)
        .sum();
    (grid.cell_volume() * sum).sqrt()
}

/// Needs at least 3 nodes per axis (see [`crate::laplacian`]); returns NaN otherwise.
pub fn seminorm_h2<T: Real>(z: &Field<T>) -> T {
    let grid = z.grid();
    if grid.min_points() < 3 {
        return T::nan();
    }
    let sum: T = laplacian_vec(grid, z.values()).iter().map(|&v| v * v).sum();
    (grid.cell_volume() * sum).sqrt()
}

pub fn norm_max<T: Real>(z: &Field<T>) -> T {
    z.values().iter().fold(T::zero(), |m, &v| m.max(v.abs()))
}

/// Trapezoid-rule integral of the field over the domain.
pub fn mass<T: Real>(z: &Field<T>) -> T {
    z.grid()
        .weights()
        .iter()
        .zip(z.values())
        .map(|(&w, &v)| w * v)
        .sum()
}
