//! Uniform space and time grids, nodal fields and trajectories.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One uniform axis: `n` nodes from `a` to `b` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis<T> {
    pub a: T,
    pub b: T,
    pub n: usize,
    pub h: T,
}

impl<T: Real> Axis<T> {
    pub fn new(a: T, b: T, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidGrid("axis endpoints must be finite".into()));
        }
        if b <= a {
            return Err(Error::InvalidGrid(format!(
                "axis requires a < b, got a = {a}, b = {b}"
            )));
        }
        if n < 2 {
            return Err(Error::GridTooSmall {
                what: "axis",
                min: 2,
                got: n,
            });
        }
        let h = (b - a) / T::from_usize_lossy(n - 1);
        Ok(Axis { a, b, n, h })
    }

    /// Coordinate of the zero-based node `i`; the last node is exactly `b`.
    #[inline]
    pub fn coord(&self, i: usize) -> T {
        if i + 1 == self.n {
            self.b
        } else {
            self.a + T::from_usize_lossy(i) * self.h
        }
    }
}

/// Tensor-product uniform mesh in one or two dimensions.
///
/// Nodes of a 2D grid are stored row-major: index `iy * nx + ix`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceGrid<T> {
    x: Axis<T>,
    y: Option<Axis<T>>,
}

impl<T: Real> SpaceGrid<T> {
    pub fn new_1d(a: T, b: T, n: usize) -> Result<Self> {
        Ok(SpaceGrid {
            x: Axis::new(a, b, n)?,
            y: None,
        })
    }

    pub fn new_2d(x: (T, T, usize), y: (T, T, usize)) -> Result<Self> {
        Ok(SpaceGrid {
            x: Axis::new(x.0, x.1, x.2)?,
            y: Some(Axis::new(y.0, y.1, y.2)?),
        })
    }

    /// Unit interval (or square) with `n` nodes per axis.
    pub fn unit(dim: usize, n: usize) -> Result<Self> {
        match dim {
            1 => Self::new_1d(T::zero(), T::one(), n),
            2 => Self::new_2d((T::zero(), T::one(), n), (T::zero(), T::one(), n)),
            _ => Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {dim}"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        if self.y.is_some() {
            2
        } else {
            1
        }
    }

    pub fn x_axis(&self) -> &Axis<T> {
        &self.x
    }

    pub fn y_axis(&self) -> Option<&Axis<T>> {
        self.y.as_ref()
    }

    pub fn axes(&self) -> impl Iterator<Item = &Axis<T>> {
        std::iter::once(&self.x).chain(self.y.as_ref())
    }

    pub fn nx(&self) -> usize {
        self.x.n
    }

    pub fn ny(&self) -> usize {
        self.y.map_or(1, |a| a.n)
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Smallest node count over all axes.
    pub fn min_points(&self) -> usize {
        self.axes().map(|a| a.n).min().unwrap_or(0)
    }

    /// Cell volume `h` (1D) or `hx * hy` (2D).
    pub fn cell_volume(&self) -> T {
        self.axes().fold(T::one(), |acc, a| acc * a.h)
    }

    /// `(x, y)` coordinates of flat node index `k`; `y` is `None` in 1D.
    pub fn coords(&self, k: usize) -> (T, Option<T>) {
        let nx = self.nx();
        let (ix, iy) = (k % nx, k / nx);
        (self.x.coord(ix), self.y.map(|a| a.coord(iy)))
    }

    pub(crate) fn require_min_points(&self, what: &'static str, min: usize) -> Result<()> {
        let got = self.min_points();
        if got < min {
            return Err(Error::GridTooSmall { what, min, got });
        }
        Ok(())
    }

    /// Quadrature weight of every node: trapezoid rule per axis, tensor product in 2D.
    pub fn weights(&self) -> Vec<T> {
        let axis_weights = |a: &Axis<T>| -> Vec<T> {
            let half = a.h / T::lit(2.0);
            (0..a.n)
                .map(|i| if i == 0 || i + 1 == a.n { half } else { a.h })
                .collect()
        };
        let wx = axis_weights(&self.x);
        match &self.y {
            None => wx,
            Some(ay) => {
                let wy = axis_weights(ay);
                wy.iter()
                    .flat_map(|&wj| wx.iter().map(move |&wi| wi * wj))
                    .collect()
            }
        }
    }
}

/// Uniform partition of `[0, T]` into `n_steps` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T> {
    t_final: T,
    n_steps: usize,
    dt: T,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(t_final: T, n_steps: usize) -> Result<Self> {
        if !(t_final.is_finite() && t_final > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "T",
                reason: format!("final time must be positive and finite, got {t_final}"),
            });
        }
        if n_steps == 0 {
            return Err(Error::InvalidParameter {
                name: "n_steps",
                reason: "at least one time step is required".into(),
            });
        }
        Ok(TimeGrid {
            t_final,
            n_steps,
            dt: t_final / T::from_usize_lossy(n_steps),
        })
    }

    pub fn t_final(&self) -> T {
        self.t_final
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// `t_n = n * dt`, with `t_{Nt}` exactly `T`.
    pub fn time(&self, n: usize) -> T {
        if n == self.n_steps {
            self.t_final
        } else {
            T::from_usize_lossy(n) * self.dt
        }
    }

    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        (0..=self.n_steps).map(|n| self.time(n))
    }
}

/// Nodal values of one unknown at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    grid: SpaceGrid<T>,
    values: Vec<T>,
}

impl<T: Real> Field<T> {
    pub fn zeros(grid: SpaceGrid<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn constant(grid: SpaceGrid<T>, c: T) -> Self {
        Field {
            values: vec![c; grid.len()],
            grid,
        }
    }

    pub fn from_values(grid: SpaceGrid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Field { grid, values })
    }

    /// Samples `f(x, y)` at every node (`y` is `None` on 1D grids).
    pub fn from_fn(grid: SpaceGrid<T>, mut f: impl FnMut(T, Option<T>) -> T) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                let (x, y) = grid.coords(k);
                f(x, y)
            })
            .collect();
        Field { grid, values }
    }

    pub fn grid(&self) -> &SpaceGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scaled(&self, c: T) -> Self {
        self.map(|v| c * v)
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: T, other: &Self) -> Result<()> {
        self.check_same_grid(other)?;
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a = *a + c * b;
        }
        Ok(())
    }

    /// Max-norm of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs())))
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// Time-indexed sequence of fields, one per level `n = 0..=Nt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    time: TimeGrid<T>,
    levels: Vec<Field<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn new(time: TimeGrid<T>, levels: Vec<Field<T>>) -> Result<Self> {
        if levels.len() != time.n_steps() + 1 {
            return Err(Error::DimensionMismatch {
                expected: time.n_steps() + 1,
                got: levels.len(),
            });
        }
        if let Some(first) = levels.first() {
            if levels.iter().any(|f| f.grid() != first.grid()) {
                return Err(Error::GridMismatch);
            }
        }
        Ok(Trajectory { time, levels })
    }

    pub fn zeros(time: TimeGrid<T>, grid: SpaceGrid<T>) -> Self {
        Self::constant(time, grid, T::zero())
    }

    pub fn constant(time: TimeGrid<T>, grid: SpaceGrid<T>, c: T) -> Self {
        Trajectory {
            time,
            levels: vec![Field::constant(grid, c); time.n_steps() + 1],
        }
    }

    pub fn time_grid(&self) -> &TimeGrid<T> {
        &self.time
    }

    pub fn space_grid(&self) -> &SpaceGrid<T> {
        self.levels[0].grid()
    }

    pub fn level(&self, n: usize) -> &Field<T> {
        &self.levels[n]
    }

    pub fn levels(&self) -> &[Field<T>] {
        &self.levels
    }

    pub fn last(&self) -> &Field<T> {
        self.levels
            .last()
            .expect("trajectory has at least one level")
    }

    pub fn map(&self, f: impl Fn(T) -> T + Copy) -> Self {
        Trajectory {
            time: self.time,
            levels: self.levels.iter().map(|l| l.map(f)).collect(),
        }
    }

    /// `max_n max_i |self - other|`, the discrete L∞(0,T; L∞) distance.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        if self.levels.len() != other.levels.len() {
            return Err(Error::DimensionMismatch {
                expected: self.levels.len(),
                got: other.levels.len(),
            });
        }
        self.levels
            .iter()
            .zip(&other.levels)
            .try_fold(T::zero(), |m, (a, b)| Ok(m.max(a.max_abs_diff(b)?)))
    }

    /// `max_n max_i |value|`
    pub fn max_abs(&self) -> T {
        self.levels
            .iter()
            .flat_map(|l| l.values())
            .fold(T::zero(), |m, &v| m.max(v.abs()))
    }
}
