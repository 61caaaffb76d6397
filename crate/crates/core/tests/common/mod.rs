//! Dense reference implementations shared by the integration tests. Nothing here
//! calls the library's operators or solvers; matrices are built from the
//! mirrored stencil by hand and solved with nalgebra.

#![allow(dead_code)]

use ch_ocp::{Expr, Field, SchemeKind, SpaceGrid, Trajectory};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn ghost_laplacian_1d(z: &[f64], h: f64) -> Vec<f64> {
    let n = z.len();
    let mut ext = Vec::with_capacity(n + 2);
    ext.push(z[1]);
    ext.extend_from_slice(z);
    ext.push(z[n - 2]);
    (1..=n)
        .map(|i| (ext[i - 1] - 2.0 * ext[i] + ext[i + 1]) / (h * h))
        .collect()
}

/// Ghost-extended 2D Laplacian; `z` is row-major with `x` fastest.
pub fn ghost_laplacian_2d(z: &[f64], nx: usize, ny: usize, hx: f64, hy: f64) -> Vec<f64> {
    let at = |i: isize, j: isize| -> f64 {
        let i = if i < 0 {
            -i
        } else if i >= nx as isize {
            2 * (nx as isize - 1) - i
        } else {
            i
        };
        let j = if j < 0 {
            -j
        } else if j >= ny as isize {
            2 * (ny as isize - 1) - j
        } else {
            j
        };
        z[j as usize * nx + i as usize]
    };
    let mut out = vec![0.0; nx * ny];
    for j in 0..ny as isize {
        for i in 0..nx as isize {
            let c = at(i, j);
            out[j as usize * nx + i as usize] = (at(i - 1, j) - 2.0 * c + at(i + 1, j)) / (hx * hx)
                + (at(i, j - 1) - 2.0 * c + at(i, j + 1)) / (hy * hy);
        }
    }
    out
}

fn mirror_1d(n: usize, h: f64) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    let s = 1.0 / (h * h);
    for i in 0..n {
        a[(i, i)] = -2.0 * s;
        let left = if i == 0 { 1 } else { i - 1 };
        let right = if i == n - 1 { n - 2 } else { i + 1 };
        a[(i, left)] += s;
        a[(i, right)] += s;
    }
    a
}

/// Dense Neumann Laplacian assembled row by row from the mirrored stencil.
pub fn dense_laplacian(grid: &SpaceGrid<f64>) -> DMatrix<f64> {
    let ax = grid.x_axis();
    let ix = mirror_1d(ax.n, ax.h);
    match grid.y_axis() {
        None => ix,
        Some(ay) => {
            let iy = mirror_1d(ay.n, ay.h);
            let ex = DMatrix::<f64>::identity(ax.n, ax.n);
            let ey = DMatrix::<f64>::identity(ay.n, ay.n);
            ey.kronecker(&ix) + iy.kronecker(&ex)
        }
    }
}

pub fn f(y: f64) -> f64 {
    y * y * y - y
}

pub fn fp(y: f64) -> f64 {
    3.0 * y * y - 1.0
}

pub fn vecd(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

pub fn solve_dense(m: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    m.clone()
        .lu()
        .solve(b)
        .expect("dense oracle matrix is singular")
}

/// Newton on the expanded S1 residual with dense Jacobians, iterated to roundoff.
pub fn s1_step(
    a: &DMatrix<f64>,
    yn: &[f64],
    pn: &[f64],
    eps: f64,
    lambda: f64,
    dt: f64,
) -> Vec<f64> {
    let n = yn.len();
    let yn = vecd(yn);
    let pn = vecd(pn);
    let a2 = a * a;
    let mut y = yn.clone();
    for _ in 0..50 {
        let fy = y.map(f);
        let g = &y - &yn - dt * (a * &fy) + dt * eps * eps * (&a2 * &y) - (dt / lambda) * &pn;
        let d = DMatrix::from_diagonal(&y.map(fp));
        let jac = DMatrix::identity(n, n) - dt * a * d + dt * eps * eps * &a2;
        let delta = solve_dense(&jac, &(-g));
        y += &delta;
        if delta.amax() < 1e-15 {
            break;
        }
    }
    y.as_slice().to_vec()
}

pub fn s2_step(
    a: &DMatrix<f64>,
    yn: &[f64],
    pn: &[f64],
    eps: f64,
    lambda: f64,
    dt: f64,
) -> Vec<f64> {
    let n = yn.len();
    let ynv = vecd(yn);
    let d = DMatrix::from_diagonal(&ynv.map(|v| v * v));
    let m = DMatrix::identity(n, n) - dt * a * d + dt * eps * eps * (a * a);
    let rhs = &ynv - dt * (a * &ynv) + (dt / lambda) * vecd(pn);
    solve_dense(&m, &rhs).as_slice().to_vec()
}

pub fn s3_step(
    a: &DMatrix<f64>,
    yn: &[f64],
    pn: &[f64],
    eps: f64,
    lambda: f64,
    dt: f64,
) -> Vec<f64> {
    let n = yn.len();
    let ynv = vecd(yn);
    let m = DMatrix::identity(n, n) - 2.0 * dt * a + dt * eps * eps * (a * a);
    let cubic = ynv.map(|v| v * v * v - 3.0 * v);
    let rhs = &ynv + dt * (a * cubic) + (dt / lambda) * vecd(pn);
    solve_dense(&m, &rhs).as_slice().to_vec()
}

pub fn state_step(
    scheme: SchemeKind,
    a: &DMatrix<f64>,
    yn: &[f64],
    pn: &[f64],
    eps: f64,
    lambda: f64,
    dt: f64,
) -> Vec<f64> {
    match scheme {
        SchemeKind::S1 => s1_step(a, yn, pn, eps, lambda, dt),
        SchemeKind::S2 => s2_step(a, yn, pn, eps, lambda, dt),
        SchemeKind::S3 => s3_step(a, yn, pn, eps, lambda, dt),
    }
}

/// `ystar` is the state at which `f'` is frozen.
pub fn adjoint(
    a: &DMatrix<f64>,
    ystar: &[f64],
    yn1: &[f64],
    pn1: &[f64],
    target: &[f64],
    eps: f64,
    dt: f64,
) -> Vec<f64> {
    let n = ystar.len();
    let d = DMatrix::from_diagonal(&vecd(ystar).map(fp));
    let m = DMatrix::identity(n, n) - dt * d * a + dt * eps * eps * (a * a);
    let rhs = vecd(pn1) + dt * (vecd(target) - vecd(yn1));
    solve_dense(&m, &rhs).as_slice().to_vec()
}

pub fn sample(e: &Expr, grid: &SpaceGrid<f64>, t: f64) -> Vec<f64> {
    (0..grid.len())
        .map(|k| {
            let (x, y) = grid.coords(k);
            e.evaluate(x, y, t).unwrap()
        })
        .collect()
}

pub fn random_vec<R: Rng>(rng: &mut R, n: usize, amp: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-amp..amp)).collect()
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn traj_diff(t: &Trajectory<f64>, levels: &[Vec<f64>]) -> f64 {
    assert_eq!(t.levels().len(), levels.len());
    t.levels()
        .iter()
        .zip(levels)
        .map(|(f, l)| max_diff(f.values(), l))
        .fold(0.0, f64::max)
}

pub fn field(grid: &SpaceGrid<f64>, v: Vec<f64>) -> Field<f64> {
    Field::from_values(*grid, v).unwrap()
}
