//! Dense space–time Newton solve of the full discrete optimality system.
//!
//! Stacks `(Y^1..Y^Nt, P^0..P^{Nt−1})` and solves all state and adjoint equations
//! at once with an explicitly assembled dense Laplacian. Only meant as an oracle
//! for the sweep solver on tiny instances.

use crate::dense::{neumann_laplacian, DenseMatrix};
use crate::error::{Error, Result};
use crate::grid::{Field, Trajectory};
use crate::scalar::Real;
use crate::schemes::{f_eval, f_prime, AdjointVariant, SchemeKind};

use super::{control_from_adjoint, cost_functional, ProblemSpec, Solution};

pub const MONOLITHIC_MAX_UNKNOWNS: usize = 2000;

struct System<'a, T> {
    spec: &'a ProblemSpec<T>,
    m: usize,
    nt: usize,
    a: DenseMatrix<T>,
    a2: DenseMatrix<T>,
    y0: Vec<T>,
    targets: Vec<Vec<T>>,
}

impl<'a, T: Real> System<'a, T> {
    fn y<'z>(&'z self, z: &'z [T], n: usize) -> &'z [T] {
        if n == 0 {
            &self.y0
        } else {
            &z[(n - 1) * self.m..n * self.m]
        }
    }

    fn p<'z>(&self, z: &'z [T], n: usize) -> Option<&'z [T]> {
        (n < self.nt).then(|| &z[(self.nt + n) * self.m..(self.nt + n + 1) * self.m])
    }

    fn frozen(&self, n: usize) -> usize {
        match self.spec.adjoint_variant {
            AdjointVariant::CoeffAtN => n,
            AdjointVariant::CoeffAtN1 => n + 1,
        }
    }

    fn residual(&self, z: &[T]) -> Vec<T> {
        let (m, nt) = (self.m, self.nt);
        let dt = self.spec.time.dt();
        let e2 = self.spec.eps * self.spec.eps;
        let src = dt / self.spec.lambda;
        let mut r = vec![T::zero(); 2 * nt * m];
        for n in 0..nt {
            let (yn, y1) = (self.y(z, n), self.y(z, n + 1));
            let pn = self.p(z, n).expect("state block uses P^n with n < Nt");
            let a2y1 = self.a2.matvec(y1);
            let drift: Vec<T> = match self.spec.scheme {
                SchemeKind::S1 => {
                    let fy: Vec<T> = y1.iter().map(|&v| f_eval(v)).collect();
                    self.a.matvec(&fy)
                }
                SchemeKind::S2 => {
                    let w: Vec<T> = (0..m).map(|i| yn[i] * yn[i] * y1[i] - yn[i]).collect();
                    self.a.matvec(&w)
                }
                SchemeKind::S3 => {
                    let w: Vec<T> = (0..m)
                        .map(|i| yn[i] * yn[i] * yn[i] - T::lit(3.0) * yn[i] + T::lit(2.0) * y1[i])
                        .collect();
                    self.a.matvec(&w)
                }
            };
            for i in 0..m {
                r[n * m + i] = y1[i] - yn[i] - dt * (drift[i] - e2 * a2y1[i]) - src * pn[i];
            }

            let zero = vec![T::zero(); m];
            let p1 = self.p(z, n + 1).unwrap_or(&zero);
            let ys = self.y(z, self.frozen(n));
            let ap = self.a.matvec(pn);
            let a2p = self.a2.matvec(pn);
            let tgt = &self.targets[n + 1];
            for i in 0..m {
                r[(nt + n) * m + i] =
                    pn[i] - p1[i] - dt * (f_prime(ys[i]) * ap[i] - e2 * a2p[i] + tgt[i] - y1[i]);
            }
        }
        r
    }

    fn jacobian(&self, z: &[T]) -> DenseMatrix<T> {
        let (m, nt) = (self.m, self.nt);
        let dt = self.spec.time.dt();
        let e2 = self.spec.eps * self.spec.eps;
        let src = dt / self.spec.lambda;
        let (three, six) = (T::lit(3.0), T::lit(6.0));
        let mut j = DenseMatrix::zeros(2 * nt * m);
        let ycol = |n: usize| (n - 1) * m;
        let pcol = |n: usize| (nt + n) * m;
        for n in 0..nt {
            let (yn, y1) = (self.y(z, n), self.y(z, n + 1));
            let row = n * m;
            for i in 0..m {
                for k in 0..m {
                    let (aik, a2ik) = (self.a[(i, k)], self.a2[(i, k)]);
                    let d_next = match self.spec.scheme {
                        SchemeKind::S1 => -dt * aik * f_prime(y1[k]),
                        SchemeKind::S2 => -dt * aik * yn[k] * yn[k],
                        SchemeKind::S3 => -dt * aik * T::lit(2.0),
                    } + dt * e2 * a2ik;
                    j[(row + i, ycol(n + 1) + k)] = j[(row + i, ycol(n + 1) + k)] + d_next;
                    if n >= 1 {
                        let d_prev = match self.spec.scheme {
                            SchemeKind::S1 => T::zero(),
                            SchemeKind::S2 => -dt * aik * (T::lit(2.0) * yn[k] * y1[k] - T::one()),
                            SchemeKind::S3 => -dt * aik * (three * yn[k] * yn[k] - three),
                        };
                        j[(row + i, ycol(n) + k)] = j[(row + i, ycol(n) + k)] + d_prev;
                    }
                }
                j[(row + i, ycol(n + 1) + i)] = j[(row + i, ycol(n + 1) + i)] + T::one();
                if n >= 1 {
                    j[(row + i, ycol(n) + i)] = j[(row + i, ycol(n) + i)] - T::one();
                }
                j[(row + i, pcol(n) + i)] = -src;
            }

            let pn = self.p(z, n).expect("n < Nt");
            let ap = self.a.matvec(pn);
            let fz = self.frozen(n);
            let ys = self.y(z, fz);
            let row = (nt + n) * m;
            for i in 0..m {
                for k in 0..m {
                    j[(row + i, pcol(n) + k)] =
                        -dt * f_prime(ys[i]) * self.a[(i, k)] + dt * e2 * self.a2[(i, k)];
                }
                j[(row + i, pcol(n) + i)] = j[(row + i, pcol(n) + i)] + T::one();
                if n + 1 < nt {
                    j[(row + i, pcol(n + 1) + i)] = -T::one();
                }
                j[(row + i, ycol(n + 1) + i)] = j[(row + i, ycol(n + 1) + i)] + dt;
                if fz >= 1 {
                    j[(row + i, ycol(fz) + i)] =
                        j[(row + i, ycol(fz) + i)] - dt * six * ys[i] * ap[i];
                }
            }
        }
        j
    }
}

fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

/// Solves the stacked state/adjoint system by dense Newton to a residual of `1e-12`.
///
/// `sweeps_used` counts Newton iterations and `fp_residual_history` holds the
/// stacked residual norms.
pub fn solve_monolithic_tiny<T: Real>(spec: &ProblemSpec<T>) -> Result<Solution<T>> {
    spec.validate()?;
    let m = spec.grid.len();
    let nt = spec.time.n_steps();
    let unknowns = 2 * nt * m;
    if unknowns > MONOLITHIC_MAX_UNKNOWNS {
        return Err(Error::TooLarge {
            unknowns,
            limit: MONOLITHIC_MAX_UNKNOWNS,
        });
    }
    let a = neumann_laplacian(&spec.grid);
    let a2 = a.matmul(&a);
    let y0 = spec.initial_state()?;
    let targets = spec.target_trajectory()?;
    let sys = System {
        spec,
        m,
        nt,
        a,
        a2,
        y0: y0.values().to_vec(),
        targets: targets
            .levels()
            .iter()
            .map(|f| f.values().to_vec())
            .collect(),
    };

    let mut z: Vec<T> = Vec::with_capacity(unknowns);
    for _ in 0..nt {
        z.extend_from_slice(&sys.y0);
    }
    z.resize(unknowns, T::zero());

    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(64.0));
    let mut r = sys.residual(&z);
    let mut history = vec![max_abs(&r)];
    let max_iters = 50;
    while *history.last().expect("non-empty") > tol {
        if history.len() > max_iters {
            return Err(Error::NewtonDiverged {
                iterations: history.len() - 1,
                history: history.iter().map(|v| v.to_f64_lossy()).collect(),
            });
        }
        let neg: Vec<T> = r.iter().map(|&v| -v).collect();
        let delta = sys.jacobian(&z).solve(&neg)?;
        let rn = *history.last().expect("non-empty");
        let mut step = T::one();
        let mut trial;
        let mut r_trial;
        loop {
            trial = z
                .iter()
                .zip(&delta)
                .map(|(&a, &d)| a + step * d)
                .collect::<Vec<_>>();
            r_trial = sys.residual(&trial);
            if max_abs(&r_trial) < rn || step < T::lit(1e-3) {
                break;
            }
            step = step * T::lit(0.5);
        }
        let stalled = max_abs(&r_trial) >= rn;
        z = trial;
        r = r_trial;
        history.push(max_abs(&r));
        if stalled {
            return Err(Error::NewtonDiverged {
                iterations: history.len() - 1,
                history: history.iter().map(|v| v.to_f64_lossy()).collect(),
            });
        }
    }

    let grid = spec.grid;
    let mut ylev = vec![y0];
    let mut plev = Vec::with_capacity(nt + 1);
    for n in 1..=nt {
        ylev.push(Field::from_values(grid, sys.y(&z, n).to_vec())?);
    }
    for n in 0..nt {
        plev.push(Field::from_values(
            grid,
            sys.p(&z, n).expect("n < Nt").to_vec(),
        )?);
    }
    plev.push(Field::zeros(grid));
    let y = Trajectory::new(spec.time, ylev)?;
    let p = Trajectory::new(spec.time, plev)?;
    let u = control_from_adjoint(&p, spec.lambda);
    let cost = cost_functional(&y, &u, &targets, spec.lambda)?;
    Ok(Solution {
        y,
        p,
        u,
        cost,
        converged: true,
        sweeps_used: history.len() - 1,
        fp_residual_history: history,
        relaxation: T::one(),
        diagnostics: Vec::new(),
    })
}
