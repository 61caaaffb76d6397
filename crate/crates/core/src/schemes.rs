//! One implicit step of the state equation (schemes S1, S2, S3) and one backward
//! step of the adjoint equation.
//!
//! All three state schemes substitute the control by `P^n / λ` and close with the
//! same adjoint step. S1 is nonlinear and solved by Newton's method; S2 lags the
//! cubic coefficient and S3 splits it explicitly, so both need a single linear
//! solve, with the S3 matrix constant over a run.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::{Field, SpaceGrid};
use crate::linsolve::{assemble, factorize, solve, Coefficient, FactoredOperator, Placement};
use crate::norms::norm_max;
use crate::ops::laplacian_vec;
use crate::scalar::Real;

#[inline]
pub fn f_eval<T: Real>(y: T) -> T {
    y * y * y - y
}

#[inline]
pub fn f_prime<T: Real>(y: T) -> T {
    T::lit(3.0) * y * y - T::one()
}

#[inline]
pub fn f_tilde<T: Real>(y: T) -> T {
    y * y * y
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    /// Fully implicit nonlinear state step.
    S1,
    /// Linear step with the coefficient `(Y^n)^2` lagged inside the Laplacian.
    S2,
    /// Linear step with constant matrix `I − 2δt·Δh + δt ε² Δh²`.
    S3,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [SchemeKind::S1, SchemeKind::S2, SchemeKind::S3];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::S1 => "s1",
            SchemeKind::S2 => "s2",
            SchemeKind::S3 => "s3",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s1" => Some(SchemeKind::S1),
            "s2" => Some(SchemeKind::S2),
            "s3" => Some(SchemeKind::S3),
            _ => None,
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Time level at which `f'(Y)` is frozen in the adjoint step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdjointVariant {
    #[default]
    CoeffAtN,
    CoeffAtN1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig<T> {
    /// Stopping tolerance on the max-norm of the step residual.
    pub residual_tol: T,
    pub max_iters: usize,
}

impl<T: Real> Default for NewtonConfig<T> {
    fn default() -> Self {
        NewtonConfig {
            residual_tol: T::lit(1e-10),
            max_iters: 25,
        }
    }
}

impl<T: Real> NewtonConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "newton.tol",
                reason: "must be positive".into(),
            });
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter {
                name: "newton.max_iters",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Physical and discretization parameters shared by every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams<T> {
    pub eps: T,
    pub lambda: T,
    pub dt: T,
}

impl<T: Real> StepParams<T> {
    pub fn new(eps: T, lambda: T, dt: T) -> Result<Self> {
        let positive = |name: &'static str, v: T| {
            if v.is_finite() && v > T::zero() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                })
            }
        };
        positive("epsilon", eps)?;
        positive("lambda", lambda)?;
        positive("dt", dt)?;
        Ok(StepParams { eps, lambda, dt })
    }

    pub(crate) fn bilap(&self) -> T {
        self.dt * self.eps * self.eps
    }

    /// `δt > ε²/8`: outside the step-size range covered by the error analysis.
    pub fn exceeds_stability_hint(&self) -> bool {
        self.dt > self.eps * self.eps / T::lit(8.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport<T> {
    /// Newton updates performed; 0 for the linear schemes.
    pub newton_iters: usize,
    pub final_residual: T,
    /// Max-norm residual before each Newton update and after the last one.
    pub residual_history: Vec<T>,
    /// Observed `max |f'(Y^{n+1})|`.
    pub fprime_max: T,
}

fn fprime_max<T: Real>(y: &Field<T>) -> T {
    y.values()
        .iter()
        .fold(T::zero(), |m, &v| m.max(f_prime(v).abs()))
}

fn linear_report<T: Real>(y: &Field<T>) -> StepReport<T> {
    StepReport {
        newton_iters: 0,
        final_residual: T::zero(),
        residual_history: Vec::new(),
        fprime_max: fprime_max(y),
    }
}

fn check_pair<T: Real>(a: &Field<T>, b: &Field<T>) -> Result<()> {
    a.check_same_grid(b)?;
    a.grid().require_min_points("time step", 4)
}

/// Residual `Y − Y^n − δt·Δh(f(Y) − ε²ΔhY) − (δt/λ)P^n` of the S1 state step.
///
/// Evaluating the chemical potential first avoids the cancellation in `Δh²Y`.
fn s1_residual<T: Real>(
    grid: &SpaceGrid<T>,
    y: &[T],
    yn: &[T],
    pn: &[T],
    p: &StepParams<T>,
) -> Vec<T> {
    let eps2 = p.eps * p.eps;
    let lap_y = laplacian_vec(grid, y);
    let mu: Vec<T> = y
        .iter()
        .zip(&lap_y)
        .map(|(&v, &l)| f_eval(v) - eps2 * l)
        .collect();
    let lap_mu = laplacian_vec(grid, &mu);
    let src = p.dt / p.lambda;
    (0..y.len())
        .map(|i| y[i] - yn[i] - p.dt * lap_mu[i] - src * pn[i])
        .collect()
}

fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

/// Nonlinear state step: Newton on `G(Y) = 0` from the initial guess `Y^n`.
pub fn state_step_s1<T: Real>(
    yn: &Field<T>,
    pn: &Field<T>,
    params: &StepParams<T>,
    cfg: &NewtonConfig<T>,
) -> Result<(Field<T>, StepReport<T>)> {
    check_pair(yn, pn)?;
    let grid = *yn.grid();
    let (ynv, pnv) = (yn.values(), pn.values());
    let mut y = ynv.to_vec();
    let mut r = s1_residual(&grid, &y, ynv, pnv, params);
    let mut rn = max_abs(&r);
    let mut history = vec![rn];
    let mut iters = 0;
    while !(rn <= cfg.residual_tol) {
        if iters == cfg.max_iters || !rn.is_finite() {
            return Err(Error::NewtonDiverged {
                iterations: iters,
                history: history.iter().map(|v| v.to_f64_lossy()).collect(),
            });
        }
        let coeff = Coefficient::Nodal(y.iter().map(|&v| params.dt * f_prime(v)).collect());
        let jac = assemble(&grid, T::one(), &coeff, Placement::Inside, params.bilap())?;
        let neg_r: Vec<T> = r.iter().map(|&v| -v).collect();
        let delta = factorize(&jac)?.solve_slice(&neg_r)?;
        let mut trial: Vec<T> = y.iter().zip(&delta).map(|(&a, &d)| a + d).collect();
        let mut r_trial = s1_residual(&grid, &trial, ynv, pnv, params);
        if max_abs(&r_trial) > rn {
            let half = T::lit(0.5);
            trial = y.iter().zip(&delta).map(|(&a, &d)| a + half * d).collect();
            r_trial = s1_residual(&grid, &trial, ynv, pnv, params);
        }
        y = trial;
        r = r_trial;
        rn = max_abs(&r);
        history.push(rn);
        iters += 1;
    }
    let y = Field::from_values(grid, y)?;
    let report = StepReport {
        newton_iters: iters,
        final_residual: rn,
        residual_history: history,
        fprime_max: fprime_max(&y),
    };
    Ok((y, report))
}

/// Linear state step with `(Y^n)^2` inside the Laplacian.
pub fn state_step_s2<T: Real>(
    yn: &Field<T>,
    pn: &Field<T>,
    params: &StepParams<T>,
) -> Result<(Field<T>, StepReport<T>)> {
    check_pair(yn, pn)?;
    let grid = *yn.grid();
    let dt = params.dt;
    let coeff = Coefficient::Nodal(yn.values().iter().map(|&v| dt * v * v).collect());
    let m = assemble(&grid, T::one(), &coeff, Placement::Inside, params.bilap())?;
    let lap_yn = laplacian_vec(&grid, yn.values());
    let src = dt / params.lambda;
    let rhs: Vec<T> = (0..grid.len())
        .map(|i| yn.values()[i] - dt * lap_yn[i] + src * pn.values()[i])
        .collect();
    let y = Field::from_values(grid, factorize(&m)?.solve_slice(&rhs)?)?;
    let report = linear_report(&y);
    Ok((y, report))
}

/// Factorization of the constant S3 matrix `I − 2δt·Δh + δt ε² Δh²`.
pub fn s3_operator<T: Real>(
    grid: &SpaceGrid<T>,
    params: &StepParams<T>,
) -> Result<FactoredOperator<T>> {
    let m = assemble(
        grid,
        T::one(),
        &Coefficient::Scalar(T::lit(2.0) * params.dt),
        Placement::Inside,
        params.bilap(),
    )?;
    factorize(&m)
}

/// Linear state step with the cubic split explicitly; pass `factored` from
/// [`s3_operator`] to reuse one factorization across a run.
pub fn state_step_s3<T: Real>(
    yn: &Field<T>,
    pn: &Field<T>,
    params: &StepParams<T>,
    factored: Option<&FactoredOperator<T>>,
) -> Result<(Field<T>, StepReport<T>)> {
    check_pair(yn, pn)?;
    let grid = *yn.grid();
    let owned;
    let op = match factored {
        Some(f) => {
            if f.dimension() != grid.len() {
                return Err(Error::DimensionMismatch {
                    expected: grid.len(),
                    got: f.dimension(),
                });
            }
            f
        }
        None => {
            owned = s3_operator(&grid, params)?;
            &owned
        }
    };
    let dt = params.dt;
    let three = T::lit(3.0);
    let explicit: Vec<T> = yn
        .values()
        .iter()
        .map(|&v| f_tilde(v) - three * v)
        .collect();
    let lap = laplacian_vec(&grid, &explicit);
    let src = dt / params.lambda;
    let rhs: Vec<T> = (0..grid.len())
        .map(|i| yn.values()[i] + dt * lap[i] + src * pn.values()[i])
        .collect();
    let y = Field::from_values(grid, op.solve_slice(&rhs)?)?;
    let report = linear_report(&y);
    Ok((y, report))
}

/// Backward adjoint step: solves
/// `[I − δt·diag(f'(Y*))·Δh + δt ε² Δh²] P^n = P^{n+1} + δt (ŷ^{n+1} − Y^{n+1})`.
pub fn adjoint_step<T: Real>(
    yn: &Field<T>,
    yn1: &Field<T>,
    pn1: &Field<T>,
    target_n1: &Field<T>,
    eps: T,
    dt: T,
    variant: AdjointVariant,
) -> Result<Field<T>> {
    check_pair(yn, yn1)?;
    check_pair(yn, pn1)?;
    check_pair(yn, target_n1)?;
    let grid = *yn.grid();
    let frozen = match variant {
        AdjointVariant::CoeffAtN => yn,
        AdjointVariant::CoeffAtN1 => yn1,
    };
    let coeff = Coefficient::Nodal(frozen.values().iter().map(|&v| dt * f_prime(v)).collect());
    let m = assemble(&grid, T::one(), &coeff, Placement::Outside, dt * eps * eps)?;
    let rhs: Vec<T> = (0..grid.len())
        .map(|i| pn1.values()[i] + dt * (target_n1.values()[i] - yn1.values()[i]))
        .collect();
    solve(&factorize(&m)?, &Field::from_values(grid, rhs)?)
}

/// Runs the chosen state scheme, holding the S3 factorization for the whole run.
#[derive(Debug, Clone)]
pub struct StateStepper<T> {
    scheme: SchemeKind,
    params: StepParams<T>,
    newton: NewtonConfig<T>,
    s3: Option<FactoredOperator<T>>,
}

impl<T: Real> StateStepper<T> {
    pub fn new(
        scheme: SchemeKind,
        grid: &SpaceGrid<T>,
        params: StepParams<T>,
        newton: NewtonConfig<T>,
    ) -> Result<Self> {
        let s3 = match scheme {
            SchemeKind::S3 => Some(s3_operator(grid, &params)?),
            _ => None,
        };
        Ok(StateStepper {
            scheme,
            params,
            newton,
            s3,
        })
    }

    pub fn scheme(&self) -> SchemeKind {
        self.scheme
    }

    pub fn step(&self, yn: &Field<T>, pn: &Field<T>) -> Result<(Field<T>, StepReport<T>)> {
        match self.scheme {
            SchemeKind::S1 => state_step_s1(yn, pn, &self.params, &self.newton),
            SchemeKind::S2 => state_step_s2(yn, pn, &self.params),
            SchemeKind::S3 => state_step_s3(yn, pn, &self.params, self.s3.as_ref()),
        }
    }
}

/// Max-norm of `f'` over a field, the observed counterpart of the Lipschitz bound `M`.
pub fn observed_lipschitz<T: Real>(y: &Field<T>) -> T {
    norm_max(&y.map(f_prime))
}
