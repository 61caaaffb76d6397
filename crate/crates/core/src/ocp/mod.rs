//! The coupled optimality system: forward state sweep, backward adjoint sweep and
//! the damped fixed-point iteration between them.

mod monolithic;

pub use monolithic::{solve_monolithic_tiny, MONOLITHIC_MAX_UNKNOWNS};

use log::warn;

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::grid::{Field, SpaceGrid, TimeGrid, Trajectory};
use crate::norms::inner_product;
use crate::scalar::Real;
use crate::schemes::{
    adjoint_step, AdjointVariant, NewtonConfig, SchemeKind, StateStepper, StepParams, StepReport,
};

/// Everything that defines one optimal control problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec<T> {
    pub grid: SpaceGrid<T>,
    pub time: TimeGrid<T>,
    /// Interface width ε.
    pub eps: T,
    /// Control-cost weight λ.
    pub lambda: T,
    pub scheme: SchemeKind,
    pub y0: Expr,
    /// Desired state ŷ(x[, y], t).
    pub target: Expr,
    pub adjoint_variant: AdjointVariant,
    pub newton: NewtonConfig<T>,
}

impl<T: Real> ProblemSpec<T> {
    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.newton.validate()?;
        self.grid.require_min_points("problem grid", 4)?;
        if self.grid.dim() == 1 {
            for (name, e) in [("y0", &self.y0), ("target", &self.target)] {
                if e.uses(Var::Y) {
                    return Err(Error::InvalidParameter {
                        name,
                        reason: "uses `y` on a 1D grid".into(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<StepParams<T>> {
        StepParams::new(self.eps, self.lambda, self.time.dt())
    }

    pub fn initial_state(&self) -> Result<Field<T>> {
        sample(&self.y0, &self.grid, T::zero())
    }

    pub fn target_at(&self, n: usize) -> Result<Field<T>> {
        sample(&self.target, &self.grid, self.time.time(n))
    }

    pub fn target_trajectory(&self) -> Result<Trajectory<T>> {
        let levels = (0..=self.time.n_steps())
            .map(|n| self.target_at(n))
            .collect::<Result<Vec<_>>>()?;
        Trajectory::new(self.time, levels)
    }

    /// Same problem with a different number of time steps.
    pub fn with_time_steps(&self, n_steps: usize) -> Result<Self> {
        Ok(ProblemSpec {
            time: TimeGrid::new(self.time.t_final(), n_steps)?,
            ..self.clone()
        })
    }

    /// Same problem on the same domain with `n` nodes per axis.
    pub fn with_points(&self, n: usize) -> Result<Self> {
        let ax = self.grid.x_axis();
        let grid = match self.grid.y_axis() {
            None => SpaceGrid::new_1d(ax.a, ax.b, n)?,
            Some(ay) => SpaceGrid::new_2d((ax.a, ax.b, n), (ay.a, ay.b, n))?,
        };
        Ok(ProblemSpec {
            grid,
            ..self.clone()
        })
    }
}

/// Samples `expr` at every node of `grid` at time `t`.
pub fn sample<T: Real>(expr: &Expr, grid: &SpaceGrid<T>, t: T) -> Result<Field<T>> {
    let values = (0..grid.len())
        .map(|k| {
            let (x, y) = grid.coords(k);
            expr.evaluate(x, y, t)
        })
        .collect::<Result<Vec<_>>>()?;
    Field::from_values(*grid, values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig<T> {
    /// Stop when `max_n ‖P_new^n − P^n‖∞` falls to this value.
    pub fp_tol: T,
    pub max_sweeps: usize,
    /// Initial relaxation θ ∈ (0, 1]; halved once if the residual keeps growing.
    pub relaxation: T,
}

impl<T: Real> Default for SweepConfig<T> {
    fn default() -> Self {
        SweepConfig {
            fp_tol: T::lit(1e-9),
            max_sweeps: 200,
            relaxation: T::one(),
        }
    }
}

impl<T: Real> SweepConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.fp_tol > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "sweep.tol",
                reason: "must be positive".into(),
            });
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidParameter {
                name: "sweep.max_sweeps",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.relaxation > T::zero() && self.relaxation <= T::one()) {
            return Err(Error::InvalidParameter {
                name: "sweep.relaxation",
                reason: format!("must lie in (0, 1], got {}", self.relaxation),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Solution<T> {
    pub y: Trajectory<T>,
    pub p: Trajectory<T>,
    pub u: Trajectory<T>,
    pub cost: T,
    pub converged: bool,
    pub sweeps_used: usize,
    pub fp_residual_history: Vec<T>,
    pub relaxation: T,
    /// State-step reports of the last forward sweep, one per time step.
    pub diagnostics: Vec<StepReport<T>>,
}

impl<T: Real> Solution<T> {
    pub fn final_fp_residual(&self) -> Option<T> {
        self.fp_residual_history.last().copied()
    }

    pub fn total_newton_iters(&self) -> usize {
        self.diagnostics.iter().map(|r| r.newton_iters).sum()
    }

    pub fn max_newton_iters(&self) -> usize {
        self.diagnostics
            .iter()
            .map(|r| r.newton_iters)
            .max()
            .unwrap_or(0)
    }

    pub fn max_step_residual(&self) -> T {
        self.diagnostics
            .iter()
            .fold(T::zero(), |m, r| m.max(r.final_residual))
    }

    pub fn fprime_max(&self) -> T {
        self.diagnostics
            .iter()
            .fold(T::zero(), |m, r| m.max(r.fprime_max))
    }
}

fn step_error(
    scheme: SchemeKind,
    phase: &'static str,
    level: usize,
    dt: f64,
) -> impl FnOnce(Error) -> Error {
    move |e| Error::Step {
        scheme: scheme.name(),
        phase,
        level,
        dt,
        source: Box::new(e),
    }
}

pub(crate) fn forward_sweep<T: Real>(
    spec: &ProblemSpec<T>,
    stepper: &StateStepper<T>,
    y0: &Field<T>,
    p: &Trajectory<T>,
) -> Result<(Trajectory<T>, Vec<StepReport<T>>)> {
    let nt = spec.time.n_steps();
    if p.levels().len() != nt + 1 {
        return Err(Error::DimensionMismatch {
            expected: nt + 1,
            got: p.levels().len(),
        });
    }
    let mut levels = Vec::with_capacity(nt + 1);
    let mut reports = Vec::with_capacity(nt);
    levels.push(y0.clone());
    for n in 0..nt {
        let (next, rep) = stepper.step(&levels[n], p.level(n)).map_err(step_error(
            spec.scheme,
            "state",
            n + 1,
            spec.time.dt().to_f64_lossy(),
        ))?;
        levels.push(next);
        reports.push(rep);
    }
    Ok((Trajectory::new(spec.time, levels)?, reports))
}

pub(crate) fn backward_sweep<T: Real>(
    spec: &ProblemSpec<T>,
    y: &Trajectory<T>,
    targets: &Trajectory<T>,
) -> Result<Trajectory<T>> {
    let nt = spec.time.n_steps();
    if y.levels().len() != nt + 1 {
        return Err(Error::DimensionMismatch {
            expected: nt + 1,
            got: y.levels().len(),
        });
    }
    let dt = spec.time.dt();
    let mut levels = vec![Field::zeros(spec.grid); nt + 1];
    for n in (0..nt).rev() {
        levels[n] = adjoint_step(
            y.level(n),
            y.level(n + 1),
            &levels[n + 1],
            targets.level(n + 1),
            spec.eps,
            dt,
            spec.adjoint_variant,
        )
        .map_err(step_error(spec.scheme, "adjoint", n, dt.to_f64_lossy()))?;
    }
    Trajectory::new(spec.time, levels)
}

/// Marches the state equation forward driven by the adjoint `p`.
pub fn forward_solve<T: Real>(spec: &ProblemSpec<T>, p: &Trajectory<T>) -> Result<Trajectory<T>> {
    spec.validate()?;
    let stepper = StateStepper::new(spec.scheme, &spec.grid, spec.params()?, spec.newton)?;
    Ok(forward_sweep(spec, &stepper, &spec.initial_state()?, p)?.0)
}

/// Marches the adjoint equation backward from `P^{Nt} = 0`.
pub fn backward_solve<T: Real>(spec: &ProblemSpec<T>, y: &Trajectory<T>) -> Result<Trajectory<T>> {
    spec.validate()?;
    backward_sweep(spec, y, &spec.target_trajectory()?)
}

/// `U^n = P^n / λ` at every level.
pub fn control_from_adjoint<T: Real>(p: &Trajectory<T>, lambda: T) -> Trajectory<T> {
    p.map(|v| v / lambda)
}

/// `J = ½∫∫(y − ŷ)² + (λ/2)∫∫u²` by trapezoid quadrature in space and time.
pub fn cost_functional<T: Real>(
    y: &Trajectory<T>,
    u: &Trajectory<T>,
    target: &Trajectory<T>,
    lambda: T,
) -> Result<T> {
    let nt = y.time_grid().n_steps();
    if u.levels().len() != nt + 1 || target.levels().len() != nt + 1 {
        return Err(Error::DimensionMismatch {
            expected: nt + 1,
            got: u.levels().len().min(target.levels().len()),
        });
    }
    let dt = y.time_grid().dt();
    let half = T::lit(0.5);
    let mut total = T::zero();
    for n in 0..=nt {
        let tw = if n == 0 || n == nt { half * dt } else { dt };
        let miss = y.level(n).zip_map(target.level(n), |a, b| a - b)?;
        let track = inner_product(&miss, &miss)?;
        let ctrl = inner_product(u.level(n), u.level(n))?;
        total = total + tw * (half * track + half * lambda * ctrl);
    }
    Ok(total)
}

/// Solves the optimality system by forward–backward sweeps starting from `P ≡ 0`.
///
/// Non-convergence within `max_sweeps` is reported through
/// [`Solution::converged`], not as an error.
pub fn solve_ocp<T: Real>(spec: &ProblemSpec<T>, cfg: &SweepConfig<T>) -> Result<Solution<T>> {
    spec.validate()?;
    cfg.validate()?;
    let params = spec.params()?;
    if params.exceeds_stability_hint() {
        warn!(
            "dt = {:e} exceeds eps^2/8 = {:e}; proceeding without a guarantee",
            params.dt,
            params.eps * params.eps / T::lit(8.0)
        );
    }
    let stepper = StateStepper::new(spec.scheme, &spec.grid, params, spec.newton)?;
    let y0 = spec.initial_state()?;
    let targets = spec.target_trajectory()?;

    let mut p = Trajectory::zeros(spec.time, spec.grid);
    let mut theta = cfg.relaxation;
    let mut halved = false;
    let mut growth = 0usize;
    let mut history: Vec<T> = Vec::new();
    let mut converged = false;
    let mut last = None;

    for _ in 0..cfg.max_sweeps {
        let (y, reports) = forward_sweep(spec, &stepper, &y0, &p)?;
        let p_new = backward_sweep(spec, &y, &targets)?;
        let r = p_new.max_abs_diff(&p)?;
        if let Some(&prev) = history.last() {
            growth = if r > prev { growth + 1 } else { 0 };
        }
        history.push(r);
        if growth >= 3 && !halved {
            theta = theta * T::lit(0.5);
            halved = true;
            growth = 0;
        }
        p = if theta == T::one() {
            p_new
        } else {
            relax(&p_new, &p, theta)?
        };
        last = Some((y, reports));
        if r <= cfg.fp_tol {
            converged = true;
            break;
        }
        if !r.is_finite() {
            break;
        }
    }

    let (y, diagnostics) = last.expect("at least one sweep");
    let u = control_from_adjoint(&p, spec.lambda);
    let cost = cost_functional(&y, &u, &targets, spec.lambda)?;
    Ok(Solution {
        y,
        p,
        u,
        cost,
        converged,
        sweeps_used: history.len(),
        fp_residual_history: history,
        relaxation: theta,
        diagnostics,
    })
}

fn relax<T: Real>(new: &Trajectory<T>, old: &Trajectory<T>, theta: T) -> Result<Trajectory<T>> {
    let levels = new
        .levels()
        .iter()
        .zip(old.levels())
        .map(|(a, b)| a.zip_map(b, |x, y| theta * x + (T::one() - theta) * y))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(*new.time_grid(), levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn spec(scheme: SchemeKind, y0: &str, target: &str) -> ProblemSpec<f64> {
        ProblemSpec {
            grid: SpaceGrid::unit(1, 9).unwrap(),
            time: TimeGrid::new(0.01, 4).unwrap(),
            eps: 0.05,
            lambda: 0.1,
            scheme,
            y0: parse(y0).unwrap(),
            target: parse(target).unwrap(),
            adjoint_variant: AdjointVariant::CoeffAtN,
            newton: NewtonConfig::default(),
        }
    }

    #[test]
    fn constant_fixed_point_is_found_in_one_sweep() {
        for s in SchemeKind::ALL {
            let sol = solve_ocp(&spec(s, "0.3", "0.3"), &SweepConfig::default()).unwrap();
            assert!(sol.converged);
            assert_eq!(sol.sweeps_used, 1);
            assert!(sol.cost.abs() < 1e-25);
            assert!(sol.u.max_abs() < 1e-12);
            assert!(sol
                .y
                .levels()
                .iter()
                .all(|l| l.values().iter().all(|&v| (v - 0.3).abs() < 1e-14)));
        }
    }

    #[test]
    fn constant_adjoint_recursion() {
        let sp = spec(SchemeKind::S2, "0.0", "1 + t");
        let y = Trajectory::constant(sp.time, sp.grid, 0.25);
        let p = backward_solve(&sp, &y).unwrap();
        let dt = sp.time.dt();
        let mut expect = 0.0;
        for n in (0..4).rev() {
            expect += dt * (1.0 + sp.time.time(n + 1) - 0.25);
            for &v in p.level(n).values() {
                assert!((v - expect).abs() < 1e-14);
            }
        }
        assert!(p.level(4).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cost_of_unit_mismatch() {
        let g = SpaceGrid::<f64>::unit(1, 5).unwrap();
        let t = TimeGrid::new(1.0, 4).unwrap();
        let y = Trajectory::constant(t, g, 2.0);
        let target = Trajectory::constant(t, g, 1.0);
        let zero = Trajectory::zeros(t, g);
        assert!((cost_functional(&y, &zero, &target, 0.1).unwrap() - 0.5).abs() < 1e-15);
        let one = Trajectory::constant(t, g, 1.0);
        assert!((cost_functional(&target, &one, &target, 0.1).unwrap() - 0.05).abs() < 1e-15);
        assert_eq!(cost_functional(&target, &zero, &target, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn control_is_scaled_adjoint() {
        let g = SpaceGrid::<f64>::unit(1, 5).unwrap();
        let t = TimeGrid::new(1.0, 2).unwrap();
        let p = Trajectory::constant(t, g, 0.05);
        let u = control_from_adjoint(&p, 0.1);
        assert!(u
            .levels()
            .iter()
            .flat_map(|l| l.values())
            .all(|&v| (v - 0.5).abs() < 1e-15));
        assert_eq!(control_from_adjoint(&p, 1.0), p);
    }

    #[test]
    fn invalid_configs() {
        let mut sp = spec(SchemeKind::S1, "x", "x");
        sp.lambda = 0.0;
        assert!(solve_ocp(&sp, &SweepConfig::default()).is_err());
        let sp = spec(SchemeKind::S1, "x*y", "x");
        assert!(sp.validate().is_err());
        let bad = SweepConfig {
            relaxation: 1.5,
            ..SweepConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
