//! Self-convergence studies against a fine-resolution reference run.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::ocp::{solve_ocp, ProblemSpec, Solution, SweepConfig};
use crate::scalar::Real;
use crate::schemes::SchemeKind;

use super::boundedness_ratio;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyAxis {
    Time,
    Space,
}

impl StudyAxis {
    pub fn name(self) -> &'static str {
        match self {
            StudyAxis::Time => "time",
            StudyAxis::Space => "space",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport<T> {
    pub axis: StudyAxis,
    pub scheme: SchemeKind,
    /// Step count (time) or nodes per axis (space) of each retained level.
    pub counts: Vec<usize>,
    /// `δt` or `h` of each retained level, strictly decreasing.
    pub levels: Vec<T>,
    /// `max_n ‖Y^n − Y_ref^n‖∞` per level.
    pub state_errors: Vec<T>,
    pub adjoint_errors: Vec<T>,
    pub state_rate: Option<T>,
    pub adjoint_rate: Option<T>,
    /// Levels dropped because their sweep did not converge.
    pub excluded: Vec<usize>,
    pub reference_count: usize,
    pub reference_converged: bool,
    /// Largest boundedness ratio seen over all runs of the study.
    pub max_boundedness_ratio: T,
    /// Space studies only: change at the finest level when the step count is doubled.
    pub temporal_control_error: Option<T>,
}

impl<T: Real> ConvergenceReport<T> {
    /// Space studies: whether the time-step control error sits below the finest spatial error.
    pub fn temporal_error_below_spatial(&self) -> Option<bool> {
        let t = self.temporal_control_error?;
        let s = self.state_errors.last()?.max(*self.adjoint_errors.last()?);
        Some(t < s)
    }
}

/// Least-squares slope of `ln es` against `ln xs`.
pub fn fit_rate<T: Real>(xs: &[T], es: &[T]) -> Result<T> {
    if xs.len() != es.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: es.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateFit("need at least two points"));
    }
    if xs
        .iter()
        .chain(es)
        .any(|&v| !(v > T::zero()) || !v.is_finite())
    {
        return Err(Error::DegenerateFit(
            "all values must be positive and finite",
        ));
    }
    let lx: Vec<T> = xs.iter().map(|v| v.ln()).collect();
    let le: Vec<T> = es.iter().map(|v| v.ln()).collect();
    let n = T::from_usize_lossy(lx.len());
    let mx = lx.iter().copied().sum::<T>() / n;
    let me = le.iter().copied().sum::<T>() / n;
    let sxx: T = lx.iter().map(|&x| (x - mx) * (x - mx)).sum();
    if sxx == T::zero() {
        return Err(Error::DegenerateFit("all abscissae are equal"));
    }
    let sxe: T = lx.iter().zip(&le).map(|(&x, &e)| (x - mx) * (e - me)).sum();
    Ok(sxe / sxx)
}

fn rate_or_none<T: Real>(xs: &[T], es: &[T]) -> Option<T> {
    let (x, e): (Vec<T>, Vec<T>) = xs
        .iter()
        .zip(es)
        .filter(|(_, &e)| e > T::zero())
        .map(|(&x, &e)| (x, e))
        .unzip();
    fit_rate(&x, &e).ok()
}

/// Values of a fine field at the nodes it shares with a coarse grid of `coarse_n`
/// nodes per axis (fine node `i·s` for coarse node `i`, `s = (N_f − 1)/(N_c − 1)`).
pub fn restrict_to_coarse<T: Real>(fine: &Field<T>, coarse_n: usize) -> Result<Field<T>> {
    let g = fine.grid();
    let fine_n = g.nx();
    if g.dim() == 2 && g.ny() != fine_n {
        return Err(Error::NotNested(
            "restriction needs equal node counts on both axes".into(),
        ));
    }
    let stride = nesting_stride(fine_n, coarse_n)?;
    let coarse = match g.y_axis() {
        None => crate::grid::SpaceGrid::new_1d(g.x_axis().a, g.x_axis().b, coarse_n)?,
        Some(ay) => crate::grid::SpaceGrid::new_2d(
            (g.x_axis().a, g.x_axis().b, coarse_n),
            (ay.a, ay.b, coarse_n),
        )?,
    };
    let ny = if g.dim() == 2 { coarse_n } else { 1 };
    let mut values = Vec::with_capacity(coarse.len());
    for j in 0..ny {
        for i in 0..coarse_n {
            values.push(fine.values()[j * stride * fine_n + i * stride]);
        }
    }
    Field::from_values(coarse, values)
}

fn nesting_stride(fine_n: usize, coarse_n: usize) -> Result<usize> {
    if coarse_n < 2 || coarse_n > fine_n || !(fine_n - 1).is_multiple_of(coarse_n - 1) {
        return Err(Error::NotNested(format!(
            "{coarse_n} nodes do not nest in {fine_n} nodes"
        )));
    }
    Ok((fine_n - 1) / (coarse_n - 1))
}

fn solve_all<T: Real>(specs: &[ProblemSpec<T>], cfg: &SweepConfig<T>) -> Result<Vec<Solution<T>>> {
    specs.par_iter().map(|s| solve_ocp(s, cfg)).collect()
}

struct Assembled<T> {
    counts: Vec<usize>,
    levels: Vec<T>,
    state: Vec<T>,
    adjoint: Vec<T>,
    excluded: Vec<usize>,
}

fn assemble_levels<T: Real>(
    counts: &[usize],
    sols: &[Solution<T>],
    level_of: impl Fn(usize) -> T,
    mut errors: impl FnMut(usize, &Solution<T>) -> Result<(T, T)>,
) -> Result<Assembled<T>> {
    let mut out = Assembled {
        counts: Vec::new(),
        levels: Vec::new(),
        state: Vec::new(),
        adjoint: Vec::new(),
        excluded: Vec::new(),
    };
    for (&c, sol) in counts.iter().zip(sols) {
        if !sol.converged {
            out.excluded.push(c);
            continue;
        }
        let (es, ea) = errors(c, sol)?;
        out.counts.push(c);
        out.levels.push(level_of(c));
        out.state.push(es);
        out.adjoint.push(ea);
    }
    Ok(out)
}

fn check_increasing(counts: &[usize]) -> Result<()> {
    if counts.is_empty() || counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter {
            name: "levels",
            reason: "levels must be non-empty and strictly refining".into(),
        });
    }
    Ok(())
}

/// Temporal self-convergence on the grid of `base`: each level uses `steps[k]`
/// time steps and is compared with the `ref_steps` run at coincident time levels.
pub fn temporal_convergence_study<T: Real>(
    base: &ProblemSpec<T>,
    cfg: &SweepConfig<T>,
    steps: &[usize],
    ref_steps: usize,
) -> Result<ConvergenceReport<T>> {
    check_increasing(steps)?;
    if let Some(&bad) = steps
        .iter()
        .find(|&&n| n == 0 || !ref_steps.is_multiple_of(n))
    {
        return Err(Error::InvalidParameter {
            name: "ref",
            reason: format!(
                "reference with {ref_steps} steps is not aligned with a level of {bad} steps"
            ),
        });
    }
    let mut specs = vec![base.with_time_steps(ref_steps)?];
    for &n in steps {
        specs.push(base.with_time_steps(n)?);
    }
    let mut sols = solve_all(&specs, cfg)?;
    let reference = sols.remove(0);
    let t_final = base.time.t_final();
    let a = assemble_levels(
        steps,
        &sols,
        |n| t_final / T::from_usize_lossy(n),
        |n, sol| {
            let stride = ref_steps / n;
            let mut es = T::zero();
            let mut ea = T::zero();
            for k in 0..=n {
                es = es.max(sol.y.level(k).max_abs_diff(reference.y.level(k * stride))?);
                ea = ea.max(sol.p.level(k).max_abs_diff(reference.p.level(k * stride))?);
            }
            Ok((es, ea))
        },
    )?;
    let ratio = max_ratio(&specs, std::iter::once(&reference).chain(&sols))?;
    Ok(ConvergenceReport {
        axis: StudyAxis::Time,
        scheme: base.scheme,
        state_rate: rate_or_none(&a.levels, &a.state),
        adjoint_rate: rate_or_none(&a.levels, &a.adjoint),
        counts: a.counts,
        levels: a.levels,
        state_errors: a.state,
        adjoint_errors: a.adjoint,
        excluded: a.excluded,
        reference_count: ref_steps,
        reference_converged: reference.converged,
        max_boundedness_ratio: ratio,
        temporal_control_error: None,
    })
}

/// Spatial self-convergence at the time step of `base`: levels of `ns[k]` nodes per
/// axis are compared with the `ref_n` run at shared nodes.
pub fn spatial_convergence_study<T: Real>(
    base: &ProblemSpec<T>,
    cfg: &SweepConfig<T>,
    ns: &[usize],
    ref_n: usize,
) -> Result<ConvergenceReport<T>> {
    check_increasing(ns)?;
    for &n in ns {
        nesting_stride(ref_n, n)?;
    }
    let mut specs = vec![base.with_points(ref_n)?];
    for &n in ns {
        specs.push(base.with_points(n)?);
    }
    let control = specs[specs.len() - 1].with_time_steps(2 * base.time.n_steps())?;
    specs.push(control);
    let mut sols = solve_all(&specs, cfg)?;
    let control_sol = sols.pop().expect("control run");
    let reference = sols.remove(0);
    let ax = base.grid.x_axis();
    let a = assemble_levels(
        ns,
        &sols,
        |n| (ax.b - ax.a) / T::from_usize_lossy(n - 1),
        |n, sol| {
            let mut es = T::zero();
            let mut ea = T::zero();
            for k in 0..=base.time.n_steps() {
                es = es.max(
                    sol.y
                        .level(k)
                        .max_abs_diff(&restrict_to_coarse(reference.y.level(k), n)?)?,
                );
                ea = ea.max(
                    sol.p
                        .level(k)
                        .max_abs_diff(&restrict_to_coarse(reference.p.level(k), n)?)?,
                );
            }
            Ok((es, ea))
        },
    )?;
    let finest_sol = sols.last().expect("non-empty");
    let mut control_err = T::zero();
    for k in 0..=base.time.n_steps() {
        control_err = control_err.max(
            finest_sol
                .y
                .level(k)
                .max_abs_diff(control_sol.y.level(2 * k))?,
        );
        control_err = control_err.max(
            finest_sol
                .p
                .level(k)
                .max_abs_diff(control_sol.p.level(2 * k))?,
        );
    }
    let ratio = max_ratio(
        &specs,
        std::iter::once(&reference)
            .chain(&sols)
            .chain(std::iter::once(&control_sol)),
    )?;
    Ok(ConvergenceReport {
        axis: StudyAxis::Space,
        scheme: base.scheme,
        state_rate: rate_or_none(&a.levels, &a.state),
        adjoint_rate: rate_or_none(&a.levels, &a.adjoint),
        counts: a.counts,
        levels: a.levels,
        state_errors: a.state,
        adjoint_errors: a.adjoint,
        excluded: a.excluded,
        reference_count: ref_n,
        reference_converged: reference.converged,
        max_boundedness_ratio: ratio,
        temporal_control_error: Some(control_err),
    })
}

fn max_ratio<'a, T: Real>(
    specs: &[ProblemSpec<T>],
    sols: impl Iterator<Item = &'a Solution<T>>,
) -> Result<T> {
    specs.iter().zip(sols).try_fold(T::zero(), |m, (s, sol)| {
        Ok(m.max(boundedness_ratio(s, sol)?))
    })
}
