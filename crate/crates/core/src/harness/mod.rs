//! Convergence studies, experiment presets and CSV output.

mod convergence;
pub mod output;
mod presets;

pub use convergence::{
    fit_rate, restrict_to_coarse, spatial_convergence_study, temporal_convergence_study,
    ConvergenceReport, StudyAxis,
};
pub use presets::{catalog, find_preset, run_preset, ExperimentPreset, PresetKind, PresetOutcome};

use crate::error::Result;
use crate::norms::norm_max;
use crate::ocp::{ProblemSpec, Solution};
use crate::scalar::Real;

/// `max_n(‖Y^n‖∞ + ‖P^n‖∞) / (1 + max_n ‖ŷ^n‖∞)`; bounded runs stay well below 100.
pub fn boundedness_ratio<T: Real>(spec: &ProblemSpec<T>, sol: &Solution<T>) -> Result<T> {
    let targets = spec.target_trajectory()?;
    let states = sol
        .y
        .levels()
        .iter()
        .zip(sol.p.levels())
        .fold(T::zero(), |m, (y, p)| m.max(norm_max(y) + norm_max(p)));
    Ok(states / (T::one() + targets.max_abs()))
}

/// `max |Y^{Nt} − ŷ(T)|`
pub fn final_tracking_error<T: Real>(spec: &ProblemSpec<T>, sol: &Solution<T>) -> Result<T> {
    let target = spec.target_at(spec.time.n_steps())?;
    sol.y.last().max_abs_diff(&target)
}
