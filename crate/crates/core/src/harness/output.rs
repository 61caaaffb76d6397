//! CSV writers. Every file has a header line; reals are printed with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::{Field, Trajectory};
use crate::ocp::{ProblemSpec, Solution};
use crate::scalar::Real;

use super::{boundedness_ratio, final_tracking_error, ConvergenceReport};

pub fn fmt_real<T: Real>(v: T) -> String {
    format!("{v:.16e}")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Columns `x,value` (1D) or `x,y,value` (2D).
pub fn snapshot_csv<T: Real>(field: &Field<T>) -> String {
    let g = field.grid();
    let mut s = String::from(if g.dim() == 1 {
        "x,value\n"
    } else {
        "x,y,value\n"
    });
    for (k, &v) in field.values().iter().enumerate() {
        match g.coords(k) {
            (x, None) => writeln!(s, "{},{}", fmt_real(x), fmt_real(v)),
            (x, Some(y)) => writeln!(s, "{},{},{}", fmt_real(x), fmt_real(y), fmt_real(v)),
        }
        .expect("write to String");
    }
    s
}

/// Columns `t,x,value`, one row per (level, node); 1D trajectories only.
pub fn spacetime_csv<T: Real>(traj: &Trajectory<T>) -> Result<String> {
    let g = traj.space_grid();
    if g.dim() != 1 {
        return Err(Error::NotOneDimensional {
            op: "space-time CSV",
        });
    }
    let mut s = String::from("t,x,value\n");
    for (n, level) in traj.levels().iter().enumerate() {
        let t = fmt_real(traj.time_grid().time(n));
        for (k, &v) in level.values().iter().enumerate() {
            writeln!(s, "{t},{},{}", fmt_real(g.coords(k).0), fmt_real(v))
                .expect("write to String");
        }
    }
    Ok(s)
}

/// Columns `level,state_error,adjoint_error`; `level` is δt or h.
pub fn convergence_csv<T: Real>(report: &ConvergenceReport<T>) -> String {
    let mut s = String::from("level,state_error,adjoint_error\n");
    for i in 0..report.levels.len() {
        writeln!(
            s,
            "{},{},{}",
            fmt_real(report.levels[i]),
            fmt_real(report.state_errors[i]),
            fmt_real(report.adjoint_errors[i])
        )
        .expect("write to String");
    }
    s
}

/// Columns `key,value`.
pub fn summary_csv(rows: &[(String, String)]) -> String {
    let mut s = String::from("key,value\n");
    for (k, v) in rows {
        writeln!(s, "{k},{v}").expect("write to String");
    }
    s
}

pub fn write_snapshot<T: Real>(path: &Path, field: &Field<T>) -> Result<()> {
    write_file(path, &snapshot_csv(field))
}

pub fn write_spacetime<T: Real>(path: &Path, traj: &Trajectory<T>) -> Result<()> {
    write_file(path, &spacetime_csv(traj)?)
}

pub fn write_convergence<T: Real>(path: &Path, report: &ConvergenceReport<T>) -> Result<()> {
    write_file(path, &convergence_csv(report))
}

pub fn write_summary(path: &Path, rows: &[(String, String)]) -> Result<()> {
    write_file(path, &summary_csv(rows))
}

/// Key/value summary of one optimal control solve.
pub fn solution_summary<T: Real>(
    spec: &ProblemSpec<T>,
    sol: &Solution<T>,
) -> Result<Vec<(String, String)>> {
    let mut rows: Vec<(String, String)> = Vec::new();
    let mut put = |k: &str, v: String| rows.push((k.to_owned(), v));
    put("scheme", spec.scheme.name().to_owned());
    put("dim", spec.grid.dim().to_string());
    put("n_points", spec.grid.nx().to_string());
    put("n_steps", spec.time.n_steps().to_string());
    put("T", fmt_real(spec.time.t_final()));
    put("dt", fmt_real(spec.time.dt()));
    put("epsilon", fmt_real(spec.eps));
    put("lambda", fmt_real(spec.lambda));
    put("converged", u8::from(sol.converged).to_string());
    put("sweeps", sol.sweeps_used.to_string());
    put(
        "fp_residual",
        fmt_real(sol.final_fp_residual().unwrap_or(T::nan())),
    );
    put("relaxation", fmt_real(sol.relaxation));
    put("cost", fmt_real(sol.cost));
    put("newton_total_iters", sol.total_newton_iters().to_string());
    put("newton_max_iters", sol.max_newton_iters().to_string());
    put("newton_max_residual", fmt_real(sol.max_step_residual()));
    put("fprime_max", fmt_real(sol.fprime_max()));
    put("max_control", fmt_real(sol.u.max_abs()));
    put(
        "max_tracking_error_final",
        fmt_real(final_tracking_error(spec, sol)?),
    );
    put("boundedness_ratio", fmt_real(boundedness_ratio(spec, sol)?));
    put("mass_initial", fmt_real(crate::norms::mass(sol.y.level(0))));
    put("mass_final", fmt_real(crate::norms::mass(sol.y.last())));
    Ok(rows)
}

/// Writes the snapshot, space-time (1D) and summary CSVs of a solve into `dir`;
/// returns the paths written.
pub fn write_solution<T: Real>(
    dir: &Path,
    spec: &ProblemSpec<T>,
    sol: &Solution<T>,
) -> Result<Vec<PathBuf>> {
    let nt = spec.time.n_steps();
    let target_final = spec.target_at(nt)?;
    let difference = sol.y.last().zip_map(&target_final, |a, b| a - b)?;
    let mut written = Vec::new();
    let mut snap = |name: &str, f: &Field<T>| -> Result<()> {
        let p = dir.join(name);
        write_snapshot(&p, f)?;
        written.push(p);
        Ok(())
    };
    snap("target_final.csv", &target_final)?;
    snap("state_final.csv", sol.y.last())?;
    snap("difference_final.csv", &difference)?;
    snap("control_initial.csv", sol.u.level(0))?;
    snap("control_last.csv", sol.u.level(nt - 1))?;
    if spec.grid.dim() == 1 {
        for (name, traj) in [
            ("target_spacetime.csv", &spec.target_trajectory()?),
            ("state_spacetime.csv", &sol.y),
            ("control_spacetime.csv", &sol.u),
        ] {
            let p = dir.join(name);
            write_spacetime(&p, traj)?;
            written.push(p);
        }
    }
    let p = dir.join("summary.csv");
    write_summary(&p, &solution_summary(spec, sol)?)?;
    written.push(p);
    Ok(written)
}

/// Summary rows for a convergence study.
pub fn convergence_summary<T: Real>(report: &ConvergenceReport<T>) -> Vec<(String, String)> {
    let rate = |r: Option<T>| r.map_or_else(|| "n/a".to_owned(), fmt_real);
    let mut rows = vec![
        ("axis".to_owned(), report.axis.name().to_owned()),
        ("scheme".to_owned(), report.scheme.name().to_owned()),
        ("reference".to_owned(), report.reference_count.to_string()),
        (
            "reference_converged".to_owned(),
            u8::from(report.reference_converged).to_string(),
        ),
        ("state_rate".to_owned(), rate(report.state_rate)),
        ("adjoint_rate".to_owned(), rate(report.adjoint_rate)),
        (
            "excluded_levels".to_owned(),
            format!("{:?}", report.excluded).replace(',', ";"),
        ),
        (
            "max_boundedness_ratio".to_owned(),
            fmt_real(report.max_boundedness_ratio),
        ),
    ];
    if let Some(t) = report.temporal_control_error {
        rows.push(("temporal_control_error".to_owned(), fmt_real(t)));
    }
    rows
}
