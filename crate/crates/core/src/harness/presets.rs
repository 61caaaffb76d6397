//! Catalog of the reference experiments: two accuracy studies in 1D, five 1D
//! tracking problems and four 2D tracking problems.
//!
//! Initial states of the tracking problems are not part of the experiment
//! descriptions; every tracking preset starts from `y0 = ŷ(·, 0)`.

use std::path::{Path, PathBuf};

use crate::config::{DomainConfig, NewtonSection, RunConfig, SweepSection};
use crate::error::{Error, Result};
use crate::ocp::{solve_ocp, ProblemSpec, Solution};
use crate::schemes::SchemeKind;

use super::output::{convergence_summary, write_convergence, write_solution, write_summary};
use super::{spatial_convergence_study, temporal_convergence_study, ConvergenceReport};

#[derive(Debug, Clone, PartialEq)]
pub enum PresetKind {
    /// One optimal control solve.
    Solve,
    /// Temporal study over `steps` against `ref_steps`, for every scheme.
    Temporal { steps: Vec<usize>, ref_steps: usize },
    /// Spatial study over `points` against `ref_points`, for every scheme.
    Spatial {
        points: Vec<usize>,
        ref_points: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPreset {
    pub name: &'static str,
    /// Other names the preset answers to.
    pub aliases: &'static [&'static str],
    pub description: &'static str,
    pub config: RunConfig,
    pub kind: PresetKind,
}

impl ExperimentPreset {
    pub fn problem(&self) -> Result<(ProblemSpec<f64>, crate::ocp::SweepConfig<f64>)> {
        self.config.to_problem()
    }
}

#[allow(clippy::too_many_arguments)]
fn cfg_1d(
    n: usize,
    t: f64,
    steps: usize,
    eps: f64,
    lambda: f64,
    scheme: &str,
    y0: &str,
    target: &str,
) -> RunConfig {
    RunConfig {
        domain: DomainConfig {
            a: 0.0,
            b: 1.0,
            a2: None,
            b2: None,
        },
        n_points: n,
        n_points_y: None,
        t_final: t,
        n_steps: steps,
        epsilon: eps,
        lambda,
        scheme: scheme.to_owned(),
        y0: y0.to_owned(),
        target: target.to_owned(),
        adjoint_variant: "n".to_owned(),
        newton: NewtonSection::default(),
        sweep: SweepSection::default(),
        output_dir: None,
    }
}

#[allow(clippy::too_many_arguments)]
fn cfg_2d(
    t: f64,
    steps: usize,
    eps: f64,
    lambda: f64,
    scheme: &str,
    y0: &str,
    target: &str,
) -> RunConfig {
    let mut c = cfg_1d(51, t, steps, eps, lambda, scheme, y0, target);
    c.domain.a2 = Some(0.0);
    c.domain.b2 = Some(1.0);
    c
}

const ACC_Y0: &str = "cos(2*pi*x)";
const ACC_TARGET: &str = "cos(2*pi*x)*exp(-t)";

/// All presets, in catalog order.
pub fn catalog() -> Vec<ExperimentPreset> {
    let target_2d_s2 = "0.5*cos(2*pi*x)*cos(2*pi*y)*(exp(-0.1*t)+2*t)";
    vec![
        ExperimentPreset {
            name: "fig1",
            aliases: &[],
            description: "temporal accuracy, h = 1/256, T = 0.1, dt = T/{10,20,40,80} vs T/640",
            config: cfg_1d(257, 0.1, 640, 0.05, 0.1, "s1", ACC_Y0, ACC_TARGET),
            kind: PresetKind::Temporal {
                steps: vec![10, 20, 40, 80],
                ref_steps: 640,
            },
        },
        ExperimentPreset {
            name: "fig2",
            aliases: &[],
            description: "spatial accuracy, T = 0.01, Nt = 200, N = {17,33,65,129} vs 513",
            config: cfg_1d(513, 0.01, 200, 0.05, 0.1, "s1", ACC_Y0, ACC_TARGET),
            kind: PresetKind::Spatial {
                points: vec![17, 33, 65, 129],
                ref_points: 513,
            },
        },
        ExperimentPreset {
            name: "fig3",
            aliases: &[],
            description: "1D S1, target cos(2 pi x), eps = 0.05, lambda = 0.1",
            config: cfg_1d(257, 0.01, 100, 0.05, 0.1, "s1", "cos(2*pi*x)", "cos(2*pi*x)"),
            kind: PresetKind::Solve,
        },
        ExperimentPreset {
            name: "fig4",
            aliases: &[],
            description: "1D S1, target cos(2 pi x), eps = 0.05, lambda = 1e-4",
            config: cfg_1d(257, 0.01, 100, 0.05, 1e-4, "s1", "cos(2*pi*x)", "cos(2*pi*x)"),
            kind: PresetKind::Solve,
        },
        ExperimentPreset {
            name: "fig5",
            aliases: &[],
            description: "1D S1, target cos(2 pi x), eps = 0.09, lambda = 1e-4",
            config: cfg_1d(257, 0.01, 100, 0.09, 1e-4, "s1", "cos(2*pi*x)", "cos(2*pi*x)"),
            kind: PresetKind::Solve,
        },
        ExperimentPreset {
            name: "fig6",
            aliases: &[],
            description: "1D S2, target sin(pi x)(t^2 + 1), eps = 0.09, lambda = 1e-4",
            config: cfg_1d(257, 0.01, 100, 0.09, 1e-4, "s2", "sin(pi*x)", "sin(pi*x)*(t^2+1)"),
            kind: PresetKind::Solve,
        },
        ExperimentPreset {
            name: "fig7",
            aliases: &[],
            description: "1D S3, target 0.1 exp(cos(pi x))(3t^2 + 1), eps = 0.05, lambda = 1e-4",
            config: cfg_1d(
                257,
                0.01,
                100,
                0.05,
                1e-4,
                "s3",
                "0.1*exp(cos(pi*x))",
                "0.1*exp(cos(pi*x))*(3*t^2+1)",
            ),
            kind: PresetKind::Solve,
        },
        ExperimentPreset {
            name: "fig8",
            aliases: &["fig9"],
            description: "2D S1, target cos(2 pi x y), h = 1/50, T = 0.01, dt = 5e-4, eps = 0.1, lambda = 1e-4",
            config: cfg_2d(0.01, 20, 0.1, 1e-4, "s1", "cos(2*pi*x*y)", "cos(2*pi*x*y)"),
            kind: PresetKind::Solve,
        },
        ExperimentPreset {
            name: "fig10",
            aliases: &[],
            description: "2D S1, target cos(2 pi x y), h = 1/50, T = 0.01, dt = 5e-4, eps = 0.07, lambda = 1e-4",
            config: cfg_2d(0.01, 20, 0.07, 1e-4, "s1", "cos(2*pi*x*y)", "cos(2*pi*x*y)"),
            kind: PresetKind::Solve,
        },
        ExperimentPreset {
            name: "fig11",
            aliases: &["fig12", "fig13"],
            description: "2D S2, target 0.5 cos(2 pi x) cos(2 pi y)(exp(-0.1 t) + 2t), T = 0.03, dt = 1e-3, eps = 0.1, lambda = 0.01",
            config: cfg_2d(0.03, 30, 0.1, 0.01, "s2", "0.5*cos(2*pi*x)*cos(2*pi*y)", target_2d_s2),
            kind: PresetKind::Solve,
        },
        ExperimentPreset {
            name: "fig14",
            aliases: &["fig15"],
            description: "2D S3, target 0.5 sin(x y)(1 - 2t), T = 0.01, dt = T/30, eps = 0.08, lambda = 1e-3",
            config: cfg_2d(0.01, 30, 0.08, 1e-3, "s3", "0.5*sin(x*y)", "0.5*sin(x*y)*(1-2*t)"),
            kind: PresetKind::Solve,
        },
    ]
}

pub fn find_preset(name: &str) -> Result<ExperimentPreset> {
    catalog()
        .into_iter()
        .find(|p| p.name == name || p.aliases.contains(&name))
        .ok_or_else(|| Error::UnknownPreset(name.to_owned()))
}

#[derive(Debug, Clone)]
pub struct PresetOutcome {
    pub name: &'static str,
    /// Every sweep (and, for studies, every reference run) converged.
    pub converged: bool,
    pub files: Vec<PathBuf>,
    pub reports: Vec<ConvergenceReport<f64>>,
    pub solve: Option<(ProblemSpec<f64>, Solution<f64>)>,
}

/// Runs a preset and writes its CSVs into `out_dir`.
pub fn run_preset(name: &str, out_dir: &Path) -> Result<PresetOutcome> {
    let preset = find_preset(name)?;
    let (spec, sweep) = preset.problem()?;
    let mut outcome = PresetOutcome {
        name: preset.name,
        converged: true,
        files: Vec::new(),
        reports: Vec::new(),
        solve: None,
    };
    match &preset.kind {
        PresetKind::Solve => {
            let sol = solve_ocp(&spec, &sweep)?;
            outcome.converged = sol.converged;
            outcome.files = write_solution(out_dir, &spec, &sol)?;
            outcome.solve = Some((spec, sol));
        }
        PresetKind::Temporal { .. } | PresetKind::Spatial { .. } => {
            let mut summary = Vec::new();
            for scheme in SchemeKind::ALL {
                let base = ProblemSpec {
                    scheme,
                    ..spec.clone()
                };
                let report = match &preset.kind {
                    PresetKind::Temporal { steps, ref_steps } => {
                        temporal_convergence_study(&base, &sweep, steps, *ref_steps)?
                    }
                    PresetKind::Spatial { points, ref_points } => {
                        spatial_convergence_study(&base, &sweep, points, *ref_points)?
                    }
                    PresetKind::Solve => unreachable!(),
                };
                outcome.converged &= report.reference_converged && report.excluded.is_empty();
                let path = out_dir.join(format!("convergence_{}.csv", scheme.name()));
                write_convergence(&path, &report)?;
                outcome.files.push(path);
                summary.extend(
                    convergence_summary(&report)
                        .into_iter()
                        .filter(|(k, _)| k != "scheme")
                        .map(|(k, v)| (format!("{}.{k}", scheme.name()), v)),
                );
                outcome.reports.push(report);
            }
            let path = out_dir.join("summary.csv");
            write_summary(&path, &summary)?;
            outcome.files.push(path);
        }
    }
    Ok(outcome)
}
