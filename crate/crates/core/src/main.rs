use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};

use ch_ocp::config::RunConfig;
use ch_ocp::harness::output::{convergence_summary, write_convergence, write_solution};
use ch_ocp::harness::{
    catalog, find_preset, run_preset, spatial_convergence_study, temporal_convergence_study,
    PresetKind,
};
use ch_ocp::ocp::solve_ocp;
use ch_ocp::Result;

const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ch-ocp",
    version,
    about = "Optimal control of the Cahn-Hilliard equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one optimal control problem described by a JSON config.
    Solve {
        config: PathBuf,
        /// Output directory; overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a convergence study around a JSON config.
    Converge {
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma separated step counts (time) or node counts per axis (space).
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<usize>,
        /// Step count or node count of the reference run.
        #[arg(long = "ref")]
        reference: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Built-in experiments.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Time,
    Space,
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    /// Print the JSON config of a preset.
    Show {
        name: String,
    },
    Run {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn out_dir(flag: Option<PathBuf>, config: Option<&RunConfig>, fallback: &str) -> PathBuf {
    flag.or_else(|| config.and_then(RunConfig::output_path))
        .unwrap_or_else(|| PathBuf::from(fallback))
}

fn print_catalog() {
    for p in catalog() {
        let aliases = if p.aliases.is_empty() {
            String::new()
        } else {
            format!(" (also {})", p.aliases.join(", "))
        };
        println!("{:<6} {}{}", p.name, p.description, aliases);
    }
}

fn print_rows(rows: &[(String, String)]) {
    for (k, v) in rows {
        println!("{k} = {v}");
    }
}

fn exit_for(converged: bool) -> ExitCode {
    if converged {
        ExitCode::SUCCESS
    } else {
        warn!("fixed-point sweep did not converge");
        ExitCode::from(EXIT_NOT_CONVERGED)
    }
}

fn run_solve(config: &Path, out: Option<PathBuf>) -> Result<ExitCode> {
    let cfg = RunConfig::from_file(config)?;
    let (spec, sweep) = cfg.to_problem()?;
    let dir = out_dir(out, Some(&cfg), "out");
    let sol = solve_ocp(&spec, &sweep)?;
    let files = write_solution(&dir, &spec, &sol)?;
    info!("wrote {} files to {}", files.len(), dir.display());
    println!(
        "converged = {}, sweeps = {}, cost = {:.6e}, output = {}",
        sol.converged,
        sol.sweeps_used,
        sol.cost,
        dir.display()
    );
    Ok(exit_for(sol.converged))
}

fn run_converge(
    config: &Path,
    axis: Axis,
    levels: &[usize],
    reference: usize,
    out: Option<PathBuf>,
) -> Result<ExitCode> {
    let cfg = RunConfig::from_file(config)?;
    let (spec, sweep) = cfg.to_problem()?;
    let report = match axis {
        Axis::Time => temporal_convergence_study(&spec, &sweep, levels, reference)?,
        Axis::Space => spatial_convergence_study(&spec, &sweep, levels, reference)?,
    };
    let dir = out_dir(out, Some(&cfg), "out");
    let path = dir.join("convergence.csv");
    write_convergence(&path, &report)?;
    print_rows(&convergence_summary(&report));
    println!("output = {}", path.display());
    Ok(exit_for(
        report.reference_converged && report.excluded.is_empty(),
    ))
}

fn run_preset_action(action: PresetAction) -> Result<ExitCode> {
    match action {
        PresetAction::List => {
            print_catalog();
            Ok(ExitCode::SUCCESS)
        }
        PresetAction::Show { name } => {
            let preset = find_preset(&name)?;
            println!("{}", preset.config.to_json_pretty());
            match &preset.kind {
                PresetKind::Solve => {}
                PresetKind::Temporal { steps, ref_steps } => {
                    eprintln!(
                        "temporal study over steps {steps:?}, reference {ref_steps}, all schemes"
                    );
                }
                PresetKind::Spatial { points, ref_points } => {
                    eprintln!(
                        "spatial study over points {points:?}, reference {ref_points}, all schemes"
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        PresetAction::Run { name, out } => {
            let dir = out.unwrap_or_else(|| PathBuf::from("out").join(&name));
            let outcome = run_preset(&name, &dir)?;
            if let Some((spec, sol)) = &outcome.solve {
                print_rows(&ch_ocp::harness::output::solution_summary(spec, sol)?);
            }
            for report in &outcome.reports {
                print_rows(&convergence_summary(report));
            }
            println!("output = {}", dir.display());
            Ok(exit_for(outcome.converged))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let unknown_preset = matches!(
        &cli.command,
        Command::Preset {
            action: PresetAction::Run { .. } | PresetAction::Show { .. }
        }
    );
    let result = match cli.command {
        Command::Solve { config, out } => run_solve(&config, out),
        Command::Converge {
            config,
            axis,
            levels,
            reference,
            out,
        } => run_converge(&config, axis, &levels, reference, out),
        Command::Preset { action } => run_preset_action(action),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if unknown_preset && matches!(e, ch_ocp::Error::UnknownPreset(_)) {
                eprintln!("available presets:");
                print_catalog();
            }
            ExitCode::FAILURE
        }
    }
}
