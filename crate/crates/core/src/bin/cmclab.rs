use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cmclab::harness::{run_experiment, ExperimentConfig, ExperimentKind, Overrides};

/// Run CMC foliation and mass experiments from TOML configs.
#[derive(Parser)]
#[command(name = "cmclab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// ADM mass and mass-flux convergence on coordinate spheres.
    Mass(RunArgs),
    /// Center of mass from boundary integrals.
    CenterOfMass(RunArgs),
    /// CMC leaves along a list of mean curvatures.
    Foliate(RunArgs),
    /// Leaves plus the lowest mean-zero Jacobi eigenvalue scaling.
    Stability(RunArgs),
    /// Tilted flux integral over off-center spheres.
    QtScan(RunArgs),
    /// Blow-down limits and the Gauss-map energy profile.
    Blowdown(RunArgs),
    /// Curvature certificates along a foliation.
    Certificates(RunArgs),
    /// Newton from randomized initial surfaces at one mean curvature.
    UniquenessProbe(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.json, timings.json and CSV tables.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Colatitude ring count override.
    #[arg(long)]
    grid: Option<usize>,
    /// Surface degree override.
    #[arg(long)]
    lmax: Option<usize>,
}

fn split(c: Command) -> (ExperimentKind, RunArgs) {
    match c {
        Command::Mass(a) => (ExperimentKind::Mass, a),
        Command::CenterOfMass(a) => (ExperimentKind::CenterOfMass, a),
        Command::Foliate(a) => (ExperimentKind::Foliate, a),
        Command::Stability(a) => (ExperimentKind::Stability, a),
        Command::QtScan(a) => (ExperimentKind::QtScan, a),
        Command::Blowdown(a) => (ExperimentKind::Blowdown, a),
        Command::Certificates(a) => (ExperimentKind::Certificates, a),
        Command::UniquenessProbe(a) => (ExperimentKind::UniquenessProbe, a),
    }
}

fn run(kind: ExperimentKind, args: RunArgs) -> Result<bool, Box<dyn std::error::Error>> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    let mut cfg = ExperimentConfig::load(&args.config)?;
    cfg.apply(&Overrides {
        experiment: Some(kind),
        output_dir: args.out,
        n_colat: args.grid,
        l_max: args.lmax,
    })?;
    let report = run_experiment(&cfg)?;
    for s in report.stages.iter().filter(|s| !s.ok) {
        eprintln!(
            "stage {} failed: {}",
            s.name,
            s.error.as_deref().unwrap_or("")
        );
    }
    for note in &report.notes {
        println!("note: {note}");
    }
    for c in &report.checks {
        println!("{}", c.line());
    }
    if let Some(dir) = &cfg.output_dir {
        println!("report written to {}", dir.display());
    }
    println!("{}", if report.passed { "PASSED" } else { "FAILED" });
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = split(cli.command);
    match run(kind, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
