use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wqed_cli::{load_config, run_experiment, Backend, CliError, Experiment, Overrides};

#[derive(Parser)]
#[command(name = "wqed", version = wqed_cli::output::VERSION, about = "Atom-mirror feedback experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML experiment config
    #[arg(long)]
    config: PathBuf,
    /// Run directory (overrides output.dir)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    backend: Option<Backend>,
    /// Worker threads for sweeps and trajectories
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Spontaneous emission from |e, vacuum>, against the delay equation
    Emission(RunArgs),
    /// Gaussian coherent pulse scattered off the atom-mirror system
    Scattering(RunArgs),
    /// Driven steady states over a Rabi ladder, plus the Markovian region
    SteadySweep(RunArgs),
    /// Emission error against the delay equation over an N_A ladder
    Convergence(RunArgs),
    /// Markovian decay rates against 2 Gamma sin^2(phi/2)
    Purcell(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::Emission(a) => (Experiment::Emission, a),
        Command::Scattering(a) => (Experiment::Scattering, a),
        Command::SteadySweep(a) => (Experiment::SteadySweep, a),
        Command::Convergence(a) => (Experiment::Convergence, a),
        Command::Purcell(a) => (Experiment::Purcell, a),
    };
    match execute(experiment, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(experiment: Experiment, args: RunArgs) -> Result<(), CliError> {
    if let Some(n) = args.threads {
        set_threads(n)?;
    }
    let cfg = load_config(&args.config)?;
    let ov = Overrides { out: args.out, seed: args.seed, backend: args.backend };
    let outcome = run_experiment(experiment, cfg, &ov)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    println!("{}", outcome.dir.display());
    for f in &outcome.files {
        println!("  {f}");
    }
    Ok(())
}

#[cfg(feature = "parallel")]
fn set_threads(n: usize) -> Result<(), CliError> {
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| {
        CliError::Config(wqed_cli::ConfigError { path: "--threads".into(), message: e.to_string() })
    })
}

#[cfg(not(feature = "parallel"))]
fn set_threads(_n: usize) -> Result<(), CliError> {
    Ok(())
}
