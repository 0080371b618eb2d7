//! `aqpt`: run adiabatic-sweep experiments from JSON configs.
//!
//! Exit status is 0 when every row converged, 2 when some rows were flagged
//! as nonconverged, and 1 on configuration or I/O errors.

use std::path::PathBuf;
use std::process::ExitCode;

use adiabatic_qpt::experiment::{execute, ExperimentConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aqpt", version, about = "Adiabatic sweep error experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Free-fermion dispersion and ground energy of the Ising ring.
    Spectrum(RunArgs),
    /// Exact diagonalization of the spin models.
    Ed(RunArgs),
    /// Bogoliubov mode integration against the adiabatic solution.
    Sweep(RunArgs),
    /// Transition amplitudes of the bath coupling channels.
    Response(RunArgs),
    /// Error probability of adiabatic Grover search.
    Grover(RunArgs),
    /// Finite-size scaling studies with fits.
    Scaling(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (defaults to the config's `output`, then `results/<kind>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (overrides the config).
    #[arg(long)]
    threads: Option<usize>,
    /// Seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
}

impl Command {
    fn parts(&self) -> (&'static str, &RunArgs) {
        match self {
            Command::Spectrum(a) => ("spectrum", a),
            Command::Ed(a) => ("ed", a),
            Command::Sweep(a) => ("sweep", a),
            Command::Response(a) => ("response", a),
            Command::Grover(a) => ("grover", a),
            Command::Scaling(a) => ("scaling", a),
        }
    }
}

fn run(kind: &str, args: &RunArgs) -> Result<usize, String> {
    let mut config = ExperimentConfig::load(&args.config).map_err(|e| format!("{}: {e}", args.config.display()))?;
    if config.experiment.name() != kind {
        return Err(format!(
            "{}: config describes a `{}` experiment, not `{kind}`",
            args.config.display(),
            config.experiment.name()
        ));
    }
    if let Some(t) = args.threads {
        config.threads = Some(t);
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    config.validate().map_err(|e| e.to_string())?;
    let out = args.out.clone().or_else(|| config.output.clone()).unwrap_or_else(|| PathBuf::from("results").join(kind));
    let manifest = execute(&config, &out, &[(env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))])
        .map_err(|e| e.to_string())?;
    eprintln!(
        "{kind}: {} rows ({} nonconverged) in {:.2} s -> {}",
        manifest.rows,
        manifest.nonconverged_rows,
        manifest.wall_time_seconds,
        out.display()
    );
    for f in &manifest.fits {
        eprintln!("  fit {}: exponent {:.6} (r2 {:.6})", f.name, f.fit.exponent, f.fit.r2);
    }
    Ok(manifest.nonconverged_rows)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.command.parts();
    match run(kind, args) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
