//! Command-line front end for the experiment runner.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use open_baker::experiments::{self, ExperimentConfig, ExperimentKind};
use open_baker::Error;

#[derive(Parser)]
#[command(name = "baker", version, about = "Spectra and propagation experiments for quantum open baker's maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trimmed spectrum at each K
    Spectrum(Flags),
    /// Counting function over a (K, nu) grid and Weyl slopes
    WeylScan(Flags),
    /// Counting function at a single N over many nu
    NuScan(Flags),
    /// Leading eigenvalue decay for a single-letter alphabet
    DeltaZero(Flags),
    /// Weyl scan with a random perturbation of the trimmed matrix
    Perturb(Flags),
    /// Forward and backward propagation of a random state
    Propagate(Flags),
    /// Fourier profile of one eigenvector
    Eigvec(Flags),
    /// Approximate-inverse identity and localization checks
    VerifyIdentity(Flags),
}

#[derive(Args)]
struct Flags {
    /// Base M
    #[arg(long)]
    base: Option<usize>,
    /// Alphabet letters, comma separated
    #[arg(long, value_delimiter = ',')]
    alphabet: Option<Vec<usize>>,
    /// Cutoff tightness
    #[arg(long)]
    tau: Option<f64>,
    /// K values, comma separated (N = K·M)
    #[arg(long = "K-list", value_delimiter = ',')]
    k_list: Option<Vec<usize>>,
    /// nu values, comma separated
    #[arg(long = "nu-list", value_delimiter = ',')]
    nu_list: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Operator norm of the random perturbation
    #[arg(long = "perturb-norm")]
    perturb_norm: Option<f64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the long K grid (up to 625) for Weyl scans
    #[arg(long)]
    full: bool,
    /// JSON file whose fields override the flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// Propagation steps
    #[arg(long)]
    steps: Option<usize>,
    /// Eigenvalue rank for the eigenvector dump
    #[arg(long)]
    rank: Option<usize>,
    /// Spectral parameters for identity checks, comma separated
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    /// Worker threads
    #[arg(long)]
    workers: Option<usize>,
}

impl Command {
    fn split(self) -> (ExperimentKind, Flags) {
        match self {
            Command::Spectrum(f) => (ExperimentKind::Spectrum, f),
            Command::WeylScan(f) => (ExperimentKind::WeylScan, f),
            Command::NuScan(f) => (ExperimentKind::NuScan, f),
            Command::DeltaZero(f) => (ExperimentKind::DeltaZero, f),
            Command::Perturb(f) => (ExperimentKind::Perturb, f),
            Command::Propagate(f) => (ExperimentKind::Propagate, f),
            Command::Eigvec(f) => (ExperimentKind::Eigvec, f),
            Command::VerifyIdentity(f) => (ExperimentKind::VerifyIdentity, f),
        }
    }
}

fn build_config(kind: ExperimentKind, f: Flags) -> Result<ExperimentConfig, Error> {
    let mut c = ExperimentConfig::for_kind(kind, f.full);
    if let Some(v) = f.base {
        c.base = v;
    }
    if let Some(v) = f.alphabet {
        c.alphabet = v;
    }
    if let Some(v) = f.tau {
        c.tau = v;
    }
    if let Some(v) = f.k_list {
        c.k_list = v;
    }
    if let Some(v) = f.nu_list {
        c.nu_list = v;
    }
    if let Some(v) = f.seed {
        c.seed = v;
    }
    if let Some(v) = f.perturb_norm {
        c.perturbation_norm = v;
    }
    if let Some(v) = f.out {
        c.output_dir = v;
    }
    if let Some(v) = f.steps {
        c.steps = v;
    }
    if let Some(v) = f.rank {
        c.rank = v;
    }
    if let Some(v) = f.lambdas {
        c.lambdas = v;
    }
    if f.workers.is_some() {
        c.workers = f.workers;
    }
    if let Some(path) = f.config {
        let text = std::fs::read_to_string(&path)?;
        let overrides: serde_json::Value = serde_json::from_str(&text)?;
        let serde_json::Value::Object(overrides) = overrides else {
            return Err(Error::InvalidParameter(format!("{} must hold a JSON object", path.display())));
        };
        let mut merged = serde_json::to_value(&c)?;
        if let serde_json::Value::Object(m) = &mut merged {
            m.extend(overrides);
            m.insert("kind".into(), serde_json::to_value(kind)?);
        }
        c = serde_json::from_value(merged)
            .map_err(|e| Error::InvalidParameter(format!("bad config {}: {e}", path.display())))?;
    }
    c.validate()?;
    Ok(c)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (kind, flags) = cli.command.split();
    let config = match build_config(kind, flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let run = match experiments::run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    for line in experiments::summary_lines(&run.record) {
        println!("{line}");
    }
    match experiments::write_outputs(&run, &config.output_dir) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    ExitCode::from(run.exit_code() as u8)
}
