//! Config-driven driver for the hyperspdc simulation pipelines.
//!
//! Each subcommand runs one experiment from a TOML config and writes
//! plot-ready CSV files, a summary.toml, and a manifest.toml into the
//! output directory.

mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ExperimentConfig, Kind};

#[derive(Parser)]
#[command(name = "hyperspdc", version, about = "SPDC hyperentanglement design and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Check the config and exit without running.
    #[arg(long)]
    validate_only: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize an aperiodic poling pattern for the target PMF.
    DesignCrystal(RunArgs),
    /// Optimize pulse-shaper pixels toward a multi-Gaussian pump.
    ShapePump(RunArgs),
    /// Assemble the four-bin Gaussian-model JSA and its marginals.
    SimulateJsa(RunArgs),
    /// Schmidt-decompose a model or measured joint spectrum.
    Schmidt(RunArgs),
    /// Intra-pair Hong-Ou-Mandel trace.
    HomIntra(RunArgs),
    /// Heralded inter-pair Hong-Ou-Mandel trace.
    HomInter(RunArgs),
    /// Polarisation-resolved HOM traces of the hyperentangled state.
    HomHyper(RunArgs),
    /// Dispersive-fibre spectrometer simulation and JSI reconstruction.
    TofsRoundtrip(RunArgs),
    /// Maximum-likelihood polarisation tomography with uncertainties.
    TomoFit(RunArgs),
    /// Reproduce a named figure's data files.
    FigureRepro(RunArgs),
}

impl Command {
    fn split(&self) -> (Kind, &RunArgs) {
        match self {
            Command::DesignCrystal(a) => (Kind::DesignCrystal, a),
            Command::ShapePump(a) => (Kind::ShapePump, a),
            Command::SimulateJsa(a) => (Kind::SimulateJsa, a),
            Command::Schmidt(a) => (Kind::Schmidt, a),
            Command::HomIntra(a) => (Kind::HomIntra, a),
            Command::HomInter(a) => (Kind::HomInter, a),
            Command::HomHyper(a) => (Kind::HomHyper, a),
            Command::TofsRoundtrip(a) => (Kind::TofsRoundtrip, a),
            Command::TomoFit(a) => (Kind::TomoFit, a),
            Command::FigureRepro(a) => (Kind::FigureRepro, a),
        }
    }
}

fn configure_threads() {
    if let Ok(raw) = std::env::var("HYPERSPDC_THREADS") {
        match raw.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring HYPERSPDC_THREADS = {raw:?}"),
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("config file {}: {e}", path.display()))
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let (kind, args) = cli.command.split();

    let mut cfg = match load_config(&args.config) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    let base = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));

    let diags = config::validate(kind, &cfg, &base);
    if !diags.is_empty() {
        eprintln!("config {} is invalid for {}:", args.config.display(), kind.name());
        for d in &diags {
            eprintln!("  - {d}");
        }
        return ExitCode::from(1);
    }
    if args.validate_only {
        println!("config ok for {}", kind.name());
        return ExitCode::SUCCESS;
    }

    match run::run(kind, &cfg, &base, &args.out) {
        Ok(headline) => {
            println!("{headline}");
            println!("artifacts in {}", args.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}: {e} (config {})", kind.name(), args.config.display());
            ExitCode::from(1)
        }
    }
}
