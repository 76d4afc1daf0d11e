//! `psreg`: dataset generation, matching, registration and evaluation.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use commands::Failure;
use config::{MatchSource, ProviderName, RunConfig};
use psreg_core::matching::OracleFeatureParams;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "psreg", version, about = "Patient-specific non-rigid point cloud registration")]
struct Cli {
    /// Run configuration file (TOML); flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic training samples from a patient
    Generate(GenerateArgs),
    /// Predict correspondences for one sample and score them
    Match(MatchArgs),
    /// Register one sample's complete cloud onto its partial cloud
    Register(RegisterArgs),
    /// Aggregate the metrics of every sample in a run directory
    Evaluate(EvaluateArgs),
    /// generate, match, register and evaluate in one run
    Pipeline(PipelineArgs),
    /// Write a synthetic liver-like patient (meshes, lobe labels, patient.toml)
    Phantom(PhantomArgs),
    /// Write ground-truth coordinate features for a sample
    OracleFeatures(OracleArgs),
}

#[derive(Args)]
struct SampleSetFlags {
    /// Patient configuration file
    #[arg(long, value_name = "FILE")]
    patient: Option<PathBuf>,
    /// First sample seed
    #[arg(long)]
    seed: Option<u64>,
    /// Number of samples (seeds seed..seed+count)
    #[arg(long)]
    count: Option<usize>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct MatchFlags {
    /// Feature provider
    #[arg(long, value_enum)]
    provider: Option<ProviderName>,
    /// Feature tensor file for `features-file`
    #[arg(long, value_name = "FILE")]
    features: Option<PathBuf>,
    /// Network weight file for `network`
    #[arg(long, value_name = "FILE")]
    weights: Option<PathBuf>,
    /// Dual-softmax temperature
    #[arg(long)]
    tau: Option<f64>,
    /// Mutual-nearest-neighbor confidence threshold
    #[arg(long)]
    theta: Option<f64>,
}

#[derive(Args)]
struct RegisterFlags {
    /// Young's modulus in Pa
    #[arg(long)]
    young: Option<f64>,
    /// Poisson ratio
    #[arg(long)]
    poisson: Option<f64>,
    /// Data-term stiffness (default: 10 x mean diagonal of S)
    #[arg(long)]
    k: Option<f64>,
    /// Incremental solve steps
    #[arg(long)]
    substeps: Option<usize>,
    /// Rigid prealignment from the matches before the elastic solve
    #[arg(long, value_name = "BOOL")]
    prealign: Option<bool>,
    /// Correspondences that drive the registration
    #[arg(long, value_enum)]
    matches: Option<MatchSource>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    set: SampleSetFlags,
}

#[derive(Args)]
struct MatchArgs {
    /// Sample directory
    #[arg(long, value_name = "DIR")]
    sample: PathBuf,
    #[command(flatten)]
    flags: MatchFlags,
}

#[derive(Args)]
struct RegisterArgs {
    /// Sample directory
    #[arg(long, value_name = "DIR")]
    sample: PathBuf,
    /// Patient configuration file
    #[arg(long, value_name = "FILE")]
    patient: Option<PathBuf>,
    /// Correspondence JSON file (overrides --matches)
    #[arg(long, value_name = "FILE")]
    matches_file: Option<PathBuf>,
    /// Output directory (default: <sample>/registration)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(flatten)]
    flags: RegisterFlags,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Run directory holding sample directories
    #[arg(long, value_name = "DIR")]
    run: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    set: SampleSetFlags,
    #[command(flatten)]
    matching: MatchFlags,
    #[command(flatten)]
    registration: RegisterFlags,
}

#[derive(Args)]
struct PhantomArgs {
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Geodesic sphere frequency (10 f^2 + 2 surface vertices)
    #[arg(long, default_value_t = 32)]
    surface_frequency: usize,
    /// Grid cells per axis of the volume mesh (6 n^3 tetrahedra)
    #[arg(long, default_value_t = 13)]
    tet_resolution: usize,
}

#[derive(Args)]
struct OracleArgs {
    /// Sample directory
    #[arg(long, value_name = "DIR")]
    sample: PathBuf,
    /// Output file (default: <sample>/oracle_features.bin)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Feature dimension
    #[arg(long)]
    dim: Option<usize>,
    /// Kernel bandwidth in normalized units
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Seed of the random feature map
    #[arg(long)]
    feature_seed: Option<u64>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn apply_set(cfg: &mut RunConfig, f: SampleSetFlags) {
    if f.patient.is_some() {
        cfg.patient = f.patient;
    }
    if f.out.is_some() {
        cfg.out = f.out;
    }
    set(&mut cfg.seed, f.seed);
    set(&mut cfg.count, f.count);
    set(&mut cfg.workers, f.workers);
}

fn apply_match(cfg: &mut RunConfig, f: MatchFlags) {
    let m = &mut cfg.matching;
    set(&mut m.provider, f.provider);
    if f.features.is_some() {
        m.features = f.features;
    }
    if f.weights.is_some() {
        m.weights = f.weights;
    }
    set(&mut m.temperature, f.tau);
    set(&mut m.threshold, f.theta);
}

fn apply_register(cfg: &mut RunConfig, f: RegisterFlags) {
    let r = &mut cfg.registration;
    set(&mut r.fem.material.young_modulus, f.young);
    set(&mut r.fem.material.poisson_ratio, f.poisson);
    if f.k.is_some() {
        r.fem.k = f.k;
    }
    set(&mut r.fem.substeps, f.substeps);
    set(&mut r.prealign, f.prealign);
    set(&mut r.matches, f.matches);
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Generate(a) => {
            apply_set(&mut cfg, a.set);
            cfg.validate()?;
            commands::generate(&cfg)?;
        }
        Command::Match(a) => {
            apply_match(&mut cfg, a.flags);
            cfg.validate()?;
            commands::match_command(&cfg, &a.sample)?;
        }
        Command::Register(a) => {
            if a.patient.is_some() {
                cfg.patient = a.patient;
            }
            apply_register(&mut cfg, a.flags);
            cfg.validate()?;
            commands::register_command(&cfg, &a.sample, a.matches_file.as_deref(), a.out.as_deref())?;
        }
        Command::Evaluate(a) => {
            commands::evaluate(&a.run)?;
        }
        Command::Pipeline(a) => {
            apply_set(&mut cfg, a.set);
            apply_match(&mut cfg, a.matching);
            apply_register(&mut cfg, a.registration);
            cfg.validate()?;
            commands::pipeline(&cfg)?;
        }
        Command::Phantom(a) => {
            commands::phantom(&a.out, a.surface_frequency, a.tet_resolution)?;
        }
        Command::OracleFeatures(a) => {
            let mut p: OracleFeatureParams = cfg.matching.oracle;
            set(&mut p.dim, a.dim);
            set(&mut p.bandwidth, a.bandwidth);
            set(&mut p.seed, a.feature_seed);
            if p.dim == 0 || !(p.bandwidth > 0.0) {
                return Err(psreg_core::Error::Config("oracle features need dim > 0 and bandwidth > 0".into()).into());
            }
            commands::oracle_features(&a.sample, a.out.as_deref(), &p)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        // the panic hook has already printed the message
        Err(_) => ExitCode::from(5),
    }
}
