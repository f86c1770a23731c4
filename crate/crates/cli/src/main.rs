use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hfb_core::driver::{self, RunConfig};
use hfb_core::reference::{self, Scale};
use hfb_core::{Algorithm, HfbError, Mode, Status};

#[derive(Parser)]
#[command(name = "hfb", version, about = "Hartree-Fock-Bogoliubov ground states of radial attractive fermion systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Overrides {
    /// Output directory for logs, state and summary.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tensor_cache: Option<PathBuf>,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    basis_size: Option<usize>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    l_max: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    algorithm: Option<AlgorithmArg>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    commutator_tol: Option<f64>,
    /// Skip the HF pre-run.
    #[arg(long)]
    no_hf_prerun: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Hf,
    Hfb,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Roothaan,
    Oda,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Small,
    Medium,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Single ground-state calculation.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// One calculation per value of the `[sweep]` section.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Samples of the particle number ν(μ) for the mean field of a stored state.
    NuProfile {
        config: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare against published reference values.
    Check {
        #[arg(long, value_enum, default_value = "small")]
        scale: ScaleArg,
    },
}

fn load(path: &Path, o: &Overrides) -> Result<RunConfig, HfbError> {
    let mut c = RunConfig::load(path)?;
    if o.out.is_some() {
        c.output.dir = o.out.clone();
    }
    if o.tensor_cache.is_some() {
        c.output.tensor_cache = o.tensor_cache.clone();
    }
    if let Some(v) = o.particles {
        c.system.particles = v;
    }
    if let Some(v) = o.basis_size {
        c.system.basis_size = v;
    }
    if let Some(v) = o.r_max {
        c.system.r_max = v;
    }
    if let Some(v) = o.l_max {
        c.system.l_max = v;
    }
    if let Some(m) = o.mode {
        c.scf.mode = match m {
            ModeArg::Hf => Mode::Hf,
            ModeArg::Hfb => Mode::Hfb,
        };
    }
    if let Some(a) = o.algorithm {
        c.scf.algorithm = match a {
            AlgorithmArg::Roothaan => Algorithm::Roothaan,
            AlgorithmArg::Oda => Algorithm::Oda,
        };
    }
    if let Some(v) = o.max_iter {
        c.scf.max_iter = v;
    }
    if let Some(v) = o.commutator_tol {
        c.scf.commutator_tol = v;
    }
    if o.no_hf_prerun {
        c.hf_prerun = false;
    }
    c.validate()?;
    Ok(c)
}

fn status_code(s: Status) -> u8 {
    match s {
        Status::Converged => 0,
        Status::Oscillating => 2,
        Status::MaxIter => 3,
    }
}

fn error_code(e: &HfbError) -> u8 {
    match e {
        HfbError::Config(_) | HfbError::InvalidArgument(_) | HfbError::Unsupported(_) => 4,
        HfbError::NumericalBreakdown(_) | HfbError::IllConditionedDerivative { .. } | HfbError::SingularPoint => 5,
        HfbError::Io(_) | HfbError::Json(_) => 1,
    }
}

fn execute(cli: Cli) -> Result<u8, HfbError> {
    match cli.command {
        Command::Run { config, overrides } => {
            let cfg = load(&config, &overrides)?;
            let out = driver::run_single(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&out.summary)?);
            Ok(status_code(out.summary.status()))
        }
        Command::Sweep { config, overrides } => {
            let cfg = load(&config, &overrides)?;
            let rows = driver::sweep(&cfg)?;
            let sw = cfg.sweep.as_ref().expect("validated sweep");
            driver::write_sweep(std::io::stdout().lock(), sw.parameter, &rows)?;
            Ok(rows.iter().map(|r| status_code(r.summary.status())).max().unwrap_or(0))
        }
        Command::NuProfile { config, state, lo, hi, samples, out } => {
            let cfg = RunConfig::load(&config)?;
            let model = driver::build_model(&cfg)?;
            let st = driver::load_state(&state)?;
            let profile = driver::nu_profile(&model, &st, lo, hi, samples)?;
            match out {
                Some(path) => driver::write_nu_profile(std::fs::File::create(path)?, &profile)?,
                None => driver::write_nu_profile(std::io::stdout().lock(), &profile)?,
            }
            Ok(0)
        }
        Command::Check { scale } => {
            let scale = match scale {
                ScaleArg::Small => Scale::Small,
                ScaleArg::Medium => Scale::Medium,
                ScaleArg::Full => Scale::Full,
            };
            let checks = reference::run_checks(scale, |c| println!("{}", c.line()))?;
            Ok(if checks.iter().all(|c| c.pass()) { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_code(&e))
        }
    }
}
