use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use muskat_core::experiments::{
    self,
    config::RunConfig,
    output::{ensure_dir, output_dir},
    Outcome,
};
use muskat_core::MuskatError;

#[derive(Parser)]
#[command(name = "muskat", version, about = "Three-phase Muskat simulator and verification lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// JSON run configuration; defaults apply to every missing field.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the configuration and MUSKAT_OUT_DIR).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the parallel loops.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one profile and record norms along the way.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Run the profile for every gap in `params.sigmas`.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Compare with the two-phase flow as the gap shrinks.
    Twophase {
        #[command(flatten)]
        common: Common,
    },
    /// Check decay rates of a single small mode against the linearization.
    Linear {
        #[command(flatten)]
        common: Common,
    },
    /// Randomised checks of the kernel identities and inequalities.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Overrides `verify.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `verify.samples`.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Render SVG charts from a norms or sweep CSV file.
    Plot {
        csv: PathBuf,
        /// Directory for the charts; defaults to the CSV's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Assertion,
    Config(MuskatError),
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf), MuskatError> {
    if let Some(t) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| MuskatError::Config(format!("thread pool: {e}")))?;
    }
    let cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out = common.out.clone().unwrap_or_else(|| output_dir(&cfg.output.dir));
    Ok((cfg, out))
}

fn report(outcome: &Outcome) -> Result<(), Failure> {
    for m in &outcome.messages {
        println!("{m}");
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    if outcome.passed {
        Ok(())
    } else {
        Err(Failure::Assertion)
    }
}

fn plot(csv: &Path, out: Option<PathBuf>) -> Result<(), Failure> {
    let dir = out.unwrap_or_else(|| csv.parent().map(Path::to_path_buf).unwrap_or_default());
    let dir = if dir.as_os_str().is_empty() { PathBuf::from(".") } else { dir };
    ensure_dir(&dir).map_err(Failure::Config)?;
    let files = experiments::plot::plot_file(csv, &dir).map_err(Failure::Config)?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    let cfg_err = Failure::Config;
    match cmd {
        Command::Simulate { common } => {
            let (cfg, out) = load(&common).map_err(cfg_err)?;
            report(&experiments::simulate(&cfg, &out).map_err(cfg_err)?)
        }
        Command::Sweep { common } => {
            let (cfg, out) = load(&common).map_err(cfg_err)?;
            report(&experiments::sigma_sweep(&cfg, &out).map_err(cfg_err)?.0)
        }
        Command::Twophase { common } => {
            let (cfg, out) = load(&common).map_err(cfg_err)?;
            report(&experiments::twophase_limit(&cfg, &out).map_err(cfg_err)?.0)
        }
        Command::Linear { common } => {
            let (cfg, out) = load(&common).map_err(cfg_err)?;
            report(&experiments::linear_check(&cfg, &out).map_err(cfg_err)?.0)
        }
        Command::Verify {
            common,
            seed,
            samples,
        } => {
            let (mut cfg, out) = load(&common).map_err(cfg_err)?;
            if let Some(s) = seed {
                cfg.verify.seed = s;
            }
            if let Some(n) = samples {
                cfg.verify.samples = n;
            }
            let (outcome, _) = experiments::verify_kernels(&cfg, &out).map_err(cfg_err)?;
            if cfg.verify.samples == 0 {
                eprintln!("warning: zero samples requested");
            }
            report(&outcome)
        }
        Command::Plot { csv, out } => plot(&csv, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertion) => {
            eprintln!("muskat: check failed");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("muskat: {e}");
            ExitCode::from(2)
        }
    }
}
