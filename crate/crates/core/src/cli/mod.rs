//! Batch driver: `fuzzyspec <command> --config <path> [--out <dir>]`.
//!
//! Exit codes are 0 on success, 1 on a numerical failure (with `error.json`
//! written to the output directory) and 2 on a configuration or usage error.
//! The seed is taken from `--seed`, then `FUZZYSPEC_SEED`, then the config.

pub mod config;
pub mod plot;
mod run;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{parse_config, Command, ConfigError, Effective, ModelName, Parameters, RunConfig};
pub use run::{execute, Artifact};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "FUZZYSPEC_SEED";

#[derive(Parser, Debug)]
#[command(name = "fuzzyspec", version, about = "Deficiency, extension, flow and uncertainty analysis of symmetric operators")]
struct Cli {
    #[command(subcommand)]
    action: Action,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides both `FUZZYSPEC_SEED` and the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Action {
    Analyze(RunArgs),
    Spectrum(RunArgs),
    Flow(RunArgs),
    UncertaintyCurve(RunArgs),
    Gup(RunArgs),
    GenerateAlgebra(RunArgs),
    FuzzybDemo(RunArgs),
    /// Writes a gnuplot script for existing result CSVs.
    Plot {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Script path; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Entry point of the binary; returns the process exit code.
pub fn main() -> i32 {
    run_from_args(std::env::args_os())
}

pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    // Threaded reductions would reorder floating-point sums between runs.
    faer::set_global_parallelism(faer::Parallelism::None);
    let (command, args) = match cli.action {
        Action::Analyze(a) => (Command::Analyze, a),
        Action::Spectrum(a) => (Command::Spectrum, a),
        Action::Flow(a) => (Command::Flow, a),
        Action::UncertaintyCurve(a) => (Command::UncertaintyCurve, a),
        Action::Gup(a) => (Command::Gup, a),
        Action::GenerateAlgebra(a) => (Command::GenerateAlgebra, a),
        Action::FuzzybDemo(a) => (Command::FuzzybDemo, a),
        Action::Plot { files, out } => return plot_command(&files, out.as_deref()),
    };
    run_command(command, &args)
}

fn env_seed() -> Result<Option<u64>, ConfigError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| ConfigError {
            path: SEED_ENV.into(),
            message: format!("`{v}` is not an unsigned integer"),
        }),
        Err(_) => Ok(None),
    }
}

fn run_command(command: Command, args: &RunArgs) -> i32 {
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return EXIT_CONFIG;
        }
    };
    let resolved = parse_config(&text).and_then(|cfg| {
        let seed = match args.seed {
            Some(s) => Some(s),
            None => env_seed()?,
        };
        let eff = cfg.effective(command, seed)?;
        Ok((cfg, eff))
    });
    let (cfg, eff) = match resolved {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return EXIT_CONFIG;
    }
    match execute(&eff) {
        Ok(artifacts) => {
            for a in &artifacts {
                if let Err(e) = std::fs::write(out_dir.join(&a.name), &a.contents) {
                    eprintln!("error: cannot write {}: {e}", a.name);
                    return EXIT_NUMERICAL;
                }
            }
            for a in &artifacts {
                println!("{}", out_dir.join(&a.name).display());
            }
            EXIT_OK
        }
        Err(crate::Error::Config(msg)) => {
            eprintln!("error: {msg}");
            EXIT_CONFIG
        }
        Err(e) => {
            let report = run::error_report(&eff, &e);
            let _ = std::fs::write(out_dir.join("error.json"), report);
            eprintln!("error: {e}");
            EXIT_NUMERICAL
        }
    }
}

fn plot_command(files: &[PathBuf], out: Option<&Path>) -> i32 {
    match plot::emit_plot_script(files) {
        Ok(script) => match out {
            Some(p) => match std::fs::write(p, script) {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    eprintln!("error: cannot write {}: {e}", p.display());
                    EXIT_NUMERICAL
                }
            },
            None => {
                print!("{script}");
                EXIT_OK
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_NUMERICAL
        }
    }
}
