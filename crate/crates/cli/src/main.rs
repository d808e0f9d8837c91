use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fbmb::config::PipelineConfig;
use fbmb::pipeline::{self, Stage};
use fbmb::Error;

#[derive(Parser)]
#[command(name = "fbmb", version, about = "Frequency-band model-based optoacoustic reconstruction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the phantom and its sinogram.
    Simulate(RunArgs),
    /// Simulate, then reconstruct with every configured method.
    Reconstruct(RunArgs),
    /// Reconstruct and evaluate metrics, spectra and composites.
    Compare(RunArgs),
    /// Summarize the metrics of a finished `compare` run.
    Report {
        /// Artifact directory written by `compare`.
        dir: PathBuf,
    },
    /// Build the forward model for a configuration and store it.
    CacheModel {
        #[command(flatten)]
        config: ConfigArgs,
        /// Destination of the cached model.
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration; built-in defaults are used when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set solver.max_iters=50`.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Shorthand for `--set seed=N`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Shorthand for `--set output.dir=DIR`.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Print the resolved configuration instead of running.
    #[arg(long)]
    dry_run: bool,
}

impl ConfigArgs {
    fn load(&self, extra: Vec<String>) -> fbmb::Result<PipelineConfig> {
        let mut overrides = self.overrides.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("seed={seed}"));
        }
        overrides.extend(extra);
        match &self.config {
            Some(path) => PipelineConfig::load(path, &overrides),
            None => PipelineConfig::from_toml_with_overrides("", &overrides, Some(Path::new("."))),
        }
    }
}

fn toml_string(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn execute(args: &RunArgs, stage: Stage) -> fbmb::Result<()> {
    let mut extra = Vec::new();
    if let Some(dir) = &args.out {
        let dir = std::path::absolute(dir)?;
        extra.push(format!("output.dir={}", toml_string(&dir.to_string_lossy())));
    }
    let config = args.config.load(extra)?;
    if args.dry_run {
        print!("{}", config.to_toml_string()?);
        return Ok(());
    }
    let out = pipeline::run(&config, stage)?;
    for w in &out.manifest.warnings {
        log::warn!("{w}");
    }
    if let Some(c) = &out.comparison {
        print!("{}", c.report.to_text());
    }
    println!("wrote {} artifacts to {}", out.manifest.artifacts.len() + 1, out.dir.display());
    Ok(())
}

fn dispatch(cli: Cli) -> fbmb::Result<()> {
    match cli.command {
        Command::Simulate(a) => execute(&a, Stage::Simulate),
        Command::Reconstruct(a) => execute(&a, Stage::Reconstruct),
        Command::Compare(a) => execute(&a, Stage::Compare),
        Command::Report { dir } => {
            print!("{}", pipeline::report(&dir)?);
            Ok(())
        }
        Command::CacheModel { config, output } => {
            let summary = pipeline::cache_model(&config.load(Vec::new())?, &output)?;
            println!(
                "{}: {} x {} with {} nonzeros (arc density {}, geometry {})",
                output.display(),
                summary.rows,
                summary.cols,
                summary.nnz,
                summary.arc_density,
                summary.geometry_hash
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_validation() {
        1
    } else {
        2
    }
}
