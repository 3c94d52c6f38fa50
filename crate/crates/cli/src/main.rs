//! `tsrecon`: FER sweeps, key-rate evaluation and code generation for the
//! two-stage reconciliation decoder.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime or data
//! error.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod code;
mod config;
mod error;
mod skr_cmd;
mod sweep;
mod tools;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::RawConfig;
use crate::error::{CliError, Result};

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "TSRECON_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "tsrecon", version, about = "Two-stage LDPC reconciliation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a seeded FER sweep and write CSV, JSON summary and manifest.
    Sweep {
        /// Flat key = value config file.
        #[arg(long, short)]
        config: Option<PathBuf>,
        /// Override a config key, e.g. --set frames=50. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory (overrides `out_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, short)]
        quiet: bool,
    },
    /// Rerun a sweep from its manifest and check every output checksum.
    Replay {
        manifest: PathBuf,
        /// Where to write the rerun (default: `replay/` next to the manifest).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        parallelism: usize,
        #[arg(long, short)]
        quiet: bool,
    },
    /// Optimize the finite-size key rate for an FER curve, or compare two.
    Skr(skr_cmd::SkrArgs),
    /// Build a PEG code from a degree template and write it as alist.
    GenCode(tools::GenCodeArgs),
    /// Hardware throughput model, eraser budget and measured software speed.
    Throughput(tools::ThroughputArgs),
    /// Decode one frame and print a full trace.
    Decode(tools::DecodeArgs),
    /// List the sweep config keys.
    ConfigKeys,
}

fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("tsrecon-out"))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{text}").map_err(CliError::io("<stdout>"))
}

#[derive(Serialize)]
struct SweepReport<'a> {
    out_dir: PathBuf,
    files: &'a std::collections::BTreeMap<String, String>,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep {
            config,
            overrides,
            out,
            quiet,
        } => {
            let mut raw = match &config {
                Some(path) => RawConfig::load(path)?,
                None => RawConfig::parse("", "(none)", &std::env::current_dir().unwrap_or_default())?,
            };
            for o in &overrides {
                raw.set(o)?;
            }
            let cfg = raw.resolve()?;
            let dir = out.or_else(|| cfg.out_dir.clone()).unwrap_or_else(default_out_dir);
            let result = sweep::run(&cfg, &dir, quiet)?;
            print_json(&SweepReport {
                out_dir: result.dir,
                files: &result.manifest.files,
            })
        }
        Command::Replay {
            manifest,
            out,
            parallelism,
            quiet,
        } => {
            let dir = out.unwrap_or_else(|| {
                manifest
                    .parent()
                    .map(|p| p.join("replay"))
                    .unwrap_or_else(|| PathBuf::from("replay"))
            });
            let result = sweep::replay(&manifest, &dir, parallelism, quiet)?;
            if !quiet {
                eprintln!("replay matches all {} recorded checksums", result.manifest.files.len());
            }
            print_json(&SweepReport {
                out_dir: result.dir,
                files: &result.manifest.files,
            })
        }
        Command::Skr(args) => print_json(&skr_cmd::run(&args)?),
        Command::GenCode(args) => {
            let (path, manifest) = tools::gen_code(&args, default_out_dir())?;
            eprintln!("wrote {}", path.display());
            print_json(&manifest)
        }
        Command::Throughput(args) => print_json(&tools::throughput_report(&args)?),
        Command::Decode(args) => print_json(&tools::decode_trace(&args)?),
        Command::ConfigKeys => {
            let mut stdout = std::io::stdout().lock();
            for (key, help) in config::KEYS {
                writeln!(stdout, "{key:<24} {help}").map_err(CliError::io("<stdout>"))?;
            }
            Ok(())
        }
    }
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
