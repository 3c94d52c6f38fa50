//! The `sweep` and `replay` subcommands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use tsrecon::channel::{csv_row, run_delta_sweep, FerCurve, FerPoint, SweepSpec, CSV_HEADER};
use tsrecon::fixed::Arithmetic;

use crate::code::{load_code, sha256_hex};
use crate::config::{RawConfig, SweepConfig};
use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";

/// Echo of everything needed to regenerate an output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub master_seed: u64,
    /// Canonical config text; feed it back through the config parser to
    /// rerun.
    pub config: String,
    pub code_sha256: String,
    /// Output file name to SHA-256.
    pub files: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct CurveSummary<'a> {
    arm: String,
    arithmetic: String,
    check_update: String,
    t_max: usize,
    delta: f64,
    delta_units: &'static str,
    file: String,
    points: &'a [FerPoint],
}

#[derive(Serialize)]
struct Summary<'a> {
    units: BTreeMap<&'static str, &'static str>,
    code: CodeSummary,
    curves: Vec<CurveSummary<'a>>,
}

#[derive(Serialize)]
struct CodeSummary {
    n: usize,
    m: usize,
    rate: f64,
    edges: usize,
    sha256: String,
}

fn units() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        ("snr", "linear Es/N0 of the binary-input AWGN channel"),
        ("fer1", "stage-one frame error rate, fraction of frames"),
        ("fer2", "frame error rate after stage two, fraction of frames"),
        ("ci_lo, ci_hi", "95% Wilson interval on fer2"),
        ("mean_iters", "stage-one iterations per frame"),
        ("mean_bits_fixed", "peeling assignments per stage-one failure"),
        ("recovery", "stage-one failures recovered by stage two, fraction; empty when there were none"),
        ("delta", "reliability threshold: LSB units for fixed arms, LLR units for float arms"),
        ("undetected", "frames whose syndrome matched with a wrong word"),
    ])
}

fn recovery_cell(p: &FerPoint) -> String {
    p.recovery_fraction().map_or(String::new(), |f| f.to_string())
}

pub struct SweepOutput {
    pub dir: PathBuf,
    pub manifest: RunManifest,
}

/// Runs every (arm, t_max) combination and writes all outputs into `dir`.
pub fn run(cfg: &SweepConfig, dir: &Path, quiet: bool) -> Result<SweepOutput> {
    let (h, code_sha) = load_code(&cfg.code)?;
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;

    let spec = SweepSpec {
        snrs: cfg.snrs.clone(),
        frames_per_point: cfg.frames,
        master_seed: cfg.master_seed,
        parallelism: cfg.parallelism,
    };
    let mut runs: Vec<(String, Arithmetic, String, usize, f64, FerCurve)> = Vec::new();
    for &arm in &cfg.arms {
        for &t_max in &cfg.t_max {
            let dec = cfg.decoder(arm, t_max);
            let deltas = cfg.deltas(arm);
            let started = Instant::now();
            let curves = run_delta_sweep(&h, &spec, &dec, &deltas, cfg.peel_limit())?;
            if !quiet {
                let frames = cfg.frames * cfg.snrs.len();
                let secs = started.elapsed().as_secs_f64();
                eprintln!(
                    "{} t_max={t_max}: {frames} frames in {secs:.1} s ({:.2} Mbps software)",
                    arm.label(),
                    frames as f64 * h.n_cols() as f64 / secs / 1e6
                );
            }
            for (delta, curve) in deltas.into_iter().zip(curves) {
                runs.push((arm.label(), arm.arithmetic, dec.check_update.to_string(), t_max, delta, curve));
            }
        }
    }

    let mut files: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    let mut combined = format!("arm,t_max,delta,{CSV_HEADER},recovered,recovery\n");
    let mut summaries = Vec::new();
    for (label, arithmetic, check, t_max, delta, curve) in &runs {
        let name = format!("{label}_t{t_max}_d{delta}.csv");
        for p in &curve.points {
            writeln!(
                combined,
                "{label},{t_max},{delta},{},{},{}",
                csv_row(p),
                p.recovered(),
                recovery_cell(p)
            )
            .unwrap();
        }
        files.insert(name.clone(), curve.to_csv().into_bytes());
        summaries.push(CurveSummary {
            arm: label.clone(),
            arithmetic: arithmetic.to_string(),
            check_update: check.clone(),
            t_max: *t_max,
            delta: *delta,
            delta_units: if arithmetic.is_fixed() { "lsb" } else { "llr" },
            file: name,
            points: &curve.points,
        });
    }
    files.insert("sweep.csv".into(), combined.into_bytes());
    let summary = Summary {
        units: units(),
        code: CodeSummary {
            n: h.n_cols(),
            m: h.n_rows(),
            rate: h.rate(),
            edges: h.n_edges(),
            sha256: code_sha.clone(),
        },
        curves: summaries,
    };
    let mut json = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    json.push(b'\n');
    files.insert("summary.json".into(), json);

    for (name, bytes) in &files {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(CliError::io(&path))?;
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        master_seed: cfg.master_seed,
        config: cfg.echo(),
        code_sha256: code_sha,
        files: files.iter().map(|(k, v)| (k.clone(), sha256_hex(v))).collect(),
    };
    let path = dir.join(MANIFEST);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(CliError::io(&path))?;
    Ok(SweepOutput {
        dir: dir.to_path_buf(),
        manifest,
    })
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

/// Reruns the sweep recorded in `manifest_path` into `out` and compares
/// every output checksum.
pub fn replay(manifest_path: &Path, out: &Path, parallelism: usize, quiet: bool) -> Result<SweepOutput> {
    let recorded = read_manifest(manifest_path)?;
    let mut raw = RawConfig::parse(&recorded.config, &manifest_path.display().to_string(), Path::new("/"))?;
    raw.set(&format!("parallelism={parallelism}"))?;
    let cfg = raw.resolve()?;
    let fresh = run(&cfg, out, quiet)?;
    if fresh.manifest.code_sha256 != recorded.code_sha256 {
        return Err(CliError::Replay("code file checksum differs from the recorded one".into()));
    }
    let differing: Vec<&String> = recorded
        .files
        .iter()
        .filter(|(name, sum)| fresh.manifest.files.get(*name) != Some(sum))
        .map(|(name, _)| name)
        .collect();
    if !differing.is_empty() || fresh.manifest.files.len() != recorded.files.len() {
        return Err(CliError::Replay(format!("outputs differ: {differing:?}")));
    }
    Ok(fresh)
}
