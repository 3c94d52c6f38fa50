//! The `skr` subcommand: FER curve in, optimized key rate out.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;
use tsrecon::skr::{evaluate_at_snr, gain, optimize_va, FerFit, OptimizerOptions, SecurityParams, SkrResult, SystemParams};

use crate::error::{CliError, Result};

#[derive(Args, Debug, Clone)]
pub struct SkrArgs {
    /// FER curve CSV with `snr` and `fer` columns (a sweep CSV's `fer2` is
    /// used when there is no `fer` column). A single row is evaluated at
    /// that point instead of optimized.
    #[arg(required_unless_present = "compare")]
    pub curve: Option<PathBuf>,
    /// Reference and candidate curves; reports the gain of the second over
    /// the first.
    #[arg(long, num_args = 2, value_names = ["REFERENCE", "CANDIDATE"], conflicts_with = "curve")]
    pub compare: Option<Vec<PathBuf>>,
    /// Column holding the FER values.
    #[arg(long)]
    pub fer_column: Option<String>,

    /// Transmission distance (km).
    #[arg(long, default_value_t = 25.0)]
    pub distance: f64,
    /// LDPC code rate.
    #[arg(long, default_value_t = 0.2)]
    pub rate: f64,
    /// Exchanged signals N.
    #[arg(long, default_value_t = 1e12)]
    pub block_size: f64,
    /// Fraction of signals used for the key, K/N.
    #[arg(long, default_value_t = 0.5)]
    pub key_fraction: f64,
    /// Excess noise (SNU).
    #[arg(long, default_value_t = 0.005)]
    pub excess_noise: f64,
    /// Electronic noise (SNU).
    #[arg(long, default_value_t = 0.041)]
    pub electronic_noise: f64,
    #[arg(long, default_value_t = 0.606)]
    pub efficiency: f64,
    /// Fiber loss (dB/km).
    #[arg(long, default_value_t = 0.2)]
    pub fiber_loss: f64,
    #[arg(long, default_value_t = 32.0)]
    pub alphabet_size: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub eps_smooth: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub eps_hash: f64,
    /// Modulation variance search range (SNU).
    #[arg(long, default_value_t = 0.5)]
    pub va_min: f64,
    #[arg(long, default_value_t = 20.0)]
    pub va_max: f64,
    #[arg(long, default_value_t = 2000)]
    pub grid_points: usize,
}

impl SkrArgs {
    fn params(&self) -> (SystemParams, SecurityParams, OptimizerOptions) {
        let sys = SystemParams {
            excess_noise: self.excess_noise,
            electronic_noise: self.electronic_noise,
            detector_efficiency: self.efficiency,
            fiber_loss: self.fiber_loss,
            distance_km: self.distance,
            code_rate: self.rate,
        };
        let sec = SecurityParams {
            alphabet_size: self.alphabet_size,
            eps_smooth: self.eps_smooth,
            eps_hash: self.eps_hash,
            block_size: self.block_size,
            key_signals: self.block_size * self.key_fraction,
        };
        let opts = OptimizerOptions {
            va_min: self.va_min,
            va_max: self.va_max,
            grid_points: self.grid_points,
            ..OptimizerOptions::default()
        };
        (sys, sec, opts)
    }
}

#[derive(Serialize)]
pub struct Evaluation {
    pub curve: PathBuf,
    /// `point` for a single-row curve, `optimized` otherwise.
    pub mode: &'static str,
    pub result: SkrResult,
}

#[derive(Serialize)]
pub struct SkrReport {
    pub system: SystemParams,
    pub security: SecurityParams,
    pub units: &'static str,
    pub evaluations: Vec<Evaluation>,
    /// Candidate key rate over reference key rate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain_vs_reference: Option<Option<f64>>,
}

/// Reads `(snr, fer)` pairs.
pub fn read_curve(path: &Path, column: Option<&str>) -> Result<Vec<(f64, f64)>> {
    let data = |msg: String| CliError::Data {
        path: path.to_path_buf(),
        msg,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| data(e.to_string()))?;
    let headers = reader.headers().map_err(|e| data(e.to_string()))?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let snr_idx = find("snr").ok_or_else(|| data("no `snr` column".into()))?;
    let fer_idx = match column {
        Some(c) => find(c).ok_or_else(|| data(format!("no `{c}` column")))?,
        None => find("fer")
            .or_else(|| find("fer2"))
            .ok_or_else(|| data("no `fer` or `fer2` column".into()))?,
    };
    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| data(e.to_string()))?;
        let cell = |k: usize| -> Result<f64> {
            let text = record.get(k).unwrap_or("").trim();
            text.parse()
                .map_err(|_| data(format!("row {}: cannot parse `{text}` as a number", i + 2)))
        };
        points.push((cell(snr_idx)?, cell(fer_idx)?));
    }
    if points.is_empty() {
        return Err(data("no data rows".into()));
    }
    Ok(points)
}

fn evaluate(
    path: &Path,
    column: Option<&str>,
    sys: &SystemParams,
    sec: &SecurityParams,
    opts: &OptimizerOptions,
) -> Result<Evaluation> {
    let points = read_curve(path, column)?;
    let (mode, result) = if let [(snr, fer)] = points[..] {
        ("point", evaluate_at_snr(fer, snr, sys, sec)?)
    } else {
        let fit = FerFit::new(&points).map_err(|e| CliError::Data {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
        ("optimized", optimize_va(sys, sec, &fit, opts)?)
    };
    Ok(Evaluation {
        curve: path.to_path_buf(),
        mode,
        result,
    })
}

pub fn run(args: &SkrArgs) -> Result<SkrReport> {
    let (sys, sec, opts) = args.params();
    let column = args.fer_column.as_deref();
    let mut report = SkrReport {
        system: sys,
        security: sec,
        units: "skr, i_ab, chi_be in bits per pulse; va_opt in shot-noise units",
        evaluations: Vec::new(),
        gain_vs_reference: None,
    };
    match (&args.curve, &args.compare) {
        (Some(curve), None) => report.evaluations.push(evaluate(curve, column, &sys, &sec, &opts)?),
        (None, Some(pair)) => {
            let reference = evaluate(&pair[0], column, &sys, &sec, &opts)?;
            let candidate = evaluate(&pair[1], column, &sys, &sec, &opts)?;
            report.gain_vs_reference = Some(gain(&reference.result, &candidate.result));
            report.evaluations = vec![reference, candidate];
        }
        _ => return Err(CliError::Usage("give one curve, or --compare REFERENCE CANDIDATE".into())),
    }
    Ok(report)
}
