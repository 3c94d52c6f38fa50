//! The `gen-code`, `throughput` and `decode` subcommands.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::Serialize;
use tsrecon::channel::{gen_frame, trial_seed};
use tsrecon::corrector::{classify, peel, CorrectionStats, CorrectorConfig};
use tsrecon::decoder::{channel_llrs, CheckUpdate, DecoderConfig, LayeredDecoder};
use tsrecon::gf2::{build_peg, save_alist};
use tsrecon::skr::{eraser_budget, throughput, EraserBudget};
use tsrecon::ParityCheckMatrix;

use crate::code::{load_code, load_template, read_text, sha256_hex, CodeArgs};
use crate::config::Arm;
use crate::error::{CliError, Result};

fn parse_arm(token: &str) -> Result<Arm> {
    Arm::parse(token).ok_or_else(|| CliError::Usage(format!("unknown arm `{token}` (float, w10, w12, w<bits>f<frac>)")))
}

// ------------------------------------------------------------------ gen-code

#[derive(Args, Debug, Clone)]
pub struct GenCodeArgs {
    /// Degree template file.
    #[arg(long)]
    pub template: PathBuf,
    /// Code length.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output alist path; a `.manifest.json` is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
pub struct CodeManifest {
    pub tool: String,
    pub version: String,
    pub template: String,
    pub template_sha256: String,
    pub n: usize,
    pub seed: u64,
    pub m: usize,
    pub rate: f64,
    pub edges: usize,
    pub column_degrees: BTreeMap<usize, usize>,
    pub row_degrees: BTreeMap<usize, usize>,
    pub has_four_cycle: bool,
    pub alist_sha256: String,
}

pub fn gen_code(args: &GenCodeArgs, default_dir: PathBuf) -> Result<(PathBuf, CodeManifest)> {
    let text = read_text(&args.template)?;
    let dist = load_template(&args.template)?.instantiate(args.n)?;
    let h = build_peg(&dist, args.n, args.seed)?;
    let alist = save_alist(&h);
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| default_dir.join(format!("code_n{}_s{}.alist", args.n, args.seed)));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(CliError::io(parent))?;
    }
    std::fs::write(&out, &alist).map_err(CliError::io(&out))?;
    let observed = h.degree_distribution();
    let manifest = CodeManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        template: text.clone(),
        template_sha256: sha256_hex(text.as_bytes()),
        n: h.n_cols(),
        seed: args.seed,
        m: h.n_rows(),
        rate: h.rate(),
        edges: h.n_edges(),
        column_degrees: observed.columns().clone(),
        row_degrees: observed.rows().clone(),
        has_four_cycle: h.has_four_cycle(),
        alist_sha256: sha256_hex(alist.as_bytes()),
    };
    let mut path = out.clone().into_os_string();
    path.push(".manifest.json");
    let path = PathBuf::from(path);
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    std::fs::write(&path, json).map_err(CliError::io(&path))?;
    Ok((out, manifest))
}

// ---------------------------------------------------------------- throughput

#[derive(Args, Debug, Clone)]
pub struct ThroughputArgs {
    /// Decoder clock frequency (Hz).
    #[arg(long)]
    pub clock_hz: f64,
    /// Code length (bits per frame).
    #[arg(long)]
    pub frame_bits: f64,
    /// Clock cycles per decoding iteration.
    #[arg(long)]
    pub cycles_per_iteration: f64,
    /// Maximum iterations per frame.
    #[arg(long)]
    pub t_max: f64,
    /// Parallel decoding engines.
    #[arg(long, default_value_t = 1)]
    pub engines: u32,
    /// Per-frame cost of one residual-error eraser, in decoder iterations.
    #[arg(long)]
    pub eraser_cost: Option<f64>,
    /// Also time the software decoder on this code.
    #[command(flatten)]
    pub code: CodeArgs,
    /// Channel snr for the software measurement.
    #[arg(long, default_value_t = 0.6)]
    pub snr: f64,
    #[arg(long, default_value_t = 20)]
    pub frames: u64,
    #[arg(long, default_value = "w10")]
    pub arm: String,
}

#[derive(Serialize)]
pub struct HardwareModel {
    pub per_engine_bps: f64,
    pub total_bps: f64,
    pub engines: u32,
}

#[derive(Serialize)]
pub struct SoftwareMeasurement {
    pub label: &'static str,
    pub mbps: f64,
    pub frames: u64,
    pub frame_bits: usize,
    pub arm: String,
    pub t_max: usize,
    pub snr: f64,
}

#[derive(Serialize)]
pub struct ThroughputReport {
    pub hardware_model: HardwareModel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eraser_budget: Option<EraserBudget>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub software_measured: Option<SoftwareMeasurement>,
}

pub fn throughput_report(args: &ThroughputArgs) -> Result<ThroughputReport> {
    let per_engine = throughput(args.clock_hz, args.frame_bits, args.cycles_per_iteration, args.t_max)?;
    if args.engines == 0 {
        return Err(CliError::Usage("--engines must be at least 1".into()));
    }
    let eraser = args
        .eraser_cost
        .map(|cost| eraser_budget(cost, args.engines, args.t_max))
        .transpose()?;
    let software = if args.code.alist.is_some() || args.code.template.is_some() {
        let (h, _) = load_code(&args.code.source()?)?;
        let arm = parse_arm(&args.arm)?;
        let t_max = args.t_max.round().max(1.0) as usize;
        Some(measure(&h, arm, t_max, args.snr, args.frames)?)
    } else {
        None
    };
    Ok(ThroughputReport {
        hardware_model: HardwareModel {
            per_engine_bps: per_engine,
            total_bps: per_engine * args.engines as f64,
            engines: args.engines,
        },
        eraser_budget: eraser,
        software_measured: software,
    })
}

fn measure(h: &ParityCheckMatrix, arm: Arm, t_max: usize, snr: f64, frames: u64) -> Result<SoftwareMeasurement> {
    let cfg = DecoderConfig::for_arithmetic(arm.arithmetic, t_max);
    let cor = CorrectorConfig::for_arithmetic(arm.arithmetic);
    let trials = (0..frames)
        .map(|f| gen_frame(h.n_cols(), snr, trial_seed(0, 0, f)))
        .collect::<tsrecon::Result<Vec<_>>>()?;
    let mut decoder = LayeredDecoder::new(h);
    let started = Instant::now();
    for trial in &trials {
        let s = h.syndrome(&trial.u)?;
        let llr = channel_llrs(&trial.y, snr, cfg.arithmetic)?;
        let out = decoder.decode(&s, &llr, &cfg)?;
        if !out.syndrome_matched {
            let (e, _) = classify(&out.reliabilities, cor.delta);
            peel(h, &out.hard, &e, &s, &cor)?;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    Ok(SoftwareMeasurement {
        label: "single-thread software two-stage decoder, wall clock; not the hardware model",
        mbps: frames as f64 * h.n_cols() as f64 / secs / 1e6,
        frames,
        frame_bits: h.n_cols(),
        arm: arm.label(),
        t_max,
        snr,
    })
}

// -------------------------------------------------------------------- decode

#[derive(Args, Debug, Clone)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    #[arg(long)]
    pub snr: f64,
    /// Frame seed; the same value as a sweep's trial seed reproduces that frame.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "w10")]
    pub arm: String,
    #[arg(long, default_value_t = 15)]
    pub t_max: usize,
    /// Check-node update (default: sum-product for float, nms:0.75 for fixed).
    #[arg(long)]
    pub check_update: Option<CheckUpdate>,
    /// Reliability threshold (default: 165 LSB for w10, 530 for w12, 5 for float).
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Serialize)]
pub struct DecodeTrace {
    pub seed: u64,
    pub snr: f64,
    pub arm: String,
    pub check_update: String,
    pub t_max: usize,
    pub delta: f64,
    pub channel_bit_errors: usize,
    pub iterations_used: usize,
    /// Unsatisfied checks after each iteration.
    pub unsatisfied_trace: Vec<usize>,
    pub stage1_matched: bool,
    pub stage1_bit_errors: usize,
    /// Wrong stage-one bits that were below the threshold.
    pub stage1_errors_suspected: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correction: Option<CorrectionStats>,
    pub final_matched: bool,
    pub final_bit_errors: usize,
    pub undetected_error: bool,
}

pub fn decode_trace(args: &DecodeArgs) -> Result<DecodeTrace> {
    let (h, _) = load_code(&args.code.source()?)?;
    let arm = parse_arm(&args.arm)?;
    let mut cfg = DecoderConfig::for_arithmetic(arm.arithmetic, args.t_max);
    if let Some(cu) = args.check_update {
        cfg.check_update = cu;
    }
    let delta = args
        .delta
        .unwrap_or_else(|| CorrectorConfig::for_arithmetic(arm.arithmetic).delta);
    let cor = CorrectorConfig::new(delta)?;

    let trial = gen_frame(h.n_cols(), args.snr, args.seed)?;
    let s = h.syndrome(&trial.u)?;
    let hard_channel: Vec<u8> = trial.y.iter().map(|&y| u8::from(y <= 0.0)).collect();
    let llr = channel_llrs(&trial.y, args.snr, cfg.arithmetic)?;
    let first = LayeredDecoder::new(&h).decode(&s, &llr, &cfg)?;
    let errors = first.hard.differences(&trial.u);
    let (e, _) = classify(&first.reliabilities, cor.delta);
    let suspected = errors.iter().filter(|&&i| e.contains(i)).count();

    let (final_word, correction, final_matched) = if first.syndrome_matched {
        (first.hard.clone(), None, true)
    } else {
        let fix = peel(&h, &first.hard, &e, &s, &cor)?;
        let stats = CorrectionStats {
            suspects: e.len(),
            bits_fixed: fix.bits_fixed,
            bits_flipped: fix.bits_flipped,
            peel_rounds: fix.peel_rounds,
            residual_suspects: fix.residual_suspects,
            ambiguous: fix.ambiguous,
        };
        let word = if fix.success { fix.corrected } else { first.hard.clone() };
        (word, Some(stats), fix.success)
    };
    let final_errors = final_word.differences(&trial.u).len();
    Ok(DecodeTrace {
        seed: args.seed,
        snr: args.snr,
        arm: arm.label(),
        check_update: cfg.check_update.to_string(),
        t_max: args.t_max,
        delta,
        channel_bit_errors: hard_channel.iter().zip(trial.u.iter()).filter(|(a, b)| a != b).count(),
        iterations_used: first.iterations_used,
        unsatisfied_trace: first.unsatisfied_trace.clone(),
        stage1_matched: first.syndrome_matched,
        stage1_bit_errors: errors.len(),
        stage1_errors_suspected: suspected,
        correction,
        final_matched,
        final_bit_errors: final_errors,
        undetected_error: final_matched && final_errors > 0,
    })
}
