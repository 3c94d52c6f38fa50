//! Monte Carlo frames over a binary-input AWGN channel and seeded FER sweeps.
//!
//! Bob's raw key `u` is uniform; Alice observes `y = (1 - 2u) + noise` with
//! noise variance `1/snr` and decodes the syndrome coset `s = u H^T`.
//! Gaussian samples come from the AS241 inverse normal CDF applied to ChaCha8
//! uniforms, so a seed fixes a frame on every platform.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corrector::{classify, peel, CorrectorConfig, TwoStageDecoder};
use crate::decoder::{channel_llrs, DecoderConfig, LayeredDecoder, Stage};
use crate::gf2::{BitVector, ParityCheckMatrix};
use crate::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

fn poly(coeffs: &[f64; 8], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Inverse standard normal CDF (Wichura's AS241, PPND16), about 1e-16
/// relative accuracy. `p` must lie in (0, 1).
#[allow(clippy::excessive_precision)]
pub fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.3871328727963666080e0,
        1.3314166789178437745e+2,
        1.9715909503065514427e+3,
        1.3731693765509461125e+4,
        4.5921953931549871457e+4,
        6.7265770927008700853e+4,
        3.3430575583588128105e+4,
        2.5090809287301226727e+3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.2313330701600911252e+1,
        6.8718700749205790830e+2,
        5.3941960214247511077e+3,
        2.1213794301586595867e+4,
        3.9307895800092710610e+4,
        2.8729085735721942674e+4,
        5.2264952788528545610e+3,
    ];
    const C: [f64; 8] = [
        1.42343711074968357734e0,
        4.63033784615654529590e0,
        5.76949722146069140550e0,
        3.64784832476320460504e0,
        1.27045825245236838258e0,
        2.41780725177450611770e-1,
        2.27238449892691845833e-2,
        7.74545014278341407640e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.05319162663775882187e0,
        1.67638483018380384940e0,
        6.89767334985100004550e-1,
        1.48103976427480074590e-1,
        1.51986665636164571966e-2,
        5.47593808499534494600e-4,
        1.05075007164441684324e-9,
    ];
    const E: [f64; 8] = [
        6.65790464350110377720e0,
        5.46378491116411436990e0,
        1.78482653991729133580e0,
        2.96560571828504891230e-1,
        2.65321895265761230930e-2,
        1.24266094738807843860e-3,
        2.71155556874348757815e-5,
        2.01033439929228813265e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.99832206555887937690e-1,
        1.36929880922735805310e-1,
        1.48753612908506148525e-2,
        7.86869131145613259100e-4,
        1.84631831751005468180e-5,
        1.42151175831644588870e-7,
        2.04426310338993978564e-15,
    ];
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let v = if r <= 5.0 {
        r -= 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        r -= 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -v
    } else {
        v
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of frame `frame_index` at sweep point `snr_index`.
pub fn trial_seed(master_seed: u64, snr_index: u64, frame_index: u64) -> u64 {
    let a = splitmix64(master_seed);
    let b = splitmix64(a ^ snr_index);
    splitmix64(b ^ frame_index.rotate_left(32))
}

/// Uniform bits and standard normal samples from one seeded stream.
pub struct SampleStream {
    rng: ChaCha8Rng,
}

impl SampleStream {
    pub fn new(seed: u64) -> Self {
        SampleStream {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn bit(&mut self) -> u8 {
        (self.rng.next_u64() >> 63) as u8
    }

    /// Uniform on the open interval (0, 1), 53-bit grid offset by half a step.
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (-53f64).exp2()
    }

    pub fn standard_normal(&mut self) -> f64 {
        inverse_normal_cdf(self.uniform())
    }
}

/// One simulated frame: Bob's bits and Alice's noisy observations.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameTrial {
    pub seed: u64,
    pub u: BitVector,
    pub y: Vec<f64>,
    pub snr: f64,
}

fn check_snr(snr: f64) -> Result<()> {
    if !(snr > 0.0) || !snr.is_finite() {
        return Err(Error::InvalidParameter(format!("snr must be positive, got {snr}")));
    }
    Ok(())
}

/// Draws `n` bits, then `n` noise samples, from the stream seeded by `seed`.
pub fn gen_frame(n: usize, snr: f64, seed: u64) -> Result<FrameTrial> {
    check_snr(snr)?;
    let mut stream = SampleStream::new(seed);
    let u: BitVector = (0..n).map(|_| stream.bit()).collect();
    let sigma = (1.0 / snr).sqrt();
    let y = u
        .iter()
        .map(|&b| (1.0 - 2.0 * b as f64) + sigma * stream.standard_normal())
        .collect();
    Ok(FrameTrial { seed, u, y, snr })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub snr: f64,
    pub stage1_matched: bool,
    /// Syndrome matched after both stages.
    pub stage2_success: bool,
    pub iterations_used: usize,
    pub bits_fixed: usize,
    /// Syndrome matched but the decoded word differs from `u`.
    pub undetected_error: bool,
    pub wall_time: Duration,
}

/// Decodes one frame with a caller-owned pipeline.
pub fn run_trial_with(
    pipeline: &mut TwoStageDecoder<'_>,
    h: &ParityCheckMatrix,
    trial: &FrameTrial,
    dec_cfg: &DecoderConfig,
    cor_cfg: &CorrectorConfig,
) -> Result<TrialRecord> {
    if trial.u.len() != h.n_cols() {
        return Err(Error::Dimension {
            what: "frame length",
            got: trial.u.len(),
            expected: h.n_cols(),
        });
    }
    let start = Instant::now();
    let s = h.syndrome(&trial.u)?;
    let llr = channel_llrs(&trial.y, trial.snr, dec_cfg.arithmetic)?;
    let out = pipeline.decode(&s, &llr, dec_cfg, cor_cfg)?;
    let wall_time = start.elapsed();
    Ok(TrialRecord {
        seed: trial.seed,
        snr: trial.snr,
        stage1_matched: out.stage == Stage::One && out.syndrome_matched,
        stage2_success: out.syndrome_matched,
        iterations_used: out.iterations_used,
        bits_fixed: out.correction.map_or(0, |c| c.bits_fixed),
        undetected_error: out.syndrome_matched && out.hard != trial.u,
        wall_time,
    })
}

pub fn run_trial(
    h: &ParityCheckMatrix,
    trial: &FrameTrial,
    dec_cfg: &DecoderConfig,
    cor_cfg: &CorrectorConfig,
) -> Result<TrialRecord> {
    run_trial_with(&mut TwoStageDecoder::new(h), h, trial, dec_cfg, cor_cfg)
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FerPoint {
    pub snr: f64,
    pub frames: usize,
    pub stage1_failures: usize,
    pub stage2_failures: usize,
    pub fer_stage1: f64,
    pub fer_stage2: f64,
    pub ci_stage1: (f64, f64),
    pub ci_stage2: (f64, f64),
    pub mean_iterations: f64,
    /// Mean stage-two assignments per frame that entered stage two.
    pub mean_bits_fixed: f64,
    pub undetected: usize,
}

impl FerPoint {
    /// Aggregates counts; `iterations` and `bits_fixed` are totals.
    pub fn from_counts(
        snr: f64,
        frames: usize,
        stage1_failures: usize,
        stage2_failures: usize,
        iterations: usize,
        bits_fixed: usize,
        undetected: usize,
    ) -> Self {
        let n = frames.max(1) as f64;
        FerPoint {
            snr,
            frames,
            stage1_failures,
            stage2_failures,
            fer_stage1: stage1_failures as f64 / n,
            fer_stage2: stage2_failures as f64 / n,
            ci_stage1: wilson_interval(stage1_failures, frames, Z95),
            ci_stage2: wilson_interval(stage2_failures, frames, Z95),
            mean_iterations: iterations as f64 / n,
            mean_bits_fixed: if stage1_failures == 0 {
                0.0
            } else {
                bits_fixed as f64 / stage1_failures as f64
            },
            undetected,
        }
    }

    pub fn from_records(snr: f64, records: &[TrialRecord]) -> Self {
        let s1 = records.iter().filter(|r| !r.stage1_matched).count();
        let s2 = records.iter().filter(|r| !r.stage2_success).count();
        FerPoint::from_counts(
            snr,
            records.len(),
            s1,
            s2,
            records.iter().map(|r| r.iterations_used).sum(),
            records.iter().map(|r| r.bits_fixed).sum(),
            records.iter().filter(|r| r.undetected_error).count(),
        )
    }

    pub fn recovered(&self) -> usize {
        self.stage1_failures - self.stage2_failures
    }

    /// Share of stage-one failures rescued by stage two; `None` without
    /// stage-one failures.
    pub fn recovery_fraction(&self) -> Option<f64> {
        (self.stage1_failures > 0).then(|| self.recovered() as f64 / self.stage1_failures as f64)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FerCurve {
    pub points: Vec<FerPoint>,
}

pub const CSV_HEADER: &str =
    "snr,frames,stage1_fail,stage2_fail,fer1,fer2,ci_lo,ci_hi,mean_iters,mean_bits_fixed,undetected";

impl FerCurve {
    /// CSV with the header above. The interval columns bound the final
    /// (two-stage) FER.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            writeln!(out, "{}", csv_row(p)).unwrap();
        }
        out
    }
}

/// One CSV data row, without newline.
pub fn csv_row(p: &FerPoint) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        p.snr,
        p.frames,
        p.stage1_failures,
        p.stage2_failures,
        p.fer_stage1,
        p.fer_stage2,
        p.ci_stage2.0,
        p.ci_stage2.1,
        p.mean_iterations,
        p.mean_bits_fixed,
        p.undetected
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub snrs: Vec<f64>,
    pub frames_per_point: usize,
    pub master_seed: u64,
    /// Worker threads; 0 uses every core.
    pub parallelism: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.frames_per_point == 0 {
            return Err(Error::InvalidParameter("frames_per_point must be at least 1".into()));
        }
        if self.snrs.is_empty() {
            return Err(Error::InvalidParameter("snr list is empty".into()));
        }
        self.snrs.iter().try_for_each(|&s| check_snr(s))
    }
}

/// Runs every frame of the sweep and returns per-point records in frame
/// order. The result does not depend on `parallelism`.
pub fn run_sweep_records(
    h: &ParityCheckMatrix,
    spec: &SweepSpec,
    dec_cfg: &DecoderConfig,
    cor_cfg: &CorrectorConfig,
) -> Result<Vec<Vec<TrialRecord>>> {
    spec.validate()?;
    dec_cfg.validate()?;
    cor_cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.parallelism)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let frames = spec.frames_per_point;
    let total = spec.snrs.len() * frames;
    let flat: Vec<TrialRecord> = pool.install(|| {
        (0..total)
            .into_par_iter()
            .map_init(
                || TwoStageDecoder::new(h),
                |pipeline, idx| {
                    let (point, frame) = (idx / frames, idx % frames);
                    let seed = trial_seed(spec.master_seed, point as u64, frame as u64);
                    let trial = gen_frame(h.n_cols(), spec.snrs[point], seed)?;
                    run_trial_with(pipeline, h, &trial, dec_cfg, cor_cfg)
                },
            )
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(flat.chunks(frames).map(<[TrialRecord]>::to_vec).collect())
}

pub fn run_sweep(
    h: &ParityCheckMatrix,
    spec: &SweepSpec,
    dec_cfg: &DecoderConfig,
    cor_cfg: &CorrectorConfig,
) -> Result<FerCurve> {
    let records = run_sweep_records(h, spec, dec_cfg, cor_cfg)?;
    Ok(FerCurve {
        points: spec
            .snrs
            .iter()
            .zip(&records)
            .map(|(&snr, recs)| FerPoint::from_records(snr, recs))
            .collect(),
    })
}

/// Stage-two outcome of one frame for several thresholds, sharing a single
/// stage-one decode.
fn frame_for_deltas(
    decoder: &mut LayeredDecoder<'_>,
    h: &ParityCheckMatrix,
    trial: &FrameTrial,
    dec_cfg: &DecoderConfig,
    deltas: &[f64],
    max_peel_rounds: usize,
) -> Result<Vec<TrialRecord>> {
    let start = Instant::now();
    let s = h.syndrome(&trial.u)?;
    let llr = channel_llrs(&trial.y, trial.snr, dec_cfg.arithmetic)?;
    let first = decoder.decode(&s, &llr, dec_cfg)?;
    let stage1_time = start.elapsed();
    deltas
        .iter()
        .map(|&delta| {
            let started = Instant::now();
            let base = TrialRecord {
                seed: trial.seed,
                snr: trial.snr,
                stage1_matched: first.syndrome_matched,
                stage2_success: first.syndrome_matched,
                iterations_used: first.iterations_used,
                bits_fixed: 0,
                undetected_error: first.syndrome_matched && first.hard != trial.u,
                wall_time: stage1_time,
            };
            if first.syndrome_matched {
                return Ok(base);
            }
            let cfg = CorrectorConfig { delta, max_peel_rounds };
            let (e, _) = classify(&first.reliabilities, delta);
            let fix = peel(h, &first.hard, &e, &s, &cfg)?;
            Ok(TrialRecord {
                stage2_success: fix.success,
                bits_fixed: fix.bits_fixed,
                undetected_error: fix.success && fix.corrected != trial.u,
                wall_time: stage1_time + started.elapsed(),
                ..base
            })
        })
        .collect()
}

/// One FER curve per threshold in `deltas`. Stage one runs once per frame;
/// each threshold then gets its own stage-two attempt. Frames and seeds match
/// [`run_sweep`] with the same spec.
pub fn run_delta_sweep(
    h: &ParityCheckMatrix,
    spec: &SweepSpec,
    dec_cfg: &DecoderConfig,
    deltas: &[f64],
    max_peel_rounds: usize,
) -> Result<Vec<FerCurve>> {
    spec.validate()?;
    dec_cfg.validate()?;
    if deltas.is_empty() {
        return Err(Error::InvalidParameter("delta list is empty".into()));
    }
    for &delta in deltas {
        CorrectorConfig { delta, max_peel_rounds }.validate()?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.parallelism)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let frames = spec.frames_per_point;
    let total = spec.snrs.len() * frames;
    let flat: Vec<Vec<TrialRecord>> = pool.install(|| {
        (0..total)
            .into_par_iter()
            .map_init(
                || LayeredDecoder::new(h),
                |decoder, idx| {
                    let (point, frame) = (idx / frames, idx % frames);
                    let seed = trial_seed(spec.master_seed, point as u64, frame as u64);
                    let trial = gen_frame(h.n_cols(), spec.snrs[point], seed)?;
                    frame_for_deltas(decoder, h, &trial, dec_cfg, deltas, max_peel_rounds)
                },
            )
            .collect::<Result<Vec<_>>>()
    })?;
    Ok((0..deltas.len())
        .map(|k| FerCurve {
            points: spec
                .snrs
                .iter()
                .enumerate()
                .map(|(point, &snr)| {
                    let recs: Vec<TrialRecord> = flat[point * frames..(point + 1) * frames]
                        .iter()
                        .map(|per_delta| per_delta[k].clone())
                        .collect();
                    FerPoint::from_records(snr, &recs)
                })
                .collect(),
        })
        .collect())
}
