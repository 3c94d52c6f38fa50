//! Stage two: residual bit-error correction by peeling.
//!
//! Symbols whose stage-one reliability falls below a threshold are treated
//! as erased. The syndrome contribution of the trusted symbols is removed,
//! and parity rows with exactly one erased symbol force that symbol's value.
//! Each forced value is folded back into the residual syndrome, which can
//! expose further single-erasure rows.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::decoder::{DecodeOutcome, DecoderConfig, LayeredDecoder, LlrVector, Stage};
use crate::fixed::{Arithmetic, FixedFormat};
use crate::gf2::{BitVector, IndexSet, ParityCheckMatrix};
use crate::{Error, Result};

/// Threshold used in float mode when none is given, in real LLR units.
pub const DEFAULT_FLOAT_DELTA: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectorConfig {
    /// Reliability threshold: LSB units in fixed mode, real units in float.
    pub delta: f64,
    /// Upper bound on peeling depth.
    pub max_peel_rounds: usize,
}

impl CorrectorConfig {
    pub fn new(delta: f64) -> Result<Self> {
        let cfg = CorrectorConfig {
            delta,
            max_peel_rounds: usize::MAX,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// 165 LSB for the 10-bit format, 530 LSB for the 12-bit format. Other
    /// fixed formats scale the 10-bit value by their resolution.
    pub fn for_arithmetic(arithmetic: Arithmetic) -> Self {
        let delta = match arithmetic {
            Arithmetic::Float => DEFAULT_FLOAT_DELTA,
            Arithmetic::Fixed(f) if f == FixedFormat::W10 => 165.0,
            Arithmetic::Fixed(f) if f == FixedFormat::W12 => 530.0,
            Arithmetic::Fixed(f) => (165.0 * FixedFormat::W10.resolution() / f.resolution()).round(),
        };
        CorrectorConfig {
            delta,
            max_peel_rounds: usize::MAX,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "delta must be positive and finite, got {}",
                self.delta
            )));
        }
        if self.max_peel_rounds == 0 {
            return Err(Error::InvalidParameter("max_peel_rounds must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-frame stage-two counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionStats {
    /// Symbols below the threshold before peeling.
    pub suspects: usize,
    /// Assignments made by peeling.
    pub bits_fixed: usize,
    /// Assignments that changed the stage-one decision.
    pub bits_flipped: usize,
    /// Peeling depth: an assignment enabled by another assignment is one
    /// round deeper.
    pub peel_rounds: usize,
    /// Symbols still erased when peeling stopped.
    pub residual_suspects: usize,
    /// Syndrome matched with an undetermined completion.
    pub ambiguous: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrectionOutcome {
    /// Full-syndrome match of `corrected` that no other completion of the
    /// unresolved suspects could also produce.
    pub success: bool,
    pub corrected: BitVector,
    pub bits_fixed: usize,
    pub bits_flipped: usize,
    pub peel_rounds: usize,
    pub residual_suspects: usize,
    /// The syndrome matched, but the unresolved suspects admit another
    /// assignment with the same syndrome, so the match is not reported as a
    /// success.
    pub ambiguous: bool,
}

impl CorrectionOutcome {
    fn stats(&self, suspects: usize) -> CorrectionStats {
        CorrectionStats {
            suspects,
            bits_fixed: self.bits_fixed,
            bits_flipped: self.bits_flipped,
            peel_rounds: self.peel_rounds,
            residual_suspects: self.residual_suspects,
            ambiguous: self.ambiguous,
        }
    }
}

/// Splits symbols into suspects (`reliability < delta`) and trusted symbols.
pub fn classify(reliabilities: &[f64], delta: f64) -> (IndexSet, IndexSet) {
    let suspect: Vec<bool> = reliabilities.iter().map(|&r| r < delta).collect();
    let e = IndexSet::from_mask(&suspect);
    let trusted = e.complement();
    (e, trusted)
}

/// `s` with the contribution of the trusted symbols of `u_hat` removed.
pub fn residual_syndrome(
    h: &ParityCheckMatrix,
    u_hat: &[u8],
    trusted: &IndexSet,
    s: &[u8],
) -> Result<BitVector> {
    h.check_syndrome(s)?;
    let partial = h.restricted_syndrome(u_hat, trusted)?;
    Ok(partial.xor(&BitVector::from(s)))
}

/// Peels single-erasure rows starting from stage-one output `u_hat` with
/// suspect set `e`. Rows are resolved in ascending index order.
pub fn peel(
    h: &ParityCheckMatrix,
    u_hat: &[u8],
    e: &IndexSet,
    s: &[u8],
    cfg: &CorrectorConfig,
) -> Result<CorrectionOutcome> {
    cfg.validate()?;
    let trusted = e.complement();
    let mut s_c = residual_syndrome(h, u_hat, &trusted, s)?;
    let mut weight = h.row_weights_within(e)?;
    let mut erased = e.to_mask();
    let mut corrected = BitVector::from(u_hat);

    // depth[m] is the round in which row m became a single-erasure row
    let mut depth = vec![0usize; h.n_rows()];
    let mut ready: BTreeSet<usize> = BTreeSet::new();
    for (m, &w) in weight.iter().enumerate() {
        if w == 1 {
            ready.insert(m);
            depth[m] = 1;
        }
    }

    let (mut bits_fixed, mut bits_flipped, mut rounds) = (0, 0, 0);
    let mut remaining = e.len();
    while let Some(m) = ready.pop_first() {
        if weight[m] != 1 {
            continue;
        }
        let round = depth[m];
        if round > cfg.max_peel_rounds {
            return Err(Error::PeelLimit(cfg.max_peel_rounds));
        }
        let n = h
            .row(m)
            .iter()
            .copied()
            .find(|&n| erased[n])
            .expect("row weight tracks erased symbols");
        let value = s_c.get(m);
        if corrected.get(n) != value {
            bits_flipped += 1;
        }
        corrected.set(n, value);
        erased[n] = false;
        remaining -= 1;
        bits_fixed += 1;
        rounds = rounds.max(round);
        for &r in h.col(n) {
            if value == 1 {
                s_c.flip(r);
            }
            weight[r] -= 1;
            if weight[r] == 1 {
                ready.insert(r);
                depth[r] = round + 1;
            }
        }
    }

    let matched = h.satisfies(&corrected, s)?;
    let ambiguous = matched
        && remaining > 0
        && !h.columns_independent(&IndexSet::from_mask(&erased))?;
    Ok(CorrectionOutcome {
        success: matched && !ambiguous,
        ambiguous,
        corrected,
        bits_fixed,
        bits_flipped,
        peel_rounds: rounds,
        residual_suspects: remaining,
    })
}

/// Stage one followed, on failure, by stage two.
pub fn two_stage_decode(
    h: &ParityCheckMatrix,
    s: &[u8],
    llr: &LlrVector,
    dec_cfg: &DecoderConfig,
    cor_cfg: &CorrectorConfig,
) -> Result<DecodeOutcome> {
    TwoStageDecoder::new(h).decode(s, llr, dec_cfg, cor_cfg)
}

/// Reusable two-stage pipeline; one instance per thread.
pub struct TwoStageDecoder<'h> {
    stage1: LayeredDecoder<'h>,
}

impl<'h> TwoStageDecoder<'h> {
    pub fn new(h: &'h ParityCheckMatrix) -> Self {
        TwoStageDecoder {
            stage1: LayeredDecoder::new(h),
        }
    }

    pub fn decode(
        &mut self,
        s: &[u8],
        llr: &LlrVector,
        dec_cfg: &DecoderConfig,
        cor_cfg: &CorrectorConfig,
    ) -> Result<DecodeOutcome> {
        cor_cfg.validate()?;
        let first = self.stage1.decode(s, llr, dec_cfg)?;
        if first.syndrome_matched {
            return Ok(first);
        }
        let h = self.stage1.matrix();
        let (e, _) = classify(&first.reliabilities, cor_cfg.delta);
        let fix = peel(h, &first.hard, &e, s, cor_cfg)?;
        let stats = fix.stats(e.len());
        Ok(DecodeOutcome {
            hard: fix.corrected,
            syndrome_matched: fix.success,
            stage: Stage::Two,
            correction: Some(stats),
            ..first
        })
    }
}
