//! Stage one: layered belief propagation on a syndrome coset.
//!
//! Each parity row is one layer, processed in ascending order. For row `m`
//! the old row-to-symbol messages are subtracted from the posteriors, the
//! check update is evaluated with parity target `s[m]` (every outgoing sign
//! multiplied by `(-1)^s[m]`), and the new messages are added back. In fixed
//! mode every stored quantity is saturated to its format.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corrector::CorrectionStats;
use crate::fixed::{Arithmetic, FixedFormat};
use crate::gf2::{BitVector, ParityCheckMatrix};
use crate::{Error, Result};

/// Largest |tanh| product fed to `atanh` in float sum-product, which caps a
/// check message at about 35.
const MAX_TANH: f64 = 1.0 - 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CheckUpdate {
    SumProduct,
    MinSum,
    NormalizedMinSum(f64),
}

impl CheckUpdate {
    fn factor(self) -> f64 {
        match self {
            CheckUpdate::NormalizedMinSum(a) => a,
            _ => 1.0,
        }
    }
}

impl fmt::Display for CheckUpdate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckUpdate::SumProduct => f.write_str("sum-product"),
            CheckUpdate::MinSum => f.write_str("min-sum"),
            CheckUpdate::NormalizedMinSum(a) => write!(f, "nms:{a}"),
        }
    }
}

/// Parses `sum-product`, `min-sum` or `nms:<factor>`.
impl FromStr for CheckUpdate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sum-product" | "spa" => Ok(CheckUpdate::SumProduct),
            "min-sum" => Ok(CheckUpdate::MinSum),
            other => {
                let factor = other
                    .strip_prefix("nms:")
                    .or_else(|| other.strip_prefix("normalized-min-sum:"))
                    .and_then(|f| f.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::InvalidParameter(format!(
                            "check update `{other}`: expected sum-product, min-sum or nms:<factor>"
                        ))
                    })?;
                Ok(CheckUpdate::NormalizedMinSum(factor))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    /// Maximum number of full iterations (t_max).
    pub max_iterations: usize,
    pub arithmetic: Arithmetic,
    pub check_update: CheckUpdate,
    pub early_stop: bool,
    /// Posterior accumulator width in fixed mode; `None` keeps the message
    /// width.
    pub accumulator_bits: Option<u8>,
}

impl DecoderConfig {
    /// Floating point, sum-product.
    pub fn float(max_iterations: usize) -> Self {
        DecoderConfig {
            max_iterations,
            arithmetic: Arithmetic::Float,
            check_update: CheckUpdate::SumProduct,
            early_stop: true,
            accumulator_bits: None,
        }
    }

    /// Fixed point, normalized min-sum with factor 0.75.
    pub fn fixed(format: FixedFormat, max_iterations: usize) -> Self {
        DecoderConfig {
            max_iterations,
            arithmetic: Arithmetic::Fixed(format),
            check_update: CheckUpdate::NormalizedMinSum(0.75),
            early_stop: true,
            accumulator_bits: None,
        }
    }

    pub fn for_arithmetic(arithmetic: Arithmetic, max_iterations: usize) -> Self {
        match arithmetic {
            Arithmetic::Float => Self::float(max_iterations),
            Arithmetic::Fixed(f) => Self::fixed(f, max_iterations),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("t_max must be at least 1".into()));
        }
        if let CheckUpdate::NormalizedMinSum(a) = self.check_update {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "normalization factor {a} outside (0, 1]"
                )));
            }
        }
        if let (Arithmetic::Fixed(f), Some(bits)) = (self.arithmetic, self.accumulator_bits) {
            if bits < f.total_bits() {
                return Err(Error::InvalidParameter(format!(
                    "accumulator width {bits} narrower than message width {}",
                    f.total_bits()
                )));
            }
            f.widened(bits)?;
        }
        Ok(())
    }
}

/// Per-symbol log-likelihood ratios `log P(0)/P(1)`.
#[derive(Clone, Debug, PartialEq)]
pub enum LlrVector {
    Float(Vec<f64>),
    Fixed { format: FixedFormat, codes: Vec<i32> },
}

impl LlrVector {
    pub fn len(&self) -> usize {
        match self {
            LlrVector::Float(v) => v.len(),
            LlrVector::Fixed { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values in real LLR units.
    pub fn to_real(&self) -> Vec<f64> {
        match self {
            LlrVector::Float(v) => v.clone(),
            LlrVector::Fixed { format, codes } => codes.iter().map(|&c| format.to_real(c)).collect(),
        }
    }

    /// Re-expresses the vector in `arithmetic`, quantizing if needed.
    pub fn convert(&self, arithmetic: Arithmetic) -> Result<LlrVector> {
        match (self, arithmetic) {
            (LlrVector::Float(v), Arithmetic::Float) => Ok(LlrVector::Float(v.clone())),
            (LlrVector::Fixed { format, codes }, Arithmetic::Fixed(f)) if *format == f => {
                Ok(LlrVector::Fixed {
                    format: f,
                    codes: codes.clone(),
                })
            }
            (_, Arithmetic::Float) => Ok(LlrVector::Float(self.to_real())),
            (_, Arithmetic::Fixed(f)) => Ok(LlrVector::Fixed {
                format: f,
                codes: self
                    .to_real()
                    .into_iter()
                    .map(|x| f.quantize_code(x))
                    .collect::<Result<_>>()?,
            }),
        }
    }
}

/// Channel LLRs for BPSK (0 -> +1, 1 -> -1) over AWGN with noise variance
/// `1/snr`: `2 * snr * y`, quantized when `arithmetic` is fixed.
pub fn channel_llrs(y: &[f64], snr: f64, arithmetic: Arithmetic) -> Result<LlrVector> {
    if !(snr > 0.0) || !snr.is_finite() {
        return Err(Error::InvalidParameter(format!("snr must be positive, got {snr}")));
    }
    let real = y.iter().map(|&v| 2.0 * snr * v);
    match arithmetic {
        Arithmetic::Float => {
            let v: Vec<f64> = real.collect();
            if let Some(&bad) = v.iter().find(|x| !x.is_finite()) {
                return Err(Error::NonFinite(bad));
            }
            Ok(LlrVector::Float(v))
        }
        Arithmetic::Fixed(format) => Ok(LlrVector::Fixed {
            format,
            codes: real.map(|x| format.quantize_code(x)).collect::<Result<_>>()?,
        }),
    }
}

/// Bit decision for one LLR: 1 when `llr <= 0`.
#[inline]
pub fn hard_bit(llr: f64) -> u8 {
    (llr <= 0.0) as u8
}

pub fn hard_decision(llr: &LlrVector) -> BitVector {
    match llr {
        LlrVector::Float(v) => v.iter().map(|&x| hard_bit(x)).collect(),
        LlrVector::Fixed { codes, .. } => codes.iter().map(|&c| (c <= 0) as u8).collect(),
    }
}

/// `|LLR|`, in LSB units for fixed-point vectors.
pub fn reliability(llr: &LlrVector) -> Vec<f64> {
    match llr {
        LlrVector::Float(v) => v.iter().map(|x| x.abs()).collect(),
        LlrVector::Fixed { codes, .. } => codes.iter().map(|c| c.abs() as f64).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    One,
    Two,
}

impl Stage {
    pub fn number(self) -> u8 {
        match self {
            Stage::One => 1,
            Stage::Two => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeOutcome {
    pub hard: BitVector,
    /// `|posterior|` per symbol at exit (LSB units in fixed mode).
    pub reliabilities: Vec<f64>,
    pub iterations_used: usize,
    pub syndrome_matched: bool,
    pub stage: Stage,
    /// Unsatisfied parity rows after each completed iteration.
    pub unsatisfied_trace: Vec<usize>,
    /// Present when stage two ran.
    pub correction: Option<CorrectionStats>,
}

/// Reusable layered decoder bound to one matrix. Holds per-frame state, so
/// use one instance per thread.
pub struct LayeredDecoder<'h> {
    h: &'h ParityCheckMatrix,
    row_ptr: Vec<usize>,
    edge_col: Vec<usize>,
    msg_f: Vec<f64>,
    post_f: Vec<f64>,
    msg_i: Vec<i32>,
    post_i: Vec<i32>,
    buf_f: Vec<f64>,
    buf_g: Vec<f64>,
    buf_i: Vec<i32>,
    hard: Vec<u8>,
}

impl<'h> LayeredDecoder<'h> {
    pub fn new(h: &'h ParityCheckMatrix) -> Self {
        let mut row_ptr = Vec::with_capacity(h.n_rows() + 1);
        let mut edge_col = Vec::with_capacity(h.n_edges());
        row_ptr.push(0);
        for row in h.rows() {
            edge_col.extend_from_slice(row);
            row_ptr.push(edge_col.len());
        }
        let max_deg = h.rows().iter().map(Vec::len).max().unwrap_or(0);
        LayeredDecoder {
            h,
            row_ptr,
            edge_col,
            msg_f: Vec::new(),
            post_f: Vec::new(),
            msg_i: Vec::new(),
            post_i: Vec::new(),
            buf_f: vec![0.0; max_deg],
            buf_g: vec![0.0; max_deg],
            buf_i: vec![0; max_deg],
            hard: vec![0; h.n_cols()],
        }
    }

    pub fn matrix(&self) -> &'h ParityCheckMatrix {
        self.h
    }

    pub fn decode(&mut self, s: &[u8], llr: &LlrVector, cfg: &DecoderConfig) -> Result<DecodeOutcome> {
        cfg.validate()?;
        self.h.check_syndrome(s)?;
        if llr.len() != self.h.n_cols() {
            return Err(Error::Dimension {
                what: "llr vector",
                got: llr.len(),
                expected: self.h.n_cols(),
            });
        }
        match cfg.arithmetic {
            Arithmetic::Float => self.decode_float(s, llr, cfg),
            Arithmetic::Fixed(format) => self.decode_fixed(s, llr, format, cfg),
        }
    }

    fn unsatisfied_rows(&self, s: &[u8]) -> usize {
        (0..self.h.n_rows())
            .filter(|&m| {
                let parity = self.edge_col[self.row_ptr[m]..self.row_ptr[m + 1]]
                    .iter()
                    .fold(0u8, |acc, &n| acc ^ self.hard[n]);
                parity != s[m]
            })
            .count()
    }

    fn decode_float(&mut self, s: &[u8], llr: &LlrVector, cfg: &DecoderConfig) -> Result<DecodeOutcome> {
        let LlrVector::Float(channel) = llr.convert(Arithmetic::Float)? else {
            unreachable!()
        };
        self.post_f.clear();
        self.post_f.extend_from_slice(&channel);
        self.msg_f.clear();
        self.msg_f.resize(self.edge_col.len(), 0.0);

        let refresh = |this: &mut Self| {
            for (b, &p) in this.hard.iter_mut().zip(&this.post_f) {
                *b = hard_bit(p);
            }
        };
        refresh(self);
        let mut unsatisfied = self.unsatisfied_rows(s);
        let mut trace = Vec::new();
        let mut iterations = 0;
        if !(cfg.early_stop && unsatisfied == 0) {
            for _ in 0..cfg.max_iterations {
                iterations += 1;
                for m in 0..self.h.n_rows() {
                    self.update_row_float(m, s[m], cfg.check_update);
                }
                refresh(self);
                unsatisfied = self.unsatisfied_rows(s);
                trace.push(unsatisfied);
                if cfg.early_stop && unsatisfied == 0 {
                    break;
                }
            }
        }
        Ok(DecodeOutcome {
            hard: BitVector::from(self.hard.clone()),
            reliabilities: self.post_f.iter().map(|p| p.abs()).collect(),
            iterations_used: iterations,
            syndrome_matched: unsatisfied == 0,
            stage: Stage::One,
            unsatisfied_trace: trace,
            correction: None,
        })
    }

    fn update_row_float(&mut self, m: usize, target: u8, rule: CheckUpdate) {
        let (start, end) = (self.row_ptr[m], self.row_ptr[m + 1]);
        let deg = end - start;
        let parity_sign = if target == 1 { -1.0 } else { 1.0 };
        let q = &mut self.buf_f[..deg];
        for (k, e) in (start..end).enumerate() {
            q[k] = self.post_f[self.edge_col[e]] - self.msg_f[e];
        }
        match rule {
            CheckUpdate::SumProduct => {
                // exclusive tanh products by prefix/suffix sweeps
                let t = &mut self.buf_g[..deg];
                let mut prefix = 1.0;
                for k in 0..deg {
                    t[k] = prefix;
                    prefix *= (0.5 * q[k]).tanh();
                }
                let mut suffix = 1.0;
                for k in (0..deg).rev() {
                    let excl = (t[k] * suffix).clamp(-MAX_TANH, MAX_TANH);
                    suffix *= (0.5 * q[k]).tanh();
                    let e = start + k;
                    let r = parity_sign * 2.0 * excl.atanh();
                    self.msg_f[e] = r;
                    self.post_f[self.edge_col[e]] = q[k] + r;
                }
            }
            CheckUpdate::MinSum | CheckUpdate::NormalizedMinSum(_) => {
                let factor = rule.factor();
                let (mut min1, mut min2, mut arg) = (f64::INFINITY, f64::INFINITY, 0);
                let mut negative = false;
                for (k, &v) in q.iter().enumerate() {
                    let a = v.abs();
                    if a < min1 {
                        min2 = min1;
                        min1 = a;
                        arg = k;
                    } else if a < min2 {
                        min2 = a;
                    }
                    negative ^= v < 0.0;
                }
                for k in 0..deg {
                    let mag = factor * if k == arg { min2 } else { min1 };
                    let mag = if mag.is_finite() { mag } else { 0.0 };
                    let sign = if negative ^ (q[k] < 0.0) { -parity_sign } else { parity_sign };
                    let e = start + k;
                    let r = sign * mag;
                    self.msg_f[e] = r;
                    self.post_f[self.edge_col[e]] = q[k] + r;
                }
            }
        }
    }

    fn decode_fixed(
        &mut self,
        s: &[u8],
        llr: &LlrVector,
        format: FixedFormat,
        cfg: &DecoderConfig,
    ) -> Result<DecodeOutcome> {
        let LlrVector::Fixed { codes, .. } = llr.convert(Arithmetic::Fixed(format))? else {
            unreachable!()
        };
        let acc = match cfg.accumulator_bits {
            Some(bits) => format.widened(bits)?,
            None => format,
        };
        self.post_i.clear();
        self.post_i.extend_from_slice(&codes);
        self.msg_i.clear();
        self.msg_i.resize(self.edge_col.len(), 0);

        let refresh = |this: &mut Self| {
            for (b, &p) in this.hard.iter_mut().zip(&this.post_i) {
                *b = (p <= 0) as u8;
            }
        };
        refresh(self);
        let mut unsatisfied = self.unsatisfied_rows(s);
        let mut trace = Vec::new();
        let mut iterations = 0;
        if !(cfg.early_stop && unsatisfied == 0) {
            for _ in 0..cfg.max_iterations {
                iterations += 1;
                for m in 0..self.h.n_rows() {
                    self.update_row_fixed(m, s[m], cfg.check_update, format, acc);
                }
                refresh(self);
                unsatisfied = self.unsatisfied_rows(s);
                trace.push(unsatisfied);
                if cfg.early_stop && unsatisfied == 0 {
                    break;
                }
            }
        }
        Ok(DecodeOutcome {
            hard: BitVector::from(self.hard.clone()),
            reliabilities: self.post_i.iter().map(|p| p.abs() as f64).collect(),
            iterations_used: iterations,
            syndrome_matched: unsatisfied == 0,
            stage: Stage::One,
            unsatisfied_trace: trace,
            correction: None,
        })
    }

    fn update_row_fixed(
        &mut self,
        m: usize,
        target: u8,
        rule: CheckUpdate,
        msg_fmt: FixedFormat,
        acc_fmt: FixedFormat,
    ) {
        let (start, end) = (self.row_ptr[m], self.row_ptr[m + 1]);
        let deg = end - start;
        let flip = target == 1;
        // extrinsic values held at accumulator width
        let q = &mut self.buf_i[..deg];
        for (k, e) in (start..end).enumerate() {
            let n = self.edge_col[e];
            q[k] = acc_fmt.saturate(self.post_i[n] as i64 - self.msg_i[e] as i64);
        }
        match rule {
            CheckUpdate::SumProduct => {
                let t = &mut self.buf_f[..deg];
                for k in 0..deg {
                    let v = msg_fmt.to_real(msg_fmt.saturate(q[k] as i64));
                    t[k] = (0.5 * v).tanh();
                }
                for k in 0..deg {
                    let excl: f64 = (0..deg).filter(|&i| i != k).map(|i| t[i]).product();
                    let mut r = 2.0 * excl.clamp(-MAX_TANH, MAX_TANH).atanh();
                    if flip {
                        r = -r;
                    }
                    let code = msg_fmt.quantize_code(r).unwrap_or(0);
                    let e = start + k;
                    self.msg_i[e] = code;
                    self.post_i[self.edge_col[e]] = acc_fmt.saturate(q[k] as i64 + code as i64);
                }
            }
            CheckUpdate::MinSum | CheckUpdate::NormalizedMinSum(_) => {
                let factor = rule.factor();
                let (mut min1, mut min2, mut arg) = (i32::MAX, i32::MAX, 0);
                let mut negative = false;
                for (k, &v) in q.iter().enumerate() {
                    let a = msg_fmt.saturate(v as i64).abs();
                    if a < min1 {
                        min2 = min1;
                        min1 = a;
                        arg = k;
                    } else if a < min2 {
                        min2 = a;
                    }
                    negative ^= v < 0;
                }
                if deg == 1 {
                    min2 = 0;
                }
                let scale = |mag: i32| -> i32 {
                    if factor == 1.0 {
                        mag
                    } else {
                        (mag as f64 * factor).floor() as i32
                    }
                };
                let (out1, out2) = (scale(min1), scale(min2));
                for k in 0..deg {
                    let mag = if k == arg { out2 } else { out1 };
                    let code = if negative ^ (q[k] < 0) ^ flip { -mag } else { mag };
                    let e = start + k;
                    self.msg_i[e] = code;
                    self.post_i[self.edge_col[e]] = acc_fmt.saturate(q[k] as i64 + code as i64);
                }
            }
        }
    }
}

/// One-shot convenience wrapper around [`LayeredDecoder`].
pub fn decode(
    h: &ParityCheckMatrix,
    s: &[u8],
    llr: &LlrVector,
    cfg: &DecoderConfig,
) -> Result<DecodeOutcome> {
    LayeredDecoder::new(h).decode(s, llr, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const W10: FixedFormat = FixedFormat::W10;

    /// (7,4) Hamming code.
    fn hamming() -> ParityCheckMatrix {
        ParityCheckMatrix::from_dense(&[
            &[1, 0, 1, 0, 1, 0, 1],
            &[0, 1, 1, 0, 0, 1, 1],
            &[0, 0, 0, 1, 1, 1, 1],
        ])
        .unwrap()
    }

    fn bpsk(u: &[u8], amplitude: f64) -> Vec<f64> {
        u.iter().map(|&b| if b == 0 { amplitude } else { -amplitude }).collect()
    }

    /// Exact coset posterior LLRs by enumeration of all words with syndrome `s`.
    fn brute_force_app(h: &ParityCheckMatrix, s: &[u8], llr: &[f64]) -> Vec<f64> {
        let n = h.n_cols();
        let mut zero = vec![0.0; n];
        let mut one = vec![0.0; n];
        for word in 0u32..(1 << n) {
            let u: Vec<u8> = (0..n).map(|i| ((word >> i) & 1) as u8).collect();
            if !h.satisfies(&u, s).unwrap() {
                continue;
            }
            let w: f64 = (0..n).map(|i| if u[i] == 1 { (-llr[i]).exp() } else { 1.0 }).product();
            for i in 0..n {
                if u[i] == 0 {
                    zero[i] += w
                } else {
                    one[i] += w
                }
            }
        }
        (0..n).map(|i| (zero[i] / one[i]).ln()).collect()
    }

    #[test]
    fn channel_llr_examples() {
        let LlrVector::Float(v) = channel_llrs(&[0.5, 0.0], 1.0, Arithmetic::Float).unwrap() else {
            panic!()
        };
        assert_eq!(v, vec![1.0, 0.0]);
        let LlrVector::Fixed { codes, .. } =
            channel_llrs(&[100.0, -100.0], 1.0, Arithmetic::Fixed(W10)).unwrap()
        else {
            panic!()
        };
        assert_eq!(codes, vec![511, -511]);
        assert!(channel_llrs(&[1.0], 0.0, Arithmetic::Float).is_err());
        assert!(channel_llrs(&[1.0], -2.0, Arithmetic::Float).is_err());
    }

    #[test]
    fn hard_decision_convention() {
        let llr = LlrVector::Float(vec![-0.5, 0.0, 2.3]);
        assert_eq!(&*hard_decision(&llr), &[1, 1, 0]);
        let fixed = LlrVector::Fixed {
            format: W10,
            codes: vec![-3, 0, 7],
        };
        assert_eq!(&*hard_decision(&fixed), &[1, 1, 0]);
    }

    #[test]
    fn reliability_examples() {
        let fixed = LlrVector::Fixed {
            format: W10,
            codes: vec![-165, 0],
        };
        assert_eq!(reliability(&fixed), vec![165.0, 0.0]);
        assert_eq!(reliability(&LlrVector::Float(vec![-3.2])), vec![3.2]);
    }

    #[test]
    fn noiseless_frame_decodes_immediately() {
        let h = hamming();
        let u = [1, 0, 1, 1, 0, 0, 1];
        let s = h.syndrome(&u).unwrap();
        for cfg in [DecoderConfig::float(10), DecoderConfig::fixed(W10, 10)] {
            let llr = channel_llrs(&bpsk(&u, 1e6), 1.0, cfg.arithmetic).unwrap();
            let out = decode(&h, &s, &llr, &cfg).unwrap();
            assert!(out.syndrome_matched);
            assert!(out.iterations_used <= 1);
            assert_eq!(&*out.hard, &u);
        }
    }

    #[test]
    fn single_flip_corrected_like_coset_ml() {
        let h = hamming();
        let u = [0, 1, 1, 0, 0, 1, 1];
        let s = h.syndrome(&u).unwrap();
        let mut y = bpsk(&u, 1.0);
        y[4] = 0.4; // bit 4 is a 1 sent as -1, observed on the wrong side
        let llr = channel_llrs(&y, 1.0, Arithmetic::Float).unwrap();
        // enumeration over all 2^7 words: the coset ML word is u
        let app = brute_force_app(&h, &s, &llr.to_real());
        let ml: Vec<u8> = app.iter().map(|&l| hard_bit(l)).collect();
        assert_eq!(ml, u);
        let out = decode(&h, &s, &llr, &DecoderConfig::float(10)).unwrap();
        assert!(out.syndrome_matched);
        assert_eq!(&*out.hard, &u);
    }

    #[test]
    fn uninformative_input_fails() {
        let h = hamming();
        let s = [1, 0, 1];
        for cfg in [DecoderConfig::float(5), DecoderConfig::fixed(W10, 5)] {
            let llr = LlrVector::Float(vec![0.0; 7]).convert(cfg.arithmetic).unwrap();
            let out = decode(&h, &s, &llr, &cfg).unwrap();
            assert!(!out.syndrome_matched);
            assert_eq!(out.iterations_used, 5);
            assert_eq!(out.unsatisfied_trace.len(), 5);
        }
    }

    #[test]
    fn dimension_errors() {
        let h = hamming();
        let llr = LlrVector::Float(vec![1.0; 6]);
        assert!(matches!(
            decode(&h, &[0, 0, 0], &llr, &DecoderConfig::float(3)),
            Err(Error::Dimension { what: "llr vector", .. })
        ));
        let llr = LlrVector::Float(vec![1.0; 7]);
        assert!(matches!(
            decode(&h, &[0, 0], &llr, &DecoderConfig::float(3)),
            Err(Error::Dimension { what: "syndrome", .. })
        ));
        assert!(decode(&h, &[0, 0, 0], &llr, &DecoderConfig::float(0)).is_err());
    }

    #[test]
    fn check_update_parse() {
        assert_eq!("nms:0.75".parse::<CheckUpdate>().unwrap(), CheckUpdate::NormalizedMinSum(0.75));
        assert_eq!("sum-product".parse::<CheckUpdate>().unwrap(), CheckUpdate::SumProduct);
        assert_eq!("min-sum".parse::<CheckUpdate>().unwrap(), CheckUpdate::MinSum);
        assert!("nms:x".parse::<CheckUpdate>().is_err());
        let mut cfg = DecoderConfig::fixed(W10, 3);
        cfg.check_update = CheckUpdate::NormalizedMinSum(1.5);
        assert!(cfg.validate().is_err());
    }

    /// Tree-structured code: two checks sharing symbol 2, plus a third check
    /// hanging off symbol 4.
    fn tree_code() -> ParityCheckMatrix {
        ParityCheckMatrix::from_rows(8, vec![vec![0, 1, 2], vec![2, 3, 4], vec![4, 5, 6, 7]]).unwrap()
    }

    #[test]
    fn single_check_exact_after_one_iteration() {
        let h = ParityCheckMatrix::from_rows(4, vec![vec![0, 1, 2, 3]]).unwrap();
        let llr = [0.7, -1.3, 0.2, 2.1];
        let mut cfg = DecoderConfig::float(1);
        cfg.early_stop = false;
        for s in [[0u8], [1]] {
            let out = decode(&h, &s, &LlrVector::Float(llr.to_vec()), &cfg).unwrap();
            let exact = brute_force_app(&h, &s, &llr);
            for (r, x) in out.reliabilities.iter().zip(&exact) {
                assert!((r - x.abs()).abs() < 1e-12, "{r} vs {x}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn cycle_free_posteriors_are_exact(
            llr in proptest::collection::vec(-3.0f64..3.0, 8),
            s in proptest::collection::vec(0u8..2, 3),
        ) {
            let h = tree_code();
            let mut cfg = DecoderConfig::float(3);
            cfg.early_stop = false;
            let mut dec = LayeredDecoder::new(&h);
            dec.decode(&s, &LlrVector::Float(llr.clone()), &cfg).unwrap();
            let exact = brute_force_app(&h, &s, &llr);
            for (p, x) in dec.post_f.iter().zip(&exact) {
                prop_assert!((p - x).abs() < 1e-9, "{} vs {}", p, x);
            }
        }

        #[test]
        fn coset_covariance(
            llr in proptest::collection::vec(-2.5f64..2.5, 7),
            u in proptest::collection::vec(0u8..2, 7),
            c in proptest::collection::vec(0u8..2, 7),
            spa in any::<bool>(),
        ) {
            let h = hamming();
            let mut cfg = DecoderConfig::float(8);
            if !spa {
                cfg.check_update = CheckUpdate::NormalizedMinSum(0.75);
            }
            let s = h.syndrome(&u).unwrap();
            let a = decode(&h, &s, &LlrVector::Float(llr.clone()), &cfg).unwrap();
            let s2 = s.xor(&h.syndrome(&c).unwrap());
            let flipped: Vec<f64> = llr.iter().zip(&c).map(|(&l, &b)| if b == 1 { -l } else { l }).collect();
            let b = decode(&h, &s2, &LlrVector::Float(flipped), &cfg).unwrap();
            prop_assert_eq!(a.syndrome_matched, b.syndrome_matched);
            prop_assert_eq!(a.iterations_used, b.iterations_used);
        }

        #[test]
        fn fixed_posteriors_stay_in_range(
            y in proptest::collection::vec(-40.0f64..40.0, 8),
            s in proptest::collection::vec(0u8..2, 3),
            iters in 1usize..6,
            acc in proptest::option::of(10u8..14),
        ) {
            let h = tree_code();
            let mut cfg = DecoderConfig::fixed(W10, iters);
            cfg.accumulator_bits = acc;
            cfg.early_stop = false;
            let llr = channel_llrs(&y, 1.0, cfg.arithmetic).unwrap();
            let mut dec = LayeredDecoder::new(&h);
            let out = dec.decode(&s, &llr, &cfg).unwrap();
            let limit = W10.widened(acc.unwrap_or(10)).unwrap().max_code();
            prop_assert!(dec.post_i.iter().all(|p| p.abs() <= limit));
            prop_assert!(dec.msg_i.iter().all(|m| m.abs() <= W10.max_code()));
            prop_assert!(out.reliabilities.iter().all(|&r| r <= limit as f64));
        }

        #[test]
        fn reruns_are_identical(
            y in proptest::collection::vec(-3.0f64..3.0, 7),
            s in proptest::collection::vec(0u8..2, 3),
        ) {
            let h = hamming();
            for cfg in [DecoderConfig::float(6), DecoderConfig::fixed(W10, 6)] {
                let llr = channel_llrs(&y, 0.8, cfg.arithmetic).unwrap();
                let a = decode(&h, &s, &llr, &cfg).unwrap();
                let b = decode(&h, &s, &llr, &cfg).unwrap();
                prop_assert_eq!(a, b);
            }
        }
    }
}
