//! Signed fixed-point arithmetic with symmetric saturation.
//!
//! A [`FixedFormat`] of `w` total bits (sign included) and `f` fraction bits
//! holds integer codes in `[-(2^(w-1) - 1), 2^(w-1) - 1]`; the two's-complement
//! minimum is never produced, so negation and absolute value cannot overflow.
//! Quantization rounds half away from zero.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedFormat {
    total_bits: u8,
    frac_bits: u8,
}

impl FixedFormat {
    /// 1 sign, 4 integer, 5 fraction bits.
    pub const W10: FixedFormat = FixedFormat {
        total_bits: 10,
        frac_bits: 5,
    };
    /// 1 sign, 4 integer, 7 fraction bits.
    pub const W12: FixedFormat = FixedFormat {
        total_bits: 12,
        frac_bits: 7,
    };

    pub fn new(total_bits: u8, frac_bits: u8) -> Result<Self> {
        if !(1..=31).contains(&total_bits) || frac_bits < 1 || frac_bits >= total_bits {
            return Err(Error::InvalidParameter(format!(
                "fixed format w={total_bits}, f={frac_bits} needs 1 <= f < w <= 31"
            )));
        }
        Ok(FixedFormat {
            total_bits,
            frac_bits,
        })
    }

    pub fn total_bits(self) -> u8 {
        self.total_bits
    }

    pub fn frac_bits(self) -> u8 {
        self.frac_bits
    }

    /// Largest code magnitude, `2^(w-1) - 1`.
    #[inline]
    pub fn max_code(self) -> i32 {
        (1i32 << (self.total_bits - 1)) - 1
    }

    /// Real value of one LSB, `2^-f`.
    pub fn resolution(self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    pub fn max_value(self) -> f64 {
        self.max_code() as f64 * self.resolution()
    }

    /// Same fraction bits, `total_bits` wide. Used for wider accumulators.
    pub fn widened(self, total_bits: u8) -> Result<Self> {
        FixedFormat::new(total_bits, self.frac_bits)
    }

    #[inline]
    pub fn saturate(self, code: i64) -> i32 {
        let max = self.max_code() as i64;
        code.clamp(-max, max) as i32
    }

    /// Code for `x`, rounded half away from zero and saturated.
    pub fn quantize_code(self, x: f64) -> Result<i32> {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        let scaled = (x * (self.frac_bits as f64).exp2()).round();
        let max = self.max_code() as f64;
        Ok(scaled.clamp(-max, max) as i32)
    }

    pub fn quantize(self, x: f64) -> Result<FixedValue> {
        Ok(FixedValue {
            code: self.quantize_code(x)?,
            format: self,
        })
    }

    pub fn to_real(self, code: i32) -> f64 {
        code as f64 * self.resolution()
    }
}

impl fmt::Display for FixedFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "fixed:w={},f={}", self.total_bits, self.frac_bits)
    }
}

/// A saturated code together with its format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FixedValue {
    code: i32,
    format: FixedFormat,
}

impl FixedValue {
    /// Wraps a code, saturating it into range.
    pub fn from_code(code: i32, format: FixedFormat) -> Self {
        FixedValue {
            code: format.saturate(code as i64),
            format,
        }
    }

    pub fn zero(format: FixedFormat) -> Self {
        FixedValue { code: 0, format }
    }

    pub fn code(self) -> i32 {
        self.code
    }

    pub fn format(self) -> FixedFormat {
        self.format
    }

    pub fn to_real(self) -> f64 {
        self.format.to_real(self.code)
    }

    fn same_format(self, other: FixedValue) -> Result<()> {
        if self.format != other.format {
            return Err(Error::FormatMismatch(
                self.format.to_string(),
                other.format.to_string(),
            ));
        }
        Ok(())
    }

    pub fn sat_add(self, other: FixedValue) -> Result<FixedValue> {
        self.same_format(other)?;
        Ok(FixedValue {
            code: self.format.saturate(self.code as i64 + other.code as i64),
            format: self.format,
        })
    }

    pub fn sat_sub(self, other: FixedValue) -> Result<FixedValue> {
        self.same_format(other)?;
        Ok(FixedValue {
            code: self.format.saturate(self.code as i64 - other.code as i64),
            format: self.format,
        })
    }

    pub fn abs(self) -> FixedValue {
        FixedValue {
            code: self.code.abs(),
            format: self.format,
        }
    }
}

/// Number representation used by the decoder data path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arithmetic {
    Float,
    Fixed(FixedFormat),
}

impl Arithmetic {
    pub fn is_fixed(self) -> bool {
        matches!(self, Arithmetic::Fixed(_))
    }
}

impl fmt::Display for Arithmetic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arithmetic::Float => f.write_str("float"),
            Arithmetic::Fixed(fmt) => fmt.fmt(f),
        }
    }
}

/// Parses `float` or `fixed:w=<bits>,f=<frac>`.
impl FromStr for Arithmetic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "float" {
            return Ok(Arithmetic::Float);
        }
        let bad = || Error::InvalidParameter(format!("arithmetic `{s}`: expected `float` or `fixed:w=<n>,f=<n>`"));
        let spec = s.strip_prefix("fixed:").ok_or_else(bad)?;
        let (mut w, mut f) = (None, None);
        for part in spec.split(',') {
            let (key, value) = part.split_once('=').ok_or_else(bad)?;
            let value: u8 = value.trim().parse().map_err(|_| bad())?;
            match key.trim() {
                "w" => w = Some(value),
                "f" => f = Some(value),
                _ => return Err(bad()),
            }
        }
        Ok(Arithmetic::Fixed(FixedFormat::new(
            w.ok_or_else(bad)?,
            f.ok_or_else(bad)?,
        )?))
    }
}
