//! Monotone FER-vs-SNR interpolation.
//!
//! Samples are sorted by SNR, forced non-increasing by pooling adjacent
//! violators (in log10 FER), and joined by a shape-preserving piecewise
//! cubic Hermite interpolant of log10 FER. Below the sampled range the fit
//! returns 1; above it, the smallest fitted FER.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// FER samples of zero are floored here before taking logarithms.
pub const MIN_FER: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FerFit {
    snr: Vec<f64>,
    log_fer: Vec<f64>,
    slopes: Vec<f64>,
}

/// Pool-adjacent-violators for a non-increasing fit with unit weights.
fn non_increasing(values: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (last, n_last) = blocks[blocks.len() - 1];
            let (prev, n_prev) = blocks[blocks.len() - 2];
            if prev >= last {
                break;
            }
            blocks.pop();
            let n = n_prev + n_last;
            *blocks.last_mut().unwrap() = ((prev * n_prev as f64 + last * n_last as f64) / n as f64, n);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(v, n)| std::iter::repeat_n(v, n))
        .collect()
}

/// Fritsch-Carlson derivative estimates with one-sided three-point ends.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (a, b) = (delta[k - 1], delta[k]);
        if a == 0.0 || b == 0.0 || a.signum() != b.signum() {
            continue;
        }
        let w1 = 2.0 * h[k] + h[k - 1];
        let w2 = h[k] + 2.0 * h[k - 1];
        d[k] = (w1 + w2) / (w1 / a + w2 / b);
    }
    let end = |h0: f64, h1: f64, m0: f64, m1: f64| {
        let s = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
        if s.signum() != m0.signum() {
            0.0
        } else if m0.signum() != m1.signum() && s.abs() > 3.0 * m0.abs() {
            3.0 * m0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

impl FerFit {
    /// Needs at least two samples with distinct SNR; FER values must lie in
    /// [0, 1].
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        let mut pts = points.to_vec();
        if let Some(&(s, f)) = pts
            .iter()
            .find(|(s, f)| !s.is_finite() || !(0.0..=1.0).contains(f))
        {
            return Err(Error::InvalidParameter(format!("invalid FER sample ({s}, {f})")));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter("FER samples repeat an snr".into()));
        }
        if pts.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "a FER fit needs at least 2 samples, got {}",
                pts.len()
            )));
        }
        let snr: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let raw: Vec<f64> = pts.iter().map(|p| p.1.max(MIN_FER).log10()).collect();
        let log_fer = non_increasing(&raw);
        let slopes = pchip_slopes(&snr, &log_fer);
        Ok(FerFit { snr, log_fer, slopes })
    }

    /// Sampled SNR range.
    pub fn domain(&self) -> (f64, f64) {
        (self.snr[0], self.snr[self.snr.len() - 1])
    }

    /// The monotone-adjusted sample values.
    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.snr.iter().zip(&self.log_fer).map(|(&s, &l)| (s, 10f64.powf(l)))
    }

    pub fn min_fer(&self) -> f64 {
        10f64.powf(self.log_fer[self.log_fer.len() - 1])
    }

    pub fn eval(&self, snr: f64) -> f64 {
        let (lo, hi) = self.domain();
        if snr < lo {
            return 1.0;
        }
        if snr >= hi {
            return self.min_fer();
        }
        let k = self.snr.partition_point(|&x| x <= snr) - 1;
        let h = self.snr[k + 1] - self.snr[k];
        let t = (snr - self.snr[k]) / h;
        let (y0, y1) = (self.log_fer[k], self.log_fer[k + 1]);
        let (d0, d1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let y = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1;
        10f64.powf(y).min(1.0)
    }
}
