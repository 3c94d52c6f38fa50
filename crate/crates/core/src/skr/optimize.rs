//! Modulation-variance optimization of the finite-size key rate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{beta, channel_snr, holevo_bound, skr_finite, va_for_snr, FerFit, SecurityParams, SystemParams};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkrResult {
    /// Optimal modulation variance (SNU).
    pub va_opt: f64,
    pub snr_opt: f64,
    pub fer_at_opt: f64,
    pub beta: f64,
    /// Bits per pulse.
    pub i_ab: f64,
    /// Bits per pulse.
    pub chi_be: f64,
    /// Key rate in bits per pulse.
    pub skr: f64,
    pub beta_exceeds_one: bool,
    /// The achievable SNR range does not meet the fitted range.
    pub fit_domain_disjoint: bool,
    /// Best rate seen on the grid; `skr` is never below it.
    pub grid_best: f64,
    pub grid_points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub va_min: f64,
    pub va_max: f64,
    pub grid_points: usize,
    pub golden_iterations: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            va_min: 0.5,
            va_max: 20.0,
            grid_points: 2000,
            golden_iterations: 80,
        }
    }
}

fn result_at(va: f64, fer: f64, p: &SystemParams, q: &SecurityParams) -> Result<SkrResult> {
    let snr = channel_snr(va, p)?;
    let b = beta(p.code_rate, snr)?;
    let skr = skr_finite(fer, snr, va, p, q)?;
    Ok(SkrResult {
        va_opt: va,
        snr_opt: snr,
        fer_at_opt: fer,
        beta: b,
        i_ab: snr.ln_1p() / std::f64::consts::LN_2,
        chi_be: holevo_bound(va, p)?,
        skr,
        beta_exceeds_one: b > 1.0,
        fit_domain_disjoint: false,
        grid_best: skr,
        grid_points: 1,
    })
}

/// Key rate at a single measured operating point, with `V_A` chosen so the
/// channel delivers `snr`.
pub fn evaluate_at_snr(fer: f64, snr: f64, p: &SystemParams, q: &SecurityParams) -> Result<SkrResult> {
    let va = va_for_snr(snr, p)?;
    result_at(va, fer, p, q)
}

/// Maximizes the key rate over `V_A` with FER taken from `fit`: a uniform
/// grid, then golden-section search inside the best grid cell's neighbours.
pub fn optimize_va(
    p: &SystemParams,
    q: &SecurityParams,
    fit: &FerFit,
    opts: &OptimizerOptions,
) -> Result<SkrResult> {
    p.validate()?;
    q.validate()?;
    if !(opts.va_min > 0.0 && opts.va_max > opts.va_min) || opts.grid_points < 2 {
        return Err(Error::InvalidParameter(format!(
            "empty modulation range [{}, {}] or fewer than 2 grid points",
            opts.va_min, opts.va_max
        )));
    }
    let objective = |va: f64| -> Result<f64> {
        let snr = channel_snr(va, p)?;
        skr_finite(fit.eval(snr), snr, va, p, q)
    };
    let n = opts.grid_points;
    let step = (opts.va_max - opts.va_min) / (n - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|i| opts.va_min + step * i as f64).collect();
    let values: Vec<f64> = grid.par_iter().map(|&va| objective(va)).collect::<Result<_>>()?;
    // first maximum wins, so the reduction is order independent
    let (best_idx, &grid_best) = values
        .iter()
        .enumerate()
        .fold((0, &values[0]), |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc });

    let mut best_va = grid[best_idx];
    let mut best = grid_best;
    if grid_best > 0.0 {
        let (mut a, mut b) = (grid[best_idx.saturating_sub(1)], grid[(best_idx + 1).min(n - 1)]);
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let (mut fc, mut fd) = (objective(c)?, objective(d)?);
        for _ in 0..opts.golden_iterations {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = objective(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = objective(d)?;
            }
        }
        for (va, v) in [(c, fc), (d, fd)] {
            if v > best {
                best = v;
                best_va = va;
            }
        }
    }

    let snr = channel_snr(best_va, p)?;
    let mut out = result_at(best_va, fit.eval(snr), p, q)?;
    debug_assert_eq!(out.skr, best);
    let (fit_lo, fit_hi) = fit.domain();
    let (snr_lo, snr_hi) = (channel_snr(opts.va_min, p)?, channel_snr(opts.va_max, p)?);
    out.fit_domain_disjoint = snr_hi < fit_lo || snr_lo > fit_hi;
    out.grid_best = grid_best;
    out.grid_points = n;
    Ok(out)
}

/// `candidate.skr / reference.skr`, or `None` when the reference rate is zero.
pub fn gain(reference: &SkrResult, candidate: &SkrResult) -> Option<f64> {
    (reference.skr > 0.0).then(|| candidate.skr / reference.skr)
}
