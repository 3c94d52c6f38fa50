//! Decoder throughput and real-time key rate.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Bits per second of one decoding engine clocked at `clock_hz`, spending
/// `cycles_per_iteration` cycles per iteration on `frame_bits`-bit frames.
pub fn throughput(clock_hz: f64, frame_bits: f64, cycles_per_iteration: f64, max_iterations: f64) -> Result<f64> {
    for (name, v) in [
        ("clock frequency", clock_hz),
        ("frame length", frame_bits),
        ("cycles per iteration", cycles_per_iteration),
        ("iteration count", max_iterations),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(clock_hz * frame_bits / (cycles_per_iteration * max_iterations))
}

/// Whether one residual-error eraser can serve `engines` decoders: its
/// per-frame cost, in decoder-iteration equivalents, times the number of
/// engines must fit in `max_iterations`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EraserBudget {
    pub cost_iterations: f64,
    pub engines: u32,
    pub max_iterations: f64,
    pub load: f64,
    pub satisfied: bool,
}

pub fn eraser_budget(cost_iterations: f64, engines: u32, max_iterations: f64) -> Result<EraserBudget> {
    if !(cost_iterations >= 0.0) || !(max_iterations > 0.0) || engines == 0 {
        return Err(Error::InvalidParameter(format!(
            "eraser budget needs cost >= 0, engines >= 1, t_max > 0 (got {cost_iterations}, {engines}, {max_iterations})"
        )));
    }
    let load = cost_iterations * engines as f64;
    Ok(EraserBudget {
        cost_iterations,
        engines,
        max_iterations,
        load,
        satisfied: load <= max_iterations,
    })
}

/// Secret bits per second: reconciliation throughput times key bits per pulse.
pub fn realtime_skr(throughput_bps: f64, skr_per_pulse: f64) -> Result<f64> {
    if !(throughput_bps >= 0.0) || !(skr_per_pulse >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "throughput and key rate must be non-negative (got {throughput_bps}, {skr_per_pulse})"
        )));
    }
    Ok(throughput_bps * skr_per_pulse)
}
