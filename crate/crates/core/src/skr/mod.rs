//! Finite-size secret key rate for Gaussian-modulated CV-QKD with reverse
//! reconciliation, plus the decoder throughput model.
//!
//! The channel is the heterodyne trusted-detector model: a lossy fiber with
//! input-referred excess noise followed by a detector of efficiency `eta`
//! and electronic noise `v_el`, all in shot-noise units.

mod fit;
mod holevo;
mod optimize;
mod throughput;

pub use fit::FerFit;
pub use holevo::{entropy_g, holevo_bound, symplectic_eigenvalues};
pub use optimize::{evaluate_at_snr, gain, optimize_va, OptimizerOptions, SkrResult};
pub use throughput::{eraser_budget, realtime_skr, throughput, EraserBudget};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Channel excess noise, input referred (SNU).
    pub excess_noise: f64,
    /// Detector electronic noise (SNU).
    pub electronic_noise: f64,
    pub detector_efficiency: f64,
    /// Fiber attenuation in dB/km.
    pub fiber_loss: f64,
    pub distance_km: f64,
    pub code_rate: f64,
}

impl SystemParams {
    /// Reference link: excess noise 0.005, electronic noise 0.041,
    /// efficiency 0.606, 0.2 dB/km.
    pub fn reference(distance_km: f64, code_rate: f64) -> Self {
        SystemParams {
            excess_noise: 0.005,
            electronic_noise: 0.041,
            detector_efficiency: 0.606,
            fiber_loss: 0.2,
            distance_km,
            code_rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidParameter(what));
        let finite = [
            self.excess_noise,
            self.electronic_noise,
            self.detector_efficiency,
            self.fiber_loss,
            self.distance_km,
            self.code_rate,
        ];
        if let Some(&x) = finite.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(x));
        }
        if !(self.detector_efficiency > 0.0 && self.detector_efficiency <= 1.0) {
            return bad(format!("detector efficiency {} outside (0, 1]", self.detector_efficiency));
        }
        if self.excess_noise < 0.0 || self.electronic_noise < 0.0 {
            return bad("noise terms must be non-negative".into());
        }
        if self.fiber_loss <= 0.0 {
            return bad(format!("fiber loss {} must be positive", self.fiber_loss));
        }
        if self.distance_km < 0.0 {
            return bad(format!("distance {} must be non-negative", self.distance_km));
        }
        if !(self.code_rate > 0.0 && self.code_rate < 1.0) {
            return bad(format!("code rate {} outside (0, 1)", self.code_rate));
        }
        Ok(())
    }

    pub fn transmittance(&self) -> f64 {
        transmittance(self.fiber_loss, self.distance_km)
    }

    /// Channel-added noise referred to the channel input.
    pub fn chi_line(&self) -> f64 {
        1.0 / self.transmittance() - 1.0 + self.excess_noise
    }

    /// Detection-added noise of a heterodyne receiver.
    pub fn chi_het(&self) -> f64 {
        let eta = self.detector_efficiency;
        (2.0 - eta + 2.0 * self.electronic_noise) / eta
    }

    pub fn chi_total(&self) -> f64 {
        self.chi_line() + self.chi_het() / self.transmittance()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecurityParams {
    /// Alphabet size of the discretized data.
    pub alphabet_size: f64,
    pub eps_smooth: f64,
    pub eps_hash: f64,
    /// Total exchanged signals N.
    pub block_size: f64,
    /// Signals used for the key, K.
    pub key_signals: f64,
}

impl SecurityParams {
    /// `d = 32`, both epsilons `1e-10`, `K = N/2`.
    pub fn reference(block_size: f64) -> Self {
        SecurityParams {
            alphabet_size: 32.0,
            eps_smooth: 1e-10,
            eps_hash: 1e-10,
            block_size,
            key_signals: block_size / 2.0,
        }
    }

    pub fn key_fraction(&self) -> f64 {
        self.key_signals / self.block_size
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidParameter(what));
        if !(self.alphabet_size >= 2.0) {
            return bad(format!("alphabet size {} must be at least 2", self.alphabet_size));
        }
        for (name, e) in [("smoothing", self.eps_smooth), ("hashing", self.eps_hash)] {
            if !(e > 0.0 && e < 1.0) {
                return bad(format!("{name} epsilon {e} outside (0, 1)"));
            }
        }
        if !(self.key_signals >= 1.0 && self.key_signals <= self.block_size) || !self.block_size.is_finite() {
            return bad(format!(
                "need 1 <= K <= N, got K = {}, N = {}",
                self.key_signals, self.block_size
            ));
        }
        Ok(())
    }
}

/// Fiber transmittance `10^(-loss * L / 10)`.
pub fn transmittance(fiber_loss: f64, distance_km: f64) -> f64 {
    10f64.powf(-fiber_loss * distance_km / 10.0)
}

fn check_va(va: f64) -> Result<()> {
    if !(va > 0.0) || !va.is_finite() {
        return Err(Error::InvalidParameter(format!("modulation variance {va} must be positive")));
    }
    Ok(())
}

/// Signal-to-noise ratio seen by the decoder, `V_A / (1 + chi_total)`.
pub fn channel_snr(va: f64, p: &SystemParams) -> Result<f64> {
    check_va(va)?;
    p.validate()?;
    Ok(va / (1.0 + p.chi_total()))
}

/// Modulation variance that yields `snr`.
pub fn va_for_snr(snr: f64, p: &SystemParams) -> Result<f64> {
    check_snr(snr)?;
    p.validate()?;
    Ok(snr * (1.0 + p.chi_total()))
}

/// `I_AB = log2(1 + snr)` bits per pulse.
pub fn mutual_information(va: f64, p: &SystemParams) -> Result<f64> {
    Ok(channel_snr(va, p)?.ln_1p() / std::f64::consts::LN_2)
}

fn check_snr(snr: f64) -> Result<()> {
    if !(snr > 0.0) || !snr.is_finite() {
        return Err(Error::InvalidParameter(format!("snr {snr} must be positive")));
    }
    Ok(())
}

/// Reconciliation efficiency `R / (log2(1 + snr) / 2)`.
pub fn beta(code_rate: f64, snr: f64) -> Result<f64> {
    check_snr(snr)?;
    Ok(code_rate / (0.5 * snr.ln_1p() / std::f64::consts::LN_2))
}

/// Finite-size AEP penalty coefficient, to be divided by `sqrt(K)`.
pub fn delta_aep(alphabet_size: f64, p_ec: f64, eps_smooth: f64) -> Result<f64> {
    if !(alphabet_size >= 2.0) {
        return Err(Error::InvalidParameter(format!("alphabet size {alphabet_size} below 2")));
    }
    if !(p_ec > 0.0 && p_ec <= 1.0) {
        return Err(Error::InvalidParameter(format!("p_ec {p_ec} outside (0, 1]")));
    }
    if !(eps_smooth > 0.0 && eps_smooth < 1.0) {
        return Err(Error::InvalidParameter(format!("smoothing epsilon {eps_smooth} outside (0, 1)")));
    }
    let arg = (18.0 / (p_ec * p_ec * eps_smooth.powi(4))).log2();
    if !(arg > 0.0) {
        return Err(Error::ModelDomain(format!("log2(18/(p^2 eps^4)) = {arg} is not positive")));
    }
    Ok(4.0 * (alphabet_size.sqrt() + 2.0).log2() * arg.sqrt())
}

/// Privacy-amplification offset `log2[p (1 - eps_s^2/3)] + 2 log2(sqrt(2) eps_h)`.
pub fn theta(p_ec: f64, eps_smooth: f64, eps_hash: f64) -> Result<f64> {
    if !(p_ec > 0.0 && p_ec <= 1.0) {
        return Err(Error::InvalidParameter(format!("p_ec {p_ec} outside (0, 1]")));
    }
    for e in [eps_smooth, eps_hash] {
        if !(e > 0.0 && e < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon {e} outside (0, 1)")));
        }
    }
    Ok((p_ec * (1.0 - eps_smooth * eps_smooth / 3.0)).log2()
        + 2.0 * (std::f64::consts::SQRT_2 * eps_hash).log2())
}

/// Composable finite-size key rate in bits per pulse, clamped at zero.
///
/// `snr` sets both the reconciliation efficiency and `I_AB`; `va` sets the
/// Holevo bound. They agree when `va = va_for_snr(snr)`.
pub fn skr_finite(fer: f64, snr: f64, va: f64, p: &SystemParams, q: &SecurityParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&fer) {
        return Err(Error::InvalidParameter(format!("fer {fer} outside [0, 1]")));
    }
    p.validate()?;
    q.validate()?;
    check_snr(snr)?;
    check_va(va)?;
    let p_ec = 1.0 - fer;
    if p_ec <= 0.0 {
        return Ok(0.0);
    }
    let i_ab = snr.ln_1p() / std::f64::consts::LN_2;
    let b = beta(p.code_rate, snr)?;
    let chi = holevo_bound(va, p)?;
    let k = q.key_signals;
    let rate = q.key_fraction()
        * p_ec
        * (b * i_ab - chi - delta_aep(q.alphabet_size, p_ec, q.eps_smooth)? / k.sqrt()
            + theta(p_ec, q.eps_smooth, q.eps_hash)? / k);
    Ok(rate.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn transmittance_examples() {
        assert!(close(transmittance(0.2, 25.0), 0.316228, 5e-7));
        assert_eq!(transmittance(0.2, 0.0), 1.0);
        assert!(close(transmittance(0.2, 50.0), 0.1, 1e-15));
    }

    #[test]
    fn snr_mapping() {
        let p = SystemParams::reference(25.0, 0.2);
        assert!(close(channel_snr(3.995, &p).unwrap(), 0.3675, 5e-5));
        assert!(channel_snr(1e-12, &p).unwrap() < 1e-12);
        assert!(channel_snr(0.0, &p).is_err());
        let va = va_for_snr(0.3675, &p).unwrap();
        assert!(close(channel_snr(va, &p).unwrap(), 0.3675, 1e-15));
        let snr = channel_snr(3.995, &p).unwrap();
        assert_eq!(mutual_information(3.995, &p).unwrap(), snr.ln_1p() / std::f64::consts::LN_2);
    }

    #[test]
    fn beta_examples() {
        assert!(close(beta(0.2, 0.3675).unwrap(), 0.885856, 5e-7));
        assert!(close(beta(0.1, 0.1686).unwrap(), 0.889754, 5e-7));
        assert!(close(beta(0.5, 1.0).unwrap(), 1.0, 1e-15));
        assert!(beta(0.5, 0.0).is_err());
    }

    #[test]
    fn finite_size_terms() {
        assert!(close(delta_aep(32.0, 1.0, 1e-10).unwrap(), 137.5188, 1e-4));
        assert!(delta_aep(2.0, 1.0, 1e-10).unwrap() < delta_aep(32.0, 1.0, 1e-10).unwrap());
        assert!(delta_aep(32.0, 0.9657, 1e-10).unwrap() > delta_aep(32.0, 1.0, 1e-10).unwrap());
        assert!(delta_aep(1.0, 1.0, 1e-10).is_err());
        assert!(close(theta(1.0, 1e-10, 1e-10).unwrap(), -65.43856, 1e-5));
        assert!(theta(1.0, 1e-300, std::f64::consts::FRAC_1_SQRT_2).unwrap().abs() < 1e-15);
        assert!(theta(1.0, 1e-10, 1e-12).unwrap() < theta(1.0, 1e-10, 1e-10).unwrap());
        assert!(theta(0.0, 1e-10, 1e-10).is_err());
    }

    #[test]
    fn skr_examples() {
        let p = SystemParams::reference(25.0, 0.2);
        let q = SecurityParams::reference(1e12);
        let snr = channel_snr(3.995, &p).unwrap();
        assert_eq!(skr_finite(1.0, snr, 3.995, &p, &q).unwrap(), 0.0);
        let k = skr_finite(0.0343, snr, 3.995, &p, &q).unwrap();
        assert!(close(k, 0.032396, 5e-6), "{k}");
        // a rate too low to beat the Holevo bound clamps to zero
        let weak = SystemParams::reference(25.0, 0.05);
        assert_eq!(skr_finite(0.0, snr, 3.995, &weak, &q).unwrap(), 0.0);
        assert!(skr_finite(1.5, snr, 3.995, &p, &q).is_err());
    }

    #[test]
    fn skr_monotone_in_fer() {
        let p = SystemParams::reference(25.0, 0.2);
        let q = SecurityParams::reference(1e10);
        let snr = channel_snr(3.995, &p).unwrap();
        let mut last = f64::INFINITY;
        for i in 0..=100 {
            let k = skr_finite(i as f64 / 100.0, snr, 3.995, &p, &q).unwrap();
            assert!(k <= last);
            last = k;
        }
    }

    #[test]
    fn asymptotic_limit() {
        let p = SystemParams::reference(25.0, 0.2);
        let q = SecurityParams::reference(1e18);
        let snr = channel_snr(3.995, &p).unwrap();
        let fer = 0.05;
        let k = skr_finite(fer, snr, 3.995, &p, &q).unwrap();
        let limit = 0.5 * (1.0 - fer) * (2.0 * 0.2 - holevo_bound(3.995, &p).unwrap());
        assert!(close(k, limit, 1e-6));
    }

    #[test]
    fn parameter_validation() {
        let mut p = SystemParams::reference(25.0, 0.2);
        p.detector_efficiency = 1.2;
        assert!(p.validate().is_err());
        let mut q = SecurityParams::reference(1e8);
        q.key_signals = 2e8;
        assert!(q.validate().is_err());
        q = SecurityParams::reference(1e8);
        q.alphabet_size = 1.0;
        assert!(q.validate().is_err());
    }
}
