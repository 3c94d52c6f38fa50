//! Holevo bound between Eve and Bob for the heterodyne trusted-noise model.

use super::{check_va, SystemParams};
use crate::{Error, Result};

/// Eigenvalues this far below 1 are treated as rounding noise and clamped.
const EIGEN_TOLERANCE: f64 = 1e-6;

/// `G(x) = (x+1) log2(x+1) - x log2 x`, the entropy of a thermal state with
/// mean photon number `x`.
pub fn entropy_g(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < 1e-9 {
        // (x+1)ln(1+x) = x + x^2/2 + O(x^3)
        return (x * (1.0 - x.ln()) + 0.5 * x * x) / std::f64::consts::LN_2;
    }
    ((x + 1.0) * x.ln_1p() - x * x.ln()) / std::f64::consts::LN_2
}

fn pair(sum: f64, product: f64, label: &str) -> Result<(f64, f64)> {
    let disc = sum * sum - 4.0 * product;
    let disc = if disc < 0.0 && disc > -EIGEN_TOLERANCE * sum * sum {
        0.0
    } else {
        disc
    };
    if !(disc >= 0.0) {
        return Err(Error::ModelDomain(format!("{label}: negative discriminant {disc}")));
    }
    let big_sq = 0.5 * (sum + disc.sqrt());
    // the smaller root from the product avoids cancellation
    let small_sq = product / big_sq;
    Ok((big_sq.sqrt(), small_sq.sqrt()))
}

fn clamp_eigen(l: f64, label: &str) -> Result<f64> {
    if l >= 1.0 {
        Ok(l)
    } else if l > 1.0 - EIGEN_TOLERANCE {
        Ok(1.0)
    } else {
        Err(Error::ModelDomain(format!("{label} symplectic eigenvalue {l} below 1")))
    }
}

/// Symplectic eigenvalues `[l1, l2, l3, l4]`: the first two belong to the
/// Alice-Bob state, the last two to Alice conditioned on Bob's heterodyne
/// outcome.
pub fn symplectic_eigenvalues(va: f64, p: &SystemParams) -> Result<[f64; 4]> {
    check_va(va)?;
    p.validate()?;
    let v = va + 1.0;
    let t = p.transmittance();
    let cl = p.chi_line();
    let ch = p.chi_het();
    let ct = p.chi_total();

    let a = v * v * (1.0 - 2.0 * t) + 2.0 * t + t * t * (v + cl).powi(2);
    let b = (t * (v * cl + 1.0)).powi(2);
    let (l1, l2) = pair(a, b, "joint state")?;

    let norm = (t * (v + ct)).powi(2);
    let sqrt_b = b.sqrt();
    let c = (a * ch * ch + b + 1.0 + 2.0 * ch * (v * sqrt_b + t * (v + cl)) + 2.0 * t * (v * v - 1.0)) / norm;
    let d = (v + sqrt_b * ch).powi(2) / norm;
    let (l3, l4) = pair(c, d, "conditional state")?;

    Ok([
        clamp_eigen(l1, "first")?,
        clamp_eigen(l2, "second")?,
        clamp_eigen(l3, "third")?,
        clamp_eigen(l4, "fourth")?,
    ])
}

/// `chi_BE` in bits per pulse, clamped at zero.
pub fn holevo_bound(va: f64, p: &SystemParams) -> Result<f64> {
    let [l1, l2, l3, l4] = symplectic_eigenvalues(va, p)?;
    let g = |l: f64| entropy_g(0.5 * (l - 1.0));
    Ok((g(l1) + g(l2) - g(l3) - g(l4)).max(0.0))
}
