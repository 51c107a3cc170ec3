//! Yield-based (singlet/triplet) Fisher information and variance.

use crate::error::{Error, Result};

/// Yields this close to 0 or 1 count as boundary values.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;

fn at_boundary(phi_s: f64) -> bool {
    phi_s <= BOUNDARY_TOLERANCE || phi_s >= 1.0 - BOUNDARY_TOLERANCE
}

/// Two-outcome Fisher information `Φ'² / (Φ(1 − Φ))`. At a boundary yield it
/// is `+∞` for a nonzero slope and `0` for a flat one.
pub fn cfi_yield(phi_s: f64, dphi_s_dtheta: f64) -> f64 {
    if dphi_s_dtheta == 0.0 {
        return 0.0;
    }
    if at_boundary(phi_s) {
        return f64::INFINITY;
    }
    dphi_s_dtheta * dphi_s_dtheta / (phi_s * (1.0 - phi_s))
}

fn check_trials(n_trials: u64) -> Result<()> {
    if n_trials == 0 {
        return Err(Error::invalid("number of trials must be at least 1"));
    }
    Ok(())
}

/// Binomial error propagation `Φ(1 − Φ) / (N Φ'²)`; `+∞` for a flat yield.
pub fn yield_variance(phi_s: f64, dphi_s_dtheta: f64, n_trials: u64) -> Result<f64> {
    check_trials(n_trials)?;
    if dphi_s_dtheta == 0.0 {
        return Ok(f64::INFINITY);
    }
    if at_boundary(phi_s) {
        return Ok(0.0);
    }
    Ok(phi_s * (1.0 - phi_s) / (n_trials as f64 * dphi_s_dtheta * dphi_s_dtheta))
}

/// The same variance from the statistics of `S²`, whose eigenvalues are 0
/// (singlet) and 2 (triplet): `⟨S²⟩ = 2(1 − Φ)`, `⟨S⁴⟩ = 4(1 − Φ)`.
pub fn s2_propagation_variance(phi_s: f64, dphi_s_dtheta: f64, n_trials: u64) -> Result<f64> {
    check_trials(n_trials)?;
    let mean = 2.0 * (1.0 - phi_s);
    let second = 4.0 * (1.0 - phi_s);
    let spread = second - mean * mean;
    let slope = -2.0 * dphi_s_dtheta;
    if slope == 0.0 {
        return Ok(f64::INFINITY);
    }
    if at_boundary(phi_s) {
        return Ok(0.0);
    }
    Ok(spread / (n_trials as f64 * slope * slope))
}
