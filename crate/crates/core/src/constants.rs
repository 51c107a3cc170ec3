//! Physical constants (CODATA 2018) and unit conversions.
//!
//! Internal units: time in μs, angular frequency in rad·μs⁻¹, fields and
//! coupling tensors in mT.

/// Bohr magneton, J·T⁻¹.
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// μ0 / 4π, T·m·A⁻¹.
pub const MU0_OVER_4PI: f64 = 1.000_000_000_55e-7;

/// Electron g-factor used when a model does not specify one.
pub const DEFAULT_G_FACTOR: f64 = 2.0013;

/// Geomagnetic field magnitude, mT.
pub const DEFAULT_B0_MT: f64 = 0.05;

/// Default recombination and product-formation rates, μs⁻¹.
pub const DEFAULT_RATE_PER_US: f64 = 1.0;

/// Gyromagnetic ratio g·μ_B/ħ in rad·μs⁻¹·mT⁻¹.
pub fn gyromagnetic_ratio(g_factor: f64) -> f64 {
    // rad s⁻¹ T⁻¹ -> rad μs⁻¹ mT⁻¹
    g_factor * BOHR_MAGNETON / HBAR * 1e-9
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_electron_larmor_frequency_at_geomagnetic_field() {
        // 2.0013 * 9.2740100783e-24 / 1.054571817e-34 = 1.75995...e11 rad/s/T
        let omega = gyromagnetic_ratio(DEFAULT_G_FACTOR) * DEFAULT_B0_MT;
        assert!((omega - 8.7998).abs() < 1e-3, "omega = {omega}");
    }
}
