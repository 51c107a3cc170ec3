//! θ-derivatives of the normalized electronic steady state.

use crate::error::{Error, Result};
use crate::liouville::{ElectronicSteadyState, OrientationSolver};
use crate::spin::operators::{CMatrix, C64};
use crate::spin::system::{FieldOrientation, SpinSystem};

/// Default finite-difference step, 0.1° in radians.
pub const DEFAULT_DELTA: f64 = 0.1 * std::f64::consts::PI / 180.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivativeScheme {
    /// `(ρ(θ+δ/2) − ρ(θ−δ/2))/δ`, switching to a second-order one-sided
    /// stencil with spacing `δ/2` where `θ ± δ/2` leaves `[0, π]`.
    Central { delta: f64 },
    /// Solves `M ∂ρ = i[∂H, ρ]` with the steady-state factorization.
    Analytic,
}

impl Default for DerivativeScheme {
    fn default() -> Self {
        DerivativeScheme::Central { delta: DEFAULT_DELTA }
    }
}

/// Normalized electronic state and its θ-derivative.
#[derive(Clone, Debug)]
pub struct StateDerivative {
    pub rho: CMatrix,
    pub drho_dtheta: CMatrix,
    /// Finite-difference step in radians; zero for the analytic scheme.
    pub step: f64,
}

impl StateDerivative {
    /// Builds from explicit matrices, as used for synthetic families.
    pub fn new(rho: CMatrix, drho_dtheta: CMatrix) -> Result<Self> {
        if rho.shape() != drho_dtheta.shape() || rho.nrows() != rho.ncols() {
            return Err(Error::invalid(
                "rho and its derivative must be square and of equal size",
            ));
        }
        Ok(StateDerivative {
            rho,
            drho_dtheta,
            step: 0.0,
        })
    }
}

/// Steady state at one orientation with everything needed for metrology.
#[derive(Clone, Debug)]
pub struct DifferentiatedState {
    pub steady: ElectronicSteadyState,
    pub derivative: StateDerivative,
    pub dphi_s_dtheta: f64,
}

fn at_theta(solver: &OrientationSolver, field: &FieldOrientation, theta: f64) -> Result<ElectronicSteadyState> {
    solver.electronic(&crate::spin::system::field_vector(field.b0, theta, field.phi))
}

pub fn differentiate(
    solver: &OrientationSolver,
    field: &FieldOrientation,
    scheme: DerivativeScheme,
) -> Result<DifferentiatedState> {
    match scheme {
        DerivativeScheme::Analytic => {
            let (steady, d) = solver.electronic_with_derivative(field)?;
            Ok(DifferentiatedState {
                derivative: StateDerivative {
                    rho: steady.rho_electronic.clone(),
                    drho_dtheta: d.drho_electronic,
                    step: 0.0,
                },
                dphi_s_dtheta: d.dphi_s,
                steady,
            })
        }
        DerivativeScheme::Central { delta } => {
            if !(delta > 0.0 && delta <= std::f64::consts::FRAC_PI_4) {
                return Err(Error::invalid(format!(
                    "derivative step must lie in (0, pi/4], got {delta}"
                )));
            }
            let theta = field.theta;
            let h = delta / 2.0;
            let center = at_theta(solver, field, theta)?;
            let pi = std::f64::consts::PI;
            let (drho, dphi) = if theta - h >= 0.0 && theta + h <= pi {
                let plus = at_theta(solver, field, theta + h)?;
                let minus = at_theta(solver, field, theta - h)?;
                (
                    (&plus.rho_electronic - &minus.rho_electronic) / C64::new(delta, 0.0),
                    (plus.phi_s - minus.phi_s) / delta,
                )
            } else {
                // f'(θ) ≈ ±(−3f(θ) + 4f(θ±h) − f(θ±2h)) / 2h
                let sign = if theta - h < 0.0 { 1.0 } else { -1.0 };
                let one = at_theta(solver, field, theta + sign * h)?;
                let two = at_theta(solver, field, theta + sign * 2.0 * h)?;
                let combo = |c: &CMatrix, a: &CMatrix, b: &CMatrix| {
                    (a * C64::new(4.0, 0.0) - c * C64::new(3.0, 0.0) - b) * C64::new(sign / (2.0 * h), 0.0)
                };
                (
                    combo(&center.rho_electronic, &one.rho_electronic, &two.rho_electronic),
                    sign * (4.0 * one.phi_s - 3.0 * center.phi_s - two.phi_s) / (2.0 * h),
                )
            };
            Ok(DifferentiatedState {
                derivative: StateDerivative {
                    rho: center.rho_electronic.clone(),
                    drho_dtheta: crate::liouville::hermitian_part(&drho),
                    step: delta,
                },
                dphi_s_dtheta: dphi,
                steady: center,
            })
        }
    }
}

/// Central-difference derivative of the normalized electronic state.
pub fn state_derivative(
    system: &SpinSystem,
    field: &FieldOrientation,
    delta: f64,
    include_eed: bool,
) -> Result<StateDerivative> {
    let solver = OrientationSolver::new(system, include_eed)?;
    Ok(differentiate(&solver, field, DerivativeScheme::Central { delta })?.derivative)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::operators::max_abs;
    use crate::spin::{shipped_model, Nucleus, Radical};
    use nalgebra::Matrix3;

    #[test]
    fn theta_independent_system_has_zero_derivative() {
        let iso = Matrix3::identity() * 0.8;
        let s = SpinSystem::builder("iso")
            .nucleus(Nucleus::new("n", Radical::A, 3, iso))
            .build()
            .unwrap();
        let field = FieldOrientation::from_degrees(0.0, 40.0, 10.0).unwrap();
        let sd = state_derivative(&s, &field, DEFAULT_DELTA, false).unwrap();
        assert!(sd.drho_dtheta.norm() <= 1e-8);
    }

    #[test]
    fn derivative_is_traceless_and_second_order() {
        let s = shipped_model("fad_z_1n").unwrap();
        let solver = OrientationSolver::new(&s, true).unwrap();
        let field = FieldOrientation::from_degrees(0.05, 63.0, 25.0).unwrap();
        let d = |delta: f64| differentiate(&solver, &field, DerivativeScheme::Central { delta }).unwrap();
        let base = 2.0f64.to_radians();
        let (d1, d2, d3) = (d(base), d(base / 2.0), d(base / 4.0));
        assert!(d1.derivative.drho_dtheta.trace().norm() < 1e-10);
        let e1 = (&d1.derivative.drho_dtheta - &d2.derivative.drho_dtheta).norm();
        let e2 = (&d2.derivative.drho_dtheta - &d3.derivative.drho_dtheta).norm();
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");

        let analytic = differentiate(&solver, &field, DerivativeScheme::Analytic).unwrap();
        assert!(max_abs(&(&analytic.derivative.drho_dtheta - &d(DEFAULT_DELTA).derivative.drho_dtheta)) < 1e-5);
        assert!((analytic.dphi_s_dtheta - d(DEFAULT_DELTA).dphi_s_dtheta).abs() < 1e-6);
    }

    #[test]
    fn one_sided_stencils_at_the_poles() {
        let s = shipped_model("fad_w_2n").unwrap();
        let solver = OrientationSolver::new(&s, true).unwrap();
        for theta in [0.0, std::f64::consts::PI] {
            let field = FieldOrientation::new(0.05, theta, 0.7).unwrap();
            let fd = differentiate(&solver, &field, DerivativeScheme::default()).unwrap();
            let exact = differentiate(&solver, &field, DerivativeScheme::Analytic).unwrap();
            let err = max_abs(&(&fd.derivative.drho_dtheta - &exact.derivative.drho_dtheta));
            assert!(err < 1e-4, "theta {theta}: {err}");
            assert!((fd.dphi_s_dtheta - exact.dphi_s_dtheta).abs() < 1e-4);
        }
    }

    #[test]
    fn rejects_bad_steps() {
        let s = shipped_model("fad_z_1n").unwrap();
        let field = FieldOrientation::from_degrees(0.05, 10.0, 0.0).unwrap();
        assert!(state_derivative(&s, &field, 0.0, false).is_err());
        assert!(state_derivative(&s, &field, 2.0, false).is_err());
    }
}
