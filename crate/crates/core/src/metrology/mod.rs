//! Fisher information, yield-based variance and estimator diagnostics at a
//! single field orientation.

pub mod classical;
pub mod derivative;
pub mod estimator;
pub mod qfi;

pub use classical::{cfi_yield, s2_propagation_variance, yield_variance};
pub use derivative::{
    differentiate, state_derivative, DerivativeScheme, DifferentiatedState, StateDerivative, DEFAULT_DELTA,
};
pub use estimator::{
    estimator_moments, optimal_estimator, orthogonality_distance, reconstruct_from_components, spin_component_basis,
    spin_component_decomposition,
};
pub use qfi::{qfi_from_sld, qfi_spectral, qfi_vectorized, regularize, sld_solve, SldSolution};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::liouville::OrientationSolver;
use crate::spin::electronic_singlet_projector;
use crate::spin::operators::{CMatrix, C64};
use crate::spin::system::FieldOrientation;

/// Below this the QFI counts as zero and no estimator is built.
pub const QFI_FLOOR: f64 = 1e-10;

/// Everything computed at one orientation. Angles in radians, information in
/// rad⁻², `inv_n_var` at `n_trials` repetitions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetrologyRecord {
    pub theta: f64,
    pub phi: f64,
    pub phi_s: f64,
    pub dphi_s_dtheta: f64,
    pub qfi: f64,
    pub cfi: f64,
    pub inv_n_var: f64,
    /// `qfi / inv_n_var`
    pub optimality: f64,
    /// Distance from orthogonality between the optimal estimator and `S²`;
    /// NaN where the QFI is below [`QFI_FLOOR`].
    pub ortho_dist_s2: f64,
    /// Same against the singlet projector.
    pub ortho_dist_ps: f64,
    pub qfi_sld: f64,
    pub qfi_vectorized: f64,
    pub sld_residual: f64,
    pub sld_trace: f64,
    pub s2_inv_n_var: f64,
    pub total_population: f64,
    pub flux_balance: f64,
}

/// A record together with the matrices it was computed from.
#[derive(Clone, Debug)]
pub struct PointDetail {
    pub record: MetrologyRecord,
    pub derivative: StateDerivative,
    pub sld: SldSolution,
    pub estimator: Option<CMatrix>,
}

/// `qfi / inv_n_var`, infinite for a flat yield with nonzero QFI and NaN
/// when both vanish.
pub fn optimality(qfi: f64, inv_n_var: f64) -> f64 {
    if inv_n_var == 0.0 {
        if qfi > 0.0 {
            f64::INFINITY
        } else {
            f64::NAN
        }
    } else {
        qfi / inv_n_var
    }
}

/// `S² = 2(1 − P_S)` on the electron pair.
pub fn electronic_total_spin_squared() -> CMatrix {
    (CMatrix::identity(4, 4) - electronic_singlet_projector()) * C64::new(2.0, 0.0)
}

pub fn evaluate_point(
    solver: &OrientationSolver,
    field: &FieldOrientation,
    scheme: DerivativeScheme,
    n_trials: u64,
) -> Result<MetrologyRecord> {
    Ok(evaluate_point_detailed(solver, field, scheme, n_trials)?.record)
}

pub fn evaluate_point_detailed(
    solver: &OrientationSolver,
    field: &FieldOrientation,
    scheme: DerivativeScheme,
    n_trials: u64,
) -> Result<PointDetail> {
    let state = differentiate(solver, field, scheme)?;
    let sd = state.derivative;
    let phi_s = state.steady.phi_s;
    let dphi = state.dphi_s_dtheta;

    let qfi = qfi_spectral(&sd)?;
    let sld = sld_solve(&sd)?;
    let cfi = cfi_yield(phi_s, dphi);
    let var = yield_variance(phi_s, dphi, n_trials)?;
    let s2_var = s2_propagation_variance(phi_s, dphi, n_trials)?;
    let inv_n_var = 1.0 / (n_trials as f64 * var);

    let (estimator, ortho_dist_s2, ortho_dist_ps) = if qfi > QFI_FLOOR {
        let m = optimal_estimator(field.theta, &sld.l, qfi)?;
        let s2 = orthogonality_distance(&m, &electronic_total_spin_squared())?;
        let ps = orthogonality_distance(&m, &electronic_singlet_projector())?;
        (Some(m), s2, ps)
    } else {
        (None, f64::NAN, f64::NAN)
    };

    let record = MetrologyRecord {
        theta: field.theta,
        phi: field.phi,
        phi_s,
        dphi_s_dtheta: dphi,
        qfi,
        cfi,
        inv_n_var,
        optimality: optimality(qfi, inv_n_var),
        ortho_dist_s2,
        ortho_dist_ps,
        qfi_sld: qfi_from_sld(&sld.l, &sd.rho),
        qfi_vectorized: qfi_vectorized(&sld.l, &sd.drho_dtheta),
        sld_residual: sld.residual,
        sld_trace: sld.trace_l_rho,
        s2_inv_n_var: 1.0 / (n_trials as f64 * s2_var),
        total_population: state.steady.total_population,
        flux_balance: state.steady.flux_balance,
    };
    Ok(PointDetail {
        record,
        derivative: sd,
        sld,
        estimator,
    })
}
