//! Optimal estimator and the 16-component spin decomposition of two-spin
//! operators.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::spin::operators::{angular_momentum_ops, kron, CMatrix, C64};

/// `M = θ·1 + L/𝓕`
pub fn optimal_estimator(theta: f64, sld: &CMatrix, qfi: f64) -> Result<CMatrix> {
    if !(qfi > 0.0 && qfi.is_finite()) {
        return Err(Error::UndefinedEstimator { qfi });
    }
    let n = sld.nrows();
    Ok(CMatrix::identity(n, n) * C64::new(theta, 0.0) + sld / C64::new(qfi, 0.0))
}

/// Mean `Tr(M ρ)` and variance `Tr((M − θ)² ρ)` of an estimator.
pub fn estimator_moments(m: &CMatrix, rho: &CMatrix, theta: f64) -> (f64, f64) {
    let n = m.nrows();
    let shifted = m - CMatrix::identity(n, n) * C64::new(theta, 0.0);
    ((m * rho).trace().re, (&shifted * &shifted * rho).trace().re)
}

/// Orthonormal product basis `{½·1⊗1, 1⊗S_x, …, 2 S_z⊗S_z}`, index
/// `4a + b` with `a, b ∈ {1, x, y, z}` for the A and B electrons.
pub fn spin_component_basis() -> Vec<CMatrix> {
    let s = angular_momentum_ops(2).expect("spin-1/2");
    let single = [CMatrix::identity(2, 2), s.x, s.y, s.z];
    let mut out = Vec::with_capacity(16);
    for (a, pa) in single.iter().enumerate() {
        for (b, pb) in single.iter().enumerate() {
            let c = match (a == 0, b == 0) {
                (true, true) => 0.5,
                (true, false) | (false, true) => 1.0,
                (false, false) => 2.0,
            };
            out.push(kron(pa, pb) * C64::new(c, 0.0));
        }
    }
    out
}

/// Real coefficients `c_i = Tr[O S_i]` of a Hermitian 4×4 operator.
pub fn spin_component_decomposition(op: &CMatrix) -> Result<[f64; 16]> {
    if op.shape() != (4, 4) {
        return Err(Error::invalid(format!("expected a 4x4 operator, got {:?}", op.shape())));
    }
    let defect = (op - op.adjoint()).norm() / op.norm().max(1.0);
    if defect > 1e-10 {
        return Err(Error::invalid(format!("operator is not Hermitian (defect {defect:e})")));
    }
    let mut c = [0.0; 16];
    for (ci, b) in c.iter_mut().zip(spin_component_basis()) {
        *ci = (op * b).trace().re;
    }
    Ok(c)
}

/// `Σ c_i S_i`
pub fn reconstruct_from_components(c: &[f64; 16]) -> CMatrix {
    spin_component_basis()
        .into_iter()
        .zip(c)
        .fold(CMatrix::zeros(4, 4), |acc, (b, &ci)| acc + b * C64::new(ci, 0.0))
}

/// `|α − π/2|` with `α` the angle between the component vectors.
pub fn orthogonality_distance(m_est: &CMatrix, observable: &CMatrix) -> Result<f64> {
    let a = spin_component_decomposition(m_est)?;
    let b = spin_component_decomposition(observable)?;
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::invalid("orthogonality distance needs nonzero operators"));
    }
    let cos = (a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / (na * nb)).clamp(-1.0, 1.0);
    Ok((cos.acos() - FRAC_PI_2).abs())
}
