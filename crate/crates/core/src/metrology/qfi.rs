//! Quantum Fisher information and the symmetric logarithmic derivative.

use nalgebra::DVector;

use super::derivative::StateDerivative;
use crate::error::{Error, Result};
use crate::spin::operators::{CMatrix, C64};

/// Pairs with `p_i + p_j` at or below this are dropped from the spectral sum.
pub const SPECTRAL_CUTOFF: f64 = 1e-12;
/// Eigenvalue floor applied to ρ before the SLD solve.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;
const HERMITICITY_TOLERANCE: f64 = 1e-10;

fn hermiticity_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm() / m.norm().max(1.0)
}

fn check_input(sd: &StateDerivative) -> Result<()> {
    let rho_defect = hermiticity_defect(&sd.rho);
    let d_defect = hermiticity_defect(&sd.drho_dtheta);
    if rho_defect > HERMITICITY_TOLERANCE || d_defect > HERMITICITY_TOLERANCE {
        return Err(Error::invalid(format!(
            "state or derivative not Hermitian (defects {rho_defect:e}, {d_defect:e})"
        )));
    }
    Ok(())
}

/// `𝓕 = 2 Σ_{p_i+p_j>ε} |⟨i|∂ρ|j⟩|² / (p_i + p_j)` over the eigenbasis of ρ.
pub fn qfi_spectral(sd: &StateDerivative) -> Result<f64> {
    check_input(sd)?;
    let eig = sd.rho.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let d = v.adjoint() * &sd.drho_dtheta * v;
    let p = &eig.eigenvalues;
    let mut f = 0.0;
    for i in 0..p.len() {
        for j in 0..p.len() {
            let s = p[i] + p[j];
            if s > SPECTRAL_CUTOFF {
                f += 2.0 * d[(i, j)].norm_sqr() / s;
            }
        }
    }
    Ok(f)
}

/// Symmetric logarithmic derivative and its diagnostics.
#[derive(Clone, Debug)]
pub struct SldSolution {
    pub l: CMatrix,
    /// `‖½{L, ρ} − ∂ρ‖_F`
    pub residual: f64,
    /// `Tr(L ρ)`
    pub trace_l_rho: f64,
}

/// ρ with eigenvalues floored at [`EIGENVALUE_FLOOR`] and trace restored.
pub fn regularize(rho: &CMatrix) -> CMatrix {
    let eig = rho.clone().symmetric_eigen();
    let mut p: Vec<f64> = eig.eigenvalues.iter().map(|&x| x.max(EIGENVALUE_FLOOR)).collect();
    let total: f64 = p.iter().sum();
    let target = rho.trace().re;
    for x in p.iter_mut() {
        *x *= target / total;
    }
    let v = &eig.eigenvectors;
    let diag = CMatrix::from_diagonal(&DVector::from_iterator(p.len(), p.iter().map(|&x| C64::new(x, 0.0))));
    let r = v * diag * v.adjoint();
    (&r + r.adjoint()) * C64::new(0.5, 0.0)
}

/// Solves `(ρ̄ ⊗ 1 + 1 ⊗ ρ) vec(L) = 2 vec(∂ρ)` on the regularized state.
pub fn sld_solve(sd: &StateDerivative) -> Result<SldSolution> {
    check_input(sd)?;
    let n = sd.rho.nrows();
    let rho = regularize(&sd.rho);
    let id = CMatrix::identity(n, n);
    let kron_sum = rho.conjugate().kronecker(&id) + id.kronecker(&rho);
    let rhs = DVector::from_column_slice(sd.drho_dtheta.as_slice()) * C64::new(2.0, 0.0);
    let x = kron_sum
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("SLD Kronecker sum is singular after regularization".into()))?;
    let l = CMatrix::from_column_slice(n, n, x.as_slice());
    let l = (&l + l.adjoint()) * C64::new(0.5, 0.0);
    let residual = ((&l * &sd.rho + &sd.rho * &l) * C64::new(0.5, 0.0) - &sd.drho_dtheta).norm();
    let trace_l_rho = (&l * &sd.rho).trace().re;
    Ok(SldSolution {
        l,
        residual,
        trace_l_rho,
    })
}

/// `Tr(L² ρ)`
pub fn qfi_from_sld(l: &CMatrix, rho: &CMatrix) -> f64 {
    (l * l * rho).trace().re
}

/// `vec(∂ρ)† vec(L)`
pub fn qfi_vectorized(l: &CMatrix, drho: &CMatrix) -> f64 {
    drho.iter().zip(l.iter()).map(|(a, b)| a.conj() * b).sum::<C64>().re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::operators::max_abs;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn pure_qubit_family(theta: f64) -> StateDerivative {
        let (s, co) = (theta / 2.0).sin_cos();
        let psi = nalgebra::dvector![c(co), c(s)];
        let dpsi = nalgebra::dvector![c(-s / 2.0), c(co / 2.0)];
        let rho = &psi * psi.adjoint();
        let drho = &dpsi * psi.adjoint() + &psi * dpsi.adjoint();
        StateDerivative::new(rho, drho).unwrap()
    }

    /// Random full-rank family `ρ(θ) = U(θ) diag(p(θ)) U(θ)†`, differentiated
    /// analytically.
    fn random_family(rng: &mut ChaCha8Rng) -> StateDerivative {
        let n = 4;
        let g = CMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let gen = (&g + g.adjoint()) * c(0.5);
        let base = CMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let base = (&base * base.adjoint()) + CMatrix::identity(n, n) * c(0.05);
        let rho0 = &base / base.trace();
        let mix = CMatrix::from_diagonal(&DVector::from_fn(n, |i, _| {
            c(rng.random_range(-0.3..0.3) * (i as f64 - 1.5))
        }));
        // ρ = ρ0 + θ·mix, rotated: dρ = -i[gen, ρ0] + mix at θ = 0
        let drho = (&gen * &rho0 - &rho0 * &gen) * C64::new(0.0, -1.0) + &mix
            - CMatrix::identity(n, n) * (mix.trace() / c(n as f64));
        StateDerivative::new(rho0, drho).unwrap()
    }

    #[test]
    fn zero_derivative_gives_zero() {
        let sd = StateDerivative::new(CMatrix::identity(4, 4) * c(0.25), CMatrix::zeros(4, 4)).unwrap();
        assert_eq!(qfi_spectral(&sd).unwrap(), 0.0);
        let sld = sld_solve(&sd).unwrap();
        assert_eq!(max_abs(&sld.l), 0.0);
    }

    #[test]
    fn pure_qubit_family_has_unit_qfi() {
        for theta in [0.3, 1.1, 2.5] {
            let sd = pure_qubit_family(theta);
            assert!((qfi_spectral(&sd).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_family_gives_logarithmic_derivative() {
        let (p, dp) = (0.3, 0.2);
        let rho = CMatrix::from_diagonal(&nalgebra::dvector![c(p), c(1.0 - p), c(0.0), c(0.0)]);
        let drho = CMatrix::from_diagonal(&nalgebra::dvector![c(dp), c(-dp), c(0.0), c(0.0)]);
        let sd = StateDerivative::new(rho, drho).unwrap();
        let sld = sld_solve(&sd).unwrap();
        assert!((sld.l[(0, 0)].re - dp / p).abs() < 1e-9);
        assert!((sld.l[(1, 1)].re + dp / (1.0 - p)).abs() < 1e-9);
        for r in 0..4 {
            for col in 0..4 {
                if r != col {
                    assert!(sld.l[(r, col)].norm() < 1e-12);
                }
            }
        }
        let expected = dp * dp / (p * (1.0 - p));
        assert!((qfi_spectral(&sd).unwrap() - expected).abs() < 1e-12);
        assert!((qfi_from_sld(&sld.l, &sd.rho) - expected).abs() < 1e-9);
    }

    #[test]
    fn routes_agree_on_random_mixed_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let sd = random_family(&mut rng);
            let spectral = qfi_spectral(&sd).unwrap();
            let sld = sld_solve(&sd).unwrap();
            let via_l2 = qfi_from_sld(&sld.l, &sd.rho);
            let via_vec = qfi_vectorized(&sld.l, &sd.drho_dtheta);
            assert!((spectral - via_l2).abs() <= 1e-8 * spectral);
            assert!((spectral - via_vec).abs() <= 1e-8 * spectral);
            assert!(sld.residual <= 1e-8);
            assert!(sld.trace_l_rho.abs() <= 1e-10);
        }
    }

    #[test]
    fn rejects_non_hermitian_input() {
        let mut drho = CMatrix::zeros(2, 2);
        drho[(0, 1)] = c(1.0);
        let sd = StateDerivative::new(CMatrix::identity(2, 2) * c(0.5), drho).unwrap();
        assert!(qfi_spectral(&sd).is_err());
        assert!(sld_solve(&sd).is_err());
    }
}
