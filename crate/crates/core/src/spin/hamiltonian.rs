//! Radical-pair Hamiltonian, singlet projector and related operators.

use nalgebra::{Matrix3, Vector3};

use super::operators::{angular_momentum_ops, embed_local, kron, CMatrix, OperatorMatrix, SpinMatrices, C64};
use super::system::{field_vector_dtheta, FieldOrientation, Radical, SpinSystem};
use crate::constants::{BOHR_MAGNETON, MU0_OVER_4PI};
use crate::error::{Error, Result};

/// Embeds `op` acting on global `site` into the full space of `system`.
pub fn embed_site_operator(op: &CMatrix, site: usize, system: &SpinSystem) -> Result<OperatorMatrix> {
    let dims = system.site_dims();
    if site >= dims.len() {
        return Err(Error::invalid(format!(
            "site {site} out of range (system has {} sites)",
            dims.len()
        )));
    }
    if op.nrows() != dims[site] || op.ncols() != dims[site] {
        return Err(Error::invalid(format!(
            "operator is {}x{} but site {site} has dimension {}",
            op.nrows(),
            op.ncols(),
            dims[site]
        )));
    }
    Ok(OperatorMatrix::from_triplets(
        system.dim(),
        embed_local(op, &[site], &dims)?,
    ))
}

/// `¼ − S_A·S_B` on the 4-dimensional electronic space.
pub fn electronic_singlet_projector() -> CMatrix {
    let s = angular_momentum_ops(2).expect("spin-1/2");
    let mut p = CMatrix::identity(4, 4) * C64::new(0.25, 0.0);
    for c in s.components() {
        p -= kron(c, c);
    }
    p
}

/// Singlet projector `P_S = ¼ − S_A·S_B` on the full space.
pub fn singlet_projector(system: &SpinSystem) -> Result<OperatorMatrix> {
    check_cap(system)?;
    let dims = system.site_dims();
    Ok(OperatorMatrix::from_triplets(
        system.dim(),
        embed_local(&electronic_singlet_projector(), &[0, 1], &dims)?,
    ))
}

/// Total electron spin squared `(S_A + S_B)²` on the full space.
pub fn total_spin_squared(system: &SpinSystem) -> Result<OperatorMatrix> {
    check_cap(system)?;
    let s = angular_momentum_ops(2).expect("spin-1/2");
    let id = CMatrix::identity(2, 2);
    let mut local = CMatrix::zeros(4, 4);
    for c in s.components() {
        let total = kron(c, &id) + kron(&id, c);
        local += &total * &total;
    }
    Ok(OperatorMatrix::from_triplets(
        system.dim(),
        embed_local(&local, &[0, 1], &system.site_dims())?,
    ))
}

fn check_cap(system: &SpinSystem) -> Result<()> {
    if system.dim() > system.dim_cap() {
        return Err(Error::Capacity {
            dim: system.dim(),
            cap: system.dim_cap(),
        });
    }
    Ok(())
}

/// `Σ_ab T_ab · u_a ⊗ v_b`
fn bilinear(u: &SpinMatrices, t: &Matrix3<f64>, v: &SpinMatrices) -> CMatrix {
    let (uc, vc) = (u.components(), v.components());
    let n = uc[0].nrows() * vc[0].nrows();
    let mut out = CMatrix::zeros(n, n);
    for a in 0..3 {
        for b in 0..3 {
            if t[(a, b)] != 0.0 {
                out += kron(uc[a], vc[b]) * C64::new(t[(a, b)], 0.0);
            }
        }
    }
    out
}

/// Field-independent and field-linear pieces of the Hamiltonian, so that
/// `H(B) = static_part + Σ_k B_k · zeeman[k]` with `B` in mT.
#[derive(Clone, Debug)]
pub struct HamiltonianParts {
    pub static_part: OperatorMatrix,
    pub zeeman: [OperatorMatrix; 3],
}

impl HamiltonianParts {
    pub fn new(system: &SpinSystem, include_eed: bool) -> Result<Self> {
        check_cap(system)?;
        let dims = system.site_dims();
        let dim = system.dim();
        let scale = system.tensor_scale();
        let electron = angular_momentum_ops(2)?;

        let mut triplets = Vec::new();
        for (pos, &idx) in system.nuclei_in_site_order().iter().enumerate() {
            let n = &system.nuclei()[idx];
            let nuc = angular_momentum_ops(n.multiplicity)?;
            let local = bilinear(&electron, &(n.hyperfine * scale), &nuc);
            let e_site = SpinSystem::electron_site(n.radical);
            triplets.extend(embed_local(&local, &[e_site, pos + 2], &dims)?);
        }
        if include_eed {
            if let Some(d) = system.eed() {
                let local = bilinear(&electron, &(d * scale), &electron);
                triplets.extend(embed_local(&local, &[0, 1], &dims)?);
            }
        }
        let static_part = OperatorMatrix::from_triplets(dim, triplets);

        // ω_i·S_i with ω_i = −γ_i B
        let gammas = [Radical::A, Radical::B].map(|r| crate::constants::gyromagnetic_ratio(system.zeeman_g(r)));
        let zeeman = [0usize, 1, 2].map(|k| {
            let mut t = Vec::new();
            for (site, gamma) in gammas.iter().enumerate() {
                let local = electron.components()[k] * C64::new(-gamma, 0.0);
                t.extend(embed_local(&local, &[site], &dims).expect("electron sites exist"));
            }
            OperatorMatrix::from_triplets(dim, t)
        });
        Ok(HamiltonianParts { static_part, zeeman })
    }

    pub fn dim(&self) -> usize {
        self.static_part.dim()
    }

    /// Hamiltonian for field vector `b` (mT).
    pub fn at_field(&self, b: &Vector3<f64>) -> OperatorMatrix {
        self.combine(Some(&self.static_part), b)
    }

    pub fn at(&self, field: &FieldOrientation) -> OperatorMatrix {
        self.at_field(&field.field_vector())
    }

    /// `∂H/∂θ`, which only involves the Zeeman part.
    pub fn dtheta(&self, field: &FieldOrientation) -> OperatorMatrix {
        self.combine(None, &field_vector_dtheta(field.b0, field.theta, field.phi))
    }

    fn combine(&self, base: Option<&OperatorMatrix>, b: &Vector3<f64>) -> OperatorMatrix {
        let dim = self.dim();
        match base.unwrap_or(&self.static_part) {
            OperatorMatrix::Dense(_) => {
                let mut h = match base {
                    Some(s) => s.to_dense(),
                    None => CMatrix::zeros(dim, dim),
                };
                for k in 0..3 {
                    if b[k] != 0.0 {
                        if let OperatorMatrix::Dense(z) = &self.zeeman[k] {
                            h += z * C64::new(b[k], 0.0);
                        }
                    }
                }
                OperatorMatrix::Dense(h)
            }
            OperatorMatrix::Sparse(_) => {
                let mut t = base.map(|s| s.triplets()).unwrap_or_default();
                for k in 0..3 {
                    if b[k] != 0.0 {
                        t.extend(self.zeeman[k].triplets().into_iter().map(|(r, c, v)| (r, c, v * b[k])));
                    }
                }
                OperatorMatrix::from_triplets(dim, t)
            }
        }
    }
}

/// Full Hamiltonian in rad·μs⁻¹.
pub fn build_hamiltonian(system: &SpinSystem, field: &FieldOrientation, include_eed: bool) -> Result<OperatorMatrix> {
    Ok(HamiltonianParts::new(system, include_eed)?.at(field))
}

/// Point-dipole electron–electron coupling tensor (mT) for inter-radical
/// vector `r` in nm: `(μ0/4π)·g·μ_B/r³·(1 − 3 r̂r̂ᵀ)`.
pub fn point_dipole_tensor(r: &Vector3<f64>, g_factor: f64) -> Result<Matrix3<f64>> {
    let len = r.norm();
    if len.is_nan() || len <= 0.1 {
        return Err(Error::invalid(format!(
            "point-dipole separation must exceed 0.1 nm, got {len} nm"
        )));
    }
    let prefactor = point_dipole_prefactor(len, g_factor);
    let u = r / len;
    Ok((Matrix3::identity() - 3.0 * u * u.transpose()) * prefactor)
}

/// `(μ0/4π)·g·μ_B/r³` in mT for `r` in nm.
pub fn point_dipole_prefactor(r_nm: f64, g_factor: f64) -> f64 {
    let r_m = r_nm * 1e-9;
    MU0_OVER_4PI * g_factor * BOHR_MAGNETON / r_m.powi(3) * 1e3
}
