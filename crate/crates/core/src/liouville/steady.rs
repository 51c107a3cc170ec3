//! Continuous-generation steady state `M ρ = −P_S/Z`, i.e. singlet-born
//! pairs generated at unit rate (`k0·c = 1`).

use nalgebra::{DVector, Vector3};

use super::krylov::{gmres, GmresOptions};
use super::lyapunov::LyapunovSchur;
use super::{hermitian_part, real_trace, trace_nuclear, SuperOperator};
use crate::error::{Error, Result};
use crate::spin::hamiltonian::{electronic_singlet_projector, singlet_projector, HamiltonianParts};
use crate::spin::operators::{cmul, CMatrix, OperatorMatrix, C64, DENSE_DIM_LIMIT, I};
use crate::spin::system::{field_vector_dtheta, FieldOrientation, SpinSystem};

/// Largest Hilbert dimension accepted by [`SolverKind::DenseLu`].
pub const DENSE_LU_DIM_LIMIT: usize = 64;

/// Linear solver for the steady-state equation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SolverKind {
    /// Schur–Lyapunov for `d ≤ 256`, GMRES above.
    #[default]
    Auto,
    /// Bartels–Stewart on the `d×d` Lyapunov form.
    Sylvester,
    /// LU of the explicit `d²×d²` generator (small systems only).
    DenseLu,
    /// Matrix-free restarted GMRES.
    Krylov,
}

impl SolverKind {
    fn resolve(self, d: usize) -> SolverKind {
        match self {
            SolverKind::Auto if d <= DENSE_DIM_LIMIT => SolverKind::Sylvester,
            SolverKind::Auto => SolverKind::Krylov,
            other => other,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SteadyStateResult {
    /// Concentration-weighted density operator.
    pub rho_ss: CMatrix,
    /// Reduced electronic state, unit trace.
    pub rho_electronic: CMatrix,
    /// Singlet yield `k_b Tr[P_S ρ]`.
    pub phi_s: f64,
    /// `Tr ρ`
    pub total_population: f64,
}

impl SteadyStateResult {
    /// `k_b Tr[P ρ] + k_f Tr ρ`, equal to one at steady state.
    pub fn flux_balance(&self, k_f: f64) -> f64 {
        self.phi_s + k_f * self.total_population
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.rho_ss
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

fn check_invertible(m: &SuperOperator) -> Result<()> {
    if m.k_f() <= 0.0 {
        return Err(Error::Singular(
            "k_f = 0 leaves states outside the singlet channel without decay".into(),
        ));
    }
    Ok(())
}

/// Solves `M X = rhs` for a `d×d` right-hand side.
pub(crate) fn solve_generator(m: &SuperOperator, rhs: &CMatrix, kind: SolverKind) -> Result<CMatrix> {
    check_invertible(m)?;
    let d = m.hilbert_dim();
    match kind.resolve(d) {
        SolverKind::Sylvester | SolverKind::Auto => Ok(LyapunovSchur::new(&m.generator_half())?.solve(rhs)),
        SolverKind::DenseLu => {
            if d > DENSE_LU_DIM_LIMIT {
                return Err(Error::invalid(format!(
                    "dense LU is limited to d <= {DENSE_LU_DIM_LIMIT}, got {d}"
                )));
            }
            let b = DVector::from_column_slice(rhs.as_slice());
            let x = m
                .to_dense()
                .lu()
                .solve(&b)
                .ok_or_else(|| Error::Singular("generator LU factorization is singular".into()))?;
            Ok(CMatrix::from_column_slice(d, d, x.as_slice()))
        }
        SolverKind::Krylov => {
            let op = |v: &[C64]| -> Vec<C64> {
                let x = CMatrix::from_column_slice(d, d, v);
                m.apply_matrix(&x).as_slice().to_vec()
            };
            let pre = CommutatorPreconditioner::new(m);
            let (x, _) = gmres(op, |u: &[C64]| pre.apply(u), rhs.as_slice(), GmresOptions::default())?;
            Ok(CMatrix::from_column_slice(d, d, &x))
        }
    }
}

/// Exact inverse of `X ↦ −i[H, X] − (k_f + k_b/4) X`, applied in the
/// eigenbasis of `H`. The singlet projector has weight ¼ on average, so this
/// captures all but the fluctuating part of the recombination term.
struct CommutatorPreconditioner {
    v: CMatrix,
    energies: Vec<f64>,
    shift: f64,
}

impl CommutatorPreconditioner {
    fn new(m: &SuperOperator) -> Self {
        let eig = m.hamiltonian().to_dense().symmetric_eigen();
        CommutatorPreconditioner {
            v: eig.eigenvectors,
            energies: eig.eigenvalues.iter().copied().collect(),
            shift: m.k_f() + m.k_b() / 4.0,
        }
    }

    fn apply(&self, u: &[C64]) -> Vec<C64> {
        let d = self.energies.len();
        let u = CMatrix::from_column_slice(d, d, u);
        let mut t = self.v.adjoint() * u * &self.v;
        for j in 0..d {
            for i in 0..d {
                t[(i, j)] /= C64::new(-self.shift, -(self.energies[i] - self.energies[j]));
            }
        }
        (&self.v * t * self.v.adjoint()).as_slice().to_vec()
    }
}

fn residual_check(m: &SuperOperator, x: &CMatrix, rhs: &CMatrix) -> Result<()> {
    let r = (m.apply_matrix(x) - rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE);
    if r.is_nan() || r > 1e-8 {
        return Err(Error::NonConvergence {
            method: "steady-state solve".into(),
            residual: r,
        });
    }
    Ok(())
}

/// Steady state with the default solver choice.
pub fn steady_state(m: &SuperOperator, p: &OperatorMatrix, z: usize) -> Result<SteadyStateResult> {
    steady_state_with(m, p, z, SolverKind::Auto)
}

/// Solves `M vec(ρ) = −vec(P/Z)` and reduces to the electronic subspace.
/// `z` is the nuclear dimension (`d = 4z`).
pub fn steady_state_with(
    m: &SuperOperator,
    p: &OperatorMatrix,
    z: usize,
    kind: SolverKind,
) -> Result<SteadyStateResult> {
    let d = m.hilbert_dim();
    if p.dim() != d {
        return Err(Error::invalid(format!(
            "projector dimension {} does not match {d}",
            p.dim()
        )));
    }
    if z == 0 || 4 * z != d {
        return Err(Error::invalid(format!(
            "nuclear dimension {z} inconsistent with d = {d}"
        )));
    }
    let rhs = p.to_dense() * C64::new(-1.0 / z as f64, 0.0);
    let x = solve_generator(m, &rhs, kind)?;
    residual_check(m, &x, &rhs)?;
    let rho = hermitian_part(&x);
    let population = real_trace(&rho);
    let phi_s = m.k_b() * p.mul_dense(&rho).trace().re;
    let reduced = trace_nuclear(&rho, z);
    Ok(SteadyStateResult {
        rho_electronic: hermitian_part(&reduced) / C64::new(population, 0.0),
        rho_ss: rho,
        phi_s,
        total_population: population,
    })
}

/// Electronic part of a steady state, all that orientation sweeps need.
#[derive(Clone, Debug)]
pub struct ElectronicSteadyState {
    /// Unit-trace reduced electronic state.
    pub rho_electronic: CMatrix,
    /// Reduced electronic state before normalization.
    pub rho_unnormalized: CMatrix,
    pub phi_s: f64,
    pub total_population: f64,
    /// `k_b Tr[P ρ] + k_f Tr ρ`
    pub flux_balance: f64,
}

/// θ-derivatives of the normalized electronic state and the singlet yield.
#[derive(Clone, Debug)]
pub struct ElectronicDerivative {
    pub drho_electronic: CMatrix,
    pub dphi_s: f64,
}

/// Per-orientation steady-state solver for one spin system. The
/// field-independent parts are assembled once and shared read-only.
#[derive(Clone, Debug)]
pub struct OrientationSolver {
    parts: HamiltonianParts,
    projector: OperatorMatrix,
    k_b: f64,
    k_f: f64,
    z: usize,
    kind: SolverKind,
    /// `−i H_static − (k_b/2) P − k_f/2`, dense systems only.
    static_generator: Option<CMatrix>,
    zeeman_dense: Option<[CMatrix; 3]>,
}

impl OrientationSolver {
    pub fn new(system: &SpinSystem, include_eed: bool) -> Result<Self> {
        let parts = HamiltonianParts::new(system, include_eed)?;
        let projector = singlet_projector(system)?;
        let d = system.dim();
        let (static_generator, zeeman_dense) = if d <= DENSE_DIM_LIMIT {
            let sup = SuperOperator::new(parts.static_part.clone(), projector.clone(), system.k_b(), system.k_f())?;
            (
                Some(sup.generator_half()),
                Some([0, 1, 2].map(|k| parts.zeeman[k].to_dense() * (-I))),
            )
        } else {
            (None, None)
        };
        Ok(OrientationSolver {
            parts,
            projector,
            k_b: system.k_b(),
            k_f: system.k_f(),
            z: system.nuclear_dim(),
            kind: SolverKind::Auto,
            static_generator,
            zeeman_dense,
        })
    }

    pub fn with_solver(mut self, kind: SolverKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn solver(&self) -> SolverKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.parts.dim()
    }

    pub fn nuclear_dim(&self) -> usize {
        self.z
    }

    pub fn k_b(&self) -> f64 {
        self.k_b
    }

    pub fn k_f(&self) -> f64 {
        self.k_f
    }

    pub fn hamiltonian_parts(&self) -> &HamiltonianParts {
        &self.parts
    }

    pub fn projector(&self) -> &OperatorMatrix {
        &self.projector
    }

    pub fn superoperator_at(&self, b: &Vector3<f64>) -> SuperOperator {
        SuperOperator::new(self.parts.at_field(b), self.projector.clone(), self.k_b, self.k_f)
            .expect("dimensions and rates validated at construction")
    }

    pub fn superoperator(&self, field: &FieldOrientation) -> SuperOperator {
        self.superoperator_at(&field.field_vector())
    }

    /// Full steady state at `field`.
    pub fn steady_state(&self, field: &FieldOrientation) -> Result<SteadyStateResult> {
        steady_state_with(&self.superoperator(field), &self.projector, self.z, self.kind)
    }

    fn uses_lean_path(&self) -> bool {
        self.static_generator.is_some() && self.kind.resolve(self.dim()) == SolverKind::Sylvester
    }

    fn generator_at(&self, b: &Vector3<f64>) -> CMatrix {
        let mut a = self.static_generator.clone().expect("dense path");
        let zd = self.zeeman_dense.as_ref().expect("dense path");
        for k in 0..3 {
            if b[k] != 0.0 {
                a += &zd[k] * C64::new(b[k], 0.0);
            }
        }
        a
    }

    /// `Q† (−P_S/Z) Q` using the singlet structure of `P_S`.
    fn source_in_schur_basis(&self, q: &CMatrix) -> CMatrix {
        let (d, z) = (self.dim(), self.z);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let u = CMatrix::from_fn(d, z, |l, n| (q[(z + n, l)] - q[(2 * z + n, l)]).conj() * s);
        cmul(&u, &u.adjoint()) * C64::new(-1.0 / z as f64, 0.0)
    }

    /// `Tr_nuc(Q Y Q†)` without forming the `d×d` product.
    fn reduce(&self, q: &CMatrix, y: &CMatrix) -> CMatrix {
        let w = cmul(q, y);
        let (d, z) = (self.dim(), self.z);
        let mut out = CMatrix::zeros(4, 4);
        for a in 0..4 {
            for b in 0..4 {
                let mut acc = C64::new(0.0, 0.0);
                for l in 0..d {
                    let wc = w.column(l);
                    let qc = q.column(l);
                    for n in 0..z {
                        acc += wc[a * z + n] * qc[b * z + n].conj();
                    }
                }
                out[(a, b)] = acc;
            }
        }
        hermitian_part(&out)
    }

    fn package(&self, raw: CMatrix) -> ElectronicSteadyState {
        let population = real_trace(&raw);
        let phi_s = self.k_b * (electronic_singlet_projector() * &raw).trace().re;
        ElectronicSteadyState {
            rho_electronic: &raw / C64::new(population, 0.0),
            rho_unnormalized: raw,
            phi_s,
            total_population: population,
            flux_balance: phi_s + self.k_f * population,
        }
    }

    /// Electronic steady state for field vector `b` (mT).
    pub fn electronic(&self, b: &Vector3<f64>) -> Result<ElectronicSteadyState> {
        if self.k_f <= 0.0 {
            return Err(Error::Singular("k_f = 0".into()));
        }
        if self.uses_lean_path() {
            let lyap = LyapunovSchur::new(&self.generator_at(b))?;
            let c = self.source_in_schur_basis(lyap.q());
            let y = lyap.solve_schur_basis(&c);
            Ok(self.package(self.reduce(lyap.q(), &y)))
        } else {
            let full = steady_state_with(&self.superoperator_at(b), &self.projector, self.z, self.kind)?;
            Ok(self.package(trace_nuclear(&full.rho_ss, self.z)))
        }
    }

    /// Electronic steady state and its exact θ-derivative from
    /// `M ∂ρ = i[∂H, ρ]`, solved with the same factorization.
    pub fn electronic_with_derivative(
        &self,
        field: &FieldOrientation,
    ) -> Result<(ElectronicSteadyState, ElectronicDerivative)> {
        let b = field.field_vector();
        let dh = self.parts.dtheta(field);
        let (state, draw) = if self.uses_lean_path() {
            let lyap = LyapunovSchur::new(&self.generator_at(&b))?;
            let q = lyap.q();
            let y = lyap.solve_schur_basis(&self.source_in_schur_basis(q));
            let state = self.package(self.reduce(q, &y));
            let x = hermitian_part(&cmul(&cmul(q, &y), &q.adjoint()));
            let dh = dh.to_dense();
            let rhs = (cmul(&dh, &x) - cmul(&x, &dh)) * I;
            let dy = lyap.solve_schur_basis(&lyap.to_schur_basis(&rhs));
            (state, self.reduce(q, &dy))
        } else {
            let m = self.superoperator_at(&b);
            let full = steady_state_with(&m, &self.projector, self.z, self.kind)?;
            let x = &full.rho_ss;
            let rhs = (dh.mul_dense(x) - dh.left_mul_dense(x)) * I;
            let dx = solve_generator(&m, &rhs, self.kind)?;
            (
                self.package(trace_nuclear(x, self.z)),
                hermitian_part(&trace_nuclear(&dx, self.z)),
            )
        };
        let dt = real_trace(&draw);
        let t = state.total_population;
        let drho = (&draw - &state.rho_electronic * C64::new(dt, 0.0)) / C64::new(t, 0.0);
        let dphi = self.k_b * (electronic_singlet_projector() * &draw).trace().re;
        Ok((
            state,
            ElectronicDerivative {
                drho_electronic: drho,
                dphi_s: dphi,
            },
        ))
    }

    /// θ-derivative of the field vector at `field`.
    pub fn field_dtheta(field: &FieldOrientation) -> Vector3<f64> {
        field_vector_dtheta(field.b0, field.theta, field.phi)
    }
}
