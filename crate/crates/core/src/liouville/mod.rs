//! Liouville-space generator, steady-state solvers and the time-domain
//! reference integrator.
//!
//! Vectorization is column-stacking, `vec(A X B) = (Bᵀ ⊗ A) vec(X)`. The
//! generator acts as
//! `M ρ = −i[H, ρ] − (k_b/2){P, ρ} − k_f ρ = A ρ + ρ A†` with
//! `A = −iH − (k_b/2) P − (k_f/2)`.

pub mod krylov;
pub mod lyapunov;
pub mod propagate;
pub mod schur;
pub mod steady;

use crate::error::{Error, Result};
use crate::spin::operators::{CMatrix, CsrMatrix, OperatorMatrix, C64, I};
use crate::spin::SpinSystem;

pub use lyapunov::LyapunovSchur;
pub use propagate::{propagate_generator, propagate_time_domain, PropagationOptions};
pub use schur::ComplexSchur;
pub use steady::{
    steady_state, steady_state_with, ElectronicDerivative, ElectronicSteadyState, OrientationSolver, SolverKind,
    SteadyStateResult,
};

/// Column-stacked vector of a square matrix.
pub fn vectorize(m: &CMatrix) -> Result<Vec<C64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::invalid(format!(
            "vectorize needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.as_slice().to_vec())
}

/// Inverse of [`vectorize`].
pub fn devectorize(v: &[C64]) -> Result<CMatrix> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d * d != v.len() {
        return Err(Error::invalid(format!(
            "vector of length {} is not a square matrix",
            v.len()
        )));
    }
    Ok(CMatrix::from_column_slice(d, d, v))
}

/// The recombination generator `M` on Liouville space, kept in factored
/// form (Hamiltonian, projector, rates) and applied matrix-free.
#[derive(Clone, Debug)]
pub struct SuperOperator {
    h: OperatorMatrix,
    p: OperatorMatrix,
    k_b: f64,
    k_f: f64,
}

pub fn build_liouvillian(h: &OperatorMatrix, p: &OperatorMatrix, k_b: f64, k_f: f64) -> Result<SuperOperator> {
    SuperOperator::new(h.clone(), p.clone(), k_b, k_f)
}

impl SuperOperator {
    pub fn new(h: OperatorMatrix, p: OperatorMatrix, k_b: f64, k_f: f64) -> Result<Self> {
        if h.dim() != p.dim() {
            return Err(Error::invalid(format!(
                "Hamiltonian dimension {} differs from projector dimension {}",
                h.dim(),
                p.dim()
            )));
        }
        if !(k_b.is_finite() && k_f.is_finite() && k_b >= 0.0 && k_f >= 0.0) {
            return Err(Error::invalid(format!(
                "rates must be finite and non-negative, got k_b = {k_b}, k_f = {k_f}"
            )));
        }
        Ok(SuperOperator { h, p, k_b, k_f })
    }

    /// Hilbert-space dimension `d`; the Liouville dimension is `d²`.
    pub fn hilbert_dim(&self) -> usize {
        self.h.dim()
    }

    pub fn dim(&self) -> usize {
        self.hilbert_dim() * self.hilbert_dim()
    }

    pub fn hamiltonian(&self) -> &OperatorMatrix {
        &self.h
    }

    pub fn projector(&self) -> &OperatorMatrix {
        &self.p
    }

    pub fn k_b(&self) -> f64 {
        self.k_b
    }

    pub fn k_f(&self) -> f64 {
        self.k_f
    }

    /// `A = −iH − (k_b/2) P − (k_f/2)` as a dense matrix.
    pub fn generator_half(&self) -> CMatrix {
        let d = self.hilbert_dim();
        let mut a = self.h.to_dense() * (-I);
        a -= self.p.to_dense() * C64::new(self.k_b / 2.0, 0.0);
        for i in 0..d {
            a[(i, i)] -= C64::new(self.k_f / 2.0, 0.0);
        }
        a
    }

    /// `M ρ` on a matrix argument.
    pub fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        let hx = self.h.mul_dense(rho);
        let xh = self.h.left_mul_dense(rho);
        let px = self.p.mul_dense(rho);
        let xp = self.p.left_mul_dense(rho);
        (hx - xh) * (-I) - (px + xp) * C64::new(self.k_b / 2.0, 0.0) - rho * C64::new(self.k_f, 0.0)
    }

    /// `M vec(ρ)`.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim() {
            return Err(Error::invalid(format!(
                "vector length {} does not match {}",
                v.len(),
                self.dim()
            )));
        }
        let d = self.hilbert_dim();
        let rho = CMatrix::from_column_slice(d, d, v);
        Ok(self.apply_matrix(&rho).as_slice().to_vec())
    }

    /// Diagonal of `M`, used as a Jacobi preconditioner.
    pub fn diagonal(&self) -> Vec<C64> {
        let d = self.hilbert_dim();
        let hd: Vec<C64> = (0..d).map(|i| self.h.get(i, i)).collect();
        let pd: Vec<C64> = (0..d).map(|i| self.p.get(i, i)).collect();
        let mut out = Vec::with_capacity(d * d);
        for j in 0..d {
            for i in 0..d {
                out.push(-I * (hd[i] - hd[j]) - (pd[i] + pd[j]) * (self.k_b / 2.0) - C64::new(self.k_f, 0.0));
            }
        }
        out
    }

    /// Explicit sparse matrix
    /// `−i(1⊗H − Hᵀ⊗1) − (k_b/2)(1⊗P + Pᵀ⊗1) − k_f 1`.
    pub fn to_csr(&self) -> CsrMatrix {
        let d = self.hilbert_dim();
        let mut t = Vec::new();
        let left = |op: &OperatorMatrix, scale: C64, t: &mut Vec<(usize, usize, C64)>| {
            // 1 ⊗ op
            for (r, c, v) in op.triplets() {
                for b in 0..d {
                    t.push((b * d + r, b * d + c, v * scale));
                }
            }
        };
        let right = |op: &OperatorMatrix, scale: C64, t: &mut Vec<(usize, usize, C64)>| {
            // opᵀ ⊗ 1
            for (r, c, v) in op.triplets() {
                for a in 0..d {
                    t.push((c * d + a, r * d + a, v * scale));
                }
            }
        };
        left(&self.h, -I, &mut t);
        right(&self.h, I, &mut t);
        let half = C64::new(-self.k_b / 2.0, 0.0);
        left(&self.p, half, &mut t);
        right(&self.p, half, &mut t);
        for k in 0..d * d {
            t.push((k, k, C64::new(-self.k_f, 0.0)));
        }
        CsrMatrix::from_triplets(d * d, d * d, t)
    }

    pub fn to_dense(&self) -> CMatrix {
        self.to_csr().to_dense()
    }
}

/// Traces out every nuclear site, returning the 4×4 electronic block.
pub fn partial_trace_electronic(rho: &CMatrix, system: &SpinSystem) -> Result<CMatrix> {
    let d = system.dim();
    if rho.nrows() != d || rho.ncols() != d {
        return Err(Error::invalid(format!(
            "density matrix is {}x{}, system dimension is {d}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    Ok(trace_nuclear(rho, system.nuclear_dim()))
}

/// Partial trace over the trailing factor of dimension `z`.
pub(crate) fn trace_nuclear(rho: &CMatrix, z: usize) -> CMatrix {
    let e = rho.nrows() / z;
    CMatrix::from_fn(e, e, |a, b| (0..z).map(|n| rho[(a * z + n, b * z + n)]).sum())
}

/// `(X + X†)/2`
pub(crate) fn hermitian_part(x: &CMatrix) -> CMatrix {
    (x + x.adjoint()) * C64::new(0.5, 0.0)
}

pub(crate) fn real_trace(x: &CMatrix) -> f64 {
    x.trace().re
}

/// Writes `m` as text: a `# rows cols` line, then one line per row of
/// whitespace-separated `re,im` pairs in shortest round-trip form.
pub fn write_matrix_text<W: std::io::Write>(m: &CMatrix, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# {} {}", m.nrows(), m.ncols())?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:e},{:e}", m[(i, j)].re, m[(i, j)].im))
            .collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
pub(crate) fn identity(d: usize) -> CMatrix {
    CMatrix::from_diagonal_element(d, d, C64::new(1.0, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::operators::max_abs;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        hermitian_part(&random(n, rng))
    }

    #[test]
    fn column_stacking() {
        let m = CMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0].map(|x| C64::new(x, 0.0)));
        let v = vectorize(&m).unwrap();
        assert_eq!(v.iter().map(|z| z.re).collect::<Vec<_>>(), vec![1.0, 3.0, 2.0, 4.0]);
        assert_eq!(devectorize(&v).unwrap(), m);
        assert!(vectorize(&CMatrix::zeros(2, 3)).is_err());
        assert!(devectorize(&[C64::new(1.0, 0.0); 3]).is_err());
    }

    #[test]
    fn kronecker_identity_for_vectorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let (a, x, b) = (random(3, &mut rng), random(3, &mut rng), random(3, &mut rng));
            let lhs = vectorize(&(&a * &x * &b)).unwrap();
            let kron = b.transpose().kronecker(&a);
            let rhs = &kron * nalgebra::DVector::from_vec(vectorize(&x).unwrap());
            for (l, r) in lhs.iter().zip(rhs.iter()) {
                assert!((l - r).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn pure_decay_without_hamiltonian() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = 4;
        let m = SuperOperator::new(
            OperatorMatrix::Dense(CMatrix::zeros(d, d)),
            OperatorMatrix::Dense(random_hermitian(d, &mut rng)),
            0.0,
            0.7,
        )
        .unwrap();
        let rho = random(d, &mut rng);
        assert!(max_abs(&(m.apply_matrix(&rho) + &rho * C64::new(0.7, 0.0))) < 1e-15);
    }

    #[test]
    fn matrix_free_explicit_and_direct_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = 6;
        let h = random_hermitian(d, &mut rng);
        let p = random_hermitian(d, &mut rng);
        let m = SuperOperator::new(
            OperatorMatrix::Dense(h.clone()),
            OperatorMatrix::Dense(p.clone()),
            1.3,
            0.4,
        )
        .unwrap();
        let dense = m.to_dense();
        for _ in 0..10 {
            let rho = random_hermitian(d, &mut rng);
            let direct = (&h * &rho - &rho * &h) * (-I)
                - (&p * &rho + &rho * &p) * C64::new(0.65, 0.0)
                - &rho * C64::new(0.4, 0.0);
            let via_apply = devectorize(&m.apply(&vectorize(&rho).unwrap()).unwrap()).unwrap();
            let via_dense =
                devectorize((&dense * nalgebra::DVector::from_vec(vectorize(&rho).unwrap())).as_slice()).unwrap();
            assert!(max_abs(&(&direct - &via_apply)) < 1e-12);
            assert!(max_abs(&(&direct - &via_dense)) < 1e-12);
            assert!(max_abs(&(&via_apply - via_apply.adjoint())) < 1e-12);
            let a = m.generator_half();
            assert!(max_abs(&(&direct - (&a * &rho + &rho * a.adjoint()))) < 1e-12);
        }
        let diag = m.diagonal();
        for (k, v) in diag.iter().enumerate() {
            assert!((dense[(k, k)] - v).norm() < 1e-14);
        }
        assert!(SuperOperator::new(
            OperatorMatrix::Dense(h),
            OperatorMatrix::Dense(CMatrix::zeros(3, 3)),
            1.0,
            1.0
        )
        .is_err());
    }

    #[test]
    fn partial_trace_examples() {
        use crate::spin::{singlet_projector, Nucleus, Radical};
        let s = SpinSystem::builder("t")
            .nucleus(Nucleus::new("n", Radical::A, 3, nalgebra::Matrix3::identity()))
            .nucleus(Nucleus::new("h", Radical::B, 2, nalgebra::Matrix3::identity()))
            .build()
            .unwrap();
        let z = s.nuclear_dim() as f64;
        let p = singlet_projector(&s).unwrap().to_dense() / C64::new(z, 0.0);
        let pe = partial_trace_electronic(&p, &s).unwrap();
        assert!(max_abs(&(pe - crate::spin::electronic_singlet_projector())) < 1e-15);
        let d = s.dim();
        let mixed = identity(d) / C64::new(d as f64, 0.0);
        let re = partial_trace_electronic(&mixed, &s).unwrap();
        assert!(max_abs(&(re - identity(4) * C64::new(0.25, 0.0))) < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = random(d, &mut rng);
        assert!((partial_trace_electronic(&r, &s).unwrap().trace() - r.trace()).norm() < 1e-14);
        assert!(partial_trace_electronic(&CMatrix::zeros(4, 4), &s).is_err());
    }

    #[test]
    fn matrix_text_round_trips() {
        let m = CMatrix::from_fn(2, 3, |i, j| C64::new(i as f64 + 0.1, -(j as f64) / 3.0));
        let mut buf = Vec::new();
        write_matrix_text(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# 2 3"));
        for (i, line) in lines.enumerate() {
            for (j, pair) in line.split(' ').enumerate() {
                let (re, im) = pair.split_once(',').unwrap();
                assert_eq!(C64::new(re.parse().unwrap(), im.parse().unwrap()), m[(i, j)]);
            }
        }
    }
}
