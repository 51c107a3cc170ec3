//! Time-domain reference integrator for the steady state.
//!
//! Integrates `dρ/dt = A ρ + ρ A† + P/Z` from `ρ(0) = 0`. A short step is
//! taken by Taylor series of both the propagator and the accumulated source,
//! then doubled (`Q_{2t} = Q_t + U_t Q_t U_t†`, `U_{2t} = U_t²`) into a chunk
//! that is applied repeatedly until the right-hand side vanishes.

use super::steady::SteadyStateResult;
use super::{hermitian_part, real_trace, trace_nuclear, SuperOperator};
use crate::error::{Error, Result};
use crate::spin::hamiltonian::singlet_projector;
use crate::spin::operators::{CMatrix, OperatorMatrix, C64};
use crate::spin::system::{FieldOrientation, SpinSystem};
use crate::spin::HamiltonianParts;

/// Stop once `‖dρ/dt‖_F` falls below this.
pub const DERIVATIVE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default)]
pub struct PropagationOptions {
    /// Integration horizon in μs; defaults to `40/k_f`.
    pub t_max: Option<f64>,
    /// Base step in μs; defaults to `0.01/‖A‖_F`.
    pub dt: Option<f64>,
}

pub fn propagate_time_domain(
    system: &SpinSystem,
    field: &FieldOrientation,
    include_eed: bool,
    opts: &PropagationOptions,
) -> Result<SteadyStateResult> {
    let h = HamiltonianParts::new(system, include_eed)?.at(field);
    let p = singlet_projector(system)?;
    let m = SuperOperator::new(h, p.clone(), system.k_b(), system.k_f())?;
    propagate_generator(&m, &p, system.nuclear_dim(), opts)
}

fn taylor_exp(a: &CMatrix, h: f64) -> CMatrix {
    let d = a.nrows();
    let mut sum = CMatrix::identity(d, d);
    let mut term = CMatrix::identity(d, d);
    for n in 1..60 {
        term = a * term * C64::new(h / n as f64, 0.0);
        sum += &term;
        if term.norm() <= 1e-18 * sum.norm() {
            break;
        }
    }
    sum
}

/// `∫_0^h e^{As} R e^{A†s} ds = Σ_n h^n/n! L^{n−1}(R)` with `L(X) = AX + XA†`.
fn taylor_source(a: &CMatrix, r: &CMatrix, h: f64) -> CMatrix {
    let ad = a.adjoint();
    let mut term = r * C64::new(h, 0.0);
    let mut sum = term.clone();
    for n in 2..60 {
        term = (a * &term + &term * &ad) * C64::new(h / n as f64, 0.0);
        sum += &term;
        if term.norm() <= 1e-18 * sum.norm() {
            break;
        }
    }
    sum
}

/// Propagates the generator `m` with source `p/z` to steady state.
pub fn propagate_generator(
    m: &SuperOperator,
    p: &OperatorMatrix,
    z: usize,
    opts: &PropagationOptions,
) -> Result<SteadyStateResult> {
    let d = m.hilbert_dim();
    if p.dim() != d || z == 0 || 4 * z != d {
        return Err(Error::invalid(format!(
            "inconsistent dimensions: d = {d}, projector {}, z = {z}",
            p.dim()
        )));
    }
    if m.k_f() <= 0.0 {
        return Err(Error::Singular(
            "k_f = 0: the population never reaches steady state".into(),
        ));
    }
    let a = m.generator_half();
    let t_max = opts.t_max.unwrap_or(40.0 / m.k_f());
    let dt = opts.dt.unwrap_or(0.01 / a.norm().max(f64::MIN_POSITIVE));
    if !(dt > 0.0 && t_max > 0.0) {
        return Err(Error::invalid(format!(
            "need dt > 0 and t_max > 0, got dt = {dt}, t_max = {t_max}"
        )));
    }
    let r = p.to_dense() * C64::new(1.0 / z as f64, 0.0);

    let mut u = taylor_exp(&a, dt);
    let mut q = taylor_source(&a, &r, dt);
    // chunk length: about a quarter of the slowest decay time
    let mut chunk = dt;
    let target = (0.25 / m.k_f()).min(t_max);
    while chunk * 2.0 <= target {
        q = &q + &u * &q * u.adjoint();
        u = &u * &u;
        chunk *= 2.0;
    }

    let ad = a.adjoint();
    let mut rho = CMatrix::zeros(d, d);
    let mut t = 0.0;
    let mut rate = f64::INFINITY;
    while t < t_max {
        rho = &u * &rho * u.adjoint() + &q;
        t += chunk;
        rate = (&a * &rho + &rho * &ad + &r).norm();
        if rate < DERIVATIVE_TOLERANCE {
            let rho = hermitian_part(&rho);
            let population = real_trace(&rho);
            let reduced = hermitian_part(&trace_nuclear(&rho, z));
            return Ok(SteadyStateResult {
                phi_s: m.k_b() * p.mul_dense(&rho).trace().re,
                rho_electronic: reduced / C64::new(population, 0.0),
                rho_ss: rho,
                total_population: population,
            });
        }
    }
    Err(Error::NonConvergence {
        method: format!("time-domain propagation to t = {t_max} us"),
        residual: rate,
    })
}
