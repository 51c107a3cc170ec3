//! Invariant suite run on a loaded model at seeded random orientations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::liouville::{propagate_time_domain, OrientationSolver, PropagationOptions};
use crate::metrology::{estimator_moments, evaluate_point_detailed, DerivativeScheme, QFI_FLOOR};
use crate::spin::operators::{max_abs, DENSE_DIM_LIMIT};
use crate::spin::system::{FieldOrientation, SpinSystem};
use crate::spin::{singlet_projector, total_spin_squared};

pub const DEFAULT_CHECK_SEED: u64 = 0x5eed_c0de;
pub const DEFAULT_CHECK_ORIENTATIONS: usize = 8;

#[derive(Clone, Copy, Debug)]
pub struct CheckConfig {
    pub b0_mt: f64,
    pub include_eed: bool,
    pub scheme: DerivativeScheme,
    pub n_orientations: usize,
    pub seed: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            b0_mt: crate::constants::DEFAULT_B0_MT,
            include_eed: false,
            scheme: DerivativeScheme::default(),
            n_orientations: DEFAULT_CHECK_ORIENTATIONS,
            seed: DEFAULT_CHECK_SEED,
        }
    }
}

/// Worst observed violation of one invariant. `worst` is the largest
/// residual seen; the check passes when it does not exceed `tolerance`.
#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub worst: f64,
    pub tolerance: f64,
    pub at: Option<(f64, f64)>,
    pub skipped: bool,
}

impl CheckOutcome {
    fn new(name: &'static str, tolerance: f64) -> Self {
        CheckOutcome {
            name,
            worst: 0.0,
            tolerance,
            at: None,
            skipped: false,
        }
    }

    fn observe(&mut self, value: f64, at: (f64, f64)) {
        if self.worst.is_nan() {
            return;
        }
        if value.is_nan() || value > self.worst {
            self.worst = value;
            self.at = Some(at);
        }
    }

    pub fn passed(&self) -> bool {
        self.skipped || self.worst <= self.tolerance
    }
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub orientations: Vec<(f64, f64)>,
    pub outcomes: Vec<CheckOutcome>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(CheckOutcome::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.outcomes.iter().filter(|o| !o.passed())
    }
}

/// Orientations drawn uniformly on the sphere, in degrees.
pub fn random_orientations(n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let c: f64 = rng.random_range(-1.0..=1.0);
            let phi: f64 = rng.random_range(0.0..360.0);
            (c.acos().to_degrees(), phi)
        })
        .collect()
}

fn relative(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn run_checks(system: &SpinSystem, config: &CheckConfig) -> Result<CheckReport> {
    let solver = OrientationSolver::new(system, config.include_eed)?;
    let orientations = random_orientations(config.n_orientations, config.seed);

    let mut s2 = CheckOutcome::new("total_spin_identity", 1e-14);
    let identity = total_spin_squared(system)?.to_dense();
    let p = singlet_projector(system)?.to_dense();
    let d = identity.nrows();
    let expected = (crate::spin::CMatrix::identity(d, d) - p) * crate::spin::C64::new(2.0, 0.0);
    s2.worst = max_abs(&(identity - expected));

    let mut flux = CheckOutcome::new("flux_balance", 1e-8);
    let mut qcrb = CheckOutcome::new("qcrb_chain", 1e-6);
    let mut saturation = CheckOutcome::new("cfi_saturation", 1e-12);
    let mut s2_route = CheckOutcome::new("s2_variance_route", 1e-12);
    let mut sld = CheckOutcome::new("sld_residual", 1e-8);
    let mut routes = CheckOutcome::new("qfi_route_agreement", 1e-8);
    let mut est_mean = CheckOutcome::new("estimator_mean", 1e-8);
    let mut est_var = CheckOutcome::new("estimator_variance", 1e-6);
    let mut oracle = CheckOutcome::new("time_domain_oracle", 1e-6);
    oracle.skipped = system.dim() > DENSE_DIM_LIMIT;

    for &(t, ph) in &orientations {
        let field = FieldOrientation::from_degrees(config.b0_mt, t, ph)?;
        let at = (t, ph);
        let detail = evaluate_point_detailed(&solver, &field, config.scheme, 1)?;
        let r = detail.record;
        flux.observe((r.flux_balance - 1.0).abs(), at);
        qcrb.observe(if r.qfi > 0.0 { (r.cfi - r.qfi) / r.qfi } else { r.cfi }, at);
        saturation.observe(relative(r.cfi, r.inv_n_var), at);
        s2_route.observe(relative(r.s2_inv_n_var, r.inv_n_var), at);
        sld.observe(r.sld_residual, at);
        if r.qfi > QFI_FLOOR {
            routes.observe(relative(r.qfi_sld, r.qfi).max(relative(r.qfi_vectorized, r.qfi)), at);
        }
        if let Some(m) = &detail.estimator {
            let (mean, var) = estimator_moments(m, &detail.derivative.rho, field.theta);
            est_mean.observe((mean - field.theta).abs(), at);
            est_var.observe((var * r.qfi - 1.0).abs(), at);
        }
        if !oracle.skipped {
            let resolvent = solver.steady_state(&field)?;
            let propagated = propagate_time_domain(system, &field, config.include_eed, &PropagationOptions::default())?;
            oracle.observe(max_abs(&(&resolvent.rho_ss - &propagated.rho_ss)), at);
        }
    }
    Ok(CheckReport {
        orientations,
        outcomes: vec![
            s2, flux, qcrb, saturation, s2_route, sld, routes, est_mean, est_var, oracle,
        ],
    })
}
