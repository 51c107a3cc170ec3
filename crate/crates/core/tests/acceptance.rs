//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any failed.

use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rpcompass_core::check::random_orientations;
use rpcompass_core::liouville::{propagate_time_domain, OrientationSolver, PropagationOptions};
use rpcompass_core::metrology::{
    electronic_total_spin_squared, estimator_moments, evaluate_point_detailed, orthogonality_distance,
    reconstruct_from_components, s2_propagation_variance, spin_component_decomposition, yield_variance,
    DerivativeScheme, QFI_FLOOR,
};
use rpcompass_core::spin::operators::max_abs;
use rpcompass_core::spin::{
    electronic_singlet_projector, rank_and_truncate, shipped_model, singlet_projector, total_spin_squared, CMatrix,
    FieldOrientation, Nucleus, Radical, SpinSystem, C64, SHIPPED_MODELS,
};
use rpcompass_core::sweep::{anisotropy_from_values, best_precision_point, sweep, SweepConfig, SweepGrid, SweepResult};

struct Outcome {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> Outcome {
    Outcome { name, passed, detail }
}

fn relative(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

struct Sweeps {
    runs: Vec<(String, SystemRun)>,
    one_nucleus_seconds: f64,
}

struct SystemRun {
    system: SpinSystem,
    include_eed: bool,
    result: SweepResult,
}

impl Sweeps {
    fn records(&self) -> impl Iterator<Item = (&str, &rpcompass_core::metrology::MetrologyRecord)> {
        self.runs
            .iter()
            .flat_map(|(label, run)| run.result.records.iter().map(move |r| (label.as_str(), r)))
    }
}

fn full_sweeps() -> Sweeps {
    let grid = SweepGrid::default();
    let mut runs = Vec::new();
    let mut one_nucleus_seconds = f64::NAN;
    for (name, _) in SHIPPED_MODELS {
        let system = shipped_model(name).unwrap();
        for include_eed in [false, true] {
            let cfg = SweepConfig {
                include_eed,
                ..Default::default()
            };
            let start = Instant::now();
            let result = sweep(&system, &grid, &cfg).unwrap();
            let secs = start.elapsed().as_secs_f64();
            let label = format!("{name}{}", if include_eed { "+eed" } else { "" });
            eprintln!(
                "  swept {label:<14} d = {:>2}, {} points in {secs:.1} s",
                system.dim(),
                result.records.len()
            );
            if *name == "fad_z_1n" && !include_eed {
                one_nucleus_seconds = secs;
            }
            runs.push((
                label,
                SystemRun {
                    system: system.clone(),
                    include_eed,
                    result,
                },
            ));
        }
    }
    Sweeps {
        runs,
        one_nucleus_seconds,
    }
}

fn qcrb_chain(s: &Sweeps) -> Outcome {
    let mut worst_ratio = 0.0f64;
    let mut min_opt = f64::INFINITY;
    let mut bad = Vec::new();
    let mut n = 0;
    for (label, r) in s.records() {
        n += 1;
        let ratio_ok = r.cfi <= r.qfi * (1.0 + 1e-6);
        let opt_ok = r.optimality >= 1.0 - 1e-6;
        if r.qfi > 0.0 {
            worst_ratio = worst_ratio.max(r.cfi / r.qfi);
        }
        if !r.optimality.is_nan() {
            min_opt = min_opt.min(r.optimality);
        }
        if !(ratio_ok && opt_ok) && bad.len() < 3 {
            bad.push(format!(
                "{label} θ={:.1}° φ={:.1}° cfi={:e} qfi={:e}",
                r.theta.to_degrees(),
                r.phi.to_degrees(),
                r.cfi,
                r.qfi
            ));
        }
    }
    let runtime_ok = s.one_nucleus_seconds < 300.0;
    outcome(
        "QCRB chain on all full sweeps",
        bad.is_empty() && runtime_ok,
        format!(
            "{n} points, max cfi/qfi = {worst_ratio:.6}, min optimality = {min_opt:.6}, 1-nucleus sweep {:.1} s{}",
            s.one_nucleus_seconds,
            if bad.is_empty() {
                String::new()
            } else {
                format!("; violations: {}", bad.join("; "))
            }
        ),
    )
}

fn cfi_saturation(s: &Sweeps) -> Outcome {
    let mut worst = 0.0f64;
    let mut ok = true;
    for (_, r) in s.records() {
        let err = if r.cfi == r.inv_n_var {
            0.0
        } else {
            (r.cfi - r.inv_n_var).abs() / r.cfi
        };
        ok &= err <= 1e-12;
        worst = worst.max(err);
    }
    outcome("CFI saturation", ok, format!("max |cfi − 1/(NΔ²θ)|/cfi = {worst:.2e}"))
}

fn s2_equivalence(s: &Sweeps) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let phi = rng.random_range(1e-6..1.0 - 1e-6);
        let dphi = rng.random_range(-2.0..2.0);
        let a = yield_variance(phi, dphi, 1).unwrap();
        let b = s2_propagation_variance(phi, dphi, 1).unwrap();
        worst = worst.max(relative(a, b));
    }
    let random_worst = worst;
    for (_, r) in s.records() {
        worst = worst.max(relative(r.s2_inv_n_var, r.inv_n_var));
    }
    outcome(
        "S² propagation equals binomial variance",
        worst <= 1e-12,
        format!("1000 random pairs max rel {random_worst:.2e}; including sweep points {worst:.2e}"),
    )
}

fn spin_squared_identity() -> Outcome {
    let t = Matrix3::new(0.3, 0.1, 0.0, 0.1, -0.2, 0.05, 0.0, 0.05, 0.9);
    let systems: Vec<Vec<Nucleus>> = vec![
        vec![],
        vec![Nucleus::new("a", Radical::A, 3, t)],
        vec![Nucleus::new("a", Radical::A, 2, t), Nucleus::new("b", Radical::B, 4, t)],
        vec![
            Nucleus::new("a", Radical::A, 3, t),
            Nucleus::new("b", Radical::B, 2, t),
            Nucleus::new("c", Radical::A, 5, t),
        ],
    ];
    let mut worst = 0.0f64;
    for nuclei in systems {
        let s = SpinSystem::builder("s2").nuclei(nuclei).build().unwrap();
        let d = s.dim();
        let s2 = total_spin_squared(&s).unwrap().to_dense();
        let p = singlet_projector(&s).unwrap().to_dense();
        let expected = (CMatrix::identity(d, d) - p) * C64::new(2.0, 0.0);
        worst = worst.max(max_abs(&(s2 - expected)));
    }
    outcome(
        "S² = 2(1 − P_S) for 0 to 3 nuclei",
        worst <= 1e-14,
        format!("max entry error {worst:.2e}"),
    )
}

fn oracle_equivalence(s: &Sweeps) -> Outcome {
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (_, run) in &s.runs {
        let solver = OrientationSolver::new(&run.system, run.include_eed).unwrap();
        for (t, p) in random_orientations(4, 77) {
            let field = FieldOrientation::from_degrees(0.05, t, p).unwrap();
            let a = solver.steady_state(&field).unwrap();
            let b =
                propagate_time_domain(&run.system, &field, run.include_eed, &PropagationOptions::default()).unwrap();
            worst = worst.max(max_abs(&(&a.rho_ss - &b.rho_ss)));
            checked += 1;
        }
    }
    let mut flux = 0.0f64;
    for (_, r) in s.records() {
        flux = flux.max((r.flux_balance - 1.0).abs());
    }
    outcome(
        "Resolvent vs time-domain steady state; flux balance",
        worst <= 1e-6 && flux <= 1e-8,
        format!("{checked} orientations max |Δρ| = {worst:.2e}; max |flux − 1| over sweeps = {flux:.2e}"),
    )
}

fn zero_hamiltonian_anchor() -> Outcome {
    let s = SpinSystem::builder("h0").rates(1.0, 1.0).build().unwrap();
    let cfg = SweepConfig {
        b0_mt: 0.0,
        ..Default::default()
    };
    let r = sweep(&s, &SweepGrid::default(), &cfg).unwrap();
    let worst = r.records.iter().map(|x| (x.phi_s - 0.5).abs()).fold(0.0, f64::max);
    outcome(
        "H = 0 gives Φ_S = 1/2",
        worst <= 1e-10 && r.gamma <= 1e-10,
        format!("max |Φ_S − 0.5| = {worst:.2e}, Γ = {:.2e}", r.gamma),
    )
}

fn qfi_routes(s: &Sweeps) -> Outcome {
    let mut worst = 0.0f64;
    let mut residual = 0.0f64;
    let mut n = 0;
    for (_, r) in s.records() {
        residual = residual.max(r.sld_residual);
        if r.qfi > QFI_FLOOR {
            n += 1;
            worst = worst
                .max(relative(r.qfi_sld, r.qfi))
                .max(relative(r.qfi_vectorized, r.qfi));
        }
    }
    outcome(
        "QFI spectral / Tr(L²ρ) / vectorized agreement",
        worst <= 1e-8 && residual <= 1e-8,
        format!("{n} points, max rel diff {worst:.2e}, max SLD residual {residual:.2e}"),
    )
}

struct EstimatorSample {
    estimator: CMatrix,
}

fn estimator_moments_check(s: &Sweeps, samples: &mut Vec<EstimatorSample>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let mut mean_err = 0.0f64;
    let mut var_err = 0.0f64;
    let mut count = 0;
    let mut skipped = 0;
    for (_, run) in &s.runs {
        let solver = OrientationSolver::new(&run.system, run.include_eed).unwrap();
        let grid = &run.result.grid;
        for _ in 0..16 {
            let k = rng.random_range(0..grid.len());
            let (t, p) = grid.point(k);
            let field = FieldOrientation::from_degrees(0.05, t, p).unwrap();
            let d = evaluate_point_detailed(&solver, &field, DerivativeScheme::default(), 1).unwrap();
            let Some(m) = d.estimator else {
                skipped += 1;
                continue;
            };
            let (mean, var) = estimator_moments(&m, &d.derivative.rho, field.theta);
            mean_err = mean_err.max((mean - field.theta).abs());
            var_err = var_err.max((var * d.record.qfi - 1.0).abs());
            count += 1;
            samples.push(EstimatorSample { estimator: m });
        }
    }
    outcome(
        "Optimal estimator moments",
        mean_err <= 1e-8 && var_err <= 1e-6 && skipped == 0,
        format!("{count} points, max |Tr(Mρ) − θ| = {mean_err:.2e}, max |var·𝓕 − 1| = {var_err:.2e}, {skipped} without estimator"),
    )
}

fn null_compass() -> Outcome {
    let bare = SpinSystem::builder("bare").build().unwrap();
    let iso = SpinSystem::builder("iso")
        .nucleus(Nucleus::new("n", Radical::A, 3, Matrix3::identity() * 0.5))
        .nucleus(Nucleus::new("h", Radical::B, 2, Matrix3::identity() * 0.8))
        .build()
        .unwrap();
    let grid = SweepGrid::default();
    let a = sweep(&bare, &grid, &SweepConfig::default()).unwrap();
    let b = sweep(
        &iso,
        &grid,
        &SweepConfig {
            b0_mt: 0.0,
            ..Default::default()
        },
    )
    .unwrap();
    let max_qfi = a
        .records
        .iter()
        .chain(&b.records)
        .map(|r| r.qfi.max(r.cfi))
        .fold(0.0, f64::max);
    let gamma = a.gamma.max(b.gamma);
    outcome(
        "Null compass",
        max_qfi <= 1e-10 && gamma <= 1e-10,
        format!(
            "bare pair at 0.05 mT and isotropic pair at zero field: max qfi/cfi = {max_qfi:.2e}, max Γ = {gamma:.2e}"
        ),
    )
}

fn quadrature() -> Outcome {
    let g = SweepGrid::default();
    let values: Vec<f64> = (0..g.len()).map(|k| g.point(k).0.to_radians().cos().powi(2)).collect();
    let a = anisotropy_from_values(&g, &values).unwrap();
    let err = (a.mean - 1.0 / 3.0).abs();
    outcome(
        "Quadrature of cos²θ",
        err <= 1e-4,
        format!("mean = {:.8}, error {err:.2e}", a.mean),
    )
}

fn contextual_band(s: &Sweeps) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (_, run) in s.runs.iter().filter(|(l, _)| l.starts_with("fad_z_1n")) {
        let best = best_precision_point(&run.result).unwrap();
        ok &= (1.0..=1e3).contains(&best.optimality);
        lines.push(format!("fad_z_1n eed={} {:.3}", run.include_eed, best.optimality));
    }
    let w1 = rank_and_truncate(&shipped_model("fad_w_2n").unwrap(), 1).unwrap();
    for include_eed in [false, true] {
        let cfg = SweepConfig {
            include_eed,
            ..Default::default()
        };
        let r = sweep(&w1, &SweepGrid::default(), &cfg).unwrap();
        let best = best_precision_point(&r).unwrap();
        ok &= (1.0..=1e3).contains(&best.optimality);
        lines.push(format!("fad_w_2n[n=1] eed={include_eed} {:.3}", best.optimality));
    }
    outcome(
        "Best-point optimality in [1, 1e3] for 1-nucleus models",
        ok,
        lines.join(", "),
    )
}

fn orthogonality(s: &Sweeps, samples: &[EstimatorSample]) -> Outcome {
    let mut out_of_range = 0;
    let mut finite = 0;
    for (_, r) in s.records() {
        for d in [r.ortho_dist_s2, r.ortho_dist_ps] {
            if d.is_nan() {
                if r.qfi > QFI_FLOOR {
                    out_of_range += 1;
                }
            } else {
                finite += 1;
                if !(0.0..=FRAC_PI_2).contains(&d) {
                    out_of_range += 1;
                }
            }
        }
    }
    let mut ops: Vec<CMatrix> = samples.iter().map(|x| x.estimator.clone()).collect();
    ops.push(electronic_total_spin_squared());
    ops.push(electronic_singlet_projector());
    let mut parseval = 0.0f64;
    let mut recon = 0.0f64;
    let mut self_dist = 0.0f64;
    for o in &ops {
        let c = spin_component_decomposition(o).unwrap();
        let norm2: f64 = c.iter().map(|x| x * x).sum();
        parseval = parseval.max(relative(norm2, (o * o).trace().re));
        recon = recon.max(max_abs(&(reconstruct_from_components(&c) - o)) / max_abs(o));
        self_dist = self_dist.max((orthogonality_distance(o, o).unwrap() - FRAC_PI_2).abs());
    }
    outcome(
        "Spin-component decomposition and orthogonality distance",
        out_of_range == 0 && parseval <= 1e-12 && recon <= 1e-12 && self_dist <= 1e-7,
        format!(
            "{finite} distances, {out_of_range} outside [0, π/2]; {} operators: Parseval {parseval:.2e}, reconstruction {recon:.2e}, |d(O,O) − π/2| ≤ {self_dist:.2e}",
            ops.len()
        ),
    )
}

fn main() {
    eprintln!("running full orientation sweeps (181 × 37 points each)");
    let sweeps = full_sweeps();
    let mut samples = Vec::new();
    let outcomes = vec![
        qcrb_chain(&sweeps),
        cfi_saturation(&sweeps),
        s2_equivalence(&sweeps),
        spin_squared_identity(),
        oracle_equivalence(&sweeps),
        zero_hamiltonian_anchor(),
        qfi_routes(&sweeps),
        estimator_moments_check(&sweeps, &mut samples),
        null_compass(),
        quadrature(),
        contextual_band(&sweeps),
        orthogonality(&sweeps, &samples),
    ];
    for o in &outcomes {
        println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
