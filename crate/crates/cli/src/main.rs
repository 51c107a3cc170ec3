//! `rpcompass`: orientation sweeps, nucleus-count scans and invariant checks
//! for radical-pair compass models.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rpcompass_core::check::{run_checks, CheckConfig};
use rpcompass_core::liouville::{write_matrix_text, OrientationSolver};
use rpcompass_core::metrology::DerivativeScheme;
use rpcompass_core::spin::model_file::shipped_model_source;
use rpcompass_core::spin::system::{rank_and_truncate, FieldOrientation, DEFAULT_DIM_CAP};
use rpcompass_core::spin::{load_spin_system_with_cap, parse_spin_system, SpinSystem};
use rpcompass_core::sweep::output::{write_csv, write_json, ScanSummary, SweepSummary};
use rpcompass_core::sweep::{sweep, truncation_scan_with, SweepConfig, SweepGrid, SweepResult};
use rpcompass_core::Error;

const DIM_CAP_ENV: &str = "RPCOMPASS_DIM_CAP";

#[derive(Parser)]
#[command(name = "rpcompass", version, about = "Radical-pair compass precision sweeps")]
#[command(after_help = "Environment:\n  RPCOMPASS_DIM_CAP  Maximum Hilbert-space dimension [default: 4096]")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the field orientation grid and write a CSV plus a JSON summary.
    Sweep(SweepArgs),
    /// Sweep once per nucleus count and write per-count summaries and the table row.
    Scan(ScanArgs),
    /// Check invariants at 8 seeded random orientations; exit 1 on failure.
    Check(CheckArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Model file (TOML) or shipped model name: fad_z_1n, fad_w_2n, fad_z_3n, fad_w_3n.
    #[arg(long)]
    model: String,
    /// Include the electron-electron dipolar coupling.
    #[arg(long, overrides_with = "no_eed")]
    eed: bool,
    /// Exclude the electron-electron dipolar coupling (default).
    #[arg(long = "no-eed")]
    no_eed: bool,
    /// Field strength in mT.
    #[arg(long = "b0-mT", default_value_t = 0.05)]
    b0_mt: f64,
    /// Singlet recombination rate k_b in 1/μs [default: model value, 1.0 for shipped models].
    #[arg(long)]
    kb: Option<f64>,
    /// Free-radical decay rate k_f in 1/μs [default: model value, 1.0 for shipped models].
    #[arg(long)]
    kf: Option<f64>,
    /// Finite-difference step for θ-derivatives in degrees.
    #[arg(long = "delta-deg", default_value_t = 0.1)]
    delta_deg: f64,
    /// Worker threads [default: available parallelism].
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Write the full steady-state density matrix at each check orientation to this text file.
    #[arg(long = "dump-rho")]
    dump_rho: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    /// θ grid step in degrees; must divide 180.
    #[arg(long = "theta-step", default_value_t = 1.0)]
    theta_step: f64,
    /// φ grid step in degrees; must divide the φ range.
    #[arg(long = "phi-step", default_value_t = 5.0)]
    phi_step: f64,
    /// Sample φ over [0°, 360°) instead of [0°, 180°].
    #[arg(long = "full-phi")]
    full_phi: bool,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Keep only the n most strongly coupled nuclei [default: all].
    #[arg(long = "n-keep")]
    n_keep: Option<usize>,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Inclusive nucleus-count range A..B [default: 1..all].
    #[arg(long = "n-range", value_parser = parse_range)]
    n_range: Option<(usize, usize)>,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected A..B, got {s:?}"))?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let a: usize = a.trim().parse().map_err(|e| format!("bad range start {a:?}: {e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("bad range end {b:?}: {e}"))?;
    if a > b {
        return Err(format!("range start {a} exceeds end {b}"));
    }
    Ok((a, b))
}

enum Failure {
    Input(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let input = match &e {
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Validation { .. }
            | Error::InvalidArgument(_)
            | Error::Capacity { .. } => true,
            Error::AtOrientation { source, .. } => matches!(**source, Error::Capacity { .. }),
            _ => false,
        };
        let msg = e.to_string();
        if input {
            Failure::Input(msg)
        } else {
            Failure::Run(msg)
        }
    }
}

fn dim_cap() -> Result<usize, Failure> {
    match std::env::var(DIM_CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Input(format!("{DIM_CAP_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(DEFAULT_DIM_CAP),
    }
}

fn load_model(common: &CommonArgs) -> Result<SpinSystem, Failure> {
    let cap = dim_cap()?;
    let path = Path::new(&common.model);
    let system = if !path.exists() {
        match shipped_model_source(&common.model) {
            Some(src) => parse_spin_system(src, cap)?,
            None => load_spin_system_with_cap(path, cap)?,
        }
    } else {
        load_spin_system_with_cap(path, cap)?
    };
    if common.kb.is_none() && common.kf.is_none() {
        return Ok(system);
    }
    let kb = common.kb.unwrap_or(system.k_b());
    let kf = common.kf.unwrap_or(system.k_f());
    Ok(system.to_builder().rates(kb, kf).build()?)
}

fn scheme(common: &CommonArgs) -> Result<DerivativeScheme, Failure> {
    let delta = common.delta_deg.to_radians();
    if !(delta > 0.0 && delta <= std::f64::consts::FRAC_PI_4) {
        return Err(Failure::Input(format!(
            "--delta-deg must lie in (0, 45], got {}",
            common.delta_deg
        )));
    }
    Ok(DerivativeScheme::Central { delta })
}

fn sweep_config(common: &CommonArgs) -> Result<SweepConfig, Failure> {
    Ok(SweepConfig {
        b0_mt: common.b0_mt,
        include_eed: common.eed,
        n_trials: 1,
        scheme: scheme(common)?,
        workers: common.workers,
    })
}

fn build_grid(g: &GridArgs) -> Result<SweepGrid, Failure> {
    Ok(SweepGrid::new(g.theta_step, g.phi_step, g.full_phi)?)
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::Input(format!("cannot create output directory {}: {e}", dir.display())))
}

fn stem(system: &SpinSystem, eed: bool) -> String {
    format!("{}_{}", system.name(), if eed { "eed" } else { "no_eed" })
}

fn fmt_opt(e: Option<rpcompass_core::sweep::Extremum>) -> String {
    match e {
        Some(e) => format!("{:<14.6e} at θ = {:>5}°, φ = {:>5}°", e.value, e.theta_deg, e.phi_deg),
        None => "-".to_string(),
    }
}

fn print_extrema(r: &SweepResult) {
    println!(
        "model {} ({} nuclei, EED {})",
        r.model,
        r.n_nuclei,
        if r.include_eed { "on" } else { "off" }
    );
    println!(
        "  Φ_S mean {:.6e}  max {:.6e}  min {:.6e}  Γ {:.6e}",
        r.phi_s_mean, r.phi_s_max, r.phi_s_min, r.gamma
    );
    println!("  qfi max        {}", fmt_opt(r.qfi_max));
    println!("  qfi min        {}", fmt_opt(r.qfi_min));
    println!("  inv_n_var max  {}", fmt_opt(r.inv_n_var_max));
    println!("  inv_n_var min  {}", fmt_opt(r.inv_n_var_min));
}

fn write_sweep(r: &SweepResult, dir: &Path, name: &str) -> Result<(), Failure> {
    let csv = dir.join(format!("{name}.csv"));
    let json = dir.join(format!("{name}.json"));
    write_csv(r, &csv)?;
    write_json(&SweepSummary::from_result(r), &json)?;
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Failure> {
    let mut system = load_model(&args.common)?;
    let config = sweep_config(&args.common)?;
    let grid = build_grid(&args.grid)?;
    let mut name = stem(&system, config.include_eed);
    if let Some(n) = args.n_keep {
        system = rank_and_truncate(&system, n)?;
        name.push_str(&format!("_n{n}"));
    }
    prepare_out(&args.grid.out)?;
    let r = sweep(&system, &grid, &config)?;
    print_extrema(&r);
    write_sweep(&r, &args.grid.out, &name)
}

fn cmd_scan(args: &ScanArgs) -> Result<(), Failure> {
    let system = load_model(&args.common)?;
    let config = sweep_config(&args.common)?;
    let grid = build_grid(&args.grid)?;
    let (lo, hi) = args.n_range.unwrap_or((1, system.nuclei().len()));
    prepare_out(&args.grid.out)?;
    let base = stem(&system, config.include_eed);
    let dir = args.grid.out.clone();
    let summary = truncation_scan_with(&system, &grid, lo..=hi, &config, |n, r| {
        eprintln!("n = {n}: {} points done", r.records.len());
        let name = format!("{base}_n{n}");
        write_csv(r, &dir.join(format!("{name}.csv")))?;
        write_json(&SweepSummary::from_result(r), &dir.join(format!("{name}.json")))
    })?;
    let scan = ScanSummary::from_summary(&summary);
    println!(
        "{:>3}  {:>13}  {:>13}  {:>13}  {:>13}",
        "n", "gamma", "inv_n_var", "qfi", "optimality"
    );
    for row in &scan.rows {
        println!(
            "{:>3}  {:>13.6e}  {:>13.6e}  {:>13.6e}  {:>13.6e}",
            row.n_keep, row.gamma, row.best_inv_n_var, row.matched_qfi, row.optimality
        );
    }
    let t = scan.table;
    let n1 = t.n1.map_or("-".to_string(), |v| format!("{v:.6e}"));
    println!(
        "optimality  n=1 {n1}  max {:.6e}  min {:.6e}  robust avg {:.6e}",
        t.max, t.min, t.robust_average
    );
    let path = dir.join(format!("{base}_scan.json"));
    write_json(&scan, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn dump_rho(system: &SpinSystem, common: &CommonArgs, orientations: &[(f64, f64)], path: &Path) -> Result<(), Failure> {
    let solver = OrientationSolver::new(system, common.eed)?;
    let mut text = Vec::new();
    for &(t, p) in orientations {
        let field = FieldOrientation::from_degrees(common.b0_mt, t, p)?;
        let ss = solver.steady_state(&field)?;
        let io = |e: std::io::Error| Failure::Run(e.to_string());
        writeln!(text, "# theta_deg {t} phi_deg {p}").map_err(io)?;
        write_matrix_text(&ss.rho_ss, &mut text).map_err(io)?;
    }
    fs::write(path, text).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_check(args: &CheckArgs) -> Result<(), Failure> {
    let common = &args.common;
    let system = load_model(common)?;
    let config = CheckConfig {
        b0_mt: common.b0_mt,
        include_eed: common.eed,
        scheme: scheme(common)?,
        ..Default::default()
    };
    let report = run_checks(&system, &config)?;
    if let Some(path) = &args.dump_rho {
        dump_rho(&system, common, &report.orientations, path)?;
    }
    for o in &report.outcomes {
        let status = if o.skipped {
            "SKIP"
        } else if o.passed() {
            "PASS"
        } else {
            "FAIL"
        };
        let at =
            o.at.map_or(String::new(), |(t, p)| format!(" at θ = {t:.3}°, φ = {p:.3}°"));
        println!(
            "{status}  {:<22} worst {:.3e} (tolerance {:.0e}){at}",
            o.name, o.worst, o.tolerance
        );
    }
    if report.passed() {
        Ok(())
    } else {
        let names: Vec<&str> = report.failures().map(|o| o.name).collect();
        Err(Failure::Run(format!("failed invariants: {}", names.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Sweep(a) => cmd_sweep(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Check(a) => cmd_check(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
