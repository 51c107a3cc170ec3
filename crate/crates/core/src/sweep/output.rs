//! Frozen CSV and JSON formats for sweep and scan results.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{best_precision_point, Extremum, SweepResult, TableRow, TruncationSummary};
use crate::error::{Error, Result};

/// Header of the per-point CSV. Do not reorder.
pub const CSV_COLUMNS: [&str; 10] = [
    "theta_deg",
    "phi_deg",
    "phi_s",
    "dphi_s_dtheta",
    "qfi",
    "cfi",
    "inv_n_var",
    "optimality",
    "ortho_dist_s2",
    "ortho_dist_ps",
];

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Output(format!("{}: {e}", path.display()))
}

/// Writes one row per grid point, θ-major. Angles are plain decimals, other
/// values shortest round-trip scientific notation (`inf`, `NaN` for sentinels).
pub fn write_csv_to<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Output(e.to_string());
    w.write_record(CSV_COLUMNS).map_err(err)?;
    for (k, r) in result.records.iter().enumerate() {
        let (t, p) = result.grid.point(k);
        let row = [
            format!("{t}"),
            format!("{p}"),
            format!("{:e}", r.phi_s),
            format!("{:e}", r.dphi_s_dtheta),
            format!("{:e}", r.qfi),
            format!("{:e}", r.cfi),
            format!("{:e}", r.inv_n_var),
            format!("{:e}", r.optimality),
            format!("{:e}", r.ortho_dist_s2),
            format!("{:e}", r.ortho_dist_ps),
        ];
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| Error::Output(e.to_string()))?;
    Ok(())
}

pub fn write_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    write_csv_to(result, std::io::BufWriter::new(file))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub theta_step_deg: Option<f64>,
    pub phi_step_deg: Option<f64>,
    pub n_theta: usize,
    pub n_phi: usize,
    pub full_phi: bool,
}

/// Best-precision orientation as written to JSON.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestPoint {
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub phi_s: f64,
    pub inv_n_var: f64,
    pub qfi: f64,
    pub optimality: f64,
}

/// JSON summary of one sweep. Non-finite numbers serialize as `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub model: String,
    pub n_nuclei: usize,
    pub include_eed: bool,
    #[serde(rename = "b0_mT")]
    pub b0_mt: f64,
    pub k_b_per_us: f64,
    pub k_f_per_us: f64,
    pub n_trials: u64,
    pub grid: GridSummary,
    pub gamma: f64,
    pub phi_s_mean: f64,
    pub phi_s_max: f64,
    pub phi_s_min: f64,
    pub qfi_max: Option<Extremum>,
    pub qfi_min: Option<Extremum>,
    pub inv_n_var_max: Option<Extremum>,
    pub inv_n_var_min: Option<Extremum>,
    pub best: Option<BestPoint>,
}

impl SweepSummary {
    pub fn from_result(r: &SweepResult) -> Self {
        SweepSummary {
            model: r.model.clone(),
            n_nuclei: r.n_nuclei,
            include_eed: r.include_eed,
            b0_mt: r.b0_mt,
            k_b_per_us: r.k_b,
            k_f_per_us: r.k_f,
            n_trials: r.n_trials,
            grid: GridSummary {
                theta_step_deg: r.grid.theta_step(),
                phi_step_deg: r.grid.phi_step(),
                n_theta: r.grid.n_theta(),
                n_phi: r.grid.n_phi(),
                full_phi: r.grid.full_phi(),
            },
            gamma: r.gamma,
            phi_s_mean: r.phi_s_mean,
            phi_s_max: r.phi_s_max,
            phi_s_min: r.phi_s_min,
            qfi_max: r.qfi_max,
            qfi_min: r.qfi_min,
            inv_n_var_max: r.inv_n_var_max,
            inv_n_var_min: r.inv_n_var_min,
            best: best_precision_point(r).ok().map(|b| BestPoint {
                theta_deg: b.theta.to_degrees(),
                phi_deg: b.phi.to_degrees(),
                phi_s: b.phi_s,
                inv_n_var: b.inv_n_var,
                qfi: b.qfi,
                optimality: b.optimality,
            }),
        }
    }
}

/// One line of a scan: the sweep statistics at a nucleus count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub n_keep: usize,
    pub gamma: f64,
    pub best_inv_n_var: f64,
    pub matched_qfi: f64,
    pub optimality: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub model: String,
    pub include_eed: bool,
    pub rows: Vec<ScanRow>,
    pub table: TableRow,
}

impl ScanSummary {
    pub fn from_summary(s: &TruncationSummary) -> Self {
        ScanSummary {
            model: s.model.clone(),
            include_eed: s.include_eed,
            rows: s
                .rows
                .iter()
                .map(|r| ScanRow {
                    n_keep: r.n_keep,
                    gamma: r.gamma,
                    best_inv_n_var: r.best.inv_n_var,
                    matched_qfi: r.best.qfi,
                    optimality: r.best.optimality,
                    theta_deg: r.best.theta.to_degrees(),
                    phi_deg: r.best.phi.to_degrees(),
                })
                .collect(),
            table: s.table,
        }
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}
