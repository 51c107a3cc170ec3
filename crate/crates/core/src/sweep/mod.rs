//! Orientation sweeps, yield anisotropy and nucleus-count scans.

pub mod grid;
pub mod output;

pub use grid::SweepGrid;

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::DEFAULT_B0_MT;
use crate::error::{Error, Result};
use crate::liouville::OrientationSolver;
use crate::metrology::{evaluate_point, DerivativeScheme, MetrologyRecord};
use crate::spin::system::{rank_and_truncate, FieldOrientation, SpinSystem};

/// Settings shared by every point of a sweep.
#[derive(Clone, Copy, Debug)]
pub struct SweepConfig {
    pub b0_mt: f64,
    pub include_eed: bool,
    pub n_trials: u64,
    pub scheme: DerivativeScheme,
    /// Worker threads; `None` uses the available parallelism.
    pub workers: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            b0_mt: DEFAULT_B0_MT,
            include_eed: false,
            n_trials: 1,
            scheme: DerivativeScheme::default(),
            workers: None,
        }
    }
}

/// A value and where on the grid it occurs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub value: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
}

/// Anisotropy statistics of a field over the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Anisotropy {
    pub mean: f64,
    pub max: f64,
    pub min: f64,
    /// `(max − min) / mean`
    pub gamma: f64,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub model: String,
    pub n_nuclei: usize,
    pub include_eed: bool,
    pub b0_mt: f64,
    pub k_b: f64,
    pub k_f: f64,
    pub n_trials: u64,
    pub grid: SweepGrid,
    /// θ-major, matching [`SweepGrid::point`].
    pub records: Vec<MetrologyRecord>,
    pub gamma: f64,
    pub phi_s_mean: f64,
    pub phi_s_max: f64,
    pub phi_s_min: f64,
    pub qfi_max: Option<Extremum>,
    pub qfi_min: Option<Extremum>,
    pub inv_n_var_max: Option<Extremum>,
    pub inv_n_var_min: Option<Extremum>,
}

impl SweepResult {
    pub fn record(&self, i_theta: usize, i_phi: usize) -> &MetrologyRecord {
        &self.records[self.grid.index(i_theta, i_phi)]
    }

    /// Locates the extremum of `f` over non-NaN values; the first grid point
    /// wins ties.
    pub fn extremum(&self, f: impl Fn(&MetrologyRecord) -> f64, largest: bool) -> Option<Extremum> {
        let mut best: Option<Extremum> = None;
        for (k, r) in self.records.iter().enumerate() {
            let v = f(r);
            if v.is_nan() {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => (largest && v > b.value) || (!largest && v < b.value),
            };
            if better {
                let (theta_deg, phi_deg) = self.grid.point(k);
                best = Some(Extremum {
                    value: v,
                    theta_deg,
                    phi_deg,
                });
            }
        }
        best
    }
}

fn build_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(Error::invalid("worker count must be at least 1"));
        }
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))
}

pub fn sweep(system: &SpinSystem, grid: &SweepGrid, config: &SweepConfig) -> Result<SweepResult> {
    let pool = build_pool(config.workers)?;
    sweep_in(&pool, system, grid, config)
}

fn sweep_in(
    pool: &rayon::ThreadPool,
    system: &SpinSystem,
    grid: &SweepGrid,
    config: &SweepConfig,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::invalid("empty grid"));
    }
    if config.n_trials == 0 {
        return Err(Error::invalid("number of trials must be at least 1"));
    }
    let solver = OrientationSolver::new(system, config.include_eed)?;
    let evaluate = |k: usize| -> Result<MetrologyRecord> {
        let (t, p) = grid.point(k);
        let wrap = |e: Error| Error::AtOrientation {
            theta_deg: t,
            phi_deg: p,
            source: Box::new(e),
        };
        let field = FieldOrientation::from_degrees(config.b0_mt, t, p).map_err(wrap)?;
        evaluate_point(&solver, &field, config.scheme, config.n_trials).map_err(wrap)
    };
    let outcomes: Vec<Result<MetrologyRecord>> =
        pool.install(|| (0..grid.len()).into_par_iter().map(evaluate).collect());
    let records = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let mut result = SweepResult {
        model: system.name().to_string(),
        n_nuclei: system.nuclei().len(),
        include_eed: config.include_eed,
        b0_mt: config.b0_mt,
        k_b: system.k_b(),
        k_f: system.k_f(),
        n_trials: config.n_trials,
        grid: grid.clone(),
        records,
        gamma: f64::NAN,
        phi_s_mean: f64::NAN,
        phi_s_max: f64::NAN,
        phi_s_min: f64::NAN,
        qfi_max: None,
        qfi_min: None,
        inv_n_var_max: None,
        inv_n_var_min: None,
    };
    let values: Vec<f64> = result.records.iter().map(|r| r.phi_s).collect();
    result.phi_s_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    result.phi_s_min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if let Ok(a) = anisotropy_from_values(grid, &values) {
        result.phi_s_mean = a.mean;
        result.gamma = a.gamma;
    }
    result.qfi_max = result.extremum(|r| r.qfi, true);
    result.qfi_min = result.extremum(|r| r.qfi, false);
    result.inv_n_var_max = result.extremum(|r| r.inv_n_var, true);
    result.inv_n_var_min = result.extremum(|r| r.inv_n_var, false);
    Ok(result)
}

/// Sphere-averaged mean `(1/2π)∫∫ sinθ f dθ dφ` and `Γ` of a θ-major field.
pub fn anisotropy_from_values(grid: &SweepGrid, values: &[f64]) -> Result<Anisotropy> {
    if values.is_empty() {
        return Err(Error::invalid("empty grid"));
    }
    if values.len() != grid.len() {
        return Err(Error::invalid(format!(
            "expected {} values, got {}",
            grid.len(),
            values.len()
        )));
    }
    let w = grid.quadrature_weights()?;
    let mean: f64 = w.iter().zip(values).map(|(a, b)| a * b).sum();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let gamma = if max == min { 0.0 } else { (max - min) / mean };
    Ok(Anisotropy { mean, max, min, gamma })
}

pub fn anisotropy(result: &SweepResult) -> Result<f64> {
    let values: Vec<f64> = result.records.iter().map(|r| r.phi_s).collect();
    Ok(anisotropy_from_values(&result.grid, &values)?.gamma)
}

/// Record with the largest finite, positive `inv_n_var`; ties go to the
/// smaller θ, then the smaller φ.
pub fn best_precision_point(result: &SweepResult) -> Result<MetrologyRecord> {
    if result.records.is_empty() {
        return Err(Error::invalid("empty sweep"));
    }
    let mut best: Option<&MetrologyRecord> = None;
    for r in &result.records {
        let v = r.inv_n_var;
        if !(v.is_finite() && v > 0.0) {
            continue;
        }
        if best.is_none_or(|b| v > b.inv_n_var) {
            best = Some(r);
        }
    }
    best.copied()
        .ok_or_else(|| Error::NotFound("no orientation with finite yield variance".into()))
}

/// Scan result for one nucleus count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationRow {
    pub n_keep: usize,
    pub gamma: f64,
    pub best: MetrologyRecord,
}

/// Optimality statistics across a scan, in the shape of a results table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    /// Optimality with one nucleus, if that count was scanned.
    pub n1: Option<f64>,
    pub max: f64,
    pub min: f64,
    pub robust_average: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationSummary {
    pub model: String,
    pub include_eed: bool,
    pub rows: Vec<TruncationRow>,
    pub table: TableRow,
}

/// Entries averaged by [`robust_average`].
pub const ROBUST_COUNT: usize = 7;

/// Mean of the [`ROBUST_COUNT`] smallest values, or of all when fewer.
pub fn robust_average(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len().min(ROBUST_COUNT);
    v[..k].iter().sum::<f64>() / k as f64
}

pub fn table_row(rows: &[TruncationRow]) -> Result<TableRow> {
    if rows.is_empty() {
        return Err(Error::invalid("no truncation rows"));
    }
    let opt: Vec<f64> = rows.iter().map(|r| r.best.optimality).collect();
    Ok(TableRow {
        n1: rows.iter().find(|r| r.n_keep == 1).map(|r| r.best.optimality),
        max: opt.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min: opt.iter().copied().fold(f64::INFINITY, f64::min),
        robust_average: robust_average(&opt),
    })
}

pub fn truncation_scan(
    full_system: &SpinSystem,
    grid: &SweepGrid,
    n_range: RangeInclusive<usize>,
    config: &SweepConfig,
) -> Result<TruncationSummary> {
    truncation_scan_with(full_system, grid, n_range, config, |_, _| Ok(()))
}

/// As [`truncation_scan`], handing each finished sweep to `on_sweep`.
pub fn truncation_scan_with(
    full_system: &SpinSystem,
    grid: &SweepGrid,
    n_range: RangeInclusive<usize>,
    config: &SweepConfig,
    mut on_sweep: impl FnMut(usize, &SweepResult) -> Result<()>,
) -> Result<TruncationSummary> {
    let n_total = full_system.nuclei().len();
    let (lo, hi) = (*n_range.start(), *n_range.end());
    if lo < 1 || hi > n_total || lo > hi {
        return Err(Error::invalid(format!(
            "nucleus range {lo}..{hi} must lie within 1..{n_total}"
        )));
    }
    let pool = build_pool(config.workers)?;
    let mut rows = Vec::with_capacity(hi - lo + 1);
    for n in lo..=hi {
        let system = rank_and_truncate(full_system, n)?;
        let result = sweep_in(&pool, &system, grid, config)?;
        on_sweep(n, &result)?;
        rows.push(TruncationRow {
            n_keep: n,
            gamma: result.gamma,
            best: best_precision_point(&result)?,
        });
    }
    Ok(TruncationSummary {
        model: full_system.name().to_string(),
        include_eed: config.include_eed,
        table: table_row(&rows)?,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::shipped_model;

    fn record(theta_deg: f64, phi_deg: f64, inv_n_var: f64) -> MetrologyRecord {
        MetrologyRecord {
            theta: theta_deg.to_radians(),
            phi: phi_deg.to_radians(),
            phi_s: 0.5,
            dphi_s_dtheta: 0.0,
            qfi: 2.0 * inv_n_var,
            cfi: inv_n_var,
            inv_n_var,
            optimality: 2.0,
            ortho_dist_s2: 0.0,
            ortho_dist_ps: 0.0,
            qfi_sld: 0.0,
            qfi_vectorized: 0.0,
            sld_residual: 0.0,
            sld_trace: 0.0,
            s2_inv_n_var: inv_n_var,
            total_population: 0.5,
            flux_balance: 1.0,
        }
    }

    fn synthetic(grid: SweepGrid, values: Vec<f64>) -> SweepResult {
        let records = (0..grid.len())
            .map(|k| {
                let (t, p) = grid.point(k);
                record(t, p, values[k])
            })
            .collect();
        SweepResult {
            model: "synthetic".into(),
            n_nuclei: 0,
            include_eed: false,
            b0_mt: 0.05,
            k_b: 1.0,
            k_f: 1.0,
            n_trials: 1,
            grid,
            records,
            gamma: 0.0,
            phi_s_mean: 0.5,
            phi_s_max: 0.5,
            phi_s_min: 0.5,
            qfi_max: None,
            qfi_min: None,
            inv_n_var_max: None,
            inv_n_var_min: None,
        }
    }

    #[test]
    fn best_point_selection_and_ties() {
        let g = SweepGrid::custom(vec![0.0, 90.0, 180.0], vec![0.0, 90.0]).unwrap();
        let r = synthetic(g.clone(), vec![0.0, 1.0, 3.0, 2.0, 3.0, f64::INFINITY]);
        let best = best_precision_point(&r).unwrap();
        assert_eq!(best.inv_n_var, 3.0);
        assert!((best.theta - 90f64.to_radians()).abs() < 1e-15 && best.phi == 0.0);

        let single = synthetic(SweepGrid::single(12.0, 3.0).unwrap(), vec![0.7]);
        assert_eq!(best_precision_point(&single).unwrap().inv_n_var, 0.7);

        let flat = synthetic(g, vec![0.0; 6]);
        assert!(matches!(best_precision_point(&flat), Err(Error::NotFound(_))));
    }

    #[test]
    fn anisotropy_of_constant_field() {
        let g = SweepGrid::default();
        let a = anisotropy_from_values(&g, &vec![0.37; g.len()]).unwrap();
        assert!((a.mean - 0.37).abs() < 1e-14);
        assert_eq!(a.gamma, 0.0);
        assert!(anisotropy_from_values(&g, &[]).is_err());
    }

    #[test]
    fn gamma_is_scale_invariant() {
        let g = SweepGrid::new(5.0, 15.0, false).unwrap();
        let values: Vec<f64> = (0..g.len())
            .map(|k| 0.3 + 0.1 * g.point(k).0.to_radians().sin())
            .collect();
        let a = anisotropy_from_values(&g, &values).unwrap();
        let scaled: Vec<f64> = values.iter().map(|v| 7.5 * v).collect();
        let b = anisotropy_from_values(&g, &scaled).unwrap();
        assert!((a.gamma - b.gamma).abs() < 1e-14);
    }

    #[test]
    fn robust_average_uses_seven_smallest() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(robust_average(&v), 4.0);
        assert_eq!(robust_average(&[3.0, 5.0]), 4.0);
    }

    #[test]
    fn coarse_sweep_is_deterministic_and_bounded() {
        let s = shipped_model("fad_z_1n").unwrap();
        let g = SweepGrid::new(15.0, 30.0, false).unwrap();
        let serial = SweepConfig {
            workers: Some(1),
            ..Default::default()
        };
        let parallel = SweepConfig {
            workers: Some(3),
            ..Default::default()
        };
        let a = sweep(&s, &g, &serial).unwrap();
        let b = sweep(&s, &g, &parallel).unwrap();
        assert_eq!(a.records.len(), 13 * 7);
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(format!("{x:?}"), format!("{y:?}"));
        }
        assert!(((a.phi_s_max - a.phi_s_min) / a.phi_s_mean - a.gamma).abs() < 1e-12);
        for r in &a.records {
            assert!(r.cfi <= r.qfi * (1.0 + 1e-6));
        }
        let best = best_precision_point(&a).unwrap();
        assert_eq!(Some(best.inv_n_var), a.inv_n_var_max.map(|e| e.value));
    }

    #[test]
    fn scan_of_one_matches_single_sweep() {
        let s = shipped_model("fad_z_3n").unwrap();
        let g = SweepGrid::new(30.0, 60.0, false).unwrap();
        let cfg = SweepConfig::default();
        let scan = truncation_scan(&s, &g, 1..=1, &cfg).unwrap();
        let single = sweep(&rank_and_truncate(&s, 1).unwrap(), &g, &cfg).unwrap();
        assert_eq!(scan.rows[0].best, best_precision_point(&single).unwrap());
        assert_eq!(scan.rows[0].gamma, single.gamma);
        assert_eq!(scan.table.n1, Some(scan.rows[0].best.optimality));
        assert_eq!(scan.table.robust_average, scan.rows[0].best.optimality);
        assert!(truncation_scan(&s, &g, 0..=2, &cfg).is_err());
        assert!(truncation_scan(&s, &g, 1..=4, &cfg).is_err());
    }
}
