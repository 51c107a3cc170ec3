//! Orientation grids in degrees.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_THETA_STEP_DEG: f64 = 1.0;
pub const DEFAULT_PHI_STEP_DEG: f64 = 5.0;

/// Rectangular (θ, φ) grid. θ runs over `[0°, 180°]` inclusive; φ over
/// `[0°, 180°]` inclusive, or `[0°, 360°)` periodic when `full_phi` is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    theta_deg: Vec<f64>,
    phi_deg: Vec<f64>,
    theta_step: Option<f64>,
    phi_step: Option<f64>,
    full_phi: bool,
}

fn divisions(range: f64, step: f64, what: &str) -> Result<usize> {
    if !(step.is_finite() && step > 0.0 && step <= range) {
        return Err(Error::invalid(format!(
            "{what} step must lie in (0, {range}] degrees, got {step}"
        )));
    }
    let n = (range / step).round();
    if (n * step - range).abs() > 1e-9 * range {
        return Err(Error::invalid(format!(
            "{what} step {step} does not divide {range} degrees evenly"
        )));
    }
    Ok(n as usize)
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid::new(DEFAULT_THETA_STEP_DEG, DEFAULT_PHI_STEP_DEG, false).expect("default steps divide the ranges")
    }
}

impl SweepGrid {
    pub fn new(theta_step_deg: f64, phi_step_deg: f64, full_phi: bool) -> Result<Self> {
        let nt = divisions(180.0, theta_step_deg, "theta")?;
        let phi_range = if full_phi { 360.0 } else { 180.0 };
        let np = divisions(phi_range, phi_step_deg, "phi")?;
        let np_points = if full_phi { np } else { np + 1 };
        Ok(SweepGrid {
            theta_deg: (0..=nt).map(|i| i as f64 * theta_step_deg).collect(),
            phi_deg: (0..np_points).map(|j| j as f64 * phi_step_deg).collect(),
            theta_step: Some(theta_step_deg),
            phi_step: Some(phi_step_deg),
            full_phi,
        })
    }

    /// Arbitrary sorted node lists; quadrature is only available when they
    /// span the full ranges.
    pub fn custom(theta_deg: Vec<f64>, phi_deg: Vec<f64>) -> Result<Self> {
        if theta_deg.is_empty() || phi_deg.is_empty() {
            return Err(Error::invalid("grid needs at least one theta and one phi value"));
        }
        let sorted = |v: &[f64], hi: f64| v.windows(2).all(|w| w[0] < w[1]) && v.iter().all(|x| (0.0..=hi).contains(x));
        if !sorted(&theta_deg, 180.0) || !sorted(&phi_deg, 360.0) {
            return Err(Error::invalid(
                "grid nodes must be strictly increasing within theta [0, 180], phi [0, 360]",
            ));
        }
        Ok(SweepGrid {
            theta_deg,
            phi_deg,
            theta_step: None,
            phi_step: None,
            full_phi: false,
        })
    }

    pub fn single(theta_deg: f64, phi_deg: f64) -> Result<Self> {
        Self::custom(vec![theta_deg], vec![phi_deg])
    }

    pub fn theta_deg(&self) -> &[f64] {
        &self.theta_deg
    }

    pub fn phi_deg(&self) -> &[f64] {
        &self.phi_deg
    }

    pub fn theta_step(&self) -> Option<f64> {
        self.theta_step
    }

    pub fn phi_step(&self) -> Option<f64> {
        self.phi_step
    }

    pub fn full_phi(&self) -> bool {
        self.full_phi
    }

    pub fn n_theta(&self) -> usize {
        self.theta_deg.len()
    }

    pub fn n_phi(&self) -> usize {
        self.phi_deg.len()
    }

    pub fn len(&self) -> usize {
        self.n_theta() * self.n_phi()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Point `k` in θ-major order.
    pub fn point(&self, k: usize) -> (f64, f64) {
        (self.theta_deg[k / self.n_phi()], self.phi_deg[k % self.n_phi()])
    }

    pub fn index(&self, i_theta: usize, i_phi: usize) -> usize {
        i_theta * self.n_phi() + i_phi
    }

    fn covers_full_range(&self) -> bool {
        let t = &self.theta_deg;
        let p = &self.phi_deg;
        let theta_ok = t.len() >= 2 && t[0] == 0.0 && t[t.len() - 1] == 180.0;
        let phi_ok = if self.full_phi {
            p.len() >= 2 && p[0] == 0.0
        } else {
            p.len() >= 2 && p[0] == 0.0 && p[p.len() - 1] == 180.0
        };
        theta_ok && phi_ok
    }

    /// Trapezoid weights `sinθ Δθ Δφ` in θ-major order, normalized to unit sum.
    pub fn quadrature_weights(&self) -> Result<Vec<f64>> {
        if self.is_empty() {
            return Err(Error::invalid("empty grid"));
        }
        if !self.covers_full_range() {
            return Err(Error::invalid(
                "quadrature needs a grid spanning the full theta and phi ranges",
            ));
        }
        let t: Vec<f64> = self.theta_deg.iter().map(|x| x.to_radians()).collect();
        let p: Vec<f64> = self.phi_deg.iter().map(|x| x.to_radians()).collect();
        let wt: Vec<f64> = trapezoid(&t).iter().zip(&t).map(|(w, x)| w * x.sin()).collect();
        let wp = if self.full_phi {
            let n = p.len();
            (0..n)
                .map(|j| {
                    let next = if j + 1 < n {
                        p[j + 1]
                    } else {
                        p[0] + 2.0 * std::f64::consts::PI
                    };
                    let prev = if j > 0 {
                        p[j - 1]
                    } else {
                        p[n - 1] - 2.0 * std::f64::consts::PI
                    };
                    (next - prev) / 2.0
                })
                .collect()
        } else {
            trapezoid(&p)
        };
        let mut w = Vec::with_capacity(self.len());
        for a in &wt {
            for b in &wp {
                w.push(a * b);
            }
        }
        let total: f64 = w.iter().sum();
        Ok(w.into_iter().map(|x| x / total).collect())
    }
}

fn trapezoid(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let lo = if i > 0 { x[i - 1] } else { x[i] };
            let hi = if i + 1 < n { x[i + 1] } else { x[i] };
            (hi - lo) / 2.0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_size() {
        let g = SweepGrid::default();
        assert_eq!((g.n_theta(), g.n_phi(), g.len()), (181, 37, 6697));
        assert_eq!(g.point(38), (1.0, 5.0));
        let full = SweepGrid::new(1.0, 5.0, true).unwrap();
        assert_eq!(full.n_phi(), 72);
        assert_eq!(*full.phi_deg().last().unwrap(), 355.0);
    }

    #[test]
    fn steps_must_divide() {
        assert!(SweepGrid::new(7.0, 5.0, false).is_err());
        assert!(SweepGrid::new(1.0, 0.0, false).is_err());
        assert!(SweepGrid::new(0.5, 2.5, false).is_ok());
        assert!(SweepGrid::new(1.0, 200.0, false).is_err());
    }

    #[test]
    fn weights_integrate_cos_squared() {
        for full in [false, true] {
            let g = SweepGrid::new(1.0, 5.0, full).unwrap();
            let w = g.quadrature_weights().unwrap();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let mean: f64 = (0..g.len())
                .map(|k| w[k] * g.point(k).0.to_radians().cos().powi(2))
                .sum();
            assert!((mean - 1.0 / 3.0).abs() < 1e-4, "{mean}");
        }
    }

    #[test]
    fn partial_grid_has_no_quadrature() {
        assert!(SweepGrid::single(10.0, 0.0).unwrap().quadrature_weights().is_err());
        assert!(SweepGrid::custom(vec![], vec![0.0]).is_err());
    }
}
