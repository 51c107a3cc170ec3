//! Radical-pair spin-system description.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::constants::{gyromagnetic_ratio, DEFAULT_G_FACTOR, DEFAULT_RATE_PER_US};
use crate::error::{Error, Result};

/// Largest Hilbert dimension accepted unless overridden.
pub const DEFAULT_DIM_CAP: usize = 4096;

const EED_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Radical {
    A,
    B,
}

impl Radical {
    pub fn index(self) -> usize {
        match self {
            Radical::A => 0,
            Radical::B => 1,
        }
    }
}

impl fmt::Display for Radical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Radical::A => f.write_str("A"),
            Radical::B => f.write_str("B"),
        }
    }
}

/// A hyperfine-coupled nucleus. The tensor is in mT and need not be
/// symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct Nucleus {
    pub label: String,
    pub radical: Radical,
    pub multiplicity: usize,
    pub hyperfine: Matrix3<f64>,
}

impl Nucleus {
    pub fn new(label: impl Into<String>, radical: Radical, multiplicity: usize, hyperfine: Matrix3<f64>) -> Self {
        Nucleus {
            label: label.into(),
            radical,
            multiplicity,
            hyperfine,
        }
    }

    /// Largest eigenvalue magnitude of the hyperfine tensor, mT. Used to rank
    /// nuclei by importance.
    pub fn coupling_strength(&self) -> f64 {
        self.hyperfine
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    fn validate(&self, idx: usize) -> Result<()> {
        if self.multiplicity < 2 {
            return Err(Error::validation(
                "multiplicity >= 2",
                format!("nucleus {idx} ({}) has multiplicity {}", self.label, self.multiplicity),
            ));
        }
        if self.hyperfine.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(
                "finite hyperfine tensor",
                format!("nucleus {idx} ({}) has a non-finite entry", self.label),
            ));
        }
        Ok(())
    }
}

/// Full description of a radical pair: nuclei, optional electron–electron
/// dipolar tensor (mT), reaction rates (μs⁻¹) and g-factors.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinSystem {
    name: String,
    nuclei: Vec<Nucleus>,
    eed: Option<Matrix3<f64>>,
    k_b: f64,
    k_f: f64,
    g_factor: f64,
    zeeman_g: [f64; 2],
    dim_cap: usize,
}

/// Builder for [`SpinSystem`]; `build` enforces every invariant.
#[derive(Clone, Debug)]
pub struct SpinSystemBuilder {
    name: String,
    nuclei: Vec<Nucleus>,
    eed: Option<Matrix3<f64>>,
    k_b: f64,
    k_f: f64,
    g_factor: f64,
    zeeman_g: [Option<f64>; 2],
    dim_cap: usize,
}

impl SpinSystemBuilder {
    pub fn nucleus(mut self, nucleus: Nucleus) -> Self {
        self.nuclei.push(nucleus);
        self
    }

    pub fn nuclei(mut self, nuclei: impl IntoIterator<Item = Nucleus>) -> Self {
        self.nuclei.extend(nuclei);
        self
    }

    pub fn eed(mut self, eed: Option<Matrix3<f64>>) -> Self {
        self.eed = eed;
        self
    }

    pub fn rates(mut self, k_b: f64, k_f: f64) -> Self {
        self.k_b = k_b;
        self.k_f = k_f;
        self
    }

    pub fn g_factor(mut self, g: f64) -> Self {
        self.g_factor = g;
        self
    }

    /// Per-radical g-factor for the Zeeman term; defaults to the shared one.
    pub fn zeeman_g(mut self, radical: Radical, g: f64) -> Self {
        self.zeeman_g[radical.index()] = Some(g);
        self
    }

    pub fn dim_cap(mut self, cap: usize) -> Self {
        self.dim_cap = cap;
        self
    }

    pub fn build(self) -> Result<SpinSystem> {
        for (idx, n) in self.nuclei.iter().enumerate() {
            n.validate(idx)?;
        }
        if !(self.k_b.is_finite() && self.k_b > 0.0) {
            return Err(Error::validation("k_b > 0", format!("k_b = {}", self.k_b)));
        }
        if !(self.k_f.is_finite() && self.k_f > 0.0) {
            return Err(Error::validation("k_f > 0", format!("k_f = {}", self.k_f)));
        }
        let g = self.g_factor;
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::validation("g_factor > 0", format!("g_factor = {g}")));
        }
        let zeeman_g = [self.zeeman_g[0].unwrap_or(g), self.zeeman_g[1].unwrap_or(g)];
        if zeeman_g.iter().any(|z| !z.is_finite()) {
            return Err(Error::validation("finite Zeeman g", format!("{zeeman_g:?}")));
        }
        if let Some(d) = &self.eed {
            validate_eed(d)?;
        }
        let dim = hilbert_dim(&self.nuclei).ok_or(Error::Capacity {
            dim: usize::MAX,
            cap: self.dim_cap,
        })?;
        if dim > self.dim_cap {
            return Err(Error::Capacity { dim, cap: self.dim_cap });
        }
        Ok(SpinSystem {
            name: self.name,
            nuclei: self.nuclei,
            eed: self.eed,
            k_b: self.k_b,
            k_f: self.k_f,
            g_factor: g,
            zeeman_g,
            dim_cap: self.dim_cap,
        })
    }
}

fn hilbert_dim(nuclei: &[Nucleus]) -> Option<usize> {
    nuclei.iter().try_fold(4usize, |acc, n| acc.checked_mul(n.multiplicity))
}

fn validate_eed(d: &Matrix3<f64>) -> Result<()> {
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("finite EED tensor", "non-finite entry"));
    }
    let scale = d.norm().max(f64::MIN_POSITIVE);
    let asym = (d - d.transpose()).norm() / scale;
    if asym > EED_TOLERANCE {
        return Err(Error::validation(
            "EED tensor symmetric",
            format!("relative asymmetry {asym:e} exceeds {EED_TOLERANCE:e}"),
        ));
    }
    let trace = d.trace().abs() / scale;
    if trace > EED_TOLERANCE {
        return Err(Error::validation(
            "EED tensor traceless",
            format!("relative trace {trace:e} exceeds {EED_TOLERANCE:e}"),
        ));
    }
    Ok(())
}

impl SpinSystem {
    pub fn builder(name: impl Into<String>) -> SpinSystemBuilder {
        SpinSystemBuilder {
            name: name.into(),
            nuclei: Vec::new(),
            eed: None,
            k_b: DEFAULT_RATE_PER_US,
            k_f: DEFAULT_RATE_PER_US,
            g_factor: DEFAULT_G_FACTOR,
            zeeman_g: [None, None],
            dim_cap: DEFAULT_DIM_CAP,
        }
    }

    /// A builder preloaded with this system's contents.
    pub fn to_builder(&self) -> SpinSystemBuilder {
        SpinSystemBuilder {
            name: self.name.clone(),
            nuclei: self.nuclei.clone(),
            eed: self.eed,
            k_b: self.k_b,
            k_f: self.k_f,
            g_factor: self.g_factor,
            zeeman_g: [Some(self.zeeman_g[0]), Some(self.zeeman_g[1])],
            dim_cap: self.dim_cap,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nuclei(&self) -> &[Nucleus] {
        &self.nuclei
    }

    pub fn eed(&self) -> Option<&Matrix3<f64>> {
        self.eed.as_ref()
    }

    pub fn k_b(&self) -> f64 {
        self.k_b
    }

    pub fn k_f(&self) -> f64 {
        self.k_f
    }

    pub fn g_factor(&self) -> f64 {
        self.g_factor
    }

    pub fn zeeman_g(&self, radical: Radical) -> f64 {
        self.zeeman_g[radical.index()]
    }

    pub fn dim_cap(&self) -> usize {
        self.dim_cap
    }

    /// Hilbert-space dimension `4 × Π multiplicities`.
    pub fn dim(&self) -> usize {
        hilbert_dim(&self.nuclei).expect("dimension validated at construction")
    }

    /// Dimension of the nuclear subspace.
    pub fn nuclear_dim(&self) -> usize {
        self.dim() / 4
    }

    /// Conversion from mT to rad·μs⁻¹ for coupling tensors.
    pub fn tensor_scale(&self) -> f64 {
        gyromagnetic_ratio(self.g_factor)
    }

    /// Indices into [`nuclei`](Self::nuclei) in global site order: nuclei of A
    /// in list order, then nuclei of B in list order.
    pub fn nuclei_in_site_order(&self) -> Vec<usize> {
        let a = self.nuclei.iter().enumerate().filter(|(_, n)| n.radical == Radical::A);
        let b = self.nuclei.iter().enumerate().filter(|(_, n)| n.radical == Radical::B);
        a.chain(b).map(|(i, _)| i).collect()
    }

    /// Local dimensions of all sites: electron A, electron B, then nuclei in
    /// site order.
    pub fn site_dims(&self) -> Vec<usize> {
        let mut dims = vec![2, 2];
        dims.extend(
            self.nuclei_in_site_order()
                .into_iter()
                .map(|i| self.nuclei[i].multiplicity),
        );
        dims
    }

    /// Global site index of the nucleus at `nucleus_idx` in the list.
    pub fn site_of_nucleus(&self, nucleus_idx: usize) -> Option<usize> {
        self.nuclei_in_site_order()
            .iter()
            .position(|&i| i == nucleus_idx)
            .map(|p| p + 2)
    }

    /// Global site index of the electron on `radical`.
    pub fn electron_site(radical: Radical) -> usize {
        radical.index()
    }

    pub fn has_eed(&self) -> bool {
        self.eed.is_some()
    }
}

/// Keeps the `n_keep` nuclei with the largest hyperfine eigenvalue magnitude,
/// in their original relative order. Ties go to the earlier nucleus.
pub fn rank_and_truncate(system: &SpinSystem, n_keep: usize) -> Result<SpinSystem> {
    let total = system.nuclei.len();
    if n_keep > total {
        return Err(Error::invalid(format!(
            "n_keep = {n_keep} exceeds the {total} nuclei of {}",
            system.name
        )));
    }
    let mut order: Vec<usize> = (0..total).collect();
    let strength: Vec<f64> = system.nuclei.iter().map(Nucleus::coupling_strength).collect();
    order.sort_by(|&a, &b| strength[b].total_cmp(&strength[a]).then(a.cmp(&b)));
    let mut keep: Vec<usize> = order[..n_keep].to_vec();
    keep.sort_unstable();
    let mut out = system.clone();
    out.nuclei = keep.into_iter().map(|i| system.nuclei[i].clone()).collect();
    Ok(out)
}

/// Composite model for fast degenerate hopping of the B radical between two
/// sites: B-radical hyperfine tensors of each site are scaled by their
/// residence weight and both lists kept; EED tensors are weight-averaged.
/// Both systems must share identical A-radical nuclei.
pub fn composite_average(first: &SpinSystem, second: &SpinSystem, weight_first: f64, name: &str) -> Result<SpinSystem> {
    if !(0.0..=1.0).contains(&weight_first) {
        return Err(Error::invalid(format!(
            "residence weight {weight_first} outside [0, 1]"
        )));
    }
    let w = [weight_first, 1.0 - weight_first];
    let a_of =
        |s: &SpinSystem| -> Vec<Nucleus> { s.nuclei.iter().filter(|n| n.radical == Radical::A).cloned().collect() };
    if a_of(first) != a_of(second) {
        return Err(Error::invalid("composite sites must share the A-radical nuclei"));
    }
    let mut nuclei = a_of(first);
    for (s, weight) in [first, second].into_iter().zip(w) {
        nuclei.extend(s.nuclei.iter().filter(|n| n.radical == Radical::B).map(|n| Nucleus {
            label: format!("{}:{}", s.name, n.label),
            hyperfine: n.hyperfine * weight,
            ..n.clone()
        }));
    }
    let eed = match (first.eed, second.eed) {
        (Some(d1), Some(d2)) => Some(d1 * w[0] + d2 * w[1]),
        (None, None) => None,
        _ => {
            return Err(Error::invalid(
                "composite sites must both have or both lack an EED tensor",
            ))
        }
    };
    first
        .to_builder()
        .eed(eed)
        .map_name(name)
        .replace_nuclei(nuclei)
        .build()
}

impl SpinSystemBuilder {
    fn map_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    fn replace_nuclei(mut self, nuclei: Vec<Nucleus>) -> Self {
        self.nuclei = nuclei;
        self
    }
}

/// Applied field: magnitude `b0` in mT, polar angle `theta` and azimuth
/// `phi` in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldOrientation {
    pub b0: f64,
    pub theta: f64,
    pub phi: f64,
}

impl FieldOrientation {
    /// Validates `b0 >= 0` and `theta ∈ [0, π]`; `phi` is wrapped into `[0, 2π)`.
    pub fn new(b0: f64, theta: f64, phi: f64) -> Result<Self> {
        if !(b0.is_finite() && b0 >= 0.0) {
            return Err(Error::invalid(format!("field magnitude must be >= 0, got {b0}")));
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::invalid(format!("theta must lie in [0, pi], got {theta}")));
        }
        if !phi.is_finite() {
            return Err(Error::invalid("phi must be finite"));
        }
        let mut phi = phi.rem_euclid(2.0 * PI);
        if phi >= 2.0 * PI {
            phi = 0.0;
        }
        Ok(FieldOrientation { b0, theta, phi })
    }

    pub fn from_degrees(b0: f64, theta_deg: f64, phi_deg: f64) -> Result<Self> {
        Self::new(b0, theta_deg.to_radians(), phi_deg.to_radians())
    }

    /// Field vector `B0 (sinθ cosφ, sinθ sinφ, cosθ)` in mT.
    pub fn field_vector(&self) -> Vector3<f64> {
        field_vector(self.b0, self.theta, self.phi)
    }
}

/// Field vector for arbitrary angles (no range checks).
pub fn field_vector(b0: f64, theta: f64, phi: f64) -> Vector3<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vector3::new(b0 * st * cp, b0 * st * sp, b0 * ct)
}

/// `∂B/∂θ` in mT·rad⁻¹.
pub fn field_vector_dtheta(b0: f64, theta: f64, phi: f64) -> Vector3<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vector3::new(b0 * ct * cp, b0 * ct * sp, -b0 * st)
}
