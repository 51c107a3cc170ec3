//! Angular-momentum matrices, operator storage, and Kronecker embedding into
//! the composite spin space.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Operators up to this dimension are stored densely.
pub const DENSE_DIM_LIMIT: usize = 256;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Cartesian components of a spin operator.
#[derive(Clone, Debug)]
pub struct SpinMatrices {
    pub x: CMatrix,
    pub y: CMatrix,
    pub z: CMatrix,
}

impl SpinMatrices {
    pub fn components(&self) -> [&CMatrix; 3] {
        [&self.x, &self.y, &self.z]
    }
}

/// Spin matrices for a particle of the given multiplicity `2s + 1`, in the
/// basis `m = s, s-1, ..., -s`.
pub fn angular_momentum_ops(multiplicity: usize) -> Result<SpinMatrices> {
    if multiplicity < 2 {
        return Err(Error::invalid(format!(
            "spin multiplicity must be >= 2, got {multiplicity}"
        )));
    }
    let n = multiplicity;
    let s = (n as f64 - 1.0) / 2.0;
    let mut x = CMatrix::zeros(n, n);
    let mut y = CMatrix::zeros(n, n);
    let mut z = CMatrix::zeros(n, n);
    for k in 0..n {
        let m = s - k as f64;
        z[(k, k)] = C64::new(m, 0.0);
        if k + 1 < n {
            // <m|S+|m-1>
            let mp = m - 1.0;
            let raise = (s * (s + 1.0) - mp * (mp + 1.0)).sqrt();
            x[(k, k + 1)] = C64::new(raise / 2.0, 0.0);
            x[(k + 1, k)] = C64::new(raise / 2.0, 0.0);
            y[(k, k + 1)] = C64::new(0.0, -raise / 2.0);
            y[(k + 1, k)] = C64::new(0.0, raise / 2.0);
        }
    }
    Ok(SpinMatrices { x, y, z })
}

/// Compressed sparse row matrix with complex entries.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < nrows && c < ncols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        let mut m = CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        };
        m.prune();
        m
    }

    fn prune(&mut self) {
        if self.values.iter().all(|v| *v != ZERO) {
            return;
        }
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.values[k] != ZERO {
                    indices.push(self.indices[k]);
                    values.push(self.values[k]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let range = self.indptr[row]..self.indptr[row + 1];
        match self.indices[range.clone()].binary_search(&col) {
            Ok(k) => self.values[range.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows)
            .flat_map(move |r| (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k])))
    }

    /// `y = self * x`
    pub fn mul_vec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *out = acc;
        }
    }

    /// Sparse times dense.
    pub fn mul_dense(&self, b: &CMatrix) -> CMatrix {
        assert_eq!(b.nrows(), self.ncols);
        let mut out = CMatrix::zeros(self.nrows, b.ncols());
        for j in 0..b.ncols() {
            let col = b.column(j);
            for r in 0..self.nrows {
                let mut acc = ZERO;
                for k in self.indptr[r]..self.indptr[r + 1] {
                    acc += self.values[k] * col[self.indices[k]];
                }
                out[(r, j)] = acc;
            }
        }
        out
    }

    /// Dense times sparse.
    pub fn left_mul_dense(&self, a: &CMatrix) -> CMatrix {
        assert_eq!(a.ncols(), self.nrows);
        let mut out = CMatrix::zeros(a.nrows(), self.ncols);
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[k];
                let v = self.values[k];
                let src = a.column(r);
                let mut dst = out.column_mut(c);
                dst.axpy(v, &src, ONE);
            }
        }
        out
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn from_dense(m: &CMatrix) -> Self {
        let mut t = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                if m[(r, c)] != ZERO {
                    t.push((r, c, m[(r, c)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t)
    }
}

/// Square operator on a spin space, stored densely up to
/// [`DENSE_DIM_LIMIT`] and as CSR above it.
#[derive(Clone, Debug, PartialEq)]
pub enum OperatorMatrix {
    Dense(CMatrix),
    Sparse(CsrMatrix),
}

impl OperatorMatrix {
    /// Builds from triplets, picking storage by dimension.
    pub fn from_triplets(dim: usize, triplets: Vec<(usize, usize, C64)>) -> Self {
        if dim <= DENSE_DIM_LIMIT {
            let mut m = CMatrix::zeros(dim, dim);
            for (r, c, v) in triplets {
                m[(r, c)] += v;
            }
            OperatorMatrix::Dense(m)
        } else {
            OperatorMatrix::Sparse(CsrMatrix::from_triplets(dim, dim, triplets))
        }
    }

    pub fn from_dense(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::invalid(format!(
                "operator must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(OperatorMatrix::Dense(m))
    }

    pub fn dim(&self) -> usize {
        match self {
            OperatorMatrix::Dense(m) => m.nrows(),
            OperatorMatrix::Sparse(m) => m.nrows(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, OperatorMatrix::Sparse(_))
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        match self {
            OperatorMatrix::Dense(m) => m[(row, col)],
            OperatorMatrix::Sparse(m) => m.get(row, col),
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        match self {
            OperatorMatrix::Dense(m) => m.clone(),
            OperatorMatrix::Sparse(m) => m.to_dense(),
        }
    }

    /// Borrow the dense matrix, converting only when sparse.
    pub fn dense_cow(&self) -> std::borrow::Cow<'_, CMatrix> {
        match self {
            OperatorMatrix::Dense(m) => std::borrow::Cow::Borrowed(m),
            OperatorMatrix::Sparse(m) => std::borrow::Cow::Owned(m.to_dense()),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// `self * b`
    pub fn mul_dense(&self, b: &CMatrix) -> CMatrix {
        match self {
            OperatorMatrix::Dense(m) => m * b,
            OperatorMatrix::Sparse(m) => m.mul_dense(b),
        }
    }

    /// `a * self`
    pub fn left_mul_dense(&self, a: &CMatrix) -> CMatrix {
        match self {
            OperatorMatrix::Dense(m) => a * m,
            OperatorMatrix::Sparse(m) => m.left_mul_dense(a),
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        match self {
            OperatorMatrix::Dense(m) => {
                let mut t = Vec::new();
                for c in 0..m.ncols() {
                    for r in 0..m.nrows() {
                        if m[(r, c)] != ZERO {
                            t.push((r, c, m[(r, c)]));
                        }
                    }
                }
                t
            }
            OperatorMatrix::Sparse(m) => m.triplets().collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match self {
            OperatorMatrix::Dense(m) => m.norm(),
            OperatorMatrix::Sparse(m) => m.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt(),
        }
    }

    /// `‖A − A†‖_F / max(‖A‖_F, 1)`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (r, c, v) in self.triplets() {
            worst += (v - self.get(c, r).conj()).norm_sqr();
        }
        worst.sqrt() / self.frobenius_norm().max(1.0)
    }
}

/// Kronecker embedding of an operator acting on the ordered `sites` of a
/// product space with local dimensions `dims` (site 0 most significant).
/// The local operator's own tensor order follows `sites`.
pub fn embed_local(local: &CMatrix, sites: &[usize], dims: &[usize]) -> Result<Vec<(usize, usize, C64)>> {
    let local_dim: usize = sites
        .iter()
        .map(|&s| {
            dims.get(s)
                .copied()
                .ok_or_else(|| Error::invalid(format!("site {s} out of range")))
        })
        .product::<Result<usize>>()?;
    if local.nrows() != local_dim || local.ncols() != local_dim {
        return Err(Error::invalid(format!(
            "local operator is {}x{}, sites need {local_dim}",
            local.nrows(),
            local.ncols()
        )));
    }
    for (k, s) in sites.iter().enumerate() {
        if sites[..k].contains(s) {
            return Err(Error::invalid(format!("site {s} listed twice")));
        }
    }
    let full: usize = dims.iter().product();
    let mut strides = vec![1usize; dims.len()];
    for s in (0..dims.len().saturating_sub(1)).rev() {
        strides[s] = strides[s + 1] * dims[s + 1];
    }
    let mut local_strides = vec![1usize; sites.len()];
    for k in (0..sites.len().saturating_sub(1)).rev() {
        local_strides[k] = local_strides[k + 1] * dims[sites[k + 1]];
    }
    // column-wise nonzeros of the local operator
    let mut nonzero_by_col: Vec<Vec<(usize, C64)>> = vec![Vec::new(); local_dim];
    for c in 0..local_dim {
        for r in 0..local_dim {
            let v = local[(r, c)];
            if v != ZERO {
                nonzero_by_col[c].push((r, v));
            }
        }
    }
    let mut out = Vec::new();
    for x in 0..full {
        let mut lc = 0;
        let mut base = x;
        for (k, &s) in sites.iter().enumerate() {
            let digit = (x / strides[s]) % dims[s];
            lc += digit * local_strides[k];
            base -= digit * strides[s];
        }
        for &(lr, v) in &nonzero_by_col[lc] {
            let mut y = base;
            for (k, &s) in sites.iter().enumerate() {
                let digit = (lr / local_strides[k]) % dims[s];
                y += digit * strides[s];
            }
            out.push((y, x, v));
        }
    }
    Ok(out)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Complex matrix product through four real products, which use the
/// blocked real GEMM kernel.
pub fn cmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "dimension mismatch in product");
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    CMatrix::from_fn(a.nrows(), b.ncols(), |r, c| C64::new(re[(r, c)], im[(r, c)]))
}

/// Dense Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}
