//! Complex Schur decomposition `A = Q T Q†` by Hessenberg reduction followed
//! by single-shift implicit QR sweeps.

use crate::error::{Error, Result};
use crate::spin::operators::{CMatrix, C64};

const MAX_SWEEPS_PER_EIGENVALUE: usize = 40;

/// Unitary `q` and upper-triangular `t` with `a = q t q†`.
#[derive(Clone, Debug)]
pub struct ComplexSchur {
    pub q: CMatrix,
    pub t: CMatrix,
}

impl ComplexSchur {
    pub fn new(a: &CMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::invalid("Schur decomposition needs a square matrix"));
        }
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        match hessenberg_qr(a) {
            Some(s) => Ok(s),
            None => {
                let (q, t) = a
                    .clone()
                    .try_schur(f64::EPSILON, 0)
                    .ok_or_else(|| Error::NonConvergence {
                        method: "complex Schur".into(),
                        residual: f64::NAN,
                    })?
                    .unpack();
                Ok(ComplexSchur { q, t })
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        (0..self.dim()).map(|i| self.t[(i, i)]).collect()
    }
}

/// Column-major square matrix view for the inner loops.
struct Work {
    n: usize,
    d: Vec<C64>,
}

impl Work {
    #[inline(always)]
    fn at(&self, r: usize, c: usize) -> C64 {
        self.d[r + c * self.n]
    }

    #[inline(always)]
    fn set(&mut self, r: usize, c: usize, v: C64) {
        self.d[r + c * self.n] = v;
    }

    /// Rows `k`, `k+1` ← G·rows over columns `c0..n`.
    fn rotate_rows(&mut self, k: usize, c0: usize, c: f64, s: C64) {
        let n = self.n;
        let sc = s.conj();
        for col in c0..n {
            let base = col * n;
            let a = self.d[base + k];
            let b = self.d[base + k + 1];
            self.d[base + k] = a * c + s * b;
            self.d[base + k + 1] = b * c - sc * a;
        }
    }

    /// Columns `k`, `k+1` ← columns·G† over rows `0..r1`.
    fn rotate_cols(&mut self, k: usize, r1: usize, c: f64, s: C64) {
        let n = self.n;
        let sc = s.conj();
        let (left, right) = self.d.split_at_mut((k + 1) * n);
        let ck = &mut left[k * n..k * n + r1];
        let ck1 = &mut right[..r1];
        for (a, b) in ck.iter_mut().zip(ck1.iter_mut()) {
            let (x, y) = (*a, *b);
            *a = x * c + y * sc;
            *b = y * c - x * s;
        }
    }
}

/// `(c, s)` with `c` real such that `[[c, s], [−s̄, c]]·[x; y] = [r; 0]`.
#[inline]
fn givens(x: C64, y: C64) -> (f64, C64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    if ax == 0.0 {
        return (0.0, C64::new(1.0, 0.0));
    }
    let r = ax.hypot(ay);
    (ax / r, (x / ax) * y.conj() / r)
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m = (a + d) * 0.5;
    let (e1, e2) = (m + disc, m - disc);
    if (e1 - d).norm() <= (e2 - d).norm() {
        e1
    } else {
        e2
    }
}

/// Householder reduction to upper Hessenberg form, accumulating the
/// reflectors into `q`.
fn hessenberg(h: &mut Work, q: &mut Work) {
    let n = h.n;
    let zero = C64::new(0.0, 0.0);
    let mut v = vec![zero; n];
    let mut w = vec![zero; n];
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let col = &h.d[k * n + k + 1..k * n + n];
        let tail: f64 = col[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let x0 = col[0];
        let norm = (tail + x0.norm_sqr()).sqrt();
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let beta = -phase * norm;
        v[..m].copy_from_slice(col);
        v[0] -= beta;
        let vv: f64 = v[..m].iter().map(|z| z.norm_sqr()).sum();
        let scale = 2.0 / vv;
        // H A on columns k+1..n (column k is set directly)
        for j in (k + 1)..n {
            let cj = &mut h.d[j * n + k + 1..j * n + n];
            let mut s = zero;
            for (vi, ci) in v[..m].iter().zip(cj.iter()) {
                s += vi.conj() * ci;
            }
            s *= scale;
            for (vi, ci) in v[..m].iter().zip(cj.iter_mut()) {
                *ci -= s * vi;
            }
        }
        h.set(k + 1, k, beta);
        for r in (k + 2)..n {
            h.set(r, k, zero);
        }
        // A H and Q H on columns k+1..n
        for mat in [&mut *h, &mut *q] {
            w.iter_mut().for_each(|x| *x = zero);
            for (j, vj) in v[..m].iter().enumerate() {
                let cj = &mat.d[(k + 1 + j) * n..(k + 2 + j) * n];
                for (wi, ci) in w.iter_mut().zip(cj) {
                    *wi += ci * vj;
                }
            }
            for (j, vj) in v[..m].iter().enumerate() {
                let f = vj.conj() * scale;
                let cj = &mut mat.d[(k + 1 + j) * n..(k + 2 + j) * n];
                for (wi, ci) in w.iter().zip(cj.iter_mut()) {
                    *ci -= wi * f;
                }
            }
        }
    }
}

fn hessenberg_qr(a: &CMatrix) -> Option<ComplexSchur> {
    let n = a.nrows();
    if n == 0 {
        return Some(ComplexSchur {
            q: CMatrix::zeros(0, 0),
            t: CMatrix::zeros(0, 0),
        });
    }
    let mut h = Work {
        n,
        d: a.as_slice().to_vec(),
    };
    let mut q = Work {
        n,
        d: CMatrix::identity(n, n).as_slice().to_vec(),
    };
    hessenberg(&mut h, &mut q);
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let ulp = f64::EPSILON;
    let small = f64::MIN_POSITIVE * (n as f64 / ulp);

    let mut hi = n - 1;
    let mut iter = 0usize;
    while hi > 0 {
        // locate the active block [lo, hi]
        let mut lo = hi;
        while lo > 0 {
            let sub = h.at(lo, lo - 1).norm();
            let mut diag = h.at(lo - 1, lo - 1).norm() + h.at(lo, lo).norm();
            if diag == 0.0 {
                diag = scale;
            }
            if sub <= (ulp * diag).max(small) {
                h.set(lo, lo - 1, C64::new(0.0, 0.0));
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > MAX_SWEEPS_PER_EIGENVALUE {
            return None;
        }
        let mu = if iter.is_multiple_of(10) {
            h.at(hi, hi) + C64::new(0.75 * h.at(hi, hi - 1).re.abs(), 0.0)
        } else {
            wilkinson_shift(h.at(hi - 1, hi - 1), h.at(hi - 1, hi), h.at(hi, hi - 1), h.at(hi, hi))
        };
        for k in lo..hi {
            let (x, y) = if k == lo {
                (h.at(lo, lo) - mu, h.at(lo + 1, lo))
            } else {
                (h.at(k, k - 1), h.at(k + 1, k - 1))
            };
            let (c, s) = givens(x, y);
            let c0 = if k == lo { lo } else { k - 1 };
            h.rotate_rows(k, c0, c, s);
            if k > lo {
                h.set(k + 1, k - 1, C64::new(0.0, 0.0));
            }
            let r1 = (k + 3).min(hi + 1);
            h.rotate_cols(k, r1, c, s);
            q.rotate_cols(k, n, c, s);
        }
    }
    let t = CMatrix::from_vec(n, n, h.d);
    let q = CMatrix::from_vec(n, n, q.d);
    // the rotations act on full rows to the right, so t is upper triangular
    Some(ComplexSchur {
        q,
        t: upper_triangle(t),
    })
}

fn upper_triangle(mut t: CMatrix) -> CMatrix {
    let n = t.nrows();
    for c in 0..n {
        for r in (c + 1)..n {
            t[(r, c)] = C64::new(0.0, 0.0);
        }
    }
    t
}
