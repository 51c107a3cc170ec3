//! Restarted GMRES with right preconditioning.

use crate::error::{Error, Result};
use crate::spin::operators::C64;

#[derive(Clone, Copy, Debug)]
pub struct GmresOptions {
    pub restart: usize,
    pub max_iterations: usize,
    pub rel_tolerance: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions {
            restart: 40,
            max_iterations: 4000,
            rel_tolerance: 1e-10,
        }
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Jacobi preconditioner from a diagonal.
pub fn jacobi(diag: &[C64]) -> impl Fn(&[C64]) -> Vec<C64> + '_ {
    move |u: &[C64]| {
        u.iter()
            .zip(diag)
            .map(|(a, d)| if d.norm() > 0.0 { a / d } else { *a })
            .collect()
    }
}

/// Solves `op(x) = b` with right preconditioner `precond ≈ op⁻¹`.
/// Returns the solution and the final relative residual.
pub fn gmres<F, P>(op: F, precond: P, b: &[C64], opts: GmresOptions) -> Result<(Vec<C64>, f64)>
where
    F: Fn(&[C64]) -> Vec<C64>,
    P: Fn(&[C64]) -> Vec<C64>,
{
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((vec![C64::new(0.0, 0.0); n], 0.0));
    }

    let mut x = vec![C64::new(0.0, 0.0); n];
    let mut iterations = 0;
    let mut rel = 1.0;
    let m = opts.restart.max(1);
    while iterations < opts.max_iterations {
        let ax = op(&x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= opts.rel_tolerance {
            return Ok((x, rel));
        }
        let mut basis: Vec<Vec<C64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess = vec![vec![C64::new(0.0, 0.0); m]; m + 1];
        let mut cs = vec![0.0f64; m];
        let mut sn = vec![C64::new(0.0, 0.0); m];
        let mut g = vec![C64::new(0.0, 0.0); m + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..m {
            iterations += 1;
            let mut w = op(&precond(&basis[k]));
            for (j, v) in basis.iter().enumerate() {
                let h = dot(v, &w);
                hess[j][k] = h;
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= h * vi;
                }
            }
            let hn = norm(&w);
            hess[k + 1][k] = C64::new(hn, 0.0);
            for j in 0..k {
                let (a, bb) = (hess[j][k], hess[j + 1][k]);
                hess[j][k] = a * cs[j] + sn[j] * bb;
                hess[j + 1][k] = bb * cs[j] - sn[j].conj() * a;
            }
            let (a, bb) = (hess[k][k], hess[k + 1][k]);
            let r = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if r == 0.0 {
                cs[k] = 1.0;
                sn[k] = C64::new(0.0, 0.0);
            } else if a.norm() == 0.0 {
                cs[k] = 0.0;
                sn[k] = C64::new(1.0, 0.0);
            } else {
                cs[k] = a.norm() / r;
                sn[k] = (a / a.norm()) * bb.conj() / r;
            }
            hess[k][k] = a * cs[k] + sn[k] * bb;
            hess[k + 1][k] = C64::new(0.0, 0.0);
            g[k + 1] = -sn[k].conj() * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            rel = g[k + 1].norm() / bnorm;
            if rel <= opts.rel_tolerance || hn == 0.0 || iterations >= opts.max_iterations {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        // back substitution for the Krylov coefficients
        let mut yk = vec![C64::new(0.0, 0.0); k_used];
        for i in (0..k_used).rev() {
            let mut acc = g[i];
            for j in (i + 1)..k_used {
                acc -= hess[i][j] * yk[j];
            }
            yk[i] = acc / hess[i][i];
        }
        let mut u = vec![C64::new(0.0, 0.0); n];
        for (coef, v) in yk.iter().zip(&basis) {
            for (ui, vi) in u.iter_mut().zip(v) {
                *ui += coef * vi;
            }
        }
        for (xi, di) in x.iter_mut().zip(precond(&u)) {
            *xi += di;
        }
    }
    let ax = op(&x);
    let res: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let final_rel = norm(&res) / bnorm;
    if final_rel <= opts.rel_tolerance {
        return Ok((x, final_rel));
    }
    Err(Error::NonConvergence {
        method: "GMRES".into(),
        residual: final_rel.max(rel),
    })
}
