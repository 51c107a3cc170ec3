//! Bartels–Stewart solver for `A X + X A† = C`.

use super::schur::ComplexSchur;
use crate::error::{Error, Result};
use crate::spin::operators::{cmul, CMatrix, C64};

/// Schur factors of `A`, reusable across right-hand sides.
#[derive(Clone, Debug)]
pub struct LyapunovSchur {
    schur: ComplexSchur,
    /// Rows of `T`, stored contiguously.
    t_rows: Vec<C64>,
}

impl LyapunovSchur {
    pub fn new(a: &CMatrix) -> Result<Self> {
        let schur = ComplexSchur::new(a)?;
        let n = schur.dim();
        let mut t_rows = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in i..n {
                t_rows[i * n + k] = schur.t[(i, k)];
            }
        }
        // T_ii + conj(T_jj) vanishes only if two eigenvalues are mirrored
        // about the imaginary axis
        let ev = schur.eigenvalues();
        let scale = ev.iter().map(|z| z.norm()).fold(1.0, f64::max);
        for (i, a) in ev.iter().enumerate() {
            for b in &ev[i..] {
                if (a + b.conj()).norm() <= 1e-13 * scale {
                    return Err(Error::Singular(format!(
                        "Lyapunov operator has a zero mode (eigenvalues {a} and {b})"
                    )));
                }
            }
        }
        Ok(LyapunovSchur { schur, t_rows })
    }

    pub fn dim(&self) -> usize {
        self.schur.dim()
    }

    pub fn q(&self) -> &CMatrix {
        &self.schur.q
    }

    pub fn schur(&self) -> &ComplexSchur {
        &self.schur
    }

    /// `Q† C Q`
    pub fn to_schur_basis(&self, c: &CMatrix) -> CMatrix {
        cmul(&cmul(&self.schur.q.adjoint(), c), &self.schur.q)
    }

    /// Solves `T Y + Y T† = C̃` for `Y` with `C̃` already in the Schur basis.
    pub fn solve_schur_basis(&self, c: &CMatrix) -> CMatrix {
        let n = self.dim();
        let t = &self.t_rows;
        // y is kept column-major (y_cols) and row-major (y_rows)
        let mut y_cols = vec![C64::new(0.0, 0.0); n * n];
        let mut y_rows = vec![C64::new(0.0, 0.0); n * n];
        let mut r = vec![C64::new(0.0, 0.0); n];
        for i in (0..n).rev() {
            let t_i = &t[i * n + i + 1..i * n + n];
            for j in 0..n {
                let col = &y_cols[j * n + i + 1..j * n + n];
                let mut acc = c[(i, j)];
                for (a, b) in t_i.iter().zip(col) {
                    acc -= a * b;
                }
                r[j] = acc;
            }
            let tii = t[i * n + i];
            for j in (0..n).rev() {
                let row_y = &y_rows[i * n + j + 1..i * n + n];
                let row_t = &t[j * n + j + 1..j * n + n];
                let mut acc = r[j];
                for (a, b) in row_y.iter().zip(row_t) {
                    acc -= a * b.conj();
                }
                let v = acc / (tii + t[j * n + j].conj());
                y_rows[i * n + j] = v;
                y_cols[j * n + i] = v;
            }
        }
        CMatrix::from_vec(n, n, y_cols)
    }

    /// Solves `A X + X A† = C`.
    pub fn solve(&self, c: &CMatrix) -> CMatrix {
        let y = self.solve_schur_basis(&self.to_schur_basis(c));
        cmul(&cmul(&self.schur.q, &y), &self.schur.q.adjoint())
    }
}
