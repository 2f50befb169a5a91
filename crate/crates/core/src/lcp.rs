//! Linear complementarity step `z = w + R·dy`, `z ≥ 0`, `dy ≥ 0`,
//! `⟨z, dy⟩ = 0`.
//!
//! The general solver is Lemke's complementary pivoting with covering vector
//! `1`. When R is an M-matrix the least-element solution is reached by
//! projected Gauss-Seidel sweeps, which is much cheaper inside a simulation
//! loop; the result is still checked and Lemke takes over if the sweeps stall.

use crate::classify::is_m_matrix;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

const PIVOT_EPS: f64 = 1e-13;
const MAX_SWEEPS: usize = 500;

/// Reusable solver for a fixed R, avoiding per-call allocation.
#[derive(Debug, Clone)]
pub struct LcpSolver {
    n: usize,
    r: Matrix,
    m_matrix: bool,
    tableau: Vec<f64>,
    basis: Vec<usize>,
}

impl LcpSolver {
    pub fn new(r: &Matrix) -> Result<Self> {
        let n = r.dim();
        let m_matrix = n <= crate::classify::MAX_ENUM_DIM && is_m_matrix(r)?;
        Ok(Self {
            n,
            r: r.clone(),
            m_matrix,
            tableau: vec![0.0; n * (2 * n + 2)],
            basis: vec![0; n],
        })
    }

    pub fn uses_fast_path(&self) -> bool {
        self.m_matrix
    }

    /// Solves for `dy` and writes `z = w + R·dy`.
    pub fn solve_into(&mut self, w: &[f64], z: &mut [f64], dy: &mut [f64]) -> Result<()> {
        let n = self.n;
        debug_assert!(w.len() == n && z.len() == n && dy.len() == n);
        if w.iter().all(|&v| v >= 0.0) {
            dy.fill(0.0);
            z.copy_from_slice(w);
            return Ok(());
        }
        if !(self.m_matrix && self.sweep(w, dy)) {
            self.lemke(w, dy)?;
        }
        for (i, zi) in z.iter_mut().enumerate() {
            let row = self.r.row(i);
            *zi = w[i] + row.iter().zip(dy.iter()).map(|(a, b)| a * b).sum::<f64>();
        }
        Ok(())
    }

    /// Projected Gauss-Seidel from `dy = 0`; monotone for M-matrices.
    fn sweep(&self, w: &[f64], dy: &mut [f64]) -> bool {
        let n = self.n;
        dy.fill(0.0);
        let scale = 1.0 + w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for _ in 0..MAX_SWEEPS {
            let mut change = 0.0f64;
            for i in 0..n {
                let row = self.r.row(i);
                let mut s = w[i];
                for j in 0..n {
                    if j != i {
                        s += row[j] * dy[j];
                    }
                }
                let next = (-s / row[i]).max(0.0);
                change = change.max((next - dy[i]).abs());
                dy[i] = next;
            }
            if change <= 1e-15 * scale {
                return true;
            }
        }
        false
    }

    fn lemke(&mut self, q: &[f64], y: &mut [f64]) -> Result<()> {
        let n = self.n;
        let cols = 2 * n + 2;
        let rhs = 2 * n + 1;
        let z0 = 2 * n;
        let t = &mut self.tableau;
        // columns: w (0..n), y (n..2n), z0, rhs;  w - R y - 1 z0 = q
        t.fill(0.0);
        for i in 0..n {
            let row = &mut t[i * cols..(i + 1) * cols];
            row[i] = 1.0;
            for j in 0..n {
                row[n + j] = -self.r[(i, j)];
            }
            row[z0] = -1.0;
            row[rhs] = q[i];
            self.basis[i] = i;
        }
        let mut r = (0..n).min_by(|&a, &b| q[a].total_cmp(&q[b])).expect("n > 0");
        pivot(t, cols, n, r, z0);
        let mut leaving = std::mem::replace(&mut self.basis[r], z0);
        let max_iter = 50 * (n + 1) * (n + 1);
        for _ in 0..max_iter {
            let entering = if leaving < n { leaving + n } else { leaving - n };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..n {
                let a = t[i * cols + entering];
                if a > PIVOT_EPS {
                    let ratio = t[i * cols + rhs] / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                            if ratio < br && !tie || tie && self.basis[i] == z0 {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = best else {
                return Err(Error::LcpRayTermination { w: q.to_vec() });
            };
            r = row;
            pivot(t, cols, n, r, entering);
            leaving = std::mem::replace(&mut self.basis[r], entering);
            if leaving == z0 {
                y.fill(0.0);
                for i in 0..n {
                    let b = self.basis[i];
                    if (n..2 * n).contains(&b) {
                        y[b - n] = t[i * cols + rhs].max(0.0);
                    }
                }
                return Ok(());
            }
        }
        Err(Error::LcpRayTermination { w: q.to_vec() })
    }
}

fn pivot(t: &mut [f64], cols: usize, n: usize, r: usize, c: usize) {
    let p = t[r * cols + c];
    for k in 0..cols {
        t[r * cols + k] /= p;
    }
    for i in 0..n {
        if i == r {
            continue;
        }
        let f = t[i * cols + c];
        if f != 0.0 {
            for k in 0..cols {
                t[i * cols + k] -= f * t[r * cols + k];
            }
        }
    }
}

/// One-shot solve returning `(z, dy)`.
pub fn solve_lcp(w: &[f64], r: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
    if w.len() != r.dim() {
        return Err(Error::DimensionMismatch(format!(
            "w has length {}, R is {}x{}",
            w.len(),
            r.dim(),
            r.dim()
        )));
    }
    if !w.iter().all(|v| v.is_finite()) || !r.is_finite() {
        return Err(Error::NonFinite("LCP input"));
    }
    let mut solver = LcpSolver::new(r)?;
    let mut z = vec![0.0; w.len()];
    let mut dy = vec![0.0; w.len()];
    solver.solve_into(w, &mut z, &mut dy)?;
    Ok((z, dy))
}

/// `|⟨z, dy⟩|`.
pub fn complementarity_residual(z: &[f64], dy: &[f64]) -> f64 {
    crate::matrix::dot(z, dy).abs()
}
