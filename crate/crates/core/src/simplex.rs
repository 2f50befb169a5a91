//! Dense tableau simplex for `max cᵀx s.t. Ax ≤ b, x ≥ 0` with `b ≥ 0`.
//!
//! The slack basis is feasible from the start, so there is no phase one.
//! Pivoting follows Bland's rule (lowest-index entering column, ties in the
//! ratio test broken by lowest basic-variable index), which rules out
//! cycling on degenerate vertices.

const PIVOT_EPS: f64 = 1e-12;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Unbounded,
}

pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpOutcome {
    let n = c.len();
    let m = a.len();
    debug_assert!(b.iter().all(|&v| v >= 0.0), "slack basis must be feasible");
    let width = n + m + 1;
    // rows 0..m are constraints, last column is the rhs
    let mut t = vec![0.0; m * width];
    for i in 0..m {
        t[i * width..i * width + n].copy_from_slice(&a[i]);
        t[i * width + n + i] = 1.0;
        t[i * width + n + m] = b[i];
    }
    // reduced costs c_j - z_j
    let mut cost: Vec<f64> = c.iter().copied().chain(std::iter::repeat_n(0.0, m)).collect();
    let mut objective = 0.0;
    let mut basis: Vec<usize> = (n..n + m).collect();

    for _ in 0..MAX_PIVOTS {
        let Some(enter) = (0..n + m).find(|&j| cost[j] > PIVOT_EPS) else {
            break;
        };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            let aij = t[i * width + enter];
            if aij > PIVOT_EPS {
                let ratio = t[i * width + n + m] / aij;
                let better = match leave {
                    None => true,
                    Some(l) => ratio < best - 1e-15 || (ratio <= best + 1e-15 && basis[i] < basis[l]),
                };
                if better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(r) = leave else {
            return LpOutcome::Unbounded;
        };
        let piv = t[r * width + enter];
        for j in 0..width {
            t[r * width + j] /= piv;
        }
        for i in 0..m {
            if i != r {
                let f = t[i * width + enter];
                if f != 0.0 {
                    for j in 0..width {
                        t[i * width + j] -= f * t[r * width + j];
                    }
                }
            }
        }
        let f = cost[enter];
        for j in 0..n + m {
            cost[j] -= f * t[r * width + j];
        }
        objective += f * t[r * width + n + m];
        basis[r] = enter;
    }

    let mut x = vec![0.0; n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = t[i * width + n + m];
        }
    }
    LpOutcome::Optimal { x, value: objective }
}
