//! Dense tableau simplex for zero-sum matrix games.
//!
//! The payoff matrix is shifted to be strictly positive, after which the
//! column player's program `max 1ᵀq s.t. Aq ≤ 1, q ≥ 0` starts feasible at the
//! slack basis. The row player's strategy is read off the slack reduced costs.

use nalgebra::DMatrix;
use serde::Serialize;

use super::OneShotError;

/// Largest action count accepted by the LP path.
pub const MAX_LP_ACTIONS: usize = 64;

const PIVOT_EPS: f64 = 1e-12;
const MAX_PIVOTS: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixGameSolution {
    pub sigma: Vec<f64>,
    pub tau: Vec<f64>,
    pub value: f64,
}

/// Exact equilibrium of the matrix game `rho` (row player maximizes).
pub fn solve_matrix_lp(rho: &DMatrix<f64>) -> Result<MatrixGameSolution, OneShotError> {
    let (m, n) = rho.shape();
    if m == 0 || n == 0 {
        return Err(OneShotError::InvalidProblem("empty payoff matrix".into()));
    }
    if m > MAX_LP_ACTIONS || n > MAX_LP_ACTIONS {
        return Err(OneShotError::TooLarge { rows: m, cols: n });
    }
    if rho.iter().any(|r| !r.is_finite()) {
        return Err(OneShotError::InvalidProblem("non-finite payoff entry".into()));
    }

    let shift = 1.0 - rho.min();
    let width = n + m + 1;
    let rhs = width - 1;
    let mut t = vec![0.0; m * width];
    for i in 0..m {
        for j in 0..n {
            t[i * width + j] = rho[(i, j)] + shift;
        }
        t[i * width + n + i] = 1.0;
        t[i * width + rhs] = 1.0;
    }
    let mut z = vec![0.0; width];
    z[..n].fill(-1.0);
    let mut basis: Vec<usize> = (n..n + m).collect();

    let mut pivots = 0;
    loop {
        // Bland: lowest-index improving column.
        let Some(e) = (0..n + m).find(|&j| z[j] < -PIVOT_EPS) else {
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = t[i * width + e];
            if a > PIVOT_EPS {
                let ratio = t[i * width + rhs] / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((k, best)) => {
                        let tie = (ratio - best).abs() <= PIVOT_EPS * best.abs().max(1.0);
                        if ratio < best && !tie || tie && basis[i] < basis[k] {
                            Some((i, ratio))
                        } else {
                            Some((k, best))
                        }
                    }
                };
            }
        }
        let Some((r, _)) = leave else {
            return Err(OneShotError::Numeric("unbounded matrix-game program".into()));
        };
        pivot(&mut t, &mut z, width, m, r, e);
        basis[r] = e;
        pivots += 1;
        if pivots > MAX_PIVOTS {
            return Err(OneShotError::Numeric("simplex pivot limit reached".into()));
        }
    }

    let mut q = vec![0.0; n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            q[b] = t[i * width + rhs].max(0.0);
        }
    }
    let p: Vec<f64> = (0..m).map(|i| z[n + i].max(0.0)).collect();
    let sum_q: f64 = q.iter().sum();
    let sum_p: f64 = p.iter().sum();
    if !(sum_q > 0.0 && sum_p > 0.0) {
        return Err(OneShotError::Numeric("degenerate simplex solution".into()));
    }
    Ok(MatrixGameSolution {
        sigma: p.iter().map(|v| v / sum_p).collect(),
        tau: q.iter().map(|v| v / sum_q).collect(),
        value: 1.0 / sum_q - shift,
    })
}

fn pivot(t: &mut [f64], z: &mut [f64], width: usize, m: usize, r: usize, e: usize) {
    let piv = t[r * width + e];
    for j in 0..width {
        t[r * width + j] /= piv;
    }
    let (before, rest) = t.split_at_mut(r * width);
    let (row_r, after) = rest.split_at_mut(width);
    for row in before.chunks_mut(width).chain(after.chunks_mut(width)) {
        let f = row[e];
        if f != 0.0 {
            for j in 0..width {
                row[j] -= f * row_r[j];
            }
        }
    }
    let f = z[e];
    if f != 0.0 {
        for j in 0..width {
            z[j] -= f * row_r[j];
        }
    }
    debug_assert_eq!(t.len(), m * width);
}
