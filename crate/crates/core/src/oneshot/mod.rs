//! Single-state entropy-regularized matrix game.
//!
//! Player 1 picks `σ ∈ Δ(U)` to maximize and player 2 picks `τ ∈ Δ(W)` to
//! minimize
//!
//! ```text
//! V(σ, τ) = σᵀρτ + (1/β₁) H(σ) − (1/β₂) H(τ)
//! ```
//!
//! Every solve is certified by the duality gap `upper(τ) − lower(σ)` where
//! `lower(σ) = min_τ V(σ, τ)` and `upper(τ) = max_σ V(σ, τ)`, both available
//! in closed form (log-sum-exp for finite β, min/max for infinite β).

mod lp;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::game::{Beta, PROB_TOL};
use crate::numerics::{dot, entropy, is_distribution, log_sum_exp, softmax};

pub use lp::{solve_matrix_lp, MatrixGameSolution, MAX_LP_ACTIONS};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITERS: usize = 100_000;

/// Armijo constant for the line search.
const ARMIJO: f64 = 1e-4;
/// Halvings tried before a Newton step is abandoned.
const MAX_BACKTRACKS: usize = 60;
/// Smallest barrier weight, relative to the payoff scale.
const MIN_BARRIER: f64 = 1e-18;
/// Centering stops once the squared Newton decrement is below this multiple
/// of the barrier weight.
const CENTERING: f64 = 1e-3;
/// Newton steps allowed per barrier weight.
const MAX_CENTERING: usize = 200;
/// Weight of the uniform distribution mixed into a warm start.
const WARM_MIX: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum OneShotError {
    #[error("invalid one-shot problem: {0}")]
    InvalidProblem(String),
    #[error("player {player} strategy is not a probability distribution of length {len}")]
    NotDistribution { player: u8, len: usize },
    #[error("player {0} is fully rational; no softmax response exists")]
    RationalPlayer(u8),
    #[error("payoff matrix {rows}x{cols} exceeds the linear-programming limit")]
    TooLarge { rows: usize, cols: usize },
    #[error("numeric range error: {0}")]
    Numeric(String),
    #[error("no convergence after {iterations} iterations (gap {gap:e})", gap = best.gap)]
    NotConverged {
        iterations: usize,
        best: Box<OneShotSolution>,
    },
}

/// Payoff matrix of one state together with both rationality parameters.
#[derive(Clone, Debug)]
pub struct OneShotProblem {
    rho: DMatrix<f64>,
    beta1: Beta,
    beta2: Beta,
}

impl OneShotProblem {
    pub fn new(rho: DMatrix<f64>, beta1: Beta, beta2: Beta) -> Result<Self, OneShotError> {
        if rho.nrows() == 0 || rho.ncols() == 0 {
            return Err(OneShotError::InvalidProblem("empty payoff matrix".into()));
        }
        if rho.iter().any(|r| !r.is_finite()) {
            return Err(OneShotError::InvalidProblem("non-finite payoff entry".into()));
        }
        let scale = rho.amax();
        for beta in [beta1, beta2] {
            if let Beta::Finite(b) = beta {
                if !(b * scale).is_finite() {
                    return Err(OneShotError::Numeric(format!("beta {b} times payoff {scale} overflows")));
                }
            }
        }
        Ok(Self { rho, beta1, beta2 })
    }

    /// Row-major construction; rows are player 1's actions.
    pub fn from_rows(rows: &[Vec<f64>], beta1: Beta, beta2: Beta) -> Result<Self, OneShotError> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(OneShotError::InvalidProblem("ragged payoff matrix".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(m, n, &flat), beta1, beta2)
    }

    pub fn rho(&self) -> &DMatrix<f64> {
        &self.rho
    }

    pub fn beta1(&self) -> Beta {
        self.beta1
    }

    pub fn beta2(&self) -> Beta {
        self.beta2
    }

    pub fn num_rows(&self) -> usize {
        self.rho.nrows()
    }

    pub fn num_cols(&self) -> usize {
        self.rho.ncols()
    }

    /// Game seen from player 2: payoff `−ρᵀ`, parameters swapped.
    pub fn transposed(&self) -> Self {
        Self {
            rho: -self.rho.transpose(),
            beta1: self.beta2,
            beta2: self.beta1,
        }
    }

    /// `ρᵀσ`, the expected payoff of each column.
    fn column_payoffs(&self, sigma: &[f64]) -> Vec<f64> {
        (0..self.num_cols())
            .map(|w| (0..self.num_rows()).map(|u| sigma[u] * self.rho[(u, w)]).sum())
            .collect()
    }

    /// `ρτ`, the expected payoff of each row.
    fn row_payoffs(&self, tau: &[f64]) -> Vec<f64> {
        (0..self.num_rows())
            .map(|u| (0..self.num_cols()).map(|w| self.rho[(u, w)] * tau[w]).sum())
            .collect()
    }

    fn check_sigma(&self, sigma: &[f64]) -> Result<(), OneShotError> {
        if sigma.len() != self.num_rows() || !is_distribution(sigma, PROB_TOL) {
            return Err(OneShotError::NotDistribution { player: 1, len: self.num_rows() });
        }
        Ok(())
    }

    fn check_tau(&self, tau: &[f64]) -> Result<(), OneShotError> {
        if tau.len() != self.num_cols() || !is_distribution(tau, PROB_TOL) {
            return Err(OneShotError::NotDistribution { player: 2, len: self.num_cols() });
        }
        Ok(())
    }
}

/// Equilibrium pair of a one-shot game with its certificate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OneShotSolution {
    pub sigma: Vec<f64>,
    pub tau: Vec<f64>,
    pub value: f64,
    pub gap: f64,
    pub iterations: usize,
    /// False when a rational player makes equilibrium strategies non-unique.
    pub unique: bool,
}

/// `V(σ, τ)` for an explicit pair.
pub fn payoff_value(p: &OneShotProblem, sigma: &[f64], tau: &[f64]) -> Result<f64, OneShotError> {
    p.check_sigma(sigma)?;
    p.check_tau(tau)?;
    let bilinear = dot(&p.row_payoffs(tau), sigma);
    Ok(bilinear + p.beta1.inverse() * entropy(sigma) - p.beta2.inverse() * entropy(tau))
}

/// `min_τ V(σ, τ)`: for finite β₂ this is
/// `(1/β₁)H(σ) − (1/β₂) log Σ_w exp(−β₂ (ρᵀσ)_w)`, otherwise
/// `(1/β₁)H(σ) + min_w (ρᵀσ)_w`. Never exceeds the game value.
pub fn lower_objective(p: &OneShotProblem, sigma: &[f64]) -> Result<f64, OneShotError> {
    p.check_sigma(sigma)?;
    Ok(lower_unchecked(p, sigma))
}

fn lower_unchecked(p: &OneShotProblem, sigma: &[f64]) -> f64 {
    let s = p.column_payoffs(sigma);
    let inner = match p.beta2 {
        Beta::Finite(b2) => {
            let z: Vec<f64> = s.iter().map(|v| -b2 * v).collect();
            -log_sum_exp(&z) / b2
        }
        Beta::Infinite => s.iter().copied().fold(f64::INFINITY, f64::min),
    };
    p.beta1.inverse() * entropy(sigma) + inner
}

/// `max_σ V(σ, τ)`: for finite β₁ this is
/// `(1/β₁) log Σ_u exp(β₁ (ρτ)_u) − (1/β₂)H(τ)`, otherwise
/// `max_u (ρτ)_u − (1/β₂)H(τ)`. Never below the game value.
pub fn upper_objective(p: &OneShotProblem, tau: &[f64]) -> Result<f64, OneShotError> {
    p.check_tau(tau)?;
    Ok(upper_unchecked(p, tau))
}

fn upper_unchecked(p: &OneShotProblem, tau: &[f64]) -> f64 {
    let q = p.row_payoffs(tau);
    let inner = match p.beta1 {
        Beta::Finite(b1) => {
            let z: Vec<f64> = q.iter().map(|v| b1 * v).collect();
            log_sum_exp(&z) / b1
        }
        Beta::Infinite => q.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    inner - p.beta2.inverse() * entropy(tau)
}

/// Quantal response of player 2: `τ(w) ∝ exp(−β₂ (ρᵀσ)_w)`.
pub fn best_response_p2(p: &OneShotProblem, sigma: &[f64]) -> Result<Vec<f64>, OneShotError> {
    let Beta::Finite(b2) = p.beta2 else {
        return Err(OneShotError::RationalPlayer(2));
    };
    p.check_sigma(sigma)?;
    let z: Vec<f64> = p.column_payoffs(sigma).iter().map(|v| -b2 * v).collect();
    Ok(softmax(&z))
}

/// Quantal response of player 1: `σ(u) ∝ exp(β₁ (ρτ)_u)`.
pub fn best_response_p1(p: &OneShotProblem, tau: &[f64]) -> Result<Vec<f64>, OneShotError> {
    let Beta::Finite(b1) = p.beta1 else {
        return Err(OneShotError::RationalPlayer(1));
    };
    p.check_tau(tau)?;
    let z: Vec<f64> = p.row_payoffs(tau).iter().map(|v| b1 * v).collect();
    Ok(softmax(&z))
}

/// Solves the one-shot game to duality gap `tol`.
pub fn solve(p: &OneShotProblem, tol: f64, max_iters: usize) -> Result<OneShotSolution, OneShotError> {
    solve_from(p, tol, max_iters, None)
}

/// As [`solve`], with an optional warm start for the iterative path: player
/// 2's strategy, or player 1's when only player 2 is regularized.
pub fn solve_from(
    p: &OneShotProblem,
    tol: f64,
    max_iters: usize,
    start: Option<&[f64]>,
) -> Result<OneShotSolution, OneShotError> {
    if !(tol > 0.0) {
        return Err(OneShotError::InvalidProblem(format!("tolerance must be positive, got {tol}")));
    }
    let weights = |n: usize| -> Result<Option<Vec<f64>>, OneShotError> {
        match start {
            None => Ok(None),
            Some(s) if s.len() == n && s.iter().all(|&v| v >= 0.0 && v.is_finite()) && s.iter().sum::<f64>() > 0.0 => {
                Ok(Some(s.to_vec()))
            }
            Some(_) => Err(OneShotError::InvalidProblem(format!(
                "starting point must be a nonnegative weight vector of length {n}"
            ))),
        }
    };
    match (p.beta1, p.beta2) {
        (Beta::Finite(_), _) => dual_barrier(p, tol, max_iters, weights(p.num_cols())?),
        (Beta::Infinite, Beta::Finite(_)) => {
            let t = p.transposed();
            let sol = dual_barrier(&t, tol, max_iters, weights(t.num_cols())?).map_err(|e| match e {
                OneShotError::NotConverged { iterations, best } => OneShotError::NotConverged {
                    iterations,
                    best: Box::new(untranspose(*best)),
                },
                other => other,
            })?;
            Ok(untranspose(sol))
        }
        (Beta::Infinite, Beta::Infinite) => {
            let lp = solve_matrix_lp(&p.rho)?;
            let lower = lower_unchecked(p, &lp.sigma);
            let upper = upper_unchecked(p, &lp.tau);
            let sol = OneShotSolution {
                value: 0.5 * (lower + upper),
                gap: (upper - lower).max(0.0),
                sigma: lp.sigma,
                tau: lp.tau,
                iterations: 0,
                unique: false,
            };
            if sol.gap > tol {
                return Err(OneShotError::NotConverged { iterations: 0, best: Box::new(sol) });
            }
            Ok(sol)
        }
    }
}

fn untranspose(s: OneShotSolution) -> OneShotSolution {
    OneShotSolution {
        sigma: s.tau,
        tau: s.sigma,
        value: -s.value,
        gap: s.gap,
        iterations: s.iterations,
        unique: s.unique,
    }
}

/// Player 1 regularized. Player 2's problem
/// `min_τ G(τ) = (1/β₁) log Σ_u exp(β₁ (ρτ)_u) − (1/β₂) H(τ)` is smooth and
/// convex on the simplex, and player 1's reply `σ = softmax(β₁ρτ)` is
/// explicit. `G` is minimized by an equality-constrained Newton method on
/// `G(τ) − μ Σ log τ` with the barrier weight `μ` shrinking tenfold. At a
/// central point the duality gap is at most `|W| μ`; the exact gap is what
/// gets checked against `tol`.
fn dual_barrier(
    p: &OneShotProblem,
    tol: f64,
    max_iters: usize,
    tau0: Option<Vec<f64>>,
) -> Result<OneShotSolution, OneShotError> {
    let Beta::Finite(b1) = p.beta1 else {
        unreachable!("caller dispatches on beta1");
    };
    let kappa = p.beta2.inverse();
    let n = p.num_cols();
    let scale = p.rho.amax().max(1.0);

    let sigma_of = |tau: &[f64]| -> Vec<f64> {
        let z: Vec<f64> = p.row_payoffs(tau).iter().map(|v| b1 * v).collect();
        softmax(&z)
    };
    let objective = |tau: &[f64], mu: f64| -> f64 {
        let z: Vec<f64> = p.row_payoffs(tau).iter().map(|v| b1 * v).collect();
        log_sum_exp(&z) / b1 - kappa * entropy(tau) - mu * tau.iter().map(|t| t.ln()).sum::<f64>()
    };
    // Gradient of the barrier objective and the reply σ it was computed from.
    let gradient = |tau: &[f64], mu: f64| -> (Vec<f64>, Vec<f64>) {
        let sigma = sigma_of(tau);
        let g = p
            .column_payoffs(&sigma)
            .iter()
            .zip(tau)
            .map(|(c, t)| c + kappa * (t.ln() + 1.0) - mu / t)
            .collect();
        (g, sigma)
    };
    // ‖τ ⊙ (g + ν)‖ with the multiplier ν fitted by least squares; zero
    // exactly at the central point.
    let residual = |tau: &[f64], g: &[f64]| -> f64 {
        let w2: f64 = tau.iter().map(|t| t * t).sum();
        let nu = -tau.iter().zip(g).map(|(t, gi)| t * t * gi).sum::<f64>() / w2;
        tau.iter().zip(g).map(|(t, gi)| (t * (gi + nu)).powi(2)).sum::<f64>().sqrt()
    };
    // σ is an exact reply to τ by construction; with β₂ finite, τ must also
    // be a quantal reply to σ.
    let fixed_point_residual = |sol: &OneShotSolution| -> f64 {
        match p.beta2 {
            Beta::Finite(b2) => {
                let z: Vec<f64> = p.column_payoffs(&sol.sigma).iter().map(|v| -b2 * v).collect();
                crate::numerics::sup_distance(&softmax(&z), &sol.tau)
            }
            Beta::Infinite => 0.0,
        }
    };
    let certify = |tau: &[f64], iters: usize| -> OneShotSolution {
        let sigma = sigma_of(tau);
        let lower = lower_unchecked(p, &sigma);
        let upper = upper_unchecked(p, tau);
        OneShotSolution {
            sigma,
            tau: tau.to_vec(),
            value: 0.5 * (upper + lower),
            gap: (upper - lower).max(0.0),
            iterations: iters,
            unique: p.beta2.is_finite(),
        }
    };

    let (mut tau, mut mu) = match tau0 {
        None => (crate::numerics::uniform(n), scale),
        Some(t) => {
            // Pull a warm start slightly inside the simplex and begin at the
            // barrier weight matching its gap.
            let total: f64 = t.iter().sum();
            let t: Vec<f64> = t.iter().map(|v| (1.0 - WARM_MIX) * v / total + WARM_MIX / n as f64).collect();
            let gap = certify(&t, 0).gap;
            let mu = (gap / n as f64).clamp(0.1 * tol / n as f64, scale);
            (t, mu)
        }
    };

    let mut iters = 0;
    let mut best: Option<OneShotSolution> = None;
    while mu >= MIN_BARRIER * scale {
        let stage_start = iters;
        let mut phi = objective(&tau, mu);
        let (mut grad, mut sigma) = gradient(&tau, mu);
        let mut merit = residual(&tau, &grad);
        // Centering. Near the optimum the objective stops resolving progress
        // in double precision; there a step is accepted when it shrinks the
        // scaled stationarity residual instead.
        while iters < max_iters && iters - stage_start < MAX_CENTERING {
            let col = p.column_payoffs(&sigma);
            // β₁ ρᵀ Cov(σ) ρ + diag(κ/τ + μ/τ²), bordered by the simplex constraint.
            let mut kkt = DMatrix::<f64>::zeros(n + 1, n + 1);
            for i in 0..n {
                for j in i..n {
                    let h: f64 = sigma
                        .iter()
                        .enumerate()
                        .map(|(u, s)| s * p.rho[(u, i)] * p.rho[(u, j)])
                        .sum();
                    let h = b1 * (h - col[i] * col[j]);
                    kkt[(i, j)] = h;
                    kkt[(j, i)] = h;
                }
                kkt[(i, i)] += kappa / tau[i] + mu / (tau[i] * tau[i]);
                kkt[(i, n)] = 1.0;
                kkt[(n, i)] = 1.0;
            }
            let mut rhs = DVector::<f64>::zeros(n + 1);
            for i in 0..n {
                rhs[i] = -grad[i];
            }
            let Some(sol) = kkt.lu().solve(&rhs) else {
                break;
            };
            let d: Vec<f64> = sol.iter().take(n).copied().collect();
            let slope = dot(&grad, &d);
            if !(slope < 0.0) || (-slope <= CENTERING * mu && merit <= CENTERING * mu) {
                break;
            }
            iters += 1;
            let mut t = d
                .iter()
                .zip(&tau)
                .filter(|(di, _)| **di < 0.0)
                .map(|(di, ti)| -0.99 * ti / di)
                .fold(1.0, f64::min);
            let mut moved = false;
            for _ in 0..MAX_BACKTRACKS {
                let cand: Vec<f64> = tau.iter().zip(&d).map(|(a, b)| a + t * b).collect();
                if cand.iter().all(|&c| c > 0.0) {
                    let total: f64 = cand.iter().sum();
                    let cand: Vec<f64> = cand.into_iter().map(|c| c / total).collect();
                    let v = objective(&cand, mu);
                    let (g, sg) = gradient(&cand, mu);
                    let m = residual(&cand, &g);
                    let flat = (v - phi).abs() <= 64.0 * f64::EPSILON * (1.0 + phi.abs());
                    if v <= phi + ARMIJO * t * slope || flat && m <= (1.0 - ARMIJO * t) * merit {
                        tau = cand;
                        phi = v;
                        grad = g;
                        sigma = sg;
                        merit = m;
                        moved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }

        let sol = certify(&tau, iters);
        if !sol.value.is_finite() {
            return Err(OneShotError::Numeric("non-finite duality gap".into()));
        }
        // A stage that takes no step has hit the floating-point floor.
        let stalled = iters == stage_start;
        if sol.gap <= tol && (stalled || fixed_point_residual(&sol) <= tol) {
            return Ok(sol);
        }
        if best.as_ref().map_or(true, |b| sol.gap < b.gap) {
            best = Some(sol);
        }
        if iters >= max_iters {
            break;
        }
        mu *= 0.1;
    }
    let best = best.ok_or_else(|| OneShotError::Numeric("no iterate produced".into()))?;
    // The barrier is exhausted: the gap certificate alone decides.
    if best.gap <= tol && iters < max_iters {
        return Ok(best);
    }
    Err(OneShotError::NotConverged { iterations: iters, best: Box::new(best) })
}
