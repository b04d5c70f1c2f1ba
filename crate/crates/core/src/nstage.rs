//! Backward recursion for N-stage games.
//!
//! Starting from `V_{N+1} = terminal`, each stage solves one regularized
//! matrix game per state with payoff `ρ_t(x,u,w) = R(x,u,w) + E[V_{t+1}(x')]`
//! and sets `V_t(x)` to its value.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SolveError;
use crate::game::{Beta, Game, MarkovStrategy, RegularizationConfig, StationaryStrategy, ValueFunction};
use crate::oneshot::{self, OneShotError, OneShotProblem, OneShotSolution};

/// Markovian equilibrium of an N-stage game.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename = "nstage")]
pub struct NStageSolution {
    #[serde(rename = "N")]
    pub horizon: usize,
    pub beta1: Beta,
    pub beta2: Beta,
    /// `values[t]` is `V_{t+1}`; the last entry is the terminal payoff.
    pub values: Vec<ValueFunction>,
    pub sigma: MarkovStrategy,
    pub tau: MarkovStrategy,
    pub max_gap: f64,
    pub converged: bool,
}

impl NStageSolution {
    /// `Σ_x μ₁(x) V₁(x)`.
    pub fn value(&self, mu1: &[f64]) -> f64 {
        crate::numerics::dot(mu1, &self.values[0])
    }
}

/// `ρ(u, w) = R(x,u,w) + Σ_{x'} P(x'|x,u,w) v_next(x')` at state `x`.
pub fn stage_payoff(g: &Game, v_next: &[f64], x: usize) -> DMatrix<f64> {
    continuation_payoff(g, v_next, x, 1.0)
}

/// `R(x,u,w) + scale · Σ_{x'} P(x'|x,u,w) v(x')`.
pub(crate) fn continuation_payoff(g: &Game, v: &[f64], x: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(g.actions_p1(x), g.actions_p2(x), |u, w| {
        g.payoff(x, u, w) + scale * g.expected_next(x, u, w, v)
    })
}

/// Solves every stage to duality gap `tol / N` per state.
pub fn solve_nstage(g: &Game, cfg: &RegularizationConfig, tol: f64) -> Result<NStageSolution, SolveError> {
    let horizon = cfg.horizon()?;
    if !(tol > 0.0) {
        return Err(SolveError::Tolerance(tol));
    }
    g.check()?;
    let stage_tol = tol / horizon as f64;
    let n = g.num_states();

    let mut values = vec![ValueFunction::zeros(n); horizon + 1];
    values[horizon] = ValueFunction(g.terminal_payoff().to_vec());
    let mut sigma = vec![StationaryStrategy::new(Vec::new()); horizon];
    let mut tau = vec![StationaryStrategy::new(Vec::new()); horizon];
    let mut max_gap: f64 = 0.0;
    let mut first_failure: Option<(usize, usize)> = None;

    for t in (0..horizon).rev() {
        let v_next = &values[t + 1];
        let solved: Vec<Result<(OneShotSolution, bool), SolveError>> = (0..n)
            .into_par_iter()
            .map(|x| {
                let rho = stage_payoff(g, v_next, x);
                solve_state(rho, cfg, stage_tol, None).map_err(|source| SolveError::OneShot {
                    stage: Some(t + 1),
                    state: x,
                    source,
                })
            })
            .collect();
        let mut v = Vec::with_capacity(n);
        let mut s = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for (x, r) in solved.into_iter().enumerate() {
            let (sol, ok) = r?;
            if !ok && first_failure.is_none() {
                first_failure = Some((t + 1, x));
            }
            max_gap = max_gap.max(sol.gap);
            v.push(sol.value);
            s.push(sol.sigma);
            w.push(sol.tau);
        }
        values[t] = ValueFunction(v);
        sigma[t] = StationaryStrategy::new(s);
        tau[t] = StationaryStrategy::new(w);
    }

    let solution = NStageSolution {
        horizon,
        beta1: cfg.beta1,
        beta2: cfg.beta2,
        values,
        sigma: MarkovStrategy::new(sigma),
        tau: MarkovStrategy::new(tau),
        max_gap,
        converged: first_failure.is_none(),
    };
    match first_failure {
        None => Ok(solution),
        Some((stage, state)) => Err(SolveError::NStageNotConverged { stage, state, best: Box::new(solution) }),
    }
}

/// One state's matrix game. A budget overrun yields the best iterate and
/// `false` instead of an error, so the recursion can finish.
pub(crate) fn solve_state(
    rho: DMatrix<f64>,
    cfg: &RegularizationConfig,
    tol: f64,
    start: Option<&[f64]>,
) -> Result<(OneShotSolution, bool), OneShotError> {
    let p = OneShotProblem::new(rho, cfg.beta1, cfg.beta2)?;
    match oneshot::solve_from(&p, tol, oneshot::DEFAULT_MAX_ITERS, start) {
        Ok(s) => Ok((s, true)),
        Err(OneShotError::NotConverged { best, .. }) => Ok((*best, false)),
        Err(e) => Err(e),
    }
}
