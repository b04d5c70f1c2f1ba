//! Value iteration on the regularized Shapley operator for discounted games.
//!
//! `Ψ(V)(x)` is the value of the matrix game `R(x,·,·) + γ E[V(x')]`. It is a
//! sup-norm contraction with modulus `γ`, so Jacobi sweeps from any start
//! converge to the unique fixed point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SolveError;
use crate::game::{Beta, Game, RegularizationConfig, StationaryStrategy, ValueFunction};
use crate::nstage::{continuation_payoff, solve_state};

pub const DEFAULT_MAX_SWEEPS: usize = 10_000;

/// Stationary equilibrium of a discounted game.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename = "discounted")]
pub struct DiscountedSolution {
    pub gamma: f64,
    pub beta1: Beta,
    pub beta2: Beta,
    pub value: ValueFunction,
    pub sigma: StationaryStrategy,
    pub tau: StationaryStrategy,
    /// `‖V_k − V_{k−1}‖∞` of the last sweep.
    pub residual: f64,
    pub sweeps: usize,
    pub converged: bool,
}

/// One application of the Shapley operator.
#[derive(Clone, Debug)]
pub struct ShapleyStep {
    pub value: ValueFunction,
    pub sigma: StationaryStrategy,
    pub tau: StationaryStrategy,
    /// Worst one-shot duality gap of the sweep.
    pub max_gap: f64,
    /// False if some state's matrix game ran out of iterations.
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct DiscountedOptions {
    /// Target sup-norm distance to the fixed point.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Starting value function; zero when absent.
    pub initial: Option<ValueFunction>,
}

impl DiscountedOptions {
    pub fn new(tol: f64) -> Self {
        Self { tol, max_sweeps: DEFAULT_MAX_SWEEPS, initial: None }
    }
}

/// `Ψ(v)` with each state's matrix game solved to duality gap `tol`.
pub fn shapley_apply(
    g: &Game,
    cfg: &RegularizationConfig,
    v: &[f64],
    tol: f64,
) -> Result<ShapleyStep, SolveError> {
    let gamma = cfg.gamma()?;
    if !(tol > 0.0) {
        return Err(SolveError::Tolerance(tol));
    }
    if v.len() != g.num_states() {
        return Err(crate::game::GameError::StateOutOfRange {
            state: v.len(),
            num_states: g.num_states(),
        }
        .into());
    }
    apply(g, cfg, gamma, v, tol, None)
}

fn apply(
    g: &Game,
    cfg: &RegularizationConfig,
    gamma: f64,
    v: &[f64],
    tol: f64,
    warm: Option<&ShapleyStep>,
) -> Result<ShapleyStep, SolveError> {
    let solved: Vec<_> = (0..g.num_states())
        .into_par_iter()
        .map(|x| {
            let rho = continuation_payoff(g, v, x, gamma);
            // Warm start with the strategy the iterative path optimizes over.
            let start = warm.and_then(|w| match (cfg.beta1, cfg.beta2) {
                (Beta::Finite(_), _) => Some(w.tau.row(x)),
                (Beta::Infinite, Beta::Finite(_)) => Some(w.sigma.row(x)),
                (Beta::Infinite, Beta::Infinite) => None,
            });
            solve_state(rho, cfg, tol, start).map_err(|source| SolveError::OneShot { stage: None, state: x, source })
        })
        .collect();
    let n = g.num_states();
    let mut step = ShapleyStep {
        value: ValueFunction(Vec::with_capacity(n)),
        sigma: StationaryStrategy::new(Vec::new()),
        tau: StationaryStrategy::new(Vec::new()),
        max_gap: 0.0,
        converged: true,
    };
    let mut sigma = Vec::with_capacity(n);
    let mut tau = Vec::with_capacity(n);
    for r in solved {
        let (sol, ok) = r?;
        step.converged &= ok;
        step.max_gap = step.max_gap.max(sol.gap);
        step.value.0.push(sol.value);
        sigma.push(sol.sigma);
        tau.push(sol.tau);
    }
    step.sigma = StationaryStrategy::new(sigma);
    step.tau = StationaryStrategy::new(tau);
    Ok(step)
}

/// Value iteration from `V₀ = 0` to within `tol` of the fixed point.
pub fn solve_discounted(g: &Game, cfg: &RegularizationConfig, tol: f64) -> Result<DiscountedSolution, SolveError> {
    solve_discounted_with(g, cfg, &DiscountedOptions::new(tol))
}

/// Value iteration until `‖V_{k+1} − V_k‖∞ ≤ tol(1−γ)/(2γ)`, which bounds
/// the distance to the fixed point by `tol` once the one-shot error
/// (tolerance `tol(1−γ)/10`) is included. Strategies come from the last sweep.
pub fn solve_discounted_with(
    g: &Game,
    cfg: &RegularizationConfig,
    opts: &DiscountedOptions,
) -> Result<DiscountedSolution, SolveError> {
    let gamma = cfg.gamma()?;
    let tol = opts.tol;
    if !(tol > 0.0) {
        return Err(SolveError::Tolerance(tol));
    }
    g.check()?;
    let n = g.num_states();
    let mut v = match &opts.initial {
        Some(v0) if v0.len() == n && v0.iter().all(|x| x.is_finite()) => v0.clone(),
        Some(v0) => {
            return Err(crate::game::GameError::StateOutOfRange { state: v0.len(), num_states: n }.into());
        }
        None => ValueFunction::zeros(n),
    };
    let oneshot_tol = tol * (1.0 - gamma) / 10.0;
    let threshold = tol * (1.0 - gamma) / (2.0 * gamma);

    let mut residuals = Vec::new();
    let mut last: Option<ShapleyStep> = None;
    for sweep in 1..=opts.max_sweeps.max(1) {
        let step = apply(g, cfg, gamma, &v, oneshot_tol, last.as_ref())?;
        let residual = step.value.sup_distance(&v);
        residuals.push(residual);
        v = step.value.clone();
        let done = residual <= threshold;
        let solution = |step: ShapleyStep, converged: bool| DiscountedSolution {
            gamma,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            value: step.value,
            sigma: step.sigma,
            tau: step.tau,
            residual,
            sweeps: sweep,
            converged,
        };
        if done {
            if step.converged {
                return Ok(solution(step, true));
            }
            return Err(SolveError::DiscountedNotConverged {
                reason: "a one-shot game in the final sweep did not reach its gap".into(),
                residuals,
                best: Box::new(solution(step, false)),
            });
        }
        if sweep == opts.max_sweeps.max(1) {
            return Err(SolveError::DiscountedNotConverged {
                reason: format!("sweep budget of {} exhausted", opts.max_sweeps),
                residuals,
                best: Box::new(solution(step, false)),
            });
        }
        last = Some(step);
    }
    unreachable!("loop returns on its last sweep")
}
