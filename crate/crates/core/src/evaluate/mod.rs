//! Exact evaluation of strategy pairs.
//!
//! Everything here is linear algebra on the chain induced by a strategy
//! pair; nothing is sampled.

mod tree;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::game::{
    Beta, ConfigError, Game, MarkovStrategy, Player, RegularizationConfig, StationaryStrategy, StrategyError,
    ValueFunction,
};
use crate::numerics::{entropy, log_sum_exp, softmax, sup_distance};

pub use tree::{phi_n_tree, History, HistoryStrategy, MAX_HISTORIES};

/// Above this many states linear systems are solved iteratively.
pub const DENSE_SOLVE_LIMIT: usize = 2000;
/// Residual target of the iterative linear solves.
const ITERATIVE_TOL: f64 = 1e-10;
const MAX_LINEAR_SWEEPS: usize = 1_000_000;
/// Sweep budget of best-response value iteration.
const MAX_RESPONSE_SWEEPS: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("player {player:?} strategy: {source}")]
    Strategy {
        player: Player,
        #[source]
        source: StrategyError,
    },
    #[error("initial distribution has length {got}, game has {expected} states, or is not a distribution")]
    InitialDistribution { got: usize, expected: usize },
    #[error("state {0} out of range")]
    StateOutOfRange(usize),
    #[error("state {0} is not absorbing")]
    NotAbsorbing(usize),
    #[error("history tree exceeds {0} nodes")]
    TooManyHistories(usize),
    #[error("player {player:?} history rule is not a distribution over its actions at stage {stage}")]
    HistoryRule { player: Player, stage: usize },
    #[error("iterative solve stopped at residual {0:e}")]
    NotConverged(f64),
}

fn check_pair(g: &Game, sigma: &StationaryStrategy, tau: &StationaryStrategy) -> Result<(), EvalError> {
    sigma.check(g, Player::One).map_err(|source| EvalError::Strategy { player: Player::One, source })?;
    tau.check(g, Player::Two).map_err(|source| EvalError::Strategy { player: Player::Two, source })
}

fn check_mu(g: &Game, mu: &[f64]) -> Result<(), EvalError> {
    if mu.len() != g.num_states() || !crate::numerics::is_distribution(mu, crate::game::PROB_TOL) {
        return Err(EvalError::InitialDistribution { got: mu.len(), expected: g.num_states() });
    }
    Ok(())
}

/// Expected stage payoff and the successor distribution at `x` under the
/// mixed action pair `(s, t)`.
fn induced_row(g: &Game, x: usize, s: &[f64], t: &[f64]) -> (f64, Vec<(usize, f64)>) {
    let mut reward = 0.0;
    let mut next: BTreeMap<usize, f64> = BTreeMap::new();
    for (u, &su) in s.iter().enumerate() {
        if su == 0.0 {
            continue;
        }
        for (w, &tw) in t.iter().enumerate() {
            let q = su * tw;
            if q == 0.0 {
                continue;
            }
            reward += q * g.payoff(x, u, w);
            for (y, p) in g.transition(x, u, w).iter() {
                *next.entry(y).or_insert(0.0) += q * p;
            }
        }
    }
    (reward, next.into_iter().collect())
}

/// Stage-state marginals `μ_1, …, μ_{stages+1}` of a Markovian pair:
/// `μ_{t+1}(x') = Σ P(x'|x,u,w) σ_t(u|x) τ_t(w|x) μ_t(x)`.
pub fn rollout_occupancy(
    g: &Game,
    sigma: &MarkovStrategy,
    tau: &MarkovStrategy,
    mu1: &[f64],
    stages: usize,
) -> Result<Vec<Vec<f64>>, EvalError> {
    sigma.check(g, Player::One, stages).map_err(|source| EvalError::Strategy { player: Player::One, source })?;
    tau.check(g, Player::Two, stages).map_err(|source| EvalError::Strategy { player: Player::Two, source })?;
    check_mu(g, mu1)?;
    let mut out = Vec::with_capacity(stages + 1);
    out.push(mu1.to_vec());
    for t in 0..stages {
        let mu = &out[t];
        let mut next = vec![0.0; g.num_states()];
        for (x, &m) in mu.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let (_, row) = induced_row(g, x, sigma.stage(t).row(x), tau.stage(t).row(x));
            for (y, p) in row {
                next[y] += m * p;
            }
        }
        out.push(next);
    }
    Ok(out)
}

/// The three parts of the N-stage objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiParts {
    /// Expected stage payoffs plus the terminal payoff.
    pub payoff: f64,
    /// `Σ_t E[H(σ_t(·|X_t))]`.
    pub entropy_p1: f64,
    /// `Σ_t E[H(τ_t(·|X_t))]`.
    pub entropy_p2: f64,
}

impl PhiParts {
    pub fn combine(&self, beta1: Beta, beta2: Beta) -> f64 {
        self.payoff + beta1.inverse() * self.entropy_p1 - beta2.inverse() * self.entropy_p2
    }
}

/// Payoff and per-player causal entropies of a Markovian pair; for such
/// pairs the causal entropy is the sum of per-stage state-conditional
/// entropies.
pub fn phi_n_parts(
    g: &Game,
    horizon: usize,
    sigma: &MarkovStrategy,
    tau: &MarkovStrategy,
    mu1: &[f64],
) -> Result<PhiParts, EvalError> {
    let mus = rollout_occupancy(g, sigma, tau, mu1, horizon)?;
    let mut parts = PhiParts { payoff: 0.0, entropy_p1: 0.0, entropy_p2: 0.0 };
    for t in 0..horizon {
        for (x, &m) in mus[t].iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let s = sigma.stage(t).row(x);
            let w = tau.stage(t).row(x);
            let (r, _) = induced_row(g, x, s, w);
            parts.payoff += m * r;
            parts.entropy_p1 += m * entropy(s);
            parts.entropy_p2 += m * entropy(w);
        }
    }
    parts.payoff += crate::numerics::dot(&mus[horizon], g.terminal_payoff());
    Ok(parts)
}

/// Regularized N-stage objective `Φ_N(σ, τ)` from initial distribution `mu1`.
pub fn phi_n(
    g: &Game,
    cfg: &RegularizationConfig,
    sigma: &MarkovStrategy,
    tau: &MarkovStrategy,
    mu1: &[f64],
) -> Result<f64, EvalError> {
    let horizon = cfg.horizon()?;
    Ok(phi_n_parts(g, horizon, sigma, tau, mu1)?.combine(cfg.beta1, cfg.beta2))
}

/// Regularized discounted objective `Φ_∞(σ, τ)` from every start state:
/// the solution of `v = r + γ M v` where `r(x)` is the expected stage payoff
/// plus `H(σ(·|x))/β₁ − H(τ(·|x))/β₂` and `M` is the induced chain.
pub fn phi_inf(
    g: &Game,
    cfg: &RegularizationConfig,
    sigma: &StationaryStrategy,
    tau: &StationaryStrategy,
) -> Result<ValueFunction, EvalError> {
    let gamma = cfg.gamma()?;
    check_pair(g, sigma, tau)?;
    let n = g.num_states();
    let mut rows = Vec::with_capacity(n);
    let mut r = Vec::with_capacity(n);
    for x in 0..n {
        let (s, t) = (sigma.row(x), tau.row(x));
        let (reward, row) = induced_row(g, x, s, t);
        r.push(reward + cfg.beta1.inverse() * entropy(s) - cfg.beta2.inverse() * entropy(t));
        rows.push(row);
    }
    Ok(ValueFunction(solve_affine(&rows, &r, gamma)?))
}

/// Solves `v = rhs + scale · M v` for a substochastic `M` given by sparse rows.
fn solve_affine(rows: &[Vec<(usize, f64)>], rhs: &[f64], scale: f64) -> Result<Vec<f64>, EvalError> {
    let n = rhs.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n <= DENSE_SOLVE_LIMIT {
        let mut a = DMatrix::<f64>::identity(n, n);
        for (x, row) in rows.iter().enumerate() {
            for &(y, p) in row {
                a[(x, y)] -= scale * p;
            }
        }
        let b = DVector::from_column_slice(rhs);
        let v = a.lu().solve(&b).ok_or(EvalError::NotConverged(f64::INFINITY))?;
        return Ok(v.iter().copied().collect());
    }
    // Gauss-Seidel; converges because every row of scale·M sums to below one
    // along any path that matters.
    let mut v = rhs.to_vec();
    for _ in 0..MAX_LINEAR_SWEEPS {
        let mut delta: f64 = 0.0;
        for x in 0..n {
            let mut diag = 0.0;
            let mut acc = rhs[x];
            for &(y, p) in &rows[x] {
                if y == x {
                    diag += scale * p;
                } else {
                    acc += scale * p * v[y];
                }
            }
            let new = acc / (1.0 - diag);
            delta = delta.max((new - v[x]).abs());
            v[x] = new;
        }
        if delta <= ITERATIVE_TOL {
            return Ok(v);
        }
        if !delta.is_finite() {
            return Err(EvalError::NotConverged(delta));
        }
    }
    Err(EvalError::NotConverged(f64::NAN))
}

/// Outcome probabilities of the induced chain from one start state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WinReport {
    /// Probability of reaching a win state before a lose state.
    pub win: f64,
    pub lose: f64,
    /// Mass that never reaches either set.
    pub never_absorbed: f64,
}

/// Probability that the chain induced by `(sigma, tau)` hits `win` before
/// `lose` from `start`. Both sets must be absorbing in `g`.
pub fn win_probability(
    g: &Game,
    sigma: &StationaryStrategy,
    tau: &StationaryStrategy,
    win: &[usize],
    lose: &[usize],
    start: usize,
) -> Result<WinReport, EvalError> {
    check_pair(g, sigma, tau)?;
    let n = g.num_states();
    for &x in win.iter().chain(lose).chain(std::iter::once(&start)) {
        if x >= n {
            return Err(EvalError::StateOutOfRange(x));
        }
    }
    for &x in win.iter().chain(lose) {
        for u in 0..g.actions_p1(x) {
            for w in 0..g.actions_p2(x) {
                if g.transition(x, u, w).iter().any(|(y, p)| y != x && p != 0.0) {
                    return Err(EvalError::NotAbsorbing(x));
                }
            }
        }
    }
    let mut kind = vec![0u8; n]; // 0 transient, 1 win, 2 lose
    for &x in win {
        kind[x] = 1;
    }
    for &x in lose {
        if kind[x] == 1 {
            return Err(EvalError::NotAbsorbing(x));
        }
        kind[x] = 2;
    }
    match kind[start] {
        1 => return Ok(WinReport { win: 1.0, lose: 0.0, never_absorbed: 0.0 }),
        2 => return Ok(WinReport { win: 0.0, lose: 1.0, never_absorbed: 0.0 }),
        _ => {}
    }

    let chain: Vec<Vec<(usize, f64)>> = (0..n).map(|x| induced_row(g, x, sigma.row(x), tau.row(x)).1).collect();
    // States from which an absorbing set is reachable.
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (x, row) in chain.iter().enumerate() {
        for &(y, p) in row {
            if p > 0.0 && y != x {
                preds[y].push(x);
            }
        }
    }
    let mut reach = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&x| kind[x] != 0).collect();
    for &x in &stack {
        reach[x] = true;
    }
    while let Some(y) = stack.pop() {
        for &x in &preds[y] {
            if !reach[x] {
                reach[x] = true;
                stack.push(x);
            }
        }
    }
    if !reach[start] {
        return Ok(WinReport { win: 0.0, lose: 0.0, never_absorbed: 1.0 });
    }

    // Transient states that can still be absorbed; the rest contribute 0.
    let transient: Vec<usize> = (0..n).filter(|&x| kind[x] == 0 && reach[x]).collect();
    let mut index = vec![usize::MAX; n];
    for (i, &x) in transient.iter().enumerate() {
        index[x] = i;
    }
    let mut rows = Vec::with_capacity(transient.len());
    let mut to_win = Vec::with_capacity(transient.len());
    let mut to_lose = Vec::with_capacity(transient.len());
    for &x in &transient {
        let (mut a, mut b) = (0.0, 0.0);
        let mut row = Vec::new();
        for &(y, p) in &chain[x] {
            match kind[y] {
                1 => a += p,
                2 => b += p,
                _ if reach[y] => row.push((index[y], p)),
                _ => {}
            }
        }
        rows.push(row);
        to_win.push(a);
        to_lose.push(b);
    }
    let pw = solve_affine(&rows, &to_win, 1.0)?;
    let pl = solve_affine(&rows, &to_lose, 1.0)?;
    let i = index[start];
    let win = pw[i].clamp(0.0, 1.0);
    let lose = pl[i].clamp(0.0, 1.0);
    Ok(WinReport { win, lose, never_absorbed: (1.0 - win - lose).max(0.0) })
}

/// Optimal (soft) response of the free player to a fixed stationary strategy
/// in the discounted game, with its value from every state.
///
/// The fixed player's entropy enters as a per-state constant; the free
/// player's own entropy enters through a log-sum-exp backup when its β is
/// finite, or a hard max/min otherwise.
pub fn best_response_value(
    g: &Game,
    cfg: &RegularizationConfig,
    fixed: &StationaryStrategy,
    fixed_player: Player,
) -> Result<(StationaryStrategy, ValueFunction), EvalError> {
    let gamma = cfg.gamma()?;
    fixed.check(g, fixed_player).map_err(|source| EvalError::Strategy { player: fixed_player, source })?;
    let free = fixed_player.opponent();
    let (beta_free, fixed_bonus) = match free {
        Player::One => (cfg.beta1, -cfg.beta2.inverse()),
        Player::Two => (cfg.beta2, cfg.beta1.inverse()),
    };
    let n = g.num_states();

    // Q(x, a) = c(x, a) + γ Σ_y m(x, a, y) v(y)
    let mut consts: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut moves: Vec<Vec<Vec<(usize, f64)>>> = Vec::with_capacity(n);
    for x in 0..n {
        let f = fixed.row(x);
        let na = g.num_actions(free, x);
        let bonus = fixed_bonus * entropy(f);
        let mut cx = Vec::with_capacity(na);
        let mut mx = Vec::with_capacity(na);
        for a in 0..na {
            let point = |k: usize| {
                let mut e = vec![0.0; na.max(1)];
                e[k] = 1.0;
                e
            };
            let (r, row) = match free {
                Player::One => induced_row(g, x, &point(a), f),
                Player::Two => induced_row(g, x, f, &point(a)),
            };
            cx.push(r + bonus);
            mx.push(row);
        }
        consts.push(cx);
        moves.push(mx);
    }

    let sign = if free == Player::One { 1.0 } else { -1.0 };
    let backup = |q: &[f64]| -> f64 {
        match beta_free {
            Beta::Finite(b) => {
                let z: Vec<f64> = q.iter().map(|v| sign * b * v).collect();
                sign * log_sum_exp(&z) / b
            }
            Beta::Infinite => q.iter().map(|v| sign * v).fold(f64::NEG_INFINITY, f64::max) * sign,
        }
    };
    let q_values = |v: &[f64], x: usize| -> Vec<f64> {
        consts[x]
            .iter()
            .zip(&moves[x])
            .map(|(c, row)| c + gamma * row.iter().map(|&(y, p)| p * v[y]).sum::<f64>())
            .collect()
    };

    let mut v = vec![0.0; n];
    let threshold = 1e-12 * (1.0 - gamma) / gamma;
    let mut converged = false;
    for _ in 0..MAX_RESPONSE_SWEEPS {
        let next: Vec<f64> = (0..n).map(|x| backup(&q_values(&v, x))).collect();
        let delta = sup_distance(&next, &v);
        let scale = next.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        v = next;
        if delta <= threshold.max(16.0 * f64::EPSILON * scale) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(EvalError::NotConverged(f64::NAN));
    }

    let rows = (0..n)
        .map(|x| {
            let q = q_values(&v, x);
            match beta_free {
                Beta::Finite(b) => softmax(&q.iter().map(|v| sign * b * v).collect::<Vec<_>>()),
                Beta::Infinite => {
                    let best = (0..q.len())
                        .max_by(|&i, &j| (sign * q[i]).total_cmp(&(sign * q[j])).then(j.cmp(&i)))
                        .expect("at least one action");
                    let mut e = vec![0.0; q.len()];
                    e[best] = 1.0;
                    e
                }
            }
        })
        .collect();
    Ok((StationaryStrategy::new(rows), ValueFunction(v)))
}

/// Improvement available to each player by deviating unilaterally from
/// `(sigma, tau)`, per start state: `(BR₁(τ) − Φ_∞, Φ_∞ − BR₂(σ))`.
#[derive(Clone, Debug, PartialEq)]
pub struct Exploitability {
    pub phi: ValueFunction,
    pub p1: ValueFunction,
    pub p2: ValueFunction,
}

pub fn exploitability(
    g: &Game,
    cfg: &RegularizationConfig,
    sigma: &StationaryStrategy,
    tau: &StationaryStrategy,
) -> Result<Exploitability, EvalError> {
    let phi = phi_inf(g, cfg, sigma, tau)?;
    let (_, br1) = best_response_value(g, cfg, tau, Player::Two)?;
    let (_, br2) = best_response_value(g, cfg, sigma, Player::One)?;
    let p1 = ValueFunction(br1.iter().zip(phi.iter()).map(|(b, v)| b - v).collect());
    let p2 = ValueFunction(phi.iter().zip(br2.iter()).map(|(v, b)| v - b).collect());
    Ok(Exploitability { phi, p1, p2 })
}
