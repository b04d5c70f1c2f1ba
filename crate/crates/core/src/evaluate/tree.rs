//! Exhaustive evaluation over history trees, for tiny games only.

use std::fmt;
use std::sync::Arc;

use super::EvalError;
use crate::game::{Game, MarkovStrategy, Player, RegularizationConfig, PROB_TOL, StationaryStrategy};
use crate::numerics::{entropy, is_distribution};

/// Largest number of tree nodes `phi_n_tree` will visit.
pub const MAX_HISTORIES: usize = 1_000_000;

/// `h_t = (x¹..xᵗ, u¹..uᵗ⁻¹, w¹..wᵗ⁻¹)`; the stage is `states.len()`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct History {
    pub states: Vec<usize>,
    pub actions_p1: Vec<usize>,
    pub actions_p2: Vec<usize>,
}

impl History {
    pub fn stage(&self) -> usize {
        self.states.len()
    }

    pub fn current(&self) -> usize {
        *self.states.last().expect("histories start with a state")
    }
}

type Rule = dyn Fn(&History) -> Vec<f64> + Send + Sync;

/// Action distribution as an arbitrary function of the observed history.
#[derive(Clone)]
pub struct HistoryStrategy {
    rule: Arc<Rule>,
}

impl fmt::Debug for HistoryStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("HistoryStrategy")
    }
}

impl HistoryStrategy {
    pub fn new(rule: impl Fn(&History) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self { rule: Arc::new(rule) }
    }

    pub fn from_markov(m: MarkovStrategy) -> Self {
        Self::new(move |h| m.stage(h.stage() - 1).row(h.current()).to_vec())
    }

    pub fn from_stationary(s: StationaryStrategy) -> Self {
        Self::new(move |h| s.row(h.current()).to_vec())
    }

    pub fn distribution(&self, h: &History) -> Vec<f64> {
        (self.rule)(h)
    }
}

/// `Φ_N` by enumerating every history with positive probability. The causal
/// entropy term `H(U_t | X^t, U^{t−1}, W^{t−1})` is the probability-weighted
/// entropy of the distribution each history prescribes.
pub fn phi_n_tree(
    g: &Game,
    cfg: &RegularizationConfig,
    sigma: &HistoryStrategy,
    tau: &HistoryStrategy,
    mu1: &[f64],
) -> Result<f64, EvalError> {
    let horizon = cfg.horizon()?;
    super::check_mu(g, mu1)?;
    let mut walk = Walk { g, cfg, horizon, sigma, tau, nodes: 0, total: 0.0 };
    for (x, &p) in mu1.iter().enumerate() {
        if p > 0.0 {
            let mut h = History { states: vec![x], ..History::default() };
            walk.visit(&mut h, p)?;
        }
    }
    Ok(walk.total)
}

struct Walk<'a> {
    g: &'a Game,
    cfg: &'a RegularizationConfig,
    horizon: usize,
    sigma: &'a HistoryStrategy,
    tau: &'a HistoryStrategy,
    nodes: usize,
    total: f64,
}

impl Walk<'_> {
    fn visit(&mut self, h: &mut History, prob: f64) -> Result<(), EvalError> {
        self.nodes += 1;
        if self.nodes > MAX_HISTORIES {
            return Err(EvalError::TooManyHistories(MAX_HISTORIES));
        }
        let x = h.current();
        let t = h.stage();
        if t > self.horizon {
            self.total += prob * self.g.terminal_payoff()[x];
            return Ok(());
        }
        let s = self.sigma.distribution(h);
        let w = self.tau.distribution(h);
        if s.len() != self.g.actions_p1(x) || !is_distribution(&s, PROB_TOL) {
            return Err(EvalError::HistoryRule { player: Player::One, stage: t });
        }
        if w.len() != self.g.actions_p2(x) || !is_distribution(&w, PROB_TOL) {
            return Err(EvalError::HistoryRule { player: Player::Two, stage: t });
        }
        self.total += prob * (self.cfg.beta1.inverse() * entropy(&s) - self.cfg.beta2.inverse() * entropy(&w));
        for (u, &su) in s.iter().enumerate() {
            for (wi, &tw) in w.iter().enumerate() {
                let q = prob * su * tw;
                if q == 0.0 {
                    continue;
                }
                self.total += q * self.g.payoff(x, u, wi);
                for (y, p) in self.g.transition(x, u, wi).iter() {
                    if p == 0.0 {
                        continue;
                    }
                    h.states.push(y);
                    h.actions_p1.push(u);
                    h.actions_p2.push(wi);
                    let r = self.visit(h, q * p);
                    h.states.pop();
                    h.actions_p1.pop();
                    h.actions_p2.pop();
                    r?;
                }
            }
        }
        Ok(())
    }
}
