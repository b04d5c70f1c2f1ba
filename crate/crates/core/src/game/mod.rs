//! Stochastic game data model.
//!
//! States and actions are dense indices. Action sets may differ per state
//! (absorbing sinks carry a single action), so every `(x, u, w)` triple is
//! mapped to a flat row index through per-state offsets.

mod config;
pub mod io;
mod kernel;
mod strategy;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub use config::{Beta, ConfigError, Criterion, RegularizationConfig};
pub use kernel::{Kernel, KernelRow, RowIter};
pub use strategy::{MarkovStrategy, StationaryStrategy, StrategyError, ValueFunction};

/// Tolerance for probability-vector validation.
pub const PROB_TOL: f64 = 1e-9;
/// Tolerance for file round-trips of probabilities and payoffs.
pub const ROUNDTRIP_TOL: f64 = 1e-15;

/// Fraction of nonzero kernel entries below which rows are stored sparsely.
const SPARSE_DENSITY: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Player {
    /// The maximizer.
    One,
    /// The minimizer.
    Two,
}

impl Player {
    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            1 => Some(Player::One),
            2 => Some(Player::Two),
            _ => None,
        }
    }

    pub fn opponent(self) -> Self {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }
}

#[derive(Debug, Error)]
pub enum GameError {
    #[error("state {state} out of range (game has {num_states} states)")]
    StateOutOfRange { state: usize, num_states: usize },
    #[error("action ({u}, {w}) out of range at state {state}")]
    ActionOutOfRange { state: usize, u: usize, w: usize },
    #[error("transition row at ({x}, {u}, {w}) has length {len}, expected {expected}")]
    RowLength {
        x: usize,
        u: usize,
        w: usize,
        len: usize,
        expected: usize,
    },
    #[error("action count list has length {len}, expected {expected}")]
    ActionCountLength { len: usize, expected: usize },
    #[error("terminal payoff has length {len}, expected {expected}")]
    TerminalLength { len: usize, expected: usize },
    #[error("invalid game: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed game file: {0}")]
    Json(#[from] serde_json::Error),
}

/// One failed game invariant, with coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NoStates,
    NoActions { state: usize, player: Player },
    RowSum { x: usize, u: usize, w: usize, sum: f64 },
    NegativeProbability { x: usize, u: usize, w: usize, next: usize, p: f64 },
    NonFiniteProbability { x: usize, u: usize, w: usize, next: usize },
    NonFinitePayoff { x: usize, u: usize, w: usize },
    NonFiniteTerminal { x: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoStates => write!(f, "game has no states"),
            Violation::NoActions { state, player } => {
                write!(f, "player {:?} has no actions at state {state}", player)
            }
            Violation::RowSum { x, u, w, sum } => {
                write!(f, "row sum {sum} ≠ 1 at (x={x}, u={u}, w={w})")
            }
            Violation::NegativeProbability { x, u, w, next, p } => {
                write!(f, "negative probability {p} to state {next} at (x={x}, u={u}, w={w})")
            }
            Violation::NonFiniteProbability { x, u, w, next } => {
                write!(f, "non-finite probability to state {next} at (x={x}, u={u}, w={w})")
            }
            Violation::NonFinitePayoff { x, u, w } => {
                write!(f, "non-finite payoff at (x={x}, u={u}, w={w})")
            }
            Violation::NonFiniteTerminal { x } => write!(f, "non-finite terminal payoff at state {x}"),
        }
    }
}

/// A finite two-player zero-sum stochastic game.
///
/// `payoff(x, u, w)` is paid by player 2 to player 1. Immutable once built.
#[derive(Clone, Debug)]
pub struct Game {
    num_states: usize,
    actions_p1: Vec<usize>,
    actions_p2: Vec<usize>,
    offsets: Vec<usize>,
    kernel: Kernel,
    payoff: Vec<f64>,
    terminal: Vec<f64>,
    labels: BTreeMap<usize, String>,
}

impl Game {
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self, player: Player, x: usize) -> usize {
        match player {
            Player::One => self.actions_p1[x],
            Player::Two => self.actions_p2[x],
        }
    }

    pub fn actions_p1(&self, x: usize) -> usize {
        self.actions_p1[x]
    }

    pub fn actions_p2(&self, x: usize) -> usize {
        self.actions_p2[x]
    }

    /// Per-state action counts for `player`.
    pub fn action_counts(&self, player: Player) -> &[usize] {
        match player {
            Player::One => &self.actions_p1,
            Player::Two => &self.actions_p2,
        }
    }

    /// Total number of `(x, u, w)` rows.
    pub fn num_rows(&self) -> usize {
        self.offsets[self.num_states]
    }

    #[inline]
    pub fn row_index(&self, x: usize, u: usize, w: usize) -> usize {
        debug_assert!(u < self.actions_p1[x] && w < self.actions_p2[x]);
        self.offsets[x] + u * self.actions_p2[x] + w
    }

    #[inline]
    pub fn transition(&self, x: usize, u: usize, w: usize) -> KernelRow<'_> {
        self.kernel.row(self.row_index(x, u, w))
    }

    #[inline]
    pub fn payoff(&self, x: usize, u: usize, w: usize) -> f64 {
        self.payoff[self.row_index(x, u, w)]
    }

    pub fn terminal_payoff(&self) -> &[f64] {
        &self.terminal
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn label(&self, x: usize) -> Option<&str> {
        self.labels.get(&x).map(String::as_str)
    }

    pub fn labels(&self) -> &BTreeMap<usize, String> {
        &self.labels
    }

    /// `Σ_{x'} P(x'|x,u,w) v(x')`.
    #[inline]
    pub fn expected_next(&self, x: usize, u: usize, w: usize, v: &[f64]) -> f64 {
        self.transition(x, u, w).expect(v)
    }

    /// `max |R|` over all stage payoffs.
    pub fn max_abs_payoff(&self) -> f64 {
        self.payoff.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Returns every invariant violation; empty iff the game is valid.
    pub fn validate(&self) -> Vec<Violation> {
        validate_game(self)
    }

    /// `Ok(())` iff the game is valid.
    pub fn check(&self) -> Result<(), GameError> {
        let violations = validate_game(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(GameError::Invalid(violations))
        }
    }
}

/// Reports every violation of the game invariants with coordinates.
pub fn validate_game(g: &Game) -> Vec<Violation> {
    let mut out = Vec::new();
    if g.num_states == 0 {
        out.push(Violation::NoStates);
        return out;
    }
    for x in 0..g.num_states {
        if g.actions_p1[x] == 0 {
            out.push(Violation::NoActions { state: x, player: Player::One });
        }
        if g.actions_p2[x] == 0 {
            out.push(Violation::NoActions { state: x, player: Player::Two });
        }
        for u in 0..g.actions_p1[x] {
            for w in 0..g.actions_p2[x] {
                let mut sum = 0.0;
                for (next, p) in g.transition(x, u, w).iter() {
                    if !p.is_finite() {
                        out.push(Violation::NonFiniteProbability { x, u, w, next });
                        continue;
                    }
                    if p < 0.0 {
                        out.push(Violation::NegativeProbability { x, u, w, next, p });
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > PROB_TOL {
                    out.push(Violation::RowSum { x, u, w, sum });
                }
                if !g.payoff(x, u, w).is_finite() {
                    out.push(Violation::NonFinitePayoff { x, u, w });
                }
            }
        }
        if !g.terminal[x].is_finite() {
            out.push(Violation::NonFiniteTerminal { x });
        }
    }
    out
}

/// Uniform distribution over `player`'s actions at every state.
pub fn uniform_strategy(g: &Game, player: Player) -> StationaryStrategy {
    StationaryStrategy::new(
        g.action_counts(player)
            .iter()
            .map(|&n| crate::numerics::uniform(n))
            .collect(),
    )
}

/// Incremental construction of a [`Game`].
#[derive(Clone, Debug)]
pub struct GameBuilder {
    num_states: usize,
    actions_p1: Vec<usize>,
    actions_p2: Vec<usize>,
    offsets: Vec<usize>,
    rows: Vec<Vec<(usize, f64)>>,
    payoff: Vec<f64>,
    terminal: Vec<f64>,
    labels: BTreeMap<usize, String>,
}

impl GameBuilder {
    /// Same action counts at every state.
    pub fn new(num_states: usize, actions_p1: usize, actions_p2: usize) -> Self {
        Self::with_action_counts(vec![actions_p1; num_states], vec![actions_p2; num_states])
            .expect("lengths match by construction")
    }

    pub fn with_action_counts(
        actions_p1: Vec<usize>,
        actions_p2: Vec<usize>,
    ) -> Result<Self, GameError> {
        let num_states = actions_p1.len();
        if actions_p2.len() != num_states {
            return Err(GameError::ActionCountLength {
                len: actions_p2.len(),
                expected: num_states,
            });
        }
        let mut offsets = Vec::with_capacity(num_states + 1);
        let mut acc = 0;
        offsets.push(0);
        for x in 0..num_states {
            acc += actions_p1[x] * actions_p2[x];
            offsets.push(acc);
        }
        Ok(Self {
            num_states,
            actions_p1,
            actions_p2,
            offsets,
            rows: vec![Vec::new(); acc],
            payoff: vec![0.0; acc],
            terminal: vec![0.0; num_states],
            labels: BTreeMap::new(),
        })
    }

    fn index(&self, x: usize, u: usize, w: usize) -> Result<usize, GameError> {
        if x >= self.num_states {
            return Err(GameError::StateOutOfRange { state: x, num_states: self.num_states });
        }
        if u >= self.actions_p1[x] || w >= self.actions_p2[x] {
            return Err(GameError::ActionOutOfRange { state: x, u, w });
        }
        Ok(self.offsets[x] + u * self.actions_p2[x] + w)
    }

    /// Sets a full row `P(·|x,u,w)` of length `num_states`.
    pub fn set_transition(
        &mut self,
        x: usize,
        u: usize,
        w: usize,
        probs: &[f64],
    ) -> Result<&mut Self, GameError> {
        let r = self.index(x, u, w)?;
        if probs.len() != self.num_states {
            return Err(GameError::RowLength {
                x,
                u,
                w,
                len: probs.len(),
                expected: self.num_states,
            });
        }
        self.rows[r] = probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0.0)
            .map(|(i, &p)| (i, p))
            .collect();
        Ok(self)
    }

    /// Sets a row from `(next_state, probability)` pairs; duplicates are summed.
    pub fn set_transition_sparse(
        &mut self,
        x: usize,
        u: usize,
        w: usize,
        entries: &[(usize, f64)],
    ) -> Result<&mut Self, GameError> {
        let r = self.index(x, u, w)?;
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for &(next, p) in entries {
            if next >= self.num_states {
                return Err(GameError::StateOutOfRange {
                    state: next,
                    num_states: self.num_states,
                });
            }
            *merged.entry(next).or_insert(0.0) += p;
        }
        self.rows[r] = merged.into_iter().filter(|&(_, p)| p != 0.0).collect();
        Ok(self)
    }

    /// Deterministic move to `next`.
    pub fn set_deterministic(
        &mut self,
        x: usize,
        u: usize,
        w: usize,
        next: usize,
    ) -> Result<&mut Self, GameError> {
        self.set_transition_sparse(x, u, w, &[(next, 1.0)])
    }

    pub fn set_payoff(&mut self, x: usize, u: usize, w: usize, r: f64) -> Result<&mut Self, GameError> {
        let i = self.index(x, u, w)?;
        self.payoff[i] = r;
        Ok(self)
    }

    pub fn set_terminal_payoff(&mut self, terminal: Vec<f64>) -> Result<&mut Self, GameError> {
        if terminal.len() != self.num_states {
            return Err(GameError::TerminalLength {
                len: terminal.len(),
                expected: self.num_states,
            });
        }
        self.terminal = terminal;
        Ok(self)
    }

    pub fn set_label(&mut self, x: usize, label: impl Into<String>) -> Result<&mut Self, GameError> {
        if x >= self.num_states {
            return Err(GameError::StateOutOfRange { state: x, num_states: self.num_states });
        }
        self.labels.insert(x, label.into());
        Ok(self)
    }

    /// Builds and validates.
    pub fn build(self) -> Result<Game, GameError> {
        let g = self.build_unchecked();
        g.check()?;
        Ok(g)
    }

    /// Builds without validation, for diagnostics on malformed input.
    pub fn build_unchecked(self) -> Game {
        let nnz: usize = self.rows.iter().map(Vec::len).sum();
        let dense_size = self.rows.len() * self.num_states;
        let kernel = if dense_size > 0 && (nnz as f64) < SPARSE_DENSITY * dense_size as f64 {
            Kernel::sparse(self.rows)
        } else {
            Kernel::dense(self.rows, self.num_states)
        };
        Game {
            num_states: self.num_states,
            actions_p1: self.actions_p1,
            actions_p2: self.actions_p2,
            offsets: self.offsets,
            kernel,
            payoff: self.payoff,
            terminal: self.terminal,
            labels: self.labels,
        }
    }
}
