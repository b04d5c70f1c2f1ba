//! Solvers for two-player zero-sum stochastic games whose payoffs are
//! regularized by the causal entropy of each player's strategy.
//!
//! * [`oneshot`]: the single-state regularized matrix game.
//! * [`nstage`]: backward recursion for N-stage games.
//! * [`discounted`]: Shapley value iteration for discounted games.
//! * [`evaluate`]: exact evaluation of strategy pairs, win probabilities and
//!   best responses.
//! * [`gridworld`]: the pursuit-evasion grid game and its built-in maps.
//! * [`experiment`]: rationality sweeps across perturbed maps.

pub mod discounted;
mod error;
pub mod evaluate;
pub mod experiment;
pub mod game;
pub mod gridworld;
pub mod nstage;
pub mod numerics;
pub mod oneshot;

pub use discounted::{solve_discounted, DiscountedSolution};
pub use error::SolveError;
pub use nstage::{solve_nstage, NStageSolution};

pub use game::{
    uniform_strategy, validate_game, Beta, Criterion, Game, GameBuilder, GameError, MarkovStrategy,
    Player, RegularizationConfig, StationaryStrategy, ValueFunction, Violation,
};
