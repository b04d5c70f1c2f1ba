use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Game, Player, PROB_TOL};
use crate::numerics::is_distribution;

#[derive(Debug, Error, PartialEq)]
pub enum StrategyError {
    #[error("strategy covers {got} states, game has {expected}")]
    StateCount { got: usize, expected: usize },
    #[error("state {state}: {got} action probabilities, expected {expected}")]
    ActionCount { state: usize, got: usize, expected: usize },
    #[error("state {state}: not a probability distribution")]
    NotDistribution { state: usize },
    #[error("strategy has {got} stages, expected {expected}")]
    Horizon { got: usize, expected: usize },
}

/// Per-state action distribution, independent of the stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StationaryStrategy {
    rows: Vec<Vec<f64>>,
}

impl StationaryStrategy {
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        Self { rows }
    }

    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Vec<f64>> {
        self.rows
    }

    /// Shape and distribution check against `player`'s action sets in `g`.
    pub fn check(&self, g: &Game, player: Player) -> Result<(), StrategyError> {
        if self.rows.len() != g.num_states() {
            return Err(StrategyError::StateCount {
                got: self.rows.len(),
                expected: g.num_states(),
            });
        }
        for (x, row) in self.rows.iter().enumerate() {
            let n = g.num_actions(player, x);
            if row.len() != n {
                return Err(StrategyError::ActionCount { state: x, got: row.len(), expected: n });
            }
            if !is_distribution(row, PROB_TOL) {
                return Err(StrategyError::NotDistribution { state: x });
            }
        }
        Ok(())
    }
}

/// One [`StationaryStrategy`]-shaped table per stage (index 0 is stage 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MarkovStrategy {
    stages: Vec<StationaryStrategy>,
}

impl MarkovStrategy {
    pub fn new(stages: Vec<StationaryStrategy>) -> Self {
        Self { stages }
    }

    /// The same table at every one of `horizon` stages.
    pub fn repeat(s: &StationaryStrategy, horizon: usize) -> Self {
        Self { stages: vec![s.clone(); horizon] }
    }

    pub fn horizon(&self) -> usize {
        self.stages.len()
    }

    /// Table for stage `t`, zero-based.
    pub fn stage(&self, t: usize) -> &StationaryStrategy {
        &self.stages[t]
    }

    pub fn stages(&self) -> &[StationaryStrategy] {
        &self.stages
    }

    pub fn check(&self, g: &Game, player: Player, horizon: usize) -> Result<(), StrategyError> {
        if self.stages.len() < horizon {
            return Err(StrategyError::Horizon { got: self.stages.len(), expected: horizon });
        }
        self.stages.iter().try_for_each(|s| s.check(g, player))
    }
}

/// Real vector indexed by state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueFunction(pub Vec<f64>);

impl ValueFunction {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn sup_distance(&self, other: &ValueFunction) -> f64 {
        crate::numerics::sup_distance(&self.0, &other.0)
    }
}

impl Deref for ValueFunction {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ValueFunction {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for ValueFunction {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}
