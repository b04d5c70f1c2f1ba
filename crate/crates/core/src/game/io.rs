//! JSON game files.
//!
//! ```json
//! {"states": 2, "actions_p1": 2, "actions_p2": [2, 1],
//!  "transition": [[0, 0, 0, [0.5, 0.5]], [0, 0, 1, [[1, 1.0]]], ...],
//!  "payoff": [[0, 1, 0, -1.0]], "terminal_payoff": [0, 1], "labels": {"0": "a"}}
//! ```
//!
//! Transition rows are dense probability vectors or sparse `[next, p]` lists.
//! Action counts are a single integer or one integer per state. Missing
//! payoffs and a missing terminal payoff default to zero.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Game, GameBuilder, GameError, Kernel, KernelRow};

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ActionCounts {
    Uniform(usize),
    PerState(Vec<usize>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RowSpec {
    Dense(Vec<f64>),
    Sparse(Vec<(usize, f64)>),
}

#[derive(Serialize, Deserialize)]
struct GameFile {
    states: usize,
    actions_p1: ActionCounts,
    actions_p2: ActionCounts,
    transition: Vec<(usize, usize, usize, RowSpec)>,
    #[serde(default)]
    payoff: Vec<(usize, usize, usize, f64)>,
    #[serde(default)]
    terminal_payoff: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    labels: BTreeMap<usize, String>,
}

fn expand(counts: ActionCounts, n: usize) -> Vec<usize> {
    match counts {
        ActionCounts::Uniform(k) => vec![k; n],
        ActionCounts::PerState(v) => v,
    }
}

fn compress(counts: &[usize]) -> ActionCounts {
    match counts.first() {
        Some(&k) if counts.iter().all(|&c| c == k) => ActionCounts::Uniform(k),
        _ => ActionCounts::PerState(counts.to_vec()),
    }
}

/// Parses a game without validating its invariants.
pub fn game_from_json(text: &str) -> Result<Game, GameError> {
    let file: GameFile = serde_json::from_str(text)?;
    let n = file.states;
    let a1 = expand(file.actions_p1, n);
    let a2 = expand(file.actions_p2, n);
    if a1.len() != n {
        return Err(GameError::ActionCountLength { len: a1.len(), expected: n });
    }
    let mut b = GameBuilder::with_action_counts(a1, a2)?;
    for (x, u, w, row) in file.transition {
        match row {
            RowSpec::Dense(p) => b.set_transition(x, u, w, &p)?,
            RowSpec::Sparse(e) => b.set_transition_sparse(x, u, w, &e)?,
        };
    }
    for (x, u, w, r) in file.payoff {
        b.set_payoff(x, u, w, r)?;
    }
    if let Some(t) = file.terminal_payoff {
        b.set_terminal_payoff(t)?;
    }
    for (x, l) in file.labels {
        b.set_label(x, l)?;
    }
    Ok(b.build_unchecked())
}

pub fn game_to_json(g: &Game) -> String {
    let n = g.num_states();
    let mut transition = Vec::with_capacity(g.num_rows());
    let mut payoff = Vec::new();
    for x in 0..n {
        for u in 0..g.actions_p1(x) {
            for w in 0..g.actions_p2(x) {
                let row = match (g.kernel(), g.transition(x, u, w)) {
                    (Kernel::Dense { .. }, KernelRow::Dense(p)) => RowSpec::Dense(p.to_vec()),
                    (_, r) => RowSpec::Sparse(r.iter().collect()),
                };
                transition.push((x, u, w, row));
                let r = g.payoff(x, u, w);
                if r != 0.0 {
                    payoff.push((x, u, w, r));
                }
            }
        }
    }
    let file = GameFile {
        states: n,
        actions_p1: compress(g.action_counts(super::Player::One)),
        actions_p2: compress(g.action_counts(super::Player::Two)),
        transition,
        payoff,
        terminal_payoff: Some(g.terminal_payoff().to_vec()),
        labels: g.labels().clone(),
    };
    serde_json::to_string(&file).expect("game serialization cannot fail")
}

pub fn read_game(path: impl AsRef<Path>) -> Result<Game, GameError> {
    game_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_game(g: &Game, path: impl AsRef<Path>) -> Result<(), GameError> {
    std::fs::write(path, game_to_json(g))?;
    Ok(())
}
