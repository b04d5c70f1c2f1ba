//! Rationality sweeps: strategies computed on one grid map, replayed on
//! perturbed maps.
//!
//! Player 1 plays the regularized equilibrium strategy for `β₁ = β₂ = β`;
//! player 2 plays the unregularized equilibrium strategy (or, optionally, the
//! same regularized one). Both are computed on `solve_map` and transferred to
//! each evaluation map by cell-pair label.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discounted::{solve_discounted, DiscountedSolution};
use crate::error::SolveError;
use crate::evaluate::{exploitability, win_probability, EvalError};
use crate::game::{Beta, ConfigError, RegularizationConfig, StationaryStrategy};
use crate::gridworld::{build_game, load_map, MapError, ProductGame};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Opponent {
    /// Player 2 plays its unregularized equilibrium strategy.
    #[default]
    Nash,
    /// Player 2 plays the equilibrium strategy of the same `β`.
    Regularized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub solve_map: String,
    pub eval_maps: Vec<String>,
    pub beta_list: Vec<Beta>,
    pub opponent: Opponent,
    pub gamma: f64,
    /// Sup-norm tolerance of the discounted solves.
    pub tol: f64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            solve_map: "builtin:nominal".into(),
            eval_maps: ["nominal", "blocked", "side"].iter().map(|m| format!("builtin:{m}")).collect(),
            beta_list: (2..=10).map(|b| Beta::Finite(b as f64)).collect(),
            opponent: Opponent::Nash,
            gamma: 0.8,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error("solving at beta1={beta1}, beta2={beta2}: {source}")]
    Solve {
        beta1: Beta,
        beta2: Beta,
        #[source]
        source: SolveError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TransferError {
    #[error("map sizes differ: {from:?} vs {to:?}")]
    Shape { from: (usize, usize), to: (usize, usize) },
    #[error("state {0} has no counterpart on the source map")]
    MissingState(String),
}

/// Re-indexes a strategy from `from` onto `to`, matching states by their
/// cell pair. Moves into cells that are walls on `to` resolve to stay through
/// the dynamics of `to`, so action distributions carry over unchanged.
pub fn transfer_strategy(
    s: &StationaryStrategy,
    from: &ProductGame,
    to: &ProductGame,
) -> Result<StationaryStrategy, TransferError> {
    let (a, b) = ((from.map.width, from.map.height), (to.map.width, to.map.height));
    if a != b {
        return Err(TransferError::Shape { from: a, to: b });
    }
    let rows = (0..to.game.num_states())
        .map(|x| {
            let source = if x == to.win_sink {
                Some(from.win_sink)
            } else if x == to.capture_sink {
                Some(from.capture_sink)
            } else {
                to.cells(x).and_then(|(c1, c2)| from.state(c1, c2))
            };
            source
                .map(|y| s.row(y).to_vec())
                .ok_or_else(|| TransferError::MissingState(to.game.label(x).unwrap_or("?").to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(StationaryStrategy::new(rows))
}

/// One (β, evaluation map) point of a sweep. `beta1`/`beta2` describe the
/// strategies as played and parameterize `phi` and the exploitabilities, all
/// measured at `start_state`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta1: Beta,
    pub beta2: Beta,
    pub solve_map: String,
    pub eval_map: String,
    pub start_state: String,
    pub win_prob: f64,
    pub phi: f64,
    pub exploitability_p1: f64,
    pub exploitability_p2: f64,
}

pub const CSV_HEADER: &str =
    "beta1,beta2,solve_map,eval_map,start_state,win_prob,phi,exploitability_p1,exploitability_p2";

impl ExperimentSpec {
    pub fn check(&self) -> Result<(), ExperimentError> {
        if self.beta_list.is_empty() {
            return Err(ExperimentError::Invalid("beta_list is empty".into()));
        }
        if self.eval_maps.is_empty() {
            return Err(ExperimentError::Invalid("eval_maps is empty".into()));
        }
        if !(self.tol > 0.0) {
            return Err(ExperimentError::Invalid(format!("tol must be positive, got {}", self.tol)));
        }
        RegularizationConfig::discounted(Beta::Infinite, Beta::Infinite, self.gamma)?;
        Ok(())
    }
}

fn solve(p: &ProductGame, beta1: Beta, beta2: Beta, spec: &ExperimentSpec) -> Result<DiscountedSolution, ExperimentError> {
    let cfg = RegularizationConfig::discounted(beta1, beta2, spec.gamma)?;
    solve_discounted(&p.game, &cfg, spec.tol).map_err(|source| ExperimentError::Solve { beta1, beta2, source })
}

/// Runs every (β, evaluation map) point. Rows are sorted by β, then by the
/// evaluation map's position in `eval_maps`.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepRow>, ExperimentError> {
    spec.check()?;
    let base = build_game(&load_map(&spec.solve_map)?);
    let evals: Vec<(String, ProductGame)> = spec
        .eval_maps
        .iter()
        .map(|m| Ok((m.clone(), build_game(&load_map(m)?))))
        .collect::<Result<_, ExperimentError>>()?;
    // Fail on transfer problems before any solving.
    let probe = StationaryStrategy::new(vec![Vec::new(); base.game.num_states()]);
    for (_, e) in &evals {
        transfer_strategy(&probe, &base, e)?;
    }
    let nash = match spec.opponent {
        Opponent::Nash => Some(solve(&base, Beta::Infinite, Beta::Infinite, spec)?),
        Opponent::Regularized => None,
    };

    let per_beta: Vec<Vec<SweepRow>> = spec
        .beta_list
        .par_iter()
        .map(|&beta| {
            let own = match (&nash, beta) {
                (Some(n), Beta::Infinite) => n.clone(),
                _ => solve(&base, beta, beta, spec)?,
            };
            let (tau, beta2) = match &nash {
                Some(n) => (&n.tau, Beta::Infinite),
                None => (&own.tau, beta),
            };
            let cfg = RegularizationConfig::discounted(beta, beta2, spec.gamma)?;
            evals
                .par_iter()
                .map(|(name, e)| {
                    let sigma = transfer_strategy(&own.sigma, &base, e)?;
                    let tau = transfer_strategy(tau, &base, e)?;
                    let start = e.start_state();
                    let win = win_probability(&e.game, &sigma, &tau, &[e.win_sink], &[e.capture_sink], start)?;
                    let ex = exploitability(&e.game, &cfg, &sigma, &tau)?;
                    Ok(SweepRow {
                        beta1: beta,
                        beta2,
                        solve_map: spec.solve_map.clone(),
                        eval_map: name.clone(),
                        start_state: e.game.label(start).unwrap_or_default().to_string(),
                        win_prob: win.win,
                        phi: ex.phi[start],
                        exploitability_p1: ex.p1[start],
                        exploitability_p2: ex.p2[start],
                    })
                })
                .collect()
        })
        .collect::<Result<_, ExperimentError>>()?;

    let mut rows: Vec<SweepRow> = per_beta.into_iter().flatten().collect();
    let map_pos = |m: &str| spec.eval_maps.iter().position(|e| e == m).unwrap_or(usize::MAX);
    rows.sort_by(|a, b| {
        a.beta1
            .as_f64()
            .total_cmp(&b.beta1.as_f64())
            .then(map_pos(&a.eval_map).cmp(&map_pos(&b.eval_map)))
    });
    Ok(rows)
}
