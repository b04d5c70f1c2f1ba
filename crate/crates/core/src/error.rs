use thiserror::Error;

use crate::discounted::DiscountedSolution;
use crate::game::{ConfigError, GameError};
use crate::nstage::NStageSolution;
use crate::oneshot::OneShotError;

/// Failure of a multi-state solver.
///
/// The non-convergence variants still carry a complete best-effort solution
/// so callers can persist it.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
    #[error("{}: {source}", location(*.stage, *.state))]
    OneShot {
        stage: Option<usize>,
        state: usize,
        #[source]
        source: OneShotError,
    },
    #[error("{} did not reach the requested gap (worst gap {:e})", location(Some(*.stage), *.state), .best.max_gap)]
    NStageNotConverged {
        stage: usize,
        state: usize,
        best: Box<NStageSolution>,
    },
    #[error("value iteration stopped after {} sweeps with residual {:e}: {reason}", .best.sweeps, .best.residual)]
    DiscountedNotConverged {
        reason: String,
        residuals: Vec<f64>,
        best: Box<DiscountedSolution>,
    },
}

fn location(stage: Option<usize>, state: usize) -> String {
    match stage {
        Some(t) => format!("stage {t}, state {state}"),
        None => format!("state {state}"),
    }
}
