use std::io::Write;

use anyhow::{anyhow, Context};
use clap::{Args, ValueEnum};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use serde_json::Value;

use ersg_core::discounted::{solve_discounted_with, DiscountedOptions};
use ersg_core::evaluate::{exploitability, phi_inf, phi_n, win_probability, EvalError};
use ersg_core::experiment::{run_sweep, ExperimentError, ExperimentSpec, Opponent, SweepRow};
use ersg_core::game::io::game_from_json;
use ersg_core::oneshot::{self, OneShotError, OneShotProblem};
use ersg_core::{
    solve_nstage, validate_game, Beta, GameError, MarkovStrategy, RegularizationConfig, SolveError, ValueFunction,
};

use crate::input::{load_game, load_strategy, resolve_state, LoadedStrategy};
use crate::{Failure, Globals, EXIT_NOT_CONVERGED, EXIT_TRANSFER};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Nstage,
    Discounted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Init {
    Zero,
    /// Uniform in `±max|R|/(1−γ)`, drawn from `--seed`.
    Random,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// `builtin:<map>`, a JSON game file or an ASCII map file.
    #[arg(long)]
    game: String,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Positive number or `inf`.
    #[arg(long)]
    beta1: Beta,
    #[arg(long)]
    beta2: Beta,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Starting value function of discounted value iteration.
    #[arg(long, value_enum, default_value_t = Init::Zero)]
    init: Init,
    #[arg(long)]
    max_sweeps: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    game: String,
    /// Solution file (its `sigma` field) or a bare strategy array.
    #[arg(long)]
    sigma: String,
    /// Solution file (its `tau` field) or a bare strategy array.
    #[arg(long)]
    tau: String,
    #[arg(long, default_value = "inf")]
    beta1: Beta,
    #[arg(long, default_value = "inf")]
    beta2: Beta,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Report the regularized objective.
    #[arg(long)]
    phi: bool,
    /// Report the probability of reaching a win state before a lose state.
    #[arg(long)]
    win: bool,
    /// Report each player's gain from a best response.
    #[arg(long)]
    exploitability: bool,
    /// Index or label; the grid start or state 0 when absent.
    #[arg(long)]
    start: Option<String>,
    /// Win states for non-grid games.
    #[arg(long, value_delimiter = ',')]
    win_states: Vec<String>,
    /// Lose states for non-grid games.
    #[arg(long, value_delimiter = ',')]
    lose_states: Vec<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value = "builtin:nominal")]
    solve_map: String,
    #[arg(long, value_delimiter = ',', default_value = "builtin:nominal,builtin:blocked,builtin:side")]
    eval_maps: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6,7,8,9,10")]
    beta_list: Vec<Beta>,
    #[arg(long, value_enum, default_value_t = OpponentArg::Nash)]
    opponent: OpponentArg,
    #[arg(long, default_value_t = 0.8)]
    gamma: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// CSV output file; stdout when absent.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OpponentArg {
    Nash,
    Regularized,
}

#[derive(Debug, Args)]
pub struct OneShotArgs {
    /// Payoff matrix as a JSON array of rows.
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    matrix: Option<String>,
    /// File holding the matrix.
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    beta1: Beta,
    #[arg(long)]
    beta2: Beta,
    #[arg(long, default_value_t = oneshot::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = oneshot::DEFAULT_MAX_ITERS)]
    max_iters: usize,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// JSON game file, ASCII map file or `builtin:<map>`.
    #[arg(long)]
    game: String,
}

fn write_output(out: Option<&str>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {path}")),
        None => std::io::stdout().write_all(text.as_bytes()).context("writing stdout"),
    }
    .map_err(Failure::invalid)
}

fn write_json(value: impl Serialize, out: Option<&str>, globals: &Globals) -> Result<(), Failure> {
    let mut v = serde_json::to_value(value).map_err(Failure::invalid)?;
    if globals.timestamp {
        if let Value::Object(m) = &mut v {
            let now = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            m.insert("timestamp".into(), now.into());
        }
    }
    let mut text = serde_json::to_string_pretty(&v).map_err(Failure::invalid)?;
    text.push('\n');
    write_output(out, &text)
}

fn config(
    beta1: Beta,
    beta2: Beta,
    gamma: Option<f64>,
    horizon: Option<usize>,
) -> Result<RegularizationConfig, Failure> {
    match (gamma, horizon) {
        (Some(g), None) => RegularizationConfig::discounted(beta1, beta2, g).map_err(Failure::invalid),
        (None, Some(n)) => RegularizationConfig::nstage(beta1, beta2, n).map_err(Failure::invalid),
        (Some(_), Some(_)) => Err(Failure::invalid(anyhow!("give either --gamma or --horizon, not both"))),
        (None, None) => Err(Failure::invalid(anyhow!("one of --gamma or --horizon is required"))),
    }
}

pub fn solve(a: &SolveArgs, globals: &Globals) -> Result<(), Failure> {
    let loaded = load_game(&a.game).map_err(Failure::invalid)?;
    let g = &loaded.game;
    let out = a.out.as_deref();
    let not_converged = |what: String| Failure { code: EXIT_NOT_CONVERGED, error: anyhow!(what) };
    match a.mode {
        Mode::Nstage => {
            if a.horizon.is_none() {
                return Err(Failure::invalid(anyhow!("--mode nstage requires --horizon")));
            }
            let cfg = config(a.beta1, a.beta2, None, a.horizon)?;
            match solve_nstage(g, &cfg, a.tol) {
                Ok(s) => write_json(&s, out, globals),
                Err(SolveError::NStageNotConverged { stage, state, best }) => {
                    write_json(&best, out, globals)?;
                    Err(not_converged(format!("stage {stage}, state {state} did not reach its gap")))
                }
                Err(e) => Err(Failure::invalid(e)),
            }
        }
        Mode::Discounted => {
            if a.gamma.is_none() {
                return Err(Failure::invalid(anyhow!("--mode discounted requires --gamma")));
            }
            let cfg = config(a.beta1, a.beta2, a.gamma, None)?;
            let mut opts = DiscountedOptions::new(a.tol);
            if let Some(m) = a.max_sweeps {
                opts.max_sweeps = m;
            }
            if a.init == Init::Random {
                let gamma = cfg.gamma().map_err(Failure::invalid)?;
                let bound = g.max_abs_payoff().max(1.0) / (1.0 - gamma);
                let mut rng = StdRng::seed_from_u64(globals.seed);
                opts.initial = Some(ValueFunction((0..g.num_states()).map(|_| rng.gen_range(-bound..=bound)).collect()));
            }
            match solve_discounted_with(g, &cfg, &opts) {
                Ok(s) => write_json(&s, out, globals),
                Err(SolveError::DiscountedNotConverged { reason, best, .. }) => {
                    write_json(&best, out, globals)?;
                    Err(not_converged(reason))
                }
                Err(e) => Err(Failure::invalid(e)),
            }
        }
    }
}

#[derive(Debug, Serialize)]
struct EvalReport {
    beta1: Beta,
    beta2: Beta,
    environment: String,
    start_state: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    win_prob: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    never_absorbed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exploitability_p1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exploitability_p2: Option<f64>,
}

pub fn eval(a: &EvalArgs, globals: &Globals) -> Result<(), Failure> {
    let loaded = load_game(&a.game).map_err(Failure::invalid)?;
    let g = &loaded.game;
    let cfg = config(a.beta1, a.beta2, a.gamma, a.horizon)?;
    let sigma = load_strategy(&a.sigma, "sigma").map_err(Failure::invalid)?;
    let tau = load_strategy(&a.tau, "tau").map_err(Failure::invalid)?;
    let start = match (&a.start, &loaded.grid) {
        (Some(s), _) => resolve_state(g, s).map_err(Failure::invalid)?,
        (None, Some(p)) => p.start_state(),
        (None, None) => 0,
    };
    let all = !(a.phi || a.win || a.exploitability);
    let mut report = EvalReport {
        beta1: a.beta1,
        beta2: a.beta2,
        environment: a.game.clone(),
        start_state: g.label(start).map(String::from).unwrap_or_else(|| start.to_string()),
        phi: None,
        win_prob: None,
        never_absorbed: None,
        exploitability_p1: None,
        exploitability_p2: None,
    };
    let eval_err = |e: EvalError| Failure::invalid(e);

    if let Some(horizon) = a.horizon {
        let markov = |s: LoadedStrategy| match s {
            LoadedStrategy::Markov(m) => m,
            LoadedStrategy::Stationary(s) => MarkovStrategy::repeat(&s, horizon),
        };
        if a.win || a.exploitability {
            return Err(Failure::invalid(anyhow!("--win and --exploitability need --gamma and stationary strategies")));
        }
        let mut mu = vec![0.0; g.num_states()];
        mu[start] = 1.0;
        report.phi = Some(phi_n(g, &cfg, &markov(sigma), &markov(tau), &mu).map_err(eval_err)?);
        return write_json(&report, a.out.as_deref(), globals);
    }

    let (LoadedStrategy::Stationary(sigma), LoadedStrategy::Stationary(tau)) = (sigma, tau) else {
        return Err(Failure::invalid(anyhow!("discounted evaluation needs stationary strategies")));
    };
    if a.exploitability || all {
        let ex = exploitability(g, &cfg, &sigma, &tau).map_err(eval_err)?;
        report.phi = Some(ex.phi[start]);
        report.exploitability_p1 = Some(ex.p1[start]);
        report.exploitability_p2 = Some(ex.p2[start]);
    } else if a.phi {
        report.phi = Some(phi_inf(g, &cfg, &sigma, &tau).map_err(eval_err)?[start]);
    }
    let sets = |names: &[String]| names.iter().map(|s| resolve_state(g, s)).collect::<anyhow::Result<Vec<_>>>();
    let (win, lose) = match &loaded.grid {
        _ if !a.win_states.is_empty() => (
            sets(&a.win_states).map_err(Failure::invalid)?,
            sets(&a.lose_states).map_err(Failure::invalid)?,
        ),
        Some(p) => (vec![p.win_sink], vec![p.capture_sink]),
        None if a.win => return Err(Failure::invalid(anyhow!("--win on a non-grid game needs --win-states"))),
        None => (Vec::new(), Vec::new()),
    };
    if a.win || (all && !win.is_empty()) {
        let r = win_probability(g, &sigma, &tau, &win, &lose, start).map_err(eval_err)?;
        report.win_prob = Some(r.win);
        report.never_absorbed = Some(r.never_absorbed);
    }
    if !a.phi && !all {
        report.phi = report.phi.filter(|_| a.exploitability);
    }
    write_json(&report, a.out.as_deref(), globals)
}

pub fn sweep(a: &SweepArgs) -> Result<(), Failure> {
    let spec = ExperimentSpec {
        solve_map: a.solve_map.clone(),
        eval_maps: a.eval_maps.clone(),
        beta_list: a.beta_list.clone(),
        opponent: match a.opponent {
            OpponentArg::Nash => Opponent::Nash,
            OpponentArg::Regularized => Opponent::Regularized,
        },
        gamma: a.gamma,
        tol: a.tol,
    };
    let rows = run_sweep(&spec).map_err(|e| {
        let code = match &e {
            ExperimentError::Transfer(_) => EXIT_TRANSFER,
            ExperimentError::Solve {
                source: SolveError::DiscountedNotConverged { .. } | SolveError::NStageNotConverged { .. },
                ..
            } => EXIT_NOT_CONVERGED,
            _ => crate::EXIT_INVALID,
        };
        Failure { code, error: e.into() }
    })?;
    write_output(a.out.as_deref(), &to_csv(&rows).map_err(Failure::invalid)?)
}

fn to_csv(rows: &[SweepRow]) -> anyhow::Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(ersg_core::experiment::CSV_HEADER.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn oneshot(a: &OneShotArgs, globals: &Globals) -> Result<(), Failure> {
    let text = match (&a.matrix, &a.input) {
        (Some(m), _) => m.clone(),
        (None, Some(p)) => std::fs::read_to_string(p).with_context(|| format!("reading {p}")).map_err(Failure::invalid)?,
        (None, None) => unreachable!("clap requires one of --matrix and --input"),
    };
    let rows: Vec<Vec<f64>> = serde_json::from_str(&text).context("matrix must be a JSON array of rows").map_err(Failure::invalid)?;
    let p = OneShotProblem::from_rows(&rows, a.beta1, a.beta2).map_err(Failure::invalid)?;
    match oneshot::solve(&p, a.tol, a.max_iters) {
        Ok(s) => write_json(&s, a.out.as_deref(), globals),
        Err(OneShotError::NotConverged { best, iterations }) => {
            write_json(&best, a.out.as_deref(), globals)?;
            Err(Failure { code: EXIT_NOT_CONVERGED, error: anyhow!("no convergence after {iterations} iterations") })
        }
        Err(e) => Err(Failure::invalid(e)),
    }
}

#[derive(Serialize)]
struct ValidateReport {
    valid: bool,
    violations: Vec<String>,
}

pub fn validate(a: &ValidateArgs) -> Result<(), Failure> {
    let violations = if a.game.starts_with(ersg_core::gridworld::BUILTIN_PREFIX) {
        validate_game(&load_game(&a.game).map_err(Failure::invalid)?.game)
    } else {
        let text = std::fs::read_to_string(&a.game).with_context(|| format!("reading {}", a.game)).map_err(Failure::invalid)?;
        if text.trim_start().starts_with('{') {
            match game_from_json(&text) {
                Ok(g) => validate_game(&g),
                Err(GameError::Invalid(v)) => v,
                Err(e) => return Err(Failure::invalid(e)),
            }
        } else {
            validate_game(&load_game(&a.game).map_err(Failure::invalid)?.game)
        }
    };
    let report = ValidateReport { valid: violations.is_empty(), violations: violations.iter().map(|v| v.to_string()).collect() };
    let text = serde_json::to_string_pretty(&report).map_err(Failure::invalid)? + "\n";
    write_output(None, &text)?;
    if report.valid {
        Ok(())
    } else {
        Err(Failure::invalid(anyhow!("game has {} violation(s)", violations.len())))
    }
}
