//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p ersg-core --test acceptance`. The process fails
//! when any criterion fails, except for criteria listed in `DISPROVED`,
//! whose statement is false for some inputs; their line still reads FAIL
//! and a counterexample is printed.

mod common;

use std::time::{Duration, Instant};

use common::*;
use ersg_core::discounted::{shapley_apply, solve_discounted_with, DiscountedOptions};
use ersg_core::evaluate::{exploitability, phi_inf, phi_n, phi_n_tree, HistoryStrategy};
use ersg_core::experiment::{run_sweep, ExperimentSpec, SweepRow};
use ersg_core::numerics::{softmax, sup_distance};
use ersg_core::oneshot::{self, OneShotProblem};
use ersg_core::{
    solve_discounted, solve_nstage, Beta, Game, GameBuilder, MarkovStrategy, Player, RegularizationConfig,
    ValueFunction,
};
use rand::Rng;

/// Criteria whose statement admits counterexamples.
const DISPROVED: [u32; 1] = [8];

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn b(v: f64) -> Beta {
    Beta::new(v).unwrap()
}

/// Criterion 1: 2×2 one-shot values against a 10⁻³ simplex grid max-min,
/// and the softmax fixed-point residual.
fn oneshot_saddle_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(101);
    let choices = [1.0, 2.0, 5.0];
    let steps = 1000;
    let h: Vec<f64> = (0..=steps)
        .map(|i| {
            let p = i as f64 / steps as f64;
            -(xlogx(p) + xlogx(1.0 - p))
        })
        .collect();
    let (mut worst_value, mut worst_residual) = (0.0f64, 0.0f64);
    for _ in 0..25 {
        let rho = [[r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)], [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)]];
        let (b1, b2) = (choices[r.gen_range(0..3)], choices[r.gen_range(0..3)]);
        let p = OneShotProblem::from_rows(&[rho[0].to_vec(), rho[1].to_vec()], b(b1), b(b2)).unwrap();
        let sol = oneshot::solve(&p, 1e-9, oneshot::DEFAULT_MAX_ITERS).map_err(|e| e.to_string())?;

        // Independent max-min over the grid, entropies tabulated.
        let mut grid = f64::NEG_INFINITY;
        for i in 0..=steps {
            let s = i as f64 / steps as f64;
            let row0 = s * rho[0][0] + (1.0 - s) * rho[1][0];
            let row1 = s * rho[0][1] + (1.0 - s) * rho[1][1];
            let mut m = f64::INFINITY;
            for j in 0..=steps {
                let t = j as f64 / steps as f64;
                m = m.min(t * row0 + (1.0 - t) * row1 - h[j] / b2);
            }
            grid = grid.max(m + h[i] / b1);
        }
        worst_value = worst_value.max((sol.value - grid).abs());

        // σ = softmax(β₁ ρ τ), τ = softmax(−β₂ ρᵀ σ).
        let (s, t) = (&sol.sigma, &sol.tau);
        let rt: Vec<f64> = (0..2).map(|u| b1 * (rho[u][0] * t[0] + rho[u][1] * t[1])).collect();
        let rs: Vec<f64> = (0..2).map(|w| -b2 * (rho[0][w] * s[0] + rho[1][w] * s[1])).collect();
        worst_residual = worst_residual.max(sup_distance(s, &softmax(&rt))).max(sup_distance(t, &softmax(&rs)));
    }
    let elapsed = start.elapsed();
    check(
        worst_value <= 5e-3 && worst_residual <= 1e-6 && elapsed <= Duration::from_secs(60),
        format!("max |value - grid| = {worst_value:.2e}, max fixed-point residual = {worst_residual:.2e}, {elapsed:.2?}"),
    )
}

fn zero_payoff_game(nu: usize, nw: usize) -> Game {
    let mut gb = GameBuilder::new(1, nu, nw);
    for u in 0..nu {
        for w in 0..nw {
            gb.set_deterministic(0, u, w, 0).unwrap();
        }
    }
    gb.build().unwrap()
}

/// Criterion 2: zero-payoff closed forms.
fn closed_forms() -> Outcome {
    let mut worst = 0.0f64;
    for (nu, nw, b1, b2) in [(2, 3, 1.0, 2.0), (4, 2, 0.5, 3.0), (3, 3, 2.0, 2.0), (1, 5, 1.0, 0.25)] {
        let one = (nu as f64).ln() / b1 - (nw as f64).ln() / b2;
        let p = OneShotProblem::from_rows(&vec![vec![0.0; nw]; nu], b(b1), b(b2)).unwrap();
        let v = oneshot::solve(&p, 1e-12, oneshot::DEFAULT_MAX_ITERS).map_err(|e| e.to_string())?.value;
        worst = worst.max((v - one).abs());
        let g = zero_payoff_game(nu, nw);
        for n in [1, 3, 6] {
            let cfg = RegularizationConfig::nstage(b(b1), b(b2), n).unwrap();
            let s = solve_nstage(&g, &cfg, 1e-11).map_err(|e| e.to_string())?;
            worst = worst.max((s.values[0][0] - n as f64 * one).abs());
        }
        for gamma in [0.5, 0.8, 0.95] {
            let cfg = RegularizationConfig::discounted(b(b1), b(b2), gamma).unwrap();
            let s = solve_discounted(&g, &cfg, 1e-10).map_err(|e| e.to_string())?;
            worst = worst.max((s.value[0] - one / (1.0 - gamma)).abs());
        }
    }
    check(worst <= 1e-8, format!("max deviation from closed form = {worst:.2e}"))
}

fn random_beta(r: &mut rand::rngs::StdRng) -> Beta {
    [b(0.5), b(1.0), b(2.0), b(5.0), Beta::Infinite][r.gen_range(0..5)]
}

/// Criterion 3: measured contraction and uniqueness of the fixed point.
fn contraction_and_uniqueness() -> Outcome {
    let start = Instant::now();
    let mut r = rng(303);
    let (tol, gamma) = (1e-6, 0.8);
    let (mut worst_excess, mut worst_disagreement) = (f64::NEG_INFINITY, 0.0f64);
    for _ in 0..10 {
        let n = r.gen_range(2..=10);
        let (nu, nw) = (r.gen_range(1..=4), r.gen_range(1..=4));
        let support = r.gen_range(1..=n);
        let g = random_game(&mut r, n, nu, nw, support);
        let (b1, b2) = (random_beta(&mut r), random_beta(&mut r));
        let cfg = RegularizationConfig::discounted(b1, b2, gamma).unwrap();
        for _ in 0..5 {
            let v: Vec<f64> = (0..n).map(|_| r.gen_range(-10.0..10.0)).collect();
            let w: Vec<f64> = (0..n).map(|_| r.gen_range(-10.0..10.0)).collect();
            let pv = shapley_apply(&g, &cfg, &v, tol).map_err(|e| e.to_string())?.value;
            let pw = shapley_apply(&g, &cfg, &w, tol).map_err(|e| e.to_string())?.value;
            worst_excess = worst_excess.max(sup_distance(&pv, &pw) - gamma * sup_distance(&v, &w) - 4.0 * tol);
        }
        let a = solve_discounted(&g, &cfg, tol).map_err(|e| e.to_string())?;
        let mut opts = DiscountedOptions::new(tol);
        opts.initial = Some(ValueFunction((0..n).map(|_| r.gen_range(-50.0..50.0)).collect()));
        let c = solve_discounted_with(&g, &cfg, &opts).map_err(|e| e.to_string())?;
        worst_disagreement = worst_disagreement.max(a.value.sup_distance(&c.value));
    }
    let elapsed = start.elapsed();
    check(
        worst_excess <= 0.0 && worst_disagreement <= 2.0 * tol && elapsed <= Duration::from_secs(120),
        format!(
            "max(|Ψv-Ψw| - γ|v-w| - 4tol) = {worst_excess:.2e}, two-start disagreement = {worst_disagreement:.2e}, {elapsed:.2?}"
        ),
    )
}

fn markov_deviation(r: &mut rand::rngs::StdRng, g: &Game, base: &MarkovStrategy, player: Player) -> MarkovStrategy {
    MarkovStrategy::new(base.stages().iter().map(|s| deviation(r, g, s, player)).collect())
}

/// Criterion 4: unilateral deviations and exploitability.
fn deviation_suite() -> Outcome {
    let mut r = rng(404);
    let mut worst_gain = 0.0f64;
    let mut worst_exploit = 0.0f64;
    let mut instances = 0;
    for _ in 0..4 {
        let n = r.gen_range(2..=6);
        let (nu, nw, horizon) = (r.gen_range(1..=4), r.gen_range(1..=4), r.gen_range(1..=4));
        let g = random_game(&mut r, n, nu, nw, 2);
        let (b1, b2) = (random_beta(&mut r), random_beta(&mut r));
        let cfg = RegularizationConfig::nstage(b1, b2, horizon).unwrap();
        let s = solve_nstage(&g, &cfg, 1e-9).map_err(|e| e.to_string())?;
        for x in 0..n {
            let mu = unit(n, x);
            let v = s.values[0][x];
            for _ in 0..50 {
                let d1 = markov_deviation(&mut r, &g, &s.sigma, Player::One);
                let d2 = markov_deviation(&mut r, &g, &s.tau, Player::Two);
                worst_gain = worst_gain.max(phi_n(&g, &cfg, &d1, &s.tau, &mu).map_err(|e| e.to_string())? - v);
                worst_gain = worst_gain.max(v - phi_n(&g, &cfg, &s.sigma, &d2, &mu).map_err(|e| e.to_string())?);
            }
        }
        instances += 1;
    }
    for n in [3, 12, 50] {
        let (nu, nw) = (r.gen_range(2..=4), r.gen_range(2..=4));
        let g = random_game(&mut r, n, nu, nw, 3);
        let (b1, b2) = (random_beta(&mut r), random_beta(&mut r));
        let cfg = RegularizationConfig::discounted(b1, b2, 0.8).unwrap();
        let s = solve_discounted(&g, &cfg, 1e-8).map_err(|e| e.to_string())?;
        for _ in 0..50 {
            let d1 = deviation(&mut r, &g, &s.sigma, Player::One);
            let d2 = deviation(&mut r, &g, &s.tau, Player::Two);
            let v1 = phi_inf(&g, &cfg, &d1, &s.tau).map_err(|e| e.to_string())?;
            let v2 = phi_inf(&g, &cfg, &s.sigma, &d2).map_err(|e| e.to_string())?;
            for x in 0..n {
                worst_gain = worst_gain.max(v1[x] - s.value[x]).max(s.value[x] - v2[x]);
            }
        }
        let ex = exploitability(&g, &cfg, &s.sigma, &s.tau).map_err(|e| e.to_string())?;
        for x in 0..n {
            worst_exploit = worst_exploit.max(ex.p1[x]).max(ex.p2[x]);
        }
        instances += 1;
    }
    check(
        worst_gain <= 1e-5 && worst_exploit <= 1e-4,
        format!("{instances} equilibria, max deviation gain = {worst_gain:.2e}, max exploitability = {worst_exploit:.2e}"),
    )
}

/// Criterion 5: history-dependent deviations on a two-stage game.
fn history_deviations() -> Outcome {
    let mut r = rng(505);
    let g = random_game(&mut r, 2, 2, 2, 2);
    let cfg = RegularizationConfig::nstage(b(1.5), b(2.0), 2).unwrap();
    let s = solve_nstage(&g, &cfg, 1e-10).map_err(|e| e.to_string())?;
    let mu = [0.5, 0.5];
    let v = s.value(&mu);
    let eq1 = HistoryStrategy::from_markov(s.sigma.clone());
    let eq2 = HistoryStrategy::from_markov(s.tau.clone());
    let mut worst = f64::NEG_INFINITY;
    for k in 0..50u64 {
        // Even-numbered deviations stay close to the equilibrium rule.
        let noise = history_dependent(k, 2);
        let w = if k % 2 == 0 { r.gen_range(1e-3..0.3) } else { 1.0 };
        let blend = |eq: &HistoryStrategy| {
            let (eq, noise) = (eq.clone(), noise.clone());
            HistoryStrategy::new(move |h| {
                eq.distribution(h).iter().zip(noise.distribution(h)).map(|(a, n)| (1.0 - w) * a + w * n).collect()
            })
        };
        let gain1 = phi_n_tree(&g, &cfg, &blend(&eq1), &eq2, &mu).map_err(|e| e.to_string())? - v;
        let gain2 = v - phi_n_tree(&g, &cfg, &eq1, &blend(&eq2), &mu).map_err(|e| e.to_string())?;
        worst = worst.max(gain1).max(gain2);
    }
    check(worst <= 1e-6, format!("max gain over 50 deviations per player = {worst:.2e}"))
}

fn sweep(betas: Vec<Beta>, maps: &[&str]) -> Result<Vec<SweepRow>, String> {
    let spec = ExperimentSpec {
        beta_list: betas,
        eval_maps: maps.iter().map(|m| format!("builtin:{m}")).collect(),
        ..ExperimentSpec::default()
    };
    run_sweep(&spec).map_err(|e| e.to_string())
}

fn win(rows: &[SweepRow], beta: Beta, map: &str) -> f64 {
    rows.iter()
        .find(|r| r.beta1 == beta && r.eval_map == format!("builtin:{map}"))
        .map(|r| r.win_prob)
        .expect("row present")
}

/// Criterion 6: rational play on the nominal and blocked maps.
fn grid_rational_play() -> Outcome {
    let start = Instant::now();
    let rows = sweep(vec![Beta::Infinite], &["nominal", "blocked"])?;
    let (n, bl) = (win(&rows, Beta::Infinite, "nominal"), win(&rows, Beta::Infinite, "blocked"));
    let elapsed = start.elapsed();
    check(
        (n - 1.0).abs() <= 1e-6 && bl.abs() <= 1e-6 && elapsed <= Duration::from_secs(300),
        format!("Nash vs Nash: nominal {n:.6}, blocked {bl:.6}, {elapsed:.2?}"),
    )
}

/// Criterion 7: the β sweep against the rational opponent.
fn grid_beta_sweep() -> Outcome {
    let mut betas: Vec<Beta> = (2..=10).map(|k| b(k as f64)).collect();
    betas.push(Beta::Infinite);
    let rows = sweep(betas, &["nominal", "blocked", "side"])?;
    let six = b(6.0);
    let blocked = win(&rows, six, "blocked");
    let side = win(&rows, six, "side");
    let shortfall = win(&rows, Beta::Infinite, "nominal") - win(&rows, six, "nominal");
    let curve: Vec<f64> = (4..=10).map(|k| win(&rows, b(k as f64), "nominal")).collect();
    let monotone = curve.windows(2).all(|w| w[1] >= w[0]);
    let nominal: Vec<String> = (2..=10).map(|k| format!("{:.3}", win(&rows, b(k as f64), "nominal"))).collect();
    check(
        (blocked - 0.2).abs() <= 0.1 && (side - 0.8).abs() <= 0.1 && (shortfall - 0.15).abs() <= 0.1 && monotone,
        format!(
            "beta=6: blocked {blocked:.3}, side {side:.3}, nominal shortfall {shortfall:.3}; nominal beta=2..10: [{}] non-decreasing from 4: {monotone}",
            nominal.join(", ")
        ),
    )
}

/// Criterion 8: regularized values approach the unregularized value.
fn nash_limit() -> Outcome {
    let mut r = rng(808);
    let betas = [1.0, 10.0, 100.0, 1000.0];
    let tol = 1e-12;
    // Each solved value is certified to within tol/2, so two errors are
    // only comparable up to 2·tol.
    let slack = 2.0 * tol;
    let mut worst_at_1000 = 0.0f64;
    let mut non_monotone = Vec::new();
    for k in 0..10 {
        let rows: Vec<Vec<f64>> = (0..3).map(|_| (0..3).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
        let lp = OneShotProblem::from_rows(&rows, Beta::Infinite, Beta::Infinite).unwrap();
        let v_lp = oneshot::solve(&lp, tol, oneshot::DEFAULT_MAX_ITERS).map_err(|e| e.to_string())?.value;
        let mut errs = Vec::new();
        for &beta in &betas {
            let p = OneShotProblem::from_rows(&rows, b(beta), b(beta)).unwrap();
            let v = oneshot::solve(&p, tol, oneshot::DEFAULT_MAX_ITERS).map_err(|e| e.to_string())?.value;
            errs.push((v - v_lp).abs());
        }
        worst_at_1000 = worst_at_1000.max(errs[3]);
        if errs.windows(2).any(|w| w[1] > w[0] + slack) {
            non_monotone.push(format!(
                "game {k}: {}",
                errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" ")
            ));
        }
    }
    check(
        worst_at_1000 <= 1e-2 && non_monotone.is_empty(),
        format!(
            "max |V(1000) - V_LP| = {worst_at_1000:.2e}; games not non-increasing over beta=1,10,100,1000: {}",
            if non_monotone.is_empty() { "none".to_string() } else { non_monotone.join("; ") }
        ),
    )
}

/// Counterexample to the monotone part of criterion 8, checked with the
/// brute-force grid oracle instead of the solver.
fn monotonicity_counterexample() -> String {
    let rho = [[0.9, 0.2], [-0.9, 0.2]];
    // Row 0 / column 1 is a pure saddle point, so the unregularized value is 0.2.
    let err = |beta: f64| (grid_max_min(2000, |p, q| value_2x2(&rho, beta, beta, p, q)).0 - 0.2).abs();
    let (e1, e10) = (err(1.0), err(10.0));
    format!("rho = [[0.9, 0.2], [-0.9, 0.2]]: grid |V(1) - V_LP| = {e1:.4}, |V(10) - V_LP| = {e10:.4}")
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 8] = [
        (1, "one-shot saddle oracle", oneshot_saddle_oracle),
        (2, "closed-form values", closed_forms),
        (3, "contraction and uniqueness", contraction_and_uniqueness),
        (4, "equilibrium deviation suite", deviation_suite),
        (5, "history-dependent deviations", history_deviations),
        (6, "grid experiment, rational play", grid_rational_play),
        (7, "grid experiment, beta sweep", grid_beta_sweep),
        (8, "regularized value tends to the unregularized value", nash_limit),
    ];
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        let (status, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {id} ({name}): {status}: {detail}");
        if id == 8 {
            println!("  not monotone in general: {}", monotonicity_counterexample());
        }
        if status == "FAIL" && !DISPROVED.contains(&id) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("failed criteria: {unexpected:?}");
        std::process::exit(1);
    }
}
