mod common;

use common::*;
use ersg_core::evaluate::{phi_n, phi_n_tree, HistoryStrategy};
use ersg_core::nstage::stage_payoff;
use ersg_core::oneshot::{self, OneShotProblem};
use ersg_core::{solve_nstage, Beta, GameBuilder, MarkovStrategy, Player, RegularizationConfig, StationaryStrategy};

fn b(v: f64) -> Beta {
    Beta::new(v).unwrap()
}

#[test]
fn zero_payoff_two_stages() {
    let mut gb = GameBuilder::new(1, 2, 3);
    for u in 0..2 {
        for w in 0..3 {
            gb.set_deterministic(0, u, w, 0).unwrap();
        }
    }
    let g = gb.build().unwrap();
    let cfg = RegularizationConfig::nstage(b(1.0), b(2.0), 2).unwrap();
    let s = solve_nstage(&g, &cfg, 1e-10).unwrap();
    assert!((s.values[0][0] - 2.0 * (2f64.ln() - 0.5 * 3f64.ln())).abs() < 1e-9);
    assert!((s.values[0][0] - 0.287682).abs() < 1e-6);
    assert!((s.value(&[1.0]) - s.values[0][0]).abs() == 0.0);
}

#[test]
fn rational_players_repeat_the_matrix_game() {
    // No pure saddle; the mixed value of [[2,0],[1,3]] is 3/2.
    let mut gb = GameBuilder::new(1, 2, 2);
    for (u, w, r) in [(0, 0, 2.0), (0, 1, 0.0), (1, 0, 1.0), (1, 1, 3.0)] {
        gb.set_deterministic(0, u, w, 0).unwrap();
        gb.set_payoff(0, u, w, r).unwrap();
    }
    let g = gb.build().unwrap();
    let cfg = RegularizationConfig::nstage(Beta::Infinite, Beta::Infinite, 3).unwrap();
    let s = solve_nstage(&g, &cfg, 1e-9).unwrap();
    assert!((s.values[0][0] - 4.5).abs() < 1e-9);
    for t in 0..3 {
        assert!((s.sigma.stage(t).row(0)[0] - 0.5).abs() < 1e-9);
        assert!((s.tau.stage(t).row(0)[0] - 0.75).abs() < 1e-9);
    }
}

/// Backward induction with grid-searched stage games, checked through the
/// evaluator: `V₁` must match the value the grid strategies achieve.
#[test]
fn value_matches_grid_backward_induction() {
    let steps = 100;
    let mut r = rng(17);
    for _ in 0..3 {
        let g = random_game(&mut r, 2, 2, 2, 2);
        let (b1, b2) = (1.5, 2.5);
        let cfg = RegularizationConfig::nstage(b(b1), b(b2), 2).unwrap();
        let sol = solve_nstage(&g, &cfg, 1e-10).unwrap();

        let mut v_next = g.terminal_payoff().to_vec();
        let mut sig = vec![Vec::new(); 2];
        let mut tau = vec![Vec::new(); 2];
        for t in (0..2).rev() {
            let mut v = vec![0.0; 2];
            for x in 0..2 {
                let m = stage_payoff(&g, &v_next, x);
                let rho = [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]];
                let (val, p) = grid_max_min(steps, |p, q| value_2x2(&rho, b1, b2, p, q));
                let (_, q) = grid_max_min(steps, |q, p| -value_2x2(&rho, b1, b2, p, q));
                v[x] = val;
                sig[t].push(vec![p, 1.0 - p]);
                tau[t].push(vec![q, 1.0 - q]);
            }
            v_next = v;
        }
        let sigma = MarkovStrategy::new(sig.into_iter().map(StationaryStrategy::new).collect());
        let tau = MarkovStrategy::new(tau.into_iter().map(StationaryStrategy::new).collect());
        for x in 0..2 {
            let grid_phi = phi_n(&g, &cfg, &sigma, &tau, &unit(2, x)).unwrap();
            assert!((grid_phi - sol.values[0][x]).abs() <= 1e-2, "{grid_phi} vs {}", sol.values[0][x]);
            assert!((v_next[x] - sol.values[0][x]).abs() <= 1e-2);
        }
    }
}

#[test]
fn evaluator_reproduces_solver_values() {
    let mut r = rng(3);
    for (n, nu, nw, beta1, beta2, horizon) in [
        (4, 3, 2, b(1.0), b(2.0), 4),
        (5, 2, 3, Beta::Infinite, b(0.5), 3),
        (3, 3, 3, b(4.0), Beta::Infinite, 5),
        (3, 2, 2, Beta::Infinite, Beta::Infinite, 3),
    ] {
        let g = random_game(&mut r, n, nu, nw, 2);
        let cfg = RegularizationConfig::nstage(beta1, beta2, horizon).unwrap();
        let tol = 1e-9;
        let s = solve_nstage(&g, &cfg, tol).unwrap();
        for x in 0..n {
            let phi = phi_n(&g, &cfg, &s.sigma, &s.tau, &unit(n, x)).unwrap();
            assert!((phi - s.values[0][x]).abs() <= 2.0 * tol, "{phi} vs {}", s.values[0][x]);
        }
        let mu = random_dist(&mut r, n);
        assert!((phi_n(&g, &cfg, &s.sigma, &s.tau, &mu).unwrap() - s.value(&mu)).abs() <= 2.0 * tol);
    }
}

#[test]
fn markov_deviations_do_not_pay() {
    let mut r = rng(5);
    let g = random_game(&mut r, 3, 3, 2, 3);
    let cfg = RegularizationConfig::nstage(b(2.0), b(1.0), 3).unwrap();
    let s = solve_nstage(&g, &cfg, 1e-10).unwrap();
    let mu = random_dist(&mut r, 3);
    let v = s.value(&mu);
    for _ in 0..30 {
        let d1 = random_markov(&mut r, &g, Player::One, 3);
        let d2 = random_markov(&mut r, &g, Player::Two, 3);
        assert!(phi_n(&g, &cfg, &d1, &s.tau, &mu).unwrap() <= v + 1e-8);
        assert!(phi_n(&g, &cfg, &s.sigma, &d2, &mu).unwrap() >= v - 1e-8);
    }
}

#[test]
fn history_dependent_deviations_do_not_pay() {
    let mut r = rng(8);
    let g = random_game(&mut r, 2, 2, 2, 2);
    let cfg = RegularizationConfig::nstage(b(1.0), b(3.0), 2).unwrap();
    let s = solve_nstage(&g, &cfg, 1e-10).unwrap();
    let mu = [0.4, 0.6];
    let v = s.value(&mu);
    let sigma = HistoryStrategy::from_markov(s.sigma.clone());
    let tau = HistoryStrategy::from_markov(s.tau.clone());
    assert!((phi_n_tree(&g, &cfg, &sigma, &tau, &mu).unwrap() - v).abs() <= 1e-9);
    for seed in 0..20 {
        let d = history_dependent(seed, 2);
        assert!(phi_n_tree(&g, &cfg, &d, &tau, &mu).unwrap() <= v + 1e-8);
        assert!(phi_n_tree(&g, &cfg, &sigma, &d, &mu).unwrap() >= v - 1e-8);
    }
}

#[test]
fn stage_strategies_solve_their_stage_games() {
    let mut r = rng(12);
    let g = random_game(&mut r, 3, 2, 3, 2);
    let cfg = RegularizationConfig::nstage(b(2.0), b(2.0), 2).unwrap();
    let s = solve_nstage(&g, &cfg, 1e-10).unwrap();
    for t in 0..2 {
        for x in 0..3 {
            let p = OneShotProblem::new(stage_payoff(&g, &s.values[t + 1], x), cfg.beta1, cfg.beta2).unwrap();
            let v = oneshot::payoff_value(&p, s.sigma.stage(t).row(x), s.tau.stage(t).row(x)).unwrap();
            assert!((v - s.values[t][x]).abs() <= 1e-9);
        }
    }
}
