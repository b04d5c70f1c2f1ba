//! Random games and strategies shared by the integration tests.

#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use ersg_core::evaluate::{History, HistoryStrategy};
use ersg_core::{Game, GameBuilder, MarkovStrategy, Player, StationaryStrategy};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_dist(rng: &mut StdRng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| -rng.gen_range(1e-9f64..1.0).ln()).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// Kernel rows with `support` random successors, payoffs and terminal
/// payoffs uniform in `[-1, 1]`.
pub fn random_game(rng: &mut StdRng, n: usize, nu: usize, nw: usize, support: usize) -> Game {
    let mut gb = GameBuilder::new(n, nu, nw);
    for x in 0..n {
        for u in 0..nu {
            for w in 0..nw {
                let k = support.clamp(1, n);
                let mut next: Vec<usize> = (0..n).collect();
                for i in 0..k {
                    let j = rng.gen_range(i..n);
                    next.swap(i, j);
                }
                let p = random_dist(rng, k);
                let row: Vec<(usize, f64)> = next[..k].iter().copied().zip(p).collect();
                gb.set_transition_sparse(x, u, w, &row).unwrap();
                gb.set_payoff(x, u, w, rng.gen_range(-1.0..1.0)).unwrap();
            }
        }
    }
    gb.set_terminal_payoff((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    gb.build().unwrap()
}

pub fn random_stationary(rng: &mut StdRng, g: &Game, player: Player) -> StationaryStrategy {
    StationaryStrategy::new((0..g.num_states()).map(|x| random_dist(rng, g.num_actions(player, x))).collect())
}

pub fn random_markov(rng: &mut StdRng, g: &Game, player: Player, horizon: usize) -> MarkovStrategy {
    MarkovStrategy::new((0..horizon).map(|_| random_stationary(rng, g, player)).collect())
}

/// `(1 − w)·s + w·r` row by row.
pub fn mix(s: &StationaryStrategy, r: &StationaryStrategy, w: f64) -> StationaryStrategy {
    StationaryStrategy::new(
        s.rows()
            .iter()
            .zip(r.rows())
            .map(|(a, b)| a.iter().zip(b).map(|(p, q)| (1.0 - w) * p + w * q).collect())
            .collect(),
    )
}

/// A deviation near `base` with probability 1/2, an arbitrary one otherwise.
pub fn deviation(rng: &mut StdRng, g: &Game, base: &StationaryStrategy, player: Player) -> StationaryStrategy {
    let r = random_stationary(rng, g, player);
    if rng.gen_bool(0.5) {
        mix(base, &r, rng.gen_range(1e-3..0.2))
    } else {
        r
    }
}

/// Pseudo-random distribution over `k` actions keyed on the whole history.
pub fn history_dependent(seed: u64, k: usize) -> HistoryStrategy {
    HistoryStrategy::new(move |h: &History| {
        let mut key = seed;
        for &v in h.states.iter().chain(&h.actions_p1).chain(&h.actions_p2) {
            key = key.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(v as u64 + 1);
        }
        random_dist(&mut StdRng::seed_from_u64(key), k)
    })
}

pub fn unit(n: usize, x: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[x] = 1.0;
    e
}

/// `max_p min_q` of `f(p, q)` over mixed strategies `(p, 1−p)`, `(q, 1−q)`
/// on a grid of the given step count.
pub fn grid_max_min(steps: usize, f: impl Fn(f64, f64) -> f64) -> (f64, f64) {
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..=steps {
        let p = i as f64 / steps as f64;
        let m = (0..=steps).map(|j| f(p, j as f64 / steps as f64)).fold(f64::INFINITY, f64::min);
        if m > best.0 {
            best = (m, p);
        }
    }
    best
}

/// `x log x` with `0 log 0 = 0`.
pub fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Regularized one-shot payoff of a 2×2 game at `(p, 1−p)`, `(q, 1−q)`.
pub fn value_2x2(rho: &[[f64; 2]; 2], b1: f64, b2: f64, p: f64, q: f64) -> f64 {
    let s = [p, 1.0 - p];
    let t = [q, 1.0 - q];
    let mut v = 0.0;
    for u in 0..2 {
        for w in 0..2 {
            v += s[u] * rho[u][w] * t[w];
        }
    }
    let h = |d: [f64; 2]| -(xlogx(d[0]) + xlogx(d[1]));
    v + h(s) / b1 - h(t) / b2
}
