//! Test-only oracles and generators. Nothing here calls into the solver
//! paths it is used to check.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use secgame_core::{InfluenceNetwork, NodeProbs};

/// Fictitious play for `rounds` simultaneous rounds. Returns the bracket
/// `(lower, upper)` given by the empirical mixtures; the game value always
/// lies inside it.
pub fn fictitious_play(b: &DMatrix<f64>, rounds: usize) -> (f64, f64) {
    let (m, n) = b.shape();
    // payoff of each column against the row player's play so far, and of
    // each row against the column player's play so far
    let mut col_totals = vec![0.0; n];
    let mut row_totals = vec![0.0; m];
    let (mut i, mut j) = (0usize, 0usize);
    for _ in 0..rounds {
        for (c, t) in col_totals.iter_mut().enumerate() {
            *t += b[(i, c)];
        }
        for (r, t) in row_totals.iter_mut().enumerate() {
            *t += b[(r, j)];
        }
        i = argmax(&row_totals);
        j = argmin(&col_totals);
    }
    let t = rounds as f64;
    let lower = col_totals.iter().cloned().fold(f64::INFINITY, f64::min) / t;
    let upper = row_totals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / t;
    (lower, upper)
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (k, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = k;
        }
    }
    best
}

fn argmin(xs: &[f64]) -> usize {
    let mut best = 0;
    for (k, x) in xs.iter().enumerate() {
        if *x < xs[best] {
            best = k;
        }
    }
    best
}

/// Value of a 2x2 game from the textbook formulas: a pure saddle if one
/// exists, otherwise `(ad - bc) / (a + d - b - c)`.
pub fn two_by_two_value(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let maximin = a.min(b).max(c.min(d));
    let minimax = a.max(c).min(b.max(d));
    if (maximin - minimax).abs() < 1e-15 {
        maximin
    } else {
        (a * d - b * c) / (a + d - b - c)
    }
}

pub fn random_probs(rng: &mut impl Rng) -> NodeProbs {
    let mut p: Vec<f64> = (0..4).map(|_| rng.random_range(0.01..0.99)).collect();
    p.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if p.windows(2).any(|w| w[1] - w[0] < 1e-6) {
        return random_probs(rng);
    }
    let (mid_lo, mid_hi) = if rng.random_bool(0.5) { (p[1], p[2]) } else { (p[2], p[1]) };
    NodeProbs::new(p[0], mid_lo, mid_hi, p[3])
}

/// A random valid network with `n` nodes: sparse column-stochastic
/// influence (positive diagonal with probability 3/4) and sparse supports
/// with column sums at most 1.
pub fn random_network(rng: &mut impl Rng, n: usize) -> InfluenceNetwork {
    let mut influence = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut weights: Vec<f64> = (0..n)
            .map(|i| {
                let keep = if i == j { rng.random_bool(0.75) } else { rng.random_bool(0.5) };
                if keep {
                    rng.random_range(0.05..1.0)
                } else {
                    0.0
                }
            })
            .collect();
        if weights.iter().all(|w| *w == 0.0) {
            weights[rng.random_range(0..n)] = 1.0;
        }
        let total: f64 = weights.iter().sum();
        for i in 0..n {
            influence[(i, j)] = weights[i] / total;
        }
        // exact column sums
        let drift = 1.0 - influence.column(j).sum();
        let k = (0..n).find(|&i| influence[(i, j)] > 0.0).unwrap();
        influence[(k, j)] += drift;
    }
    let mut support = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let budget: f64 = rng.random_range(0.0..1.0);
        let raw: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.5) { rng.random_range(0.0..1.0) } else { 0.0 })
            .collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            for i in 0..n {
                support[(i, j)] = raw[i] / total * budget;
            }
        }
    }
    let assets = (0..n).map(|_| rng.random_range(0.0..50.0)).collect();
    let probs = (0..n).map(|_| random_probs(rng)).collect();
    InfluenceNetwork::new(influence, assets, support, probs).expect("generated network is valid")
}

/// Node-by-node removal: after each removal the remaining independent
/// assets lose the removed node's share and the remaining columns are
/// renormalized. Returns `(alive, adjusted assets, renormalized influence)`.
pub fn sequential_removal(
    net: &InfluenceNetwork,
    order: &[usize],
) -> (Vec<usize>, Vec<f64>, DMatrix<f64>) {
    let n = net.node_count();
    let mut alive: Vec<usize> = (0..n).collect();
    let mut s: Vec<f64> = net.independent_assets().to_vec();
    let mut w = net.influence().clone();
    for &d in order {
        let pos = alive.iter().position(|&a| a == d).unwrap();
        let m = alive.len();
        let mut next_w = DMatrix::zeros(m - 1, m - 1);
        let mut next_s = Vec::with_capacity(m - 1);
        let keep: Vec<usize> = (0..m).filter(|&k| k != pos).collect();
        for (cj, &j) in keep.iter().enumerate() {
            let remaining = 1.0 - w[(pos, j)];
            let column_mass: f64 = keep.iter().map(|&i| w[(i, j)]).sum();
            if column_mass <= f64::EPSILON {
                next_s.push(0.0);
                continue;
            }
            next_s.push(s[j] * remaining);
            for (ci, &i) in keep.iter().enumerate() {
                next_w[(ci, cj)] = w[(i, j)] / remaining;
            }
        }
        alive.remove(pos);
        s = next_s;
        w = next_w;
    }
    (alive, s, w)
}

pub fn shuffled(rng: &mut impl Rng, mut items: Vec<usize>) -> Vec<usize> {
    items.shuffle(rng);
    items
}
