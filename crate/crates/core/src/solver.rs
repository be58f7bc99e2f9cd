//! Shapley value iteration and exact policy evaluation.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::StochasticGame;
use crate::matgame::{solve_matrix_game, MatrixGameSolution};

pub const DEFAULT_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub values: Vec<f64>,
    pub attacker_strategies: Vec<Vec<f64>>,
    pub defender_strategies: Vec<Vec<f64>>,
    pub iterations: usize,
    /// Final sup-norm change between successive iterates.
    pub residual: f64,
    /// Sup-norm change after every iteration, in order.
    pub residual_history: Vec<f64>,
}

/// Solves every game element at the continuation values `values`.
pub fn shapley_step(game: &StochasticGame, values: &[f64]) -> Result<Vec<MatrixGameSolution>> {
    game.elements()
        .par_iter()
        .map(|e| solve_matrix_game(&e.continuation_matrix(values)))
        .collect()
}

/// Value iteration from `v = 0` until the sup-norm change drops below the
/// tolerance; strategies are the matrix-game optima at the final iterate.
pub fn solve(game: &StochasticGame, options: SolveOptions) -> Result<SolveResult> {
    if options.tolerance.is_nan() || options.tolerance <= 0.0 {
        return Err(Error::invalid("solver.tolerance", "tolerance must be positive"));
    }
    let mut values = vec![0.0; game.len()];
    let mut history = Vec::new();
    let mut converged = false;
    while history.len() < options.max_iters {
        let next: Vec<f64> = shapley_step(game, &values)?
            .into_iter()
            .map(|s| s.value)
            .collect();
        let residual = sup_distance(&next, &values);
        values = next;
        history.push(residual);
        if residual < options.tolerance {
            converged = true;
            break;
        }
    }
    let residual = history.last().copied().unwrap_or(f64::INFINITY);
    if !converged {
        return Err(Error::NotConverged {
            iterations: history.len(),
            residual,
            last_values: values,
        });
    }

    let (attacker, defender) = shapley_step(game, &values)?
        .into_iter()
        .map(|s| (s.row_strategy, s.col_strategy))
        .unzip();
    Ok(SolveResult {
        values,
        attacker_strategies: attacker,
        defender_strategies: defender,
        iterations: history.len(),
        residual,
        residual_history: history,
    })
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Checks that a stationary profile has one probability vector per state
/// with the right length.
pub fn check_profile(game: &StochasticGame, attacker: &[Vec<f64>], defender: &[Vec<f64>]) -> Result<()> {
    for (who, profile) in [("attacker", attacker), ("defender", defender)] {
        if profile.len() != game.len() {
            return Err(Error::StrategyMismatch {
                state: "*".to_string(),
                message: format!("{who} profile has {} states, game has {}", profile.len(), game.len()),
            });
        }
    }
    for (k, e) in game.elements().iter().enumerate() {
        let state = game.space().state(k).to_string();
        for (who, p, len) in [
            ("attacker", &attacker[k], e.rows()),
            ("defender", &defender[k], e.cols()),
        ] {
            if p.len() != len {
                return Err(Error::StrategyMismatch {
                    state,
                    message: format!("{who} strategy has {} entries, expected {len}", p.len()),
                });
            }
            if p.iter().any(|x| !x.is_finite() || *x < 0.0)
                || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9
            {
                return Err(Error::StrategyMismatch {
                    state,
                    message: format!("{who} strategy is not a probability vector"),
                });
            }
        }
    }
    Ok(())
}

/// Expected total payoff from every start state under a fixed stationary
/// profile: the solution of `v = r + Q v`.
pub fn evaluate_strategies(
    game: &StochasticGame,
    attacker: &[Vec<f64>],
    defender: &[Vec<f64>],
) -> Result<Vec<f64>> {
    check_profile(game, attacker, defender)?;
    let p = game.len();
    let mut system = DMatrix::<f64>::identity(p, p);
    let mut reward = DVector::<f64>::zeros(p);
    for (k, e) in game.elements().iter().enumerate() {
        for (i, yi) in attacker[k].iter().enumerate() {
            if *yi == 0.0 {
                continue;
            }
            for (j, zj) in defender[k].iter().enumerate() {
                let w = yi * zj;
                if w == 0.0 {
                    continue;
                }
                reward[k] += w * e.payoff[(i, j)];
                for &(l, q) in e.transitions(i, j) {
                    system[(k, l)] -= w * q;
                }
            }
        }
    }
    let solution = system.lu().solve(&reward).ok_or(Error::SingularSystem)?;
    Ok(solution.iter().copied().collect())
}
