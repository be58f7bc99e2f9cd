//! Monte Carlo play-out of the stochastic game under fixed stationary
//! strategies.
//!
//! Each step samples both actions, then a single success/failure draw
//! decides both the payoff (the target's effective asset on success, 0
//! otherwise) and the next state, so the expected per-step payoff equals
//! the payoff matrix entry `p_s * x`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::StochasticGame;
use crate::solver::check_profile;

/// Hard cap on the length of a single episode.
pub const STEP_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateReport {
    /// One-based start state.
    pub start_state: usize,
    pub label: String,
    pub episodes: usize,
    pub mean_payoff: f64,
    pub std_error: f64,
    pub mean_episode_length: f64,
    pub max_episode_length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub seed: u64,
    pub per_state: Vec<StateReport>,
}

struct Sampler<'a> {
    game: &'a StochasticGame,
    attacker: Vec<WeightedIndex<f64>>,
    defender: Vec<WeightedIndex<f64>>,
}

impl<'a> Sampler<'a> {
    fn new(game: &'a StochasticGame, attacker: &[Vec<f64>], defender: &[Vec<f64>]) -> Result<Self> {
        check_profile(game, attacker, defender)?;
        let dist = |profile: &[Vec<f64>]| -> Result<Vec<WeightedIndex<f64>>> {
            profile
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    WeightedIndex::new(p).map_err(|e| Error::StrategyMismatch {
                        state: game.space().state(k).to_string(),
                        message: e.to_string(),
                    })
                })
                .collect()
        };
        Ok(Self {
            game,
            attacker: dist(attacker)?,
            defender: dist(defender)?,
        })
    }

    /// Total payoff and step count of one episode.
    fn episode(&self, start: usize, rng: &mut impl Rng) -> Result<(f64, usize)> {
        let mut state = start;
        let mut total = 0.0;
        for step in 1..=STEP_CAP {
            let i = self.attacker[state].sample(rng);
            let j = self.defender[state].sample(rng);
            let cell = self.game.element(state).cell(i, j);
            if rng.random::<f64>() < cell.success {
                total += cell.reward;
                state = cell.on_success.expect("successful attack has a successor");
                continue;
            }
            let u: f64 = rng.random();
            if u < cell.restart {
                state = 0;
            } else if u >= cell.restart + cell.stay {
                return Ok((total, step));
            }
        }
        Err(Error::EpisodeCap {
            start: self.game.space().state(start).to_string(),
            cap: STEP_CAP,
        })
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Independent generator for one episode: the key is derived from the
/// master seed and start state, the stream is the episode number.
fn episode_rng(seed: u64, start: usize, episode: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(start as u64)));
    rng.set_stream(episode);
    rng
}

/// Neumaier-compensated sum in slice order.
fn compensated_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Simulates `episodes` plays from the zero-based `start_state`.
pub fn simulate(
    game: &StochasticGame,
    attacker: &[Vec<f64>],
    defender: &[Vec<f64>],
    start_state: usize,
    episodes: usize,
    seed: u64,
) -> Result<StateReport> {
    let sampler = Sampler::new(game, attacker, defender)?;
    simulate_with(&sampler, start_state, episodes, seed)
}

fn simulate_with(sampler: &Sampler<'_>, start: usize, episodes: usize, seed: u64) -> Result<StateReport> {
    let game = sampler.game;
    if episodes == 0 {
        return Err(Error::invalid("episodes", "at least one episode is required"));
    }
    if start >= game.len() {
        return Err(Error::invalid(
            "start_state",
            format!("state {} does not exist", start + 1),
        ));
    }
    let outcomes: Vec<(f64, usize)> = (0..episodes as u64)
        .into_par_iter()
        .map(|e| sampler.episode(start, &mut episode_rng(seed, start, e)))
        .collect::<Result<_>>()?;

    let n = episodes as f64;
    let mean = compensated_sum(outcomes.iter().map(|o| o.0)) / n;
    let var = if episodes > 1 {
        compensated_sum(outcomes.iter().map(|o| (o.0 - mean).powi(2))) / (n - 1.0)
    } else {
        0.0
    };
    Ok(StateReport {
        start_state: start + 1,
        label: game.space().state(start).label(),
        episodes,
        mean_payoff: mean,
        std_error: (var / n).sqrt(),
        mean_episode_length: compensated_sum(outcomes.iter().map(|o| o.1 as f64)) / n,
        max_episode_length: outcomes.iter().map(|o| o.1).max().unwrap_or(0),
    })
}

/// Simulates from each of `starts` (zero-based), or from every state when
/// `starts` is `None`.
pub fn simulate_states(
    game: &StochasticGame,
    attacker: &[Vec<f64>],
    defender: &[Vec<f64>],
    starts: Option<&[usize]>,
    episodes: usize,
    seed: u64,
) -> Result<SimulationReport> {
    let sampler = Sampler::new(game, attacker, defender)?;
    let all: Vec<usize> = (0..game.len()).collect();
    let per_state = starts
        .unwrap_or(&all)
        .iter()
        .map(|&k| simulate_with(&sampler, k, episodes, seed))
        .collect::<Result<_>>()?;
    Ok(SimulationReport { seed, per_state })
}
