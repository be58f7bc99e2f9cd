//! Result documents and fixed-width tables.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Action, StochasticGame};
use crate::simulate::SimulationReport;
use crate::solver::SolveResult;

pub const SOLVE_SCHEMA: &str = "secgame-solve/1";
pub const SIMULATE_SCHEMA: &str = "secgame-simulate/1";

/// One mixed strategy per state.
pub type Profile = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionProb {
    pub action: String,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSolution {
    pub index: usize,
    pub label: String,
    pub value: f64,
    pub attacker: Vec<ActionProb>,
    pub defender: Vec<ActionProb>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDocument {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_name: Option<String>,
    pub action_mode: String,
    pub asset_reduction: String,
    pub tolerance: f64,
    pub iterations: usize,
    pub residual: f64,
    pub contraction_modulus: f64,
    pub states: Vec<StateSolution>,
}

fn labeled(actions: &[Action], probs: &[f64]) -> Vec<ActionProb> {
    actions
        .iter()
        .zip(probs)
        .map(|(a, p)| ActionProb {
            action: a.label(),
            prob: *p,
        })
        .collect()
}

impl SolveDocument {
    pub fn new(game: &StochasticGame, result: &SolveResult, tolerance: f64, config_name: Option<String>) -> Self {
        Self {
            schema: SOLVE_SCHEMA.to_string(),
            config_name,
            action_mode: game.action_mode().to_string(),
            asset_reduction: game.space().asset_reduction().to_string(),
            tolerance,
            iterations: result.iterations,
            residual: result.residual,
            contraction_modulus: game.contraction_modulus(),
            states: game
                .elements()
                .iter()
                .enumerate()
                .map(|(k, e)| StateSolution {
                    index: k + 1,
                    label: game.space().state(k).label(),
                    value: result.values[k],
                    attacker: labeled(&e.actions.attacker, &result.attacker_strategies[k]),
                    defender: labeled(&e.actions.defender, &result.defender_strategies[k]),
                })
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if doc.schema != SOLVE_SCHEMA {
            return Err(Error::Parse(format!(
                "unsupported schema {:?}, expected {SOLVE_SCHEMA:?}",
                doc.schema
            )));
        }
        Ok(doc)
    }

    pub fn values(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.value).collect()
    }

    /// Strategy vectors aligned to the game's action sets. Actions are
    /// matched by label; every state must list exactly the game's actions.
    pub fn profiles_for(&self, game: &StochasticGame) -> Result<(Profile, Profile)> {
        if self.states.len() != game.len() {
            return Err(Error::StrategyMismatch {
                state: "*".to_string(),
                message: format!("document has {} states, game has {}", self.states.len(), game.len()),
            });
        }
        let mut attacker = Vec::with_capacity(game.len());
        let mut defender = Vec::with_capacity(game.len());
        for (k, (e, s)) in game.elements().iter().zip(&self.states).enumerate() {
            let state = game.space().state(k);
            if s.label != state.label() {
                return Err(Error::StrategyMismatch {
                    state: state.to_string(),
                    message: format!("document lists state {} here", s.label),
                });
            }
            attacker.push(align(&e.actions.attacker, &s.attacker, state.to_string(), "attacker")?);
            defender.push(align(&e.actions.defender, &s.defender, state.to_string(), "defender")?);
        }
        Ok((attacker, defender))
    }
}

fn align(actions: &[Action], listed: &[ActionProb], state: String, who: &str) -> Result<Vec<f64>> {
    let mismatch = |message: String| Error::StrategyMismatch {
        state: state.clone(),
        message,
    };
    if listed.len() != actions.len() {
        return Err(mismatch(format!(
            "{who} lists {} actions, the game has {}",
            listed.len(),
            actions.len()
        )));
    }
    actions
        .iter()
        .map(|a| {
            let label = a.label();
            listed
                .iter()
                .find(|p| p.action == label)
                .map(|p| p.prob)
                .ok_or_else(|| mismatch(format!("{who} strategy is missing action {label:?}")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateDocument {
    pub schema: String,
    pub strategies: String,
    #[serde(flatten)]
    pub report: SimulationReport,
}

impl SimulateDocument {
    pub fn new(strategies: impl Into<String>, report: SimulationReport) -> Self {
        Self {
            schema: SIMULATE_SCHEMA.to_string(),
            strategies: strategies.into(),
            report,
        }
    }
}

/// Fixed-width strategy table: one row per game element, one column per
/// node plus "Do nothing". Actions not offered at a state show as 0.
pub fn strategy_table(game: &StochasticGame, strategies: &[Vec<f64>], attacker: bool) -> String {
    let n = game.space().node_count();
    let label_width = game
        .space()
        .states()
        .iter()
        .map(|s| s.to_string().len())
        .max()
        .unwrap_or(2)
        .max(2);
    let mut out = String::new();
    let _ = write!(out, "{:<label_width$}", "GE");
    for i in 0..n {
        let _ = write!(out, "  {:>8}", format!("Node {}", i + 1));
    }
    let _ = writeln!(out, "  {:>10}", "Do nothing");
    for (k, e) in game.elements().iter().enumerate() {
        let actions = if attacker { &e.actions.attacker } else { &e.actions.defender };
        let prob = |target: Action| {
            actions
                .iter()
                .position(|a| *a == target)
                .map_or(0.0, |p| strategies[k][p])
        };
        let _ = write!(out, "{:<label_width$}", game.space().state(k).to_string());
        for i in 0..n {
            let _ = write!(out, "  {:>8}", format_prob(prob(Action::Node(i))));
        }
        let _ = writeln!(out, "  {:>10}", format_prob(prob(Action::Nothing)));
    }
    out
}

fn format_prob(p: f64) -> String {
    if p.abs() < 5e-5 {
        "0".to_string()
    } else if (p - 1.0).abs() < 5e-5 {
        "1".to_string()
    } else {
        format!("{p:.4}")
    }
}

/// One `"k (bits): value"` line per state.
pub fn value_table(game: &StochasticGame, values: &[f64]) -> String {
    game.space()
        .states()
        .iter()
        .zip(values)
        .map(|(s, v)| format!("{s}: {v:.4}\n"))
        .collect()
}

pub fn simulation_table(report: &SimulationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12}  {:>9}  {:>10}  {:>9}  {:>10}",
        "start", "episodes", "mean", "std err", "mean len"
    );
    for r in &report.per_state {
        let _ = writeln!(
            out,
            "{:<12}  {:>9}  {:>10.4}  {:>9.4}  {:>10.3}",
            format!("{} {}", r.start_state, r.label),
            r.episodes,
            r.mean_payoff,
            r.std_error,
            r.mean_episode_length
        );
    }
    out
}
