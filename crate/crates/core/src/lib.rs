//! Zero-sum stochastic security games on linear influence networks.
//!
//! An attacker and a defender play over a network whose nodes share
//! security assets (through a column-stochastic influence matrix) and
//! protect each other (through a support matrix). Every subset of
//! compromised nodes is a game state; at each state both players pick a
//! node (or nothing), the attack succeeds with a probability that depends
//! on the target's remaining support, and play moves on, restarts from the
//! healthy state, or ends.
//!
//! The pipeline is [`config::GameConfig`] → [`network::InfluenceNetwork`] →
//! [`state_space::StateSpace`] → [`game::StochasticGame`] →
//! [`solver::solve`], with [`simulate`] as an independent Monte Carlo check.

pub mod config;
pub mod error;
pub mod game;
pub mod matgame;
pub mod network;
pub mod report;
pub mod simulate;
pub mod solver;
pub mod state_space;

pub use config::{example_3node, GameConfig};
pub use error::{Error, Result, Violation};
pub use game::{Action, ActionMode, GameElement, StochasticGame};
pub use matgame::{solve_matrix_game, MatrixGameSolution};
pub use network::{AssetReduction, InfluenceNetwork, NetworkState, NodeProbs, ReducedNetwork};
pub use simulate::{simulate, simulate_states, SimulationReport, StateReport};
pub use solver::{evaluate_strategies, solve, SolveOptions, SolveResult};
pub use state_space::{successor, RestartConfig, RestartParams, StateSpace};
