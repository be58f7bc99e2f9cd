//! JSON game configuration.
//!
//! Graphs are given as edge lists. Influence diagonals may be omitted, in
//! which case `w_jj = 1 - sum_{i != j} w_ij`. Column sums that miss 1 (or
//! exceed it, for supports) by at most [`CONFIG_RENORMALIZE_TOL`] are
//! silently rescaled; anything larger is rejected.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::game::{ActionMode, StochasticGame};
use crate::network::{AssetReduction, InfluenceNetwork, NetworkState, NodeProbs};
use crate::solver::{SolveOptions, DEFAULT_MAX_ITERS, DEFAULT_TOLERANCE};
use crate::state_space::{RestartConfig, RestartParams, StateSpace};

pub const CONFIG_SCHEMA: &str = "secgame-config/1";
pub const CONFIG_RENORMALIZE_TOL: f64 = 1e-6;

const EXAMPLE_3NODE: &str = include_str!("../data/example-3node.json");

/// The bundled three-node example.
pub fn example_3node() -> GameConfig {
    GameConfig::from_json(EXAMPLE_3NODE).expect("bundled config parses")
}

/// Source text of the bundled three-node example.
pub fn example_3node_source() -> &'static str {
    EXAMPLE_3NODE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub nodes: Vec<NodeConfig>,
    #[serde(default)]
    pub influence_edges: Vec<Edge>,
    #[serde(default)]
    pub support_edges: Vec<Edge>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub restart: RestartSection,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub name: String,
    pub independent_asset: f64,
    pub probs: NodeProbs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub asset_reduction: AssetReduction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestartSection {
    pub default: RestartParams,
    pub initial: RestartParams,
    /// Per-state overrides keyed by bit pattern, node 1 leftmost (`"101"`).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<String, RestartParams>,
}

impl Default for RestartSection {
    fn default() -> Self {
        let d = RestartConfig::default();
        Self {
            default: d.default,
            initial: d.initial,
            overrides: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub action_mode: ActionMode,
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            max_iters: DEFAULT_MAX_ITERS,
            action_mode: ActionMode::Reduced,
        }
    }
}

impl GameConfig {
    /// Parses a config; errors carry the line, column and field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: GameConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::Parse(format!(
                "line {}, column {}, at `{}`: {}",
                inner.line(),
                inner.column(),
                path,
                inner
            ))
        })?;
        if config.schema != CONFIG_SCHEMA {
            return Err(Error::Parse(format!(
                "unsupported schema {:?}, expected {CONFIG_SCHEMA:?}",
                config.schema
            )));
        }
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn node_index(&self) -> HashMap<&str, usize> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.as_str(), i))
            .collect()
    }

    /// Builds the network, reporting every problem found.
    pub fn network(&self) -> Result<InfluenceNetwork> {
        let mut out = Vec::new();
        let n = self.nodes.len();
        let index = self.node_index();
        if index.len() != n {
            let mut seen = HashMap::new();
            for (i, node) in self.nodes.iter().enumerate() {
                if let Some(first) = seen.insert(node.name.as_str(), i) {
                    out.push(Violation::new(
                        format!("nodes[{i}].name"),
                        format!("duplicate name {:?} (first at nodes[{first}])", node.name),
                    ));
                }
            }
        }

        let mut influence = DMatrix::<f64>::zeros(n, n);
        let mut explicit_diag = vec![false; n];
        self.fill_edges("influence_edges", &self.influence_edges, &index, &mut influence, &mut out, |i, j, w| {
            if i == j {
                (0.0..=1.0).contains(&w)
            } else {
                w > 0.0 && w <= 1.0
            }
        });
        for e in &self.influence_edges {
            if let (Some(&i), Some(&j)) = (index.get(e.from.as_str()), index.get(e.to.as_str())) {
                if i == j {
                    explicit_diag[i] = true;
                }
            }
        }
        for j in 0..n {
            let name = &self.nodes[j].name;
            if !explicit_diag[j] {
                let off: f64 = (0..n).filter(|&i| i != j).map(|i| influence[(i, j)]).sum();
                if off > 1.0 + CONFIG_RENORMALIZE_TOL {
                    out.push(Violation::new(
                        format!("influence_edges[to={name}]"),
                        format!("incoming influence on node {name} sums to {off}, above 1"),
                    ));
                    continue;
                }
                influence[(j, j)] = (1.0 - off).max(0.0);
            }
            let sum = influence.column(j).sum();
            if (sum - 1.0).abs() > CONFIG_RENORMALIZE_TOL {
                out.push(Violation::new(
                    format!("influence.column[{name}]"),
                    format!("influence column of node {name} sums to {sum}, expected 1"),
                ));
            } else if sum > 0.0 {
                influence.column_mut(j).iter_mut().for_each(|w| *w /= sum);
            }
        }

        let mut support = DMatrix::<f64>::zeros(n, n);
        self.fill_edges("support_edges", &self.support_edges, &index, &mut support, &mut out, |_, _, h| {
            (0.0..=1.0).contains(&h)
        });
        for j in 0..n {
            let name = &self.nodes[j].name;
            let sum = support.column(j).sum();
            if sum > 1.0 + CONFIG_RENORMALIZE_TOL {
                out.push(Violation::new(
                    format!("support.column[{name}]"),
                    format!("support of node {name} is {sum}, above 1"),
                ));
            } else if sum > 1.0 {
                support.column_mut(j).iter_mut().for_each(|h| *h /= sum);
            }
        }

        let assets = self.nodes.iter().map(|n| n.independent_asset).collect();
        let probs = self.nodes.iter().map(|n| n.probs).collect();
        match InfluenceNetwork::new(influence, assets, support, probs) {
            Ok(net) if out.is_empty() => Ok(net),
            Ok(_) => Err(Error::Invalid(out)),
            Err(Error::Invalid(more)) => {
                let matrix_reported = !out.is_empty();
                out.extend(
                    more.into_iter()
                        .filter(|v| {
                            !(matrix_reported
                                && (v.path.starts_with("influence") || v.path.starts_with("support")))
                        })
                        .map(|v| Violation {
                            path: rename_path(&v.path),
                            message: v.message,
                        }),
                );
                Err(Error::Invalid(out))
            }
            Err(e) => Err(e),
        }
    }

    fn fill_edges(
        &self,
        field: &str,
        edges: &[Edge],
        index: &HashMap<&str, usize>,
        matrix: &mut DMatrix<f64>,
        out: &mut Vec<Violation>,
        weight_ok: impl Fn(usize, usize, f64) -> bool,
    ) {
        let mut seen = HashMap::new();
        for (k, e) in edges.iter().enumerate() {
            let from = index.get(e.from.as_str());
            let to = index.get(e.to.as_str());
            if from.is_none() {
                out.push(Violation::new(
                    format!("{field}[{k}].from"),
                    format!("unknown node {:?}", e.from),
                ));
            }
            if to.is_none() {
                out.push(Violation::new(
                    format!("{field}[{k}].to"),
                    format!("unknown node {:?}", e.to),
                ));
            }
            let (Some(&i), Some(&j)) = (from, to) else { continue };
            if !e.weight.is_finite() || !weight_ok(i, j, e.weight) {
                out.push(Violation::new(
                    format!("{field}[{k}].weight"),
                    format!("weight {} is out of range", e.weight),
                ));
                continue;
            }
            if let Some(first) = seen.insert((i, j), k) {
                out.push(Violation::new(
                    format!("{field}[{k}]"),
                    format!("duplicate edge {} -> {} (first at {field}[{first}])", e.from, e.to),
                ));
                continue;
            }
            matrix[(i, j)] = e.weight;
        }
    }

    pub fn restart_config(&self) -> Result<RestartConfig> {
        let n = self.nodes.len();
        let mut out = Vec::new();
        let mut overrides = BTreeMap::new();
        for (pattern, params) in &self.restart.overrides {
            match NetworkState::from_bits(pattern) {
                Ok(s) if s.node_count() == n => {
                    overrides.insert(s.index(), *params);
                }
                _ => out.push(Violation::new(
                    format!("restart.overrides[{pattern:?}]"),
                    format!("expected a {n}-bit pattern such as {:?}", "0".repeat(n)),
                )),
            }
        }
        if out.is_empty() {
            Ok(RestartConfig {
                initial: self.restart.initial,
                default: self.restart.default,
                overrides,
            })
        } else {
            Err(Error::Invalid(out))
        }
    }

    pub fn asset_reduction(&self) -> AssetReduction {
        self.model.asset_reduction
    }

    /// Network, restart parameters and state space, with every violation
    /// from each stage reported together.
    pub fn state_space(&self) -> Result<StateSpace> {
        let net = self.network();
        let restart = self.restart_config();
        match (net, restart) {
            (Ok(net), Ok(restart)) => StateSpace::enumerate(net, &restart, self.asset_reduction()),
            (net, restart) => {
                let mut out = Vec::new();
                for r in [net.err(), restart.err()].into_iter().flatten() {
                    match r {
                        Error::Invalid(v) => out.extend(v),
                        other => return Err(other),
                    }
                }
                Err(Error::Invalid(out))
            }
        }
    }

    /// Builds the game with the configured action mode.
    pub fn game(&self) -> Result<StochasticGame> {
        self.game_with_mode(self.solver.action_mode)
    }

    pub fn game_with_mode(&self, mode: ActionMode) -> Result<StochasticGame> {
        Ok(StochasticGame::build(self.state_space()?, mode))
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            tolerance: self.solver.tolerance,
            max_iters: self.solver.max_iters,
        }
    }
}

fn rename_path(path: &str) -> String {
    if let Some(rest) = path.strip_prefix("node_probs[") {
        format!("nodes[{rest}.probs")
    } else if let Some(rest) = path.strip_prefix("independent_assets[") {
        format!("nodes[{rest}.independent_asset")
    } else {
        path.to_string()
    }
}
