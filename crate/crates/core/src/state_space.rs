//! Enumeration of the `2^n` system states with cached reductions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::network::{AssetReduction, InfluenceNetwork, NetworkState, ReducedNetwork};

/// Default cap on the node count (`2^16` states).
pub const DEFAULT_NODE_CAP: usize = 16;

/// Restart and end probabilities for one state. `p_r`/`p_e` apply after a
/// failed attack, `p_nothing_r`/`p_nothing_e` when the attacker does nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestartParams {
    pub p_r: f64,
    pub p_e: f64,
    pub p_nothing_r: f64,
    pub p_nothing_e: f64,
}

impl RestartParams {
    pub fn new(p_r: f64, p_e: f64, p_nothing_r: f64, p_nothing_e: f64) -> Self {
        Self {
            p_r,
            p_e,
            p_nothing_r,
            p_nothing_e,
        }
    }

    fn check(&self, state: NetworkState, out: &mut Vec<Violation>) {
        let path = format!("restart.state[{state}]");
        for (name, p) in [
            ("p_r", self.p_r),
            ("p_e", self.p_e),
            ("p_nothing_r", self.p_nothing_r),
            ("p_nothing_e", self.p_nothing_e),
        ] {
            if !(p > 0.0 && p < 1.0) {
                out.push(Violation::new(
                    format!("{path}.{name}"),
                    format!("{p} is not in (0, 1)"),
                ));
            }
        }
        for (names, sum) in [
            ("p_r + p_e", self.p_r + self.p_e),
            ("p_nothing_r + p_nothing_e", self.p_nothing_r + self.p_nothing_e),
        ] {
            if sum > 1.0 + 1e-12 {
                out.push(Violation::new(path.clone(), format!("{names} = {sum} exceeds 1")));
            } else if !state.is_healthy() && sum >= 1.0 - 1e-12 {
                out.push(Violation::new(
                    path.clone(),
                    format!("{names} = {sum} must be < 1 outside the healthy state"),
                ));
            }
        }
    }
}

/// Restart parameters for every state: one set for the healthy state, a
/// default for every other state, and optional per-state overrides keyed by
/// zero-based state index.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartConfig {
    pub initial: RestartParams,
    pub default: RestartParams,
    pub overrides: BTreeMap<usize, RestartParams>,
}

impl Default for RestartConfig {
    fn default() -> Self {
        Self {
            initial: RestartParams::new(0.7, 0.3, 0.7, 0.3),
            default: RestartParams::new(0.2, 0.3, 0.2, 0.3),
            overrides: BTreeMap::new(),
        }
    }
}

impl RestartConfig {
    pub fn params_for(&self, state: NetworkState) -> RestartParams {
        if let Some(p) = self.overrides.get(&state.index()) {
            *p
        } else if state.is_healthy() {
            self.initial
        } else {
            self.default
        }
    }
}

/// All system states in canonical order (index = bit mask, node 0 most
/// significant), with their reductions and restart parameters.
#[derive(Debug, Clone)]
pub struct StateSpace {
    network: InfluenceNetwork,
    asset_reduction: AssetReduction,
    states: Vec<NetworkState>,
    reductions: Vec<ReducedNetwork>,
    restart: Vec<RestartParams>,
}

impl StateSpace {
    pub fn enumerate(
        network: InfluenceNetwork,
        restart: &RestartConfig,
        asset_reduction: AssetReduction,
    ) -> Result<Self> {
        Self::enumerate_with_cap(network, restart, asset_reduction, DEFAULT_NODE_CAP)
    }

    pub fn enumerate_with_cap(
        network: InfluenceNetwork,
        restart: &RestartConfig,
        asset_reduction: AssetReduction,
        cap: usize,
    ) -> Result<Self> {
        let n = network.node_count();
        if n > cap || n > crate::network::MAX_STATE_NODES {
            return Err(Error::Capacity {
                node_count: n,
                cap,
            });
        }
        let count = 1usize << n;
        let mut out = Vec::new();
        for &index in restart.overrides.keys() {
            if index >= count {
                out.push(Violation::new(
                    format!("restart.overrides[{index}]"),
                    format!("state index out of range for {n} nodes"),
                ));
            }
        }
        let states: Vec<NetworkState> = (0..count)
            .map(|k| NetworkState::from_index(n, k))
            .collect::<Result<_>>()?;
        let restart: Vec<RestartParams> = states.iter().map(|&s| restart.params_for(s)).collect();
        for (state, params) in states.iter().zip(&restart) {
            params.check(*state, &mut out);
        }
        if !out.is_empty() {
            return Err(Error::Invalid(out));
        }
        let reductions = states
            .iter()
            .map(|&s| network.reduce(s, asset_reduction))
            .collect();
        Ok(Self {
            network,
            asset_reduction,
            states,
            reductions,
            restart,
        })
    }

    pub fn network(&self) -> &InfluenceNetwork {
        &self.network
    }

    pub fn asset_reduction(&self) -> AssetReduction {
        self.asset_reduction
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.network.node_count()
    }

    pub fn states(&self) -> &[NetworkState] {
        &self.states
    }

    pub fn state(&self, index: usize) -> NetworkState {
        self.states[index]
    }

    pub fn reduction(&self, index: usize) -> &ReducedNetwork {
        &self.reductions[index]
    }

    pub fn restart(&self, index: usize) -> RestartParams {
        self.restart[index]
    }

    /// Zero-based index of `state` in this space.
    pub fn index_of(&self, state: NetworkState) -> usize {
        debug_assert_eq!(state.node_count(), self.node_count());
        state.index()
    }
}

/// `state` with `node` additionally compromised.
pub fn successor(state: NetworkState, node: usize) -> Result<NetworkState> {
    state.with_compromised(node)
}
