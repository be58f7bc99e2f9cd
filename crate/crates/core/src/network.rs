//! Linear influence networks for security assets and vulnerabilities.
//!
//! Node `i`'s influence on node `j` is entry `(i, j)` of a column-stochastic
//! influence matrix; effective assets are `x = I s`. The support matrix is
//! read the same way, but its column sums are never renormalized: losing a
//! supporter simply lowers the support of the nodes it was protecting.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Absolute tolerance for stochasticity and conservation checks.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// Compromise-probability parameters for one node.
///
/// `d`/`n` select defended or not defended; `1`/`0` select full or zero
/// support. The probability at intermediate support is affine in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeProbs {
    pub p_d1: f64,
    pub p_n1: f64,
    pub p_d0: f64,
    pub p_n0: f64,
}

impl NodeProbs {
    pub fn new(p_d1: f64, p_n1: f64, p_d0: f64, p_n0: f64) -> Self {
        Self {
            p_d1,
            p_n1,
            p_d0,
            p_n0,
        }
    }

    /// Success probability of an attack on this node at the given support.
    pub fn success(&self, support: f64, defended: bool) -> f64 {
        if defended {
            self.p_d0 - (self.p_d0 - self.p_d1) * support
        } else {
            self.p_n0 - (self.p_n0 - self.p_n1) * support
        }
    }

    fn check(&self, path: &str, out: &mut Vec<Violation>) {
        let named = [
            ("p_d1", self.p_d1),
            ("p_n1", self.p_n1),
            ("p_d0", self.p_d0),
            ("p_n0", self.p_n0),
        ];
        let mut in_range = true;
        for (name, p) in named {
            if !(p > 0.0 && p < 1.0) {
                out.push(Violation::new(
                    format!("{path}.{name}"),
                    format!("{p} is not in (0, 1)"),
                ));
                in_range = false;
            }
        }
        if !in_range {
            return;
        }
        let ordering = [
            ("p_d1", self.p_d1, "p_n1", self.p_n1),
            ("p_d0", self.p_d0, "p_n0", self.p_n0),
            ("p_d1", self.p_d1, "p_d0", self.p_d0),
            ("p_n1", self.p_n1, "p_n0", self.p_n0),
        ];
        for (a, pa, b, pb) in ordering {
            if pa >= pb {
                out.push(Violation::new(
                    path.to_string(),
                    format!("ordering violated: {a} = {pa} must be < {b} = {pb}"),
                ));
            }
        }
    }
}

/// How the independent assets of surviving nodes change when nodes are
/// compromised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssetReduction {
    /// Each surviving node keeps only the share of its independent asset
    /// that was held by surviving influencers: `s_j <- s_j * (1 - sum_dead w_dj)`.
    /// Applying the single-node rule node by node gives the same result in any order.
    #[default]
    Attenuate,
    /// Independent assets are kept as they are; only the influence columns
    /// are renormalized over the surviving nodes.
    Renormalize,
}

impl fmt::Display for AssetReduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssetReduction::Attenuate => f.write_str("attenuate"),
            AssetReduction::Renormalize => f.write_str("renormalize"),
        }
    }
}

/// Static description of a network: influence, independent assets, support
/// and per-node compromise probabilities. Validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceNetwork {
    influence: DMatrix<f64>,
    independent_assets: Vec<f64>,
    support: DMatrix<f64>,
    node_probs: Vec<NodeProbs>,
}

impl InfluenceNetwork {
    /// Builds a network, collecting every invariant violation.
    pub fn new(
        influence: DMatrix<f64>,
        independent_assets: Vec<f64>,
        support: DMatrix<f64>,
        node_probs: Vec<NodeProbs>,
    ) -> Result<Self> {
        let n = independent_assets.len();
        let mut out = Vec::new();
        if n == 0 {
            out.push(Violation::new("nodes", "network must have at least one node"));
        }
        if influence.shape() != (n, n) {
            out.push(Violation::new(
                "influence",
                format!("shape {:?} does not match {n} nodes", influence.shape()),
            ));
        }
        if support.shape() != (n, n) {
            out.push(Violation::new(
                "support",
                format!("shape {:?} does not match {n} nodes", support.shape()),
            ));
        }
        if node_probs.len() != n {
            out.push(Violation::new(
                "node_probs",
                format!("{} entries for {n} nodes", node_probs.len()),
            ));
        }
        if !out.is_empty() {
            return Err(Error::Invalid(out));
        }

        for (j, s) in independent_assets.iter().enumerate() {
            if !s.is_finite() || *s < 0.0 {
                out.push(Violation::new(
                    format!("independent_assets[{j}]"),
                    format!("{s} must be finite and nonnegative"),
                ));
            }
        }
        for j in 0..n {
            let mut sum = 0.0;
            for i in 0..n {
                let w = influence[(i, j)];
                if !w.is_finite() || !(0.0..=1.0).contains(&w) {
                    out.push(Violation::new(
                        format!("influence[{i}][{j}]"),
                        format!("weight {w} is not in [0, 1]"),
                    ));
                }
                sum += w;
            }
            if (sum - 1.0).abs() > STOCHASTIC_TOL || !sum.is_finite() {
                out.push(Violation::new(
                    format!("influence.column[{j}]"),
                    format!("column sums to {sum}, expected 1"),
                ));
            }
        }
        for j in 0..n {
            let mut sum = 0.0;
            for i in 0..n {
                let h = support[(i, j)];
                if !h.is_finite() || !(0.0..=1.0).contains(&h) {
                    out.push(Violation::new(
                        format!("support[{i}][{j}]"),
                        format!("weight {h} is not in [0, 1]"),
                    ));
                }
                sum += h;
            }
            if sum > 1.0 + STOCHASTIC_TOL {
                out.push(Violation::new(
                    format!("support.column[{j}]"),
                    format!("support of node {j} is {sum}, which exceeds 1"),
                ));
            }
        }
        for (j, p) in node_probs.iter().enumerate() {
            p.check(&format!("node_probs[{j}]"), &mut out);
        }

        if out.is_empty() {
            Ok(Self {
                influence,
                independent_assets,
                support,
                node_probs,
            })
        } else {
            Err(Error::Invalid(out))
        }
    }

    pub fn node_count(&self) -> usize {
        self.independent_assets.len()
    }

    pub fn influence(&self) -> &DMatrix<f64> {
        &self.influence
    }

    pub fn independent_assets(&self) -> &[f64] {
        &self.independent_assets
    }

    pub fn support_matrix(&self) -> &DMatrix<f64> {
        &self.support
    }

    pub fn node_probs(&self) -> &[NodeProbs] {
        &self.node_probs
    }

    /// Effective assets of the intact network, `x = I s`.
    pub fn effective_assets(&self) -> Vec<f64> {
        let s = DVector::from_column_slice(&self.independent_assets);
        (&self.influence * s).iter().copied().collect()
    }

    /// Column sums of the support matrix.
    pub fn supports(&self) -> Vec<f64> {
        self.support.column_iter().map(|c| c.sum()).collect()
    }

    /// Derived quantities for the network with the nodes of `state` removed.
    ///
    /// All compromised nodes are removed at once: surviving influence
    /// columns are rescaled by their surviving mass, and supports are summed
    /// over surviving supporters only.
    pub fn reduce(&self, state: NetworkState, mode: AssetReduction) -> ReducedNetwork {
        assert_eq!(
            state.node_count(),
            self.node_count(),
            "state width does not match network"
        );
        let alive: Vec<usize> = state.alive().collect();
        let m = alive.len();

        let mut renormalized = DMatrix::zeros(m, m);
        let mut adjusted = Vec::with_capacity(m);
        for (cj, &j) in alive.iter().enumerate() {
            let mass: f64 = alive.iter().map(|&i| self.influence[(i, j)]).sum();
            if mass <= f64::EPSILON {
                // every influencer of j is gone, including j itself
                adjusted.push(0.0);
                continue;
            }
            for (ci, &i) in alive.iter().enumerate() {
                renormalized[(ci, cj)] = self.influence[(i, j)] / mass;
            }
            let s = self.independent_assets[j];
            adjusted.push(match mode {
                AssetReduction::Attenuate => s * mass,
                AssetReduction::Renormalize => s,
            });
        }

        let effective: Vec<f64> = (&renormalized * DVector::from_column_slice(&adjusted))
            .iter()
            .copied()
            .collect();
        let supports = alive
            .iter()
            .map(|&j| alive.iter().map(|&i| self.support[(i, j)]).sum::<f64>())
            .collect();
        let probs = alive.iter().map(|&j| self.node_probs[j]).collect();

        ReducedNetwork {
            state,
            alive,
            adjusted_assets: adjusted,
            renormalized_influence: renormalized,
            effective_assets: effective,
            supports,
            probs,
        }
    }
}

/// Maximum supported node count of a [`NetworkState`].
pub const MAX_STATE_NODES: usize = 63;

/// A set of compromised nodes, stored as a bit mask with node 0 as the
/// most significant of `node_count` bits. The mask value is the state's
/// zero-based canonical index, so `(0,0,...,0)` is state 1 and the
/// all-compromised state is `2^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NetworkState {
    mask: u64,
    node_count: u8,
}

impl NetworkState {
    pub fn healthy(node_count: usize) -> Self {
        assert!(node_count <= MAX_STATE_NODES);
        Self {
            mask: 0,
            node_count: node_count as u8,
        }
    }

    pub fn all_compromised(node_count: usize) -> Self {
        assert!(node_count <= MAX_STATE_NODES);
        Self {
            mask: (1u64 << node_count) - 1,
            node_count: node_count as u8,
        }
    }

    /// State from a zero-based canonical index (the bit mask itself).
    pub fn from_index(node_count: usize, index: usize) -> Result<Self> {
        if node_count > MAX_STATE_NODES || (index as u64) >> node_count != 0 {
            return Err(Error::invalid(
                "state",
                format!("index {index} is out of range for {node_count} nodes"),
            ));
        }
        Ok(Self {
            mask: index as u64,
            node_count: node_count as u8,
        })
    }

    pub fn from_nodes(node_count: usize, compromised: &[usize]) -> Result<Self> {
        let mut state = Self::healthy(node_count);
        for &node in compromised {
            if node >= node_count {
                return Err(Error::NodeOutOfRange { node, node_count });
            }
            state.mask |= state.bit(node);
        }
        Ok(state)
    }

    /// Parses a bit pattern such as `"101"` (node 0 leftmost).
    pub fn from_bits(pattern: &str) -> Result<Self> {
        let trimmed = pattern.trim_matches(|c| c == '(' || c == ')');
        let bits: Vec<char> = trimmed.chars().filter(|c| *c != ',' && *c != ' ').collect();
        if bits.is_empty() || bits.len() > MAX_STATE_NODES {
            return Err(Error::invalid("state", format!("bad bit pattern {pattern:?}")));
        }
        let mut mask = 0u64;
        for c in &bits {
            mask = (mask << 1)
                | match c {
                    '0' => 0,
                    '1' => 1,
                    _ => {
                        return Err(Error::invalid(
                            "state",
                            format!("bad bit pattern {pattern:?}"),
                        ))
                    }
                };
        }
        Ok(Self {
            mask,
            node_count: bits.len() as u8,
        })
    }

    fn bit(&self, node: usize) -> u64 {
        1u64 << (self.node_count as usize - 1 - node)
    }

    pub fn node_count(&self) -> usize {
        self.node_count as usize
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    /// Zero-based canonical index.
    pub fn index(&self) -> usize {
        self.mask as usize
    }

    pub fn is_compromised(&self, node: usize) -> bool {
        node < self.node_count() && self.mask & self.bit(node) != 0
    }

    pub fn compromised_count(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_healthy(&self) -> bool {
        self.mask == 0
    }

    pub fn alive(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(|&i| !self.is_compromised(i))
    }

    pub fn compromised(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(|&i| self.is_compromised(i))
    }

    /// This state with one more node compromised.
    pub fn with_compromised(&self, node: usize) -> Result<Self> {
        if node >= self.node_count() {
            return Err(Error::NodeOutOfRange {
                node,
                node_count: self.node_count(),
            });
        }
        if self.is_compromised(node) {
            return Err(Error::NodeCompromised {
                node,
                state: self.label(),
            });
        }
        Ok(Self {
            mask: self.mask | self.bit(node),
            ..*self
        })
    }

    /// Bit pattern, node 0 leftmost, e.g. `"101"`.
    pub fn bits(&self) -> String {
        (0..self.node_count())
            .map(|i| if self.is_compromised(i) { '1' } else { '0' })
            .collect()
    }

    /// Tuple label, e.g. `"(1,0,1)"`.
    pub fn label(&self) -> String {
        let inner: Vec<&str> = (0..self.node_count())
            .map(|i| if self.is_compromised(i) { "1" } else { "0" })
            .collect();
        format!("({})", inner.join(","))
    }
}

impl fmt::Display for NetworkState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.index() + 1, self.label())
    }
}

/// Per-state view of the network after the compromised nodes are removed.
/// Vectors are indexed by position in `alive`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedNetwork {
    pub state: NetworkState,
    pub alive: Vec<usize>,
    pub adjusted_assets: Vec<f64>,
    pub renormalized_influence: DMatrix<f64>,
    pub effective_assets: Vec<f64>,
    pub supports: Vec<f64>,
    probs: Vec<NodeProbs>,
}

impl ReducedNetwork {
    pub fn position(&self, node: usize) -> Option<usize> {
        self.alive.iter().position(|&a| a == node)
    }

    pub fn effective_asset(&self, node: usize) -> Option<f64> {
        self.position(node).map(|p| self.effective_assets[p])
    }

    pub fn support(&self, node: usize) -> Option<f64> {
        self.position(node).map(|p| self.supports[p])
    }

    /// Probability that an attack on `target` succeeds in this state.
    pub fn success_probability(&self, target: usize, defended: bool) -> Result<f64> {
        match self.position(target) {
            Some(p) => Ok(self.probs[p].success(self.supports[p], defended)),
            None if target < self.state.node_count() => Err(Error::NodeCompromised {
                node: target,
                state: self.state.label(),
            }),
            None => Err(Error::NodeOutOfRange {
                node: target,
                node_count: self.state.node_count(),
            }),
        }
    }
}
