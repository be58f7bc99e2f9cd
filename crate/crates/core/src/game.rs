//! Construction of the stochastic game: action sets, payoffs and the
//! transition lottery of every game element.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state_space::StateSpace;

/// Which actions are offered at each state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionMode {
    /// Alive nodes plus "do nothing".
    #[default]
    Reduced,
    /// Every node plus "do nothing" at every state; an attack on a
    /// compromised node always fails.
    Full,
}

impl fmt::Display for ActionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionMode::Reduced => f.write_str("reduced"),
            ActionMode::Full => f.write_str("full"),
        }
    }
}

impl FromStr for ActionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reduced" => Ok(ActionMode::Reduced),
            "full" => Ok(ActionMode::Full),
            _ => Err(Error::invalid("action_mode", format!("unknown mode {s:?}"))),
        }
    }
}

/// A pure action: attack (or defend) a zero-based node, or do nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Node(usize),
    Nothing,
}

impl Action {
    /// `"node 1"` (one-based) or `"nothing"`.
    pub fn label(&self) -> String {
        match self {
            Action::Node(i) => format!("node {}", i + 1),
            Action::Nothing => "nothing".to_string(),
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        let label = label.trim();
        if label == "nothing" {
            return Some(Action::Nothing);
        }
        let n: usize = label.strip_prefix("node ")?.trim().parse().ok()?;
        n.checked_sub(1).map(Action::Node)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSet {
    pub attacker: Vec<Action>,
    pub defender: Vec<Action>,
}

/// The outcome model of one action pair.
///
/// With probability `success` the attack succeeds, the attacker collects
/// `reward` and play moves to `on_success`. Otherwise play restarts at the
/// healthy state, stays, or ends with the conditional probabilities
/// `restart`, `stay` and `end` (which sum to 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub success: f64,
    pub reward: f64,
    pub on_success: Option<usize>,
    pub restart: f64,
    pub stay: f64,
    pub end: f64,
}

impl Cell {
    pub fn payoff(&self) -> f64 {
        self.success * self.reward
    }

    /// Unconditional probability that the game ends after this cell.
    pub fn end_probability(&self) -> f64 {
        (1.0 - self.success) * self.end
    }
}

/// One game element: the matrix game played at a state, with its
/// transition lottery over states.
#[derive(Debug, Clone, PartialEq)]
pub struct GameElement {
    pub state_index: usize,
    pub actions: ActionSet,
    pub payoff: DMatrix<f64>,
    pub end_prob: DMatrix<f64>,
    cells: Vec<Cell>,
    transitions: Vec<Vec<(usize, f64)>>,
}

impl GameElement {
    pub fn rows(&self) -> usize {
        self.payoff.nrows()
    }

    pub fn cols(&self) -> usize {
        self.payoff.ncols()
    }

    pub fn cell(&self, i: usize, j: usize) -> &Cell {
        &self.cells[i * self.cols() + j]
    }

    /// Nonzero transition probabilities `(state, q)` for the action pair,
    /// sorted by state index.
    pub fn transitions(&self, i: usize, j: usize) -> &[(usize, f64)] {
        &self.transitions[i * self.cols() + j]
    }

    /// Dense transition probability to state `l`.
    pub fn transition(&self, i: usize, j: usize, l: usize) -> f64 {
        self.transitions(i, j)
            .iter()
            .find(|(t, _)| *t == l)
            .map_or(0.0, |(_, q)| *q)
    }

    /// The matrix game `b_ij = a_ij + sum_l q_ij^l v_l`.
    pub fn continuation_matrix(&self, values: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows(), self.cols(), |i, j| {
            self.payoff[(i, j)]
                + self
                    .transitions(i, j)
                    .iter()
                    .map(|&(l, q)| q * values[l])
                    .sum::<f64>()
        })
    }
}

#[derive(Debug, Clone)]
pub struct StochasticGame {
    space: StateSpace,
    mode: ActionMode,
    elements: Vec<GameElement>,
}

impl StochasticGame {
    pub fn build(space: StateSpace, mode: ActionMode) -> Self {
        let elements = (0..space.len())
            .into_par_iter()
            .map(|k| build_element(&space, mode, k))
            .collect();
        Self {
            space,
            mode,
            elements,
        }
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn action_mode(&self) -> ActionMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[GameElement] {
        &self.elements
    }

    pub fn element(&self, k: usize) -> &GameElement {
        &self.elements[k]
    }

    /// Largest continuation mass `max_{k,i,j} sum_l q_ij^kl`; the Shapley
    /// operator is a sup-norm contraction with this modulus.
    pub fn contraction_modulus(&self) -> f64 {
        1.0 - self.min_end_probability()
    }

    pub fn min_end_probability(&self) -> f64 {
        self.elements
            .iter()
            .flat_map(|e| e.end_prob.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn dump(&self) -> GameDump {
        GameDump {
            schema: GAME_SCHEMA.to_string(),
            node_count: self.space.node_count(),
            action_mode: self.mode,
            asset_reduction: self.space.asset_reduction().to_string(),
            states: self
                .elements
                .iter()
                .map(|e| {
                    let state = self.space.state(e.state_index);
                    let r = self.space.reduction(e.state_index);
                    StateDump {
                        index: e.state_index + 1,
                        label: state.label(),
                        effective_assets: r
                            .alive
                            .iter()
                            .zip(&r.effective_assets)
                            .map(|(n, x)| NodeValue {
                                node: n + 1,
                                value: *x,
                            })
                            .collect(),
                        supports: r
                            .alive
                            .iter()
                            .zip(&r.supports)
                            .map(|(n, h)| NodeValue {
                                node: n + 1,
                                value: *h,
                            })
                            .collect(),
                        attacker_actions: e.actions.attacker.iter().map(Action::label).collect(),
                        defender_actions: e.actions.defender.iter().map(Action::label).collect(),
                        payoff: e
                            .payoff
                            .row_iter()
                            .map(|row| row.iter().copied().collect())
                            .collect(),
                        cells: (0..e.rows())
                            .flat_map(|i| (0..e.cols()).map(move |j| (i, j)))
                            .map(|(i, j)| CellDump {
                                attacker: i,
                                defender: j,
                                success: e.cell(i, j).success,
                                next: e
                                    .transitions(i, j)
                                    .iter()
                                    .map(|&(l, q)| NextState { state: l + 1, prob: q })
                                    .collect(),
                                end: e.end_prob[(i, j)],
                            })
                            .collect(),
                    }
                })
                .collect(),
        }
    }
}

fn actions_for(space: &StateSpace, mode: ActionMode, k: usize) -> Vec<Action> {
    let state = space.state(k);
    let nodes: Vec<usize> = match mode {
        ActionMode::Reduced => state.alive().collect(),
        ActionMode::Full => (0..space.node_count()).collect(),
    };
    nodes
        .into_iter()
        .map(Action::Node)
        .chain(std::iter::once(Action::Nothing))
        .collect()
}

fn build_element(space: &StateSpace, mode: ActionMode, k: usize) -> GameElement {
    let state = space.state(k);
    let reduced = space.reduction(k);
    let restart = space.restart(k);
    let attacker = actions_for(space, mode, k);
    let defender = attacker.clone();
    let (m, n) = (attacker.len(), defender.len());

    let mut cells = Vec::with_capacity(m * n);
    for a in &attacker {
        for d in &defender {
            let cell = match *a {
                Action::Node(t) if !state.is_compromised(t) => {
                    let defended = *d == Action::Node(t);
                    let success = reduced
                        .success_probability(t, defended)
                        .expect("target is alive");
                    Cell {
                        success,
                        reward: reduced.effective_asset(t).expect("target is alive"),
                        on_success: Some(state.with_compromised(t).expect("target is alive").index()),
                        restart: restart.p_r,
                        stay: 1.0 - restart.p_r - restart.p_e,
                        end: restart.p_e,
                    }
                }
                // attacking a compromised node is a failed attack
                Action::Node(_) => Cell {
                    success: 0.0,
                    reward: 0.0,
                    on_success: None,
                    restart: restart.p_r,
                    stay: 1.0 - restart.p_r - restart.p_e,
                    end: restart.p_e,
                },
                Action::Nothing => Cell {
                    success: 0.0,
                    reward: 0.0,
                    on_success: None,
                    restart: restart.p_nothing_r,
                    stay: 1.0 - restart.p_nothing_r - restart.p_nothing_e,
                    end: restart.p_nothing_e,
                },
            };
            cells.push(cell);
        }
    }

    let transitions = cells
        .iter()
        .map(|c| {
            let fail = 1.0 - c.success;
            let mut next: Vec<(usize, f64)> = Vec::with_capacity(3);
            let mut add = |l: usize, q: f64| {
                if q > 0.0 {
                    match next.iter_mut().find(|(t, _)| *t == l) {
                        Some(e) => e.1 += q,
                        None => next.push((l, q)),
                    }
                }
            };
            if let Some(l) = c.on_success {
                add(l, c.success);
            }
            add(0, fail * c.restart);
            add(k, fail * c.stay);
            next.sort_by_key(|(l, _)| *l);
            next
        })
        .collect();

    GameElement {
        state_index: k,
        payoff: DMatrix::from_fn(m, n, |i, j| cells[i * n + j].payoff()),
        end_prob: DMatrix::from_fn(m, n, |i, j| cells[i * n + j].end_probability()),
        actions: ActionSet { attacker, defender },
        cells,
        transitions,
    }
}

pub const GAME_SCHEMA: &str = "secgame-game/1";

/// Machine-readable game description, used by `describe --dump-game`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameDump {
    pub schema: String,
    pub node_count: usize,
    pub action_mode: ActionMode,
    pub asset_reduction: String,
    pub states: Vec<StateDump>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDump {
    pub index: usize,
    pub label: String,
    pub effective_assets: Vec<NodeValue>,
    pub supports: Vec<NodeValue>,
    pub attacker_actions: Vec<String>,
    pub defender_actions: Vec<String>,
    pub payoff: Vec<Vec<f64>>,
    pub cells: Vec<CellDump>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeValue {
    pub node: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDump {
    pub attacker: usize,
    pub defender: usize,
    pub success: f64,
    pub next: Vec<NextState>,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextState {
    pub state: usize,
    pub prob: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::example_3node;

    fn game(mode: ActionMode) -> StochasticGame {
        StochasticGame::build(example_3node().state_space().unwrap(), mode)
    }

    #[test]
    fn healthy_state_attack_and_defend_node_one() {
        let g = game(ActionMode::Reduced);
        let e = g.element(0);
        assert_eq!(e.rows(), 4);
        assert_eq!(e.cols(), 4);
        assert!((e.payoff[(0, 0)] - 2.2).abs() < 1e-12);
        assert!((e.transition(0, 0, 4) - 0.2).abs() < 1e-12);
        assert!((e.transition(0, 0, 0) - 0.56).abs() < 1e-12);
        assert!((e.end_prob[(0, 0)] - 0.24).abs() < 1e-12);
        assert_eq!(e.transitions(0, 0).len(), 2);
    }

    #[test]
    fn healthy_state_attack_one_defend_two_uses_undefended_params() {
        let e = game(ActionMode::Reduced).element(0).clone();
        assert!((e.cell(0, 1).success - 0.4).abs() < 1e-12);
        assert!((e.payoff[(0, 1)] - 4.4).abs() < 1e-12);
        assert!((e.transition(0, 1, 0) - 0.6 * 0.7).abs() < 1e-12);
    }

    #[test]
    fn state_five_attack_and_defend_node_two() {
        // the bundled example renormalizes (x_2 = 8.75 there); x_2 = 7 under
        // attenuation
        let cfg = example_3node();
        let net = cfg.network().unwrap();
        let space = StateSpace::enumerate(
            net,
            &cfg.restart_config().unwrap(),
            crate::network::AssetReduction::Attenuate,
        )
        .unwrap();
        let g = StochasticGame::build(space, ActionMode::Reduced);
        let e = g.element(4);
        assert_eq!(e.actions.attacker, vec![Action::Node(1), Action::Node(2), Action::Nothing]);
        assert!((e.payoff[(0, 0)] - 1.82).abs() < 1e-12);
        assert!((e.transition(0, 0, 6) - 0.26).abs() < 1e-12);
        assert!((e.transition(0, 0, 0) - 0.148).abs() < 1e-12);
        assert!((e.transition(0, 0, 4) - 0.37).abs() < 1e-12);
        assert!((e.end_prob[(0, 0)] - 0.222).abs() < 1e-12);
    }

    #[test]
    fn doing_nothing_pays_zero() {
        for mode in [ActionMode::Reduced, ActionMode::Full] {
            let g = game(mode);
            for e in g.elements() {
                let i = e.rows() - 1;
                assert_eq!(e.actions.attacker[i], Action::Nothing);
                for j in 0..e.cols() {
                    assert_eq!(e.payoff[(i, j)], 0.0);
                    assert_eq!(e.transitions(i, j), e.transitions(i, 0));
                }
            }
        }
    }

    #[test]
    fn all_compromised_action_counts() {
        assert_eq!(game(ActionMode::Reduced).element(7).rows(), 1);
        let full = game(ActionMode::Full);
        let e = full.element(7);
        assert_eq!((e.rows(), e.cols()), (4, 4));
        // attacks on dead nodes behave like failed attacks
        assert!((e.transition(0, 0, 0) - 0.2).abs() < 1e-12);
        assert!((e.transition(0, 0, 7) - 0.5).abs() < 1e-12);
        assert!((e.end_prob[(0, 0)] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn every_state_has_alive_plus_one_actions() {
        let g = game(ActionMode::Reduced);
        for (k, e) in g.elements().iter().enumerate() {
            let alive = g.space().state(k).alive().count();
            assert_eq!(e.rows(), alive + 1);
            assert_eq!(e.cols(), alive + 1);
        }
    }

    #[test]
    fn rows_are_stochastic() {
        for mode in [ActionMode::Reduced, ActionMode::Full] {
            let g = game(mode);
            assert!(g.min_end_probability() > 0.0);
            for e in g.elements() {
                for i in 0..e.rows() {
                    for j in 0..e.cols() {
                        let mass: f64 = e.transitions(i, j).iter().map(|t| t.1).sum();
                        assert!((mass + e.end_prob[(i, j)] - 1.0).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn action_labels_round_trip() {
        for a in [Action::Node(0), Action::Node(11), Action::Nothing] {
            assert_eq!(Action::parse(&a.label()), Some(a));
        }
        assert_eq!(Action::parse("node 0"), None);
        assert_eq!(Action::parse("attack"), None);
    }

    #[test]
    fn dump_is_deterministic() {
        let a = serde_json::to_string(&game(ActionMode::Full).dump()).unwrap();
        let b = serde_json::to_string(&game(ActionMode::Full).dump()).unwrap();
        assert_eq!(a, b);
    }
}
