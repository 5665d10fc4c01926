//! Community DC network: topology checks and power-flow solving.
//!
//! Flows are in kW. Each line carries a signed flow, positive from `from` to `to`.
//! The utility node is the slack and balances whatever the homes inject. Radial
//! networks have a unique flow satisfying KCL, found by accumulating subtree
//! injections towards the utility. On meshed networks the flow minimising
//! `Σ flow²/capacity` subject to KCL is used, via a weighted Laplacian solve.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Residual allowed in KCL and in the loss fixed-point iteration.
pub const FLOW_TOLERANCE_KW: f64 = 1e-9;
pub const MAX_LOSS_ROUNDS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Home,
    CommunityStorage,
    Utility,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridNode {
    pub id: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: String,
    pub to: String,
    pub capacity_kw: f64,
    /// kW lost per kW² transferred.
    #[serde(default)]
    pub loss_coeff: f64,
}

impl Line {
    pub fn new(from: impl Into<String>, to: impl Into<String>, capacity_kw: f64) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            capacity_kw,
            loss_coeff: 0.0,
        }
    }

    pub fn label(&self) -> String {
        format!("{}->{}", self.from, self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GridTopology {
    pub nodes: Vec<GridNode>,
    pub lines: Vec<Line>,
    /// Optional cap on |utility injection|; `Some(0.0)` islands the community.
    #[serde(default)]
    pub utility_limit_kw: Option<f64>,
}

impl GridTopology {
    pub fn node(&mut self, id: impl Into<String>, kind: NodeKind) -> &mut Self {
        self.nodes.push(GridNode { id: id.into(), kind });
        self
    }

    pub fn line(&mut self, from: &str, to: &str, capacity_kw: f64) -> &mut Self {
        self.lines.push(Line::new(from, to, capacity_kw));
        self
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn utility_index(&self) -> Option<usize> {
        self.nodes.iter().position(|n| n.kind == NodeKind::Utility)
    }

    /// Node-ordered injection vector from a map keyed by node id; missing nodes inject 0.
    pub fn injection_vector(&self, by_id: &BTreeMap<String, f64>) -> Result<Vec<f64>, GridError> {
        let mut out = vec![0.0; self.nodes.len()];
        for (id, &kw) in by_id {
            let i = self.index_of(id).ok_or_else(|| GridError::UnknownNode(id.clone()))?;
            out[i] = kw;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TopologyDefect {
    MissingSlack,
    MultipleSlack(Vec<String>),
    DuplicateId(String),
    Disconnected(String),
    NonPositiveCapacity(String),
    NegativeLossCoeff(String),
    SelfLoop(String),
    UnknownEndpoint { line: String, node: String },
    NegativeUtilityLimit,
}

impl fmt::Display for TopologyDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MissingSlack => write!(f, "missing slack: no utility node"),
            Self::MultipleSlack(ids) => write!(f, "multiple slack nodes: {}", ids.join(", ")),
            Self::DuplicateId(id) => write!(f, "duplicate node id `{id}`"),
            Self::Disconnected(id) => write!(f, "disconnected: node `{id}` cannot reach the utility"),
            Self::NonPositiveCapacity(l) => write!(f, "line {l} has nonpositive capacity"),
            Self::NegativeLossCoeff(l) => write!(f, "line {l} has a negative loss coefficient"),
            Self::SelfLoop(l) => write!(f, "line {l} is a self-loop"),
            Self::UnknownEndpoint { line, node } => {
                write!(f, "line {line} references unknown node `{node}`")
            }
            Self::NegativeUtilityLimit => write!(f, "utility limit must be >= 0"),
        }
    }
}

/// All invariant violations of a topology; empty when the network is usable.
pub fn validate_topology(topo: &GridTopology) -> Vec<TopologyDefect> {
    let mut defects = Vec::new();
    let utilities: Vec<&str> = topo
        .nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Utility)
        .map(|n| n.id.as_str())
        .collect();
    match utilities.len() {
        0 => defects.push(TopologyDefect::MissingSlack),
        1 => {}
        _ => defects.push(TopologyDefect::MultipleSlack(
            utilities.iter().map(|s| s.to_string()).collect(),
        )),
    }
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, n) in topo.nodes.iter().enumerate() {
        if index.insert(n.id.as_str(), i).is_some() {
            defects.push(TopologyDefect::DuplicateId(n.id.clone()));
        }
    }
    if matches!(topo.utility_limit_kw, Some(l) if !(l >= 0.0)) {
        defects.push(TopologyDefect::NegativeUtilityLimit);
    }
    let mut adjacency = vec![Vec::new(); topo.nodes.len()];
    for line in &topo.lines {
        let label = line.label();
        if !(line.capacity_kw > 0.0) {
            defects.push(TopologyDefect::NonPositiveCapacity(label.clone()));
        }
        if !(line.loss_coeff >= 0.0) {
            defects.push(TopologyDefect::NegativeLossCoeff(label.clone()));
        }
        if line.from == line.to {
            defects.push(TopologyDefect::SelfLoop(label.clone()));
        }
        let ends = [&line.from, &line.to].map(|id| {
            let found = index.get(id.as_str()).copied();
            if found.is_none() {
                defects.push(TopologyDefect::UnknownEndpoint {
                    line: label.clone(),
                    node: id.clone(),
                });
            }
            found
        });
        if let [Some(a), Some(b)] = ends {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
    }
    // reachability from the utility, or from node 0 when there is no utility
    let root = topo
        .utility_index()
        .or(if topo.nodes.is_empty() { None } else { Some(0) });
    if let Some(root) = root {
        let mut seen = vec![false; topo.nodes.len()];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        for (i, n) in topo.nodes.iter().enumerate() {
            if !seen[i] {
                defects.push(TopologyDefect::Disconnected(n.id.clone()));
            }
        }
    }
    defects
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("invalid topology: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidTopology(Vec<TopologyDefect>),
    #[error("expected {expected} injections, got {got}")]
    InjectionLength { expected: usize, got: usize },
    #[error("injection at node `{node}` is not finite")]
    NonFiniteInjection { node: String },
    #[error("utility node `{node}` cannot carry a scheduled injection")]
    SlackInjection { node: String },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("line {line} overloaded: |{flow_kw:.6}| kW > {capacity_kw} kW (over by {overload_kw:.6} kW)")]
    LineLimit {
        line: String,
        flow_kw: f64,
        capacity_kw: f64,
        overload_kw: f64,
    },
    #[error("utility exchange {slack_kw:.6} kW exceeds the {limit_kw} kW limit")]
    SlackLimit { slack_kw: f64, limit_kw: f64 },
    #[error("loss iteration did not settle after {rounds} rounds (last change {change_kw:e} kW)")]
    LossDiverged { rounds: usize, change_kw: f64 },
    #[error("meshed network Laplacian is singular")]
    Singular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSolution {
    pub line_flows: Vec<f64>,
    pub line_losses: Vec<f64>,
    /// Power supplied by the utility (negative when it absorbs).
    pub slack_injection_kw: f64,
    pub losses_kw: f64,
}

struct Network {
    n: usize,
    slack: usize,
    ends: Vec<(usize, usize)>,
    weights: Vec<f64>,
    radial: bool,
}

impl Network {
    fn build(topo: &GridTopology) -> Result<Self, GridError> {
        let defects = validate_topology(topo);
        if !defects.is_empty() {
            return Err(GridError::InvalidTopology(defects));
        }
        let index: HashMap<&str, usize> = topo.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        let ends = topo
            .lines
            .iter()
            .map(|l| (index[l.from.as_str()], index[l.to.as_str()]))
            .collect();
        Ok(Self {
            n: topo.nodes.len(),
            slack: topo.utility_index().expect("validated"),
            ends,
            weights: topo.lines.iter().map(|l| l.capacity_kw).collect(),
            radial: topo.lines.len() + 1 == topo.nodes.len(),
        })
    }

    /// Lossless flows for the given net injections (slack entry ignored).
    fn flows(&self, injections: &[f64]) -> Result<Vec<f64>, GridError> {
        if self.radial {
            Ok(self.radial_flows(injections))
        } else {
            self.meshed_flows(injections)
        }
    }

    fn radial_flows(&self, injections: &[f64]) -> Vec<f64> {
        let mut incident = vec![Vec::new(); self.n];
        for (l, &(a, b)) in self.ends.iter().enumerate() {
            incident[a].push(l);
            incident[b].push(l);
        }
        // breadth-first from the slack; parent_line[v] joins v to its parent
        let mut order = Vec::with_capacity(self.n);
        let mut parent_line = vec![usize::MAX; self.n];
        let mut seen = vec![false; self.n];
        seen[self.slack] = true;
        order.push(self.slack);
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &l in &incident[u] {
                let (a, b) = self.ends[l];
                let v = if a == u { b } else { a };
                if !seen[v] {
                    seen[v] = true;
                    parent_line[v] = l;
                    order.push(v);
                }
            }
        }
        let mut subtree = injections.to_vec();
        subtree[self.slack] = 0.0;
        let mut flows = vec![0.0; self.ends.len()];
        for &v in order.iter().skip(1).rev() {
            let l = parent_line[v];
            let (a, b) = self.ends[l];
            let parent = if a == v { b } else { a };
            // subtree surplus leaves v towards its parent
            flows[l] = if a == v { subtree[v] } else { -subtree[v] };
            subtree[parent] += subtree[v];
        }
        flows
    }

    fn meshed_flows(&self, injections: &[f64]) -> Result<Vec<f64>, GridError> {
        // reduced index: every node except the slack
        let reduced: Vec<Option<usize>> = {
            let mut k = 0;
            (0..self.n)
                .map(|i| {
                    if i == self.slack {
                        None
                    } else {
                        k += 1;
                        Some(k - 1)
                    }
                })
                .collect()
        };
        let m = self.n - 1;
        if m == 0 {
            return Ok(vec![0.0; self.ends.len()]);
        }
        let mut lap = DMatrix::<f64>::zeros(m, m);
        for (l, &(a, b)) in self.ends.iter().enumerate() {
            let w = self.weights[l];
            let (ra, rb) = (reduced[a], reduced[b]);
            if let Some(i) = ra {
                lap[(i, i)] += w;
            }
            if let Some(j) = rb {
                lap[(j, j)] += w;
            }
            if let (Some(i), Some(j)) = (ra, rb) {
                lap[(i, j)] -= w;
                lap[(j, i)] -= w;
            }
        }
        let rhs = DVector::from_iterator(m, (0..self.n).filter(|&i| i != self.slack).map(|i| injections[i]));
        let potential = lap.cholesky().ok_or(GridError::Singular)?.solve(&rhs);
        let at = |i: usize| reduced[i].map_or(0.0, |k| potential[k]);
        Ok(self
            .ends
            .iter()
            .zip(&self.weights)
            .map(|(&(a, b), &w)| w * (at(a) - at(b)))
            .collect())
    }
}

/// Solves line flows for per-node injections (kW, positive = production).
///
/// `injections` is indexed like `topo.nodes`; the utility entry must be zero.
pub fn solve_flows(topo: &GridTopology, injections: &[f64]) -> Result<FlowSolution, GridError> {
    let net = Network::build(topo)?;
    if injections.len() != net.n {
        return Err(GridError::InjectionLength {
            expected: net.n,
            got: injections.len(),
        });
    }
    for (i, &v) in injections.iter().enumerate() {
        if !v.is_finite() {
            return Err(GridError::NonFiniteInjection {
                node: topo.nodes[i].id.clone(),
            });
        }
    }
    if injections[net.slack] != 0.0 {
        return Err(GridError::SlackInjection {
            node: topo.nodes[net.slack].id.clone(),
        });
    }
    let total_injection: f64 = injections.iter().sum();
    let lossy = topo.lines.iter().any(|l| l.loss_coeff > 0.0);

    let mut flows = net.flows(injections)?;
    let mut line_losses = vec![0.0; flows.len()];
    if lossy {
        let mut slack = -total_injection;
        let mut settled = false;
        let mut change = f64::INFINITY;
        for _ in 0..MAX_LOSS_ROUNDS {
            line_losses = topo
                .lines
                .iter()
                .zip(&flows)
                .map(|(l, f)| l.loss_coeff * f * f)
                .collect();
            // each line's loss is drawn half from either end
            let mut effective = injections.to_vec();
            for (l, &(a, b)) in net.ends.iter().enumerate() {
                effective[a] -= 0.5 * line_losses[l];
                effective[b] -= 0.5 * line_losses[l];
            }
            effective[net.slack] = 0.0;
            let next_slack = -total_injection + line_losses.iter().sum::<f64>();
            change = (next_slack - slack).abs();
            slack = next_slack;
            flows = net.flows(&effective)?;
            if !change.is_finite() {
                break;
            }
            if change < FLOW_TOLERANCE_KW {
                settled = true;
                break;
            }
        }
        if !settled {
            return Err(GridError::LossDiverged {
                rounds: MAX_LOSS_ROUNDS,
                change_kw: change,
            });
        }
        // losses consistent with the final flows
        line_losses = topo
            .lines
            .iter()
            .zip(&flows)
            .map(|(l, f)| l.loss_coeff * f * f)
            .collect();
    }

    for (line, &flow) in topo.lines.iter().zip(&flows) {
        if flow.abs() > line.capacity_kw + FLOW_TOLERANCE_KW {
            return Err(GridError::LineLimit {
                line: line.label(),
                flow_kw: flow,
                capacity_kw: line.capacity_kw,
                overload_kw: flow.abs() - line.capacity_kw,
            });
        }
    }
    let losses_kw: f64 = line_losses.iter().sum();
    let slack_injection_kw = -total_injection + losses_kw;
    if let Some(limit) = topo.utility_limit_kw {
        if slack_injection_kw.abs() > limit + FLOW_TOLERANCE_KW {
            return Err(GridError::SlackLimit {
                slack_kw: slack_injection_kw,
                limit_kw: limit,
            });
        }
    }
    Ok(FlowSolution {
        line_flows: flows,
        line_losses,
        slack_injection_kw,
        losses_kw,
    })
}

impl FlowSolution {
    /// Largest KCL residual over non-slack nodes, counting half of each line's loss
    /// at either end.
    pub fn kcl_residual(&self, topo: &GridTopology, injections: &[f64]) -> f64 {
        let slack = topo.utility_index();
        let mut net = injections.to_vec();
        for (l, line) in topo.lines.iter().enumerate() {
            let (a, b) = (
                topo.index_of(&line.from).expect("known node"),
                topo.index_of(&line.to).expect("known node"),
            );
            net[a] -= self.line_flows[l] + 0.5 * self.line_losses[l];
            net[b] += self.line_flows[l] - 0.5 * self.line_losses[l];
        }
        net.iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != slack)
            .map(|(_, r)| r.abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn path() -> GridTopology {
        let mut t = GridTopology::default();
        t.node("A", NodeKind::Home)
            .node("B", NodeKind::Home)
            .node("utility", NodeKind::Utility)
            .line("A", "B", 10.0)
            .line("B", "utility", 10.0);
        t
    }

    #[test]
    fn minimal_path_is_valid() {
        assert!(validate_topology(&path()).is_empty());
    }

    #[test]
    fn defects_are_reported() {
        let mut t = path();
        t.nodes.retain(|n| n.kind != NodeKind::Utility);
        t.lines.pop();
        assert_eq!(validate_topology(&t), vec![TopologyDefect::MissingSlack]);

        let mut t = path();
        t.node("C", NodeKind::Home);
        assert_eq!(validate_topology(&t), vec![TopologyDefect::Disconnected("C".into())]);

        let mut t = path();
        t.node("A", NodeKind::Home).node("grid2", NodeKind::Utility);
        t.lines[0].capacity_kw = 0.0;
        t.line("grid2", "grid2", 1.0);
        let d = validate_topology(&t);
        assert!(d.contains(&TopologyDefect::DuplicateId("A".into())));
        assert!(d.contains(&TopologyDefect::NonPositiveCapacity("A->B".into())));
        assert!(d.contains(&TopologyDefect::SelfLoop("grid2->grid2".into())));
        assert!(matches!(d[0], TopologyDefect::MultipleSlack(_)));
    }

    #[test]
    fn local_balance_on_path() {
        let sol = solve_flows(&path(), &[2.0, -2.0, 0.0]).unwrap();
        assert_abs_diff_eq!(sol.line_flows[0], 2.0);
        assert_abs_diff_eq!(sol.line_flows[1], 0.0);
        assert_abs_diff_eq!(sol.slack_injection_kw, 0.0);
        assert_eq!(sol.losses_kw, 0.0);
    }

    #[test]
    fn single_exporter() {
        let mut t = GridTopology::default();
        t.node("h", NodeKind::Home)
            .node("u", NodeKind::Utility)
            .line("h", "u", 10.0);
        let sol = solve_flows(&t, &[5.0, 0.0]).unwrap();
        assert_abs_diff_eq!(sol.slack_injection_kw, -5.0);
        assert_abs_diff_eq!(sol.line_flows[0], 5.0);
    }

    #[test]
    fn capacity_violation_names_line() {
        let mut t = GridTopology::default();
        t.node("A", NodeKind::Home)
            .node("B", NodeKind::Home)
            .node("u", NodeKind::Utility)
            .line("A", "B", 1.0)
            .line("B", "u", 10.0);
        match solve_flows(&t, &[2.0, -2.0, 0.0]) {
            Err(GridError::LineLimit { line, overload_kw, .. }) => {
                assert_eq!(line, "A->B");
                assert_abs_diff_eq!(overload_kw, 1.0);
            }
            other => panic!("expected line limit, got {other:?}"),
        }
    }

    #[test]
    fn islanded_utility_limit() {
        let mut t = path();
        t.utility_limit_kw = Some(0.0);
        assert!(solve_flows(&t, &[1.0, -1.0, 0.0]).is_ok());
        assert!(matches!(
            solve_flows(&t, &[1.0, -2.0, 0.0]),
            Err(GridError::SlackLimit { .. })
        ));
    }

    #[test]
    fn mesh_splits_by_capacity() {
        // A ring A-B-u-A: A exports 3 kW; paths A->u (cap 2) and A->B->u (cap 1 each)
        let mut t = GridTopology::default();
        t.node("A", NodeKind::Home)
            .node("B", NodeKind::Home)
            .node("u", NodeKind::Utility)
            .line("A", "u", 2.0)
            .line("A", "B", 1.0)
            .line("B", "u", 1.0);
        let sol = solve_flows(&t, &[1.5, 0.0, 0.0]).unwrap();
        // series path conductance 0.5 vs direct 2: direct carries 0.8 of the flow
        assert_abs_diff_eq!(sol.line_flows[0], 1.2, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.line_flows[1], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.line_flows[2], 0.3, epsilon = 1e-12);
        assert!(sol.kcl_residual(&t, &[1.5, 0.0, 0.0]) < 1e-12);
    }

    #[test]
    fn losses_are_supplied_by_the_slack() {
        let mut t = path();
        for l in &mut t.lines {
            l.loss_coeff = 0.01;
        }
        let inj = [-2.0, -1.0, 0.0];
        let sol = solve_flows(&t, &inj).unwrap();
        assert!(sol.losses_kw > 0.0);
        let balance = inj.iter().sum::<f64>() + sol.slack_injection_kw - sol.losses_kw;
        assert!(balance.abs() < 1e-9);
        assert!(sol.kcl_residual(&t, &inj) < 1e-8);
    }

    #[test]
    fn runaway_losses_fail() {
        let mut t = path();
        for l in &mut t.lines {
            l.loss_coeff = 5.0;
            l.capacity_kw = 1e9;
        }
        assert!(matches!(
            solve_flows(&t, &[-3.0, -3.0, 0.0]),
            Err(GridError::LossDiverged { .. })
        ));
    }

    #[test]
    fn slack_entry_must_be_zero() {
        assert!(matches!(
            solve_flows(&path(), &[0.0, 0.0, 1.0]),
            Err(GridError::SlackInjection { .. })
        ));
    }
}
