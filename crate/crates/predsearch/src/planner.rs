//! Full-information planning: rank every vertex by the error the prediction
//! table would have if the goal sat there, then sweep candidate sets of
//! geometrically growing implied error with Steiner-tree tours.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{CostLedger, MoveRecord};
use crate::model::{Graph, Instance, ModelError, TreeView, Vertex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorMode {
    /// Count of vertices whose prediction would be wrong.
    L0,
    /// Sum of absolute prediction deviations.
    L1,
}

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("l0 mode requires unit edge lengths")]
    NotUnitLength,
    #[error("steiner tree needs a nonempty terminal set")]
    EmptyTerminals,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("internal invariant violated: {0}")]
    Internal(&'static str),
}

/// Implied error of every vertex: the prediction error the table would have
/// if the goal were at that vertex. At the true goal it equals the actual
/// error.
pub fn implied_error(inst: &Instance, mode: ErrorMode) -> Vec<u64> {
    let n = inst.graph().n();
    let mut phi = vec![0u64; n];
    for u in 0..n {
        let du = inst.graph().distances_from(u);
        let fu = inst.prediction(u);
        match mode {
            ErrorMode::L0 => {
                for v in 0..n {
                    if fu != du[v] as i64 {
                        phi[v] += 1;
                    }
                }
            }
            ErrorMode::L1 => {
                for v in 0..n {
                    phi[v] += fu.abs_diff(du[v] as i64);
                }
            }
        }
    }
    phi
}

/// A tree subgraph spanning a terminal set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteinerTree {
    vertices: Vec<Vertex>,
    /// Tree edges with lengths, each listed once with smaller endpoint first.
    edges: Vec<(Vertex, Vertex, u64)>,
    total_length: u64,
}

impl SteinerTree {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(Vertex, Vertex, u64)] {
        &self.edges
    }

    pub fn total_length(&self) -> u64 {
        self.total_length
    }

    fn adjacency(&self) -> std::collections::HashMap<Vertex, Vec<(Vertex, u64)>> {
        let mut adj: std::collections::HashMap<Vertex, Vec<(Vertex, u64)>> =
            self.vertices.iter().map(|&v| (v, Vec::new())).collect();
        for &(u, v, len) in &self.edges {
            adj.get_mut(&u).unwrap().push((v, len));
            adj.get_mut(&v).unwrap().push((u, len));
        }
        for nbrs in adj.values_mut() {
            nbrs.sort_unstable();
        }
        adj
    }
}

/// Minimum-length spanning subtree for the terminals.
///
/// On trees this is exact (the union of pairwise paths). On general graphs it
/// is the classic metric-closure approximation: a minimum spanning tree of
/// the terminal distance matrix, realized by shortest paths, whose length is
/// at most twice the optimum.
pub fn steiner_tree(graph: &Graph, terminals: &[Vertex]) -> Result<SteinerTree, PlannerError> {
    let first = *terminals.first().ok_or(PlannerError::EmptyTerminals)?;
    if graph.is_tree() {
        let view = TreeView::new(graph, first)?;
        let mut in_tree = std::collections::HashSet::from([first]);
        let mut edges = Vec::new();
        for &t in terminals {
            let mut x = t;
            while in_tree.insert(x) {
                let p = view
                    .parent(x)
                    .ok_or(PlannerError::Internal("terminal above the steiner root"))?;
                edges.push((x.min(p), x.max(p), view.level(x) - view.level(p)));
                x = p;
            }
        }
        let mut vertices: Vec<Vertex> = in_tree.into_iter().collect();
        vertices.sort_unstable();
        edges.sort_unstable();
        let total_length = edges.iter().map(|e| e.2).sum();
        return Ok(SteinerTree {
            vertices,
            edges,
            total_length,
        });
    }

    // Metric closure over the terminals, Prim-style MST, shortest-path
    // realization, then a spanning tree of the realized union.
    let terminal_dists: Vec<_> = terminals.iter().map(|&t| graph.distances_from(t)).collect();
    let m = terminals.len();
    let mut in_mst = vec![false; m];
    let mut best_cost = vec![u64::MAX; m];
    let mut best_from = vec![0usize; m];
    in_mst[0] = true;
    for i in 1..m {
        best_cost[i] = terminal_dists[0][terminals[i]];
    }
    let mut union_edges = std::collections::BTreeSet::new();
    for _ in 1..m {
        let mut pick = None;
        for i in 0..m {
            if !in_mst[i]
                && pick
                    .map(|p: usize| best_cost[i] < best_cost[p])
                    .unwrap_or(true)
            {
                pick = Some(i);
            }
        }
        let i = pick.ok_or(PlannerError::Internal("disconnected terminal set"))?;
        in_mst[i] = true;
        for (u, v, len) in path_edges(graph, terminals[best_from[i]], terminals[i]) {
            union_edges.insert((u.min(v), u.max(v), len));
        }
        for j in 0..m {
            if !in_mst[j] && terminal_dists[i][terminals[j]] < best_cost[j] {
                best_cost[j] = terminal_dists[i][terminals[j]];
                best_from[j] = i;
            }
        }
    }
    // Spanning tree of the union via breadth-first search from the first
    // terminal, adjacency in ascending order.
    let mut adj: std::collections::BTreeMap<Vertex, Vec<(Vertex, u64)>> =
        std::collections::BTreeMap::new();
    adj.entry(first).or_default();
    for &(u, v, len) in &union_edges {
        adj.entry(u).or_default().push((v, len));
        adj.entry(v).or_default().push((u, len));
    }
    for nbrs in adj.values_mut() {
        nbrs.sort_unstable();
    }
    let mut seen = std::collections::HashSet::from([first]);
    let mut queue = std::collections::VecDeque::from([first]);
    let mut edges = Vec::new();
    while let Some(u) = queue.pop_front() {
        for &(v, len) in &adj[&u] {
            if seen.insert(v) {
                edges.push((u.min(v), u.max(v), len));
                queue.push_back(v);
            }
        }
    }
    let mut vertices: Vec<Vertex> = seen.into_iter().collect();
    vertices.sort_unstable();
    edges.sort_unstable();
    let total_length = edges.iter().map(|e| e.2).sum();
    Ok(SteinerTree {
        vertices,
        edges,
        total_length,
    })
}

/// Vertices of a shortest path from `u` to `v`, endpoints included.
/// Deterministic: each hop chooses the smallest-id predecessor.
pub fn shortest_path(graph: &Graph, u: Vertex, v: Vertex) -> Vec<Vertex> {
    let du = graph.distances_from(u);
    let mut path = vec![v];
    let mut cur = v;
    while cur != u {
        let mut pred = None;
        for &(x, len) in graph.neighbors(cur) {
            if du[x] + len == du[cur] && pred.map(|p| x < p).unwrap_or(true) {
                pred = Some(x);
            }
        }
        cur = pred.expect("connected graph has a predecessor chain");
        path.push(cur);
    }
    path.reverse();
    path
}

fn path_edges(graph: &Graph, u: Vertex, v: Vertex) -> Vec<(Vertex, Vertex, u64)> {
    let path = shortest_path(graph, u, v);
    path.windows(2)
        .map(|w| {
            let len = graph
                .neighbors(w[0])
                .iter()
                .find(|&&(x, _)| x == w[1])
                .expect("path follows edges")
                .1;
            (w[0], w[1], len)
        })
        .collect()
}

/// Closed depth-first walk of the tree from `start`: every edge is traversed
/// once down and once up, children in ascending id.
pub fn euler_walk(tree: &SteinerTree, start: Vertex) -> Vec<(Vertex, u64)> {
    let adj = tree.adjacency();
    let mut walk = Vec::new();
    let mut visited = std::collections::HashSet::from([start]);
    // (vertex, parent, next neighbor index, edge length back to parent)
    let mut stack = vec![(start, start, 0usize, 0u64)];
    while let Some((v, parent, idx, up_len)) = stack.pop() {
        let nbrs = &adj[&v];
        if idx < nbrs.len() {
            let (u, len) = nbrs[idx];
            stack.push((v, parent, idx + 1, up_len));
            if u != parent && visited.insert(u) {
                walk.push((u, len));
                stack.push((u, v, 0, len));
            }
        } else if v != start {
            walk.push((parent, up_len));
        }
    }
    walk
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanRound {
    pub round: u32,
    /// Implied-error threshold of this round.
    pub threshold: u64,
    /// Fresh candidates whose implied error first drops below the threshold.
    pub candidates: Vec<Vertex>,
    pub executed: bool,
    /// Round anchor: the chosen candidate, or carried over when idle.
    pub anchor: Vertex,
    pub steiner_vertex_count: usize,
    pub steiner_total_length: u64,
    pub transition_cost: u64,
    pub tour_cost: u64,
    /// Ledger move-index range of the tour, for replay audits.
    pub tour_start_move: usize,
    pub tour_end_move: usize,
    pub goal_found: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanReport {
    pub mode: ErrorMode,
    pub rounds: Vec<PlanRound>,
    pub total_cost: u64,
    pub ledger: CostLedger,
}

impl PlanReport {
    pub fn executed_rounds(&self) -> impl Iterator<Item = &PlanRound> {
        self.rounds.iter().filter(|r| r.executed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// The walk of one round's tour, as the sequence of vertices stepped on.
    pub fn tour_of(&self, round: &PlanRound) -> Vec<Vertex> {
        self.ledger.moves[round.tour_start_move..round.tour_end_move]
            .iter()
            .map(|m| m.to)
            .collect()
    }

    /// Plan summary: one record per round with the candidate count, tree
    /// length, tour walk, and transition cost.
    pub fn export_json(&self) -> String {
        #[derive(Serialize)]
        struct RoundExport {
            round: u32,
            threshold: u64,
            candidate_count: usize,
            steiner_length: u64,
            tour: Vec<Vertex>,
            transition_cost: u64,
        }
        #[derive(Serialize)]
        struct PlanExport {
            mode: ErrorMode,
            total_cost: u64,
            rounds: Vec<RoundExport>,
        }
        let export = PlanExport {
            mode: self.mode,
            total_cost: self.total_cost,
            rounds: self
                .rounds
                .iter()
                .map(|r| RoundExport {
                    round: r.round,
                    threshold: r.threshold,
                    candidate_count: r.candidates.len(),
                    steiner_length: r.steiner_total_length,
                    tour: self.tour_of(r),
                    transition_cost: r.transition_cost,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&export).expect("export serialization cannot fail")
    }
}

struct WalkSim<'a> {
    inst: &'a Instance,
    position: Vertex,
    ledger: CostLedger,
    touched: Vec<bool>,
    goal_found: bool,
}

impl<'a> WalkSim<'a> {
    fn new(inst: &'a Instance) -> Self {
        let mut touched = vec![false; inst.graph().n()];
        let root = inst.graph().root();
        touched[root] = true;
        let goal_found = root == inst.goal();
        WalkSim {
            inst,
            position: root,
            ledger: CostLedger {
                moves: Vec::new(),
                total: 0,
                goal_found_at: if goal_found { Some(0) } else { None },
            },
            touched,
            goal_found,
        }
    }

    fn touched_count(&self) -> usize {
        self.touched.iter().filter(|&&t| t).count()
    }

    fn step_edge(&mut self, to: Vertex, len: u64) {
        debug_assert!(!self.goal_found);
        let from = self.position;
        self.touched[to] = true;
        self.position = to;
        self.ledger.total += len;
        let t = self.ledger.moves.len() + 1;
        let goal = to == self.inst.goal();
        self.ledger.moves.push(MoveRecord {
            t,
            from,
            to,
            step_cost: len,
            cumulative_cost: self.ledger.total,
            visited_count: self.touched_count(),
            goal_found: goal,
        });
        if goal {
            self.goal_found = true;
            self.ledger.goal_found_at = Some(t);
        }
    }

    /// Walk a shortest path to `target`, aborting at the goal. Returns the
    /// cost incurred.
    fn walk_to(&mut self, target: Vertex) -> u64 {
        let before = self.ledger.total;
        if self.position == target || self.goal_found {
            return 0;
        }
        let path = shortest_path(self.inst.graph(), self.position, target);
        for w in path.windows(2) {
            let len = self
                .inst
                .graph()
                .neighbors(w[0])
                .iter()
                .find(|&&(x, _)| x == w[1])
                .expect("path follows edges")
                .1;
            self.step_edge(w[1], len);
            if self.goal_found {
                break;
            }
        }
        self.ledger.total - before
    }

    /// Follow a precomputed edge walk, aborting at the goal.
    fn walk_sequence(&mut self, walk: &[(Vertex, u64)]) -> u64 {
        let before = self.ledger.total;
        for &(to, len) in walk {
            if self.goal_found {
                break;
            }
            self.step_edge(to, len);
        }
        self.ledger.total - before
    }
}

/// Round index in which a vertex with the given implied error is searched.
fn bucket(phi: u64) -> u32 {
    if phi == 0 {
        0
    } else {
        64 - phi.leading_zeros()
    }
}

/// Search the whole graph in increasing implied-error order.
///
/// Round `r` gathers the vertices whose implied error first drops below
/// `2^r`, walks to the nearest of them, and tours a Steiner tree over the
/// set, stopping the moment the goal is stepped on.
pub fn run_fullinfo(inst: &Instance, mode: ErrorMode) -> Result<PlanReport, PlannerError> {
    if mode == ErrorMode::L0 && !inst.graph().unit_lengths() {
        return Err(PlannerError::NotUnitLength);
    }
    let phi = implied_error(inst, mode);
    let max_round = phi.iter().map(|&p| bucket(p)).max().unwrap_or(0);
    let mut sim = WalkSim::new(inst);
    let mut rounds = Vec::new();
    let mut anchor = inst.graph().root();

    for rho in 0..=max_round {
        if sim.goal_found {
            break;
        }
        let threshold = 1u64.checked_shl(rho).unwrap_or(u64::MAX);
        let candidates: Vec<Vertex> = (0..inst.graph().n())
            .filter(|&v| bucket(phi[v]) == rho)
            .collect();
        if candidates.is_empty() {
            rounds.push(PlanRound {
                round: rho,
                threshold,
                candidates,
                executed: false,
                anchor,
                steiner_vertex_count: 0,
                steiner_total_length: 0,
                transition_cost: 0,
                tour_cost: 0,
                tour_start_move: sim.ledger.moves.len(),
                tour_end_move: sim.ledger.moves.len(),
                goal_found: false,
            });
            continue;
        }
        // Nearest candidate, ties to the smallest id.
        let dist_here = inst.graph().distances_from(sim.position);
        let r_rho = candidates
            .iter()
            .copied()
            .min_by_key(|&v| (dist_here[v], v))
            .expect("nonempty candidates");
        let steiner = steiner_tree(inst.graph(), &candidates)?;
        let transition_cost = sim.walk_to(r_rho);
        let tour_start_move = sim.ledger.moves.len();
        let tour_cost = if sim.goal_found {
            0
        } else {
            let walk = euler_walk(&steiner, r_rho);
            sim.walk_sequence(&walk)
        };
        rounds.push(PlanRound {
            round: rho,
            threshold,
            candidates,
            executed: true,
            anchor: r_rho,
            steiner_vertex_count: steiner.vertex_count(),
            steiner_total_length: steiner.total_length(),
            transition_cost,
            tour_cost,
            tour_start_move,
            tour_end_move: sim.ledger.moves.len(),
            goal_found: sim.goal_found,
        });
        anchor = r_rho;
    }
    if !sim.goal_found {
        return Err(PlannerError::Internal("sweep ended without the goal"));
    }
    Ok(PlanReport {
        mode,
        rounds,
        total_cost: sim.ledger.total,
        ledger: sim.ledger,
    })
}
