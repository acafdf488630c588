//! Exploration environment: the only channel through which an explorer may
//! observe an instance.
//!
//! The environment owns the instance privately and reveals exactly what the
//! information model allows: the set of visited vertices, their incident
//! edges, the resulting frontier, and predictions on observed vertices. Every
//! move is charged its true graph distance in a ledger. Reading anything else
//! is a hard error, not a silent answer.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Instance, ModelError, TreeView, Vertex};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnvError {
    #[error("target {0} is not an observed vertex")]
    TargetNotObserved(Vertex),
    #[error("move target equals the current position {0}")]
    MoveToCurrent(Vertex),
    #[error("run already finished; ledger is frozen")]
    RunFinished,
    #[error("prediction of {0} is not observable yet")]
    PredictionNotObserved(Vertex),
    #[error("adjacency of {0} is not observable yet")]
    AdjacencyNotObserved(Vertex),
}

/// One ledger row: a single timestep's movement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub t: usize,
    pub from: Vertex,
    pub to: Vertex,
    pub step_cost: u64,
    pub cumulative_cost: u64,
    pub visited_count: usize,
    pub goal_found: bool,
}

/// Movement cost account for one run. Frozen once the goal is found.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    pub moves: Vec<MoveRecord>,
    pub total: u64,
    pub goal_found_at: Option<usize>,
}

impl CostLedger {
    /// Recompute the total from the per-move log; equals `total` by invariant.
    pub fn recompute_total(&self) -> u64 {
        self.moves.iter().map(|m| m.step_cost).sum()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "t,from,to,step_cost,cumulative_cost,visited,goal_found"
        )?;
        for m in &self.moves {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                m.t, m.from, m.to, m.step_cost, m.cumulative_cost, m.visited_count, m.goal_found
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MoveOutcome {
    pub step_cost: u64,
    pub goal_found: bool,
}

/// Simulation environment enforcing the exploration information model.
#[derive(Debug)]
pub struct ExplorationEnv {
    inst: Instance,
    tree: Option<TreeView>,
    visited: Vec<bool>,
    visit_order: Vec<Vertex>,
    frontier: BTreeSet<Vertex>,
    current: Vertex,
    ledger: CostLedger,
    goal_hidden: bool,
    finished: bool,
}

impl ExplorationEnv {
    pub fn new(inst: Instance) -> Self {
        Self::build(inst, false)
    }

    /// Environment that never reports the goal as found. Used to replay a
    /// deterministic explorer for adversarial goal placement.
    pub fn goal_free(inst: Instance) -> Self {
        Self::build(inst, true)
    }

    fn build(inst: Instance, goal_hidden: bool) -> Self {
        let n = inst.graph().n();
        let root = inst.graph().root();
        let tree = if inst.graph().is_tree() {
            Some(TreeView::new(inst.graph(), root).expect("validated tree"))
        } else {
            None
        };
        let mut visited = vec![false; n];
        visited[root] = true;
        let mut frontier = BTreeSet::new();
        for &(u, _) in inst.graph().neighbors(root) {
            frontier.insert(u);
        }
        let goal_found = !goal_hidden && root == inst.goal();
        ExplorationEnv {
            inst,
            tree,
            visited,
            visit_order: vec![root],
            frontier,
            current: root,
            ledger: CostLedger {
                moves: Vec::new(),
                total: 0,
                goal_found_at: if goal_found { Some(0) } else { None },
            },
            goal_hidden,
            finished: goal_found,
        }
    }

    /// Known problem parameters: the start vertex and the degree bound.
    pub fn root(&self) -> Vertex {
        self.inst.graph().root()
    }

    pub fn max_degree(&self) -> usize {
        self.inst.graph().max_degree()
    }

    pub fn current(&self) -> Vertex {
        self.current
    }

    pub fn goal_found(&self) -> bool {
        self.ledger.goal_found_at.is_some()
    }

    pub fn steps(&self) -> usize {
        self.ledger.moves.len()
    }

    pub fn is_visited(&self, v: Vertex) -> bool {
        v < self.visited.len() && self.visited[v]
    }

    pub fn is_observed(&self, v: Vertex) -> bool {
        self.is_visited(v) || self.frontier.contains(&v)
    }

    pub fn visited_count(&self) -> usize {
        self.visit_order.len()
    }

    /// Visited vertices in visit order.
    pub fn visit_order(&self) -> &[Vertex] {
        &self.visit_order
    }

    /// Observed but unvisited vertices, ascending.
    pub fn frontier(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.frontier.iter().copied()
    }

    pub fn prediction(&self, v: Vertex) -> Result<i64, EnvError> {
        if self.is_observed(v) {
            Ok(self.inst.prediction(v))
        } else {
            Err(EnvError::PredictionNotObserved(v))
        }
    }

    /// Incident edges of a visited vertex, in prescribed adjacency order.
    pub fn neighbors(&self, v: Vertex) -> Result<&[(Vertex, u64)], EnvError> {
        if self.is_visited(v) {
            Ok(self.inst.graph().neighbors(v))
        } else {
            Err(EnvError::AdjacencyNotObserved(v))
        }
    }

    fn metric(&self, u: Vertex, v: Vertex) -> u64 {
        match &self.tree {
            Some(t) => t.dist(u, v),
            None => self.inst.graph().distance(u, v),
        }
    }

    /// Move the agent to an observed vertex, charging the true graph distance.
    ///
    /// A fresh target is added to the visited set and its incident edges (and
    /// the predictions of newly observed neighbors) become readable.
    pub fn move_to(&mut self, target: Vertex) -> Result<MoveOutcome, EnvError> {
        if self.finished {
            return Err(EnvError::RunFinished);
        }
        if target == self.current {
            return Err(EnvError::MoveToCurrent(target));
        }
        if !self.is_observed(target) {
            return Err(EnvError::TargetNotObserved(target));
        }
        let step_cost = self.metric(self.current, target);
        let from = self.current;
        if !self.visited[target] {
            self.visited[target] = true;
            self.visit_order.push(target);
            self.frontier.remove(&target);
            for &(u, _) in self.inst.graph().neighbors(target) {
                if !self.visited[u] {
                    self.frontier.insert(u);
                }
            }
        }
        self.current = target;
        let goal_found = !self.goal_hidden && target == self.inst.goal();
        let t = self.ledger.moves.len() + 1;
        self.ledger.total += step_cost;
        self.ledger.moves.push(MoveRecord {
            t,
            from,
            to: target,
            step_cost,
            cumulative_cost: self.ledger.total,
            visited_count: self.visit_order.len(),
            goal_found,
        });
        if goal_found {
            self.ledger.goal_found_at = Some(t);
            self.finished = true;
        }
        Ok(MoveOutcome {
            step_cost,
            goal_found,
        })
    }

    pub fn ledger(&self) -> &CostLedger {
        &self.ledger
    }

    pub fn into_ledger(self) -> CostLedger {
        self.ledger
    }

    pub fn total_cost(&self) -> u64 {
        self.ledger.total
    }
}

/// Number of visited vertices lying off the root-goal path (diagnostic; needs
/// the hidden instance, so it lives oracle-side).
pub fn extra_exploration(env: &ExplorationEnv, inst: &Instance) -> Result<usize, ModelError> {
    let tree = TreeView::new(inst.graph(), inst.graph().root())?;
    let on_path: std::collections::HashSet<Vertex> = tree
        .path(inst.graph().root(), inst.goal())
        .into_iter()
        .collect();
    Ok(env
        .visit_order()
        .iter()
        .filter(|v| !on_path.contains(v))
        .count())
}
