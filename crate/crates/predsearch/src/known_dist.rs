//! Budgeted tree exploration with a claimed goal distance.
//!
//! The explorer runs a prediction-guided depth-first search. Every visited
//! vertex is charged to an *anchor* (an ancestor computed from its level and
//! prediction), and per-child load tables count how many vertices in each
//! subtree are charged to their common parent. When one subtree's load
//! dominates its cheapest active sibling, the search pauses, returns to the
//! anchor, and resumes in the sibling subtree with the smallest load; `mem`
//! pointers remember where each paused subtree should continue.

use std::collections::HashMap;

use thiserror::Error;

use crate::env::{EnvError, ExplorationEnv};
use crate::model::Vertex;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    Unlimited,
    /// Bound on the number of distinct vertices visited by this run.
    Nodes(u64),
}

impl Budget {
    fn allows(self, visited: u64) -> bool {
        match self {
            Budget::Unlimited => true,
            Budget::Nodes(b) => visited < b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    GoalFound,
    BudgetExhausted,
    /// Every observed vertex was visited without meeting the goal; only
    /// possible on goal-free replay environments.
    TreeExhausted,
}

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("observed a cycle through vertex {0}; instance is not a tree")]
    NotATree(Vertex),
    #[error("observed an edge of length {0} != 1")]
    NotUnitLength(u64),
    #[error("internal invariant violated: {0}")]
    Internal(&'static str),
}

/// Raw criticality test: the candidate subtree's load at least doubles the
/// smallest active sibling load, and at least half of the subtree's visited
/// vertices carry that load.
pub fn critical_conditions(load: usize, min_sibling_load: usize, subtree_visited: usize) -> bool {
    load >= 2 * min_sibling_load && 2 * load >= subtree_visited
}

/// Level of the anchor for a vertex at `level` with prediction `prediction`,
/// under claimed goal distance `distance`. `None` when the level would be
/// negative, fractional, or below the vertex itself.
pub fn anchor_level(distance: i64, level: u64, prediction: i64) -> Option<u64> {
    let num = distance + level as i64 - prediction;
    if num < 0 || num % 2 != 0 {
        return None;
    }
    let alpha = (num / 2) as u64;
    (alpha <= level).then_some(alpha)
}

#[derive(Debug)]
struct Node {
    parent: Option<Vertex>,
    index_in_parent: usize,
    level: u64,
    visited: bool,
    children: Vec<Vertex>,
    /// Per child index: visited vertices in that subtree anchored here.
    sigma: Vec<usize>,
    /// Per child index: visited vertices in that subtree.
    subtree_visited: Vec<usize>,
    observed_desc: usize,
    visited_desc: usize,
    mem: Option<Vertex>,
    anchor: Option<Vertex>,
}

impl Node {
    fn frontier(parent: Vertex, index_in_parent: usize, level: u64) -> Self {
        Node {
            parent: Some(parent),
            index_in_parent,
            level,
            visited: false,
            children: Vec::new(),
            sigma: Vec::new(),
            subtree_visited: Vec::new(),
            observed_desc: 1,
            visited_desc: 0,
            mem: None,
            anchor: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    /// Timestep just executed (1-based).
    pub t: usize,
    pub moved_to: Vertex,
    pub step_cost: u64,
    /// Whether the criticality callback redirected this step.
    pub callback_fired: bool,
    /// Child index of the anchor chosen by the callback.
    pub chosen_subtree: Option<usize>,
    pub goal_found: bool,
}

#[derive(Debug)]
pub enum StepEvent {
    Stepped(StepInfo),
    Finished(Outcome),
}

/// One in-progress run. `step` executes a single timestep so drivers can
/// inspect anchors, loads and mem pointers between moves.
pub struct KnownDistRun<'a> {
    env: &'a mut ExplorationEnv,
    distance: i64,
    budget: Budget,
    root: Vertex,
    nodes: HashMap<Vertex, Node>,
    local_visit_order: Vec<Vertex>,
    steps: usize,
    outcome: Option<Outcome>,
}

impl<'a> KnownDistRun<'a> {
    /// Start a run rooted at the environment's current position.
    pub fn new(
        env: &'a mut ExplorationEnv,
        distance: i64,
        budget: Budget,
    ) -> Result<Self, ExploreError> {
        let root = env.current();
        let mut run = KnownDistRun {
            env,
            distance,
            budget,
            root,
            nodes: HashMap::new(),
            local_visit_order: Vec::new(),
            steps: 0,
            outcome: None,
        };
        run.nodes.insert(
            root,
            Node {
                parent: None,
                index_in_parent: usize::MAX,
                level: 0,
                visited: false,
                children: Vec::new(),
                sigma: Vec::new(),
                subtree_visited: Vec::new(),
                observed_desc: 1,
                visited_desc: 0,
                mem: None,
                anchor: None,
            },
        );
        run.visit(root)?;
        run.node_mut(root).mem = Some(root);
        run.local_visit_order.push(root);
        if run.env.goal_found() {
            run.outcome = Some(Outcome::GoalFound);
        }
        Ok(run)
    }

    pub fn root(&self) -> Vertex {
        self.root
    }

    pub fn distance_param(&self) -> i64 {
        self.distance
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn current(&self) -> Vertex {
        self.env.current()
    }

    /// Cumulative ledger cost of the underlying environment.
    pub fn cost_so_far(&self) -> u64 {
        self.env.total_cost()
    }

    /// Vertices visited by this run, in order (the run's own count, distinct
    /// from the environment's cumulative set).
    pub fn local_visited(&self) -> &[Vertex] {
        &self.local_visit_order
    }

    /// Level of an observed vertex relative to the run root.
    pub fn level(&self, v: Vertex) -> Option<u64> {
        self.nodes.get(&v).map(|n| n.level)
    }

    pub fn is_locally_visited(&self, v: Vertex) -> bool {
        self.nodes.get(&v).map(|n| n.visited).unwrap_or(false)
    }

    /// Anchor of a visited vertex (`Some(None)` when it has no anchor).
    pub fn anchor(&self, v: Vertex) -> Option<Option<Vertex>> {
        self.nodes.get(&v).filter(|n| n.visited).map(|n| n.anchor)
    }

    pub fn mem(&self, v: Vertex) -> Option<Vertex> {
        self.nodes.get(&v).and_then(|n| n.mem)
    }

    /// Per-child anchored-load counts of a visited vertex.
    pub fn loads(&self, v: Vertex) -> Option<&[usize]> {
        self.nodes
            .get(&v)
            .filter(|n| n.visited)
            .map(|n| n.sigma.as_slice())
    }

    /// Per-child visited-vertex counts of a visited vertex.
    pub fn subtree_visited_counts(&self, v: Vertex) -> Option<&[usize]> {
        self.nodes
            .get(&v)
            .filter(|n| n.visited)
            .map(|n| n.subtree_visited.as_slice())
    }

    pub fn local_children(&self, v: Vertex) -> Option<&[Vertex]> {
        self.nodes
            .get(&v)
            .filter(|n| n.visited)
            .map(|n| n.children.as_slice())
    }

    /// A vertex is active while it has observed but unvisited descendants
    /// (itself included).
    pub fn is_active(&self, v: Vertex) -> bool {
        self.nodes
            .get(&v)
            .map(|n| n.observed_desc > n.visited_desc)
            .unwrap_or(false)
    }

    /// Active with exactly one active child among the observed children.
    pub fn is_degenerate(&self, v: Vertex) -> bool {
        if !self.is_active(v) {
            return false;
        }
        let n = &self.nodes[&v];
        n.children.iter().filter(|&&c| self.is_active(c)).count() == 1
    }

    /// Criticality of `v` with respect to child index `j`: the load of child
    /// `j` is at least twice the smallest active sibling load, and at least
    /// half of child `j`'s visited subtree is anchored at `v`.
    pub fn is_critical(&self, v: Vertex, j: usize) -> bool {
        let node = match self.nodes.get(&v) {
            Some(n) if n.visited && j < n.children.len() => n,
            _ => return false,
        };
        let qj = match self.min_load_active_child(v, Some(j)) {
            Some(q) => q,
            None => return false,
        };
        critical_conditions(node.sigma[j], node.sigma[qj], node.subtree_visited[j])
    }

    fn node_mut(&mut self, v: Vertex) -> &mut Node {
        self.nodes.get_mut(&v).expect("known vertex")
    }

    /// Smallest-load active child index, ties to the smallest index.
    fn min_load_active_child(&self, v: Vertex, exclude: Option<usize>) -> Option<usize> {
        let node = self.nodes.get(&v)?;
        let mut best: Option<(usize, usize)> = None;
        for (i, &c) in node.children.iter().enumerate() {
            if Some(i) == exclude || !self.is_active(c) {
                continue;
            }
            let key = (node.sigma[i], i);
            if best.map(|b| key < b).unwrap_or(true) {
                best = Some(key);
            }
        }
        best.map(|(_, i)| i)
    }

    fn has_unvisited_child(&self, v: Vertex) -> bool {
        self.nodes[&v]
            .children
            .iter()
            .any(|&c| !self.nodes[&c].visited)
    }

    fn closest_active_ancestor(&self, u: Vertex) -> Option<Vertex> {
        let mut x = Some(u);
        while let Some(v) = x {
            if self.is_active(v) {
                return Some(v);
            }
            x = self.nodes[&v].parent;
        }
        None
    }

    /// Child index of `anc` whose subtree contains `v` (`v` strictly below).
    fn child_index_toward(&self, anc: Vertex, v: Vertex) -> Result<usize, ExploreError> {
        let mut x = v;
        loop {
            let p = self.nodes[&x]
                .parent
                .ok_or(ExploreError::Internal("anchor is not an ancestor"))?;
            if p == anc {
                return Ok(self.nodes[&x].index_in_parent);
            }
            x = p;
        }
    }

    /// Mark `v` visited: reveal its incident edges, create frontier nodes for
    /// its children, and push counters and anchor loads up the ancestor path.
    fn visit(&mut self, v: Vertex) -> Result<(), ExploreError> {
        self.node_mut(v).visited = true;
        let level = self.nodes[&v].level;
        let parent = self.nodes[&v].parent;
        let mut children = Vec::new();
        for &(nbr, len) in self.env.neighbors(v)? {
            if len != 1 {
                return Err(ExploreError::NotUnitLength(len));
            }
            if Some(nbr) == parent {
                continue;
            }
            if self.nodes.contains_key(&nbr) {
                // A second route to an already observed vertex.
                return Err(ExploreError::NotATree(nbr));
            }
            let idx = children.len();
            self.nodes.insert(nbr, Node::frontier(v, idx, level + 1));
            children.push(nbr);
        }
        let new_children = children.len();
        {
            let node = self.node_mut(v);
            node.sigma = vec![0; new_children];
            node.subtree_visited = vec![0; new_children];
            node.children = children;
        }

        // One walk to the root updates observed/visited counters and the
        // per-child visited counts of every proper ancestor.
        let mut prev: Option<Vertex> = None;
        let mut x = Some(v);
        while let Some(y) = x {
            if let Some(p) = prev {
                let idx = self.nodes[&p].index_in_parent;
                self.node_mut(y).subtree_visited[idx] += 1;
            }
            let node = self.node_mut(y);
            node.visited_desc += 1;
            node.observed_desc += new_children;
            prev = Some(y);
            x = self.nodes[&y].parent;
        }

        // Anchor of the new vertex; charge its load to the anchor's subtree.
        let prediction = self.env.prediction(v)?;
        if let Some(alpha) = anchor_level(self.distance, level, prediction) {
            let mut hops = level - alpha;
            let mut x = v;
            let mut idx_toward = None;
            while hops > 0 {
                idx_toward = Some(self.nodes[&x].index_in_parent);
                x = self.nodes[&x]
                    .parent
                    .ok_or(ExploreError::Internal("anchor level above root"))?;
                hops -= 1;
            }
            self.node_mut(v).anchor = Some(x);
            if x != v {
                let j = idx_toward.expect("positive hop count");
                self.node_mut(x).sigma[j] += 1;
            }
        }
        Ok(())
    }

    fn pick_next(&mut self) -> Result<Option<(Vertex, bool, Option<usize>)>, ExploreError> {
        let vt = self.env.current();
        let mut next: Option<Vertex> = None;
        let mut fired = false;
        let mut chosen = None;
        let mut u = vt;

        if let Some(a) = self.nodes[&vt].anchor {
            if a != vt {
                let j = self.child_index_toward(a, vt)?;
                if self.is_active(a) && !self.is_degenerate(a) && self.is_critical(a, j) {
                    fired = true;
                    let q = self
                        .min_load_active_child(a, None)
                        .ok_or(ExploreError::Internal(
                            "critical vertex has no active child",
                        ))?;
                    chosen = Some(q);
                    let cq = self.nodes[&a].children[q];
                    match self.nodes[&cq].mem {
                        None => next = Some(cq),
                        Some(m) => u = m,
                    }
                }
            }
        }

        while next.is_none() && !self.has_unvisited_child(u) {
            let w = match self.closest_active_ancestor(u) {
                Some(w) => w,
                None => return Ok(None), // nothing observed remains unvisited
            };
            let q = self
                .min_load_active_child(w, None)
                .ok_or(ExploreError::Internal("active vertex has no active child"))?;
            let cq = self.nodes[&w].children[q];
            match self.nodes[&cq].mem {
                None => next = Some(cq),
                Some(m) => u = m,
            }
        }

        let target = match next {
            Some(x) => x,
            None => {
                // Resume the depth-first search below u: unvisited child with
                // the smallest prediction, ties to the smallest child index.
                let mut best: Option<(i64, usize, Vertex)> = None;
                let children = self.nodes[&u].children.clone();
                for (i, c) in children.into_iter().enumerate() {
                    if self.nodes[&c].visited {
                        continue;
                    }
                    let f = self.env.prediction(c)?;
                    if best.map(|b| (f, i) < (b.0, b.1)).unwrap_or(true) {
                        best = Some((f, i, c));
                    }
                }
                best.ok_or(ExploreError::Internal("no unvisited child to descend"))?
                    .2
            }
        };
        Ok(Some((target, fired, chosen)))
    }

    /// Execute one timestep.
    pub fn step(&mut self) -> Result<StepEvent, ExploreError> {
        if let Some(outcome) = self.outcome {
            return Ok(StepEvent::Finished(outcome));
        }
        if !self.budget.allows(self.local_visit_order.len() as u64) {
            self.outcome = Some(Outcome::BudgetExhausted);
            return Ok(StepEvent::Finished(Outcome::BudgetExhausted));
        }
        let (target, fired, chosen) = match self.pick_next()? {
            Some(choice) => choice,
            None => {
                self.outcome = Some(Outcome::TreeExhausted);
                return Ok(StepEvent::Finished(Outcome::TreeExhausted));
            }
        };
        let moved = self.env.move_to(target)?;
        self.visit(target)?;
        self.local_visit_order.push(target);
        self.steps += 1;

        // mem of every ancestor of the new vertex (itself included) points here.
        let mut x = Some(target);
        while let Some(y) = x {
            self.node_mut(y).mem = Some(target);
            x = self.nodes[&y].parent;
        }

        if moved.goal_found {
            self.outcome = Some(Outcome::GoalFound);
        }
        Ok(StepEvent::Stepped(StepInfo {
            t: self.steps,
            moved_to: target,
            step_cost: moved.step_cost,
            callback_fired: fired,
            chosen_subtree: chosen,
            goal_found: moved.goal_found,
        }))
    }

    pub fn run(&mut self) -> Result<Outcome, ExploreError> {
        loop {
            if let StepEvent::Finished(outcome) = self.step()? {
                return Ok(outcome);
            }
        }
    }
}

/// Run the explorer until the goal is found or the node budget is exhausted.
pub fn run_known_dist(
    env: &mut ExplorationEnv,
    distance: i64,
    budget: Budget,
) -> Result<Outcome, ExploreError> {
    KnownDistRun::new(env, distance, budget)?.run()
}
