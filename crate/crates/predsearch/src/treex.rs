//! General tree exploration without a trusted distance: geometric rounds of
//! the budgeted explorer, with the next distance estimate recovered by a
//! majority vote around a centroid of everything visited so far.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{EnvError, ExplorationEnv};
use crate::known_dist::{Budget, ExploreError, KnownDistRun, Outcome};
use crate::model::{Graph, Vertex};

#[derive(Debug, Error)]
pub enum TreexError {
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("tree with {0} vertices is too small to split against degree bound {1}")]
    TreeTooSmall(usize, usize),
    #[error("internal invariant violated: {0}")]
    Internal(&'static str),
}

#[derive(Debug, Clone, Copy)]
pub struct TreexConfig {
    /// Trade-off parameter: larger values spend less on detours relative to
    /// the goal distance but more per erroneous vertex.
    pub beta: u64,
    /// Constant in the budget growth factor and the fallback budget.
    pub c1: u64,
}

impl Default for TreexConfig {
    fn default() -> Self {
        TreexConfig { beta: 1, c1: 86 }
    }
}

/// Centroid vote summary produced at the end of a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CentroidVotes {
    pub centroid: Vertex,
    pub side_a: Vertex,
    pub side_b: Vertex,
    pub vote_a: i64,
    pub vote_b: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    /// Geometric budget parameter of this round.
    pub budget: u64,
    /// Distance estimate used by this round (clamped to be non-negative).
    pub distance_estimate: i64,
    /// Estimate before clamping (a failed vote yields -1).
    pub raw_estimate: i64,
    /// Start vertex of this round's explorer run.
    pub root: Vertex,
    /// Distinct vertices visited by this round's run.
    pub budget_used: u64,
    pub round_cost: u64,
    pub cumulative_cost: u64,
    pub goal_found: bool,
    /// Cumulative visited-tree size when the round ended.
    pub tree_size: usize,
    pub votes: Option<CentroidVotes>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreexReport {
    pub beta: u64,
    pub c1: u64,
    pub rounds: Vec<RoundRecord>,
    pub total_cost: u64,
}

impl TreexReport {
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "round,budget,budget_used,root,distance_estimate,round_cost,cumulative_cost,goal_found"
        )?;
        for r in &self.rounds {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.round,
                r.budget,
                r.budget_used,
                r.root,
                r.distance_estimate,
                r.round_cost,
                r.cumulative_cost,
                r.goal_found
            )?;
        }
        Ok(())
    }
}

/// Undirected tree on an explicit vertex subset, used both for the cumulative
/// visited tree during a run and for whole-instance separator checks.
#[derive(Debug, Clone)]
pub struct InducedTree {
    verts: Vec<Vertex>,
    adj: HashMap<Vertex, Vec<Vertex>>,
}

impl InducedTree {
    /// Tree induced by the vertices visited so far. Uses only observed
    /// adjacency (incident edges of visited vertices).
    pub fn from_env_visited(env: &ExplorationEnv) -> Result<Self, EnvError> {
        let mut verts: Vec<Vertex> = env.visit_order().to_vec();
        verts.sort_unstable();
        let mut adj = HashMap::new();
        for &v in &verts {
            let nbrs: Vec<Vertex> = env
                .neighbors(v)?
                .iter()
                .map(|&(u, _)| u)
                .filter(|&u| env.is_visited(u))
                .collect();
            adj.insert(v, nbrs);
        }
        Ok(InducedTree { verts, adj })
    }

    pub fn from_graph(graph: &Graph) -> Self {
        let verts: Vec<Vertex> = (0..graph.n()).collect();
        let adj = verts
            .iter()
            .map(|&v| (v, graph.neighbors(v).iter().map(|&(u, _)| u).collect()))
            .collect();
        InducedTree { verts, adj }
    }

    pub fn len(&self) -> usize {
        self.verts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.verts
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        self.adj.get(&v).map(|n| n.as_slice()).unwrap_or(&[])
    }

    /// Unit-length distances from `src` within the induced tree.
    pub fn distances(&self, src: Vertex) -> HashMap<Vertex, u64> {
        let mut dist = HashMap::new();
        dist.insert(src, 0u64);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let du = dist[&u];
            for &v in self.neighbors(u) {
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(v) {
                    e.insert(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// The side of neighbor `a` after deleting `v`: all vertices whose path
    /// to `v` passes through `a`.
    pub fn component_away(&self, a: Vertex, v: Vertex) -> Vec<Vertex> {
        let mut seen = std::collections::HashSet::from([v, a]);
        let mut out = vec![a];
        let mut queue = VecDeque::from([a]);
        while let Some(u) = queue.pop_front() {
            for &w in self.neighbors(u) {
                if seen.insert(w) {
                    out.push(w);
                    queue.push_back(w);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Centroid of the induced tree together with the neighbors heading its two
/// largest components. Both components have more than `|T| / (2 * max_degree)`
/// vertices whenever `|T| > 2 * max_degree`.
pub fn centroid_split(
    tree: &InducedTree,
    max_degree: usize,
) -> Result<(Vertex, Vertex, Vertex), TreexError> {
    let n = tree.len();
    if n <= 2 * max_degree {
        return Err(TreexError::TreeTooSmall(n, max_degree));
    }
    // Subtree sizes from an iterative post-order walk rooted anywhere.
    let root = tree.vertices()[0];
    let mut parent: HashMap<Vertex, Vertex> = HashMap::new();
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![root];
    parent.insert(root, root);
    while let Some(v) = stack.pop() {
        order.push(v);
        for &u in tree.neighbors(v) {
            if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(u) {
                e.insert(v);
                stack.push(u);
            }
        }
    }
    let mut size: HashMap<Vertex, usize> = tree.vertices().iter().map(|&v| (v, 1)).collect();
    for &v in order.iter().rev() {
        let p = parent[&v];
        if p != v {
            *size.get_mut(&p).unwrap() += size[&v];
        }
    }
    // Centroid: minimize the largest component left by deleting the vertex.
    let mut best: Option<(usize, Vertex)> = None;
    for &v in tree.vertices() {
        let mut largest = n - size[&v];
        for &u in tree.neighbors(v) {
            if parent[&u] == v {
                largest = largest.max(size[&u]);
            }
        }
        if best.map(|b| (largest, v) < b).unwrap_or(true) {
            best = Some((largest, v));
        }
    }
    let centroid = best.expect("nonempty tree").1;
    // Component size of each neighbor of the centroid.
    let mut ranked: Vec<(usize, Vertex)> = tree
        .neighbors(centroid)
        .iter()
        .map(|&u| {
            let s = if parent[&u] == centroid {
                size[&u]
            } else {
                n - size[&centroid]
            };
            (s, u)
        })
        .collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    if ranked.len() < 2 {
        return Err(TreexError::Internal(
            "centroid with fewer than two neighbors",
        ));
    }
    Ok((centroid, ranked[0].1, ranked[1].1))
}

/// Strict-majority value of a vote multiset, `-1` when none exists.
pub fn dominating_vote<I: IntoIterator<Item = i64>>(votes: I) -> i64 {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    let mut total = 0usize;
    for v in votes {
        *counts.entry(v).or_insert(0) += 1;
        total += 1;
    }
    for (value, count) in counts {
        if 2 * count > total {
            return value;
        }
    }
    -1
}

fn sat_budget(c1: u64, beta: u64, round: u32, delta: u64) -> u64 {
    let base = c1.saturating_add(beta);
    let pow = base.checked_pow(round).unwrap_or(u64::MAX);
    pow.saturating_mul(2 * delta + 1)
}

/// Explore a unit-length tree with no trusted distance until the goal is
/// found. Requires the environment to be untouched (current position at the
/// root).
pub fn run_treex(env: &mut ExplorationEnv, cfg: TreexConfig) -> Result<TreexReport, TreexError> {
    let beta = cfg.beta.max(1);
    let c1 = cfg.c1.max(1);
    let delta = env.max_degree() as u64;
    let mut root_rho = env.current();
    let mut raw_rho = env.prediction(root_rho)?;
    let mut d_rho = raw_rho.max(0);
    let mut rounds: Vec<RoundRecord> = Vec::new();

    for rho in 0..=64u32 {
        if rho == 64 {
            return Err(TreexError::Internal("round budget overflow"));
        }
        let b_rho = sat_budget(c1, beta, rho, delta);
        let budget = if (b_rho as i128) * (beta as i128) < d_rho as i128 {
            b_rho
        } else {
            (d_rho as u64).saturating_add(c1.saturating_mul(b_rho))
        };
        let cost_before = env.total_cost();
        let (outcome, budget_used) = {
            let mut run = KnownDistRun::new(env, d_rho, Budget::Nodes(budget))?;
            let outcome = run.run()?;
            (outcome, run.local_visited().len() as u64)
        };
        match outcome {
            Outcome::GoalFound => {
                rounds.push(RoundRecord {
                    round: rho,
                    budget: b_rho,
                    distance_estimate: d_rho,
                    raw_estimate: raw_rho,
                    root: root_rho,
                    budget_used,
                    round_cost: env.total_cost() - cost_before,
                    cumulative_cost: env.total_cost(),
                    goal_found: true,
                    tree_size: env.visited_count(),
                    votes: None,
                });
                return Ok(TreexReport {
                    beta,
                    c1,
                    rounds,
                    total_cost: env.total_cost(),
                });
            }
            Outcome::TreeExhausted => {
                return Err(TreexError::Internal("tree exhausted without a goal"));
            }
            Outcome::BudgetExhausted => {}
        }

        let tree = InducedTree::from_env_visited(env)?;
        let (next_root, next_raw, votes) = if tree.len() > 2 * delta as usize {
            let (centroid, a, b) = centroid_split(&tree, delta as usize)?;
            let dist = tree.distances(centroid);
            let vote_for = |side: Vertex| -> Result<i64, TreexError> {
                let members = tree.component_away(side, centroid);
                let mut votes = Vec::with_capacity(members.len());
                for u in members {
                    votes.push(env.prediction(u)? - dist[&u] as i64);
                }
                Ok(dominating_vote(votes))
            };
            let vote_a = vote_for(a)?;
            let vote_b = vote_for(b)?;
            (
                centroid,
                vote_a.max(vote_b),
                Some(CentroidVotes {
                    centroid,
                    side_a: a,
                    side_b: b,
                    vote_a,
                    vote_b,
                }),
            )
        } else {
            // Too small for the separator guarantee; keep the round anchored.
            (root_rho, d_rho, None)
        };

        if env.current() != next_root {
            env.move_to(next_root)?;
        }
        rounds.push(RoundRecord {
            round: rho,
            budget: b_rho,
            distance_estimate: d_rho,
            raw_estimate: raw_rho,
            root: root_rho,
            budget_used,
            round_cost: env.total_cost() - cost_before,
            cumulative_cost: env.total_cost(),
            goal_found: false,
            tree_size: env.visited_count(),
            votes,
        });
        root_rho = next_root;
        raw_rho = next_raw;
        d_rho = next_raw.max(0);
    }
    unreachable!("loop returns or errors")
}
