//! Deterministic, seeded instance generators.
//!
//! All randomness flows through SplitMix64 so the same parameters and seed
//! produce byte-identical instances on every platform. Where a generator
//! needs several independent streams it splits the generator per purpose.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::ExplorationEnv;
use crate::model::{Graph, Instance, ModelError, TreeView, Vertex};

/// SplitMix64: 64-bit state, one addition and two xor-shift-multiply mixes
/// per draw. `below` reduces by modulo, which is part of the documented
/// output contract.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform-ish draw in `0..n` (modulo reduction), `n > 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    /// Inclusive range draw.
    pub fn range_i64(&mut self, lo: i64, hi: i64) -> i64 {
        debug_assert!(lo <= hi);
        let span = (hi - lo) as u64 + 1;
        lo + self.below(span) as i64
    }

    /// Child generator seeded from this stream.
    pub fn split(&mut self) -> SplitMix64 {
        SplitMix64::new(self.next_u64())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GoalPlacement {
    /// Fixed vertex id (for spiders: fixed arm index).
    Fixed(Vertex),
    Random,
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("no tree with {n} vertices and maximum degree {max_degree} exists")]
    InfeasibleDegree { n: usize, max_degree: usize },
    #[error("no wrong value for vertex {vertex} in range [{lo}, {hi}]")]
    RangeTooNarrow { vertex: Vertex, lo: i64, hi: i64 },
    #[error("depth {0} too large for this generator")]
    DepthTooLarge(u32),
    #[error("bad generator parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Random tree with maximum degree at most `max_degree`, perfect predictions.
///
/// Vertices join one at a time and attach to a uniformly random vertex that
/// still has spare degree, so edges always go from a lower to a higher id and
/// child order is ascending id.
pub fn gen_random_tree(
    n: usize,
    max_degree: usize,
    seed: u64,
    goal: GoalPlacement,
) -> Result<Instance, GenError> {
    if n == 0 {
        return Err(GenError::BadParams("n must be at least 1".into()));
    }
    if max_degree < 2 && n > 1 {
        return Err(GenError::InfeasibleDegree { n, max_degree });
    }
    let mut rng = SplitMix64::new(seed);
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut degree = vec![0usize; n];
    let mut open: Vec<Vertex> = vec![0];
    for v in 1..n {
        let pick = rng.below(open.len() as u64) as usize;
        let p = open[pick];
        edges.push((p, v, 1u64));
        degree[p] += 1;
        degree[v] += 1;
        if degree[p] == max_degree {
            open.swap_remove(pick);
        }
        if degree[v] < max_degree {
            open.push(v);
        }
    }
    let graph = Graph::new(n, &edges, 0)?;
    let g = match goal {
        GoalPlacement::Fixed(v) => {
            if v >= n {
                return Err(GenError::BadParams(format!("goal {v} out of range")));
            }
            v
        }
        GoalPlacement::Random => rng.below(n as u64) as usize,
    };
    Ok(Instance::perfect(graph, g)?)
}

/// Lopsided tree: the root's first child heads a heap-shaped complete binary
/// tree on `2^depth` vertices, the second heads a path of length `depth`
/// ending at the goal. Null predictions `f(v) = depth + level(v)`, so exactly
/// the positive-depth path vertices are erroneous.
pub fn gen_lopsided(depth: u32) -> Result<Instance, GenError> {
    if depth == 0 {
        return Err(GenError::BadParams("depth must be at least 1".into()));
    }
    if depth > 25 {
        return Err(GenError::DepthTooLarge(depth));
    }
    let heap = 1usize << depth;
    let n = 1 + heap + depth as usize;
    let mut edges = Vec::with_capacity(n - 1);
    // Heap side: ids 1..=heap, parent of heap-id i>1 is i/2; id 1 hangs off the root.
    edges.push((0, 1, 1u64));
    for i in 2..=heap {
        edges.push((i / 2, i, 1));
    }
    // Path side: ids heap+1..=heap+depth, goal at the end.
    edges.push((0, heap + 1, 1));
    for j in 2..=depth as usize {
        edges.push((heap + j - 1, heap + j, 1));
    }
    edges.sort_unstable();
    let graph = Graph::new(n, &edges, 0)?;
    let goal = heap + depth as usize;
    let view = TreeView::new(&graph, 0)?;
    let preds = (0..n)
        .map(|v| depth as i64 + view.level(v) as i64)
        .collect();
    Ok(Instance::new(graph, goal, preds)?)
}

/// Spider: `arms` disjoint paths of length `depth` leaving the root, null
/// predictions, goal at one leaf. For `GoalPlacement::Fixed(i)` the value is
/// the arm index.
pub fn gen_spider(
    arms: usize,
    depth: u64,
    goal: GoalPlacement,
    seed: u64,
) -> Result<Instance, GenError> {
    if arms < 2 || depth < 1 {
        return Err(GenError::BadParams(
            "spider needs at least 2 arms of depth at least 1".into(),
        ));
    }
    let arm = match goal {
        GoalPlacement::Fixed(i) => {
            if i >= arms {
                return Err(GenError::BadParams(format!("goal arm {i} out of range")));
            }
            i
        }
        GoalPlacement::Random => SplitMix64::new(seed).below(arms as u64) as usize,
    };
    Ok(spider_with_goal_arm(arms, depth, arm)?)
}

fn spider_vertex(arm: usize, depth_one_based: u64, arm_len: u64) -> Vertex {
    1 + arm * arm_len as usize + (depth_one_based as usize - 1)
}

fn spider_with_goal_arm(arms: usize, depth: u64, arm: usize) -> Result<Instance, ModelError> {
    let n = 1 + arms * depth as usize;
    let mut edges = Vec::with_capacity(n - 1);
    for a in 0..arms {
        edges.push((0, spider_vertex(a, 1, depth), 1u64));
        for j in 2..=depth {
            edges.push((
                spider_vertex(a, j - 1, depth),
                spider_vertex(a, j, depth),
                1,
            ));
        }
    }
    edges.sort_unstable();
    let graph = Graph::new(n, &edges, 0)?;
    let goal = spider_vertex(arm, depth, depth);
    let view = TreeView::new(&graph, 0)?;
    let preds = (0..n)
        .map(|v| depth as i64 + view.level(v) as i64)
        .collect();
    Instance::new(graph, goal, preds)
}

/// Adversarial goal placement against a deterministic explorer: replay it on
/// a goal-free spider (null predictions carry no goal information, so the
/// replay observes exactly what the real run would), then place the goal at
/// the last leaf it visited, or at the smallest unvisited leaf if it never
/// finished the leaves.
pub fn adversarial_spider<F>(arms: usize, depth: u64, explore: F) -> Result<Instance, GenError>
where
    F: FnOnce(&mut ExplorationEnv),
{
    let probe = spider_with_goal_arm(arms, depth, 0)?;
    let mut env = ExplorationEnv::goal_free(probe);
    explore(&mut env);
    let leaves: Vec<Vertex> = (0..arms).map(|a| spider_vertex(a, depth, depth)).collect();
    let mut last: Option<Vertex> = None;
    let mut last_pos = 0;
    for &leaf in &leaves {
        match env.visit_order().iter().position(|&v| v == leaf) {
            Some(pos) => {
                if last.is_none() || pos > last_pos {
                    last = Some(leaf);
                    last_pos = pos;
                }
            }
            None => {
                // An unvisited leaf beats any visited one.
                let arm = (leaf - 1) / depth as usize;
                return Ok(spider_with_goal_arm(arms, depth, arm)?);
            }
        }
    }
    let goal = last.expect("spider has at least two leaves");
    let arm = (goal - 1) / depth as usize;
    Ok(spider_with_goal_arm(arms, depth, arm)?)
}

/// Replace the predictions of exactly `k` vertices (chosen without
/// replacement; the goal only when `allow_goal`) with wrong integers drawn
/// from `[lo, hi]`. Starts from perfect predictions, so the erroneous set has
/// size exactly `k`.
pub fn corrupt_predictions(
    inst: &Instance,
    k: usize,
    lo: i64,
    hi: i64,
    allow_goal: bool,
    seed: u64,
) -> Result<Instance, GenError> {
    if lo > hi {
        return Err(GenError::BadParams(format!("empty range [{lo}, {hi}]")));
    }
    let n = inst.graph().n();
    let dist = inst.graph().distances_from(inst.goal());
    let mut pool: Vec<Vertex> = (0..n).filter(|&v| allow_goal || v != inst.goal()).collect();
    if k > pool.len() {
        return Err(GenError::BadParams(format!(
            "cannot corrupt {k} of {} eligible vertices",
            pool.len()
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut preds: Vec<i64> = dist.iter().map(|&d| d as i64).collect();
    for i in 0..k {
        let j = i + rng.below((pool.len() - i) as u64) as usize;
        pool.swap(i, j);
        let v = pool[i];
        let truth = dist[v] as i64;
        if lo == hi && lo == truth {
            return Err(GenError::RangeTooNarrow { vertex: v, lo, hi });
        }
        loop {
            let val = rng.range_i64(lo, hi);
            if val != truth {
                preds[v] = val;
                break;
            }
        }
    }
    Ok(inst.with_predictions(preds)?)
}

/// Weighted counterexample family: a perfect binary tree of the given height
/// with unit internal edges and length-`leaf_len` edges to the leaves. Every
/// internal vertex predicts `leaf_len`, every leaf predicts `2 * leaf_len`,
/// and the goal sits at the smallest-id leaf, whose own prediction is off by
/// exactly `2 * leaf_len`. Demonstration only: finding the goal costs on the
/// order of `2^height * leaf_len` while the deviations stay polynomial in
/// `height` plus `leaf_len`, which is why the explorers in this crate stay on
/// unit-length trees.
pub fn gen_weighted_hardness(height: u32, leaf_len: u64) -> Result<Instance, GenError> {
    if height == 0 || leaf_len == 0 {
        return Err(GenError::BadParams(
            "height and leaf length must be at least 1".into(),
        ));
    }
    if height > 25 {
        return Err(GenError::DepthTooLarge(height));
    }
    let first_leaf = 1usize << height; // heap id of the first leaf
    let heap_size = (1usize << (height + 1)) - 1;
    let mut edges = Vec::with_capacity(heap_size - 1);
    for i in 2..=heap_size {
        let len = if i >= first_leaf { leaf_len } else { 1 };
        edges.push((i / 2 - 1, i - 1, len));
    }
    let graph = Graph::new(heap_size, &edges, 0)?;
    let preds = (0..heap_size)
        .map(|v| {
            if v + 1 >= first_leaf {
                2 * leaf_len as i64
            } else {
                leaf_len as i64
            }
        })
        .collect();
    Ok(Instance::new(graph, first_leaf - 1, preds)?)
}

/// `width x height` grid, root at one corner and goal at the opposite one.
/// `lengths` draws integer edge lengths from an inclusive range (unit when
/// `None`); `k` predictions are then corrupted.
pub fn gen_grid(
    width: usize,
    height: usize,
    lengths: Option<(u64, u64)>,
    k: usize,
    seed: u64,
) -> Result<Instance, GenError> {
    if width < 2 || height < 2 {
        return Err(GenError::BadParams("grid needs width, height >= 2".into()));
    }
    if let Some((lo, hi)) = lengths {
        if lo == 0 || lo > hi {
            return Err(GenError::BadParams(format!(
                "bad length range [{lo}, {hi}]"
            )));
        }
    }
    let n = width * height;
    let mut rng = SplitMix64::new(seed);
    let mut edge_rng = rng.split();
    let corrupt_seed = rng.next_u64();
    let mut edges = Vec::new();
    let draw = |rng: &mut SplitMix64| match lengths {
        None => 1u64,
        Some((lo, hi)) => lo + rng.below(hi - lo + 1),
    };
    for r in 0..height {
        for c in 0..width {
            let v = r * width + c;
            if c + 1 < width {
                edges.push((v, v + 1, draw(&mut edge_rng)));
            }
            if r + 1 < height {
                edges.push((v, v + width, draw(&mut edge_rng)));
            }
        }
    }
    let graph = Graph::new(n, &edges, 0)?;
    let inst = Instance::perfect(graph, n - 1)?;
    if k == 0 {
        return Ok(inst);
    }
    let hi = 2 * inst.graph().distance(0, n - 1) as i64 + 1;
    corrupt_predictions(&inst, k, 0, hi, false, corrupt_seed)
}

/// Random connected graph: a free random tree plus `extra_edges` chords,
/// integer lengths in `1..=max_len`. Test substrate for metric properties.
pub fn gen_random_graph(n: usize, extra_edges: usize, max_len: u64, seed: u64) -> Graph {
    assert!(n >= 1 && max_len >= 1);
    let mut rng = SplitMix64::new(seed);
    let mut edges = Vec::new();
    let mut present = std::collections::HashSet::new();
    for v in 1..n {
        let p = rng.below(v as u64) as usize;
        edges.push((p, v, 1 + rng.below(max_len)));
        present.insert((p, v));
    }
    let mut added = 0;
    let mut attempts = 0;
    while added < extra_edges && attempts < 20 * (extra_edges + 1) && n >= 2 {
        attempts += 1;
        let u = rng.below(n as u64) as usize;
        let v = rng.below(n as u64) as usize;
        let (a, b) = (u.min(v), u.max(v));
        if a == b || present.contains(&(a, b)) {
            continue;
        }
        present.insert((a, b));
        edges.push((a, b, 1 + rng.below(max_len)));
        added += 1;
    }
    Graph::new(n, &edges, 0).expect("generated graph is connected")
}
