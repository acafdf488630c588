//! Shared vocabulary: graphs with positive integer edge lengths, rooted tree
//! views, goal-distance predictions and their error sets.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense vertex id in `0..n`.
pub type Vertex = usize;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("graph must have at least one vertex")]
    Empty,
    #[error("vertex {0} out of range")]
    VertexOutOfRange(Vertex),
    #[error("edge ({0}, {1}) is a self-loop or a duplicate")]
    BadEdge(Vertex, Vertex),
    #[error("edge ({0}, {1}) has length 0; lengths must be >= 1")]
    ZeroLengthEdge(Vertex, Vertex),
    #[error("graph is not connected")]
    NotConnected,
    #[error("graph is not a tree")]
    NotATree,
    #[error("prediction table has {got} entries, expected {expected}")]
    PredictionSize { got: usize, expected: usize },
    #[error("invalid instance json: {0}")]
    BadJson(String),
}

/// Undirected graph with positive integer edge lengths and a designated root.
///
/// Immutable after construction. Adjacency lists keep the order in which edges
/// were supplied; generators and canonical instance files list edges so that
/// every adjacency list is sorted by neighbor id, which fixes the prescribed
/// child order used by the explorers.
#[derive(Debug)]
pub struct Graph {
    adj: Vec<Vec<(Vertex, u64)>>,
    root: Vertex,
    edge_count: usize,
    max_degree: usize,
    unit_lengths: bool,
    dist_cache: Mutex<HashMap<Vertex, Arc<Vec<u64>>>>,
}

impl Clone for Graph {
    fn clone(&self) -> Self {
        Graph {
            adj: self.adj.clone(),
            root: self.root,
            edge_count: self.edge_count,
            max_degree: self.max_degree,
            unit_lengths: self.unit_lengths,
            dist_cache: Mutex::new(HashMap::new()),
        }
    }
}

impl Graph {
    pub fn new(
        n: usize,
        edges: &[(Vertex, Vertex, u64)],
        root: Vertex,
    ) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::Empty);
        }
        if root >= n {
            return Err(ModelError::VertexOutOfRange(root));
        }
        let mut adj: Vec<Vec<(Vertex, u64)>> = vec![Vec::new(); n];
        let mut seen = std::collections::HashSet::new();
        for &(u, v, len) in edges {
            if u >= n {
                return Err(ModelError::VertexOutOfRange(u));
            }
            if v >= n {
                return Err(ModelError::VertexOutOfRange(v));
            }
            if u == v || !seen.insert((u.min(v), u.max(v))) {
                return Err(ModelError::BadEdge(u, v));
            }
            if len == 0 {
                return Err(ModelError::ZeroLengthEdge(u, v));
            }
            adj[u].push((v, len));
            adj[v].push((u, len));
        }
        let unit_lengths = edges.iter().all(|&(_, _, len)| len == 1);
        let max_degree = adj.iter().map(Vec::len).max().unwrap_or(0);
        let g = Graph {
            adj,
            root,
            edge_count: edges.len(),
            max_degree,
            unit_lengths,
            dist_cache: Mutex::new(HashMap::new()),
        };
        if g.distances_from(root).contains(&u64::MAX) {
            return Err(ModelError::NotConnected);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn root(&self) -> Vertex {
        self.root
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Maximum adjacency size over all vertices.
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn unit_lengths(&self) -> bool {
        self.unit_lengths
    }

    pub fn is_tree(&self) -> bool {
        self.edge_count == self.n() - 1
    }

    pub fn neighbors(&self, v: Vertex) -> &[(Vertex, u64)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adj[v].len()
    }

    /// Exact shortest-path distances from `source` to every vertex.
    ///
    /// BFS on unit-length graphs, Dijkstra otherwise; results are cached per
    /// source. Unreachable vertices (impossible on validated graphs) keep
    /// `u64::MAX`.
    pub fn distances_from(&self, source: Vertex) -> Arc<Vec<u64>> {
        if let Some(hit) = self.dist_cache.lock().unwrap().get(&source) {
            return Arc::clone(hit);
        }
        let dist = if self.unit_lengths {
            self.bfs(source)
        } else {
            self.dijkstra(source)
        };
        let dist = Arc::new(dist);
        self.dist_cache
            .lock()
            .unwrap()
            .insert(source, Arc::clone(&dist));
        dist
    }

    pub fn distance(&self, u: Vertex, v: Vertex) -> u64 {
        self.distances_from(u)[v]
    }

    fn bfs(&self, source: Vertex) -> Vec<u64> {
        let mut dist = vec![u64::MAX; self.n()];
        let mut queue = std::collections::VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adj[u] {
                if dist[v] == u64::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    fn dijkstra(&self, source: Vertex) -> Vec<u64> {
        use std::cmp::Reverse;
        let mut dist = vec![u64::MAX; self.n()];
        let mut heap = std::collections::BinaryHeap::new();
        dist[source] = 0;
        heap.push(Reverse((0u64, source)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, len) in &self.adj[u] {
                let nd = d + len;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        dist
    }
}

/// A problem instance: graph, hidden goal, and one integer prediction per
/// vertex claiming that vertex's distance to the goal.
#[derive(Debug, Clone)]
pub struct Instance {
    graph: Graph,
    goal: Vertex,
    predictions: Vec<i64>,
}

impl Instance {
    pub fn new(graph: Graph, goal: Vertex, predictions: Vec<i64>) -> Result<Self, ModelError> {
        if goal >= graph.n() {
            return Err(ModelError::VertexOutOfRange(goal));
        }
        if predictions.len() != graph.n() {
            return Err(ModelError::PredictionSize {
                got: predictions.len(),
                expected: graph.n(),
            });
        }
        Ok(Instance {
            graph,
            goal,
            predictions,
        })
    }

    /// Instance with exact predictions `f(v) = d(v, goal)`.
    pub fn perfect(graph: Graph, goal: Vertex) -> Result<Self, ModelError> {
        if goal >= graph.n() {
            return Err(ModelError::VertexOutOfRange(goal));
        }
        let dist = graph.distances_from(goal);
        let predictions = dist.iter().map(|&d| d as i64).collect();
        Ok(Instance {
            graph,
            goal,
            predictions,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn goal(&self) -> Vertex {
        self.goal
    }

    pub fn prediction(&self, v: Vertex) -> i64 {
        self.predictions[v]
    }

    pub fn predictions(&self) -> &[i64] {
        &self.predictions
    }

    pub fn with_predictions(&self, predictions: Vec<i64>) -> Result<Self, ModelError> {
        Instance::new(self.graph.clone(), self.goal, predictions)
    }

    /// d(root, goal), the cost of the optimal walk in hindsight.
    pub fn opt_distance(&self) -> u64 {
        self.graph.distance(self.graph.root(), self.goal)
    }

    /// Vertices whose prediction differs from their true goal distance,
    /// in ascending id order.
    pub fn erroneous_set(&self) -> Vec<Vertex> {
        let dist = self.graph.distances_from(self.goal);
        (0..self.graph.n())
            .filter(|&v| self.predictions[v] != dist[v] as i64)
            .collect()
    }

    pub fn error_count(&self) -> usize {
        self.erroneous_set().len()
    }

    /// Total absolute prediction deviation.
    pub fn l1_error(&self) -> u64 {
        let dist = self.graph.distances_from(self.goal);
        (0..self.graph.n())
            .map(|v| self.predictions[v].abs_diff(dist[v] as i64))
            .sum()
    }

    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            n: self.graph.n(),
            edges: edge_list(&self.graph),
            root: self.graph.root(),
            goal: self.goal,
            predictions: self.predictions.clone(),
        };
        serde_json::to_string_pretty(&file).expect("instance serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| ModelError::BadJson(e.to_string()))?;
        let graph = Graph::new(file.n, &file.edges, file.root)?;
        Instance::new(graph, file.goal, file.predictions)
    }
}

/// On-disk instance format.
#[derive(Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    edges: Vec<(Vertex, Vertex, u64)>,
    root: Vertex,
    goal: Vertex,
    predictions: Vec<i64>,
}

/// Each undirected edge once, as (min endpoint, max endpoint, length),
/// sorted for a canonical file.
pub fn edge_list(graph: &Graph) -> Vec<(Vertex, Vertex, u64)> {
    let mut edges = Vec::with_capacity(graph.edge_count());
    for u in 0..graph.n() {
        for &(v, len) in graph.neighbors(u) {
            if u < v {
                edges.push((u, v, len));
            }
        }
    }
    edges.sort_unstable();
    edges
}

/// Round fractional predictions to integers, ties toward positive infinity
/// (3.5 rounds to 4, -2.5 rounds to -2).
pub fn round_predictions(raw: &[f64]) -> Vec<i64> {
    raw.iter().map(|&x| (x + 0.5).floor() as i64).collect()
}

/// Rooted orientation of a tree around an arbitrary center vertex.
///
/// Levels are distances from the center (edge-count depth coincides with the
/// level on unit-length trees). Child order follows the adjacency lists.
#[derive(Debug, Clone)]
pub struct TreeView {
    root: Vertex,
    parent: Vec<Option<Vertex>>,
    children: Vec<Vec<Vertex>>,
    level: Vec<u64>,
    depth: Vec<u32>,
    tin: Vec<u32>,
    tout: Vec<u32>,
}

impl TreeView {
    pub fn new(graph: &Graph, center: Vertex) -> Result<Self, ModelError> {
        if !graph.is_tree() {
            return Err(ModelError::NotATree);
        }
        if center >= graph.n() {
            return Err(ModelError::VertexOutOfRange(center));
        }
        let n = graph.n();
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        let mut level = vec![0u64; n];
        let mut depth = vec![0u32; n];
        // Iterative DFS in adjacency order so deep paths do not overflow the stack.
        let mut tin = vec![0u32; n];
        let mut tout = vec![0u32; n];
        let mut clock = 0u32;
        let mut stack: Vec<(Vertex, usize)> = vec![(center, 0)];
        tin[center] = clock;
        clock += 1;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            let nbrs = graph.neighbors(v);
            if *next < nbrs.len() {
                let (u, len) = nbrs[*next];
                *next += 1;
                if tin[u] != 0 || u == center {
                    continue; // already placed; on a tree this is exactly the parent
                }
                parent[u] = Some(v);
                children[v].push(u);
                level[u] = level[v] + len;
                depth[u] = depth[v] + 1;
                tin[u] = clock;
                clock += 1;
                stack.push((u, 0));
            } else {
                tout[v] = clock;
                clock += 1;
                stack.pop();
            }
        }
        Ok(TreeView {
            root: center,
            parent,
            children,
            level,
            depth,
            tin,
            tout,
        })
    }

    pub fn root(&self) -> Vertex {
        self.root
    }

    pub fn parent(&self, v: Vertex) -> Option<Vertex> {
        self.parent[v]
    }

    pub fn children(&self, v: Vertex) -> &[Vertex] {
        &self.children[v]
    }

    /// Distance from the view's center.
    pub fn level(&self, v: Vertex) -> u64 {
        self.level[v]
    }

    /// Edge-count depth from the view's center.
    pub fn depth(&self, v: Vertex) -> u32 {
        self.depth[v]
    }

    /// Every vertex is an ancestor of itself.
    pub fn is_ancestor(&self, a: Vertex, v: Vertex) -> bool {
        self.tin[a] <= self.tin[v] && self.tout[v] <= self.tout[a]
    }

    pub fn lca(&self, mut u: Vertex, mut v: Vertex) -> Vertex {
        while self.depth[u] > self.depth[v] {
            u = self.parent[u].expect("non-root has a parent");
        }
        while self.depth[v] > self.depth[u] {
            v = self.parent[v].expect("non-root has a parent");
        }
        while u != v {
            u = self.parent[u].expect("non-root has a parent");
            v = self.parent[v].expect("non-root has a parent");
        }
        u
    }

    pub fn dist(&self, u: Vertex, v: Vertex) -> u64 {
        let w = self.lca(u, v);
        self.level[u] + self.level[v] - 2 * self.level[w]
    }

    /// Vertices on the path from `u` to `v`, endpoints included.
    pub fn path(&self, u: Vertex, v: Vertex) -> Vec<Vertex> {
        let w = self.lca(u, v);
        let mut up = Vec::new();
        let mut x = u;
        while x != w {
            up.push(x);
            x = self.parent[x].expect("non-root has a parent");
        }
        up.push(w);
        let mut down = Vec::new();
        let mut y = v;
        while y != w {
            down.push(y);
            y = self.parent[y].expect("non-root has a parent");
        }
        up.extend(down.into_iter().rev());
        up
    }
}
