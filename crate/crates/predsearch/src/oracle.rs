//! Brute-force ground truth: baseline explorers for comparison and one
//! checker per provable invariant. Checkers hold the full instance (which the
//! explorers never see) and either verify a recorded trace or replay the
//! deterministic algorithm step by step.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{CostLedger, EnvError, ExplorationEnv};
use crate::known_dist::{Budget, ExploreError, KnownDistRun, Outcome, StepEvent};
use crate::model::{Instance, ModelError, TreeView, Vertex};
use crate::planner::{implied_error, ErrorMode, PlanReport, PlannerError};
use crate::treex::{centroid_split, InducedTree, TreexError, TreexReport};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("unknown check name: {0}")]
    UnknownCheck(String),
    #[error("check {0} needs a {1} trace")]
    TraceKindMismatch(Check, &'static str),
    #[error("trace does not replay: {0}")]
    ReplayMismatch(String),
    #[error("check not applicable: {0}")]
    NotApplicable(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Treex(#[from] TreexError),
}

/// d(root, goal): the optimal cost in hindsight.
pub fn optimal_cost(inst: &Instance) -> u64 {
    inst.opt_distance()
}

// ---------------------------------------------------------------------------
// Baseline explorers
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    /// Prediction-blind depth-first traversal in child order.
    BlindDfs,
    /// Follow a neighbor whose prediction drops by exactly one; otherwise the
    /// smallest-prediction neighbor. Can livelock, hence the step cap.
    GreedyDownhill,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineOutcome {
    GoalFound,
    Exhausted,
    StepCapExceeded,
}

pub fn baseline_explore(
    inst: &Instance,
    strategy: Baseline,
) -> Result<(BaselineOutcome, CostLedger), OracleError> {
    let cap = 4 * (inst.graph().n() as u64).saturating_pow(2);
    let mut env = ExplorationEnv::new(inst.clone());
    let outcome = baseline_explore_env(&mut env, strategy, cap)?;
    Ok((outcome, env.into_ledger()))
}

pub fn baseline_explore_env(
    env: &mut ExplorationEnv,
    strategy: Baseline,
    step_cap: u64,
) -> Result<BaselineOutcome, OracleError> {
    match strategy {
        Baseline::BlindDfs => blind_dfs(env, step_cap),
        Baseline::GreedyDownhill => greedy_downhill(env, step_cap),
    }
}

fn blind_dfs(env: &mut ExplorationEnv, step_cap: u64) -> Result<BaselineOutcome, OracleError> {
    if env.goal_found() {
        return Ok(BaselineOutcome::GoalFound);
    }
    enum Next {
        Descend(Vertex),
        Backtrack,
        Done,
    }
    let neighbor_ids = |env: &ExplorationEnv, v: Vertex| -> Result<Vec<Vertex>, EnvError> {
        Ok(env.neighbors(v)?.iter().map(|&(u, _)| u).collect())
    };
    let root = env.current();
    let mut steps = 0u64;
    let mut stack: Vec<(Vertex, Vec<Vertex>, usize)> = vec![(root, neighbor_ids(env, root)?, 0)];
    loop {
        let next = match stack.last_mut() {
            None => Next::Done,
            Some((_, nbrs, idx)) => {
                let mut chosen = Next::Backtrack;
                while *idx < nbrs.len() {
                    let u = nbrs[*idx];
                    *idx += 1;
                    if !env.is_visited(u) {
                        chosen = Next::Descend(u);
                        break;
                    }
                }
                chosen
            }
        };
        match next {
            Next::Done => return Ok(BaselineOutcome::Exhausted),
            Next::Descend(u) => {
                steps += 1;
                if steps > step_cap {
                    return Ok(BaselineOutcome::StepCapExceeded);
                }
                if env.move_to(u)?.goal_found {
                    return Ok(BaselineOutcome::GoalFound);
                }
                let nbrs = neighbor_ids(env, u)?;
                stack.push((u, nbrs, 0));
            }
            Next::Backtrack => {
                stack.pop();
                if let Some((p, _, _)) = stack.last() {
                    let p = *p;
                    steps += 1;
                    if steps > step_cap {
                        return Ok(BaselineOutcome::StepCapExceeded);
                    }
                    env.move_to(p)?;
                }
            }
        }
    }
}

fn greedy_downhill(
    env: &mut ExplorationEnv,
    step_cap: u64,
) -> Result<BaselineOutcome, OracleError> {
    if env.goal_found() {
        return Ok(BaselineOutcome::GoalFound);
    }
    let mut steps = 0u64;
    loop {
        steps += 1;
        if steps > step_cap {
            return Ok(BaselineOutcome::StepCapExceeded);
        }
        let v = env.current();
        let f = env.prediction(v)?;
        let mut exact: Option<Vertex> = None;
        let mut smallest: Option<(i64, Vertex)> = None;
        let nbrs: Vec<Vertex> = env.neighbors(v)?.iter().map(|&(u, _)| u).collect();
        for u in nbrs {
            let fu = env.prediction(u)?;
            if fu == f - 1 && exact.map(|e| u < e).unwrap_or(true) {
                exact = Some(u);
            }
            if smallest.map(|b| (fu, u) < b).unwrap_or(true) {
                smallest = Some((fu, u));
            }
        }
        let target = exact.or_else(|| smallest.map(|b| b.1));
        let target = match target {
            Some(t) => t,
            None => return Ok(BaselineOutcome::Exhausted), // isolated root
        };
        if env.move_to(target)?.goal_found {
            return Ok(BaselineOutcome::GoalFound);
        }
    }
}

// ---------------------------------------------------------------------------
// Checks
// ---------------------------------------------------------------------------

/// Every provable invariant has a named checker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    /// Off-path visits are paid for by observed errors:
    /// extra <= 7 * delta * |erroneous and observed|. (The visited-error
    /// variant is falsifiable: a wrongly labeled frontier child can push the
    /// walk off the goal path before it is ever visited.)
    ExtraExplorationBound,
    /// Movement so far <= d(root, current) + 10 * extra + 16 * |erroneous
    /// and visited|.
    CostBound,
    /// Correctly predicted vertices anchor at their lowest common ancestor
    /// with the goal.
    AnchorLca,
    /// The walk never enters a subtree whose load exceeds the active minimum.
    NoHeavySubtreeEntry,
    /// Load trichotomy along the goal path.
    PathLoadBalance,
    /// Both returned separator components exceed n / (2 * delta).
    SeparatorSize,
    /// Rounds with budget >= 4|E|(2 delta + 1) that did not find the goal
    /// carry the exact distance estimate.
    EstimateRecovery,
    /// Round anchors stay within twice the budget radius of the start.
    AnchorDrift,
    /// Summed implied error of U covers everything in S off U's midpoint set.
    PhiMidpointBound,
    /// Unit lengths: d(u,v) <= phi(u) + phi(v).
    PhiDistanceBound,
    /// Integer lengths: 2 d(u,v) <= phi1(u) + phi1(v).
    L1DistanceBound,
    /// Trees: one candidate in round zero, then |C_rho| <= delta(2^rho + 1).
    SteinerSizeBound,
    /// Tour of a round costs at most twice its tree length.
    TourCostBound,
    /// First transition <= d(r,g) + err + threshold; later ones geometric.
    TransitionBound,
    /// A candidate of round rho is toured only after all earlier candidate
    /// sets were fully walked.
    SearchOrder,
    /// Reports the measured growth constant max length(C_rho) / 2^(2 rho).
    SteinerLengthGrowth,
    /// Net balls of a candidate set hold at most 2^(rho+1) points.
    NetBallBound,
    /// Weighted net balls: |B(c)| * R <= 4 (phi1(w) + phi1(c)).
    L1NetBallBound,
}

impl Check {
    pub const ALL: [Check; 18] = [
        Check::ExtraExplorationBound,
        Check::CostBound,
        Check::AnchorLca,
        Check::NoHeavySubtreeEntry,
        Check::PathLoadBalance,
        Check::SeparatorSize,
        Check::EstimateRecovery,
        Check::AnchorDrift,
        Check::PhiMidpointBound,
        Check::PhiDistanceBound,
        Check::L1DistanceBound,
        Check::SteinerSizeBound,
        Check::TourCostBound,
        Check::TransitionBound,
        Check::SearchOrder,
        Check::SteinerLengthGrowth,
        Check::NetBallBound,
        Check::L1NetBallBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::ExtraExplorationBound => "extra-exploration-bound",
            Check::CostBound => "cost-bound",
            Check::AnchorLca => "anchor-lca",
            Check::NoHeavySubtreeEntry => "no-heavy-subtree-entry",
            Check::PathLoadBalance => "path-load-balance",
            Check::SeparatorSize => "separator-size",
            Check::EstimateRecovery => "estimate-recovery",
            Check::AnchorDrift => "anchor-drift",
            Check::PhiMidpointBound => "phi-midpoint-bound",
            Check::PhiDistanceBound => "phi-distance-bound",
            Check::L1DistanceBound => "l1-distance-bound",
            Check::SteinerSizeBound => "steiner-size-bound",
            Check::TourCostBound => "tour-cost-bound",
            Check::TransitionBound => "transition-bound",
            Check::SearchOrder => "search-order",
            Check::SteinerLengthGrowth => "steiner-length-growth",
            Check::NetBallBound => "net-ball-bound",
            Check::L1NetBallBound => "l1-net-ball-bound",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = OracleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| OracleError::UnknownCheck(s.to_string()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: Check,
    pub pass: bool,
    /// Violation witness on failure, measured constants on informational
    /// checks, empty otherwise.
    pub witness: String,
}

impl CheckReport {
    fn pass(check: Check) -> Self {
        CheckReport {
            check,
            pass: true,
            witness: String::new(),
        }
    }

    fn info(check: Check, witness: String) -> Self {
        CheckReport {
            check,
            pass: true,
            witness,
        }
    }

    fn fail(check: Check, witness: String) -> Self {
        CheckReport {
            check,
            pass: false,
            witness,
        }
    }
}

/// Serialized record of one run, enough to re-verify it against an instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "kebab-case")]
pub enum RunTrace {
    KnownDist {
        distance: i64,
        /// `None` means unlimited.
        budget: Option<u64>,
        moves: Vec<Vertex>,
    },
    Treex {
        report: TreexReport,
    },
    Fullinfo {
        report: PlanReport,
    },
}

impl RunTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, OracleError> {
        serde_json::from_str(text).map_err(|e| OracleError::ReplayMismatch(e.to_string()))
    }
}

// --- per-step inequalities (kept standalone so tests can falsify them) -----

pub fn extra_exploration_within_bound(extra: usize, delta: usize, visited_errors: usize) -> bool {
    extra <= 7 * delta * visited_errors
}

pub fn cost_within_bound(
    cost: u64,
    dist_to_current: u64,
    extra: usize,
    visited_errors: usize,
) -> bool {
    cost <= dist_to_current + 10 * extra as u64 + 16 * visited_errors as u64
}

/// Load trichotomy for a non-goal child subtree on the goal path.
pub fn trichotomy_holds(sigma_i: usize, sigma_goal_side: usize, subtree_i: usize) -> bool {
    sigma_i <= 2 * sigma_goal_side
        || 2 * sigma_i <= subtree_i
        || (sigma_i == 1 && subtree_i == 1 && sigma_goal_side == 0)
}

// ---------------------------------------------------------------------------
// Known-distance run audit (replay-based)
// ---------------------------------------------------------------------------

pub struct KnownDistAudit {
    pub outcome: Outcome,
    pub total_cost: u64,
    pub extra_exploration: usize,
    pub visited_errors: usize,
    pub observed_errors: usize,
    pub moves: Vec<Vertex>,
    pub ledger: CostLedger,
    pub reports: Vec<CheckReport>,
}

/// Per-vertex snapshot of anchored loads and child activity at one timestep.
type LoadSnapshot = Vec<(Vertex, Vec<usize>, Vec<bool>)>;

fn record_failure(failures: &mut HashMap<Check, String>, check: Check, witness: String) {
    failures.entry(check).or_insert(witness);
}

/// Replay the known-distance explorer on a fresh environment and evaluate the
/// selected per-step checks with full knowledge of the instance.
pub fn audit_known_dist(
    inst: &Instance,
    distance: i64,
    budget: Budget,
    checks: &[Check],
) -> Result<KnownDistAudit, OracleError> {
    let tree = TreeView::new(inst.graph(), inst.graph().root())?;
    let goal = inst.goal();
    let on_path: HashSet<Vertex> = tree.path(inst.graph().root(), goal).into_iter().collect();
    let goal_dist = inst.graph().distances_from(goal);
    let erroneous: HashSet<Vertex> = inst.erroneous_set().into_iter().collect();
    let delta = inst.graph().max_degree();

    let want = |c: Check| checks.contains(&c);
    let heavy = want(Check::NoHeavySubtreeEntry);
    let mut failures: HashMap<Check, String> = HashMap::new();

    let mut env = ExplorationEnv::new(inst.clone());
    let mut run = KnownDistRun::new(&mut env, distance, budget)?;
    let mut extra = 0usize;
    let mut errs = 0usize;
    let root = inst.graph().root();
    if erroneous.contains(&root) {
        errs += 1;
    }
    // Observed erroneous vertices: the root plus, whenever a vertex is
    // visited, its newly revealed children.
    let mut obs_errs = errs;
    for &c in tree.children(root) {
        if erroneous.contains(&c) {
            obs_errs += 1;
        }
    }
    let mut moves = Vec::new();
    let outcome;
    loop {
        // Snapshot the load tables for the subtree-entry check before stepping.
        let snapshot: Option<LoadSnapshot> = heavy.then(|| {
            run.local_visited()
                .iter()
                .map(|&v| {
                    let loads = run.loads(v).unwrap().to_vec();
                    let active: Vec<bool> =
                        tree.children(v).iter().map(|&c| run.is_active(c)).collect();
                    (v, loads, active)
                })
                .collect()
        });
        let position_before = run.current();
        match run.step()? {
            StepEvent::Finished(o) => {
                outcome = o;
                break;
            }
            StepEvent::Stepped(info) => {
                let v = info.moved_to;
                moves.push(v);
                if !on_path.contains(&v) {
                    extra += 1;
                }
                if erroneous.contains(&v) {
                    errs += 1;
                }
                for &c in tree.children(v) {
                    if erroneous.contains(&c) {
                        obs_errs += 1;
                    }
                }
                if want(Check::ExtraExplorationBound)
                    && !extra_exploration_within_bound(extra, delta, obs_errs)
                {
                    record_failure(
                        &mut failures,
                        Check::ExtraExplorationBound,
                        format!(
                            "t={} extra={extra} delta={delta} observed errors={obs_errs}",
                            info.t
                        ),
                    );
                }
                if want(Check::CostBound) {
                    let here = tree.level(run.current());
                    if !cost_within_bound(run.cost_so_far(), here, extra, errs) {
                        record_failure(
                            &mut failures,
                            Check::CostBound,
                            format!(
                                "t={} cost={} level={here} extra={extra} errors={errs}",
                                info.t,
                                run.cost_so_far()
                            ),
                        );
                    }
                }
                if want(Check::AnchorLca) && goal_dist[v] as i64 == inst.prediction(v) {
                    let expected = tree.lca(v, goal);
                    if run.anchor(v) != Some(Some(expected)) {
                        record_failure(
                            &mut failures,
                            Check::AnchorLca,
                            format!("vertex {v} anchors at {:?}, not {expected}", run.anchor(v)),
                        );
                    }
                }
                if let Some(snap) = snapshot {
                    check_no_heavy_entry(&tree, &snap, position_before, v, &mut failures);
                }
                if want(Check::PathLoadBalance) {
                    check_path_load_balance(&tree, &run, goal, &on_path, &mut failures);
                }
            }
        }
    }
    drop(run);

    let reports = checks
        .iter()
        .map(|&c| match failures.remove(&c) {
            Some(w) => CheckReport::fail(c, w),
            None => CheckReport::pass(c),
        })
        .collect();
    Ok(KnownDistAudit {
        outcome,
        total_cost: env.total_cost(),
        extra_exploration: extra,
        visited_errors: errs,
        observed_errors: obs_errs,
        moves,
        ledger: env.into_ledger(),
        reports,
    })
}

fn check_no_heavy_entry(
    tree: &TreeView,
    snapshot: &LoadSnapshot,
    position_before: Vertex,
    moved_to: Vertex,
    failures: &mut HashMap<Check, String>,
) {
    for (v, loads, active) in snapshot {
        let children = tree.children(*v);
        let min_active = loads
            .iter()
            .zip(active)
            .filter(|&(_, &a)| a)
            .map(|(&s, _)| s)
            .min();
        let min_active = match min_active {
            Some(m) => m,
            None => continue,
        };
        // The subtree holding the agent, if any.
        let from_idx = children
            .iter()
            .position(|&c| tree.is_ancestor(c, position_before));
        for (i, &c) in children.iter().enumerate() {
            if loads[i] > min_active
                && from_idx.map(|j| j != i).unwrap_or(false)
                && tree.is_ancestor(c, moved_to)
            {
                record_failure(
                    failures,
                    Check::NoHeavySubtreeEntry,
                    format!(
                        "entered child {i} of {v} with load {} above active minimum {min_active}",
                        loads[i]
                    ),
                );
            }
        }
    }
}

fn check_path_load_balance(
    tree: &TreeView,
    run: &KnownDistRun,
    goal: Vertex,
    on_path: &HashSet<Vertex>,
    failures: &mut HashMap<Check, String>,
) {
    for &v in on_path {
        if v == goal || !run.is_locally_visited(v) {
            continue;
        }
        let children = tree.children(v);
        let goal_idx = children
            .iter()
            .position(|&c| tree.is_ancestor(c, goal))
            .expect("goal-path vertex has a goal-side child");
        let loads = run.loads(v).expect("visited");
        let sizes = run.subtree_visited_counts(v).expect("visited");
        for i in 0..children.len() {
            if i == goal_idx {
                continue;
            }
            if !trichotomy_holds(loads[i], loads[goal_idx], sizes[i]) {
                record_failure(
                    failures,
                    Check::PathLoadBalance,
                    format!(
                        "vertex {v} child {i}: sigma={} goal-side sigma={} size={}",
                        loads[i], loads[goal_idx], sizes[i]
                    ),
                );
            }
        }
    }
}

/// Replay a recorded known-distance run and confirm it matches move for move.
pub fn verify_known_dist_trace(
    inst: &Instance,
    distance: i64,
    budget: Budget,
    moves: &[Vertex],
) -> Result<(), OracleError> {
    let audit = audit_known_dist(inst, distance, budget, &[])?;
    if audit.moves != moves {
        return Err(OracleError::ReplayMismatch(format!(
            "trace has {} moves, replay produced {}",
            moves.len(),
            audit.moves.len()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Treex report checks
// ---------------------------------------------------------------------------

pub fn check_estimate_recovery(inst: &Instance, report: &TreexReport) -> CheckReport {
    let errors = inst.error_count() as u64;
    let delta = inst.graph().max_degree() as u64;
    let threshold = 4 * errors * (2 * delta + 1);
    for r in &report.rounds {
        if r.goal_found || r.budget < threshold {
            continue;
        }
        let truth = inst.graph().distance(r.root, inst.goal()) as i64;
        if r.distance_estimate != truth {
            return CheckReport::fail(
                Check::EstimateRecovery,
                format!(
                    "round {} budget {} threshold {threshold}: estimate {} != distance {truth}",
                    r.round, r.budget, r.distance_estimate
                ),
            );
        }
    }
    CheckReport::pass(Check::EstimateRecovery)
}

pub fn check_anchor_drift(inst: &Instance, report: &TreexReport) -> CheckReport {
    let root = inst.graph().root();
    let mut worst = 0f64;
    for r in &report.rounds {
        let d = inst.graph().distance(r.root, root);
        worst = worst.max(d as f64 / r.budget as f64);
        if d > 2 * r.budget {
            return CheckReport::fail(
                Check::AnchorDrift,
                format!(
                    "round {}: anchor at distance {d} > 2 * {}",
                    r.round, r.budget
                ),
            );
        }
    }
    CheckReport::info(
        Check::AnchorDrift,
        format!("max distance/budget = {worst:.4}"),
    )
}

/// Both separator components must exceed n / (2 * delta), exactly.
pub(crate) fn separator_components_ok(n: usize, delta: usize, ca: usize, cb: usize) -> bool {
    ca * 2 * delta > n && cb * 2 * delta > n
}

pub fn check_separator_size(inst: &Instance) -> Result<CheckReport, OracleError> {
    if !inst.graph().is_tree() {
        return Err(OracleError::NotApplicable(
            "separator check needs a tree".into(),
        ));
    }
    let n = inst.graph().n();
    let delta = inst.graph().max_degree();
    if n <= 2 * delta {
        return Err(OracleError::NotApplicable(format!(
            "tree of size {n} not larger than 2 * delta = {}",
            2 * delta
        )));
    }
    let tree = InducedTree::from_graph(inst.graph());
    let (v, a, b) = centroid_split(&tree, delta)?;
    let ca = tree.component_away(a, v).len();
    let cb = tree.component_away(b, v).len();
    if separator_components_ok(n, delta, ca, cb) {
        Ok(CheckReport::pass(Check::SeparatorSize))
    } else {
        Ok(CheckReport::fail(
            Check::SeparatorSize,
            format!("components {ca}/{cb} of {n} with delta {delta}"),
        ))
    }
}

/// Replay a recorded treex run and confirm the round records match.
pub fn verify_treex_trace(inst: &Instance, report: &TreexReport) -> Result<(), OracleError> {
    let mut env = ExplorationEnv::new(inst.clone());
    let fresh = crate::treex::run_treex(
        &mut env,
        crate::treex::TreexConfig {
            beta: report.beta,
            c1: report.c1,
        },
    )?;
    if &fresh != report {
        return Err(OracleError::ReplayMismatch(
            "treex rounds differ from replay".into(),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Implied-error checks
// ---------------------------------------------------------------------------

/// Midpoint set M(U): vertices equidistant from every member of U.
pub fn midpoint_set(inst: &Instance, members: &[Vertex]) -> Vec<Vertex> {
    let n = inst.graph().n();
    let dists: Vec<_> = members
        .iter()
        .map(|&u| inst.graph().distances_from(u))
        .collect();
    (0..n)
        .filter(|&w| dists.windows(2).all(|pair| pair[0][w] == pair[1][w]))
        .collect()
}

pub fn check_phi_midpoint(inst: &Instance, samples: usize, seed: u64) -> CheckReport {
    check_phi_midpoint_with(inst, &implied_error(inst, ErrorMode::L0), samples, seed)
}

fn check_phi_midpoint_with(inst: &Instance, phi: &[u64], samples: usize, seed: u64) -> CheckReport {
    let n = inst.graph().n();
    let mut rng = crate::instances::SplitMix64::new(seed);
    for trial in 0..samples {
        let su = 1 + rng.below(4.min(n as u64)) as usize;
        let ss = 1 + rng.below(n as u64) as usize;
        let mut members = Vec::with_capacity(su);
        for _ in 0..su {
            members.push(rng.below(n as u64) as usize);
        }
        members.sort_unstable();
        members.dedup();
        let mut set = Vec::with_capacity(ss);
        for _ in 0..ss {
            set.push(rng.below(n as u64) as usize);
        }
        set.sort_unstable();
        set.dedup();
        let mid: HashSet<Vertex> = midpoint_set(inst, &members).into_iter().collect();
        let lhs: u64 = members.iter().map(|&u| phi[u]).sum();
        let rhs = set.iter().filter(|v| !mid.contains(v)).count() as u64;
        if lhs < rhs {
            return CheckReport::fail(
                Check::PhiMidpointBound,
                format!("trial {trial}: sum phi = {lhs} < {rhs} uncovered"),
            );
        }
    }
    CheckReport::pass(Check::PhiMidpointBound)
}

pub fn check_phi_distance(inst: &Instance) -> Result<CheckReport, OracleError> {
    if !inst.graph().unit_lengths() {
        return Err(OracleError::NotApplicable(
            "unit-length bound on a weighted graph".into(),
        ));
    }
    Ok(check_phi_distance_with(
        inst,
        &implied_error(inst, ErrorMode::L0),
    ))
}

fn check_phi_distance_with(inst: &Instance, phi: &[u64]) -> CheckReport {
    let n = inst.graph().n();
    for u in 0..n {
        let du = inst.graph().distances_from(u);
        for v in u + 1..n {
            if du[v] > phi[u] + phi[v] {
                return CheckReport::fail(
                    Check::PhiDistanceBound,
                    format!("d({u},{v}) = {} > {} + {}", du[v], phi[u], phi[v]),
                );
            }
        }
    }
    CheckReport::pass(Check::PhiDistanceBound)
}

pub fn check_l1_distance(inst: &Instance) -> CheckReport {
    check_l1_distance_with(inst, &implied_error(inst, ErrorMode::L1))
}

fn check_l1_distance_with(inst: &Instance, phi1: &[u64]) -> CheckReport {
    let n = inst.graph().n();
    for u in 0..n {
        let du = inst.graph().distances_from(u);
        for v in u + 1..n {
            if 2 * du[v] > phi1[u] + phi1[v] {
                return CheckReport::fail(
                    Check::L1DistanceBound,
                    format!("2 d({u},{v}) = {} > {} + {}", 2 * du[v], phi1[u], phi1[v]),
                );
            }
        }
    }
    CheckReport::pass(Check::L1DistanceBound)
}

// ---------------------------------------------------------------------------
// Planner report checks
// ---------------------------------------------------------------------------

pub fn check_steiner_size(
    inst: &Instance,
    report: &PlanReport,
) -> Result<CheckReport, OracleError> {
    if !inst.graph().is_tree() || report.mode != ErrorMode::L0 {
        return Err(OracleError::NotApplicable(
            "candidate-tree size bound needs a tree in l0 mode".into(),
        ));
    }
    let delta = inst.graph().max_degree() as u64;
    for r in report.executed_rounds() {
        let count = r.steiner_vertex_count as u64;
        let ok = if r.round == 0 {
            count == 1
        } else {
            count <= delta * ((1u64 << r.round) + 1)
        };
        if !ok {
            return Ok(CheckReport::fail(
                Check::SteinerSizeBound,
                format!("round {}: candidate tree holds {count} vertices", r.round),
            ));
        }
    }
    Ok(CheckReport::pass(Check::SteinerSizeBound))
}

pub fn check_tour_cost(report: &PlanReport) -> CheckReport {
    for r in report.executed_rounds() {
        if r.tour_cost > 2 * r.steiner_total_length {
            return CheckReport::fail(
                Check::TourCostBound,
                format!(
                    "round {}: tour cost {} exceeds twice the tree length {}",
                    r.round, r.tour_cost, r.steiner_total_length
                ),
            );
        }
    }
    CheckReport::pass(Check::TourCostBound)
}

pub fn check_transitions(inst: &Instance, report: &PlanReport) -> CheckReport {
    let opt = inst.opt_distance();
    let mut first = true;
    let mut prev_anchor = inst.graph().root();
    let phi1 = (report.mode == ErrorMode::L1).then(|| implied_error(inst, ErrorMode::L1));
    for r in report.executed_rounds() {
        let ok = match report.mode {
            ErrorMode::L0 => {
                let errors = inst.error_count() as u64;
                if first {
                    let slack = if r.round > 0 { 1u64 << r.round } else { 0 };
                    r.transition_cost <= opt + errors + slack
                } else {
                    r.transition_cost <= 1u64 << (r.round + 1)
                }
            }
            ErrorMode::L1 => {
                let phi1 = phi1.as_ref().expect("computed for l1");
                if first {
                    2 * r.transition_cost <= 2 * opt + phi1[inst.goal()] + phi1[r.anchor]
                } else {
                    2 * r.transition_cost <= phi1[prev_anchor] + phi1[r.anchor]
                }
            }
        };
        if !ok {
            return CheckReport::fail(
                Check::TransitionBound,
                format!(
                    "round {}: transition cost {} out of bound (first={first})",
                    r.round, r.transition_cost
                ),
            );
        }
        first = false;
        prev_anchor = r.anchor;
    }
    CheckReport::pass(Check::TransitionBound)
}

pub fn check_search_order(report: &PlanReport) -> CheckReport {
    let mut touched: HashSet<Vertex> = HashSet::new();
    let mut move_idx = 0usize;
    let mut due: Vec<Vertex> = Vec::new();
    for r in &report.rounds {
        // Walk the ledger up to this round's tour start.
        while move_idx < r.tour_start_move {
            touched.insert(report.ledger.moves[move_idx].to);
            move_idx += 1;
        }
        if r.executed {
            for &v in &due {
                if !touched.contains(&v) {
                    return CheckReport::fail(
                        Check::SearchOrder,
                        format!(
                            "round {} toured before earlier candidate {v} was walked",
                            r.round
                        ),
                    );
                }
            }
        }
        if r.goal_found {
            break;
        }
        due.extend(r.candidates.iter().copied());
    }
    CheckReport::pass(Check::SearchOrder)
}

pub fn check_steiner_length_growth(report: &PlanReport) -> CheckReport {
    let mut measured = 0f64;
    for r in report.executed_rounds() {
        let scale = (1u64 << (2 * r.round.min(31))) as f64;
        measured = measured.max(r.steiner_total_length as f64 / scale);
    }
    CheckReport::info(
        Check::SteinerLengthGrowth,
        format!("max length(C)/4^round = {measured:.4}"),
    )
}

/// Greedy farthest-point net at scale R/8 over the candidate set, then the
/// ball around each net point (closest net point, ties to the smallest id).
fn net_and_balls(
    inst: &Instance,
    points: &[Vertex],
    radius_times_8: u64,
) -> (Vec<Vertex>, HashMap<Vertex, Vec<Vertex>>) {
    let dist = |u: Vertex, v: Vertex| inst.graph().distance(u, v);
    let mut net = vec![points[0]];
    loop {
        let mut far: Option<(u64, Vertex)> = None;
        for &p in points {
            let d = net.iter().map(|&c| dist(p, c)).min().unwrap();
            if 8 * d > radius_times_8
                && far
                    .map(|f| (d, std::cmp::Reverse(p)) > (f.0, std::cmp::Reverse(f.1)))
                    .unwrap_or(true)
            {
                far = Some((d, p));
            }
        }
        match far {
            Some((_, p)) => net.push(p),
            None => break,
        }
    }
    let mut balls: HashMap<Vertex, Vec<Vertex>> = net.iter().map(|&c| (c, Vec::new())).collect();
    for &p in points {
        let c = net
            .iter()
            .copied()
            .min_by_key(|&c| (dist(p, c), c))
            .expect("net nonempty");
        balls.get_mut(&c).unwrap().push(p);
    }
    (net, balls)
}

fn diameter_pair(inst: &Instance, points: &[Vertex]) -> (Vertex, Vertex, u64) {
    let mut best = (points[0], points[0], 0u64);
    for (i, &u) in points.iter().enumerate() {
        let du = inst.graph().distances_from(u);
        for &v in &points[i + 1..] {
            if du[v] > best.2 {
                best = (u, v, du[v]);
            }
        }
    }
    best
}

pub fn check_net_ball(inst: &Instance, report: &PlanReport) -> Result<CheckReport, OracleError> {
    if report.mode != ErrorMode::L0 {
        return Err(OracleError::NotApplicable(
            "net-ball bound is for l0 mode".into(),
        ));
    }
    for r in report.executed_rounds() {
        if r.candidates.len() < 2 {
            continue;
        }
        let (_, _, radius) = diameter_pair(inst, &r.candidates);
        let (_, balls) = net_and_balls(inst, &r.candidates, radius);
        let cap = 2u64.saturating_pow(r.round + 1);
        for (c, ball) in balls {
            if ball.len() as u64 > cap {
                return Ok(CheckReport::fail(
                    Check::NetBallBound,
                    format!(
                        "round {}: ball at {c} holds {} > {cap}",
                        r.round,
                        ball.len()
                    ),
                ));
            }
        }
    }
    Ok(CheckReport::pass(Check::NetBallBound))
}

pub fn check_l1_net_ball(inst: &Instance, report: &PlanReport) -> Result<CheckReport, OracleError> {
    if report.mode != ErrorMode::L1 {
        return Err(OracleError::NotApplicable(
            "weighted net-ball bound is for l1 mode".into(),
        ));
    }
    Ok(check_l1_net_ball_with(
        inst,
        report,
        &implied_error(inst, ErrorMode::L1),
    ))
}

fn check_l1_net_ball_with(inst: &Instance, report: &PlanReport, phi1: &[u64]) -> CheckReport {
    for r in report.executed_rounds() {
        if r.candidates.len() < 2 {
            continue;
        }
        let (u_star, v_star, radius) = diameter_pair(inst, &r.candidates);
        let (net, balls) = net_and_balls(inst, &r.candidates, radius);
        for c in net {
            let w = if inst.graph().distance(c, u_star) >= inst.graph().distance(c, v_star) {
                u_star
            } else {
                v_star
            };
            let ball = balls[&c].len() as u64;
            if ball * radius > 4 * (phi1[w] + phi1[c]) {
                return CheckReport::fail(
                    Check::L1NetBallBound,
                    format!(
                        "round {}: |ball({c})| * R = {} > 4 (phi1({w}) + phi1({c})) = {}",
                        r.round,
                        ball * radius,
                        4 * (phi1[w] + phi1[c])
                    ),
                );
            }
        }
    }
    CheckReport::pass(Check::L1NetBallBound)
}

/// Replay a recorded planner run and confirm the report matches.
pub fn verify_fullinfo_trace(inst: &Instance, report: &PlanReport) -> Result<(), OracleError> {
    let fresh = crate::planner::run_fullinfo(inst, report.mode)?;
    if &fresh != report {
        return Err(OracleError::ReplayMismatch(
            "planner rounds differ from replay".into(),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct CheckOptions {
    /// Sample count for the sampled midpoint check.
    pub samples: usize,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            samples: 200,
            seed: 0,
        }
    }
}

/// Run one named check against an instance and, where required, a trace.
/// Traces are replay-validated before any trace-dependent check.
pub fn run_check(
    inst: &Instance,
    trace: Option<&RunTrace>,
    check: Check,
    opts: &CheckOptions,
) -> Result<CheckReport, OracleError> {
    match check {
        Check::SeparatorSize => check_separator_size(inst),
        Check::PhiMidpointBound => Ok(check_phi_midpoint(inst, opts.samples, opts.seed)),
        Check::PhiDistanceBound => check_phi_distance(inst),
        Check::L1DistanceBound => Ok(check_l1_distance(inst)),
        Check::ExtraExplorationBound
        | Check::CostBound
        | Check::AnchorLca
        | Check::NoHeavySubtreeEntry
        | Check::PathLoadBalance => match trace {
            Some(RunTrace::KnownDist {
                distance,
                budget,
                moves,
            }) => {
                let budget = budget.map(Budget::Nodes).unwrap_or(Budget::Unlimited);
                verify_known_dist_trace(inst, *distance, budget, moves)?;
                let audit = audit_known_dist(inst, *distance, budget, &[check])?;
                Ok(audit
                    .reports
                    .into_iter()
                    .next()
                    .expect("one check requested"))
            }
            _ => Err(OracleError::TraceKindMismatch(check, "known-dist")),
        },
        Check::EstimateRecovery | Check::AnchorDrift => match trace {
            Some(RunTrace::Treex { report }) => {
                verify_treex_trace(inst, report)?;
                Ok(match check {
                    Check::EstimateRecovery => check_estimate_recovery(inst, report),
                    _ => check_anchor_drift(inst, report),
                })
            }
            _ => Err(OracleError::TraceKindMismatch(check, "treex")),
        },
        Check::SteinerSizeBound
        | Check::TourCostBound
        | Check::TransitionBound
        | Check::SearchOrder
        | Check::SteinerLengthGrowth
        | Check::NetBallBound
        | Check::L1NetBallBound => match trace {
            Some(RunTrace::Fullinfo { report }) => {
                verify_fullinfo_trace(inst, report)?;
                match check {
                    Check::SteinerSizeBound => check_steiner_size(inst, report),
                    Check::TourCostBound => Ok(check_tour_cost(report)),
                    Check::TransitionBound => Ok(check_transitions(inst, report)),
                    Check::SearchOrder => Ok(check_search_order(report)),
                    Check::SteinerLengthGrowth => Ok(check_steiner_length_growth(report)),
                    Check::NetBallBound => check_net_ball(inst, report),
                    _ => check_l1_net_ball(inst, report),
                }
            }
            _ => Err(OracleError::TraceKindMismatch(check, "fullinfo")),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gen_grid, gen_random_tree, gen_spider, GoalPlacement};
    use crate::model::Graph;
    use crate::planner::run_fullinfo;
    use crate::treex::{run_treex, RoundRecord, TreexConfig};

    #[test]
    fn optimal_cost_trivials() {
        let single = Instance::perfect(Graph::new(1, &[], 0).unwrap(), 0).unwrap();
        assert_eq!(optimal_cost(&single), 0);
        let edges: Vec<_> = (1..6).map(|v| (v - 1, v, 1)).collect();
        let path = Instance::perfect(Graph::new(6, &edges, 0).unwrap(), 5).unwrap();
        assert_eq!(optimal_cost(&path), 5);
        let inst = gen_random_tree(40, 4, 1, GoalPlacement::Random).unwrap();
        assert_eq!(
            optimal_cost(&inst),
            inst.graph().distances_from(inst.graph().root())[inst.goal()]
        );
    }

    #[test]
    fn greedy_with_perfect_predictions_walks_a_shortest_path() {
        for seed in 0..30u64 {
            let inst = gen_random_tree(80, 4, seed, GoalPlacement::Random).unwrap();
            let (outcome, ledger) = baseline_explore(&inst, Baseline::GreedyDownhill).unwrap();
            assert_eq!(outcome, BaselineOutcome::GoalFound);
            assert_eq!(ledger.total, inst.opt_distance(), "seed={seed}");
        }
    }

    #[test]
    fn blind_dfs_pays_the_adversarial_floor() {
        let arms = 4;
        let depth = 6;
        let inst = crate::instances::adversarial_spider(arms, depth, |env| {
            let _ = baseline_explore_env(env, Baseline::BlindDfs, 1 << 20);
        })
        .unwrap();
        let (outcome, ledger) = baseline_explore(&inst, Baseline::BlindDfs).unwrap();
        assert_eq!(outcome, BaselineOutcome::GoalFound);
        assert!(ledger.total >= (arms as u64 - 1) * depth);
    }

    #[test]
    fn greedy_livelock_hits_the_step_cap() {
        // Null predictions on a spider: every prediction rises away from the
        // root, so greedy oscillates across the root forever.
        let inst = gen_spider(3, 5, GoalPlacement::Fixed(2), 0).unwrap();
        let (outcome, ledger) = baseline_explore(&inst, Baseline::GreedyDownhill).unwrap();
        assert_eq!(outcome, BaselineOutcome::StepCapExceeded);
        let n = inst.graph().n() as u64;
        assert_eq!(ledger.moves.len() as u64, 4 * n * n);
    }

    #[test]
    fn check_names_round_trip() {
        for check in Check::ALL {
            assert_eq!(Check::from_str(check.name()).unwrap(), check);
        }
        assert!(matches!(
            Check::from_str("no-such-check"),
            Err(OracleError::UnknownCheck(_))
        ));
    }

    // Falsifiability: every checker must be able to fail.

    #[test]
    fn step_predicates_can_fail() {
        assert!(!extra_exploration_within_bound(1, 3, 0));
        assert!(extra_exploration_within_bound(21, 3, 1));
        assert!(!cost_within_bound(100, 5, 1, 2));
        assert!(cost_within_bound(47, 5, 1, 2));
        assert!(!trichotomy_holds(5, 1, 5));
        assert!(trichotomy_holds(2, 1, 9));
        assert!(trichotomy_holds(1, 0, 1));
    }

    #[test]
    fn criticality_conditions_match_the_definition() {
        use crate::known_dist::critical_conditions;
        assert!(critical_conditions(4, 2, 8));
        assert!(!critical_conditions(4, 3, 8));
        assert!(!critical_conditions(3, 1, 8));
    }

    fn valid_treex_report(inst: &Instance) -> TreexReport {
        let mut env = ExplorationEnv::new(inst.clone());
        run_treex(&mut env, TreexConfig::default()).unwrap()
    }

    #[test]
    fn estimate_recovery_checker_can_fail() {
        let inst = gen_random_tree(60, 3, 9, GoalPlacement::Random).unwrap();
        let mut report = valid_treex_report(&inst);
        report.rounds.insert(
            0,
            RoundRecord {
                round: 0,
                budget: u64::MAX, // far above any threshold
                distance_estimate: 1_000_000,
                raw_estimate: 1_000_000,
                root: inst.graph().root(),
                budget_used: 1,
                round_cost: 0,
                cumulative_cost: 0,
                goal_found: false,
                tree_size: 1,
                votes: None,
            },
        );
        assert!(!check_estimate_recovery(&inst, &report).pass);
    }

    #[test]
    fn anchor_drift_checker_can_fail() {
        let edges: Vec<_> = (1..30).map(|v| (v - 1, v, 1)).collect();
        let inst = Instance::perfect(Graph::new(30, &edges, 0).unwrap(), 29).unwrap();
        let mut report = valid_treex_report(&inst);
        report.rounds[0].budget = 1;
        report.rounds[0].root = 20; // distance 20 > 2 * 1
        assert!(!check_anchor_drift(&inst, &report).pass);
    }

    #[test]
    fn phi_checkers_can_fail_on_broken_tables() {
        let inst = gen_random_tree(20, 3, 4, GoalPlacement::Random).unwrap();
        let zeros = vec![0u64; 20];
        assert!(!check_phi_distance_with(&inst, &zeros).pass);
        assert!(!check_l1_distance_with(&inst, &zeros).pass);
        assert!(!check_phi_midpoint_with(&inst, &zeros, 500, 1).pass);
    }

    fn valid_plan_report(inst: &Instance, mode: ErrorMode) -> PlanReport {
        run_fullinfo(inst, mode).unwrap()
    }

    #[test]
    fn planner_checkers_can_fail_on_doctored_reports() {
        let inst = gen_grid(20, 20, None, 5, 3).unwrap();
        let good = valid_plan_report(&inst, ErrorMode::L0);

        let mut broken = good.clone();
        let first = broken.rounds.iter_mut().find(|r| r.executed).unwrap();
        first.transition_cost = 1_000_000;
        assert!(!check_transitions(&inst, &broken).pass);

        let mut broken = good.clone();
        let first = broken.rounds.iter_mut().find(|r| r.executed).unwrap();
        first.tour_cost = 2 * first.steiner_total_length + 1;
        assert!(!check_tour_cost(&broken).pass);

        // A cluster of five vertices within R/8 of each other plus one far
        // vertex: the cluster ball exceeds the round-zero cap of two.
        let mut broken = good.clone();
        let first = broken.rounds.iter_mut().find(|r| r.executed).unwrap();
        first.round = 0;
        first.candidates = vec![0, 1, 2, 20, 21, 399];
        assert!(!check_net_ball(&inst, &broken).unwrap().pass);

        // An early candidate that the ledger never touches before the next tour.
        let mut broken = good.clone();
        broken.rounds[0].candidates = vec![397];
        broken.rounds[0].goal_found = false;
        assert!(!check_search_order(&broken).pass);

        let tree = gen_random_tree(50, 3, 7, GoalPlacement::Random).unwrap();
        let good_tree = valid_plan_report(&tree, ErrorMode::L0);
        let mut broken = good_tree.clone();
        let first = broken.rounds.iter_mut().find(|r| r.executed).unwrap();
        first.steiner_vertex_count = 5000;
        assert!(!check_steiner_size(&tree, &broken).unwrap().pass);

        let weighted = gen_grid(10, 10, Some((1, 5)), 4, 2).unwrap();
        let wreport = valid_plan_report(&weighted, ErrorMode::L1);
        let zeros = vec![0u64; 100];
        // With a zeroed implied-error table any nonempty ball violates the bound.
        if wreport.executed_rounds().any(|r| r.candidates.len() >= 2) {
            assert!(!check_l1_net_ball_with(&weighted, &wreport, &zeros).pass);
        }
    }

    #[test]
    fn separator_checker_can_fail() {
        // A star has no separator with two large sides: every non-center
        // component is a single leaf.
        let edges: Vec<_> = (1..8).map(|v| (0, v, 1)).collect();
        let star = Instance::perfect(Graph::new(8, &edges, 0).unwrap(), 3).unwrap();
        // max degree 7, so 8 <= 2 * 7 makes the split inapplicable.
        assert!(matches!(
            check_separator_size(&star),
            Err(OracleError::NotApplicable(_))
        ));
        // The component inequality itself is falsifiable.
        assert!(!separator_components_ok(100, 4, 12, 50));
        assert!(separator_components_ok(100, 4, 13, 50));
        let inst = gen_random_tree(100, 4, 5, GoalPlacement::Random).unwrap();
        let rep = check_separator_size(&inst).unwrap();
        assert!(rep.pass);
    }

    #[test]
    fn anchor_lca_requires_a_correct_distance() {
        // With a wrong claimed distance even perfectly predicted vertices
        // anchor away from their lowest common ancestor with the goal.
        let edges: Vec<_> = (1..10).map(|v| (v - 1, v, 1u64)).collect();
        let inst = Instance::perfect(Graph::new(10, &edges, 0).unwrap(), 9).unwrap();
        let audit = audit_known_dist(&inst, 9, Budget::Unlimited, &[Check::AnchorLca]).unwrap();
        assert!(audit.reports[0].pass);
        let skewed = audit_known_dist(&inst, 11, Budget::Unlimited, &[Check::AnchorLca]).unwrap();
        assert!(!skewed.reports[0].pass);
    }

    #[test]
    fn heavy_entry_checker_can_fail() {
        // Star 0 - {1, 2}: a synthetic snapshot where child 1 carries all the
        // load and the walk moves into it from child 0's side.
        let g = Graph::new(3, &[(0, 1, 1), (0, 2, 1)], 0).unwrap();
        let tree = TreeView::new(&g, 0).unwrap();
        let snapshot = vec![(0usize, vec![0usize, 5], vec![true, true])];
        let mut failures = HashMap::new();
        check_no_heavy_entry(&tree, &snapshot, 1, 2, &mut failures);
        assert!(failures.contains_key(&Check::NoHeavySubtreeEntry));
        failures.clear();
        check_no_heavy_entry(&tree, &snapshot, 2, 1, &mut failures);
        assert!(failures.is_empty(), "entering the light side is allowed");
    }

    #[test]
    fn replay_validation_rejects_tampered_traces() {
        let inst = gen_random_tree(40, 3, 11, GoalPlacement::Random).unwrap();
        let audit =
            audit_known_dist(&inst, inst.opt_distance() as i64, Budget::Unlimited, &[]).unwrap();
        let mut moves = audit.moves.clone();
        moves.pop();
        assert!(matches!(
            verify_known_dist_trace(&inst, inst.opt_distance() as i64, Budget::Unlimited, &moves),
            Err(OracleError::ReplayMismatch(_))
        ));
        let mut report = valid_treex_report(&inst);
        report.total_cost += 1;
        assert!(matches!(
            verify_treex_trace(&inst, &report),
            Err(OracleError::ReplayMismatch(_))
        ));
    }

    /// A corrupted path whose first budget crossing happens while the visited
    /// tree is still five vertices wide: both vertices on one centroid side
    /// vote for the same huge distance, so the estimate of the next round is
    /// wrong even though its budget clears the recovery threshold. One round
    /// later the visited tree is hundreds of vertices wide and the estimate
    /// snaps back to the exact distance.
    #[test]
    fn first_budget_crossing_can_carry_a_wrong_estimate() {
        let n = 700;
        let big = 1_000_000i64;
        let edges: Vec<_> = (1..n).map(|v| (v - 1, v, 1u64)).collect();
        let graph = Graph::new(n, &edges, 0).unwrap();
        let goal = n - 1;
        let dist = graph.distances_from(goal);
        let mut preds: Vec<i64> = dist.iter().map(|&d| d as i64).collect();
        preds[0] = big;
        preds[1] = big - 1; // votes from {0, 1} agree on big - 2
        let inst = Instance::new(graph, goal, preds).unwrap();
        assert_eq!(inst.error_count(), 2);

        let mut env = ExplorationEnv::new(inst.clone());
        let report = run_treex(&mut env, TreexConfig::default()).unwrap();
        assert!(env.goal_found());

        // The literal recovery premise admits the wrong round-1 estimate.
        let rep = check_estimate_recovery(&inst, &report);
        assert!(
            !rep.pass,
            "expected the first crossing to violate: {}",
            rep.witness
        );
        let round1 = &report.rounds[1];
        assert_eq!(round1.distance_estimate, big - 2);
        assert!(round1.budget >= 4 * 2 * 5 && !round1.goal_found);

        // Shifted premise: once the previous round's budget clears the
        // threshold, the estimate is exact.
        let threshold = 4 * inst.error_count() as u64 * (2 * 2 + 1);
        let mut prev_budget = 0;
        let mut shifted_rounds = 0;
        for r in &report.rounds {
            if prev_budget >= threshold {
                let truth = inst.graph().distance(r.root, inst.goal()) as i64;
                assert_eq!(r.distance_estimate, truth, "round {}", r.round);
                shifted_rounds += 1;
            }
            prev_budget = r.budget;
        }
        assert!(shifted_rounds >= 1);
    }
}
