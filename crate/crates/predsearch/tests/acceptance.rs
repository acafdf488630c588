//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them). Every suite builds a
//! deterministic CSV artifact from a fixed seed schedule; the final criterion
//! re-runs each suite and requires byte-identical output.

use std::fmt::Write as _;
use std::time::Instant;

use predsearch::instances::{
    adversarial_spider, corrupt_predictions, gen_grid, gen_random_graph, gen_random_tree,
    GoalPlacement, SplitMix64,
};
use predsearch::known_dist::Budget;
use predsearch::oracle::{
    audit_known_dist, baseline_explore_env, check_anchor_drift, check_estimate_recovery,
    check_l1_distance, check_l1_net_ball, check_net_ball, check_phi_distance, check_phi_midpoint,
    check_search_order, check_separator_size, check_steiner_size, check_tour_cost,
    check_transitions, Baseline, Check,
};
use predsearch::planner::{run_fullinfo, ErrorMode};
use predsearch::treex::{run_treex, TreexConfig};
use predsearch::{run_known_dist, ExplorationEnv, Instance};

struct SuiteOutput {
    csv: String,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl SuiteOutput {
    fn new(header: &str) -> Self {
        SuiteOutput {
            csv: format!("{header}\n"),
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn row(&mut self, row: std::fmt::Arguments) {
        writeln!(self.csv, "{row}").unwrap();
    }

    fn fail(&mut self, msg: String) {
        if self.failures.len() < 20 {
            self.failures.push(msg);
        }
    }
}

fn finish(name: &str, started: Instant, limit_secs: Option<f64>, out: &SuiteOutput) {
    let elapsed = started.elapsed().as_secs_f64();
    let status = if out.failures.is_empty() {
        "PASS"
    } else {
        "FAIL"
    };
    println!("criterion {name}: {status} ({elapsed:.2}s)");
    for note in &out.notes {
        println!("  {note}");
    }
    for f in &out.failures {
        println!("  violation: {f}");
    }
    assert!(
        out.failures.is_empty(),
        "criterion {name} failed:\n{}",
        out.failures.join("\n")
    );
    if let Some(limit) = limit_secs {
        assert!(
            elapsed < limit,
            "criterion {name} exceeded its runtime limit: {elapsed:.2}s >= {limit}s"
        );
    }
}

// --- criterion 1: zero-error exactness -------------------------------------

fn suite_zero_error() -> SuiteOutput {
    let mut out = SuiteOutput::new("seed,n,delta,goal,opt,cost,extra");
    for i in 0..1000u64 {
        let mut rng = SplitMix64::new(i);
        let n = 1 + rng.below(500) as usize;
        let delta = 2 + rng.below(5) as usize;
        let goal = if i % 50 == 0 {
            GoalPlacement::Fixed(0)
        } else {
            GoalPlacement::Random
        };
        let inst = gen_random_tree(n, delta, i, goal).expect("generator");
        let opt = inst.opt_distance();
        let audit = audit_known_dist(&inst, opt as i64, Budget::Unlimited, &[]).expect("audit");
        if audit.total_cost != opt {
            out.fail(format!("seed {i}: cost {} != opt {opt}", audit.total_cost));
        }
        if audit.extra_exploration != 0 {
            out.fail(format!(
                "seed {i}: extra exploration {}",
                audit.extra_exploration
            ));
        }
        out.row(format_args!(
            "{i},{n},{delta},{},{opt},{},{}",
            inst.goal(),
            audit.total_cost,
            audit.extra_exploration
        ));
    }
    out
}

#[test]
fn criterion_1_zero_error_exactness() {
    let started = Instant::now();
    let out = suite_zero_error();
    finish("1 (zero-error exactness)", started, Some(10.0), &out);
}

// --- criteria 2 and 3: explicit-constant bounds -----------------------------

fn corrupted_corpus_instance(i: u64) -> (Instance, usize, usize) {
    let mut rng = SplitMix64::new(0x5eed ^ i);
    let n = 20 + rng.below(481) as usize;
    let delta = 3 + rng.below(4) as usize;
    let k = 1 + rng.below((n as u64 / 4).max(1)) as usize;
    let inst = gen_random_tree(n, delta, i, GoalPlacement::Random).expect("generator");
    let inst = corrupt_predictions(&inst, k, 0, 2 * n as i64, false, i * 7 + 1).expect("corrupt");
    (inst, delta, k)
}

fn suite_explicit_constants() -> SuiteOutput {
    let mut out = SuiteOutput::new("seed,n,delta,k,opt,cost,extra,errors_visited,errors_observed");
    for i in 0..1000u64 {
        let (inst, delta, k) = corrupted_corpus_instance(i);
        let audit = audit_known_dist(
            &inst,
            inst.opt_distance() as i64,
            Budget::Unlimited,
            &[Check::ExtraExplorationBound, Check::CostBound],
        )
        .expect("audit");
        for rep in &audit.reports {
            if !rep.pass {
                out.fail(format!("seed {i}: {}: {}", rep.check, rep.witness));
            }
        }
        // Final-time form with visited errors, exactly as stated.
        if audit.extra_exploration > 7 * delta * audit.visited_errors {
            out.fail(format!(
                "seed {i}: final extra {} > 7*{delta}*{}",
                audit.extra_exploration, audit.visited_errors
            ));
        }
        out.row(format_args!(
            "{i},{},{delta},{k},{},{},{},{},{}",
            inst.graph().n(),
            inst.opt_distance(),
            audit.total_cost,
            audit.extra_exploration,
            audit.visited_errors,
            audit.observed_errors
        ));
    }
    out
}

#[test]
fn criterion_2_explicit_constant_bounds() {
    let started = Instant::now();
    let out = suite_explicit_constants();
    finish("2 (per-step explicit constants)", started, Some(60.0), &out);
}

fn suite_headline_bound() -> SuiteOutput {
    let mut out = SuiteOutput::new("seed,n,delta,errors,opt,cost,bound");
    for i in 0..1000u64 {
        let (inst, delta, _) = corrupted_corpus_instance(i);
        let audit = audit_known_dist(&inst, inst.opt_distance() as i64, Budget::Unlimited, &[])
            .expect("audit");
        let errors = inst.error_count() as u64;
        let bound = inst.opt_distance() + 86 * delta as u64 * errors;
        if audit.total_cost > bound {
            out.fail(format!(
                "seed {i}: cost {} > {bound} (errors {errors})",
                audit.total_cost
            ));
        }
        out.row(format_args!(
            "{i},{},{delta},{errors},{},{},{bound}",
            inst.graph().n(),
            inst.opt_distance(),
            audit.total_cost
        ));
    }
    out
}

#[test]
fn criterion_3_headline_known_distance_bound() {
    let started = Instant::now();
    let out = suite_headline_bound();
    finish("3 (headline known-distance bound)", started, None, &out);
}

// --- criterion 4: distance-estimate recovery --------------------------------

fn suite_estimate_recovery() -> SuiteOutput {
    let mut out = SuiteOutput::new("seed,n,delta,k,beta,rounds,checked_rounds,total_cost");
    for i in 0..500u64 {
        let mut rng = SplitMix64::new(0xe571 ^ i);
        let n = 60 + rng.below(421) as usize;
        let delta = 3 + rng.below(4) as usize;
        let beta = 1 + rng.below(2);
        let k = rng.below((n as u64 / 4).max(1)) as usize;
        let inst = gen_random_tree(n, delta, i + 10_000, GoalPlacement::Random).expect("generator");
        let inst =
            corrupt_predictions(&inst, k, 0, 2 * n as i64, false, i * 3 + 5).expect("corrupt");
        let mut env = ExplorationEnv::new(inst.clone());
        let report = run_treex(
            &mut env,
            TreexConfig {
                beta,
                ..TreexConfig::default()
            },
        )
        .expect("treex run");
        if !env.goal_found() {
            out.fail(format!("seed {i}: goal not found"));
        }
        let rep = check_estimate_recovery(&inst, &report);
        if !rep.pass {
            out.fail(format!("seed {i}: {}", rep.witness));
        }
        let drift = check_anchor_drift(&inst, &report);
        if !drift.pass {
            out.fail(format!("seed {i}: {}", drift.witness));
        }
        let errors = inst.error_count() as u64;
        let threshold = 4 * errors * (2 * delta as u64 + 1);
        let checked = report
            .rounds
            .iter()
            .filter(|r| !r.goal_found && r.budget >= threshold)
            .count();
        out.row(format_args!(
            "{i},{n},{delta},{k},{beta},{},{checked},{}",
            report.rounds.len(),
            report.total_cost
        ));
    }
    out
}

#[test]
fn criterion_4_distance_estimate_recovery() {
    let started = Instant::now();
    let out = suite_estimate_recovery();
    finish("4 (distance-estimate recovery)", started, None, &out);
}

// --- criterion 5: lower-bound floor on adversarial spiders -------------------

fn suite_spider_floor() -> SuiteOutput {
    let mut out = SuiteOutput::new("algorithm,arms,depth,floor,cost,goal_found");
    let beta = 1u64;
    let mut worst_treex_c = 0f64;
    for arms in 3usize..=8 {
        for depth in 5u64..=50 {
            let floor = (arms as u64 - 1) * depth;
            let n = arms as u64 * depth + 1;
            let cap = 4 * n * n;

            let inst = adversarial_spider(arms, depth, |env| {
                let _ = run_known_dist(env, depth as i64, Budget::Unlimited);
            })
            .expect("spider");
            let mut env = ExplorationEnv::new(inst);
            let _ = run_known_dist(&mut env, depth as i64, Budget::Unlimited).expect("run");
            if env.total_cost() < floor {
                out.fail(format!(
                    "known-dist arms={arms} depth={depth}: {}",
                    env.total_cost()
                ));
            }
            out.row(format_args!(
                "known-dist,{arms},{depth},{floor},{},{}",
                env.total_cost(),
                env.goal_found()
            ));

            let inst = adversarial_spider(arms, depth, |env| {
                let _ = run_treex(env, TreexConfig::default());
            })
            .expect("spider");
            let mut env = ExplorationEnv::new(inst);
            let report = run_treex(&mut env, TreexConfig::default()).expect("treex");
            if env.total_cost() < floor {
                out.fail(format!(
                    "treex arms={arms} depth={depth}: {}",
                    env.total_cost()
                ));
            }
            let c = report.total_cost as f64 / (beta * arms as u64 * depth) as f64;
            worst_treex_c = worst_treex_c.max(c);
            if report.total_cost > 8 * beta * arms as u64 * depth {
                out.fail(format!(
                    "treex arms={arms} depth={depth}: cost {} above pinned 8*beta*delta*depth",
                    report.total_cost
                ));
            }
            out.row(format_args!(
                "treex,{arms},{depth},{floor},{},{}",
                env.total_cost(),
                env.goal_found()
            ));

            let inst = adversarial_spider(arms, depth, |env| {
                let _ = baseline_explore_env(env, Baseline::BlindDfs, cap);
            })
            .expect("spider");
            let mut env = ExplorationEnv::new(inst);
            let _ = baseline_explore_env(&mut env, Baseline::BlindDfs, cap).expect("dfs");
            if env.total_cost() < floor {
                out.fail(format!(
                    "blind-dfs arms={arms} depth={depth}: {}",
                    env.total_cost()
                ));
            }
            out.row(format_args!(
                "blind-dfs,{arms},{depth},{floor},{},{}",
                env.total_cost(),
                env.goal_found()
            ));

            let inst = adversarial_spider(arms, depth, |env| {
                let _ = baseline_explore_env(env, Baseline::GreedyDownhill, cap);
            })
            .expect("spider");
            let mut env = ExplorationEnv::new(inst);
            let _ = baseline_explore_env(&mut env, Baseline::GreedyDownhill, cap).expect("greedy");
            if env.total_cost() < floor {
                out.fail(format!(
                    "greedy arms={arms} depth={depth}: {}",
                    env.total_cost()
                ));
            }
            out.row(format_args!(
                "greedy,{arms},{depth},{floor},{},{}",
                env.total_cost(),
                env.goal_found()
            ));
        }
    }
    out.notes.push(format!(
        "measured treex spider constant: cost / (beta*delta*depth) <= {worst_treex_c:.3}"
    ));
    out
}

#[test]
fn criterion_5_spider_lower_bound_floor() {
    let started = Instant::now();
    let out = suite_spider_floor();
    finish("5 (adversarial spider floor)", started, None, &out);
}

// --- criterion 6: planner exactness and per-round bounds ---------------------

fn suite_planner_trees() -> SuiteOutput {
    let mut out = SuiteOutput::new("seed,n,delta,k,opt,cost,rounds");
    let mut worst_c = 0f64;
    for i in 0..1000u64 {
        let mut rng = SplitMix64::new(0x97a1 ^ i);
        let n = 20 + rng.below(481) as usize;
        let delta = 3 + rng.below(4) as usize;
        let k = rng.below((n as u64 / 4).max(1)) as usize;
        let inst = gen_random_tree(n, delta, i + 20_000, GoalPlacement::Random).expect("generator");
        let inst = corrupt_predictions(&inst, k, 0, 2 * n as i64, false, i + 3).expect("corrupt");
        let report = run_fullinfo(&inst, ErrorMode::L0).expect("planner");
        if k == 0 && report.total_cost != inst.opt_distance() {
            out.fail(format!(
                "seed {i}: zero-error cost {} != {}",
                report.total_cost,
                inst.opt_distance()
            ));
        }
        for rep in [
            check_steiner_size(&inst, &report).expect("tree l0"),
            check_tour_cost(&report),
            check_transitions(&inst, &report),
            check_search_order(&report),
        ] {
            if !rep.pass {
                out.fail(format!("seed {i}: {}: {}", rep.check, rep.witness));
            }
        }
        let overhead = report.total_cost.saturating_sub(inst.opt_distance()) as f64;
        worst_c = worst_c.max(overhead / (delta * inst.error_count().max(1)) as f64);
        out.row(format_args!(
            "{i},{n},{delta},{k},{},{},{}",
            inst.opt_distance(),
            report.total_cost,
            report.rounds.len()
        ));
    }
    out.notes.push(format!(
        "measured planner tree constant: (cost-opt)/(delta*errors) <= {worst_c:.3}"
    ));
    out
}

#[test]
fn criterion_6_planner_tree_bounds() {
    let started = Instant::now();
    let out = suite_planner_trees();
    finish("6 (planner exactness and bounds)", started, None, &out);
}

// --- criterion 7: bound property suites --------------------------------------

fn suite_bound_properties() -> SuiteOutput {
    let mut out = SuiteOutput::new("suite,instances,result");

    // Implied-error midpoint bound: 10^4 sampled (S, U) pairs over 50 graphs.
    for i in 0..50u64 {
        let mut rng = SplitMix64::new(0x31d ^ i);
        let n = 8 + rng.below(33) as usize;
        let g = gen_random_graph(n, rng.below(6) as usize, 1, i);
        let inst = Instance::perfect(g, rng.below(n as u64) as usize).expect("instance");
        let k = rng.below(n as u64) as usize;
        let inst = corrupt_predictions(&inst, k, 0, 60, true, i + 11).expect("corrupt");
        let rep = check_phi_midpoint(&inst, 200, i);
        if !rep.pass {
            out.fail(format!("midpoint bound, graph {i}: {}", rep.witness));
        }
    }
    out.row(format_args!("phi-midpoint-bound,50,10000 samples"));

    // Unit-length distance bound, all pairs.
    for i in 0..20u64 {
        let mut rng = SplitMix64::new(0xd15 ^ i);
        let n = 30 + rng.below(171) as usize;
        let g = gen_random_graph(n, rng.below(20) as usize, 1, i + 40_000);
        let inst = Instance::perfect(g, rng.below(n as u64) as usize).expect("instance");
        let k = rng.below(n as u64 / 2) as usize;
        let inst = corrupt_predictions(&inst, k, 0, 400, true, i).expect("corrupt");
        let rep = check_phi_distance(&inst).expect("unit graph");
        if !rep.pass {
            out.fail(format!("distance bound, graph {i}: {}", rep.witness));
        }
    }
    out.row(format_args!("phi-distance-bound,20,all pairs"));

    // Weighted analog, all pairs.
    for i in 0..20u64 {
        let mut rng = SplitMix64::new(0x11d ^ i);
        let n = 30 + rng.below(171) as usize;
        let g = gen_random_graph(n, rng.below(20) as usize, 6, i + 60_000);
        let inst = Instance::perfect(g, rng.below(n as u64) as usize).expect("instance");
        let k = rng.below(n as u64 / 2) as usize;
        let inst = corrupt_predictions(&inst, k, 0, 900, true, i).expect("corrupt");
        let rep = check_l1_distance(&inst);
        if !rep.pass {
            out.fail(format!(
                "weighted distance bound, graph {i}: {}",
                rep.witness
            ));
        }
    }
    out.row(format_args!("l1-distance-bound,20,all pairs"));

    // Separator: both components beat n / (2 delta) on 1000 random trees.
    for i in 0..1000u64 {
        let mut rng = SplitMix64::new(0x4a1 ^ i);
        let n = 30 + rng.below(271) as usize;
        let delta = 3 + rng.below(4) as usize;
        let inst = gen_random_tree(n, delta, i + 80_000, GoalPlacement::Random).expect("generator");
        match check_separator_size(&inst) {
            Ok(rep) if rep.pass => {}
            Ok(rep) => out.fail(format!("separator, tree {i}: {}", rep.witness)),
            Err(e) => out.fail(format!("separator, tree {i}: {e}")),
        }
    }
    out.row(format_args!("separator-size,1000,components"));

    // Correct vertices anchor at their lowest common ancestor with the goal.
    for i in 0..300u64 {
        let (inst, _, _) = corrupted_corpus_instance(i);
        let audit = audit_known_dist(
            &inst,
            inst.opt_distance() as i64,
            Budget::Unlimited,
            &[Check::AnchorLca],
        )
        .expect("audit");
        if !audit.reports[0].pass {
            out.fail(format!("anchor-lca, run {i}: {}", audit.reports[0].witness));
        }
    }
    out.row(format_args!("anchor-lca,300,runs"));

    // Net-ball bounds on 50 unit and 50 weighted grid instances.
    for i in 0..50u64 {
        let mut rng = SplitMix64::new(0xba11 ^ i);
        let w = 8 + rng.below(13) as usize;
        let h = 8 + rng.below(13) as usize;
        let k = 1 + rng.below(40) as usize;
        let inst = gen_grid(w, h, None, k, i).expect("grid");
        let report = run_fullinfo(&inst, ErrorMode::L0).expect("planner");
        let rep = check_net_ball(&inst, &report).expect("l0");
        if !rep.pass {
            out.fail(format!("net-ball, grid {i}: {}", rep.witness));
        }
        let inst = gen_grid(w, h, Some((1, 7)), k, i + 1).expect("grid");
        let report = run_fullinfo(&inst, ErrorMode::L1).expect("planner");
        let rep = check_l1_net_ball(&inst, &report).expect("l1");
        if !rep.pass {
            out.fail(format!("weighted net-ball, grid {i}: {}", rep.witness));
        }
    }
    out.row(format_args!("net-ball-bounds,100,grids"));

    out
}

#[test]
fn criterion_7_bound_property_suites() {
    let started = Instant::now();
    let out = suite_bound_properties();
    finish("7 (bound property suites)", started, Some(300.0), &out);
}

// --- criterion 8: doubling planner stability ---------------------------------

fn suite_doubling_stability() -> SuiteOutput {
    let mut out = SuiteOutput::new("mode,k,size,measured_c");
    let sizes = [15usize, 20, 30];
    for &k in &[10usize, 50] {
        let mut unit_c = Vec::new();
        let mut weighted_c = Vec::new();
        for &s in &sizes {
            let mut cu = 0f64;
            let mut cw = 0f64;
            for seed in 0..25u64 {
                let inst = gen_grid(s, s, None, k, seed).expect("grid");
                let report = run_fullinfo(&inst, ErrorMode::L0).expect("planner");
                let e2 = (inst.error_count() * inst.error_count()) as f64;
                let over = report.total_cost.saturating_sub(inst.opt_distance()) as f64;
                cu = cu.max(over / e2);
                if over > e2 {
                    out.fail(format!(
                        "unit {s}x{s} k={k} seed={seed}: C above pinned 1.0"
                    ));
                }

                let inst = gen_grid(s, s, Some((1, 7)), k, seed).expect("grid");
                let report = run_fullinfo(&inst, ErrorMode::L1).expect("planner");
                let phi1 = inst.l1_error().max(1) as f64;
                let over = report.total_cost.saturating_sub(inst.opt_distance()) as f64;
                cw = cw.max(over / phi1);
                if over > phi1 {
                    out.fail(format!(
                        "weighted {s}x{s} k={k} seed={seed}: C above pinned 1.0"
                    ));
                }
            }
            out.row(format_args!("l0,{k},{s},{cu:.4}"));
            out.row(format_args!("l1,{k},{s},{cw:.4}"));
            unit_c.push(cu);
            weighted_c.push(cw);
        }
        // Stability: the constant needed at the largest size must stay within
        // twice the smaller sizes' maximum, up to a 0.1 noise floor (the
        // measured constants sit near zero at these scales).
        for (label, cs) in [("l0", &unit_c), ("l1", &weighted_c)] {
            let small = cs[..cs.len() - 1].iter().cloned().fold(0f64, f64::max);
            let large = cs[cs.len() - 1];
            if large > (2.0 * small).max(0.1) {
                out.fail(format!(
                    "{label} k={k}: constant grew from {small:.4} to {large:.4} with grid size"
                ));
            }
            out.notes.push(format!(
                "{label} k={k}: measured C per size {:?}",
                cs.iter().map(|c| format!("{c:.4}")).collect::<Vec<_>>()
            ));
        }
    }
    out
}

#[test]
fn criterion_8_doubling_planner_stability() {
    let started = Instant::now();
    let out = suite_doubling_stability();
    finish("8 (doubling planner stability)", started, None, &out);
}

// --- criterion 9: determinism ------------------------------------------------

#[test]
fn criterion_9_byte_identical_reruns() {
    let started = Instant::now();
    let mut out = SuiteOutput::new("suite,bytes");
    type Suite = (&'static str, fn() -> SuiteOutput);
    let suites: [Suite; 8] = [
        ("zero-error", suite_zero_error),
        ("explicit-constants", suite_explicit_constants),
        ("headline-bound", suite_headline_bound),
        ("estimate-recovery", suite_estimate_recovery),
        ("spider-floor", suite_spider_floor),
        ("planner-trees", suite_planner_trees),
        ("bound-properties", suite_bound_properties),
        ("doubling-stability", suite_doubling_stability),
    ];
    for (name, suite) in suites {
        let first = suite();
        let second = suite();
        if first.csv != second.csv {
            out.fail(format!("suite {name} is not byte-identical across reruns"));
        }
        out.row(format_args!("{name},{}", first.csv.len()));
    }
    finish("9 (byte-identical reruns)", started, None, &out);
}
