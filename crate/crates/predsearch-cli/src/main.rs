//! Experiment runner: generate instances, run algorithms, verify recorded
//! traces against the brute-force checkers, and sweep parameter grids.
//!
//! Exit codes: 0 ok, 1 configuration error, 2 check failure, 3 internal
//! invariant violation (a trace that does not replay).

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use predsearch::env::extra_exploration;
use predsearch::instances::{
    corrupt_predictions, gen_grid, gen_lopsided, gen_random_tree, gen_spider,
    gen_weighted_hardness, GoalPlacement, SplitMix64,
};
use predsearch::known_dist::Budget;
use predsearch::oracle::{
    audit_known_dist, baseline_explore_env, run_check, Baseline, Check, CheckOptions, OracleError,
    RunTrace,
};
use predsearch::planner::{run_fullinfo, ErrorMode};
use predsearch::treex::{run_treex, TreexConfig};
use predsearch::{ExplorationEnv, Instance};

#[derive(Parser)]
#[command(
    name = "predsearch",
    version,
    about = "Graph search with distance predictions"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write an instance file for a generator family.
    Generate(GenerateArgs),
    /// Run one algorithm; emit one CSV result row per repetition.
    Run(RunArgs),
    /// Re-verify a recorded trace file against an instance file.
    Verify(VerifyArgs),
    /// Run a declarative parameter sweep from a JSON config.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algorithm {
    KnownDist,
    Treex,
    FullinfoL0,
    FullinfoL1,
    BlindDfs,
    Greedy,
}

impl Algorithm {
    fn name(self) -> &'static str {
        match self {
            Algorithm::KnownDist => "known-dist",
            Algorithm::Treex => "treex",
            Algorithm::FullinfoL0 => "fullinfo-l0",
            Algorithm::FullinfoL1 => "fullinfo-l1",
            Algorithm::BlindDfs => "blind-dfs",
            Algorithm::Greedy => "greedy",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Family {
    RandomTree,
    Lopsided,
    Spider,
    Grid,
    WeightedHardness,
}

impl Family {
    fn name(self) -> &'static str {
        match self {
            Family::RandomTree => "random-tree",
            Family::Lopsided => "lopsided",
            Family::Spider => "spider",
            Family::Grid => "grid",
            Family::WeightedHardness => "weighted-hardness",
        }
    }
}

/// Instance source: an explicit file or a generator family.
#[derive(Args, Clone, Serialize, Deserialize)]
struct FamilyArgs {
    /// Instance file (JSON); mutually exclusive with --family.
    #[arg(long)]
    #[serde(default)]
    instance: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(default)]
    family: Option<Family>,
    /// Vertex count (random-tree).
    #[arg(long)]
    #[serde(default)]
    n: Option<usize>,
    /// Degree bound (random-tree) or arm count (spider).
    #[arg(long)]
    #[serde(default)]
    delta: Option<usize>,
    /// Depth (lopsided, spider) or height (weighted-hardness).
    #[arg(long)]
    #[serde(default)]
    depth: Option<u64>,
    /// Grid width and height.
    #[arg(long)]
    #[serde(default)]
    width: Option<usize>,
    #[arg(long)]
    #[serde(default)]
    height: Option<usize>,
    /// Edge length range for weighted grids; leaf edge length for
    /// weighted-hardness.
    #[arg(long)]
    #[serde(default)]
    min_len: Option<u64>,
    #[arg(long)]
    #[serde(default)]
    max_len: Option<u64>,
    /// Corrupt this many predictions (random-tree, grid).
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    k: usize,
    /// Wrong-value range for corruption; defaults to [0, 2 * diameter + 1].
    #[arg(long)]
    #[serde(default)]
    corrupt_lo: Option<i64>,
    #[arg(long)]
    #[serde(default)]
    corrupt_hi: Option<i64>,
    /// Fixed goal vertex (random-tree) or goal arm (spider); random if absent.
    #[arg(long)]
    #[serde(default)]
    goal: Option<usize>,
}

impl FamilyArgs {
    fn build(&self, seed: u64) -> Result<Instance> {
        if let Some(path) = &self.instance {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            return Instance::from_json(&text).map_err(|e| anyhow!("{e}"));
        }
        let family = self
            .family
            .ok_or_else(|| anyhow!("either --instance or --family is required"))?;
        let goal = match self.goal {
            Some(v) => GoalPlacement::Fixed(v),
            None => GoalPlacement::Random,
        };
        let inst = match family {
            Family::RandomTree => {
                let n = self
                    .n
                    .ok_or_else(|| anyhow!("--n is required for random-tree"))?;
                let delta = self.delta.unwrap_or(4);
                gen_random_tree(n, delta, seed, goal)?
            }
            Family::Lopsided => {
                let depth = self
                    .depth
                    .ok_or_else(|| anyhow!("--depth is required for lopsided"))?;
                gen_lopsided(u32::try_from(depth).map_err(|_| anyhow!("depth too large"))?)?
            }
            Family::Spider => {
                let arms = self
                    .delta
                    .ok_or_else(|| anyhow!("--delta (arm count) is required"))?;
                let depth = self
                    .depth
                    .ok_or_else(|| anyhow!("--depth is required for spider"))?;
                gen_spider(arms, depth, goal, seed)?
            }
            Family::Grid => {
                let w = self
                    .width
                    .ok_or_else(|| anyhow!("--width is required for grid"))?;
                let h = self
                    .height
                    .ok_or_else(|| anyhow!("--height is required for grid"))?;
                let lengths = match (self.min_len, self.max_len) {
                    (None, None) => None,
                    (lo, hi) => Some((lo.unwrap_or(1), hi.unwrap_or(1))),
                };
                return Ok(gen_grid(w, h, lengths, self.k, seed)?);
            }
            Family::WeightedHardness => {
                let h = self
                    .depth
                    .ok_or_else(|| anyhow!("--depth (height) is required"))?;
                let leaf = self.max_len.unwrap_or(10);
                gen_weighted_hardness(
                    u32::try_from(h).map_err(|_| anyhow!("height too large"))?,
                    leaf,
                )?
            }
        };
        if self.k > 0 {
            let hi = self
                .corrupt_hi
                .unwrap_or(2 * inst.opt_distance().max(1) as i64 + 1);
            let lo = self.corrupt_lo.unwrap_or(0);
            let mut rng = SplitMix64::new(seed ^ 0xc0ffee);
            return Ok(corrupt_predictions(
                &inst,
                self.k,
                lo,
                hi,
                false,
                rng.next_u64(),
            )?);
        }
        Ok(inst)
    }

    fn family_label(&self) -> String {
        match (&self.instance, self.family) {
            (Some(path), _) => path.display().to_string(),
            (None, Some(f)) => f.name().to_string(),
            _ => "unspecified".to_string(),
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    source: FamilyArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    algorithm: Algorithm,
    #[command(flatten)]
    source: FamilyArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Repetitions; repetition r uses seed + r.
    #[arg(long, default_value_t = 1)]
    reps: u64,
    /// Trusted distance for known-dist; defaults to the true distance.
    #[arg(long)]
    distance: Option<i64>,
    /// Node budget for known-dist; unlimited if absent.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, default_value_t = 1)]
    beta: u64,
    #[arg(long, default_value_t = 86)]
    c1: u64,
    /// Record the (single-repetition) run as a trace file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the movement ledger of the (single-repetition) run as CSV.
    #[arg(long)]
    ledger: Option<PathBuf>,
    /// Write the per-round plan summary (fullinfo algorithms only).
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Checks to run against each repetition's trace.
    #[arg(long, value_delimiter = ',')]
    verify: Vec<String>,
    /// Output CSV; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-step diagnostic dump (known-dist only).
    #[arg(long)]
    dump_steps: bool,
    /// Measure wall time per run (off by default to keep output
    /// byte-identical across repeated invocations).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    trace: PathBuf,
    /// Check names; defaults to every check applicable to the trace kind.
    #[arg(long, value_delimiter = ',')]
    checks: Vec<String>,
    #[arg(long, default_value_t = 200)]
    samples: usize,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON sweep configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV; overrides the config's `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    timing: bool,
}

#[derive(Serialize, Deserialize)]
struct SweepConfig {
    algorithm: String,
    #[serde(flatten)]
    source: FamilyArgs,
    /// Corruption counts to sweep; the source's own `k` is ignored.
    #[serde(default)]
    k_values: Option<KRange>,
    seeds: SeedRange,
    #[serde(default)]
    beta: Option<u64>,
    #[serde(default)]
    c1: Option<u64>,
    #[serde(default)]
    verify: Vec<String>,
    #[serde(default)]
    out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
struct KRange {
    from: usize,
    to: usize,
    #[serde(default)]
    step: Option<usize>,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
struct SeedRange {
    from: u64,
    count: u64,
}

const CSV_HEADER: &str =
    "family,n,delta,errors,opt,algorithm,params,cost,extra_exploration,rounds,goal_found,wall_time_ms";

struct RunOutcome {
    row: String,
    trace: RunTrace,
    ledger: predsearch::CostLedger,
    goal_found: bool,
}

#[allow(clippy::too_many_arguments)]
fn run_once(
    algorithm: Algorithm,
    inst: &Instance,
    distance: Option<i64>,
    budget: Option<u64>,
    beta: u64,
    c1: u64,
    family_label: &str,
    timing: bool,
    dump_steps: bool,
) -> Result<RunOutcome> {
    let started = Instant::now();
    let opt = inst.opt_distance();
    let n = inst.graph().n();
    let delta = inst.graph().max_degree();
    let errors = inst.error_count();
    let is_tree = inst.graph().is_tree();

    let (cost, extra, rounds, goal_found, trace, ledger, params) = match algorithm {
        Algorithm::KnownDist => {
            let d = distance.unwrap_or(opt as i64);
            let b = budget.map(Budget::Nodes).unwrap_or(Budget::Unlimited);
            if dump_steps {
                dump_known_dist_steps(inst, d, b)?;
            }
            let audit = audit_known_dist(inst, d, b, &[])?;
            let trace = RunTrace::KnownDist {
                distance: d,
                budget,
                moves: audit.moves,
            };
            let params = format!(
                "distance={d};budget={}",
                budget.map_or("inf".into(), |b| b.to_string())
            );
            (
                audit.total_cost,
                audit.extra_exploration as i64,
                1usize,
                audit.outcome == predsearch::Outcome::GoalFound,
                trace,
                audit.ledger,
                params,
            )
        }
        Algorithm::Treex => {
            let mut env = ExplorationEnv::new(inst.clone());
            let report = run_treex(&mut env, TreexConfig { beta, c1 })?;
            let extra = if is_tree {
                extra_exploration(&env, inst)? as i64
            } else {
                -1
            };
            let goal = env.goal_found();
            let rounds = report.rounds.len();
            let cost = report.total_cost;
            (
                cost,
                extra,
                rounds,
                goal,
                RunTrace::Treex { report },
                env.into_ledger(),
                format!("beta={beta};c1={c1}"),
            )
        }
        Algorithm::FullinfoL0 | Algorithm::FullinfoL1 => {
            let mode = if algorithm == Algorithm::FullinfoL0 {
                ErrorMode::L0
            } else {
                ErrorMode::L1
            };
            let report = run_fullinfo(inst, mode)?;
            let rounds = report.rounds.iter().filter(|r| r.executed).count();
            let cost = report.total_cost;
            let ledger = report.ledger.clone();
            (
                cost,
                -1,
                rounds,
                true,
                RunTrace::Fullinfo { report },
                ledger,
                String::new(),
            )
        }
        Algorithm::BlindDfs | Algorithm::Greedy => {
            let strategy = if algorithm == Algorithm::BlindDfs {
                Baseline::BlindDfs
            } else {
                Baseline::GreedyDownhill
            };
            let cap = 4 * (n as u64).saturating_pow(2);
            let mut env = ExplorationEnv::new(inst.clone());
            let outcome = baseline_explore_env(&mut env, strategy, cap)?;
            let extra = if is_tree {
                extra_exploration(&env, inst)? as i64
            } else {
                -1
            };
            let goal = env.goal_found();
            let moves = env.ledger().moves.iter().map(|m| m.to).collect();
            let cost = env.total_cost();
            (
                cost,
                extra,
                1,
                goal,
                RunTrace::KnownDist {
                    // baselines reuse the plain move-list trace shape
                    distance: 0,
                    budget: None,
                    moves,
                },
                env.into_ledger(),
                format!("cap={cap};outcome={outcome:?}"),
            )
        }
    };

    let wall = if timing {
        started.elapsed().as_millis() as u64
    } else {
        0
    };
    let row = format!(
        "{family_label},{n},{delta},{errors},{opt},{},{params},{cost},{extra},{rounds},{goal_found},{wall}",
        algorithm.name()
    );
    Ok(RunOutcome {
        row,
        trace,
        ledger,
        goal_found,
    })
}

fn dump_known_dist_steps(inst: &Instance, distance: i64, budget: Budget) -> Result<()> {
    use predsearch::known_dist::{KnownDistRun, StepEvent};
    let mut env = ExplorationEnv::new(inst.clone());
    let mut run = KnownDistRun::new(&mut env, distance, budget)?;
    loop {
        let anchor = run.anchor(run.current()).flatten();
        match run.step()? {
            StepEvent::Finished(outcome) => {
                eprintln!("# finished: {outcome:?}");
                return Ok(());
            }
            StepEvent::Stepped(info) => {
                eprintln!(
                    "t={} at={} anchor={} callback={} chosen={} cost+={}",
                    info.t,
                    info.moved_to,
                    anchor.map_or("-".into(), |a| a.to_string()),
                    info.callback_fired,
                    info.chosen_subtree.map_or("-".into(), |q| q.to_string()),
                    info.step_cost
                );
            }
        }
    }
}

fn parse_checks(names: &[String]) -> Result<Vec<Check>> {
    names
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| Check::from_str(s).map_err(|e| anyhow!("{e}")))
        .collect()
}

fn applicable_checks(trace: &RunTrace) -> Vec<Check> {
    match trace {
        RunTrace::KnownDist { .. } => vec![
            Check::ExtraExplorationBound,
            Check::CostBound,
            Check::AnchorLca,
        ],
        RunTrace::Treex { .. } => vec![Check::EstimateRecovery, Check::AnchorDrift],
        RunTrace::Fullinfo { report } => {
            let mut checks = vec![
                Check::TourCostBound,
                Check::TransitionBound,
                Check::SearchOrder,
                Check::SteinerLengthGrowth,
            ];
            match report.mode {
                ErrorMode::L0 => checks.push(Check::NetBallBound),
                ErrorMode::L1 => checks.push(Check::L1NetBallBound),
            }
            checks
        }
    }
}

/// Run checks against a trace; returns false if any check failed.
fn verify_trace(
    inst: &Instance,
    trace: &RunTrace,
    checks: &[Check],
    samples: usize,
    quiet: bool,
) -> Result<bool> {
    let opts = CheckOptions { samples, seed: 0 };
    let mut all_pass = true;
    for &check in checks {
        match run_check(inst, Some(trace), check, &opts) {
            Ok(report) => {
                if !quiet || !report.pass {
                    println!(
                        "{}: {}{}",
                        report.check,
                        if report.pass { "pass" } else { "FAIL" },
                        if report.witness.is_empty() {
                            String::new()
                        } else {
                            format!(" ({})", report.witness)
                        }
                    );
                }
                all_pass &= report.pass;
            }
            Err(OracleError::NotApplicable(why)) => {
                if !quiet {
                    println!("{check}: skipped ({why})");
                }
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(all_pass)
}

fn write_output(path: Option<&PathBuf>, content: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, content).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<u8> {
    let inst = args.source.build(args.seed)?;
    write_output(args.out.as_ref(), &(inst.to_json() + "\n"))?;
    Ok(0)
}

fn cmd_run(args: RunArgs) -> Result<u8> {
    let checks = parse_checks(&args.verify)?;
    if (args.trace.is_some() || args.ledger.is_some() || args.plan.is_some()) && args.reps != 1 {
        bail!("--trace, --ledger and --plan record a single repetition; use --reps 1");
    }
    if args.plan.is_some()
        && !matches!(
            args.algorithm,
            Algorithm::FullinfoL0 | Algorithm::FullinfoL1
        )
    {
        bail!("--plan applies to the fullinfo algorithms only");
    }
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    let mut all_pass = true;
    for rep in 0..args.reps.max(1) {
        let seed = args.seed + rep;
        let inst = args.source.build(seed)?;
        let outcome = run_once(
            args.algorithm,
            &inst,
            args.distance,
            args.budget,
            args.beta,
            args.c1,
            &args.source.family_label(),
            args.timing,
            args.dump_steps,
        )?;
        csv.push_str(&outcome.row);
        csv.push('\n');
        if let Some(path) = &args.trace {
            std::fs::write(path, outcome.trace.to_json())
                .with_context(|| format!("writing {}", path.display()))?;
        }
        if let Some(path) = &args.ledger {
            let mut buf = Vec::new();
            outcome.ledger.write_csv(&mut buf)?;
            std::fs::write(path, buf).with_context(|| format!("writing {}", path.display()))?;
        }
        if let Some(path) = &args.plan {
            if let RunTrace::Fullinfo { report } = &outcome.trace {
                std::fs::write(path, report.export_json())
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
        if !checks.is_empty() {
            all_pass &= verify_trace(&inst, &outcome.trace, &checks, 200, true)?;
        }
        let _ = outcome.goal_found;
    }
    write_output(args.out.as_ref(), &csv)?;
    Ok(if all_pass { 0 } else { 2 })
}

fn cmd_verify(args: VerifyArgs) -> Result<u8> {
    let inst = Instance::from_json(
        &std::fs::read_to_string(&args.instance)
            .with_context(|| format!("reading {}", args.instance.display()))?,
    )
    .map_err(|e| anyhow!("{e}"))?;
    let trace = RunTrace::from_json(
        &std::fs::read_to_string(&args.trace)
            .with_context(|| format!("reading {}", args.trace.display()))?,
    )
    .map_err(|e| anyhow!("{e}"))?;
    let checks = if args.checks.is_empty() {
        applicable_checks(&trace)
    } else {
        parse_checks(&args.checks)?
    };
    let all_pass = verify_trace(&inst, &trace, &checks, args.samples, false)?;
    Ok(if all_pass { 0 } else { 2 })
}

fn cmd_sweep(args: SweepArgs) -> Result<u8> {
    let config: SweepConfig = serde_json::from_str(
        &std::fs::read_to_string(&args.config)
            .with_context(|| format!("reading {}", args.config.display()))?,
    )
    .context("parsing sweep config")?;
    let algorithm = match config.algorithm.as_str() {
        "known-dist" => Algorithm::KnownDist,
        "treex" => Algorithm::Treex,
        "fullinfo-l0" => Algorithm::FullinfoL0,
        "fullinfo-l1" => Algorithm::FullinfoL1,
        "blind-dfs" => Algorithm::BlindDfs,
        "greedy" => Algorithm::Greedy,
        other => bail!("unknown algorithm {other:?}"),
    };
    let checks = parse_checks(&config.verify)?;
    let beta = config.beta.unwrap_or(1);
    let c1 = config.c1.unwrap_or(86);
    let k_values: Vec<usize> = match config.k_values {
        None => vec![config.source.k],
        Some(r) => (r.from..=r.to)
            .step_by(r.step.unwrap_or(1).max(1))
            .collect(),
    };
    let seeds: Vec<u64> = (config.seeds.from..config.seeds.from + config.seeds.count).collect();

    // Work items in deterministic (k, seed) order; the worker pool preserves
    // that order on collection.
    let work: Vec<(usize, u64)> = k_values
        .iter()
        .flat_map(|&k| seeds.iter().map(move |&s| (k, s)))
        .collect();
    let results: Vec<Result<(String, bool)>> = work
        .par_iter()
        .map(|&(k, seed)| {
            let mut source = config.source.clone();
            source.k = k;
            let inst = source.build(seed)?;
            let outcome = run_once(
                algorithm,
                &inst,
                None,
                None,
                beta,
                c1,
                &source.family_label(),
                args.timing,
                false,
            )?;
            let pass = if checks.is_empty() {
                true
            } else {
                verify_trace(&inst, &outcome.trace, &checks, 200, true)?
            };
            Ok((outcome.row, pass))
        })
        .collect();

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    let mut all_pass = true;
    for r in results {
        let (row, pass) = r?;
        csv.push_str(&row);
        csv.push('\n');
        all_pass &= pass;
    }
    let out = args.out.as_ref().or(config.out.as_ref());
    write_output(out, &csv)?;
    Ok(if all_pass { 0 } else { 2 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            let _ = e.print();
            return ExitCode::from(0);
        }
    };
    let result = match cli.cmd {
        Cmd::Generate(args) => cmd_generate(args),
        Cmd::Run(args) => cmd_run(args),
        Cmd::Verify(args) => cmd_verify(args),
        Cmd::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = if e
                .downcast_ref::<OracleError>()
                .is_some_and(|o| matches!(o, OracleError::ReplayMismatch(_)))
            {
                3
            } else {
                1
            };
            ExitCode::from(code)
        }
    }
}
