#![forbid(unsafe_code)]
//! Goal search on graphs with per-vertex distance predictions.
//!
//! Every vertex carries an integer guess of its distance to a hidden goal.
//! This crate implements three search strategies around that advice, plus the
//! machinery to test them honestly:
//!
//! - [`known_dist`]: budgeted tree exploration when the goal distance is
//!   claimed up front; cost degrades additively with the number of wrong
//!   predictions.
//! - [`treex`]: tree exploration with no trusted distance, recovering the
//!   estimate by centroid majority votes over everything seen so far.
//! - [`planner`]: full-information sweeps of any graph in increasing
//!   implied-error order via Steiner-tree tours.
//! - [`env`]: the simulation environment that enforces the exploration
//!   information model and charges exact movement cost.
//! - [`instances`]: seeded, portable generators for every instance family
//!   used by the test suites.
//! - [`oracle`]: brute-force ground truth, baseline explorers, and one named
//!   checker per provable cost or structure bound.

pub mod env;
pub mod instances;
pub mod known_dist;
pub mod model;
pub mod oracle;
pub mod planner;
pub mod treex;

pub use env::{CostLedger, EnvError, ExplorationEnv, MoveRecord};
pub use known_dist::{run_known_dist, Budget, KnownDistRun, Outcome};
pub use model::{Graph, Instance, ModelError, TreeView, Vertex};
pub use planner::{run_fullinfo, ErrorMode, PlanReport};
pub use treex::{run_treex, TreexConfig, TreexReport};
