//! Optimal unlabeled pebble motion on trees, a bounded-suboptimal unlabeled
//! multi-agent path finding solver built on the same demand function,
//! replay validators, brute-force oracles and an experiment harness.

pub mod demand;
pub mod error;
pub mod experiments;
pub mod instance;
pub mod tree;
pub mod mapf;
pub mod oracle;
pub mod upmt;
pub mod validate;

pub use demand::{compute_demands, lower_bound, DemandTable, Sign};
pub use error::{ExperimentError, InstanceError, OracleError, ParseError, SolveError, TreeError};
pub use instance::{parse_instance, random_instance, Instance};
pub use tree::{path_tree, random_labeled_tree, root_tree, NodeId, RootedTree, Tree};
pub use upmt::{solve_upmt, Move, MoveSink, NullSink, Plan, UpmtSolver};
pub use mapf::{makespan, schedule_mapf, solve_mapf, sum_of_costs, MapfSchedule, MapfSolver, TimedMove, TimedPlan};
pub use validate::{reconstruct_trajectories, validate_mapf, validate_upmt, Failure, ValidationReport, Violation};
pub use oracle::{oracle_mapf_optimal, oracle_opt_bfs, oracle_opt_matching, tree_distance, MapfOracleOptions, Objective};
pub use experiments::{average_distance, check_expected_bound, run_opt_experiment, ExperimentConfig, ExperimentRow};
