//! Multi-qubit pathfinding on hardware coupling graphs.
//!
//! Teams of interchangeable qubits are routed from source to destination
//! nodes using rounds of parallel, non-overlapping SWAPs. The router finds
//! the minimum number of rounds and, among schedules of that depth, one with
//! the smallest accumulated error.

pub mod bilp;
pub mod error;
pub mod graph;
pub mod instance;
pub mod noise;
pub mod oracle;
pub mod route;
pub mod solver;
pub mod texpand;

pub use error::{Error, Result};
pub use graph::{build_layout, load_graph, save_graph, HardwareGraph, LayoutName};
pub use instance::{random_instance, validate, MqpfInstance, Team, TeamMode, Violation};
pub use noise::{movement_costs, sample_error_map, CostTable, ErrorMap, ErrorModel, NoiseParams};
pub use solver::{export_lp, solve, SolveMode, SolveResult, SolveStatus, SolverConfig};
pub use route::{solve_mqpf, Presolve, RouteConfig, RoutingSolution};
