//! Hub location and origin-port assignment for LCL ocean-freight hinterland
//! networks.
//!
//! The crate models stepwise land and sea tariffs, evaluates routing plans,
//! builds the linearized mixed-integer program for external solvers, and ships
//! heuristic and exact (desk-scale) solvers plus a seeded instance generator.

// Index loops read better than iterator chains over the matrix-shaped data.
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod cost;
pub mod gen;
pub mod heuristics;
pub mod milp;
pub mod network;
pub mod oracle;
pub mod pricing;
pub mod solution;

pub use cost::{LandCostTable, SeaRate};
pub use network::{Instance, NodeSets, Parameters};
pub use pricing::CostMode;
pub use solution::{CostBreakdown, Solution, ViolationReport};
