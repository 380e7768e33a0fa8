//! Riemannian Motion Policies for multi-robot teams.
//!
//! Leaf policies are geometric dynamical systems on low-dimensional subtask
//! spaces. They are combined either in one RMP-tree over the joint
//! configuration space ([`centralized`]) or in one single-level tree per
//! robot that only uses the robot's own velocity ([`decentralized`]).
//! [`sim`] closes the loop around double-integrator robots, and
//! [`scenario`], [`output`] and [`cli`] provide file formats and the
//! `rmpsim` front end.

pub mod centralized;
pub mod cli;
pub mod decentralized;
pub mod error;
pub mod gds;
pub mod leaves;
pub mod linalg;
pub mod oracle;
pub mod output;
pub mod rmp;
pub mod scenario;
pub mod sim;
pub mod task_map;
pub mod team;
pub mod tree;
pub mod verify;

/// Robot identifier.
pub type RobotId = usize;

pub use centralized::{build_rmp_tree, compute_control, TreeShape};
pub use decentralized::{build_forest, NeighborView, PartialFlowVariant, RmpForest};
pub use error::{Result, RmpError};
pub use gds::GdsLeaf;
pub use rmp::{pullback, pushforward, resolve, CanonicalRmp, NaturalRmp, State};
pub use scenario::Scenario;
pub use sim::{run, SimConfig, TrajectoryLog};
pub use task_map::TaskMap;
pub use team::{LeafPolicy, RobotTeamSpec, SubtaskAssignment};
pub use tree::RmpTree;
