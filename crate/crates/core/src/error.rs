use thiserror::Error;

use crate::RobotId;

pub type Result<T, E = RmpError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RmpError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// A collision leaf was evaluated at or inside its safety distance.
    #[error("barrier domain violated for robots {pair:?}: z = {z}")]
    BarrierDomain { pair: (RobotId, RobotId), z: f64 },

    #[error("robots {pair:?} are coincident; distance map is not differentiable")]
    CoincidentRobots { pair: (RobotId, RobotId) },

    #[error("non-finite value in {what}")]
    NonFinite { what: String },

    /// Leaf evaluation failure with the tree path of the offending node.
    #[error("at node `{path}`: {source}")]
    Node {
        path: String,
        #[source]
        source: Box<RmpError>,
    },

    #[error("robot {robot}: neighbor view is missing robot {missing}")]
    StaleView { robot: RobotId, missing: RobotId },

    #[error("unknown robot id {0}")]
    UnknownRobot(RobotId),

    #[error("invalid tree operation: {0}")]
    Tree(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl RmpError {
    pub(crate) fn at_node(self, path: impl Into<String>) -> Self {
        RmpError::Node {
            path: path.into(),
            source: Box::new(self),
        }
    }

    /// Strips node-path wrappers and returns the underlying failure.
    pub fn root_cause(&self) -> &RmpError {
        match self {
            RmpError::Node { source, .. } => source.root_cause(),
            other => other,
        }
    }

    pub fn is_barrier_violation(&self) -> bool {
        matches!(self.root_cause(), RmpError::BarrierDomain { .. })
    }
}

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(RmpError::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
