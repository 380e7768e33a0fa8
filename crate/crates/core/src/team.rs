//! Robot teams and subtask assignments shared by the centralized and
//! decentralized planners.

use std::collections::BTreeSet;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RmpError};
use crate::leaves::{
    make_collision_avoidance, make_damper, make_distance_preservation_a,
    make_distance_preservation_b, make_goal_attractor_a, make_goal_attractor_b,
    make_pairwise_potential, CollisionAvoidanceParams, DamperParams, DistancePreservationAParams,
    DistancePreservationBParams, GoalAttractorAParams, GoalAttractorBParams, LeafPair,
    PairwisePotentialParams,
};
use crate::RobotId;

/// Robot ids (kept sorted) and the per-robot configuration dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RobotTeamSpec {
    robots: Vec<RobotId>,
    robot_dim: usize,
}

impl RobotTeamSpec {
    pub fn new(robots: impl IntoIterator<Item = RobotId>, robot_dim: usize) -> Result<Self> {
        let mut ids: Vec<RobotId> = robots.into_iter().collect();
        let n = ids.len();
        ids.sort_unstable();
        ids.dedup();
        if ids.is_empty() {
            return Err(RmpError::Config("a team needs at least one robot".into()));
        }
        if ids.len() != n {
            return Err(RmpError::Config("duplicate robot ids in team".into()));
        }
        if robot_dim == 0 {
            return Err(RmpError::Config("robot dimension must be positive".into()));
        }
        Ok(Self {
            robots: ids,
            robot_dim,
        })
    }

    /// Planar double integrators with ids `1..=n`.
    pub fn planar(n: usize) -> Result<Self> {
        Self::new(1..=n, 2)
    }

    pub fn robots(&self) -> &[RobotId] {
        &self.robots
    }

    pub fn len(&self) -> usize {
        self.robots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.robots.is_empty()
    }

    pub fn robot_dim(&self) -> usize {
        self.robot_dim
    }

    pub fn joint_dim(&self) -> usize {
        self.robots.len() * self.robot_dim
    }

    /// Position of `id` in the joint chart, counted in robot blocks.
    pub fn slot(&self, id: RobotId) -> Result<usize> {
        self.robots
            .binary_search(&id)
            .map_err(|_| RmpError::UnknownRobot(id))
    }

    /// Joint-chart coordinate indices of the given robots, block by block.
    pub fn coordinates(&self, ids: &[RobotId]) -> Result<Vec<usize>> {
        let n = self.robot_dim;
        let mut out = Vec::with_capacity(ids.len() * n);
        for &id in ids {
            let s = self.slot(id)?;
            out.extend(s * n..(s + 1) * n);
        }
        Ok(out)
    }

    pub fn block(&self, v: &DVector<f64>, id: RobotId) -> Result<DVector<f64>> {
        let s = self.slot(id)?;
        Ok(v.rows(s * self.robot_dim, self.robot_dim).into_owned())
    }

    /// Splits a joint vector into per-robot blocks, in id order.
    pub fn split(&self, v: &DVector<f64>) -> Vec<DVector<f64>> {
        let n = self.robot_dim;
        (0..self.robots.len())
            .map(|s| v.rows(s * n, n).into_owned())
            .collect()
    }
}

/// Leaf policy kind together with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum LeafPolicy {
    CollisionAvoidance(CollisionAvoidanceParams),
    DistPresA(DistancePreservationAParams),
    DistPresB(DistancePreservationBParams),
    GoalAttractorA(GoalAttractorAParams),
    GoalAttractorB(GoalAttractorBParams),
    Damper(DamperParams),
    PairwisePotential(PairwisePotentialParams),
}

impl LeafPolicy {
    pub fn kind(&self) -> &'static str {
        match self {
            LeafPolicy::CollisionAvoidance(_) => "collision_avoidance",
            LeafPolicy::DistPresA(_) => "dist_pres_a",
            LeafPolicy::DistPresB(_) => "dist_pres_b",
            LeafPolicy::GoalAttractorA(_) => "goal_attractor_a",
            LeafPolicy::GoalAttractorB(_) => "goal_attractor_b",
            LeafPolicy::Damper(_) => "damper",
            LeafPolicy::PairwisePotential(_) => "pairwise_potential",
        }
    }

    /// Number of robots the policy acts on.
    pub fn arity(&self) -> usize {
        match self {
            LeafPolicy::CollisionAvoidance(_)
            | LeafPolicy::DistPresA(_)
            | LeafPolicy::DistPresB(_)
            | LeafPolicy::PairwisePotential(_) => 2,
            _ => 1,
        }
    }

    pub fn goal(&self) -> Option<&[f64]> {
        match self {
            LeafPolicy::GoalAttractorA(p) => Some(&p.goal),
            LeafPolicy::GoalAttractorB(p) => Some(&p.goal),
            _ => None,
        }
    }

    fn set_goal(&mut self, goal: Vec<f64>) {
        match self {
            LeafPolicy::GoalAttractorA(p) => p.goal = goal,
            LeafPolicy::GoalAttractorB(p) => p.goal = goal,
            _ => {}
        }
    }

    /// Desired inter-robot distance of formation-type policies.
    pub fn desired_distance(&self) -> Option<f64> {
        match self {
            LeafPolicy::DistPresA(p) => Some(p.distance),
            LeafPolicy::DistPresB(p) => Some(p.distance),
            LeafPolicy::PairwisePotential(p) => Some(p.potential.distance),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LeafPolicy::CollisionAvoidance(p) => p.validate(),
            LeafPolicy::DistPresA(p) => p.validate(),
            LeafPolicy::DistPresB(p) => p.validate(),
            LeafPolicy::GoalAttractorA(p) => p.validate(),
            LeafPolicy::GoalAttractorB(p) => p.validate(),
            LeafPolicy::Damper(p) => p.validate(),
            LeafPolicy::PairwisePotential(p) => p.validate(),
        }
    }

    /// Builds the edge map and GDS for sorted, distinct `participants`.
    pub fn instantiate(&self, participants: &[RobotId], robot_dim: usize) -> Result<LeafPair> {
        if participants.len() != self.arity() {
            return Err(RmpError::Config(format!(
                "{} takes {} participant(s), got {}",
                self.kind(),
                self.arity(),
                participants.len()
            )));
        }
        if let Some(g) = self.goal() {
            if g.len() != robot_dim {
                return Err(RmpError::Config(format!(
                    "{} goal has dimension {}, robots have dimension {robot_dim}",
                    self.kind(),
                    g.len()
                )));
            }
        }
        let pair = || (participants[0], participants[1]);
        match self {
            LeafPolicy::CollisionAvoidance(p) => make_collision_avoidance(p, pair(), robot_dim),
            LeafPolicy::DistPresA(p) => make_distance_preservation_a(p, pair(), robot_dim),
            LeafPolicy::DistPresB(p) => make_distance_preservation_b(p, pair(), robot_dim),
            LeafPolicy::GoalAttractorA(p) => make_goal_attractor_a(p),
            LeafPolicy::GoalAttractorB(p) => make_goal_attractor_b(p),
            LeafPolicy::Damper(p) => make_damper(p, robot_dim),
            LeafPolicy::PairwisePotential(p) => make_pairwise_potential(p, pair(), robot_dim),
        }
    }
}

/// Goal moving on a circle: `g(t) = center + radius (cos(ωt + φ), sin(ωt + φ))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalMotion {
    pub center: Vec<f64>,
    pub radius: f64,
    pub angular_velocity: f64,
    #[serde(default)]
    pub phase: f64,
}

impl GoalMotion {
    pub fn goal_at(&self, t: f64) -> Vec<f64> {
        let theta = self.angular_velocity * t + self.phase;
        vec![
            self.center[0] + self.radius * theta.cos(),
            self.center[1] + self.radius * theta.sin(),
        ]
    }
}

/// One subtask: a leaf policy applied to a set of robots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubtaskAssignment {
    pub participants: Vec<RobotId>,
    #[serde(flatten)]
    pub policy: LeafPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal_motion: Option<GoalMotion>,
}

impl SubtaskAssignment {
    pub fn new(participants: Vec<RobotId>, policy: LeafPolicy) -> Self {
        Self {
            participants,
            policy,
            goal_motion: None,
        }
    }

    pub fn with_goal_motion(mut self, motion: GoalMotion) -> Self {
        self.goal_motion = Some(motion);
        self
    }

    pub fn sorted_participants(&self) -> Vec<RobotId> {
        let mut p = self.participants.clone();
        p.sort_unstable();
        p
    }

    /// `kind[i,j,...]`, used in node names and error messages.
    pub fn label(&self) -> String {
        let ids: Vec<String> = self
            .sorted_participants()
            .iter()
            .map(|i| i.to_string())
            .collect();
        format!("{}[{}]", self.policy.kind(), ids.join(","))
    }

    pub fn validate(&self, team: &RobotTeamSpec) -> Result<()> {
        if self.participants.is_empty() {
            return Err(RmpError::Config(format!(
                "{} has no participants",
                self.policy.kind()
            )));
        }
        let distinct: BTreeSet<_> = self.participants.iter().collect();
        if distinct.len() != self.participants.len() {
            return Err(RmpError::Config(format!(
                "{} lists a robot twice: {:?}",
                self.policy.kind(),
                self.participants
            )));
        }
        for &id in &self.participants {
            team.slot(id)?;
        }
        if let Some(m) = &self.goal_motion {
            if self.policy.goal().is_none() {
                return Err(RmpError::Config(format!(
                    "goal_motion given for {}, which has no goal",
                    self.policy.kind()
                )));
            }
            if m.center.len() != 2 || team.robot_dim() != 2 {
                return Err(RmpError::Config(
                    "goal_motion is only defined for planar robots".into(),
                ));
            }
        }
        self.policy.validate()?;
        self.policy
            .instantiate(&self.sorted_participants(), team.robot_dim())
            .map(|_| ())
    }

    /// The assignment with any moving goal frozen at time `t`.
    pub fn at_time(&self, t: f64) -> SubtaskAssignment {
        let mut out = self.clone();
        if let Some(m) = &self.goal_motion {
            out.policy.set_goal(m.goal_at(t));
        }
        out
    }

    pub fn instantiate(&self, robot_dim: usize) -> Result<LeafPair> {
        self.policy
            .instantiate(&self.sorted_participants(), robot_dim)
    }
}

/// Robots that share at least one subtask with `robot`.
pub fn neighbors(subtasks: &[SubtaskAssignment], robot: RobotId) -> BTreeSet<RobotId> {
    subtasks
        .iter()
        .filter(|s| s.participants.contains(&robot))
        .flat_map(|s| s.participants.iter().copied())
        .filter(|&j| j != robot)
        .collect()
}

pub fn validate_all(team: &RobotTeamSpec, subtasks: &[SubtaskAssignment]) -> Result<()> {
    for (k, s) in subtasks.iter().enumerate() {
        s.validate(team)
            .map_err(|e| RmpError::Config(format!("subtask {k} ({}): {e}", s.label())))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn team_ordering_and_blocks() {
        let team = RobotTeamSpec::new([3, 1, 2], 2).unwrap();
        assert_eq!(team.robots(), &[1, 2, 3]);
        assert_eq!(team.coordinates(&[3, 1]).unwrap(), vec![4, 5, 0, 1]);
        assert!(matches!(team.slot(9), Err(RmpError::UnknownRobot(9))));
        assert!(RobotTeamSpec::new([1, 1], 2).is_err());
        assert!(RobotTeamSpec::new([], 2).is_err());
    }

    #[test]
    fn subtask_json_shape() {
        let s = SubtaskAssignment::new(
            vec![2, 1],
            LeafPolicy::Damper(DamperParams { c: 1.0, eta: 2.0 }),
        );
        let json = serde_json::to_value(&s).unwrap();
        assert_eq!(json["kind"], "damper");
        assert_eq!(json["params"]["eta"], 2.0);
        let back: SubtaskAssignment = serde_json::from_value(json).unwrap();
        assert_eq!(back, s);
        assert_eq!(s.label(), "damper[1,2]");
    }

    #[test]
    fn arity_and_membership_are_checked() {
        let team = RobotTeamSpec::planar(3).unwrap();
        let damper = LeafPolicy::Damper(DamperParams { c: 1.0, eta: 1.0 });
        assert!(SubtaskAssignment::new(vec![1], damper.clone())
            .validate(&team)
            .is_ok());
        assert!(SubtaskAssignment::new(vec![1, 2], damper.clone())
            .validate(&team)
            .is_err());
        assert!(SubtaskAssignment::new(vec![7], damper)
            .validate(&team)
            .is_err());
    }

    #[test]
    fn moving_goal_is_frozen() {
        let s = SubtaskAssignment::new(
            vec![1],
            LeafPolicy::GoalAttractorB(GoalAttractorBParams {
                goal: vec![0.0, 0.0],
                c: 1.0,
                alpha: 1.0,
                eta: 1.0,
            }),
        )
        .with_goal_motion(GoalMotion {
            center: vec![0.0, 0.0],
            radius: 1.0,
            angular_velocity: 0.5,
            phase: 0.0,
        });
        let g = s
            .at_time(std::f64::consts::PI)
            .policy
            .goal()
            .unwrap()
            .to_vec();
        assert!((g[0] - 0.0).abs() < 1e-15 && (g[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn neighbor_sets() {
        let pair = |i, j| {
            SubtaskAssignment::new(
                vec![i, j],
                LeafPolicy::DistPresB(DistancePreservationBParams {
                    distance: 1.0,
                    c: 1.0,
                    eta: 1.0,
                    potential: crate::leaves::PotentialForm::Quadratic,
                }),
            )
        };
        let subtasks = vec![pair(1, 2), pair(2, 3)];
        assert_eq!(
            neighbors(&subtasks, 2).into_iter().collect::<Vec<_>>(),
            vec![1, 3]
        );
        assert_eq!(
            neighbors(&subtasks, 1).into_iter().collect::<Vec<_>>(),
            vec![2]
        );
    }
}
