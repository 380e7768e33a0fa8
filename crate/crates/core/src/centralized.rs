//! Centralized planning: one RMP-tree over the joint configuration space of
//! the whole team.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};
use crate::rmp::State;
use crate::task_map::{Compose, Selection, TaskMap};
use crate::team::{validate_all, RobotTeamSpec, SubtaskAssignment};
use crate::tree::{NodeId, RmpTree};
use crate::RobotId;

/// How sub-team nodes are arranged between the root and the leaves.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeShape {
    /// Root, one node per distinct participant set, then the leaves.
    #[default]
    Grouped,
    /// Leaves hang directly off the root through composed maps.
    TwoLevel,
    /// Like `Grouped`, but each participant set is placed under the
    /// smallest existing node whose set contains it (latest on ties).
    Nested,
}

fn set_name(ids: &[RobotId]) -> String {
    let ids: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
    format!("robots[{}]", ids.join(","))
}

/// Builds the team RMP-tree.
///
/// The root lives on the joint chart `C₁ × … × C_N` with robot blocks in
/// ascending id order. Every sub-team node is reached through a coordinate
/// selection, so descendant participant sets are always subsets of their
/// ancestors'.
pub fn build_rmp_tree(
    team: &RobotTeamSpec,
    subtasks: &[SubtaskAssignment],
    shape: TreeShape,
) -> Result<RmpTree> {
    validate_all(team, subtasks)?;
    let n = team.robot_dim();
    let mut tree = RmpTree::new(team.joint_dim());

    if shape == TreeShape::TwoLevel {
        for s in subtasks {
            let ids = s.sorted_participants();
            let (map, leaf) = s.instantiate(n)?;
            let sel: Arc<dyn TaskMap> =
                Arc::new(Selection::new(team.joint_dim(), team.coordinates(&ids)?)?);
            let composed = Arc::new(Compose::new(sel, map)?);
            tree.add_leaf(tree.root(), composed, leaf, s.label())?;
        }
        return Ok(tree);
    }

    // Distinct participant sets in first-appearance order.
    let mut sets: Vec<Vec<RobotId>> = Vec::new();
    for s in subtasks {
        let ids = s.sorted_participants();
        if !sets.contains(&ids) {
            sets.push(ids);
        }
    }
    if shape == TreeShape::Nested {
        // Supersets first so every set can find its container.
        sets.sort_by_key(|s| std::cmp::Reverse(s.len()));
    }

    let mut nodes: Vec<(Vec<RobotId>, NodeId)> = Vec::with_capacity(sets.len());
    for ids in sets {
        let container = match shape {
            TreeShape::Nested => nodes
                .iter()
                .rev()
                .filter(|(other, _)| {
                    other.len() > ids.len() && ids.iter().all(|i| other.contains(i))
                })
                .min_by_key(|(other, _)| other.len())
                .map(|(other, node)| (other.clone(), *node)),
            _ => None,
        };
        let node = match container {
            Some((parent_ids, parent)) => {
                let local: Vec<usize> = ids
                    .iter()
                    .flat_map(|id| {
                        let k = parent_ids.iter().position(|p| p == id).expect("subset");
                        k * n..(k + 1) * n
                    })
                    .collect();
                let sel = Selection::new(parent_ids.len() * n, local)?;
                tree.add_node(parent, Arc::new(sel), set_name(&ids))?
            }
            None => {
                let sel = Selection::new(team.joint_dim(), team.coordinates(&ids)?)?;
                tree.add_node(tree.root(), Arc::new(sel), set_name(&ids))?
            }
        };
        nodes.push((ids, node));
    }

    for s in subtasks {
        let ids = s.sorted_participants();
        let node = nodes
            .iter()
            .find(|(other, _)| *other == ids)
            .map(|(_, node)| *node)
            .expect("node exists for every participant set");
        let (map, leaf) = s.instantiate(n)?;
        tree.add_leaf(node, map, leaf, s.label())?;
    }
    Ok(tree)
}

/// Runs RMPflow on the team tree and splits the root acceleration into
/// per-robot blocks (ascending id).
pub fn compute_control(
    tree: &RmpTree,
    team: &RobotTeamSpec,
    joint_state: &State,
) -> Result<Vec<DVector<f64>>> {
    check_dim("joint state", team.joint_dim(), joint_state.dim())?;
    let a = tree.policy(joint_state)?.a;
    Ok(team.split(&a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leaves::*;
    use crate::team::LeafPolicy;

    fn collision(i: usize, j: usize) -> SubtaskAssignment {
        SubtaskAssignment::new(
            vec![i, j],
            LeafPolicy::CollisionAvoidance(CollisionAvoidanceParams {
                safety_distance: 0.2,
                alpha: 1e-5,
                epsilon: 1e-5,
                eta: 0.2,
            }),
        )
    }

    fn dist_a(i: usize, j: usize, d: f64) -> SubtaskAssignment {
        SubtaskAssignment::new(
            vec![i, j],
            LeafPolicy::DistPresA(DistancePreservationAParams {
                distance: d,
                c: 1.0,
                alpha: 1.0,
                eta: 2.0,
            }),
        )
    }

    fn attractor(i: usize, goal: [f64; 2]) -> SubtaskAssignment {
        SubtaskAssignment::new(
            vec![i],
            LeafPolicy::GoalAttractorA(GoalAttractorAParams {
                goal: goal.to_vec(),
                w_u: 10.0,
                w_l: 1.0,
                sigma: 0.1,
                alpha: 10.0,
                beta: 0.1,
                eta: 1.0,
            }),
        )
    }

    fn formation_subtasks() -> Vec<SubtaskAssignment> {
        vec![
            collision(1, 2),
            collision(2, 3),
            collision(3, 1),
            dist_a(1, 2, 1.0),
            dist_a(2, 3, 1.0),
            dist_a(3, 1, 1.0),
            attractor(1, [2.0, 0.0]),
        ]
    }

    #[test]
    fn nested_shape_matches_formation_figure() {
        let team = RobotTeamSpec::planar(3).unwrap();
        let tree = build_rmp_tree(&team, &formation_subtasks(), TreeShape::Nested).unwrap();
        let robot1 = tree.find("robots[1]").unwrap();
        let parent = tree.parent(robot1).unwrap();
        assert_eq!(tree.name(parent), "robots[1,3]");
        assert_eq!(tree.parent(parent), Some(tree.root()));
        assert_eq!(tree.children(tree.root()).len(), 3);
        assert_eq!(tree.leaves().count(), 7);
    }

    #[test]
    fn grouped_merges_identical_sets() {
        let team = RobotTeamSpec::planar(3).unwrap();
        let tree = build_rmp_tree(&team, &formation_subtasks(), TreeShape::Grouped).unwrap();
        assert_eq!(tree.children(tree.root()).len(), 4);
        for &c in tree.children(tree.root()) {
            assert_eq!(tree.depth(c), 1);
        }
    }

    #[test]
    fn shapes_agree() {
        let team = RobotTeamSpec::planar(3).unwrap();
        let subtasks = formation_subtasks();
        let s = State::from_slices(
            &[0.0, 0.1, 1.1, -0.2, 0.4, 0.9],
            &[0.3, -0.1, 0.0, 0.5, -0.4, 0.2],
        )
        .unwrap();
        let reference = build_rmp_tree(&team, &subtasks, TreeShape::TwoLevel)
            .unwrap()
            .policy(&s)
            .unwrap()
            .a;
        for shape in [TreeShape::Grouped, TreeShape::Nested] {
            let a = build_rmp_tree(&team, &subtasks, shape)
                .unwrap()
                .policy(&s)
                .unwrap()
                .a;
            assert!((a - &reference).amax() <= 1e-10);
        }
    }

    #[test]
    fn zero_and_unary_trees() {
        let team = RobotTeamSpec::planar(2).unwrap();
        let tree = build_rmp_tree(&team, &[], TreeShape::Grouped).unwrap();
        assert_eq!(tree.len(), 1);
        let s = State::from_slices(&[1.0, 2.0, 3.0, 4.0], &[1.0; 4]).unwrap();
        assert_eq!(
            compute_control(&tree, &team, &s).unwrap(),
            vec![DVector::zeros(2); 2]
        );

        let tree = build_rmp_tree(&team, &[attractor(2, [0.0, 0.0])], TreeShape::Grouped).unwrap();
        assert_eq!(tree.len(), 3);
        let leaf = tree.leaves().next().unwrap();
        assert_eq!(tree.depth(leaf), 2);
        assert_eq!(tree.path(leaf), "root/robots[2]/goal_attractor_a[2]");
    }

    #[test]
    fn unknown_robot_is_config_error() {
        let team = RobotTeamSpec::planar(2).unwrap();
        let err = build_rmp_tree(&team, &[collision(1, 5)], TreeShape::Grouped).unwrap_err();
        assert!(err.to_string().contains("unknown robot id 5"), "{err}");
    }

    #[test]
    fn symmetric_pair_gets_opposite_accelerations() {
        let team = RobotTeamSpec::planar(2).unwrap();
        let tree = build_rmp_tree(&team, &[dist_a(1, 2, 1.0)], TreeShape::Grouped).unwrap();
        let s = State::from_slices(&[-1.0, 0.0, 1.0, 0.0], &[0.0; 4]).unwrap();
        let a = compute_control(&tree, &team, &s).unwrap();
        assert!((&a[0] + &a[1]).amax() < 1e-15);
        assert!(a[0][0] > 0.0);
    }
}
