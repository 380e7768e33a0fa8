//! Pushforward, pullback and resolve by hand on a two-robot team, checked
//! against the same leaves assembled into an RMP-tree.

use std::sync::Arc;

use rmpflow::gds::evaluate_gds_leaf;
use rmpflow::leaves::{DistancePreservationBParams, GoalAttractorAParams, PotentialForm};
use rmpflow::task_map::{Compose, Selection};
use rmpflow::{
    build_rmp_tree, pullback, pushforward, resolve, LeafPolicy, NaturalRmp, Result, RobotTeamSpec,
    State, SubtaskAssignment, TaskMap, TreeShape,
};

fn main() -> Result<()> {
    let team = RobotTeamSpec::planar(2)?;
    let edge = SubtaskAssignment::new(
        vec![1, 2],
        LeafPolicy::DistPresB(DistancePreservationBParams {
            distance: 1.0,
            c: 1.0,
            eta: 2.0,
            potential: PotentialForm::Quadratic,
        }),
    );
    let goal = SubtaskAssignment::new(
        vec![1],
        LeafPolicy::GoalAttractorA(GoalAttractorAParams {
            goal: vec![2.0, 0.5],
            w_u: 10.0,
            w_l: 1.0,
            sigma: 0.1,
            alpha: 10.0,
            beta: 0.1,
            eta: 1.0,
        }),
    );

    let q = State::from_slices(&[0.0, 0.0, 0.4, 0.3], &[0.1, 0.0, -0.2, 0.1])?;

    // Edge leaf: its map already acts on the stacked pair, which is the
    // whole joint space here.
    let (edge_map, edge_leaf) = edge.instantiate(2)?;
    // Goal leaf: select robot 1 out of the joint space first.
    let (goal_map, goal_leaf) = goal.instantiate(2)?;
    let goal_map: Arc<dyn TaskMap> = Arc::new(Compose::new(
        Arc::new(Selection::new(team.joint_dim(), team.coordinates(&[1])?)?),
        goal_map,
    )?);

    let mut children: Vec<(NaturalRmp, &dyn TaskMap)> = Vec::new();
    for (map, leaf) in [(&edge_map, &edge_leaf), (&goal_map, &goal_leaf)] {
        let z = pushforward(&q, map.as_ref())?;
        let rmp = evaluate_gds_leaf(leaf.as_ref(), &z)?;
        println!(
            "leaf at z = {:?}: f = {:?}",
            z.x.as_slice(),
            rmp.f.as_slice()
        );
        children.push((rmp, map.as_ref()));
    }
    let root = pullback(&children, &q)?;
    let by_hand = resolve(&root)?;
    println!("root metric:\n{:.4}", root.m);
    println!("a (by hand) = {:.6?}", by_hand.a.as_slice());

    for shape in [TreeShape::Grouped, TreeShape::TwoLevel, TreeShape::Nested] {
        let tree = build_rmp_tree(&team, &[edge.clone(), goal.clone()], shape)?;
        let a = tree.policy(&q)?.a;
        println!(
            "a ({shape:?}) = {:.6?}  |diff| = {:.1e}",
            a.as_slice(),
            (&a - &by_hand.a).amax()
        );
    }
    Ok(())
}
