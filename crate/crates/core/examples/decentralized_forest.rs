//! One robot's view of the team: its own tree, a snapshot of its
//! neighbours, and the acceleration it computes from them.

use rmpflow::leaves::{DamperParams, DistancePreservationBParams, PotentialForm};
use rmpflow::{
    build_forest, build_rmp_tree, LeafPolicy, NeighborView, PartialFlowVariant, Result,
    RobotTeamSpec, State, SubtaskAssignment, TreeShape,
};

fn main() -> Result<()> {
    let team = RobotTeamSpec::planar(3)?;
    let mut subtasks = Vec::new();
    for (i, j, d) in [(1, 2, 1.0), (2, 3, 1.0), (1, 3, 1.2)] {
        subtasks.push(SubtaskAssignment::new(
            vec![i, j],
            LeafPolicy::DistPresB(DistancePreservationBParams {
                distance: d,
                c: 1.0,
                eta: 2.0,
                potential: PotentialForm::Quadratic,
            }),
        ));
    }
    for i in 1..=3 {
        subtasks.push(SubtaskAssignment::new(
            vec![i],
            LeafPolicy::Damper(DamperParams { c: 0.5, eta: 1.0 }),
        ));
    }
    let forest = build_forest(&team, &subtasks)?;
    let joint = State::from_slices(
        &[0.0, 0.0, 1.3, 0.1, 0.4, 0.9],
        &[0.2, 0.0, -0.1, 0.3, 0.0, -0.2],
    )?;

    for tree in forest.trees() {
        let labels: Vec<_> = tree.leaves.iter().map(|l| l.label.as_str()).collect();
        println!(
            "robot {}: neighbours {:?}, leaves {labels:?}",
            tree.robot, tree.neighbors
        );
    }

    // Robot 2 only needs positions and velocities of robots 1 and 3.
    let view = forest.snapshot(2, &joint, 0)?;
    let own = State::new(team.block(&joint.x, 2)?, team.block(&joint.xdot, 2)?)?;
    let a2 =
        forest.compute_control_decentralized(2, &own, &view, PartialFlowVariant::Compensated)?;
    println!(
        "robot 2 acceleration from its own tree: {:.6?}",
        a2.a.as_slice()
    );

    let central = build_rmp_tree(&team, &subtasks, TreeShape::Grouped)?
        .policy(&joint)?
        .a;
    println!(
        "same block from the centralized tree:   {:.6?}",
        central.rows(2, 2).as_slice()
    );

    // A view that misses a neighbour is refused rather than silently used.
    let mut partial = NeighborView::new(2, 0);
    partial.insert(1, view.get(1).expect("robot 1 in view").clone());
    match forest.compute_control_decentralized(2, &own, &partial, PartialFlowVariant::Compensated) {
        Err(e) => println!("incomplete view refused: {e}"),
        Ok(r) => println!("unexpected acceleration {:?}", r.a.as_slice()),
    }
    Ok(())
}
