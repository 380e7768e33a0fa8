use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use rmpflow::gds::{evaluate_gds_leaf, leaf_energy};
use rmpflow::leaves::{
    CollisionAvoidanceParams, CollisionLeaf, DamperParams, DistancePreservationBParams,
    PotentialForm,
};
use rmpflow::linalg::{is_psd, is_symmetric, PSD_EIGEN_FLOOR, SYMMETRY_TOLERANCE};
use rmpflow::task_map::{LinearMap, PairDistance};
use rmpflow::{
    build_rmp_tree, pullback, pushforward, resolve, GdsLeaf, LeafPolicy, NaturalRmp, RobotTeamSpec,
    State, SubtaskAssignment, TaskMap, TreeShape,
};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-2.0..2.0f64, rows * cols)
        .prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

fn vector(n: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-2.0..2.0f64, n).prop_map(DVector::from_vec)
}

fn spd(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    matrix(n, n).prop_map(move |c| c.transpose() * &c + DMatrix::identity(n, n) * 0.1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pullback_keeps_inertia_symmetric_psd(
        a in matrix(2, 3), b in matrix(4, 3),
        ma in spd(2), mb in spd(4),
        fa in vector(2), fb in vector(4),
        x in vector(3), v in vector(3),
    ) {
        let s = State::new(x, v).unwrap();
        let (la, lb) = (LinearMap::new(a), LinearMap::new(b));
        let children = [
            (NaturalRmp::new(fa, ma).unwrap(), &la as &dyn TaskMap),
            (NaturalRmp::new(fb, mb).unwrap(), &lb as &dyn TaskMap),
        ];
        let parent = pullback(&children, &s).unwrap();
        prop_assert!(is_symmetric(&parent.m, SYMMETRY_TOLERANCE));
        prop_assert!(is_psd(&parent.m, PSD_EIGEN_FLOOR));
        // Pullback is additive over children.
        let sum = pullback(&children[..1], &s).unwrap().m + pullback(&children[1..], &s).unwrap().m;
        prop_assert!((sum - &parent.m).amax() < 1e-12);
    }

    #[test]
    fn resolve_inverts_full_rank_inertia(m in spd(4), f in vector(4)) {
        let c = resolve(&NaturalRmp::new(f.clone(), m.clone()).unwrap()).unwrap();
        prop_assert!((&m * &c.a - &f).amax() < 1e-8 * (1.0 + f.amax()));
        let back = c.to_natural();
        prop_assert!((back.f - f).amax() < 1e-8);
    }

    #[test]
    fn pair_distance_jacobian_matches_differences(x in vector(4), v in vector(4)) {
        let map = PairDistance::new(2, 1.0, 0.0, (1, 2));
        prop_assume!(((x[0] - x[2]).powi(2) + (x[1] - x[3]).powi(2)).sqrt() > 0.1);
        let s = State::new(x.clone(), v.clone()).unwrap();
        let y = pushforward(&s, &map).unwrap();
        let h = 1e-6;
        let fd = (map.value(&(&x + &v * h)).unwrap() - map.value(&(&x - &v * h)).unwrap()) / (2.0 * h);
        prop_assert!((y.xdot - fd).amax() < 1e-6);
    }

    #[test]
    fn collision_metric_is_symmetric_psd(
        z in 0.01..5.0f64, zdot in -3.0..3.0f64,
        ds in 0.05..0.5f64, alpha in 1e-6..1.0f64, eps in 1e-8..1e-2f64, eta in 0.0..2.0f64,
    ) {
        let leaf = CollisionLeaf::new(
            CollisionAvoidanceParams { safety_distance: ds, alpha, epsilon: eps, eta },
            (1, 2),
        );
        let s = State::from_slices(&[z], &[zdot]).unwrap();
        let g = leaf.metric(&s.x, &s.xdot);
        prop_assert!(g[(0, 0)] > 0.0);
        let rmp = evaluate_gds_leaf(&leaf, &s).unwrap();
        prop_assert!(is_symmetric(&rmp.m, SYMMETRY_TOLERANCE) && is_psd(&rmp.m, PSD_EIGEN_FLOOR));
        prop_assert!(leaf_energy(&leaf, &s).is_finite());
        // Potential gradient agrees with the potential.
        let h = 1e-6 * z;
        let fd = (leaf.potential(&DVector::from_element(1, z + h))
            - leaf.potential(&DVector::from_element(1, z - h))) / (2.0 * h);
        let g = leaf.potential_grad(&s.x)[0];
        prop_assert!((g - fd).abs() <= 1e-5 * g.abs().max(1e-12));
    }

    #[test]
    fn damped_formation_tree_shapes_agree(
        n in 2usize..5,
        seed_x in prop::collection::vec(-3.0..3.0f64, 8),
        seed_v in prop::collection::vec(-1.0..1.0f64, 8),
        c in 0.1..3.0f64, eta in 0.1..3.0f64,
    ) {
        let team = RobotTeamSpec::planar(n).unwrap();
        let mut subtasks = Vec::new();
        for i in 1..=n {
            subtasks.push(SubtaskAssignment::new(vec![i], LeafPolicy::Damper(DamperParams { c, eta })));
            for j in i + 1..=n {
                subtasks.push(SubtaskAssignment::new(
                    vec![i, j],
                    LeafPolicy::DistPresB(DistancePreservationBParams {
                        distance: 1.0, c, eta, potential: PotentialForm::Quartic,
                    }),
                ));
            }
        }
        let s = State::new(
            DVector::from_column_slice(&seed_x[..2 * n]),
            DVector::from_column_slice(&seed_v[..2 * n]),
        ).unwrap();
        let reference = build_rmp_tree(&team, &subtasks, TreeShape::Grouped).unwrap().policy(&s).unwrap().a;
        for shape in [TreeShape::TwoLevel, TreeShape::Nested] {
            let a = build_rmp_tree(&team, &subtasks, shape).unwrap().policy(&s).unwrap().a;
            prop_assert!((a - &reference).amax() < 1e-9);
        }
    }
}
