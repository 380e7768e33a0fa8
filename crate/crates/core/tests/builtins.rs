use std::collections::BTreeMap;

use rmpflow::scenario::{BUILTIN_NAMES, PURSUIT_ANGULAR_VELOCITY};
use rmpflow::sim::PlannerMode;
use rmpflow::{LeafPolicy, Scenario};

fn kinds(sc: &Scenario) -> BTreeMap<&'static str, usize> {
    let mut out = BTreeMap::new();
    for s in &sc.subtasks {
        *out.entry(s.policy.kind()).or_default() += 1;
    }
    out
}

#[test]
fn builtin_layouts() {
    // name, robots, (kind, count) pairs, mode, dt, t_final
    let table: &[(&str, usize, &[(&str, usize)], PlannerMode, f64, f64)] = &[
        (
            "fig3a",
            5,
            &[("dist_pres_a", 10), ("goal_attractor_a", 1), ("damper", 5)],
            PlannerMode::Centralized,
            0.01,
            60.0,
        ),
        (
            "fig3b",
            5,
            &[("dist_pres_b", 10), ("goal_attractor_a", 1), ("damper", 5)],
            PlannerMode::Centralized,
            0.01,
            300.0,
        ),
        (
            "fig7",
            5,
            &[("dist_pres_b", 10)],
            PlannerMode::Centralized,
            0.01,
            13.2,
        ),
        (
            "fig8-centralized",
            3,
            &[("collision_avoidance", 3), ("goal_attractor_a", 3)],
            PlannerMode::Centralized,
            0.01,
            20.0,
        ),
        (
            "fig8-decentralized",
            3,
            &[("collision_avoidance", 3), ("goal_attractor_a", 3)],
            PlannerMode::Decentralized,
            0.01,
            20.0,
        ),
        (
            "cyclic-pursuit",
            8,
            &[
                ("collision_avoidance", 28),
                ("dist_pres_a", 3),
                ("goal_attractor_a", 6),
            ],
            PlannerMode::Decentralized,
            0.01,
            60.0,
        ),
    ];
    assert_eq!(table.len(), BUILTIN_NAMES.len());
    for &(name, robots, expected, mode, dt, t_final) in table {
        let sc = Scenario::builtin(name).unwrap();
        assert_eq!(sc.team.len(), robots, "{name}");
        let expected: BTreeMap<&str, usize> = expected.iter().copied().collect();
        assert_eq!(kinds(&sc), expected, "{name}");
        assert_eq!(sc.sim.mode, mode, "{name}");
        assert_eq!((sc.sim.dt, sc.sim.t_final), (dt, t_final), "{name}");
        assert!(
            sc.initial.xdot.iter().all(|&v| v == 0.0),
            "{name} starts at rest"
        );
    }
}

#[test]
fn goal_swap_parameters() {
    for name in ["fig8-centralized", "fig8-decentralized"] {
        let sc = Scenario::builtin(name).unwrap();
        for s in &sc.subtasks {
            match &s.policy {
                LeafPolicy::CollisionAvoidance(p) => {
                    assert_eq!(
                        (p.safety_distance, p.alpha, p.epsilon, p.eta),
                        (0.1, 1e-5, 1e-5, 0.2)
                    );
                }
                LeafPolicy::GoalAttractorA(p) => {
                    assert_eq!(
                        (p.w_u, p.w_l, p.sigma, p.alpha, p.eta),
                        (10.0, 0.01, 0.1, 1.0, 1.0)
                    );
                    // Goals are antipodal to the start.
                    let slot = s.participants[0] - 1;
                    for k in 0..2 {
                        assert!((p.goal[k] + sc.initial.x[2 * slot + k]).abs() < 1e-12);
                    }
                }
                other => panic!("unexpected leaf {other:?}"),
            }
        }
    }
}

#[test]
fn pursuit_goals_rotate_at_the_stated_rate() {
    assert_eq!(PURSUIT_ANGULAR_VELOCITY, 0.06);
    let sc = Scenario::builtin("cyclic-pursuit").unwrap();
    let moving: Vec<_> = sc
        .subtasks
        .iter()
        .filter_map(|s| s.goal_motion.as_ref())
        .collect();
    assert_eq!(moving.len(), 5);
    for m in moving {
        assert_eq!(m.angular_velocity, PURSUIT_ANGULAR_VELOCITY);
        assert_eq!(m.radius, 1.0);
    }
}

#[test]
fn builtins_survive_a_json_round_trip() {
    for name in BUILTIN_NAMES {
        let sc = Scenario::builtin(name).unwrap();
        let back = Scenario::parse(&sc.to_json(), name).unwrap();
        assert_eq!(back.to_json(), sc.to_json(), "{name}");
    }
}
