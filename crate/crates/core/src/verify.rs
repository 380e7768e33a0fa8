//! Self-check suites run by `rmpsim verify`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::centralized::{build_rmp_tree, TreeShape};
use crate::decentralized::{build_forest, PartialFlowVariant};
use crate::error::{Result, RmpError};
use crate::gds::{curvature_force, curvature_matrix};
use crate::leaves::*;
use crate::oracle::{
    compare_trajectories, fd_curvature, relative_error_mat, relative_error_vec, FactoredMetricLeaf,
    Normalization, PotentialGraph,
};
use crate::rmp::State;
use crate::scenario::{regular_polygon, Scenario};
use crate::sim::{run, run_with, step, Integrator, PlannerMode, SimConfig};
use crate::team::{LeafPolicy, RobotTeamSpec, SubtaskAssignment};

pub const SEED: u64 = 0x5eed_2019;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Curvature,
    Equivalence,
    Lyapunov,
    Collision,
    Formation,
    All,
}

impl Suite {
    pub fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CheckReport {
    fn at_most(name: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: measured <= tolerance,
            measured,
            tolerance,
            detail: String::new(),
        }
    }

    fn below(name: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            passed: measured < tolerance,
            ..Self::at_most(name, measured, tolerance)
        }
    }

    fn above(name: &str, measured: f64, floor: f64) -> Self {
        Self {
            name: name.into(),
            passed: measured > floor,
            measured,
            tolerance: floor,
            detail: String::new(),
        }
    }

    fn failed(name: &str, err: RmpError) -> Self {
        Self {
            name: name.into(),
            passed: false,
            measured: f64::NAN,
            tolerance: f64::NAN,
            detail: err.to_string(),
        }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

fn guarded(name: &str, f: impl FnOnce() -> Result<Vec<CheckReport>>) -> Vec<CheckReport> {
    f().unwrap_or_else(|e| vec![CheckReport::failed(name, e)])
}

fn random_state<R: Rng>(rng: &mut R, dim: usize, spread: f64) -> State {
    State {
        x: DVector::from_fn(dim, |_, _| rng.gen_range(-spread..spread)),
        xdot: DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0)),
    }
}

/// Analytic curvature terms against finite differences on random
/// velocity-dependent metrics.
pub fn curvature_check(trials: usize) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let dim = rng.gen_range(1..=4);
        let leaf = FactoredMetricLeaf::random(dim, &mut rng);
        let s = random_state(&mut rng, dim, 1.0);
        let (xi_fd, force_fd) = fd_curvature(&leaf, &s);
        let xi = curvature_matrix(&leaf, &s).expect("dimensions match");
        let force = curvature_force(&leaf, &s).expect("dimensions match");
        worst = worst
            .max(relative_error_mat(&xi, &xi_fd))
            .max(relative_error_vec(&force, &force_fd));
    }
    CheckReport::at_most("curvature", worst, 1e-5)
}

/// RMP tree against the formation controller on the pentagon contraction.
pub fn controller_equivalence_check() -> Result<CheckReport> {
    let sc = Scenario::builtin("fig7")?;
    let reference = sc
        .reference
        .clone()
        .expect("fig7 has a reference controller");
    let config = SimConfig {
        dt: 0.01,
        t_final: 13.2,
        cadence: 1,
        monitor_lyapunov: false,
        ..sc.sim.clone()
    };
    let rmp = run(&sc, &config)?;
    let baseline = run_with(&sc, &config, |s| sc.reference_accel(&reference, s))?;
    Ok(CheckReport::at_most(
        "controller_equivalence",
        compare_trajectories(&rmp, &baseline)?,
        1e-9,
    ))
}

/// Decentralized against centralized accelerations for constant-metric
/// product-space leaves.
pub fn partial_flow_check(trials: usize) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 5);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let n = rng.gen_range(2..=6);
        let team = RobotTeamSpec::planar(n)?;
        let mut subtasks = Vec::new();
        for i in 1..=n {
            for j in i + 1..=n {
                if rng.gen_bool(0.6) {
                    subtasks.push(SubtaskAssignment::new(
                        vec![i, j],
                        LeafPolicy::DistPresB(DistancePreservationBParams {
                            distance: rng.gen_range(0.2..1.5),
                            c: rng.gen_range(0.5..3.0),
                            eta: rng.gen_range(0.5..3.0),
                            potential: PotentialForm::Quadratic,
                        }),
                    ));
                }
            }
            subtasks.push(SubtaskAssignment::new(
                vec![i],
                LeafPolicy::Damper(DamperParams {
                    c: rng.gen_range(0.01..2.0),
                    eta: rng.gen_range(0.1..2.0),
                }),
            ));
        }
        let s = random_state(&mut rng, 2 * n, 2.0);
        let tree = build_rmp_tree(&team, &subtasks, TreeShape::Grouped)?;
        let forest = build_forest(&team, &subtasks)?;
        let a_c = tree.policy(&s)?.a;
        let a_d = forest.joint_control(&s, 0, PartialFlowVariant::default())?;
        worst = worst.max((a_c - a_d).amax());
    }
    Ok(CheckReport::at_most(
        "partial_flow_equivalence",
        worst,
        1e-10,
    ))
}

/// Random formation-style leaf set: a damper on every robot, optional goal
/// attractors, and distance-preservation and collision leaves on random pairs.
pub fn random_leaf_set<R: Rng>(rng: &mut R, n: usize) -> Vec<SubtaskAssignment> {
    let mut out = Vec::new();
    for i in 1..=n {
        out.push(SubtaskAssignment::new(
            vec![i],
            LeafPolicy::Damper(DamperParams {
                c: rng.gen_range(0.1..1.0),
                eta: rng.gen_range(0.5..2.0),
            }),
        ));
        if rng.gen_bool(0.5) {
            out.push(SubtaskAssignment::new(
                vec![i],
                LeafPolicy::GoalAttractorA(GoalAttractorAParams {
                    goal: vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                    w_u: 10.0,
                    w_l: 1.0,
                    sigma: 0.1,
                    alpha: 10.0,
                    beta: 0.1,
                    eta: 1.0,
                }),
            ));
        }
        for j in i + 1..=n {
            if rng.gen_bool(0.5) {
                let distance = rng.gen_range(0.3..1.5);
                let policy = if rng.gen_bool(0.5) {
                    LeafPolicy::DistPresA(DistancePreservationAParams {
                        distance,
                        c: 1.0,
                        alpha: 1.0,
                        eta: 2.0,
                    })
                } else {
                    LeafPolicy::DistPresB(DistancePreservationBParams {
                        distance,
                        c: 1.0,
                        eta: 2.0,
                        potential: PotentialForm::Quadratic,
                    })
                };
                out.push(SubtaskAssignment::new(vec![i, j], policy));
            }
            if rng.gen_bool(0.5) {
                out.push(SubtaskAssignment::new(
                    vec![i, j],
                    LeafPolicy::CollisionAvoidance(CollisionAvoidanceParams {
                        safety_distance: 0.1,
                        alpha: 1e-5,
                        epsilon: 1e-5,
                        eta: 0.2,
                    }),
                ));
            }
        }
    }
    out
}

/// Root accelerations of two-level against nested trees over the same
/// random leaf sets.
pub fn tree_shape_check(trials: usize) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 9);
    let mut worst = 0.0_f64;
    let mut k = 0;
    while k < trials {
        let n = rng.gen_range(3..=6);
        let team = RobotTeamSpec::planar(n)?;
        let subtasks = random_leaf_set(&mut rng, n);
        let s = random_state(&mut rng, team.joint_dim(), 2.0);
        let two = build_rmp_tree(&team, &subtasks, TreeShape::TwoLevel)?;
        let nested = build_rmp_tree(&team, &subtasks, TreeShape::Nested)?;
        let (a, b) = match (two.policy(&s), nested.policy(&s)) {
            (Ok(a), Ok(b)) => (a.a, b.a),
            (Err(e), _) | (_, Err(e)) if e.is_barrier_violation() => continue,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        worst = worst.max((a - b).amax());
        k += 1;
    }
    Ok(CheckReport::at_most("tree_shape_invariance", worst, 1e-10))
}

/// Pentagon graphs for the degree-normalization check: the complete graph
/// and a minimally rigid one (cycle plus two chords from robot 1).
pub fn pentagon_graphs(
    eta: f64,
    normalization: Normalization,
) -> Result<Vec<(&'static str, PotentialGraph)>> {
    let ids: Vec<usize> = (1..=5).collect();
    let target = regular_polygon(5, 0.4, [0.0, 0.0]);
    let edge = |i: usize, j: usize| {
        let (a, b) = (target[i - 1], target[j - 1]);
        PairPotential::quadratic((a[0] - b[0]).hypot(a[1] - b[1]))
    };
    let mut complete = PotentialGraph::new(&ids, 2, eta, normalization)?;
    for i in 1..=5 {
        for j in i + 1..=5 {
            complete.add_edge(i, j, edge(i, j))?;
        }
    }
    let mut rigid = PotentialGraph::new(&ids, 2, eta, normalization)?;
    for (i, j) in [(1, 2), (2, 3), (3, 4), (4, 5), (1, 5), (1, 3), (1, 4)] {
        rigid.add_edge(i, j, edge(i, j))?;
    }
    Ok(vec![("complete", complete), ("rigid", rigid)])
}

/// Rolls out a potential controller with RK4 and returns the final state.
pub fn settle(graph: &PotentialGraph, start: &State, dt: f64, t_final: f64) -> Result<State> {
    let steps = (t_final / dt + 1e-9).floor() as usize;
    let mut s = start.clone();
    for _ in 0..steps {
        s = step(|st| graph.potential_controller(st), &s, dt, Integrator::Rk4)?;
    }
    Ok(s)
}

/// Original and degree-normalized potential controllers from the same
/// pentagon start reach the same formation.
pub fn degree_normalization_check() -> Result<Vec<CheckReport>> {
    let start = Scenario::builtin("fig7")?.initial;
    let mut out = Vec::new();
    let originals = pentagon_graphs(2.0, Normalization::Original)?;
    let normalized = pentagon_graphs(2.0, Normalization::DegreeNormalized)?;
    for ((name, g0), (_, g1)) in originals.iter().zip(normalized.iter()) {
        let mut lengths = Vec::new();
        for (g, tag) in [(g0, "original"), (g1, "normalized")] {
            let fin = settle(g, &start, 0.01, 60.0)?;
            out.push(CheckReport::below(
                &format!("final_speed[{name}/{tag}]"),
                fin.xdot.amax(),
                1e-3,
            ));
            out.push(CheckReport::below(
                &format!("final_potential_gradient[{name}/{tag}]"),
                g.gradient(&fin.x)?.amax(),
                1e-3,
            ));
            lengths.push(g.edge_lengths(&fin.x));
        }
        let gap = lengths[0]
            .iter()
            .zip(&lengths[1])
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        out.push(CheckReport::at_most(
            &format!("edge_length_agreement[{name}]"),
            gap,
            1e-3,
        ));
    }
    Ok(out)
}

/// Per-step Lyapunov increase of a built-in scenario at `dt = 1e-3`.
pub fn lyapunov_check(
    builtin: &str,
    mode: PlannerMode,
    with_convergence: bool,
) -> Result<Vec<CheckReport>> {
    let sc = Scenario::builtin(builtin)?;
    let config = SimConfig {
        dt: 1e-3,
        mode,
        cadence: 100,
        monitor_lyapunov: true,
        ..sc.sim.clone()
    };
    let log = run(&sc, &config)?;
    let tag = format!("{builtin}/{mode:?}").to_lowercase();
    let mut out = vec![CheckReport::at_most(
        &format!("lyapunov_increase[{tag}]"),
        log.max_lyapunov_increase,
        1e-6,
    )
    .with_detail(format!("{:?}", log.termination))];
    if !log.termination.is_completed() {
        out[0].passed = false;
    }
    if with_convergence {
        let fin = log.final_diagnostics().expect("non-empty log");
        out.push(CheckReport::below(
            &format!("final_speed[{tag}]"),
            fin.max_speed,
            1e-3,
        ));
        out.push(CheckReport::below(
            &format!("final_potential_gradient[{tag}]"),
            fin.potential_grad_norm,
            1e-3,
        ));
    }
    Ok(out)
}

/// Minimum pairwise distance of the centralized goal swap.
pub fn collision_check() -> Result<CheckReport> {
    let sc = Scenario::builtin("fig8-centralized")?;
    let log = run(&sc, &sc.sim)?;
    let report = CheckReport::above("collision_free", log.min_distance, 0.1)
        .with_detail(format!("{:?}", log.termination));
    Ok(CheckReport {
        passed: report.passed && log.termination.is_completed(),
        ..report
    })
}

/// Formation error under RMPa edges against RMPb edges.
pub fn formation_contrast_check() -> Result<Vec<CheckReport>> {
    let a_sc = Scenario::builtin("fig3a")?;
    let b_sc = Scenario::builtin("fig3b")?;
    let a = run(&a_sc, &a_sc.sim)?;
    let b = run(&b_sc, &b_sc.sim)?;
    let fin = a.final_diagnostics().expect("non-empty log");
    let d_min = crate::sim::formation_edges(&a_sc.subtasks)
        .iter()
        .fold(f64::INFINITY, |m, e| m.min(e.2));
    Ok(vec![
        CheckReport::below(
            "transit_error_rmpa_vs_rmpb",
            a.max_edge_error(),
            b.max_edge_error(),
        ),
        CheckReport::below("final_edge_error_rmpa", fin.max_edge_error(), 0.05 * d_min),
        CheckReport::below("leader_goal_distance_rmpa", fin.goal_distances[0], 0.05),
    ])
}

/// Runs the selected suites.
pub fn run_suite(suite: Suite) -> Vec<CheckReport> {
    let mut out = Vec::new();
    if suite.includes(Suite::Curvature) {
        out.push(curvature_check(100));
    }
    if suite.includes(Suite::Equivalence) {
        out.extend(guarded("controller_equivalence", || {
            Ok(vec![controller_equivalence_check()?])
        }));
        out.extend(guarded("partial_flow_equivalence", || {
            Ok(vec![partial_flow_check(100)?])
        }));
        out.extend(guarded("tree_shape_invariance", || {
            Ok(vec![tree_shape_check(100)?])
        }));
        out.extend(guarded("degree_normalization", degree_normalization_check));
    }
    if suite.includes(Suite::Lyapunov) {
        out.extend(guarded("lyapunov[fig3a]", || {
            lyapunov_check("fig3a", PlannerMode::Centralized, true)
        }));
        out.extend(guarded("lyapunov[fig7]", || {
            lyapunov_check("fig7", PlannerMode::Centralized, true)
        }));
        out.extend(guarded("lyapunov[fig8-decentralized]", || {
            lyapunov_check("fig8-decentralized", PlannerMode::Decentralized, false)
        }));
        out.extend(guarded("lyapunov[cyclic-pursuit]", || {
            lyapunov_check("cyclic-pursuit", PlannerMode::Decentralized, false)
        }));
    }
    if suite.includes(Suite::Collision) {
        out.extend(guarded("collision_free", || Ok(vec![collision_check()?])));
    }
    if suite.includes(Suite::Formation) {
        out.extend(guarded("formation_contrast", formation_contrast_check));
    }
    out
}
