//! Closed-loop rollouts of double-integrator teams, `q̈ = u(q, q̇)`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::centralized::{build_rmp_tree, TreeShape};
use crate::decentralized::{build_forest, PartialFlowVariant, RmpForest};
use crate::error::{check_dim, Result, RmpError};
use crate::rmp::State;
use crate::scenario::Scenario;
use crate::team::{RobotTeamSpec, SubtaskAssignment};
use crate::tree::RmpTree;
use crate::RobotId;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    #[default]
    Rk4,
    SemiImplicitEuler,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlannerMode {
    #[default]
    Centralized,
    Decentralized,
}

fn default_cadence() -> usize {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default)]
    pub mode: PlannerMode,
    /// Steps between logged samples.
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    #[serde(default)]
    pub variant: PartialFlowVariant,
    #[serde(default)]
    pub tree_shape: TreeShape,
    /// Evaluate the Lyapunov function after every step.
    #[serde(default = "default_true")]
    pub monitor_lyapunov: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_final: 10.0,
            integrator: Integrator::Rk4,
            mode: PlannerMode::Centralized,
            cadence: 1,
            variant: PartialFlowVariant::default(),
            tree_shape: TreeShape::default(),
            monitor_lyapunov: true,
        }
    }
}

impl SimConfig {
    pub fn new(dt: f64, t_final: f64) -> Self {
        Self {
            dt,
            t_final,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(RmpError::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_final >= self.dt && self.t_final.is_finite()) {
            return Err(RmpError::Config(format!(
                "t_final must be at least dt, got {}",
                self.t_final
            )));
        }
        if self.cadence == 0 {
            return Err(RmpError::Config("cadence must be at least 1".into()));
        }
        Ok(())
    }

    /// `floor(t_final / dt)`, tolerant to rounding in the quotient.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt + 1e-9).floor() as usize
    }

    pub fn samples(&self) -> usize {
        self.steps() / self.cadence + 1
    }
}

/// Advances `(q, q̇)` by one step with `q̈ = accel(q, q̇)`.
pub fn step<F>(mut accel: F, s: &State, dt: f64, integrator: Integrator) -> Result<State>
where
    F: FnMut(&State) -> Result<DVector<f64>>,
{
    if !(dt > 0.0) {
        return Err(RmpError::Config(format!("dt must be positive, got {dt}")));
    }
    let dim = s.dim();
    let mut eval = |st: &State| -> Result<DVector<f64>> {
        let a = accel(st)?;
        check_dim("policy acceleration", dim, a.len())?;
        Ok(a)
    };
    match integrator {
        Integrator::SemiImplicitEuler => {
            let a = eval(s)?;
            let xdot = &s.xdot + a * dt;
            let x = &s.x + &xdot * dt;
            Ok(State { x, xdot })
        }
        Integrator::Rk4 => {
            let stage = |k_x: &DVector<f64>, k_v: &DVector<f64>, h: f64| State {
                x: &s.x + k_x * h,
                xdot: &s.xdot + k_v * h,
            };
            let k1x = s.xdot.clone();
            let k1v = eval(s)?;
            let s2 = stage(&k1x, &k1v, 0.5 * dt);
            let k2x = s2.xdot.clone();
            let k2v = eval(&s2)?;
            let s3 = stage(&k2x, &k2v, 0.5 * dt);
            let k3x = s3.xdot.clone();
            let k3v = eval(&s3)?;
            let s4 = stage(&k3x, &k3v, dt);
            let k4x = s4.xdot.clone();
            let k4v = eval(&s4)?;
            let w = dt / 6.0;
            Ok(State {
                x: &s.x + (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * w,
                xdot: &s.xdot + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * w,
            })
        }
    }
}

/// Infinite distances (single-robot teams) are written as JSON `null`.
pub(crate) mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Per-sample diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `min_{i<j} ‖xᵢ − xⱼ‖`; infinite for a single robot.
    #[serde(with = "infinite_as_null")]
    pub min_distance: f64,
    /// `|‖xᵢ − xⱼ‖ − d_ij|` per formation edge, in [`formation_edges`] order.
    pub edge_errors: Vec<f64>,
    pub max_speed: f64,
    /// `‖∇_q Φ‖∞`
    pub potential_grad_norm: f64,
    /// Distance of each attracted robot to its goal, in subtask order.
    pub goal_distances: Vec<f64>,
}

impl Diagnostics {
    pub fn max_edge_error(&self) -> f64 {
        self.edge_errors.iter().fold(0.0, |m, e| m.max(*e))
    }
}

/// Why a rollout stopped.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    #[default]
    Completed,
    BarrierDomain {
        step: usize,
        message: String,
    },
    NonFinite {
        step: usize,
    },
    PolicyError {
        step: usize,
        message: String,
    },
}

impl Termination {
    pub fn is_completed(&self) -> bool {
        matches!(self, Termination::Completed)
    }

    fn from_error(step: usize, err: RmpError) -> Self {
        if err.is_barrier_violation() {
            Termination::BarrierDomain {
                step,
                message: err.to_string(),
            }
        } else if matches!(err.root_cause(), RmpError::NonFinite { .. }) {
            Termination::NonFinite { step }
        } else {
            Termination::PolicyError {
                step,
                message: err.to_string(),
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryLog {
    pub robots: Vec<RobotId>,
    pub robot_dim: usize,
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub diagnostics: Vec<Diagnostics>,
    /// Lyapunov value at each sample; empty when monitoring is off.
    pub lyapunov: Vec<f64>,
    /// Largest `V(t + dt) − V(t)` over all steps, both ends evaluated with
    /// the goals of the step.
    pub max_lyapunov_increase: f64,
    /// Step index at which `max_lyapunov_increase` occurred.
    pub max_lyapunov_increase_step: Option<usize>,
    /// Sum of the jumps in `V` caused by moving goals between steps.
    pub goal_work: f64,
    /// Smallest pairwise distance over every step, not just samples.
    pub min_distance: f64,
    pub steps_completed: usize,
    pub termination: Termination,
}

impl TrajectoryLog {
    fn new(team: &RobotTeamSpec, dt: f64) -> Self {
        Self {
            robots: team.robots().to_vec(),
            robot_dim: team.robot_dim(),
            dt,
            times: Vec::new(),
            states: Vec::new(),
            diagnostics: Vec::new(),
            lyapunov: Vec::new(),
            max_lyapunov_increase: f64::NEG_INFINITY,
            max_lyapunov_increase_step: None,
            goal_work: 0.0,
            min_distance: f64::INFINITY,
            steps_completed: 0,
            termination: Termination::Completed,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<&State> {
        self.states.last()
    }

    pub fn final_diagnostics(&self) -> Option<&Diagnostics> {
        self.diagnostics.last()
    }

    /// Position of `robot` at sample `k`.
    pub fn position(&self, k: usize, robot: RobotId) -> Option<DVector<f64>> {
        let slot = self.robots.iter().position(|&r| r == robot)?;
        let n = self.robot_dim;
        Some(self.states.get(k)?.x.rows(slot * n, n).into_owned())
    }

    /// Largest edge error over all samples.
    pub fn max_edge_error(&self) -> f64 {
        self.diagnostics
            .iter()
            .fold(0.0, |m, d| m.max(d.max_edge_error()))
    }
}

/// Formation edges `(i, j, d_ij)` with `i < j`, one per unordered pair, in
/// first-appearance order.
pub fn formation_edges(subtasks: &[SubtaskAssignment]) -> Vec<(RobotId, RobotId, f64)> {
    let mut edges: Vec<(RobotId, RobotId, f64)> = Vec::new();
    for s in subtasks {
        if let Some(d) = s.policy.desired_distance() {
            let p = s.sorted_participants();
            if !edges.iter().any(|&(i, j, _)| (i, j) == (p[0], p[1])) {
                edges.push((p[0], p[1], d));
            }
        }
    }
    edges
}

fn robot_position<'a>(
    team: &RobotTeamSpec,
    q: &'a DVector<f64>,
    id: RobotId,
) -> Result<nalgebra::DVectorView<'a, f64>> {
    let n = team.robot_dim();
    Ok(q.rows(team.slot(id)? * n, n))
}

fn min_pair_distance(team: &RobotTeamSpec, q: &DVector<f64>) -> f64 {
    let n = team.robot_dim();
    let k = team.len();
    let mut best = f64::INFINITY;
    for a in 0..k {
        for b in a + 1..k {
            best = best.min((q.rows(a * n, n) - q.rows(b * n, n)).norm());
        }
    }
    best
}

fn geometric_diagnostics(
    team: &RobotTeamSpec,
    subtasks: &[SubtaskAssignment],
    s: &State,
    grad_norm: f64,
) -> Result<Diagnostics> {
    let edge_errors = formation_edges(subtasks)
        .into_iter()
        .map(|(i, j, d)| {
            let xi = robot_position(team, &s.x, i)?;
            let xj = robot_position(team, &s.x, j)?;
            Ok(((xi - xj).norm() - d).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    let goal_distances = subtasks
        .iter()
        .filter(|st| st.participants.len() == 1)
        .filter_map(|st| st.policy.goal().map(|g| (st.participants[0], g)))
        .map(|(id, g)| {
            let x = robot_position(team, &s.x, id)?;
            Ok((x - DVector::from_column_slice(g)).norm())
        })
        .collect::<Result<Vec<_>>>()?;
    let max_speed = team
        .split(&s.xdot)
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.norm()));
    Ok(Diagnostics {
        min_distance: min_pair_distance(team, &s.x),
        edge_errors,
        max_speed,
        potential_grad_norm: grad_norm,
        goal_distances,
    })
}

/// Diagnostics of `joint` for the scenario's subtasks with goals at time `t`.
pub fn diagnostics(scenario: &Scenario, t: f64, joint: &State) -> Result<Diagnostics> {
    check_dim("joint state", scenario.team.joint_dim(), joint.dim())?;
    let subtasks: Vec<_> = scenario.subtasks.iter().map(|s| s.at_time(t)).collect();
    let tree = build_rmp_tree(&scenario.team, &subtasks, TreeShape::Grouped)?;
    let grad = tree.energy(joint)?.potential_grad;
    geometric_diagnostics(&scenario.team, &subtasks, joint, grad.amax())
}

/// `½ q̇ᵀ G_root q̇ + Φ_root` of the team tree.
pub fn lyapunov_centralized(tree: &RmpTree, joint: &State) -> Result<f64> {
    Ok(tree.energy(joint)?.lyapunov(&joint.xdot))
}

pub use crate::decentralized::lyapunov_decentralized;

/// Planner for one step, with goals frozen at the step's start time.
struct StepPlanner {
    subtasks: Vec<SubtaskAssignment>,
    tree: RmpTree,
    forest: Option<RmpForest>,
    variant: PartialFlowVariant,
}

impl StepPlanner {
    fn build(scenario: &Scenario, config: &SimConfig, t: f64) -> Result<Self> {
        let subtasks: Vec<_> = scenario.subtasks.iter().map(|s| s.at_time(t)).collect();
        let tree = build_rmp_tree(&scenario.team, &subtasks, config.tree_shape)?;
        let forest = match config.mode {
            PlannerMode::Centralized => None,
            PlannerMode::Decentralized => Some(build_forest(&scenario.team, &subtasks)?),
        };
        Ok(Self {
            subtasks,
            tree,
            forest,
            variant: config.variant,
        })
    }

    fn accel(&self, s: &State, step: u64) -> Result<DVector<f64>> {
        match &self.forest {
            Some(f) => f.joint_control(s, step, self.variant),
            None => Ok(self.tree.policy(s)?.a),
        }
    }

    fn lyapunov(&self, s: &State) -> Result<f64> {
        match &self.forest {
            Some(f) => f.lyapunov(s),
            None => lyapunov_centralized(&self.tree, s),
        }
    }

    fn diagnostics(&self, team: &RobotTeamSpec, s: &State) -> Result<Diagnostics> {
        let grad = self.tree.energy(s)?.potential_grad;
        geometric_diagnostics(team, &self.subtasks, s, grad.amax())
    }
}

struct Recorder<'a> {
    scenario: &'a Scenario,
    config: &'a SimConfig,
    log: TrajectoryLog,
}

impl Recorder<'_> {
    fn sample(&mut self, k: usize, s: &State, planner: &StepPlanner, v: Option<f64>) -> Result<()> {
        self.log
            .diagnostics
            .push(planner.diagnostics(&self.scenario.team, s)?);
        self.log.times.push(k as f64 * self.config.dt);
        self.log.states.push(s.clone());
        if let Some(v) = v {
            self.log.lyapunov.push(v);
        }
        Ok(())
    }
}

/// Full closed-loop rollout of `scenario` under the planner in `config`.
///
/// Barrier violations, non-finite states and other policy failures end the
/// run early; the log records where and why. Configuration problems are
/// returned as errors before any step is taken.
pub fn run(scenario: &Scenario, config: &SimConfig) -> Result<TrajectoryLog> {
    config.validate()?;
    check_dim(
        "initial state",
        scenario.team.joint_dim(),
        scenario.initial.dim(),
    )?;
    let moving = scenario.subtasks.iter().any(|s| s.goal_motion.is_some());
    let mut planner = StepPlanner::build(scenario, config, 0.0)?;
    let mut rec = Recorder {
        scenario,
        config,
        log: TrajectoryLog::new(&scenario.team, config.dt),
    };
    let mut state = scenario.initial.clone();
    rec.log.min_distance = min_pair_distance(&scenario.team, &state.x);

    let initial = (|| {
        let v = if config.monitor_lyapunov {
            Some(planner.lyapunov(&state)?)
        } else {
            None
        };
        rec.sample(0, &state, &planner, v)?;
        Ok::<_, RmpError>(v)
    })();
    let mut v_prev = match initial {
        Ok(v) => v,
        Err(e) => {
            rec.log.termination = Termination::from_error(0, e);
            return Ok(rec.log);
        }
    };

    for k in 0..config.steps() {
        let outcome = (|| -> Result<()> {
            if moving && k > 0 {
                planner = StepPlanner::build(scenario, config, k as f64 * config.dt)?;
                if let Some(prev) = v_prev {
                    let v = planner.lyapunov(&state)?;
                    rec.log.goal_work += v - prev;
                    v_prev = Some(v);
                }
            }
            let next = step(
                |s| planner.accel(s, k as u64),
                &state,
                config.dt,
                config.integrator,
            )?;
            if !next.is_finite() {
                return Err(RmpError::NonFinite {
                    what: format!("state after step {k}"),
                });
            }
            state = next;
            rec.log.steps_completed = k + 1;
            rec.log.min_distance = rec
                .log
                .min_distance
                .min(min_pair_distance(&scenario.team, &state.x));
            let v = match v_prev {
                Some(prev) => {
                    let v = planner.lyapunov(&state)?;
                    if v - prev > rec.log.max_lyapunov_increase {
                        rec.log.max_lyapunov_increase = v - prev;
                        rec.log.max_lyapunov_increase_step = Some(k);
                    }
                    v_prev = Some(v);
                    Some(v)
                }
                None => None,
            };
            if (k + 1) % config.cadence == 0 {
                rec.sample(k + 1, &state, &planner, v)?;
            }
            Ok(())
        })();
        if let Err(e) = outcome {
            rec.log.termination = Termination::from_error(k, e);
            break;
        }
    }
    Ok(rec.log)
}

/// Rollout under an arbitrary joint acceleration law. Diagnostics use the
/// scenario's subtasks; no Lyapunov function is monitored.
pub fn run_with<F>(scenario: &Scenario, config: &SimConfig, mut accel: F) -> Result<TrajectoryLog>
where
    F: FnMut(&State) -> Result<DVector<f64>>,
{
    config.validate()?;
    check_dim(
        "initial state",
        scenario.team.joint_dim(),
        scenario.initial.dim(),
    )?;
    let planner = StepPlanner::build(
        scenario,
        &SimConfig {
            mode: PlannerMode::Centralized,
            ..config.clone()
        },
        0.0,
    )?;
    let mut rec = Recorder {
        scenario,
        config,
        log: TrajectoryLog::new(&scenario.team, config.dt),
    };
    let mut state = scenario.initial.clone();
    rec.log.min_distance = min_pair_distance(&scenario.team, &state.x);
    if let Err(e) = rec.sample(0, &state, &planner, None) {
        rec.log.termination = Termination::from_error(0, e);
        return Ok(rec.log);
    }
    for k in 0..config.steps() {
        let outcome = (|| -> Result<()> {
            let next = step(&mut accel, &state, config.dt, config.integrator)?;
            if !next.is_finite() {
                return Err(RmpError::NonFinite {
                    what: format!("state after step {k}"),
                });
            }
            state = next;
            rec.log.steps_completed = k + 1;
            rec.log.min_distance = rec
                .log
                .min_distance
                .min(min_pair_distance(&scenario.team, &state.x));
            if (k + 1) % config.cadence == 0 {
                rec.sample(k + 1, &state, &planner, None)?;
            }
            Ok(())
        })();
        if let Err(e) = outcome {
            rec.log.termination = Termination::from_error(k, e);
            break;
        }
    }
    Ok(rec.log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leaves::{DamperParams, DistancePreservationAParams};
    use crate::team::LeafPolicy;
    use std::f64::consts::PI;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn zero_policy_step() {
        let s = State::from_slices(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        for integ in [Integrator::Rk4, Integrator::SemiImplicitEuler] {
            let n = step(|_| Ok(DVector::zeros(2)), &s, 0.01, integ).unwrap();
            assert!((n.x - v(&[0.01, 0.0])).amax() < 1e-15);
        }
    }

    #[test]
    fn rk4_harmonic_period() {
        let dt = 0.01;
        let steps = (2.0 * PI / dt).round() as usize;
        let h = 2.0 * PI / steps as f64;
        let mut s = State::from_slices(&[1.0], &[0.0]).unwrap();
        for _ in 0..steps {
            s = step(|st| Ok(-&st.x), &s, h, Integrator::Rk4).unwrap();
        }
        assert!((s.x[0] - 1.0).abs() < 1e-8 && s.xdot[0].abs() < 1e-8);
    }

    #[test]
    fn semi_implicit_euler_energy_bounded() {
        let dt = 0.01;
        let steps = (2.0 * PI / dt).round() as usize;
        let mut s = State::from_slices(&[1.0], &[0.0]).unwrap();
        let mut worst = 0.0_f64;
        for _ in 0..steps {
            s = step(|st| Ok(-&st.x), &s, dt, Integrator::SemiImplicitEuler).unwrap();
            let e = 0.5 * (s.x[0] * s.x[0] + s.xdot[0] * s.xdot[0]);
            worst = worst.max((e - 0.5).abs());
        }
        assert!(worst <= dt, "drift {worst}");
    }

    #[test]
    fn bad_dt_rejected() {
        let s = State::zeros(1);
        assert!(step(|_| Ok(DVector::zeros(1)), &s, 0.0, Integrator::Rk4).is_err());
        assert!(SimConfig::new(0.1, 0.05).validate().is_err());
    }

    #[test]
    fn sample_count() {
        let mut c = SimConfig::new(0.01, 1.0);
        assert_eq!(c.steps(), 100);
        c.cadence = 7;
        assert_eq!(c.samples(), 15);
    }

    fn scenario(initial: State, subtasks: Vec<SubtaskAssignment>) -> Scenario {
        let team = RobotTeamSpec::planar(initial.dim() / 2).unwrap();
        Scenario::new("test", team, initial, subtasks).unwrap()
    }

    #[test]
    fn damper_lyapunov_and_static_equilibrium() {
        let damper = |i| {
            SubtaskAssignment::new(
                vec![i],
                LeafPolicy::Damper(DamperParams { c: 1.0, eta: 1.0 }),
            )
        };
        let sc = scenario(
            State::from_slices(&[0.0, 0.0], &[1.0, 0.0]).unwrap(),
            vec![damper(1)],
        );
        let tree = build_rmp_tree(&sc.team, &sc.subtasks, TreeShape::Grouped).unwrap();
        assert!((lyapunov_centralized(&tree, &sc.initial).unwrap() - 0.5).abs() < 1e-15);

        let edge = SubtaskAssignment::new(
            vec![1, 2],
            LeafPolicy::DistPresA(DistancePreservationAParams {
                distance: 1.0,
                c: 1.0,
                alpha: 1.0,
                eta: 2.0,
            }),
        );
        let tree = build_rmp_tree(
            &RobotTeamSpec::planar(2).unwrap(),
            std::slice::from_ref(&edge),
            TreeShape::Grouped,
        )
        .unwrap();
        let s = State::at_rest(v(&[0.0, 0.0, 1.5, 0.0]));
        assert!((lyapunov_centralized(&tree, &s).unwrap() - 0.125).abs() < 1e-15);

        let rest = State::at_rest(v(&[0.0, 0.0, 1.0, 0.0]));
        let sc = scenario(rest.clone(), vec![edge, damper(1), damper(2)]);
        let log = run(&sc, &SimConfig::new(0.01, 1.0)).unwrap();
        assert!(log.termination.is_completed());
        assert_eq!(log.len(), 101);
        for s in &log.states {
            assert_eq!(s, &rest);
        }
        assert_eq!(log.lyapunov.iter().cloned().fold(0.0, f64::max), 0.0);
    }

    #[test]
    fn diagnostics_examples() {
        let sc = scenario(State::at_rest(v(&[0.0, 0.0, 1.0, 0.0])), vec![]);
        let d = diagnostics(&sc, 0.0, &sc.initial).unwrap();
        assert_eq!(d.min_distance, 1.0);
        assert_eq!(d.max_speed, 0.0);
        assert!(d.edge_errors.is_empty());
    }

    #[test]
    fn runs_are_deterministic() {
        let edge = SubtaskAssignment::new(
            vec![1, 2],
            LeafPolicy::DistPresA(DistancePreservationAParams {
                distance: 1.0,
                c: 1.0,
                alpha: 1.0,
                eta: 2.0,
            }),
        );
        let sc = scenario(
            State::from_slices(&[0.0, 0.0, 0.5, 0.1], &[0.1, 0.0, 0.0, -0.2]).unwrap(),
            vec![edge],
        );
        let mut c = SimConfig::new(0.01, 2.0);
        c.cadence = 10;
        let a = run(&sc, &c).unwrap();
        let b = run(&sc, &c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), c.samples());
        c.mode = PlannerMode::Decentralized;
        let d = run(&sc, &c).unwrap();
        assert!(d.termination.is_completed());
    }
}
