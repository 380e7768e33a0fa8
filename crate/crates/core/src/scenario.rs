//! Scenario files and the built-in scenarios.
//!
//! A scenario file is a JSON document:
//!
//! ```json
//! {
//!   "name": "two-robots",
//!   "robots": [
//!     { "id": 1, "position": [0.0, 0.0] },
//!     { "id": 2, "position": [1.0, 0.0], "velocity": [0.0, 0.1] }
//!   ],
//!   "subtasks": [
//!     { "participants": [1, 2], "kind": "dist_pres_a",
//!       "params": { "distance": 0.5, "c": 1.0, "alpha": 1.0, "eta": 2.0 } }
//!   ],
//!   "sim": { "dt": 0.01, "t_final": 5.0, "integrator": "rk4", "mode": "centralized" },
//!   "outputs": { "plot": true }
//! }
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RmpError};
use crate::leaves::*;
use crate::oracle::{Normalization, PotentialGraph};
use crate::rmp::State;
use crate::sim::{PlannerMode, SimConfig};
use crate::team::{GoalMotion, LeafPolicy, RobotTeamSpec, SubtaskAssignment};
use crate::RobotId;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotEntry {
    pub id: RobotId,
    pub position: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputOptions {
    /// Output directory; the CLI flag and `RMPSIM_OUT` take precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub plot: bool,
}

/// Baseline controller run alongside the planner for comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceLaw {
    /// Degree-normalized formation controller.
    FormationController,
    /// `−∇E − ηẋ`, optionally degree-normalized.
    PotentialController,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceController {
    pub law: ReferenceLaw,
    pub eta: f64,
    #[serde(default = "default_normalization")]
    pub normalization: Normalization,
}

fn default_normalization() -> Normalization {
    Normalization::DegreeNormalized
}

/// On-disk form of a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, serde_json::Value>,
    pub robots: Vec<RobotEntry>,
    #[serde(default)]
    pub subtasks: Vec<SubtaskAssignment>,
    pub sim: SimConfig,
    #[serde(default)]
    pub outputs: OutputOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceController>,
}

/// A scenario parse failure with its location in the source text.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioError {
    pub source_name: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{}:{l}:{c}: {}", self.source_name, self.message),
            (Some(l), None) => write!(f, "{}:{l}: {}", self.source_name, self.message),
            _ => write!(f, "{}: {}", self.source_name, self.message),
        }
    }
}

impl std::error::Error for ScenarioError {}

/// Validated in-memory scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub metadata: BTreeMap<String, serde_json::Value>,
    pub team: RobotTeamSpec,
    pub initial: State,
    pub subtasks: Vec<SubtaskAssignment>,
    pub sim: SimConfig,
    pub outputs: OutputOptions,
    pub reference: Option<ReferenceController>,
}

impl Scenario {
    /// Scenario with default simulation and output settings.
    pub fn new(
        name: impl Into<String>,
        team: RobotTeamSpec,
        initial: State,
        subtasks: Vec<SubtaskAssignment>,
    ) -> Result<Self> {
        let s = Self {
            name: name.into(),
            metadata: BTreeMap::new(),
            team,
            initial,
            subtasks,
            sim: SimConfig::default(),
            outputs: OutputOptions::default(),
            reference: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        crate::error::check_dim("initial state", self.team.joint_dim(), self.initial.dim())?;
        if !self.initial.is_finite() {
            return Err(RmpError::Config("initial state is not finite".into()));
        }
        for (k, s) in self.subtasks.iter().enumerate() {
            s.validate(&self.team)
                .map_err(|e| RmpError::Config(format!("subtasks[{k}] ({}): {e}", s.label())))?;
        }
        self.sim.validate()?;
        if let Some(r) = &self.reference {
            self.reference_graph(r)?;
        }
        Ok(())
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        let dim = file
            .robots
            .first()
            .map(|r| r.position.len())
            .ok_or_else(|| RmpError::Config("scenario has no robots".into()))?;
        let team = RobotTeamSpec::new(file.robots.iter().map(|r| r.id), dim)?;
        if team.len() != file.robots.len() {
            return Err(RmpError::Config("robot ids must be distinct".into()));
        }
        let mut x = DVector::zeros(team.joint_dim());
        let mut xdot = DVector::zeros(team.joint_dim());
        for (k, r) in file.robots.iter().enumerate() {
            let vel = r.velocity.clone().unwrap_or_else(|| vec![0.0; dim]);
            if r.position.len() != dim || vel.len() != dim {
                return Err(RmpError::Config(format!(
                    "robots[{k}] (id {}): expected {dim} coordinates",
                    r.id
                )));
            }
            let slot = team.slot(r.id)?;
            x.rows_mut(slot * dim, dim).copy_from_slice(&r.position);
            xdot.rows_mut(slot * dim, dim).copy_from_slice(&vel);
        }
        let s = Self {
            name: file.name,
            metadata: file.metadata,
            team,
            initial: State { x, xdot },
            subtasks: file.subtasks,
            sim: file.sim,
            outputs: file.outputs,
            reference: file.reference,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn to_file(&self) -> ScenarioFile {
        let n = self.team.robot_dim();
        let robots = self
            .team
            .robots()
            .iter()
            .enumerate()
            .map(|(slot, &id)| {
                let v: Vec<f64> = self
                    .initial
                    .xdot
                    .rows(slot * n, n)
                    .iter()
                    .copied()
                    .collect();
                RobotEntry {
                    id,
                    position: self.initial.x.rows(slot * n, n).iter().copied().collect(),
                    velocity: v.iter().any(|c| *c != 0.0).then_some(v),
                }
            })
            .collect();
        ScenarioFile {
            name: self.name.clone(),
            metadata: self.metadata.clone(),
            robots,
            subtasks: self.subtasks.clone(),
            sim: self.sim.clone(),
            outputs: self.outputs.clone(),
            reference: self.reference.clone(),
        }
    }

    /// Parses and validates a scenario document. `source_name` is used in
    /// error messages.
    pub fn parse(text: &str, source_name: &str) -> std::result::Result<Self, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError {
            source_name: source_name.to_string(),
            line: Some(e.line()).filter(|l| *l > 0),
            column: Some(e.column()).filter(|_| e.line() > 0),
            message: e
                .to_string()
                .split(" at line ")
                .next()
                .unwrap_or("")
                .to_string(),
        })?;
        Self::from_file(file).map_err(|e| {
            let message = e.to_string();
            ScenarioError {
                source_name: source_name.to_string(),
                line: locate(text, &message),
                column: None,
                message,
            }
        })
    }

    pub fn load(path: &Path) -> std::result::Result<Self, ScenarioError> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError {
            source_name: name.clone(),
            line: None,
            column: None,
            message: format!("cannot read scenario: {e}"),
        })?;
        Self::parse(&text, &name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("scenario serializes")
    }

    /// Potential graph of the scenario's formation edges for a reference
    /// controller.
    pub fn reference_graph(&self, r: &ReferenceController) -> Result<PotentialGraph> {
        let normalization = match r.law {
            ReferenceLaw::FormationController => Normalization::DegreeNormalized,
            ReferenceLaw::PotentialController => r.normalization,
        };
        let mut g = PotentialGraph::new(
            self.team.robots(),
            self.team.robot_dim(),
            r.eta,
            normalization,
        )?;
        let mut seen = Vec::new();
        for s in &self.subtasks {
            let p = s.sorted_participants();
            let potential = match &s.policy {
                LeafPolicy::DistPresA(q) => PairPotential::quadratic(q.distance).scaled(q.alpha),
                LeafPolicy::DistPresB(q) => q.pair_potential(),
                LeafPolicy::PairwisePotential(q) => q.potential.clone(),
                _ => continue,
            };
            if seen.contains(&p) {
                continue;
            }
            g.add_edge(p[0], p[1], potential)?;
            seen.push(p);
        }
        if seen.is_empty() {
            return Err(RmpError::Config(
                "reference controller needs formation edges".into(),
            ));
        }
        Ok(g)
    }

    /// Joint acceleration of the reference controller.
    pub fn reference_accel(&self, r: &ReferenceController, s: &State) -> Result<DVector<f64>> {
        let g = self.reference_graph(r)?;
        match r.law {
            ReferenceLaw::FormationController => g.formation_controller(s),
            ReferenceLaw::PotentialController => g.potential_controller(s),
        }
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "fig3a" => formation_preservation(FormationEdges::DistanceA),
            "fig3b" => formation_preservation(FormationEdges::DistanceB),
            "fig7" => controller_equivalence(),
            "fig8-centralized" => goal_swap(PlannerMode::Centralized),
            "fig8-decentralized" => goal_swap(PlannerMode::Decentralized),
            "cyclic-pursuit" => cyclic_pursuit(),
            other => Err(RmpError::Config(format!(
                "unknown built-in scenario `{other}`; expected one of {}",
                BUILTIN_NAMES.join(", ")
            ))),
        }
    }

    /// Free-text description from the metadata, if any.
    pub fn description(&self) -> Option<&str> {
        self.metadata.get("description").and_then(|v| v.as_str())
    }
}

/// Best-effort line of the first subtask or robot named in `message`.
fn locate(text: &str, message: &str) -> Option<usize> {
    for key in ["subtasks", "robots"] {
        let tag = format!("{key}[");
        let Some(start) = message.find(&tag) else {
            continue;
        };
        let rest = &message[start + tag.len()..];
        let k: usize = rest.split(']').next()?.parse().ok()?;
        let value: serde_json::Value = serde_json::from_str(text).ok()?;
        let count = value.get(key)?.as_array()?.len();
        if k >= count {
            return None;
        }
        // Line of the k-th element: scan for top-level objects inside the array.
        let array_start = text.find(&format!("\"{key}\""))?;
        let mut depth = 0i32;
        let mut seen = 0usize;
        let mut in_string = false;
        let mut escaped = false;
        let mut started = false;
        for (offset, ch) in text[array_start..].char_indices() {
            if in_string {
                match (escaped, ch) {
                    (true, _) => escaped = false,
                    (false, '\\') => escaped = true,
                    (false, '"') => in_string = false,
                    _ => {}
                }
                continue;
            }
            match ch {
                '"' => in_string = true,
                '[' | '{' => {
                    if ch == '[' && !started {
                        started = true;
                        depth = 1;
                        continue;
                    }
                    if started && depth == 1 && ch == '{' {
                        if seen == k {
                            let pos = array_start + offset;
                            return Some(text[..pos].matches('\n').count() + 1);
                        }
                        seen += 1;
                    }
                    depth += 1;
                }
                ']' | '}' => {
                    depth -= 1;
                    if started && depth == 0 {
                        return None;
                    }
                }
                _ => {}
            }
        }
    }
    None
}

pub const BUILTIN_NAMES: [&str; 6] = [
    "fig3a",
    "fig3b",
    "fig7",
    "fig8-centralized",
    "fig8-decentralized",
    "cyclic-pursuit",
];

/// Vertices of a regular polygon at angles `90° + k·360°/n`.
pub fn regular_polygon(n: usize, radius: f64, center: [f64; 2]) -> Vec<[f64; 2]> {
    (0..n)
        .map(|k| {
            let th = PI / 2.0 + 2.0 * PI * k as f64 / n as f64;
            [center[0] + radius * th.cos(), center[1] + radius * th.sin()]
        })
        .collect()
}

fn chord(n: usize, radius: f64, i: usize, j: usize) -> f64 {
    let p = regular_polygon(n, radius, [0.0, 0.0]);
    ((p[i][0] - p[j][0]).powi(2) + (p[i][1] - p[j][1]).powi(2)).sqrt()
}

fn at_rest(points: &[[f64; 2]]) -> State {
    State::at_rest(DVector::from_iterator(
        points.len() * 2,
        points.iter().flat_map(|p| p.iter().copied()),
    ))
}

fn metadata(pairs: &[(&str, &str)]) -> BTreeMap<String, serde_json::Value> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), serde_json::Value::String(v.to_string())))
        .collect()
}

fn complete_pairs(ids: &[RobotId]) -> Vec<(RobotId, RobotId)> {
    let mut out = Vec::new();
    for (k, &i) in ids.iter().enumerate() {
        for &j in &ids[k + 1..] {
            out.push((i, j));
        }
    }
    out
}

fn damper(id: RobotId) -> SubtaskAssignment {
    SubtaskAssignment::new(
        vec![id],
        LeafPolicy::Damper(DamperParams { c: 0.01, eta: 1.0 }),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum FormationEdges {
    DistanceA,
    DistanceB,
}

/// Formation circumradius and leader goal for the pentagon preservation
/// scenarios.
pub const PENTAGON_RADIUS: f64 = 0.5;
pub const PENTAGON_GOAL: [f64; 2] = [0.5, 1.0];

fn formation_preservation(edges: FormationEdges) -> Result<Scenario> {
    let n = 5;
    let ids: Vec<RobotId> = (1..=n).collect();
    let team = RobotTeamSpec::planar(n)?;
    let mut subtasks = Vec::new();
    for (i, j) in complete_pairs(&ids) {
        let d = chord(n, PENTAGON_RADIUS, i - 1, j - 1);
        let policy = match edges {
            FormationEdges::DistanceA => LeafPolicy::DistPresA(DistancePreservationAParams {
                distance: d,
                c: 1.0,
                alpha: 1.0,
                eta: 2.0,
            }),
            FormationEdges::DistanceB => LeafPolicy::DistPresB(DistancePreservationBParams {
                distance: d,
                c: 1.0,
                eta: 2.0,
                potential: PotentialForm::Quadratic,
            }),
        };
        subtasks.push(SubtaskAssignment::new(vec![i, j], policy));
    }
    subtasks.push(SubtaskAssignment::new(
        vec![1],
        LeafPolicy::GoalAttractorA(GoalAttractorAParams {
            goal: PENTAGON_GOAL.to_vec(),
            w_u: 10.0,
            w_l: 1.0,
            sigma: 0.1,
            alpha: 10.0,
            beta: 0.1,
            eta: 1.0,
        }),
    ));
    subtasks.extend(ids.iter().map(|&i| damper(i)));
    let (name, desc) = match edges {
        FormationEdges::DistanceA => (
            "fig3a",
            "pentagon formation preservation, distance-preservation RMPa edges",
        ),
        FormationEdges::DistanceB => (
            "fig3b",
            "pentagon formation preservation, distance-preservation RMPb edges",
        ),
    };
    let mut s = Scenario::new(
        name,
        team,
        at_rest(&regular_polygon(n, PENTAGON_RADIUS, [0.0, 0.0])),
        subtasks,
    )?;
    s.metadata = metadata(&[("description", desc), ("leader", "1")]);
    // RMPb edges add damping on every robot, so the team needs far longer
    // to carry the leader to the goal.
    let t_final = match edges {
        FormationEdges::DistanceA => 60.0,
        FormationEdges::DistanceB => 300.0,
    };
    s.sim = SimConfig {
        cadence: 10,
        ..SimConfig::new(0.01, t_final)
    };
    s.outputs.plot = true;
    Ok(s)
}

fn controller_equivalence() -> Result<Scenario> {
    let n = 5;
    let ids: Vec<RobotId> = (1..=n).collect();
    let team = RobotTeamSpec::planar(n)?;
    let subtasks = complete_pairs(&ids)
        .into_iter()
        .map(|(i, j)| {
            SubtaskAssignment::new(
                vec![i, j],
                LeafPolicy::DistPresB(DistancePreservationBParams {
                    distance: chord(n, 0.4, i - 1, j - 1),
                    c: 1.0,
                    eta: 2.0,
                    potential: PotentialForm::Quadratic,
                }),
            )
        })
        .collect();
    let mut s = Scenario::new(
        "fig7",
        team,
        at_rest(&regular_polygon(n, 1.0, [0.0, 0.0])),
        subtasks,
    )?;
    s.metadata = metadata(&[(
        "description",
        "pentagon contraction from radius 1 to 0.4; RMP tree against the degree-normalized formation controller",
    )]);
    s.sim = SimConfig {
        cadence: 10,
        ..SimConfig::new(0.01, 13.2)
    };
    s.reference = Some(ReferenceController {
        law: ReferenceLaw::FormationController,
        eta: 2.0,
        normalization: Normalization::DegreeNormalized,
    });
    s.outputs.plot = true;
    Ok(s)
}

fn goal_swap(mode: PlannerMode) -> Result<Scenario> {
    let team = RobotTeamSpec::planar(3)?;
    let start: Vec<[f64; 2]> = [90.0_f64, 210.0, 330.0]
        .iter()
        .map(|deg| {
            let th = deg.to_radians();
            [1.5 * th.cos(), 1.5 * th.sin()]
        })
        .collect();
    let mut subtasks: Vec<SubtaskAssignment> = complete_pairs(&[1, 2, 3])
        .into_iter()
        .map(|(i, j)| {
            SubtaskAssignment::new(
                vec![i, j],
                LeafPolicy::CollisionAvoidance(CollisionAvoidanceParams {
                    safety_distance: 0.1,
                    alpha: 1e-5,
                    epsilon: 1e-5,
                    eta: 0.2,
                }),
            )
        })
        .collect();
    for (k, p) in start.iter().enumerate() {
        subtasks.push(SubtaskAssignment::new(
            vec![k + 1],
            LeafPolicy::GoalAttractorA(GoalAttractorAParams {
                goal: vec![-p[0], -p[1]],
                w_u: 10.0,
                w_l: 0.01,
                sigma: 0.1,
                alpha: 1.0,
                beta: 1.0,
                eta: 1.0,
            }),
        ));
    }
    let name = match mode {
        PlannerMode::Centralized => "fig8-centralized",
        PlannerMode::Decentralized => "fig8-decentralized",
    };
    let mut s = Scenario::new(name, team, at_rest(&start), subtasks)?;
    s.metadata = metadata(&[
        (
            "description",
            "three robots swap to antipodal goals while avoiding each other",
        ),
        ("geometry", "figure-inspired"),
    ]);
    s.sim = SimConfig {
        mode,
        cadence: 10,
        ..SimConfig::new(0.01, 20.0)
    };
    s.outputs.plot = true;
    Ok(s)
}

/// Angular velocity of the pursuit goals (rad/s).
pub const PURSUIT_ANGULAR_VELOCITY: f64 = 0.06;

fn cyclic_pursuit() -> Result<Scenario> {
    let pursuers: Vec<RobotId> = (1..=5).collect();
    let crossers: Vec<RobotId> = vec![6, 7, 8];
    let team = RobotTeamSpec::planar(8)?;
    let mut start = regular_polygon(5, 1.0, [0.0, 0.0]);
    let triangle_radius = 0.25;
    let crossing_start = [-2.5, 0.0];
    let crossing_goal = [2.5, 0.0];
    // Leader first, pointing along the direction of travel.
    for k in 0..3 {
        let th = 2.0 * PI * k as f64 / 3.0;
        start.push([
            crossing_start[0] + triangle_radius * th.cos(),
            crossing_start[1] + triangle_radius * th.sin(),
        ]);
    }
    let side = triangle_radius * 3.0_f64.sqrt();

    let mut subtasks = Vec::new();
    for (i, j) in complete_pairs(team.robots()) {
        subtasks.push(SubtaskAssignment::new(
            vec![i, j],
            LeafPolicy::CollisionAvoidance(CollisionAvoidanceParams {
                safety_distance: 0.18,
                alpha: 1e-5,
                epsilon: 1e-8,
                eta: 1.0,
            }),
        ));
    }
    for (k, &id) in pursuers.iter().enumerate() {
        let phase = PI / 2.0 + 2.0 * PI * k as f64 / 5.0;
        let motion = GoalMotion {
            center: vec![0.0, 0.0],
            radius: 1.0,
            angular_velocity: PURSUIT_ANGULAR_VELOCITY,
            phase,
        };
        subtasks.push(
            SubtaskAssignment::new(
                vec![id],
                LeafPolicy::GoalAttractorA(GoalAttractorAParams {
                    goal: motion.goal_at(0.0),
                    w_u: 10.0,
                    w_l: 0.01,
                    sigma: 0.1,
                    alpha: 1.0,
                    beta: 1.0,
                    eta: 1.0,
                }),
            )
            .with_goal_motion(motion),
        );
    }
    for (i, j) in complete_pairs(&crossers) {
        subtasks.push(SubtaskAssignment::new(
            vec![i, j],
            LeafPolicy::DistPresA(DistancePreservationAParams {
                distance: side,
                c: 10.0,
                alpha: 1.0,
                eta: 2.0,
            }),
        ));
    }
    subtasks.push(SubtaskAssignment::new(
        vec![crossers[0]],
        LeafPolicy::GoalAttractorA(GoalAttractorAParams {
            goal: vec![crossing_goal[0] + triangle_radius, crossing_goal[1]],
            w_u: 10.0,
            w_l: 1.0,
            sigma: 0.1,
            alpha: 10.0,
            beta: 1.0,
            eta: 2.0,
        }),
    ));
    let mut s = Scenario::new("cyclic-pursuit", team, at_rest(&start), subtasks)?;
    s.metadata = metadata(&[
        (
            "description",
            "five robots pursue goals moving on the unit circle; a three-robot triangle passes through",
        ),
        ("geometry", "figure-inspired"),
    ]);
    s.sim = SimConfig {
        mode: PlannerMode::Decentralized,
        cadence: 10,
        ..SimConfig::new(0.01, 60.0)
    };
    s.outputs.plot = true;
    Ok(s)
}
