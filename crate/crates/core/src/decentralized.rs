//! Partial RMPflow: one single-level RMP-tree per robot, evaluated from the
//! robot's own state and a snapshot of its neighbors.
//!
//! Robot `i` sees subtask `k` through the partial Jacobian `Jᵢ = ∂ψ_k/∂qᵢ`.
//! Leaf positions come from the full map, leaf velocities from robot `i`'s
//! own motion only (`żᵢ = Jᵢ q̇ᵢ`), and leaves use the half-`Ġ` force
//! `f = −∇Φ − Bżᵢ − ½ Ġ żᵢ` with inertia `M = G + Ξ` at `(z, żᵢ)`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result, RmpError};
use crate::gds::{evaluate_partial_leaf, GdsLeaf};
use crate::rmp::{resolve, CanonicalRmp, NaturalRmp, State};
use crate::task_map::TaskMap;
use crate::team::{neighbors, validate_all, RobotTeamSpec, SubtaskAssignment};
use crate::RobotId;

/// How a robot accounts for its neighbors' motion inside a leaf.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartialFlowVariant {
    /// Neighbors are static: `J̇ᵢ q̇ᵢ` and `Ġ` are taken along robot `i`'s
    /// motion alone.
    Literal,
    /// `J̇ᵢ q̇ᵢ` and `Ġ` are taken along the motion of all participants, using
    /// the neighbor velocities in the snapshot. With this choice the team
    /// energy `Σ Kᵢ + Φ` decays at exactly the rate set by the damping.
    #[default]
    Compensated,
}

/// One robot's copy of a subtask leaf.
#[derive(Clone, Debug)]
pub struct ForestLeaf {
    pub subtask: usize,
    pub label: String,
    participants: Vec<RobotId>,
    own_slot: usize,
    map: Arc<dyn TaskMap>,
    leaf: Arc<dyn GdsLeaf>,
}

impl ForestLeaf {
    pub fn participants(&self) -> &[RobotId] {
        &self.participants
    }

    pub fn policy(&self) -> &Arc<dyn GdsLeaf> {
        &self.leaf
    }
}

#[derive(Clone, Debug)]
pub struct RobotTree {
    pub robot: RobotId,
    pub leaves: Vec<ForestLeaf>,
    pub neighbors: BTreeSet<RobotId>,
}

#[derive(Clone, Debug)]
pub struct RmpForest {
    team: RobotTeamSpec,
    trees: Vec<RobotTree>,
    /// One shared instance per subtask, used for the team potential.
    shared: Vec<(Vec<RobotId>, Arc<dyn TaskMap>, Arc<dyn GdsLeaf>)>,
}

/// States of a robot's neighbors, all taken at the same control step.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborView {
    pub robot: RobotId,
    pub step: u64,
    states: BTreeMap<RobotId, State>,
}

impl NeighborView {
    pub fn new(robot: RobotId, step: u64) -> Self {
        Self {
            robot,
            step,
            states: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, id: RobotId, state: State) {
        self.states.insert(id, state);
    }

    pub fn get(&self, id: RobotId) -> Option<&State> {
        self.states.get(&id)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Leaf state seen by one robot, plus the pieces needed for its pullback.
#[derive(Clone, Debug)]
pub struct PartialLeafState {
    /// `(z, żᵢ)`
    pub state: State,
    /// `ż` of the full participant motion.
    pub full_velocity: DVector<f64>,
    /// `Jᵢ`
    pub jacobian: DMatrix<f64>,
    stacked: State,
    own_velocity_only: DVector<f64>,
}

pub fn build_forest(team: &RobotTeamSpec, subtasks: &[SubtaskAssignment]) -> Result<RmpForest> {
    validate_all(team, subtasks)?;
    let n = team.robot_dim();
    let mut shared = Vec::with_capacity(subtasks.len());
    for s in subtasks {
        let (map, leaf) = s.instantiate(n)?;
        shared.push((s.sorted_participants(), map, leaf));
    }
    let trees = team
        .robots()
        .iter()
        .map(|&robot| RobotTree {
            robot,
            neighbors: neighbors(subtasks, robot),
            leaves: shared
                .iter()
                .enumerate()
                .filter_map(|(k, (ids, map, leaf))| {
                    ids.iter()
                        .position(|&p| p == robot)
                        .map(|own_slot| ForestLeaf {
                            subtask: k,
                            label: subtasks[k].label(),
                            participants: ids.clone(),
                            own_slot,
                            map: map.clone(),
                            leaf: leaf.clone(),
                        })
                })
                .collect(),
        })
        .collect();
    Ok(RmpForest {
        team: team.clone(),
        trees,
        shared,
    })
}

impl RmpForest {
    pub fn team(&self) -> &RobotTeamSpec {
        &self.team
    }

    pub fn tree(&self, robot: RobotId) -> Result<&RobotTree> {
        Ok(&self.trees[self.team.slot(robot)?])
    }

    pub fn trees(&self) -> &[RobotTree] {
        &self.trees
    }

    /// Snapshot of `robot`'s neighbors from a joint state.
    pub fn snapshot(&self, robot: RobotId, joint: &State, step: u64) -> Result<NeighborView> {
        check_dim("joint state", self.team.joint_dim(), joint.dim())?;
        let mut view = NeighborView::new(robot, step);
        for &j in &self.tree(robot)?.neighbors {
            view.insert(j, self.robot_state(joint, j)?);
        }
        Ok(view)
    }

    fn robot_state(&self, joint: &State, id: RobotId) -> Result<State> {
        Ok(State {
            x: self.team.block(&joint.x, id)?,
            xdot: self.team.block(&joint.xdot, id)?,
        })
    }

    fn leaf_state(
        &self,
        robot: RobotId,
        leaf: &ForestLeaf,
        own: &State,
        view: &NeighborView,
    ) -> Result<PartialLeafState> {
        let n = self.team.robot_dim();
        check_dim("own robot state", n, own.dim())?;
        let m = leaf.participants.len() * n;
        let mut q = DVector::zeros(m);
        let mut qd = DVector::zeros(m);
        let mut own_only = DVector::zeros(m);
        for (slot, &id) in leaf.participants.iter().enumerate() {
            let s = if id == robot {
                own
            } else {
                view.get(id)
                    .ok_or(RmpError::StaleView { robot, missing: id })?
            };
            check_dim("neighbor state", n, s.dim())?;
            q.rows_mut(slot * n, n).copy_from(&s.x);
            qd.rows_mut(slot * n, n).copy_from(&s.xdot);
        }
        own_only.rows_mut(leaf.own_slot * n, n).copy_from(&own.xdot);
        let z = leaf.map.value(&q)?;
        let j = leaf.map.jacobian(&q)?;
        let j_own = j.columns(leaf.own_slot * n, n).into_owned();
        let zdot_own = &j_own * &own.xdot;
        Ok(PartialLeafState {
            state: State {
                x: z,
                xdot: zdot_own,
            },
            full_velocity: &j * &qd,
            jacobian: j_own,
            stacked: State { x: q, xdot: qd },
            own_velocity_only: own_only,
        })
    }

    fn check_view(&self, robot: RobotId, view: &NeighborView) -> Result<()> {
        if view.robot != robot {
            return Err(RmpError::Config(format!(
                "neighbor view belongs to robot {}, not {robot}",
                view.robot
            )));
        }
        Ok(())
    }

    /// `(z_k, żᵢ)` for the `leaf_index`-th leaf of `robot`'s tree.
    pub fn decentralized_pushforward(
        &self,
        robot: RobotId,
        leaf_index: usize,
        own: &State,
        view: &NeighborView,
    ) -> Result<State> {
        self.check_view(robot, view)?;
        let tree = self.tree(robot)?;
        let leaf = tree
            .leaves
            .get(leaf_index)
            .ok_or_else(|| RmpError::Tree(format!("robot {robot} has no leaf {leaf_index}")))?;
        Ok(self.leaf_state(robot, leaf, own, view)?.state)
    }

    /// Partial leaf states of every leaf in `robot`'s tree.
    pub fn leaf_states(
        &self,
        robot: RobotId,
        own: &State,
        view: &NeighborView,
    ) -> Result<Vec<PartialLeafState>> {
        self.check_view(robot, view)?;
        self.tree(robot)?
            .leaves
            .iter()
            .map(|l| {
                self.leaf_state(robot, l, own, view)
                    .map_err(|e| e.at_node(format!("robot{robot}/{}", l.label)))
            })
            .collect()
    }

    /// Root RMP of `robot`'s tree in natural form.
    pub fn evaluate_robot(
        &self,
        robot: RobotId,
        own: &State,
        view: &NeighborView,
        variant: PartialFlowVariant,
    ) -> Result<NaturalRmp> {
        self.check_view(robot, view)?;
        let tree = self.tree(robot)?;
        let n = self.team.robot_dim();
        let mut root = NaturalRmp::zeros(n);
        for leaf in &tree.leaves {
            let path = || format!("robot{robot}/{}", leaf.label);
            let ls = self
                .leaf_state(robot, leaf, own, view)
                .map_err(|e| e.at_node(path()))?;
            let (jdot_v, transport) = match variant {
                PartialFlowVariant::Literal => (
                    leaf.map.jacobian_dot(
                        &ls.stacked.x,
                        &ls.own_velocity_only,
                        &ls.own_velocity_only,
                    ),
                    None,
                ),
                PartialFlowVariant::Compensated => (
                    leaf.map
                        .jacobian_dot(&ls.stacked.x, &ls.stacked.xdot, &ls.own_velocity_only),
                    Some(&ls.full_velocity),
                ),
            };
            let jdot_v = jdot_v.map_err(|e| e.at_node(path()))?;
            let rmp = evaluate_partial_leaf(leaf.leaf.as_ref(), &ls.state, transport)
                .map_err(|e| e.at_node(path()))?;
            let jt = ls.jacobian.transpose();
            root.f += &jt * (&rmp.f - &rmp.m * jdot_v);
            root.m += &jt * &rmp.m * &ls.jacobian;
        }
        Ok(root)
    }

    /// `(M_root)† f_root` for one robot.
    pub fn compute_control_decentralized(
        &self,
        robot: RobotId,
        own: &State,
        view: &NeighborView,
        variant: PartialFlowVariant,
    ) -> Result<CanonicalRmp> {
        resolve(&self.evaluate_robot(robot, own, view, variant)?)
    }

    /// Synchronous team update: every robot snapshots its neighbors from the
    /// same joint state, then all controls are computed.
    pub fn joint_control(
        &self,
        joint: &State,
        step: u64,
        variant: PartialFlowVariant,
    ) -> Result<DVector<f64>> {
        check_dim("joint state", self.team.joint_dim(), joint.dim())?;
        let n = self.team.robot_dim();
        let mut a = DVector::zeros(self.team.joint_dim());
        for (slot, &robot) in self.team.robots().iter().enumerate() {
            let view = self.snapshot(robot, joint, step)?;
            let own = self.robot_state(joint, robot)?;
            let ai = self
                .compute_control_decentralized(robot, &own, &view, variant)?
                .a;
            a.rows_mut(slot * n, n).copy_from(&ai);
        }
        Ok(a)
    }

    /// `Kᵢ = ½ q̇ᵢᵀ G_rootⁱ q̇ᵢ` with `G_rootⁱ = Σ Jᵢᵀ G(z, żᵢ) Jᵢ`.
    pub fn kinetic_energy(&self, robot: RobotId, own: &State, view: &NeighborView) -> Result<f64> {
        let n = self.team.robot_dim();
        let mut g_root = DMatrix::zeros(n, n);
        for ls in self
            .tree(robot)?
            .leaves
            .iter()
            .zip(self.leaf_states(robot, own, view)?)
        {
            let (leaf, ls) = ls;
            let g = leaf.leaf.metric(&ls.state.x, &ls.state.xdot);
            g_root += ls.jacobian.transpose() * g * &ls.jacobian;
        }
        Ok(0.5 * own.xdot.dot(&(g_root * &own.xdot)))
    }

    /// Total potential `Φ = Σ_k Φ_k ∘ ψ_k`, each subtask counted once.
    pub fn potential(&self, joint: &State) -> Result<f64> {
        let mut total = 0.0;
        for (ids, map, leaf) in &self.shared {
            let coords = self.team.coordinates(ids)?;
            let q = DVector::from_iterator(coords.len(), coords.iter().map(|&c| joint.x[c]));
            let z = map.value(&q)?;
            leaf.check_domain(&z)?;
            total += leaf.potential(&z);
        }
        Ok(total)
    }

    /// `V = Σᵢ Kᵢ + Φ`.
    pub fn lyapunov(&self, joint: &State) -> Result<f64> {
        let mut v = self.potential(joint)?;
        for &robot in self.team.robots() {
            let view = self.snapshot(robot, joint, 0)?;
            let own = self.robot_state(joint, robot)?;
            v += self.kinetic_energy(robot, &own, &view)?;
        }
        Ok(v)
    }
}

/// Free-function form of [`RmpForest::lyapunov`].
pub fn lyapunov_decentralized(forest: &RmpForest, joint: &State) -> Result<f64> {
    forest.lyapunov(joint)
}
