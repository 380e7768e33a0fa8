//! RMP-trees and the RMPflow policy.
//!
//! Nodes are stored in insertion order, which is also a topological order:
//! a node can only be attached to a node that already exists. Every
//! evaluation runs a fresh forward pass whose node states live in a
//! [`TreePass`], so a tree can be shared across threads and evaluated
//! concurrently.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Result, RmpError};
use crate::gds::{evaluate_gds_leaf, GdsLeaf};
use crate::rmp::{accumulate_pullback, resolve, CanonicalRmp, NaturalRmp, State};
use crate::task_map::TaskMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
struct Node {
    name: String,
    dim: usize,
    parent: Option<(NodeId, Arc<dyn TaskMap>)>,
    leaf: Option<Arc<dyn GdsLeaf>>,
    children: Vec<NodeId>,
}

#[derive(Clone, Debug)]
pub struct RmpTree {
    nodes: Vec<Node>,
}

/// States and edge Jacobians from one forward pass.
#[derive(Clone, Debug)]
pub struct TreePass {
    pub states: Vec<State>,
    jacobians: Vec<Option<DMatrix<f64>>>,
    jdot_xdot: Vec<Option<DVector<f64>>>,
}

impl TreePass {
    pub fn state(&self, node: NodeId) -> &State {
        &self.states[node.0]
    }
}

/// Metric, damping and potential of the root node, pulled back from the
/// leaves through `G_u = Σ Jᵀ G_v J`, `B_u = Σ Jᵀ B_v J`, `Φ_u = Σ Φ_v ∘ ψ`.
#[derive(Clone, Debug, PartialEq)]
pub struct RootEnergy {
    pub metric: DMatrix<f64>,
    pub damping: DMatrix<f64>,
    pub potential: f64,
    pub potential_grad: DVector<f64>,
}

impl RootEnergy {
    pub fn kinetic(&self, xdot: &DVector<f64>) -> f64 {
        0.5 * xdot.dot(&(&self.metric * xdot))
    }

    /// `½ ẋᵀ G_root ẋ + Φ_root`.
    pub fn lyapunov(&self, xdot: &DVector<f64>) -> f64 {
        self.kinetic(xdot) + self.potential
    }
}

impl RmpTree {
    pub fn new(root_dim: usize) -> Self {
        Self::with_root_name(root_dim, "root")
    }

    pub fn with_root_name(root_dim: usize, name: impl Into<String>) -> Self {
        Self {
            nodes: vec![Node {
                name: name.into(),
                dim: root_dim,
                parent: None,
                leaf: None,
                children: Vec::new(),
            }],
        }
    }

    pub fn root(&self) -> NodeId {
        NodeId::ROOT
    }

    pub fn root_dim(&self) -> usize {
        self.nodes[0].dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() == 1
    }

    pub fn dim(&self, node: NodeId) -> usize {
        self.nodes[node.0].dim
    }

    pub fn name(&self, node: NodeId) -> &str {
        &self.nodes[node.0].name
    }

    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        self.nodes[node.0].parent.as_ref().map(|(p, _)| *p)
    }

    pub fn children(&self, node: NodeId) -> &[NodeId] {
        &self.nodes[node.0].children
    }

    pub fn is_leaf(&self, node: NodeId) -> bool {
        self.nodes[node.0].leaf.is_some()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.node_ids().filter(|&n| self.is_leaf(n))
    }

    /// First node with the given name.
    pub fn find(&self, name: &str) -> Option<NodeId> {
        self.node_ids().find(|&n| self.name(n) == name)
    }

    /// Depth of a node below the root.
    pub fn depth(&self, node: NodeId) -> usize {
        let mut depth = 0;
        let mut cur = node;
        while let Some(p) = self.parent(cur) {
            depth += 1;
            cur = p;
        }
        depth
    }

    /// Slash-separated node names from the root down to `node`.
    pub fn path(&self, node: NodeId) -> String {
        let mut names = vec![self.name(node).to_string()];
        let mut cur = node;
        while let Some(p) = self.parent(cur) {
            names.push(self.name(p).to_string());
            cur = p;
        }
        names.reverse();
        names.join("/")
    }

    fn attach(
        &mut self,
        parent: NodeId,
        map: Arc<dyn TaskMap>,
        leaf: Option<Arc<dyn GdsLeaf>>,
        name: String,
    ) -> Result<NodeId> {
        let p = self
            .nodes
            .get(parent.0)
            .ok_or_else(|| RmpError::Tree(format!("no node with index {}", parent.0)))?;
        if p.leaf.is_some() {
            return Err(RmpError::Tree(format!(
                "cannot attach `{name}` below leaf `{}`",
                p.name
            )));
        }
        check_dim("edge map input vs parent node", p.dim, map.dim_in())?;
        let dim = map.dim_out();
        if let Some(l) = &leaf {
            check_dim("leaf dimension vs edge map output", dim, l.dim())?;
        }
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            name,
            dim,
            parent: Some((parent, map)),
            leaf,
            children: Vec::new(),
        });
        self.nodes[parent.0].children.push(id);
        Ok(id)
    }

    /// Adds an intermediate node.
    pub fn add_node(
        &mut self,
        parent: NodeId,
        map: Arc<dyn TaskMap>,
        name: impl Into<String>,
    ) -> Result<NodeId> {
        self.attach(parent, map, None, name.into())
    }

    pub fn add_leaf(
        &mut self,
        parent: NodeId,
        map: Arc<dyn TaskMap>,
        leaf: Arc<dyn GdsLeaf>,
        name: impl Into<String>,
    ) -> Result<NodeId> {
        self.attach(parent, map, Some(leaf), name.into())
    }

    pub fn leaf_policy(&self, node: NodeId) -> Option<&Arc<dyn GdsLeaf>> {
        self.nodes[node.0].leaf.as_ref()
    }

    pub fn edge_map(&self, node: NodeId) -> Option<&Arc<dyn TaskMap>> {
        self.nodes[node.0].parent.as_ref().map(|(_, m)| m)
    }

    /// Forward pass: pushes the root state to every node and records each
    /// edge's `J` and `J̇ẋ`.
    pub fn forward(&self, root_state: &State) -> Result<TreePass> {
        check_dim("root state", self.root_dim(), root_state.dim())?;
        let n = self.nodes.len();
        let mut states = Vec::with_capacity(n);
        let mut jacobians = Vec::with_capacity(n);
        let mut jdot_xdot = Vec::with_capacity(n);
        states.push(root_state.clone());
        jacobians.push(None);
        jdot_xdot.push(None);
        for (idx, node) in self.nodes.iter().enumerate().skip(1) {
            let (parent, map) = node.parent.as_ref().expect("non-root node has a parent");
            let ps: &State = &states[parent.0];
            let step = || -> Result<_> {
                let y = map.value(&ps.x)?;
                let j = map.jacobian(&ps.x)?;
                let jd = map.jac_rate_times_vel(&ps.x, &ps.xdot)?;
                Ok((y, j, jd))
            };
            let (y, j, jd) = step().map_err(|e| e.at_node(self.path(NodeId(idx))))?;
            let ydot = &j * &ps.xdot;
            states.push(State { x: y, xdot: ydot });
            jacobians.push(Some(j));
            jdot_xdot.push(Some(jd));
        }
        Ok(TreePass {
            states,
            jacobians,
            jdot_xdot,
        })
    }

    /// Leaf evaluation and backward pass; returns the root RMP in natural form.
    pub fn evaluate(&self, root_state: &State) -> Result<NaturalRmp> {
        let pass = self.forward(root_state)?;
        self.backward(&pass)
    }

    pub fn backward(&self, pass: &TreePass) -> Result<NaturalRmp> {
        let mut rmps: Vec<NaturalRmp> = self
            .nodes
            .iter()
            .map(|n| NaturalRmp::zeros(n.dim))
            .collect();
        for (idx, node) in self.nodes.iter().enumerate() {
            if let Some(leaf) = &node.leaf {
                rmps[idx] = evaluate_gds_leaf(leaf.as_ref(), &pass.states[idx])
                    .map_err(|e| e.at_node(self.path(NodeId(idx))))?;
            }
        }
        for idx in (1..self.nodes.len()).rev() {
            let parent = self.nodes[idx].parent.as_ref().expect("parent").0;
            let child = std::mem::replace(&mut rmps[idx], NaturalRmp::zeros(0));
            let j = pass.jacobians[idx].as_ref().expect("edge jacobian");
            let jd = pass.jdot_xdot[idx].as_ref().expect("edge jdot");
            accumulate_pullback(&mut rmps[parent.0], &child, j, jd);
        }
        Ok(rmps.swap_remove(0))
    }

    /// RMPflow: forward pass, leaf evaluation, backward pass, resolve.
    pub fn policy(&self, root_state: &State) -> Result<CanonicalRmp> {
        resolve(&self.evaluate(root_state)?)
    }

    /// Root metric, damping and potential at `root_state`.
    pub fn energy(&self, root_state: &State) -> Result<RootEnergy> {
        let pass = self.forward(root_state)?;
        let n = self.nodes.len();
        let mut metric: Vec<DMatrix<f64>> = Vec::with_capacity(n);
        let mut damping: Vec<DMatrix<f64>> = Vec::with_capacity(n);
        let mut grad: Vec<DVector<f64>> = Vec::with_capacity(n);
        let mut potential = 0.0;
        for (idx, node) in self.nodes.iter().enumerate() {
            let s = &pass.states[idx];
            match &node.leaf {
                Some(leaf) => {
                    leaf.check_domain(&s.x)
                        .map_err(|e| e.at_node(self.path(NodeId(idx))))?;
                    metric.push(leaf.metric(&s.x, &s.xdot));
                    damping.push(leaf.damping(&s.x, &s.xdot));
                    grad.push(leaf.potential_grad(&s.x));
                    potential += leaf.potential(&s.x);
                }
                None => {
                    metric.push(DMatrix::zeros(node.dim, node.dim));
                    damping.push(DMatrix::zeros(node.dim, node.dim));
                    grad.push(DVector::zeros(node.dim));
                }
            }
        }
        for idx in (1..n).rev() {
            let parent = self.nodes[idx].parent.as_ref().expect("parent").0 .0;
            let j = pass.jacobians[idx].as_ref().expect("edge jacobian");
            let jt = j.transpose();
            let g = &jt * &metric[idx] * j;
            let b = &jt * &damping[idx] * j;
            let dg = &jt * &grad[idx];
            metric[parent] += g;
            damping[parent] += b;
            grad[parent] += dg;
        }
        Ok(RootEnergy {
            metric: metric.swap_remove(0),
            damping: damping.swap_remove(0),
            potential,
            potential_grad: grad.swap_remove(0),
        })
    }
}

/// Free-function form of [`RmpTree::policy`].
pub fn rmpflow_policy(tree: &RmpTree, root_state: &State) -> Result<CanonicalRmp> {
    tree.policy(root_state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leaves::{make_damper, make_goal_attractor_b, DamperParams, GoalAttractorBParams};
    use crate::task_map::{Identity, LinearMap, Selection};

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn single_attractor_leaf() {
        let (map, leaf) = make_goal_attractor_b(&GoalAttractorBParams {
            goal: vec![0.0, 0.0],
            c: 1.0,
            alpha: 1.0,
            eta: 1e-3,
        })
        .unwrap();
        let mut tree = RmpTree::new(2);
        tree.add_leaf(tree.root(), map, leaf, "attractor").unwrap();
        let a = tree
            .policy(&State::from_slices(&[1.0, 0.0], &[0.0, 0.0]).unwrap())
            .unwrap()
            .a;
        assert!((a - v(&[-1.0, 0.0])).amax() < 1e-14);
    }

    #[test]
    fn empty_tree_gives_zero() {
        let tree = RmpTree::new(4);
        let r = tree
            .policy(&State::from_slices(&[1.0; 4], &[2.0; 4]).unwrap())
            .unwrap();
        assert_eq!(r.a, DVector::zeros(4));
        assert!(tree.is_empty());
    }

    #[test]
    fn attach_validates_dimensions_and_leaves() {
        let mut tree = RmpTree::new(2);
        assert!(tree
            .add_node(tree.root(), Arc::new(Identity::new(3)), "bad")
            .is_err());
        let (map, leaf) = make_damper(&DamperParams { c: 1.0, eta: 1.0 }, 2).unwrap();
        let l = tree
            .add_leaf(tree.root(), map.clone(), leaf, "damper")
            .unwrap();
        assert!(tree.add_node(l, map, "under-leaf").is_err());
        let (_, leaf3) = make_damper(&DamperParams { c: 1.0, eta: 1.0 }, 3).unwrap();
        assert!(tree
            .add_leaf(tree.root(), Arc::new(Identity::new(2)), leaf3, "mismatch")
            .is_err());
    }

    #[test]
    fn inserting_identity_node_changes_nothing() {
        let params = GoalAttractorBParams {
            goal: vec![0.3, -0.2],
            c: 2.0,
            alpha: 1.5,
            eta: 0.7,
        };
        let (map, leaf) = make_goal_attractor_b(&params).unwrap();
        let mut flat = RmpTree::new(2);
        flat.add_leaf(flat.root(), map.clone(), leaf.clone(), "leaf")
            .unwrap();
        let mut deep = RmpTree::new(2);
        let mid = deep
            .add_node(deep.root(), Arc::new(Identity::new(2)), "mid")
            .unwrap();
        deep.add_leaf(mid, map, leaf, "leaf").unwrap();
        let s = State::from_slices(&[1.0, 2.0], &[-0.5, 0.1]).unwrap();
        assert_eq!(flat.policy(&s).unwrap(), deep.policy(&s).unwrap());
        assert_eq!(deep.path(NodeId(2)), "root/mid/leaf");
        assert_eq!(deep.depth(NodeId(2)), 2);
    }

    #[test]
    fn energy_pulls_back_metric() {
        let sel = Arc::new(Selection::new(4, vec![2, 3]).unwrap());
        let (map, leaf) = make_damper(&DamperParams { c: 3.0, eta: 1.0 }, 2).unwrap();
        let mut tree = RmpTree::new(4);
        let mid = tree.add_node(tree.root(), sel, "robot").unwrap();
        tree.add_leaf(mid, map, leaf, "damper").unwrap();
        let s = State::from_slices(&[0.0; 4], &[1.0, 1.0, 1.0, 0.0]).unwrap();
        let e = tree.energy(&s).unwrap();
        let mut g = DMatrix::zeros(4, 4);
        g[(2, 2)] = 3.0;
        g[(3, 3)] = 3.0;
        assert_eq!(e.metric, g);
        assert_eq!(e.lyapunov(&s.xdot), 1.5);
    }

    #[test]
    fn leaf_errors_carry_node_path() {
        let mut tree = RmpTree::new(1);
        let lin = Arc::new(LinearMap::new(DMatrix::from_element(1, 1, 1.0)));
        let mid = tree.add_node(tree.root(), lin, "pair").unwrap();
        let (_, leaf) = crate::leaves::make_collision_avoidance(
            &crate::leaves::CollisionAvoidanceParams {
                safety_distance: 1.0,
                alpha: 1.0,
                epsilon: 1.0,
                eta: 1.0,
            },
            (1, 2),
            1,
        )
        .unwrap();
        tree.add_leaf(mid, Arc::new(Identity::new(1)), leaf, "collision")
            .unwrap();
        let err = tree
            .policy(&State::from_slices(&[-0.5], &[0.0]).unwrap())
            .unwrap_err();
        match &err {
            RmpError::Node { path, .. } => assert_eq!(path, "root/pair/collision"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.is_barrier_violation());
    }
}
