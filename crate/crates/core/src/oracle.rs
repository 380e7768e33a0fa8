//! Reference implementations used to cross-check the RMP machinery:
//! finite-difference differentiators, the classical potential-based
//! formation controllers, and a randomized velocity-dependent metric with
//! hand-derived partials.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RmpError};
use crate::gds::{GdsLeaf, MetricPartials};
use crate::leaves::PairPotential;
use crate::rmp::State;
use crate::sim::TrajectoryLog;
use crate::task_map::FD_STEP;
use crate::RobotId;

/// `‖a − b‖∞ / max(‖a‖∞, ‖b‖∞)`, or zero when both are zero.
pub fn relative_error_vec(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let scale = a.amax().max(b.amax());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).amax() / scale
    }
}

pub fn relative_error_mat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = a.amax().max(b.amax());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).amax() / scale
    }
}

/// Central-difference Jacobian of `f` at `x` with step [`FD_STEP`].
pub fn fd_jacobian<F>(f: F, x: &DVector<f64>) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let h = FD_STEP;
    let m = f(x).len();
    let mut j = DMatrix::zeros(m, x.len());
    for k in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        j.set_column(k, &((f(&xp) - f(&xm)) / (2.0 * h)));
    }
    j
}

/// Central-difference gradient of a scalar function.
pub fn fd_gradient<F>(f: F, x: &DVector<f64>) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let h = FD_STEP;
    DVector::from_iterator(
        x.len(),
        (0..x.len()).map(|k| {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            (f(&xp) - f(&xm)) / (2.0 * h)
        }),
    )
}

/// Max relative error between `jacobian` and finite differences of `f`.
pub fn fd_check_jacobian<F>(f: F, jacobian: &DMatrix<f64>, x: &DVector<f64>) -> f64
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    relative_error_mat(jacobian, &fd_jacobian(f, x))
}

/// Max relative error between `grad` and finite differences of `f`.
pub fn fd_check_gradient<F>(f: F, grad: &DVector<f64>, x: &DVector<f64>) -> f64
where
    F: Fn(&DVector<f64>) -> f64,
{
    relative_error_vec(grad, &fd_gradient(f, x))
}

// ---------------------------------------------------------------------------
// Potential-based formation controllers
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `u = −∇E − ηẋ`
    Original,
    /// `u = −Γ(∇E + ηẋ)` with `Γ_ii = 1/D_i`
    DegreeNormalized,
}

/// Undirected formation graph with per-edge potentials.
///
/// Edges are stored once per unordered pair; the total potential
/// `E = ½ Σ_{(i,j)} E_ij` over ordered pairs is therefore the plain sum over
/// stored edges.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialGraph {
    robots: Vec<RobotId>,
    robot_dim: usize,
    edges: Vec<(usize, usize, PairPotential)>,
    pub eta: f64,
    pub normalization: Normalization,
}

impl PotentialGraph {
    pub fn new(
        robots: &[RobotId],
        robot_dim: usize,
        eta: f64,
        normalization: Normalization,
    ) -> Result<Self> {
        if !(eta > 0.0) {
            return Err(RmpError::Config(format!(
                "graph damping must be positive, got {eta}"
            )));
        }
        let mut sorted = robots.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != robots.len() {
            return Err(RmpError::Config("duplicate robot ids in graph".into()));
        }
        Ok(Self {
            robots: sorted,
            robot_dim,
            edges: Vec::new(),
            eta,
            normalization,
        })
    }

    fn slot(&self, id: RobotId) -> Result<usize> {
        self.robots
            .binary_search(&id)
            .map_err(|_| RmpError::UnknownRobot(id))
    }

    pub fn add_edge(&mut self, i: RobotId, j: RobotId, potential: PairPotential) -> Result<()> {
        let (a, b) = (self.slot(i)?, self.slot(j)?);
        if a == b {
            return Err(RmpError::Config(format!("self edge on robot {i}")));
        }
        let key = (a.min(b), a.max(b));
        if self.edges.iter().any(|(p, q, _)| (*p, *q) == key) {
            return Err(RmpError::Config(format!("duplicate edge ({i}, {j})")));
        }
        self.edges.push((key.0, key.1, potential));
        Ok(())
    }

    /// Complete graph with the same potential on every edge.
    pub fn complete(
        robots: &[RobotId],
        robot_dim: usize,
        potential: PairPotential,
        eta: f64,
        normalization: Normalization,
    ) -> Result<Self> {
        let mut g = Self::new(robots, robot_dim, eta, normalization)?;
        let ids = g.robots.clone();
        for (k, &i) in ids.iter().enumerate() {
            for &j in &ids[k + 1..] {
                g.add_edge(i, j, potential.clone())?;
            }
        }
        Ok(g)
    }

    pub fn robots(&self) -> &[RobotId] {
        &self.robots
    }

    pub fn degree(&self, id: RobotId) -> Result<usize> {
        let s = self.slot(id)?;
        Ok(self
            .edges
            .iter()
            .filter(|(a, b, _)| *a == s || *b == s)
            .count())
    }

    fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.robots.len()];
        for (a, b, _) in &self.edges {
            d[*a] += 1;
            d[*b] += 1;
        }
        d
    }

    fn position(&self, q: &DVector<f64>, slot: usize) -> DVector<f64> {
        q.rows(slot * self.robot_dim, self.robot_dim).into_owned()
    }

    fn check_state(&self, s: &State) -> Result<()> {
        crate::error::check_dim(
            "potential graph state",
            self.robots.len() * self.robot_dim,
            s.dim(),
        )
    }

    /// Total potential `E`.
    pub fn potential(&self, q: &DVector<f64>) -> f64 {
        self.edges
            .iter()
            .map(|(a, b, e)| e.value((self.position(q, *a) - self.position(q, *b)).norm()))
            .sum()
    }

    /// `∇E`, stacked by robot.
    pub fn gradient(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.robot_dim;
        let mut g = DVector::zeros(q.len());
        for (a, b, e) in &self.edges {
            let r = self.position(q, *a) - self.position(q, *b);
            let gi = e.gradient(&r).ok_or(RmpError::CoincidentRobots {
                pair: (self.robots[*a], self.robots[*b]),
            })?;
            let mut ra = g.rows_mut(a * n, n);
            ra += &gi;
            let mut rb = g.rows_mut(b * n, n);
            rb -= &gi;
        }
        Ok(g)
    }

    /// Potential-based controller under the graph's normalization.
    pub fn potential_controller(&self, s: &State) -> Result<DVector<f64>> {
        self.check_state(s)?;
        let g = self.gradient(&s.x)?;
        let raw = -(g + &s.xdot * self.eta);
        match self.normalization {
            Normalization::Original => Ok(raw),
            Normalization::DegreeNormalized => {
                let n = self.robot_dim;
                let d = self.degrees();
                let mut u = raw;
                for (slot, deg) in d.iter().enumerate() {
                    if *deg > 0 {
                        let mut block = u.rows_mut(slot * n, n);
                        block /= *deg as f64;
                    }
                }
                Ok(u)
            }
        }
    }

    /// Degree-normalized formation controller of Mesbahi and Egerstedt:
    ///
    /// `u_i = −(1/D_i) Σ_j ((‖x_i − x_j‖ − d_ij)/‖x_i − x_j‖ (x_i − x_j) + η ẋ_i)`.
    ///
    /// The damping enters each edge term with a negative sign so that the
    /// closed loop is dissipative. Edge potentials supply `d_ij`; their form
    /// and gain are ignored.
    pub fn formation_controller(&self, s: &State) -> Result<DVector<f64>> {
        self.check_state(s)?;
        let n = self.robot_dim;
        let mut u = DVector::zeros(s.dim());
        let d = self.degrees();
        for slot in 0..self.robots.len() {
            if d[slot] == 0 {
                continue;
            }
            let xi = self.position(&s.x, slot);
            let vi = s.xdot.rows(slot * n, n).into_owned();
            let mut sum = DVector::zeros(n);
            for (a, b, e) in &self.edges {
                let other = if *a == slot {
                    *b
                } else if *b == slot {
                    *a
                } else {
                    continue;
                };
                let r = &xi - self.position(&s.x, other);
                let dist = r.norm();
                if dist < crate::task_map::COINCIDENT_TOLERANCE {
                    return Err(RmpError::CoincidentRobots {
                        pair: (self.robots[slot], self.robots[other]),
                    });
                }
                sum += r * ((dist - e.distance) / dist) + &vi * self.eta;
            }
            u.rows_mut(slot * n, n).copy_from(&(-sum / d[slot] as f64));
        }
        Ok(u)
    }

    /// `ẍ_i = −α/(c D_i) Σ_j ∇_{x_i} E_ij − (η/c) ẋ_i`.
    pub fn rmp_formation_law(&self, s: &State, c: f64, alpha: f64) -> Result<DVector<f64>> {
        self.check_state(s)?;
        let n = self.robot_dim;
        let g = self.gradient(&s.x)?;
        let d = self.degrees();
        let mut u = DVector::zeros(s.dim());
        for slot in 0..self.robots.len() {
            let mut block = -&s.xdot.rows(slot * n, n) * (self.eta / c);
            if d[slot] > 0 {
                block -= g.rows(slot * n, n) * (alpha / (c * d[slot] as f64));
            }
            u.rows_mut(slot * n, n).copy_from(&block);
        }
        Ok(u)
    }

    /// Current length of every edge, in storage order.
    pub fn edge_lengths(&self, q: &DVector<f64>) -> Vec<f64> {
        self.edges
            .iter()
            .map(|(a, b, _)| (self.position(q, *a) - self.position(q, *b)).norm())
            .collect()
    }
}

/// Max over samples and robots of the Euclidean position deviation between
/// two logs sampled on the same grid.
pub fn compare_trajectories(a: &TrajectoryLog, b: &TrajectoryLog) -> Result<f64> {
    if a.times.len() != b.times.len()
        || a.robot_dim != b.robot_dim
        || a.robots != b.robots
        || a.times
            .iter()
            .zip(b.times.iter())
            .any(|(s, t)| (s - t).abs() > 1e-12)
    {
        return Err(RmpError::Config(
            "trajectory logs are not sampled on the same grid".into(),
        ));
    }
    let n = a.robot_dim;
    let mut worst = 0.0_f64;
    for (sa, sb) in a.states.iter().zip(b.states.iter()) {
        for k in 0..a.robots.len() {
            let d = (sa.x.rows(k * n, n) - sb.x.rows(k * n, n)).norm();
            worst = worst.max(d);
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Randomized velocity-dependent metric
// ---------------------------------------------------------------------------

/// `G(x, ẋ) = C(x, ẋ)ᵀ C(x, ẋ) + δI` with
/// `C = A + Σ_k sin(x_k) U_k + Σ_k ẋ_k² V_k`.
///
/// The metric is symmetric positive definite and depends smoothly on both
/// position and velocity; its partials are written out by hand so they can
/// serve as an independent reference for the finite-difference fallback and
/// for the curvature terms.
#[derive(Clone, Debug)]
pub struct FactoredMetricLeaf {
    a: DMatrix<f64>,
    u: Vec<DMatrix<f64>>,
    v: Vec<DMatrix<f64>>,
    floor: f64,
}

impl FactoredMetricLeaf {
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let mut mat =
            |scale: f64| DMatrix::from_fn(dim, dim, |_, _| scale * rng.gen_range(-1.0..1.0));
        let a = mat(1.0);
        let u = (0..dim).map(|_| mat(0.5)).collect();
        let v = (0..dim).map(|_| mat(0.5)).collect();
        Self {
            a,
            u,
            v,
            floor: 0.1,
        }
    }

    fn factor(&self, x: &DVector<f64>, xd: &DVector<f64>) -> DMatrix<f64> {
        let mut c = self.a.clone();
        for k in 0..x.len() {
            c += &self.u[k] * x[k].sin() + &self.v[k] * (xd[k] * xd[k]);
        }
        c
    }

    fn symmetric_product(c: &DMatrix<f64>, dc: &DMatrix<f64>) -> DMatrix<f64> {
        dc.transpose() * c + c.transpose() * dc
    }
}

impl GdsLeaf for FactoredMetricLeaf {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn metric(&self, x: &DVector<f64>, xdot: &DVector<f64>) -> DMatrix<f64> {
        let c = self.factor(x, xdot);
        let n = self.dim();
        c.transpose() * c + DMatrix::identity(n, n) * self.floor
    }

    fn damping(&self, _x: &DVector<f64>, _xdot: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(self.dim(), self.dim())
    }

    fn potential(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.norm_squared()
    }

    fn potential_grad(&self, x: &DVector<f64>) -> DVector<f64> {
        x.clone()
    }

    fn metric_partials(&self, x: &DVector<f64>, xdot: &DVector<f64>) -> MetricPartials {
        let c = self.factor(x, xdot);
        let n = self.dim();
        MetricPartials {
            wrt_x: (0..n)
                .map(|k| Self::symmetric_product(&c, &(&self.u[k] * x[k].cos())))
                .collect(),
            wrt_xdot: (0..n)
                .map(|k| Self::symmetric_product(&c, &(&self.v[k] * (2.0 * xdot[k]))))
                .collect(),
        }
    }
}

/// Finite-difference construction of `Ξ_G` and `ξ_G` directly from the
/// definitions, without going through [`MetricPartials`]:
/// `Ξ_G = ½ Σ_i ẋ_i ∂_ẋ g_i = ½ ∂_v (G(x, v) ẋ)|_{v=ẋ}`, and
/// `ξ_G = Ġ_x ẋ − ½ ∇_x(ẋᵀGẋ)` with `Ġ_x = d/dε G(x + εẋ, ẋ)`.
pub fn fd_curvature<L: GdsLeaf + ?Sized>(leaf: &L, s: &State) -> (DMatrix<f64>, DVector<f64>) {
    let h = FD_STEP;
    let (x, xd) = (&s.x, &s.xdot);
    let xi_mat = fd_jacobian(|v| leaf.metric(x, v) * xd, xd) * 0.5;
    let gdot = (leaf.metric(&(x + xd * h), xd) - leaf.metric(&(x - xd * h), xd)) / (2.0 * h);
    let energy_grad = fd_gradient(|p| xd.dot(&(leaf.metric(p, xd) * xd)), x);
    (xi_mat, gdot * xd - energy_grad * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gds::{curvature_force, curvature_matrix, fd_metric_partials};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn fd_check_on_linear_and_quadratic() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, -1.0, 0.5, 0.0]);
        let x = v(&[0.3, -0.7, 1.1]);
        assert!(fd_check_jacobian(|p| &a * p, &a, &x) < 1e-9);
        let grad = x.clone() * 2.0;
        assert!(fd_check_gradient(|p| p.norm_squared(), &grad, &x) <= 1e-9);
    }

    #[test]
    fn factored_metric_partials_match_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let leaf = FactoredMetricLeaf::random(3, &mut rng);
            let x = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
            let xd = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
            let a = leaf.metric_partials(&x, &xd);
            let b = fd_metric_partials(&leaf, &x, &xd);
            for k in 0..3 {
                assert!(relative_error_mat(&a.wrt_x[k], &b.wrt_x[k]) < 1e-7);
                assert!(relative_error_mat(&a.wrt_xdot[k], &b.wrt_xdot[k]) < 1e-7);
            }
            let s = State::new(x, xd).unwrap();
            let (xi_m, xi_f) = fd_curvature(&leaf, &s);
            assert!(relative_error_mat(&curvature_matrix(&leaf, &s).unwrap(), &xi_m) < 1e-6);
            assert!(relative_error_vec(&curvature_force(&leaf, &s).unwrap(), &xi_f) < 1e-6);
        }
    }

    fn two_robot_graph(norm: Normalization) -> PotentialGraph {
        let mut g = PotentialGraph::new(&[1, 2], 2, 2.0, norm).unwrap();
        g.add_edge(1, 2, PairPotential::quadratic(0.5)).unwrap();
        g
    }

    #[test]
    fn two_robot_potential_controller() {
        // E = (s − d)², ∇_{x₁}E = 2(1 − 0.5)(1, 0) = (1, 0), D = 1.
        let g = two_robot_graph(Normalization::DegreeNormalized);
        let s = State::from_slices(&[1.0, 0.0, 0.0, 0.0], &[0.0; 4]).unwrap();
        let u = g.potential_controller(&s).unwrap();
        assert!((u - v(&[-1.0, 0.0, 1.0, 0.0])).amax() < 1e-15);
    }

    #[test]
    fn formation_controller_sign_and_equilibrium() {
        let g = two_robot_graph(Normalization::DegreeNormalized);
        let s = State::from_slices(&[1.0, 0.0, 0.0, 0.0], &[0.0; 4]).unwrap();
        let u = g.formation_controller(&s).unwrap();
        // Stretched edge: robot 1 pulled toward robot 2.
        assert!(u[0] < 0.0 && u[2] > 0.0);
        let at_d = State::from_slices(&[0.5, 0.0, 0.0, 0.0], &[0.0; 4]).unwrap();
        assert_eq!(g.formation_controller(&at_d).unwrap(), DVector::zeros(4));
        let moving = State::from_slices(&[0.5, 0.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(g.formation_controller(&moving).unwrap()[0], -2.0);
    }

    #[test]
    fn complete_pentagon_normalization_is_uniform() {
        let ids = [1, 2, 3, 4, 5];
        let q = DVector::from_iterator(
            10,
            (0..5).flat_map(|k| {
                let t = 1.3 * k as f64 + 0.2;
                [t.cos() * (1.0 + 0.1 * k as f64), t.sin()]
            }),
        );
        let s = State::new(q, DVector::from_element(10, 0.1)).unwrap();
        let p = PairPotential::quartic(0.4);
        let orig =
            PotentialGraph::complete(&ids, 2, p.clone(), 2.0, Normalization::Original).unwrap();
        let norm =
            PotentialGraph::complete(&ids, 2, p, 2.0, Normalization::DegreeNormalized).unwrap();
        let a = orig.potential_controller(&s).unwrap();
        let b = norm.potential_controller(&s).unwrap();
        assert!((a / 4.0 - b).amax() < 1e-14);
    }

    #[test]
    fn gradient_matches_fd_of_potential() {
        let ids = [1, 2, 3];
        let g = PotentialGraph::complete(
            &ids,
            2,
            PairPotential::quadratic(0.7),
            1.0,
            Normalization::Original,
        )
        .unwrap();
        let q = v(&[0.0, 0.0, 1.0, 0.2, -0.3, 0.9]);
        let err = fd_check_gradient(|p| g.potential(p), &g.gradient(&q).unwrap(), &q);
        assert!(err < 1e-8);
    }

    #[test]
    fn coincident_robots_are_rejected() {
        let g = two_robot_graph(Normalization::Original);
        let s = State::from_slices(&[1.0, 1.0, 1.0, 1.0], &[0.0; 4]).unwrap();
        assert!(g.potential_controller(&s).is_err());
        assert!(g.formation_controller(&s).is_err());
    }
}
