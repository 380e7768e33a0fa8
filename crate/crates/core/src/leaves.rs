//! Leaf policies for robot teams.
//!
//! Every constructor returns the edge map from the participants' stacked
//! configuration (ascending robot id) to the subtask chart, together with the
//! GDS that defines the leaf RMP on that chart.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RmpError};
use crate::gds::{GdsLeaf, MetricPartials};
use crate::task_map::{GoalOffset, Identity, PairDistance, TaskMap, COINCIDENT_TOLERANCE};
use crate::RobotId;

pub type LeafPair = (Arc<dyn TaskMap>, Arc<dyn GdsLeaf>);

fn require_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(RmpError::Config(format!(
            "{name} must be strictly positive and finite, got {value}"
        )))
    }
}

fn require_distinct(pair: (RobotId, RobotId)) -> Result<()> {
    if pair.0 == pair.1 {
        Err(RmpError::Config(format!(
            "pairwise subtask needs two distinct robots, got {pair:?}"
        )))
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Collision avoidance
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionAvoidanceParams {
    pub safety_distance: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub eta: f64,
}

impl CollisionAvoidanceParams {
    pub fn validate(&self) -> Result<()> {
        require_positive("collision safety_distance", self.safety_distance)?;
        require_positive("collision alpha", self.alpha)?;
        require_positive("collision epsilon", self.epsilon)?;
        require_positive("collision eta", self.eta)
    }
}

/// Barrier weight `w(z) = 1/z⁴`.
pub fn barrier_weight(z: f64) -> f64 {
    1.0 / (z * z * z * z)
}

fn barrier_weight_deriv(z: f64) -> f64 {
    -4.0 / (z * z * z * z * z)
}

/// Velocity gate `u(ż) = ε + min(0, ż) ż`.
pub fn velocity_gate(zdot: f64, epsilon: f64) -> f64 {
    epsilon + zdot.min(0.0) * zdot
}

/// `u'(ż) = 2 min(0, ż)`, which is continuous with `u'(0) = 0`.
fn velocity_gate_deriv(zdot: f64) -> f64 {
    2.0 * zdot.min(0.0)
}

/// Pairwise barrier on `z = ‖x_i − x_j‖/d_S − 1` with
/// `G = w(z) u(ż)`, `Φ = ½ α w(z)²`, `B = η G`.
#[derive(Clone, Debug)]
pub struct CollisionLeaf {
    params: CollisionAvoidanceParams,
    pair: (RobotId, RobotId),
}

impl CollisionLeaf {
    pub fn new(params: CollisionAvoidanceParams, pair: (RobotId, RobotId)) -> Self {
        Self { params, pair }
    }
}

impl GdsLeaf for CollisionLeaf {
    fn dim(&self) -> usize {
        1
    }

    fn check_domain(&self, x: &DVector<f64>) -> Result<()> {
        let z = x[0];
        if z > 0.0 {
            Ok(())
        } else {
            Err(RmpError::BarrierDomain { pair: self.pair, z })
        }
    }

    fn metric(&self, x: &DVector<f64>, xdot: &DVector<f64>) -> DMatrix<f64> {
        let g = barrier_weight(x[0]) * velocity_gate(xdot[0], self.params.epsilon);
        DMatrix::from_element(1, 1, g)
    }

    fn damping(&self, x: &DVector<f64>, xdot: &DVector<f64>) -> DMatrix<f64> {
        self.metric(x, xdot) * self.params.eta
    }

    fn potential(&self, x: &DVector<f64>) -> f64 {
        let w = barrier_weight(x[0]);
        0.5 * self.params.alpha * w * w
    }

    fn potential_grad(&self, x: &DVector<f64>) -> DVector<f64> {
        let z = x[0];
        DVector::from_element(
            1,
            self.params.alpha * barrier_weight(z) * barrier_weight_deriv(z),
        )
    }

    fn metric_partials(&self, x: &DVector<f64>, xdot: &DVector<f64>) -> MetricPartials {
        let (z, zd) = (x[0], xdot[0]);
        let eps = self.params.epsilon;
        MetricPartials {
            wrt_x: vec![DMatrix::from_element(
                1,
                1,
                barrier_weight_deriv(z) * velocity_gate(zd, eps),
            )],
            wrt_xdot: vec![DMatrix::from_element(
                1,
                1,
                barrier_weight(z) * velocity_gate_deriv(zd),
            )],
        }
    }
}

pub fn make_collision_avoidance(
    params: &CollisionAvoidanceParams,
    pair: (RobotId, RobotId),
    robot_dim: usize,
) -> Result<LeafPair> {
    params.validate()?;
    require_distinct(pair)?;
    let map = PairDistance::new(robot_dim, params.safety_distance, 1.0, pair);
    Ok((
        Arc::new(map),
        Arc::new(CollisionLeaf::new(params.clone(), pair)),
    ))
}

// ---------------------------------------------------------------------------
// Pair potentials
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialForm {
    /// `(s − d)²`
    Quadratic,
    /// `(s² − d²)²`
    Quartic,
}

/// Symmetric pairwise potential `E(s) = gain · form(s; d)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairPotential {
    pub form: PotentialForm,
    pub distance: f64,
    #[serde(default = "unit_gain")]
    pub gain: f64,
}

fn unit_gain() -> f64 {
    1.0
}

impl PairPotential {
    pub fn quadratic(distance: f64) -> Self {
        Self {
            form: PotentialForm::Quadratic,
            distance,
            gain: 1.0,
        }
    }

    pub fn quartic(distance: f64) -> Self {
        Self {
            form: PotentialForm::Quartic,
            distance,
            gain: 1.0,
        }
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.gain *= factor;
        self
    }

    pub fn value(&self, s: f64) -> f64 {
        let d = self.distance;
        self.gain
            * match self.form {
                PotentialForm::Quadratic => (s - d) * (s - d),
                PotentialForm::Quartic => (s * s - d * d) * (s * s - d * d),
            }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        let d = self.distance;
        self.gain
            * match self.form {
                PotentialForm::Quadratic => 2.0 * (s - d),
                PotentialForm::Quartic => 4.0 * s * (s * s - d * d),
            }
    }

    /// `∇_{x_i} E(‖r‖)` for `r = x_i − x_j`. `None` where the gradient is
    /// undefined (coincident robots under the quadratic form).
    pub fn gradient(&self, r: &DVector<f64>) -> Option<DVector<f64>> {
        let s = r.norm();
        match self.form {
            PotentialForm::Quartic => {
                let d = self.distance;
                Some(r * (4.0 * self.gain * (s * s - d * d)))
            }
            PotentialForm::Quadratic => {
                if s < COINCIDENT_TOLERANCE {
                    None
                } else {
                    Some(r * (self.derivative(s) / s))
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("pair potential distance", self.distance)?;
        require_positive("pair potential gain", self.gain)
    }
}

// ---------------------------------------------------------------------------
// Constant-metric leaves
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
enum LeafPotential {
    Zero,
    /// `½ α ‖z‖²`
    Quadratic {
        alpha: f64,
    },
    /// `E(z)` on a 1-D distance chart.
    Distance(PairPotential),
    /// `scale · E(‖x_i − x_j‖)` on the stacked pair chart.
    Product {
        potential: PairPotential,
        scale: f64,
        robot_dim: usize,
        pair: (RobotId, RobotId),
    },
}

/// Leaf with `G = c I`, `B = η I` and one of a few potentials.
#[derive(Clone, Debug)]
pub struct ConstantMetricLeaf {
    dim: usize,
    c: f64,
    eta: f64,
    potential: LeafPotential,
}

impl ConstantMetricLeaf {
    fn split(&self, x: &DVector<f64>, robot_dim: usize) -> DVector<f64> {
        x.rows(0, robot_dim) - x.rows(robot_dim, robot_dim)
    }
}

impl GdsLeaf for ConstantMetricLeaf {
    fn dim(&self) -> usize {
        self.dim
    }

    fn check_domain(&self, x: &DVector<f64>) -> Result<()> {
        if let LeafPotential::Product {
            potential,
            robot_dim,
            pair,
            ..
        } = &self.potential
        {
            if potential.gradient(&self.split(x, *robot_dim)).is_none() {
                return Err(RmpError::CoincidentRobots { pair: *pair });
            }
        }
        Ok(())
    }

    fn metric(&self, _x: &DVector<f64>, _xdot: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim) * self.c
    }

    fn damping(&self, _x: &DVector<f64>, _xdot: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim) * self.eta
    }

    fn potential(&self, x: &DVector<f64>) -> f64 {
        match &self.potential {
            LeafPotential::Zero => 0.0,
            LeafPotential::Quadratic { alpha } => 0.5 * alpha * x.norm_squared(),
            LeafPotential::Distance(e) => e.value(x[0]),
            LeafPotential::Product {
                potential,
                scale,
                robot_dim,
                ..
            } => scale * potential.value(self.split(x, *robot_dim).norm()),
        }
    }

    fn potential_grad(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.potential {
            LeafPotential::Zero => DVector::zeros(self.dim),
            LeafPotential::Quadratic { alpha } => x * *alpha,
            LeafPotential::Distance(e) => DVector::from_element(1, e.derivative(x[0])),
            LeafPotential::Product {
                potential,
                scale,
                robot_dim,
                ..
            } => {
                let n = *robot_dim;
                let gi = potential
                    .gradient(&self.split(x, n))
                    .map(|g| g * *scale)
                    .unwrap_or_else(|| DVector::from_element(n, f64::NAN));
                let mut out = DVector::zeros(2 * n);
                out.rows_mut(0, n).copy_from(&gi);
                out.rows_mut(n, n).copy_from(&(-gi));
                out
            }
        }
    }

    fn metric_partials(&self, _x: &DVector<f64>, _xdot: &DVector<f64>) -> MetricPartials {
        MetricPartials::zero(self.dim)
    }
}

// ---------------------------------------------------------------------------
// Distance preservation
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistancePreservationAParams {
    pub distance: f64,
    pub c: f64,
    pub alpha: f64,
    pub eta: f64,
}

impl DistancePreservationAParams {
    pub fn validate(&self) -> Result<()> {
        require_positive("dist_pres_a distance", self.distance)?;
        require_positive("dist_pres_a c", self.c)?;
        require_positive("dist_pres_a alpha", self.alpha)?;
        require_positive("dist_pres_a eta", self.eta)
    }
}

/// Distance preservation on `z = ‖x_i − x_j‖ − d`: `G = c`, `Φ = ½αz²`, `B = η`.
pub fn make_distance_preservation_a(
    params: &DistancePreservationAParams,
    pair: (RobotId, RobotId),
    robot_dim: usize,
) -> Result<LeafPair> {
    params.validate()?;
    require_distinct(pair)?;
    let map = PairDistance::new(robot_dim, 1.0, params.distance, pair);
    let leaf = ConstantMetricLeaf {
        dim: 1,
        c: params.c,
        eta: params.eta,
        potential: LeafPotential::Quadratic {
            alpha: params.alpha,
        },
    };
    Ok((Arc::new(map), Arc::new(leaf)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistancePreservationBParams {
    pub distance: f64,
    pub c: f64,
    pub eta: f64,
    #[serde(default = "default_form")]
    pub potential: PotentialForm,
}

fn default_form() -> PotentialForm {
    PotentialForm::Quadratic
}

impl DistancePreservationBParams {
    pub fn validate(&self) -> Result<()> {
        require_positive("dist_pres_b distance", self.distance)?;
        require_positive("dist_pres_b c", self.c)?;
        require_positive("dist_pres_b eta", self.eta)
    }

    pub fn pair_potential(&self) -> PairPotential {
        PairPotential {
            form: self.potential,
            distance: self.distance,
            gain: 1.0,
        }
    }
}

/// Distance preservation on the stacked pair chart `(x_i, x_j)`:
/// `G = c I`, `Φ = ½ E(‖x_i − x_j‖)`, `B = η I`.
pub fn make_distance_preservation_b(
    params: &DistancePreservationBParams,
    pair: (RobotId, RobotId),
    robot_dim: usize,
) -> Result<LeafPair> {
    params.validate()?;
    require_distinct(pair)?;
    let leaf = ConstantMetricLeaf {
        dim: 2 * robot_dim,
        c: params.c,
        eta: params.eta,
        potential: LeafPotential::Product {
            potential: params.pair_potential(),
            scale: 0.5,
            robot_dim,
            pair,
        },
    };
    Ok((Arc::new(Identity::new(2 * robot_dim)), Arc::new(leaf)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSpace {
    Distance,
    Product,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwisePotentialParams {
    pub potential: PairPotential,
    pub c: f64,
    pub eta: f64,
    pub space: PairSpace,
}

impl PairwisePotentialParams {
    pub fn validate(&self) -> Result<()> {
        self.potential.validate()?;
        require_positive("pairwise_potential c", self.c)?;
        require_positive("pairwise_potential eta", self.eta)
    }
}

/// Wraps `E(‖x_i − x_j‖)` as a leaf with `Φ = E`, either on the distance
/// chart `z = ‖x_i − x_j‖` or on the stacked pair chart.
pub fn make_pairwise_potential(
    params: &PairwisePotentialParams,
    pair: (RobotId, RobotId),
    robot_dim: usize,
) -> Result<LeafPair> {
    params.validate()?;
    require_distinct(pair)?;
    match params.space {
        PairSpace::Distance => {
            let map = PairDistance::new(robot_dim, 1.0, 0.0, pair);
            let leaf = ConstantMetricLeaf {
                dim: 1,
                c: params.c,
                eta: params.eta,
                potential: LeafPotential::Distance(params.potential.clone()),
            };
            Ok((Arc::new(map), Arc::new(leaf)))
        }
        PairSpace::Product => {
            let leaf = ConstantMetricLeaf {
                dim: 2 * robot_dim,
                c: params.c,
                eta: params.eta,
                potential: LeafPotential::Product {
                    potential: params.potential.clone(),
                    scale: 1.0,
                    robot_dim,
                    pair,
                },
            };
            Ok((Arc::new(Identity::new(2 * robot_dim)), Arc::new(leaf)))
        }
    }
}

// ---------------------------------------------------------------------------
// Goal attractors and damper
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalAttractorAParams {
    pub goal: Vec<f64>,
    pub w_u: f64,
    pub w_l: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
}

impl GoalAttractorAParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.w_l && self.w_l <= self.w_u && self.w_u.is_finite()) {
            return Err(RmpError::Config(format!(
                "goal_attractor_a needs 0 <= w_l <= w_u < inf, got w_l = {}, w_u = {}",
                self.w_l, self.w_u
            )));
        }
        require_positive("goal_attractor_a sigma", self.sigma)?;
        require_positive("goal_attractor_a alpha", self.alpha)?;
        require_positive("goal_attractor_a beta", self.beta)?;
        require_positive("goal_attractor_a eta", self.eta)
    }
}

/// Soft normalization `s_α(r) = (1 − e^{−2αr}) / (1 + e^{−2αr})`.
pub fn soft_normalization(alpha: f64, r: f64) -> f64 {
    let e = (-2.0 * alpha * r).exp();
    (1.0 - e) / (1.0 + e)
}

/// `ln cosh x` without overflow.
fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

// 8-point Gauss-Legendre rule on [-1, 1].
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Goal attractor on `z = x − g` with `G = w(z) I`, `B = η w(z) I` and
/// `∇Φ = β w(z) s_α(‖z‖) ẑ`, where `w = γ w_u + (1 − γ) w_l`,
/// `γ = exp(−‖z‖² / 2σ²)`.
#[derive(Clone, Debug)]
pub struct AttractorLeaf {
    params: GoalAttractorAParams,
}

impl AttractorLeaf {
    pub fn new(params: GoalAttractorAParams) -> Self {
        Self { params }
    }

    pub fn weight(&self, z: &DVector<f64>) -> f64 {
        self.weight_at_radius(z.norm())
    }

    fn gamma(&self, r: f64) -> f64 {
        (-(r * r) / (2.0 * self.params.sigma * self.params.sigma)).exp()
    }

    fn weight_at_radius(&self, r: f64) -> f64 {
        let g = self.gamma(r);
        g * self.params.w_u + (1.0 - g) * self.params.w_l
    }

    /// Radial potential `Φ(r) = ∫₀ʳ β w(ρ) s_α(ρ) dρ`.
    ///
    /// The gradient field is radial, so this line integral recovers the
    /// potential exactly (with `Φ(0) = 0`). The `w_l` part has the closed
    /// form `(β w_l / α) ln cosh(α r)`; the Gaussian part is integrated with
    /// composite Gauss-Legendre and truncated at `12σ`, beyond which it
    /// contributes less than `e⁻⁷²` relative.
    pub fn radial_potential(&self, r: f64) -> f64 {
        let p = &self.params;
        let far = p.beta * p.w_l / p.alpha * ln_cosh(p.alpha * r);
        let upper = r.min(12.0 * p.sigma);
        if upper <= 0.0 {
            return far;
        }
        let panels = ((upper / (0.25 * p.sigma)).ceil() as usize).max(1);
        let width = upper / panels as f64;
        let mut near = 0.0;
        for k in 0..panels {
            let mid = (k as f64 + 0.5) * width;
            for (node, weight) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
                let rho = mid + 0.5 * width * node;
                near += weight * self.gamma(rho) * soft_normalization(p.alpha, rho);
            }
        }
        near *= 0.5 * width;
        far + p.beta * (p.w_u - p.w_l) * near
    }
}

impl GdsLeaf for AttractorLeaf {
    fn dim(&self) -> usize {
        self.params.goal.len()
    }

    fn metric(&self, x: &DVector<f64>, _xdot: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::identity(n, n) * self.weight(x)
    }

    fn damping(&self, x: &DVector<f64>, _xdot: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::identity(n, n) * (self.params.eta * self.weight(x))
    }

    fn potential(&self, x: &DVector<f64>) -> f64 {
        self.radial_potential(x.norm())
    }

    fn potential_grad(&self, x: &DVector<f64>) -> DVector<f64> {
        let r = x.norm();
        if r == 0.0 {
            return DVector::zeros(self.dim());
        }
        let p = &self.params;
        x * (p.beta * self.weight_at_radius(r) * soft_normalization(p.alpha, r) / r)
    }

    fn metric_partials(&self, x: &DVector<f64>, _xdot: &DVector<f64>) -> MetricPartials {
        let n = self.dim();
        let p = &self.params;
        let g = self.gamma(x.norm());
        let coeff = -(p.w_u - p.w_l) * g / (p.sigma * p.sigma);
        MetricPartials {
            wrt_x: (0..n)
                .map(|k| DMatrix::identity(n, n) * (coeff * x[k]))
                .collect(),
            wrt_xdot: vec![DMatrix::zeros(n, n); n],
        }
    }
}

pub fn make_goal_attractor_a(params: &GoalAttractorAParams) -> Result<LeafPair> {
    params.validate()?;
    let goal = DVector::from_column_slice(&params.goal);
    Ok((
        Arc::new(GoalOffset::new(goal)),
        Arc::new(AttractorLeaf::new(params.clone())),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalAttractorBParams {
    pub goal: Vec<f64>,
    pub c: f64,
    pub alpha: f64,
    pub eta: f64,
}

impl GoalAttractorBParams {
    pub fn validate(&self) -> Result<()> {
        require_positive("goal_attractor_b c", self.c)?;
        require_positive("goal_attractor_b alpha", self.alpha)?;
        require_positive("goal_attractor_b eta", self.eta)
    }

    /// Proportional gain of the equivalent PD controller.
    pub fn kp(&self) -> f64 {
        self.alpha / self.c
    }

    /// Derivative gain of the equivalent PD controller.
    pub fn kd(&self) -> f64 {
        self.eta / self.c
    }
}

/// PD-style attractor: `G = c I`, `Φ = ½ α ‖z‖²`, `B = η I` on `z = x − g`.
pub fn make_goal_attractor_b(params: &GoalAttractorBParams) -> Result<LeafPair> {
    params.validate()?;
    let n = params.goal.len();
    let leaf = ConstantMetricLeaf {
        dim: n,
        c: params.c,
        eta: params.eta,
        potential: LeafPotential::Quadratic {
            alpha: params.alpha,
        },
    };
    Ok((
        Arc::new(GoalOffset::new(DVector::from_column_slice(&params.goal))),
        Arc::new(leaf),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DamperParams {
    pub c: f64,
    pub eta: f64,
}

impl DamperParams {
    pub fn validate(&self) -> Result<()> {
        require_positive("damper c", self.c)?;
        require_positive("damper eta", self.eta)
    }
}

pub fn make_damper(params: &DamperParams, robot_dim: usize) -> Result<LeafPair> {
    params.validate()?;
    let leaf = ConstantMetricLeaf {
        dim: robot_dim,
        c: params.c,
        eta: params.eta,
        potential: LeafPotential::Zero,
    };
    Ok((Arc::new(Identity::new(robot_dim)), Arc::new(leaf)))
}
