//! Task maps: the smooth maps carried by RMP-tree edges.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Result, RmpError};
use crate::RobotId;

/// Step used by finite-difference fallbacks.
pub const FD_STEP: f64 = 1e-6;

/// A smooth map `ψ: ℝⁿ → ℝᵐ` with its Jacobian and Jacobian rate.
pub trait TaskMap: Send + Sync + fmt::Debug {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> Result<DVector<f64>>;

    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;

    /// `(∂J/∂x · dir) u`: the derivative of the Jacobian along `dir`, applied
    /// to `u`. Defaults to a central difference of [`TaskMap::jacobian`].
    fn jacobian_dot(
        &self,
        x: &DVector<f64>,
        dir: &DVector<f64>,
        u: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let h = FD_STEP;
        let jp = self.jacobian(&(x + dir * h))?;
        let jm = self.jacobian(&(x - dir * h))?;
        Ok((jp - jm) * u / (2.0 * h))
    }

    /// `J̇ ẋ` along the trajectory through `(x, ẋ)`.
    fn jac_rate_times_vel(&self, x: &DVector<f64>, xdot: &DVector<f64>) -> Result<DVector<f64>> {
        self.jacobian_dot(x, xdot, xdot)
    }
}

#[derive(Clone, Debug)]
pub struct Identity {
    dim: usize,
}

impl Identity {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl TaskMap for Identity {
    fn dim_in(&self) -> usize {
        self.dim
    }
    fn dim_out(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("identity map", self.dim, x.len())?;
        Ok(x.clone())
    }
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim("identity map", self.dim, x.len())?;
        Ok(DMatrix::identity(self.dim, self.dim))
    }
    fn jacobian_dot(
        &self,
        _x: &DVector<f64>,
        _dir: &DVector<f64>,
        _u: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        Ok(DVector::zeros(self.dim))
    }
}

/// `ψ(x) = A x`.
#[derive(Clone, Debug)]
pub struct LinearMap {
    a: DMatrix<f64>,
}

impl LinearMap {
    pub fn new(a: DMatrix<f64>) -> Self {
        Self { a }
    }
}

impl TaskMap for LinearMap {
    fn dim_in(&self) -> usize {
        self.a.ncols()
    }
    fn dim_out(&self) -> usize {
        self.a.nrows()
    }
    fn value(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("linear map", self.dim_in(), x.len())?;
        Ok(&self.a * x)
    }
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim("linear map", self.dim_in(), x.len())?;
        Ok(self.a.clone())
    }
    fn jacobian_dot(
        &self,
        _x: &DVector<f64>,
        _dir: &DVector<f64>,
        _u: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        Ok(DVector::zeros(self.dim_out()))
    }
}

/// Picks a subset of coordinates, in the given order.
#[derive(Clone, Debug)]
pub struct Selection {
    dim_in: usize,
    indices: Vec<usize>,
}

impl Selection {
    pub fn new(dim_in: usize, indices: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= dim_in) {
            return Err(RmpError::Tree(format!(
                "selection index {bad} out of range for input dimension {dim_in}"
            )));
        }
        Ok(Self { dim_in, indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
}

impl TaskMap for Selection {
    fn dim_in(&self) -> usize {
        self.dim_in
    }
    fn dim_out(&self) -> usize {
        self.indices.len()
    }
    fn value(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("selection map", self.dim_in, x.len())?;
        Ok(DVector::from_iterator(
            self.indices.len(),
            self.indices.iter().map(|&i| x[i]),
        ))
    }
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim("selection map", self.dim_in, x.len())?;
        let mut j = DMatrix::zeros(self.indices.len(), self.dim_in);
        for (row, &col) in self.indices.iter().enumerate() {
            j[(row, col)] = 1.0;
        }
        Ok(j)
    }
    fn jacobian_dot(
        &self,
        _x: &DVector<f64>,
        _dir: &DVector<f64>,
        _u: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        Ok(DVector::zeros(self.indices.len()))
    }
}

/// `outer ∘ inner`.
#[derive(Clone, Debug)]
pub struct Compose {
    inner: Arc<dyn TaskMap>,
    outer: Arc<dyn TaskMap>,
}

impl Compose {
    pub fn new(inner: Arc<dyn TaskMap>, outer: Arc<dyn TaskMap>) -> Result<Self> {
        check_dim("composed map", inner.dim_out(), outer.dim_in())?;
        Ok(Self { inner, outer })
    }
}

impl TaskMap for Compose {
    fn dim_in(&self) -> usize {
        self.inner.dim_in()
    }
    fn dim_out(&self) -> usize {
        self.outer.dim_out()
    }
    fn value(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.outer.value(&self.inner.value(x)?)
    }
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let y = self.inner.value(x)?;
        Ok(self.outer.jacobian(&y)? * self.inner.jacobian(x)?)
    }
    fn jacobian_dot(
        &self,
        x: &DVector<f64>,
        dir: &DVector<f64>,
        u: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let y = self.inner.value(x)?;
        let j_in = self.inner.jacobian(x)?;
        let outer_part = self.outer.jacobian_dot(&y, &(&j_in * dir), &(&j_in * u))?;
        let inner_part = self.outer.jacobian(&y)? * self.inner.jacobian_dot(x, dir, u)?;
        Ok(outer_part + inner_part)
    }
}

/// Scaled, shifted distance between two robots:
/// `z = ‖x_i − x_j‖ / scale − offset` on the stacked input `(x_i, x_j)`.
#[derive(Clone, Debug)]
pub struct PairDistance {
    robot_dim: usize,
    scale: f64,
    offset: f64,
    pair: (RobotId, RobotId),
}

/// Below this separation the distance map is treated as non-differentiable.
pub const COINCIDENT_TOLERANCE: f64 = 1e-12;

impl PairDistance {
    pub fn new(robot_dim: usize, scale: f64, offset: f64, pair: (RobotId, RobotId)) -> Self {
        Self {
            robot_dim,
            scale,
            offset,
            pair,
        }
    }

    pub fn pair(&self) -> (RobotId, RobotId) {
        self.pair
    }

    fn split(&self, x: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
        check_dim("pair distance map", 2 * self.robot_dim, x.len())?;
        let n = self.robot_dim;
        let r = x.rows(0, n) - x.rows(n, n);
        let s = r.norm();
        Ok((r, s))
    }

    fn unit(&self, x: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
        let (r, s) = self.split(x)?;
        if s < COINCIDENT_TOLERANCE {
            return Err(RmpError::CoincidentRobots { pair: self.pair });
        }
        Ok((r / s, s))
    }
}

impl TaskMap for PairDistance {
    fn dim_in(&self) -> usize {
        2 * self.robot_dim
    }
    fn dim_out(&self) -> usize {
        1
    }
    fn value(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let (_, s) = self.split(x)?;
        Ok(DVector::from_element(1, s / self.scale - self.offset))
    }
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let (rhat, _) = self.unit(x)?;
        let n = self.robot_dim;
        let mut j = DMatrix::zeros(1, 2 * n);
        for k in 0..n {
            j[(0, k)] = rhat[k] / self.scale;
            j[(0, n + k)] = -rhat[k] / self.scale;
        }
        Ok(j)
    }
    fn jacobian_dot(
        &self,
        x: &DVector<f64>,
        dir: &DVector<f64>,
        u: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let (rhat, s) = self.unit(x)?;
        let n = self.robot_dim;
        let dr = dir.rows(0, n) - dir.rows(n, n);
        let du = u.rows(0, n) - u.rows(n, n);
        let value = (dr.dot(&du) - rhat.dot(&dr) * rhat.dot(&du)) / (s * self.scale);
        Ok(DVector::from_element(1, value))
    }
}

/// `z = x − g`.
#[derive(Clone, Debug)]
pub struct GoalOffset {
    goal: DVector<f64>,
}

impl GoalOffset {
    pub fn new(goal: DVector<f64>) -> Self {
        Self { goal }
    }

    pub fn goal(&self) -> &DVector<f64> {
        &self.goal
    }
}

impl TaskMap for GoalOffset {
    fn dim_in(&self) -> usize {
        self.goal.len()
    }
    fn dim_out(&self) -> usize {
        self.goal.len()
    }
    fn value(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("goal offset map", self.goal.len(), x.len())?;
        Ok(x - &self.goal)
    }
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim("goal offset map", self.goal.len(), x.len())?;
        let n = self.goal.len();
        Ok(DMatrix::identity(n, n))
    }
    fn jacobian_dot(
        &self,
        _x: &DVector<f64>,
        _dir: &DVector<f64>,
        _u: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        Ok(DVector::zeros(self.goal.len()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::fd_check_jacobian;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    /// Independent J̇ẋ reference: (J(x + hẋ) − J(x − hẋ)) / 2h · ẋ.
    fn fd_jdot(map: &dyn TaskMap, x: &DVector<f64>, xd: &DVector<f64>) -> DVector<f64> {
        let h = 1e-6;
        (map.jacobian(&(x + xd * h)).unwrap() - map.jacobian(&(x - xd * h)).unwrap()) * xd
            / (2.0 * h)
    }

    #[test]
    fn pair_distance_pushforward_example() {
        let map = PairDistance::new(2, 0.5, 1.0, (1, 2));
        let x = v(&[1.0, 0.0, 0.0, 0.0]);
        let xd = v(&[1.0, 0.0, 0.0, 0.0]);
        assert!((map.value(&x).unwrap()[0] - 1.0).abs() < 1e-15);
        let zd = map.jacobian(&x).unwrap() * &xd;
        assert!((zd[0] - 2.0).abs() < 1e-15);
        let err = fd_check_jacobian(|p| map.value(p).unwrap(), &map.jacobian(&x).unwrap(), &x);
        assert!(err < 1e-5, "{err}");
    }

    #[test]
    fn pair_distance_rejects_coincident() {
        let map = PairDistance::new(2, 1.0, 0.0, (3, 4));
        let x = v(&[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(
            map.jacobian(&x),
            Err(RmpError::CoincidentRobots { pair: (3, 4) })
        );
        assert!(map.value(&x).is_ok());
    }

    #[test]
    fn pair_distance_jdot_matches_fd() {
        let map = PairDistance::new(2, 0.3, 1.0, (1, 2));
        let x = v(&[0.4, -0.2, -0.7, 0.9]);
        let xd = v(&[1.2, 0.3, -0.5, 0.8]);
        let analytic = map.jac_rate_times_vel(&x, &xd).unwrap();
        let fd = fd_jdot(&map, &x, &xd);
        assert!((analytic[0] - fd[0]).abs() <= 1e-4 * fd[0].abs().max(1e-12));
    }

    #[test]
    fn compose_chain_rule() {
        let sel = Arc::new(Selection::new(6, vec![4, 5, 0, 1]).unwrap());
        let dist = Arc::new(PairDistance::new(2, 1.0, 0.25, (3, 1)));
        let comp = Compose::new(sel, dist).unwrap();
        let x = v(&[0.1, 0.2, 9.0, 9.0, 1.1, -0.4]);
        let xd = v(&[0.3, -0.2, 5.0, 5.0, -0.6, 0.7]);
        let err = fd_check_jacobian(|p| comp.value(p).unwrap(), &comp.jacobian(&x).unwrap(), &x);
        assert!(err < 1e-5);
        let a = comp.jac_rate_times_vel(&x, &xd).unwrap();
        let b = fd_jdot(&comp, &x, &xd);
        assert!((a[0] - b[0]).abs() <= 1e-4 * b[0].abs());
    }

    #[test]
    fn selection_validates_indices() {
        assert!(Selection::new(2, vec![0, 2]).is_err());
    }
}
