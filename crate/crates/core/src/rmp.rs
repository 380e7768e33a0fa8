//! RMP data model and the three RMP-algebra operators.
//!
//! An RMP lives on some chart of a manifold and comes in two equivalent
//! forms: the natural form `[f, M]` (force and inertia) and the canonical
//! form `(a, M)` with `f = M a`. Trees combine RMPs in the natural form and
//! convert to the canonical form once, at the root.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Result, RmpError};
use crate::linalg::{self, PSD_EIGEN_FLOOR, SYMMETRY_TOLERANCE};
use crate::task_map::TaskMap;

/// Position and velocity on a chart.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub x: DVector<f64>,
    pub xdot: DVector<f64>,
}

impl State {
    pub fn new(x: DVector<f64>, xdot: DVector<f64>) -> Result<Self> {
        check_dim("state velocity", x.len(), xdot.len())?;
        let state = Self { x, xdot };
        if !state.is_finite() {
            return Err(RmpError::NonFinite {
                what: "state".into(),
            });
        }
        Ok(state)
    }

    pub fn from_slices(x: &[f64], xdot: &[f64]) -> Result<Self> {
        Self::new(
            DVector::from_column_slice(x),
            DVector::from_column_slice(xdot),
        )
    }

    pub fn at_rest(x: DVector<f64>) -> Self {
        let n = x.len();
        Self {
            x,
            xdot: DVector::zeros(n),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::at_rest(DVector::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        linalg::all_finite_vec(&self.x) && linalg::all_finite_vec(&self.xdot)
    }
}

/// Natural form `[f, M]`.
#[derive(Clone, Debug, PartialEq)]
pub struct NaturalRmp {
    pub f: DVector<f64>,
    pub m: DMatrix<f64>,
}

impl NaturalRmp {
    pub fn new(f: DVector<f64>, m: DMatrix<f64>) -> Result<Self> {
        check_dim("rmp inertia rows", f.len(), m.nrows())?;
        check_dim("rmp inertia cols", f.len(), m.ncols())?;
        Ok(Self { f, m })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            f: DVector::zeros(dim),
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.f.len()
    }

    /// Checks that the inertia is symmetric and positive semidefinite within
    /// the crate-wide tolerances.
    pub fn is_well_formed(&self) -> bool {
        linalg::is_symmetric(&self.m, SYMMETRY_TOLERANCE)
            && linalg::is_psd(&self.m, PSD_EIGEN_FLOOR)
    }

    pub fn is_finite(&self) -> bool {
        linalg::all_finite_vec(&self.f) && linalg::all_finite_mat(&self.m)
    }
}

impl std::ops::Add for NaturalRmp {
    type Output = NaturalRmp;

    fn add(self, rhs: NaturalRmp) -> NaturalRmp {
        NaturalRmp {
            f: self.f + rhs.f,
            m: self.m + rhs.m,
        }
    }
}

/// Canonical form `(a, M)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalRmp {
    pub a: DVector<f64>,
    pub m: DMatrix<f64>,
}

impl CanonicalRmp {
    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn to_natural(&self) -> NaturalRmp {
        NaturalRmp {
            f: &self.m * &self.a,
            m: self.m.clone(),
        }
    }
}

/// Propagates a parent state through a task map: `(ψ(x), J(x) ẋ)`.
pub fn pushforward(parent: &State, map: &dyn TaskMap) -> Result<State> {
    check_dim("pushforward input", map.dim_in(), parent.dim())?;
    let y = map.value(&parent.x)?;
    let j = map.jacobian(&parent.x)?;
    let ydot = j * &parent.xdot;
    Ok(State { x: y, xdot: ydot })
}

/// Combines child RMPs into the parent chart:
/// `f = Σ Jᵀ (f_c − M_c J̇ ẋ)`, `M = Σ Jᵀ M_c J`.
pub fn pullback(children: &[(NaturalRmp, &dyn TaskMap)], parent: &State) -> Result<NaturalRmp> {
    let n = parent.dim();
    let mut acc = NaturalRmp::zeros(n);
    for (rmp, map) in children {
        check_dim("pullback map input", map.dim_in(), n)?;
        check_dim("pullback child rmp", map.dim_out(), rmp.dim())?;
        let j = map.jacobian(&parent.x)?;
        let jdot_xdot = map.jac_rate_times_vel(&parent.x, &parent.xdot)?;
        accumulate_pullback(&mut acc, rmp, &j, &jdot_xdot);
    }
    Ok(acc)
}

pub(crate) fn accumulate_pullback(
    acc: &mut NaturalRmp,
    child: &NaturalRmp,
    j: &DMatrix<f64>,
    jdot_xdot: &DVector<f64>,
) {
    let jt = j.transpose();
    let force = &child.f - &child.m * jdot_xdot;
    acc.f += &jt * force;
    acc.m += &jt * &child.m * j;
}

/// Maps `[f, M]` to `(M† f, M)`.
pub fn resolve(rmp: &NaturalRmp) -> Result<CanonicalRmp> {
    check_dim("resolve inertia", rmp.dim(), rmp.m.nrows())?;
    if !rmp.is_finite() {
        return Err(RmpError::NonFinite {
            what: "rmp passed to resolve".into(),
        });
    }
    Ok(CanonicalRmp {
        a: linalg::pinv_solve(&rmp.m, &rmp.f),
        m: rmp.m.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task_map::{Identity, LinearMap};

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn state_rejects_mismatched_dims() {
        assert!(State::from_slices(&[1.0, 2.0], &[0.0]).is_err());
        assert!(State::from_slices(&[f64::NAN], &[0.0]).is_err());
    }

    #[test]
    fn pushforward_identity_and_linear() {
        let s = State::from_slices(&[3.0, 5.0], &[1.0, 1.0]).unwrap();
        assert_eq!(pushforward(&s, &Identity::new(2)).unwrap(), s);

        let a = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let y = pushforward(&s, &LinearMap::new(a)).unwrap();
        assert_eq!(y.x, v(&[3.0]));
        assert_eq!(y.xdot, v(&[1.0]));

        assert!(pushforward(&s, &Identity::new(3)).is_err());
    }

    #[test]
    fn pullback_examples() {
        let parent = State::zeros(2);
        let id = Identity::new(2);
        let child = NaturalRmp::new(v(&[1.0, 2.0]), DMatrix::identity(2, 2)).unwrap();

        let one = pullback(&[(child.clone(), &id)], &parent).unwrap();
        assert_eq!(one.f, v(&[1.0, 2.0]));
        assert_eq!(one.m, DMatrix::identity(2, 2));

        let two = pullback(&[(child.clone(), &id), (child, &id)], &parent).unwrap();
        assert_eq!(two.f, v(&[2.0, 4.0]));
        assert_eq!(two.m, DMatrix::identity(2, 2) * 2.0);

        let sel = LinearMap::new(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]));
        let scalar = NaturalRmp::new(v(&[3.0]), DMatrix::from_element(1, 1, 2.0)).unwrap();
        let r = pullback(&[(scalar, &sel)], &parent).unwrap();
        assert_eq!(r.f, v(&[3.0, 0.0]));
        assert_eq!(r.m, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]));

        let empty = pullback(&[], &parent).unwrap();
        assert_eq!(empty, NaturalRmp::zeros(2));
    }

    #[test]
    fn pullback_rejects_wrong_child_dim() {
        let parent = State::zeros(2);
        let id = Identity::new(2);
        let bad = NaturalRmp::zeros(3);
        assert!(matches!(
            pullback(&[(bad, &id)], &parent),
            Err(RmpError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn resolve_examples() {
        let r = resolve(&NaturalRmp::new(v(&[2.0, 4.0]), DMatrix::identity(2, 2) * 2.0).unwrap())
            .unwrap();
        assert!((r.a - v(&[1.0, 2.0])).amax() < 1e-14);

        let m = DMatrix::from_diagonal(&v(&[1.0, 0.0]));
        let r = resolve(&NaturalRmp::new(v(&[3.0, 5.0]), m).unwrap()).unwrap();
        assert!((r.a - v(&[3.0, 0.0])).amax() < 1e-14);

        let r = resolve(&NaturalRmp::new(v(&[7.0, -1.0]), DMatrix::zeros(2, 2)).unwrap()).unwrap();
        assert_eq!(r.a, v(&[0.0, 0.0]));

        let bad = NaturalRmp {
            f: v(&[f64::INFINITY]),
            m: DMatrix::identity(1, 1),
        };
        assert!(resolve(&bad).is_err());
    }
}
