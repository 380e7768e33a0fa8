//! Geometric dynamical system (GDS) leaves.
//!
//! A leaf on an `m`-dimensional chart is defined by a metric `G(x, ẋ)`, a
//! damping matrix `B(x, ẋ)` and a potential `Φ(x)`. Its dynamics
//!
//! ```text
//! (G + Ξ_G) ẍ + ξ_G = −∇Φ − B ẋ
//! ```
//!
//! give the natural-form RMP `[−∇Φ − B ẋ − ξ_G, G + Ξ_G]`, where
//!
//! ```text
//! Ξ_G = ½ Σᵢ ẋᵢ ∂_ẋ gᵢ
//! ξ_G = Ġ_x ẋ − ½ ∇_x (ẋᵀ G ẋ),   Ġ_x = [∂_x gᵢ ẋ]ᵢ
//! ```
//!
//! and `gᵢ` is the i-th column of `G`.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Result, RmpError};
use crate::linalg;
use crate::rmp::{NaturalRmp, State};
use crate::task_map::FD_STEP;

/// Partial derivatives of the metric: `wrt_x[k] = ∂G/∂x_k` and
/// `wrt_xdot[k] = ∂G/∂ẋ_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricPartials {
    pub wrt_x: Vec<DMatrix<f64>>,
    pub wrt_xdot: Vec<DMatrix<f64>>,
}

impl MetricPartials {
    /// Partials of a constant metric.
    pub fn zero(dim: usize) -> Self {
        Self {
            wrt_x: vec![DMatrix::zeros(dim, dim); dim],
            wrt_xdot: vec![DMatrix::zeros(dim, dim); dim],
        }
    }

    /// `Σ_k v_k ∂G/∂x_k`; with `v = ẋ` this is `Ġ_x`.
    pub fn gdot_x(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let m = v.len();
        let mut out = DMatrix::zeros(m, m);
        for (k, p) in self.wrt_x.iter().enumerate() {
            if v[k] != 0.0 {
                out += p * v[k];
            }
        }
        out
    }
}

pub trait GdsLeaf: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// Rejects leaf coordinates outside the domain of the metric or potential.
    fn check_domain(&self, _x: &DVector<f64>) -> Result<()> {
        Ok(())
    }

    fn metric(&self, x: &DVector<f64>, xdot: &DVector<f64>) -> DMatrix<f64>;

    fn damping(&self, x: &DVector<f64>, xdot: &DVector<f64>) -> DMatrix<f64>;

    fn potential(&self, x: &DVector<f64>) -> f64;

    fn potential_grad(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Analytic leaves override this; the default differentiates
    /// [`GdsLeaf::metric`] numerically.
    fn metric_partials(&self, x: &DVector<f64>, xdot: &DVector<f64>) -> MetricPartials {
        fd_metric_partials(self, x, xdot)
    }
}

/// Central-difference metric partials with step [`FD_STEP`].
pub fn fd_metric_partials<L: GdsLeaf + ?Sized>(
    leaf: &L,
    x: &DVector<f64>,
    xdot: &DVector<f64>,
) -> MetricPartials {
    let m = leaf.dim();
    let h = FD_STEP;
    let mut wrt_x = Vec::with_capacity(m);
    let mut wrt_xdot = Vec::with_capacity(m);
    for k in 0..m {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        wrt_x.push((leaf.metric(&xp, xdot) - leaf.metric(&xm, xdot)) / (2.0 * h));

        let mut vp = xdot.clone();
        let mut vm = xdot.clone();
        vp[k] += h;
        vm[k] -= h;
        wrt_xdot.push((leaf.metric(x, &vp) - leaf.metric(x, &vm)) / (2.0 * h));
    }
    MetricPartials { wrt_x, wrt_xdot }
}

fn check_state<L: GdsLeaf + ?Sized>(leaf: &L, s: &State) -> Result<()> {
    check_dim("leaf state", leaf.dim(), s.x.len())?;
    check_dim("leaf state velocity", leaf.dim(), s.xdot.len())
}

/// `Ξ_G` from precomputed partials. Column `k` equals `½ (∂G/∂ẋ_k) ẋ`.
pub fn curvature_matrix_from(partials: &MetricPartials, xdot: &DVector<f64>) -> DMatrix<f64> {
    let m = xdot.len();
    let mut out = DMatrix::zeros(m, m);
    for (k, q) in partials.wrt_xdot.iter().enumerate() {
        out.set_column(k, &((q * xdot) * 0.5));
    }
    out
}

/// `ξ_G` from precomputed partials.
pub fn curvature_force_from(partials: &MetricPartials, xdot: &DVector<f64>) -> DVector<f64> {
    let m = xdot.len();
    let gdot = partials.gdot_x(xdot);
    let grad_energy =
        DVector::from_iterator(m, partials.wrt_x.iter().map(|p| xdot.dot(&(p * xdot))));
    gdot * xdot - grad_energy * 0.5
}

/// Curvature matrix `Ξ_G(x, ẋ)`.
pub fn curvature_matrix<L: GdsLeaf + ?Sized>(leaf: &L, s: &State) -> Result<DMatrix<f64>> {
    check_state(leaf, s)?;
    Ok(curvature_matrix_from(
        &leaf.metric_partials(&s.x, &s.xdot),
        &s.xdot,
    ))
}

/// Curvature force `ξ_G(x, ẋ)`.
pub fn curvature_force<L: GdsLeaf + ?Sized>(leaf: &L, s: &State) -> Result<DVector<f64>> {
    check_state(leaf, s)?;
    Ok(curvature_force_from(
        &leaf.metric_partials(&s.x, &s.xdot),
        &s.xdot,
    ))
}

fn finite_or_err(rmp: NaturalRmp) -> Result<NaturalRmp> {
    if rmp.is_finite() {
        Ok(rmp)
    } else {
        Err(RmpError::NonFinite {
            what: "leaf rmp".into(),
        })
    }
}

/// Natural-form RMP of a GDS leaf: `f = −∇Φ − Bẋ − ξ_G`, `M = G + Ξ_G`.
pub fn evaluate_gds_leaf<L: GdsLeaf + ?Sized>(leaf: &L, s: &State) -> Result<NaturalRmp> {
    check_state(leaf, s)?;
    leaf.check_domain(&s.x)?;
    let g = leaf.metric(&s.x, &s.xdot);
    let b = leaf.damping(&s.x, &s.xdot);
    let partials = leaf.metric_partials(&s.x, &s.xdot);
    let m = g + curvature_matrix_from(&partials, &s.xdot);
    let f = -leaf.potential_grad(&s.x) - b * &s.xdot - curvature_force_from(&partials, &s.xdot);
    finite_or_err(NaturalRmp { f, m })
}

/// Leaf RMP used by partial RMPflow:
/// `f = −∇Φ − Bż − ½ Ġ_z ż`, `M = G + Ξ_G`, all evaluated at the partial
/// state `(z, ż)`.
///
/// `transport` is the velocity used to assemble `Ġ_z = Σ_k v_k ∂G/∂z_k`.
/// `None` uses `ż` itself; passing the full leaf velocity compensates for
/// the motion of the other participants.
pub fn evaluate_partial_leaf<L: GdsLeaf + ?Sized>(
    leaf: &L,
    s: &State,
    transport: Option<&DVector<f64>>,
) -> Result<NaturalRmp> {
    check_state(leaf, s)?;
    if let Some(t) = transport {
        check_dim("partial leaf transport velocity", leaf.dim(), t.len())?;
    }
    leaf.check_domain(&s.x)?;
    let g = leaf.metric(&s.x, &s.xdot);
    let b = leaf.damping(&s.x, &s.xdot);
    let partials = leaf.metric_partials(&s.x, &s.xdot);
    let m = g + curvature_matrix_from(&partials, &s.xdot);
    let gdot = partials.gdot_x(transport.unwrap_or(&s.xdot));
    let f = -leaf.potential_grad(&s.x) - b * &s.xdot - (gdot * &s.xdot) * 0.5;
    finite_or_err(NaturalRmp { f, m })
}

/// `½ ẋᵀ G ẋ + Φ`.
pub fn leaf_energy<L: GdsLeaf + ?Sized>(leaf: &L, s: &State) -> f64 {
    let g = leaf.metric(&s.x, &s.xdot);
    0.5 * s.xdot.dot(&(g * &s.xdot)) + leaf.potential(&s.x)
}

/// True if the metric at `s` is symmetric within the crate tolerance.
pub fn metric_is_symmetric<L: GdsLeaf + ?Sized>(leaf: &L, s: &State) -> bool {
    linalg::is_symmetric(&leaf.metric(&s.x, &s.xdot), linalg::SYMMETRY_TOLERANCE)
}
