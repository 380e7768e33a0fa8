//! Curvature terms of a velocity-dependent metric, analytic against finite
//! differences, and the energy of a GDS leaf along a short rollout.

use nalgebra::{DMatrix, DVector};
use rmpflow::gds::{curvature_force, curvature_matrix, evaluate_gds_leaf, leaf_energy};
use rmpflow::oracle::{fd_curvature, relative_error_mat, relative_error_vec};
use rmpflow::sim::{step, Integrator};
use rmpflow::{GdsLeaf, Result, State};

/// One-dimensional leaf that gets heavier when moving towards the origin:
/// `G = 1 + x² + min(0, x ẋ)²`, `Φ = ½ x²`, `B = 0.5 G`.
#[derive(Debug)]
struct ApproachWeighted;

impl GdsLeaf for ApproachWeighted {
    fn dim(&self) -> usize {
        1
    }

    fn metric(&self, x: &DVector<f64>, xdot: &DVector<f64>) -> DMatrix<f64> {
        let closing = (x[0] * xdot[0]).min(0.0);
        DMatrix::from_element(1, 1, 1.0 + x[0] * x[0] + closing * closing)
    }

    fn damping(&self, x: &DVector<f64>, xdot: &DVector<f64>) -> DMatrix<f64> {
        self.metric(x, xdot) * 0.5
    }

    fn potential(&self, x: &DVector<f64>) -> f64 {
        0.5 * x[0] * x[0]
    }

    fn potential_grad(&self, x: &DVector<f64>) -> DVector<f64> {
        x.clone()
    }
}

fn main() -> Result<()> {
    let leaf = ApproachWeighted;
    for (x, v) in [(1.0, -0.5), (-0.7, 0.9), (0.3, 0.4)] {
        let s = State::from_slices(&[x], &[v])?;
        let xi = curvature_matrix(&leaf, &s)?;
        let force = curvature_force(&leaf, &s)?;
        let (xi_fd, force_fd) = fd_curvature(&leaf, &s);
        println!(
            "x={x:5.2} v={v:5.2}  Xi={:8.5} (fd err {:.1e})  xi={:8.5} (fd err {:.1e})",
            xi[(0, 0)],
            relative_error_mat(&xi, &xi_fd),
            force[0],
            relative_error_vec(&force, &force_fd)
        );
    }

    // The leaf on its own is a GDS, so ½ẋᵀGẋ + Φ should not grow.
    let mut s = State::from_slices(&[1.5], &[-1.0])?;
    let mut energy = leaf_energy(&leaf, &s);
    println!("t=0.00 V={energy:.6}");
    for k in 1..=400 {
        s = step(
            |st| {
                evaluate_gds_leaf(&leaf, st)
                    .and_then(|r| rmpflow::resolve(&r))
                    .map(|c| c.a)
            },
            &s,
            0.01,
            Integrator::Rk4,
        )?;
        let next = leaf_energy(&leaf, &s);
        assert!(next <= energy + 1e-9, "energy increased at step {k}");
        energy = next;
        if k % 100 == 0 {
            println!("t={:.2} x={:+.5} V={energy:.6}", k as f64 * 0.01, s.x[0]);
        }
    }
    Ok(())
}
