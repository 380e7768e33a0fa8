//! Small dense linear-algebra helpers shared by the RMP operators.

use nalgebra::{DMatrix, DVector};

/// Singular values below this fraction of the largest one are treated as zero
/// by [`pinv_solve`].
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-8;

/// Absolute tolerance on `|M - Mᵀ|` for an inertia matrix to count as symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// Smallest eigenvalue accepted before a matrix is flagged as indefinite.
pub const PSD_EIGEN_FLOOR: f64 = -1e-9;

/// Thin SVD `m = U diag(s) Vᵀ` with singular values in decreasing order.
///
/// nalgebra's bidiagonal SVD returns wrong factors for some block-sparse
/// matrices that show up as root inertias, so this goes through faer.
fn svd(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let (r, c) = m.shape();
    let k = r.min(c);
    let a = faer::Mat::<f64>::from_fn(r, c, |i, j| m[(i, j)]);
    match a.thin_svd() {
        Ok(svd) => {
            let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
            (
                DMatrix::from_fn(r, k, |i, j| u[(i, j)]),
                DVector::from_fn(k, |i, _| s[i]),
                DMatrix::from_fn(c, k, |i, j| v[(i, j)]),
            )
        }
        // Only non-finite input fails to converge; propagate the NaNs.
        Err(_) => (
            DMatrix::from_element(r, k, f64::NAN),
            DVector::from_element(k, f64::NAN),
            DMatrix::from_element(c, k, f64::NAN),
        ),
    }
}

fn inverse_singular_values(s: &DVector<f64>) -> DVector<f64> {
    let largest = s.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = PINV_RELATIVE_CUTOFF * largest;
    s.map(|v| {
        if largest > 0.0 && v > cutoff {
            1.0 / v
        } else {
            0.0
        }
    })
}

/// Computes `M† f` through a truncated singular value decomposition.
pub fn pinv_solve(m: &DMatrix<f64>, f: &DVector<f64>) -> DVector<f64> {
    if m.ncols() == 0 {
        return DVector::zeros(0);
    }
    let (u, s, v) = svd(m);
    let coeffs = (u.transpose() * f).component_mul(&inverse_singular_values(&s));
    v * coeffs
}

/// Moore-Penrose inverse with the same truncation rule as [`pinv_solve`].
pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return DMatrix::zeros(c, r);
    }
    let (u, s, v) = svd(m);
    v * DMatrix::from_diagonal(&inverse_singular_values(&s)) * u.transpose()
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return false;
            }
        }
    }
    true
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

pub fn is_psd(m: &DMatrix<f64>, floor: f64) -> bool {
    min_eigenvalue(m) >= floor
}

pub fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_mat(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn all_finite_vec(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

pub fn all_finite_mat(m: &DMatrix<f64>) -> bool {
    m.iter().all(|x| x.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinv_solve_of_zero_is_zero() {
        let m = DMatrix::zeros(3, 3);
        let f = DVector::from_vec(vec![1.0, -2.0, 5.0]);
        assert_eq!(pinv_solve(&m, &f), DVector::zeros(3));
    }

    #[test]
    fn pinv_solve_drops_tiny_singular_values() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-12]));
        let f = DVector::from_vec(vec![2.0, 3.0]);
        let a = pinv_solve(&m, &f);
        assert!((a[0] - 2.0).abs() < 1e-14);
        assert_eq!(a[1], 0.0);
    }

    #[test]
    fn pinv_matches_pinv_solve() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.0, 0.0, 0.0, 0.0]);
        let f = DVector::from_vec(vec![1.0, 2.0, 0.0]);
        let a1 = pinv(&m) * &f;
        let a2 = pinv_solve(&m, &f);
        assert!((a1 - a2).amax() < 1e-12);
    }

    #[test]
    fn psd_checks() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-10]);
        assert!(is_psd(&m, PSD_EIGEN_FLOOR));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-6]);
        assert!(!is_psd(&m, PSD_EIGEN_FLOOR));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0 + 1e-6, 1.0]);
        assert!(!is_symmetric(&m, SYMMETRY_TOLERANCE));
    }

    /// Root inertia of a six-robot formation tree with one decoupled robot.
    /// Bidiagonal SVD in nalgebra reconstructs this with an error near 3e-3.
    #[rustfmt::skip]
    const BLOCK_SPARSE_INERTIA: [f64; 144] = [
        2.882614043300975, 0.07232878634223808, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0,
        -0.9947408884115593, -0.07232878634223808, 0.0, 0.0,
        0.07232878634223808, 1.8931322664778567, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0,
        -0.07232878634223808, -0.005259111588440798, 0.0, 0.0,
        0.0, 0.0, 2.9771759740324923, 0.0,
        0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 2.9771759740324923,
        0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0,
        4.706104181414312, -0.9704743122546643, -0.20862462776618754, 0.40632547601105107,
        -0.9542510795833581, 0.20894007920299437, -0.851890237036577, 0.3552087570406188,
        0.0, 0.0, 0.0, 0.0,
        -0.9704743122546643, 3.6765722926420663, 0.40632547601105107, -0.7913753722338126,
        0.20894007920299437, -0.04574892041664178, 0.3552087570406188, -0.14810976296342268,
        0.0, 0.0, 0.0, 0.0,
        -0.20862462776618754, 0.40632547601105107, 2.7191770438629126, -0.40632547601105107,
        0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0,
        0.40632547601105107, -0.7913753722338126, -0.40632547601105107, 3.301927788330538,
        0.0, 0.0, 0.0, 0.0,
        -0.9947408884115593, -0.07232878634223808, 0.0, 0.0,
        -0.9542510795833581, 0.20894007920299437, 0.0, 0.0,
        3.1712874391402823, -0.08745005922089913, -0.9975773036494001, -0.04916123363985715,
        -0.07232878634223808, -0.005259111588440798, 0.0, 0.0,
        0.20894007920299437, -0.04574892041664178, 0.0, 0.0,
        -0.08745005922089913, 0.27814889585164704, -0.04916123363985715, -0.002422696350599832,
        0.0, 0.0, 0.0, 0.0,
        -0.851890237036577, 0.3552087570406188, 0.0, 0.0,
        -0.9975773036494001, -0.04916123363985715, 3.9506323602695046, -0.3060475234007617,
        0.0, 0.0, 0.0, 0.0,
        0.3552087570406188, -0.14810976296342268, 0.0, 0.0,
        -0.04916123363985715, -0.002422696350599832, -0.3060475234007617, 2.25169727889755,
    ];

    #[test]
    fn pinv_solve_handles_block_sparse_inertia() {
        let m = DMatrix::from_column_slice(12, 12, &BLOCK_SPARSE_INERTIA);
        let f = DVector::from_fn(12, |i, _| (i as f64 * 0.7).sin());
        let a = pinv_solve(&m, &f);
        assert!((&m * a - &f).amax() < 1e-12);
        assert!((&m * pinv(&m) * &m - &m).amax() < 1e-12);
    }
}
