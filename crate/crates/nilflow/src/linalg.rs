//! Small dense linear-algebra helpers shared across the crate.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value threshold for rank and kernel decisions.
pub const RANK_TOL: f64 = 1e-10;

/// Frobenius norm of the commutator `AB - BA`.
pub fn commutator_norm(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a * b - b * a).norm()
}

/// Maximum absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Checks that `m` is skew-symmetric with respect to the inner product
/// `<x, y> = x^T g y`, i.e. `(g m)^T = -g m`.
pub fn is_skew_wrt(g: &DMatrix<f64>, m: &DMatrix<f64>, tol: f64) -> bool {
    let gm = g * m;
    let resid = &gm + gm.transpose();
    max_abs(&resid) <= tol * f64::max(1.0, max_abs(&gm))
}

/// Checks that `m` is symmetric with respect to `<x, y> = x^T g y`.
pub fn is_symmetric_wrt(g: &DMatrix<f64>, m: &DMatrix<f64>, tol: f64) -> bool {
    let gm = g * m;
    let resid = &gm - gm.transpose();
    max_abs(&resid) <= tol * f64::max(1.0, max_abs(&gm))
}

/// Numerical rank with a relative singular-value cutoff.
pub fn rank_with_tol(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let svd = m.clone().svd(false, false);
    let sigma_max = svd.singular_values.max();
    if sigma_max <= 0.0 {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|&&s| s > rel_tol * sigma_max)
        .count()
}

/// Orthonormal basis of the null space of `m` (requires `nrows >= ncols` so
/// the thin SVD carries a full set of right singular vectors).
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let n = m.ncols();
    assert!(
        m.nrows() >= n,
        "null_space expects at least as many rows as columns"
    );
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sigma_max = svd.singular_values.max();
    let mut basis = Vec::new();
    for i in 0..n {
        let sigma = if i < svd.singular_values.len() {
            svd.singular_values[i]
        } else {
            0.0
        };
        if sigma_max <= 0.0 || sigma <= rel_tol * sigma_max {
            basis.push(v_t.row(i).transpose());
        }
    }
    basis
}

/// Matrix exponential by scaling and squaring with a diagonal Padé
/// approximant of order 6.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "expm expects a square matrix");
    // Scale until the 1-norm is below the order-6 accuracy radius.
    let norm = one_norm(m);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    let a = m / 2f64.powi(squarings as i32);

    // [6/6] Padé coefficients of exp.
    const B: [f64; 7] = [
        1.0,
        1.0 / 2.0,
        5.0 / 44.0,
        1.0 / 66.0,
        1.0 / 792.0,
        1.0 / 15840.0,
        1.0 / 665280.0,
    ];
    let eye = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let odd = &a * (&eye * B[1] + &a2 * B[3] + &a4 * B[5]);
    let even = &eye * B[0] + &a2 * B[2] + &a4 * B[4] + &a4 * &a2 * B[6];

    let denom = &even - &odd;
    let numer = &even + &odd;
    let mut result = denom
        .lu()
        .solve(&numer)
        .expect("Padé denominator is nonsingular for scaled input");
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max)
}
