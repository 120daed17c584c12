//! Arbitrary left-invariant metrics on the Heisenberg group.
//!
//! Every left-invariant metric is isometric to one given by a positive
//! operator `diag(P, lambda)` over the `v ⊕ z` splitting. The twisted map
//! `j_P(Z) = lambda P^{-1} j(Z)` plays the role of the complex structure, and
//! the commuting families are rebuilt from a metric-orthogonal eigenbasis of
//! `P` closed under `J`.

use nalgebra::{DMatrix, DVector};

use crate::algebra::{AlgebraVector, TwoStepAlgebra};
use crate::error::{Error, Result};
use crate::heisenberg;
use crate::integrals::FirstIntegral;
use crate::linalg;

/// Relative tolerance for deciding that a candidate vector is still an
/// eigenvector during the pairing construction.
const PAIR_TOL: f64 = 1e-8;

/// A left-invariant metric `diag(P, lambda)` on the Heisenberg group with
/// everything derived from it.
#[derive(Clone, Debug)]
pub struct PMetric {
    n: usize,
    p_tilde: DMatrix<f64>,
    lambda: f64,
    algebra: TwoStepAlgebra,
    j_p: DMatrix<f64>,
    /// Standard-orthonormal eigenbasis `U_1, ..., U_2n` with
    /// `U_{2i} = J U_{2i-1}`.
    basis: Vec<DVector<f64>>,
    eigenvalues: Vec<f64>,
    /// Projectors onto the pair planes, symmetric for the P-metric.
    pair_maps: Vec<DMatrix<f64>>,
}

impl PMetric {
    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn p_tilde(&self) -> &DMatrix<f64> {
        &self.p_tilde
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// The Heisenberg algebra equipped with the P inner product and the
    /// twisted j-map; all symplectic and flow machinery runs on this.
    pub fn algebra(&self) -> &TwoStepAlgebra {
        &self.algebra
    }

    pub fn j_p(&self) -> &DMatrix<f64> {
        &self.j_p
    }

    pub fn eigen_basis(&self) -> &[DVector<f64>] {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn pair_maps(&self) -> &[DMatrix<f64>] {
        &self.pair_maps
    }

    /// Linear integral of the central direction in the P metric.
    pub fn central_integral(&self) -> FirstIntegral {
        FirstIntegral::central_basis(&self.algebra)
    }

    /// Quadratic integral of the i-th pair projector (1-based).
    pub fn quadratic_integral(&self, i: usize) -> FirstIntegral {
        FirstIntegral::quadratic_on_v(&self.algebra, self.pair_maps[i - 1].clone())
            .expect("pair maps are P-symmetric and annihilate the center")
            .with_label(format!("g_A{i}~"))
    }

    /// Translation integral of the k-th eigenbasis direction (1-based).
    pub fn translation_integral(&self, k: usize) -> FirstIntegral {
        let u = AlgebraVector::from_parts(self.basis[k - 1].clone(), DVector::zeros(1));
        FirstIntegral::killing_vector(&self.algebra, u)
            .expect("basis vectors conform")
            .with_label(format!("F_{k}~"))
    }

    /// The two commuting families: odd picks `F~_{2k-1}`, even `F~_{2k}`.
    pub fn families(&self) -> (Vec<FirstIntegral>, Vec<FirstIntegral>) {
        let quadratics: Vec<FirstIntegral> =
            (1..=self.n).map(|i| self.quadratic_integral(i)).collect();
        let mut odd = vec![self.central_integral()];
        odd.extend(quadratics.iter().cloned());
        for k in 1..=self.n {
            odd.push(self.translation_integral(2 * k - 1));
        }
        let mut even = vec![self.central_integral()];
        even.extend(quadratics);
        for k in 1..=self.n {
            even.push(self.translation_integral(2 * k));
        }
        (odd, even)
    }
}

/// Builds the P-metric model, constructing an orthonormal `P`-eigenbasis of
/// `v` closed under `J`. Fails with a configuration error when the spectrum
/// does not admit such a basis.
pub fn build_p_metric(n: usize, p_tilde: DMatrix<f64>, lambda: f64) -> Result<PMetric> {
    let dv = 2 * n;
    if p_tilde.nrows() != dv || p_tilde.ncols() != dv {
        return Err(Error::Config(format!(
            "P operator must be {dv}x{dv}, got {}x{}",
            p_tilde.nrows(),
            p_tilde.ncols()
        )));
    }
    if linalg::max_abs(&(&p_tilde - p_tilde.transpose())) > 1e-10 {
        return Err(Error::Config("P operator must be symmetric".into()));
    }
    if !(lambda > 0.0) {
        return Err(Error::Config("lambda must be positive".into()));
    }
    if p_tilde.clone().cholesky().is_none() {
        return Err(Error::Config("P operator must be positive definite".into()));
    }

    let j = heisenberg::canonical_j(n);
    let p_inv = p_tilde
        .clone()
        .try_inverse()
        .expect("positive definite operators are invertible");
    let j_p = &p_inv * &j * lambda;

    let mut metric = DMatrix::zeros(dv + 1, dv + 1);
    metric.view_mut((0, 0), (dv, dv)).copy_from(&p_tilde);
    metric[(dv, dv)] = lambda;
    let algebra = TwoStepAlgebra::with_metric(dv, 1, vec![j_p.clone()], metric)
        .map_err(|e| Error::Config(format!("derived P-metric algebra is invalid: {e}")))?;

    let (basis, eigenvalues) = paired_eigenbasis(&p_tilde, &j)?;
    let pair_maps = (0..n)
        .map(|i| {
            let u = &basis[2 * i];
            let w = &basis[2 * i + 1];
            u * u.transpose() + w * w.transpose()
        })
        .collect();

    Ok(PMetric {
        n,
        p_tilde,
        lambda,
        algebra,
        j_p,
        basis,
        eigenvalues,
        pair_maps,
    })
}

/// Orthonormal eigenbasis of `p` with `U_{2i} = J U_{2i-1}`, built greedily
/// from the spectral decomposition in ascending eigenvalue order. Within a
/// repeated eigenvalue this is Gram-Schmidt on `(w, Jw)` pairs, deterministic
/// in the decomposition order.
fn paired_eigenbasis(p: &DMatrix<f64>, j: &DMatrix<f64>) -> Result<(Vec<DVector<f64>>, Vec<f64>)> {
    let dv = p.nrows();
    let eig = p.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..dv).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("eigenvalues are finite")
            .then(a.cmp(&b))
    });

    let scale = linalg::max_abs(p).max(1.0);
    let mut chosen: Vec<DVector<f64>> = Vec::with_capacity(dv);
    let mut eigenvalues = Vec::with_capacity(dv);
    for &idx in &order {
        if chosen.len() == dv {
            break;
        }
        // Project out the planes already taken; they are P-invariant, so the
        // remainder is still an eigenvector (or numerically zero).
        let mut u = eig.eigenvectors.column(idx).into_owned();
        for c in &chosen {
            let coeff = u.dot(c);
            u -= c * coeff;
        }
        let norm = u.norm();
        if norm < 1e-8 {
            continue;
        }
        u /= norm;
        let mu = u.dot(&(p * &u));
        if (p * &u - &u * mu).norm() > PAIR_TOL * scale {
            return Err(Error::Config(
                "spectral pairing failed: projected eigenvector degenerated".into(),
            ));
        }
        let w = j * &u;
        let nu = w.dot(&(p * &w));
        if (p * &w - &w * nu).norm() > PAIR_TOL * scale {
            return Err(Error::Config(
                "eigenbasis is not closed under the complex structure; \
                 the metric does not admit the paired construction"
                    .into(),
            ));
        }
        eigenvalues.push(mu);
        eigenvalues.push(nu);
        chosen.push(u);
        chosen.push(w);
    }
    if chosen.len() != dv {
        return Err(Error::Config(
            "spectral pairing did not span the horizontal space".into(),
        ));
    }
    Ok((chosen, eigenvalues))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;
    use crate::symplectic;

    #[test]
    fn identity_metric_reproduces_the_canonical_structure() {
        let pm = build_p_metric(1, DMatrix::identity(2, 2), 1.0).unwrap();
        assert!((pm.j_p() - heisenberg::canonical_j(1)).norm() < 1e-14);
        assert!(pm.algebra().has_standard_metric());
    }

    #[test]
    fn diagonal_example_twists_j() {
        // P = diag(1, 4), lambda = 1 gives j_P = [[0, -1], [1/4, 0]].
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]);
        let pm = build_p_metric(1, p, 1.0).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 0.25, 0.0]);
        assert!((pm.j_p() - expected).norm() < 1e-14);
        // pairing still succeeds: U_1 = e_1, U_2 = J e_1 = e_2
        assert!((pm.eigen_basis()[0].amax() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_metric_keeps_the_standard_basis_pairs() {
        let pm = build_p_metric(2, DMatrix::identity(4, 4) * 3.0, 1.0).unwrap();
        for (i, u) in pm.eigen_basis().iter().enumerate() {
            assert!((u.norm() - 1.0).abs() < 1e-12, "basis vector {i}");
        }
        for a in pm.pair_maps() {
            // projectors of rank two commuting with P (trivially here)
            assert_eq!(linalg::rank_with_tol(a, 1e-10), 2);
        }
    }

    #[test]
    fn j_p_is_skew_for_the_p_metric() {
        let p = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let lambda = 0.5;
        let pm = build_p_metric(1, p.clone(), lambda).unwrap();
        let gp = &p * pm.j_p();
        assert!(linalg::max_abs(&(&gp + gp.transpose())) < 1e-12);
        // P j_P(Z) = lambda j(Z)
        let expected = heisenberg::canonical_j(1) * lambda;
        assert!((&gp - expected).norm() < 1e-13);
    }

    #[test]
    fn pair_maps_are_p_symmetric_and_commute_with_the_twisted_map() {
        let p = crate::verify::random_commuting_positive(2, 0x77, 1);
        for lambda in [0.5, 2.0] {
            let pm = build_p_metric(2, p.clone(), lambda).unwrap();
            for (i, a) in pm.pair_maps().iter().enumerate() {
                let pa = &pm.p_tilde * a;
                assert!(
                    linalg::max_abs(&(&pa - pa.transpose())) < 1e-12,
                    "pair map {i} not P-symmetric"
                );
                assert!(
                    linalg::commutator_norm(a, pm.j_p()) < 1e-12,
                    "pair map {i} does not commute with j_P"
                );
                for b in pm.pair_maps().iter().skip(i + 1) {
                    assert!(linalg::commutator_norm(a, b) < 1e-12);
                }
            }
            // basis actually pairs through J
            let j = heisenberg::canonical_j(2);
            for i in 0..2 {
                let u = &pm.eigen_basis()[2 * i];
                let w = &pm.eigen_basis()[2 * i + 1];
                assert!((&j * u - w).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn translation_integral_matches_the_twisted_pairing_formula() {
        // <Y, U_k>_P - <j_P(Y_z) W_v, U_k>_P written directly must agree
        // with the Killing-field pairing implementation.
        let p = crate::verify::random_commuting_positive(2, 0x78, 2);
        let pm = build_p_metric(2, p.clone(), 1.7).unwrap();
        let algebra = pm.algebra();
        for k in 1..=4 {
            let integral = pm.translation_integral(k);
            let u = &pm.eigen_basis()[k - 1];
            for idx in 0..8 {
                let state = sample::sample_state(algebra, 0x79, idx);
                let wv = algebra.log_map(&state.point).v_part();
                let yz = state.velocity.z_part()[0];
                let twisted = pm.j_p() * &wv * yz;
                let direct = state.velocity.v_part().dot(&(&p * u)) - twisted.dot(&(&p * u));
                let via_killing = integral.eval(algebra, &state).unwrap();
                assert!(
                    (direct - via_killing).abs() < 1e-12,
                    "k = {k}: {direct} vs {via_killing}"
                );
            }
        }
    }

    #[test]
    fn rejects_unpaired_spectra() {
        // A symmetric positive matrix whose eigenvectors are not J-related:
        // mix the (1,3) directions only.
        let mut p = DMatrix::identity(4, 4);
        p[(0, 0)] = 2.0;
        p[(0, 2)] = 0.5;
        p[(2, 0)] = 0.5;
        p[(2, 2)] = 1.5;
        let err = build_p_metric(2, p, 1.0);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn rejects_indefinite_or_asymmetric_input() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.0, 1.0]);
        assert!(build_p_metric(1, asym, 1.0).is_err());
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(build_p_metric(1, indef, 1.0).is_err());
        assert!(build_p_metric(1, DMatrix::identity(2, 2), 0.0).is_err());
    }

    #[test]
    fn pair_maps_act_as_advertised() {
        let mut p = DMatrix::identity(4, 4);
        // J-commuting positive operator with two distinct eigenvalue planes
        p[(0, 0)] = 2.0;
        p[(1, 1)] = 2.0;
        let pm = build_p_metric(2, p, 1.0).unwrap();
        for i in 0..2 {
            let a = &pm.pair_maps()[i];
            let u = &pm.eigen_basis()[2 * i];
            let w = &pm.eigen_basis()[2 * i + 1];
            assert!((a * u - u).norm() < 1e-12);
            assert!((a * w - w).norm() < 1e-12);
            let other = &pm.eigen_basis()[2 * (1 - i)];
            assert!((a * other).norm() < 1e-12);
        }
    }

    #[test]
    fn gradient_relation_between_metrics() {
        // The P-metric gradient is the standard one with the metric unwound:
        // grad f = P grad^P f, checked through numeric gradients.
        let p = DMatrix::from_row_slice(2, 2, &[1.5, 0.2, 0.2, 0.8]);
        let lambda = 2.0;
        let pm = build_p_metric(1, p, lambda).unwrap();
        let standard = heisenberg::canonical_algebra(1);
        let f = |s: &crate::state::TangentState| {
            let y = s.velocity.as_vector();
            (y[0] + 0.5 * y[1]).sin() + s.point[2] * y[2]
        };
        for idx in 0..8 {
            let state = sample::sample_state(&standard, 41, idx);
            let grad_std = symplectic::numeric_gradient(&standard, f, &state, 1e-5).unwrap();
            let grad_p = symplectic::numeric_gradient(pm.algebra(), f, &state, 1e-5).unwrap();
            let g = pm.algebra().metric();
            let unwound_base = g * grad_p.base.as_vector();
            let unwound_fiber = g * grad_p.fiber.as_vector();
            assert!((unwound_base - grad_std.base.as_vector()).norm() < 1e-7);
            assert!((unwound_fiber - grad_std.fiber.as_vector()).norm() < 1e-7);
        }
    }
}
