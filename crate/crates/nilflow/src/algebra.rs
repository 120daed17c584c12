//! Metric 2-step nilpotent Lie algebras presented through their j-maps.
//!
//! An algebra is the orthogonal sum `v ⊕ z` together with one skew map
//! `j(Z_i)` on `v` per central basis direction; the bracket of two elements
//! is the central vector pairing to `<j(Z)X_v, Y_v>`. The inner product is
//! stored explicitly so that arbitrary left-invariant metrics (block
//! diagonal over the splitting) run through the same operations as the
//! standard one.
//!
//! The simply connected group of such an algebra is carried in exponential
//! coordinates: group elements are algebra elements and the product is the
//! degree-2 Baker-Campbell-Hausdorff polynomial, which is exact here.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Tolerance for the structural invariants checked at construction time.
pub const STRUCT_TOL: f64 = 1e-12;

/// An element of a 2-step algebra, stored as `(v-part, z-part)` coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraVector {
    data: DVector<f64>,
    dim_v: usize,
}

impl AlgebraVector {
    pub fn from_vector(data: DVector<f64>, dim_v: usize) -> Self {
        assert!(dim_v <= data.len());
        AlgebraVector { data, dim_v }
    }

    pub fn from_parts(v: DVector<f64>, z: DVector<f64>) -> Self {
        let dim_v = v.len();
        let mut data = DVector::zeros(v.len() + z.len());
        data.rows_mut(0, v.len()).copy_from(&v);
        data.rows_mut(v.len(), z.len()).copy_from(&z);
        AlgebraVector { data, dim_v }
    }

    pub fn zeros(dim_v: usize, dim_z: usize) -> Self {
        AlgebraVector {
            data: DVector::zeros(dim_v + dim_z),
            dim_v,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.len() == 0
    }

    pub fn dim_v(&self) -> usize {
        self.dim_v
    }

    pub fn dim_z(&self) -> usize {
        self.data.len() - self.dim_v
    }

    pub fn v_part(&self) -> DVector<f64> {
        self.data.rows(0, self.dim_v).into_owned()
    }

    pub fn z_part(&self) -> DVector<f64> {
        self.data.rows(self.dim_v, self.dim_z()).into_owned()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.data
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn scale(&self, c: f64) -> Self {
        AlgebraVector {
            data: &self.data * c,
            dim_v: self.dim_v,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        AlgebraVector {
            data: &self.data + &other.data,
            dim_v: self.dim_v,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        AlgebraVector {
            data: &self.data - &other.data,
            dim_v: self.dim_v,
        }
    }
}

/// A metric 2-step nilpotent Lie algebra together with its inner product.
#[derive(Clone, Debug)]
pub struct TwoStepAlgebra {
    dim_v: usize,
    dim_z: usize,
    j_mats: Vec<DMatrix<f64>>,
    metric: DMatrix<f64>,
    metric_v: DMatrix<f64>,
    metric_z: DMatrix<f64>,
    metric_z_inv: DMatrix<f64>,
    standard: bool,
}

impl TwoStepAlgebra {
    /// Algebra with the standard (identity) inner product.
    pub fn new(dim_v: usize, dim_z: usize, j_mats: Vec<DMatrix<f64>>) -> Result<Self> {
        let metric = DMatrix::identity(dim_v + dim_z, dim_v + dim_z);
        Self::with_metric(dim_v, dim_z, j_mats, metric)
    }

    /// Algebra with an explicit inner product, block diagonal over `v ⊕ z`.
    pub fn with_metric(
        dim_v: usize,
        dim_z: usize,
        j_mats: Vec<DMatrix<f64>>,
        metric: DMatrix<f64>,
    ) -> Result<Self> {
        if dim_v == 0 || dim_z == 0 {
            return Err(Error::InvalidAlgebra(
                "dim_v and dim_z must be positive".into(),
            ));
        }
        if j_mats.len() != dim_z {
            return Err(Error::InvalidAlgebra(format!(
                "expected {dim_z} j-matrices, got {}",
                j_mats.len()
            )));
        }
        for (i, j) in j_mats.iter().enumerate() {
            if j.nrows() != dim_v || j.ncols() != dim_v {
                return Err(Error::InvalidAlgebra(format!(
                    "j-matrix {i} is {}x{}, expected {dim_v}x{dim_v}",
                    j.nrows(),
                    j.ncols()
                )));
            }
        }
        let dim = dim_v + dim_z;
        if metric.nrows() != dim || metric.ncols() != dim {
            return Err(Error::InvalidAlgebra(format!(
                "metric is {}x{}, expected {dim}x{dim}",
                metric.nrows(),
                metric.ncols()
            )));
        }
        if linalg::max_abs(&(&metric - metric.transpose())) > STRUCT_TOL {
            return Err(Error::InvalidAlgebra("metric is not symmetric".into()));
        }
        // v and z must stay orthogonal: the splitting is part of the data.
        for r in 0..dim_v {
            for c in dim_v..dim {
                if metric[(r, c)].abs() > STRUCT_TOL {
                    return Err(Error::InvalidAlgebra(
                        "metric must be block diagonal over the v ⊕ z splitting".into(),
                    ));
                }
            }
        }
        if metric.clone().cholesky().is_none() {
            return Err(Error::InvalidAlgebra(
                "metric is not positive definite".into(),
            ));
        }
        let metric_v = metric.view((0, 0), (dim_v, dim_v)).into_owned();
        let metric_z = metric.view((dim_v, dim_v), (dim_z, dim_z)).into_owned();
        let metric_z_inv = metric_z
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidAlgebra("z-block of metric is singular".into()))?;
        for (i, j) in j_mats.iter().enumerate() {
            if !linalg::is_skew_wrt(&metric_v, j, STRUCT_TOL) {
                return Err(Error::InvalidAlgebra(format!(
                    "j-matrix {i} is not skew-symmetric with respect to the metric"
                )));
            }
        }
        let standard = linalg::max_abs(&(&metric - DMatrix::identity(dim, dim))) <= STRUCT_TOL;
        Ok(TwoStepAlgebra {
            dim_v,
            dim_z,
            j_mats,
            metric,
            metric_v,
            metric_z,
            metric_z_inv,
            standard,
        })
    }

    /// Free 2-step nilpotent algebra on `generators` generators with the
    /// standard metric: one central direction per generator pair, and
    /// `[e_i, e_j]` equal to the `(i, j)` central basis vector.
    pub fn free_nilpotent(generators: usize) -> Result<Self> {
        if generators < 2 {
            return Err(Error::InvalidAlgebra(
                "free 2-step algebra needs at least two generators".into(),
            ));
        }
        let mut j_mats = Vec::new();
        for i in 0..generators {
            for j in (i + 1)..generators {
                let mut m = DMatrix::zeros(generators, generators);
                m[(j, i)] = 1.0;
                m[(i, j)] = -1.0;
                j_mats.push(m);
            }
        }
        let dim_z = j_mats.len();
        Self::new(generators, dim_z, j_mats)
    }

    pub fn dim_v(&self) -> usize {
        self.dim_v
    }

    pub fn dim_z(&self) -> usize {
        self.dim_z
    }

    pub fn dim(&self) -> usize {
        self.dim_v + self.dim_z
    }

    pub fn j_mats(&self) -> &[DMatrix<f64>] {
        &self.j_mats
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.metric
    }

    pub fn metric_v(&self) -> &DMatrix<f64> {
        &self.metric_v
    }

    pub fn metric_z(&self) -> &DMatrix<f64> {
        &self.metric_z
    }

    /// True when the stored inner product is the identity matrix.
    pub fn has_standard_metric(&self) -> bool {
        self.standard
    }

    pub fn check_vector(&self, x: &AlgebraVector, context: &'static str) -> Result<()> {
        if x.len() != self.dim() || x.dim_v() != self.dim_v {
            return Err(Error::dims(context, self.dim(), x.len()));
        }
        Ok(())
    }

    pub fn zero_vector(&self) -> AlgebraVector {
        AlgebraVector::zeros(self.dim_v, self.dim_z)
    }

    /// i-th basis vector of `v` (zero-based).
    pub fn basis_v(&self, i: usize) -> AlgebraVector {
        assert!(i < self.dim_v);
        let mut x = self.zero_vector();
        x.data[i] = 1.0;
        x
    }

    /// i-th basis vector of `z` (zero-based).
    pub fn basis_z(&self, i: usize) -> AlgebraVector {
        assert!(i < self.dim_z);
        let mut x = self.zero_vector();
        x.data[self.dim_v + i] = 1.0;
        x
    }

    pub fn vector_from(&self, data: DVector<f64>) -> Result<AlgebraVector> {
        if data.len() != self.dim() {
            return Err(Error::dims("vector_from", self.dim(), data.len()));
        }
        Ok(AlgebraVector::from_vector(data, self.dim_v))
    }

    /// Inner product of algebra elements in the stored metric.
    pub fn inner(&self, x: &AlgebraVector, y: &AlgebraVector) -> f64 {
        if self.standard {
            x.data.dot(&y.data)
        } else {
            x.data.dot(&(&self.metric * &y.data))
        }
    }

    /// Inner product of two `v`-part coordinate vectors.
    pub fn inner_v(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        if self.standard {
            x.dot(y)
        } else {
            x.dot(&(&self.metric_v * y))
        }
    }

    pub fn norm(&self, x: &AlgebraVector) -> f64 {
        self.inner(x, x).max(0.0).sqrt()
    }

    /// `j(Z)` as a matrix, for `Z` given in `z`-coordinates.
    pub fn j_of(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        if z.len() != self.dim_z {
            return Err(Error::dims("j_of", self.dim_z, z.len()));
        }
        let mut out = DMatrix::zeros(self.dim_v, self.dim_v);
        for (zi, j) in z.iter().zip(self.j_mats.iter()) {
            if *zi != 0.0 {
                out += j * *zi;
            }
        }
        Ok(out)
    }

    /// `j(Z) x` without forming the matrix.
    pub fn apply_j(&self, z: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(z.len(), self.dim_z);
        debug_assert_eq!(x.len(), self.dim_v);
        let mut out = DVector::zeros(self.dim_v);
        for (zi, j) in z.iter().zip(self.j_mats.iter()) {
            if *zi != 0.0 {
                out += j * x * *zi;
            }
        }
        out
    }

    /// Lie bracket; the result is central.
    pub fn bracket(&self, x: &AlgebraVector, y: &AlgebraVector) -> Result<AlgebraVector> {
        self.check_vector(x, "bracket lhs")?;
        self.check_vector(y, "bracket rhs")?;
        Ok(self.bracket_v(&x.v_part(), &y.v_part()))
    }

    /// Bracket of two `v`-part vectors, skipping conformity checks.
    pub(crate) fn bracket_v(&self, xv: &DVector<f64>, yv: &DVector<f64>) -> AlgebraVector {
        let mut pairing = DVector::zeros(self.dim_z);
        for (k, j) in self.j_mats.iter().enumerate() {
            pairing[k] = self.inner_v(&(j * xv), yv);
        }
        let coords = if self.standard {
            pairing
        } else {
            &self.metric_z_inv * pairing
        };
        AlgebraVector::from_parts(DVector::zeros(self.dim_v), coords)
    }

    /// Transpose of `ad(V)` applied to `Y`: the pure-`v` vector `j(Y_z) V_v`.
    pub fn ad_transpose(&self, v: &AlgebraVector, y: &AlgebraVector) -> Result<AlgebraVector> {
        self.check_vector(v, "ad_transpose direction")?;
        self.check_vector(y, "ad_transpose argument")?;
        let out = self.apply_j(&y.z_part(), &v.v_part());
        Ok(AlgebraVector::from_parts(out, DVector::zeros(self.dim_z)))
    }

    /// Basis of the center: the stored `z`-directions plus the common kernel
    /// of the j-maps inside `v`.
    pub fn center(&self) -> Vec<AlgebraVector> {
        let mut basis: Vec<AlgebraVector> = (0..self.dim_z).map(|i| self.basis_z(i)).collect();
        let mut stacked = DMatrix::zeros(self.dim_z * self.dim_v, self.dim_v);
        for (k, j) in self.j_mats.iter().enumerate() {
            stacked
                .view_mut((k * self.dim_v, 0), (self.dim_v, self.dim_v))
                .copy_from(j);
        }
        for kernel_vec in linalg::null_space(&stacked, linalg::RANK_TOL) {
            basis.push(AlgebraVector::from_parts(
                kernel_vec,
                DVector::zeros(self.dim_z),
            ));
        }
        basis
    }

    /// Non-singularity test: `j(Z)` invertible for every nonzero central `Z`.
    ///
    /// Exact for one-dimensional centers. Otherwise the basis directions are
    /// probed first and then `sample_count` random unit vectors; any singular
    /// probe is returned as a witness, so the positive answer is
    /// probabilistic while the negative one is certain.
    pub fn is_nonsingular(
        &self,
        sample_count: usize,
        rng_seed: u64,
    ) -> (bool, Option<DVector<f64>>) {
        use rand::Rng;
        use rand::SeedableRng;

        let singular = |z: &DVector<f64>| -> bool {
            let j = self.j_of(z).expect("z has the right length");
            linalg::rank_with_tol(&j, linalg::RANK_TOL) < self.dim_v
        };

        if self.dim_z == 1 {
            let z = DVector::from_element(1, 1.0);
            return if singular(&z) {
                (false, Some(z))
            } else {
                (true, None)
            };
        }

        for i in 0..self.dim_z {
            let mut z = DVector::zeros(self.dim_z);
            z[i] = 1.0;
            if singular(&z) {
                return (false, Some(z));
            }
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(rng_seed);
        for _ in 0..sample_count {
            let mut z = DVector::zeros(self.dim_z);
            loop {
                for zi in z.iter_mut() {
                    *zi = rng.random_range(-1.0..1.0);
                }
                let n = z.norm();
                if n > 1e-3 {
                    z /= n;
                    break;
                }
            }
            if singular(&z) {
                return (false, Some(z));
            }
        }
        (true, None)
    }

    // ----- Simply connected group in exponential coordinates -----

    /// Group product: degree-2 BCH polynomial, exact for 2-step algebras.
    pub fn group_mul(&self, p: &DVector<f64>, q: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(p.len(), self.dim());
        debug_assert_eq!(q.len(), self.dim());
        let pv = p.rows(0, self.dim_v).into_owned();
        let qv = q.rows(0, self.dim_v).into_owned();
        let correction = self.bracket_v(&pv, &qv);
        let mut out = p + q;
        out.rows_mut(self.dim_v, self.dim_z)
            .axpy(0.5, &correction.z_part(), 1.0);
        out
    }

    pub fn group_inv(&self, p: &DVector<f64>) -> DVector<f64> {
        -p
    }

    pub fn group_identity(&self) -> DVector<f64> {
        DVector::zeros(self.dim())
    }

    /// Exponential map; the identity on coordinates.
    pub fn exp_map(&self, x: &AlgebraVector) -> DVector<f64> {
        x.as_vector().clone()
    }

    /// Logarithm; the identity on coordinates.
    pub fn log_map(&self, p: &DVector<f64>) -> AlgebraVector {
        AlgebraVector::from_vector(p.clone(), self.dim_v)
    }

    /// Push an algebra element to the coordinate velocity of the
    /// left-translated curve at `p`: `dL_p(Y) = Y + [log p, Y] / 2`.
    pub fn left_translate(&self, p: &DVector<f64>, y: &AlgebraVector) -> DVector<f64> {
        let pv = p.rows(0, self.dim_v).into_owned();
        let correction = self.bracket_v(&pv, &y.v_part());
        let mut out = y.as_vector().clone();
        out.rows_mut(self.dim_v, self.dim_z)
            .axpy(0.5, &correction.z_part(), 1.0);
        out
    }

    /// Matrix of the left-invariant frame at `p`; column `i` is the
    /// coordinate expression of the frame field of the i-th basis direction.
    pub fn left_invariant_frame(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let mut frame = DMatrix::identity(self.dim(), self.dim());
        let pv = p.rows(0, self.dim_v).into_owned();
        for i in 0..self.dim_v {
            let mut e = DVector::zeros(self.dim_v);
            e[i] = 1.0;
            let corr = self.bracket_v(&pv, &e);
            frame
                .view_mut((self.dim_v, i), (self.dim_z, 1))
                .copy_from(&(corr.z_part() * 0.5));
        }
        frame
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heisenberg;

    #[test]
    fn bracket_of_heisenberg_generators_is_central() {
        let a = heisenberg::canonical_algebra(1);
        let x1 = a.basis_v(0);
        let x2 = a.basis_v(1);
        let b = a.bracket(&x1, &x2).unwrap();
        assert_eq!(b.v_part(), DVector::zeros(2));
        assert!((b.z_part()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn center_is_central() {
        let a = heisenberg::canonical_algebra(2);
        let x1 = a.basis_v(0);
        let z1 = a.basis_z(0);
        let b = a.bracket(&x1, &z1).unwrap();
        assert!(b.norm() < 1e-15);
    }

    #[test]
    fn distinct_planes_commute_in_h2() {
        let a = heisenberg::canonical_algebra(2);
        let x1 = a.basis_v(0);
        let x3 = a.basis_v(2);
        assert!(a.bracket(&x1, &x3).unwrap().norm() < 1e-15);
    }

    #[test]
    fn j_of_is_linear() {
        let a = heisenberg::canonical_algebra(2);
        let z = DVector::from_element(1, 2.0);
        let j2 = a.j_of(&z).unwrap();
        let j1 = a.j_of(&DVector::from_element(1, 1.0)).unwrap();
        assert!((j2 - &j1 * 2.0).norm() < 1e-15);
        assert!(a.j_of(&DVector::zeros(1)).unwrap().norm() < 1e-15);
    }

    #[test]
    fn ad_transpose_examples() {
        let a = heisenberg::canonical_algebra(1);
        // direction X_1 against central Y = Z_1 lands on X_2
        let out = a.ad_transpose(&a.basis_v(0), &a.basis_z(0)).unwrap();
        assert!((out.sub(&a.basis_v(1))).norm() < 1e-15);
        // Y without central part gives zero
        let out = a.ad_transpose(&a.basis_v(0), &a.basis_v(1)).unwrap();
        assert!(out.norm() < 1e-15);
        // central direction V has no v-part to rotate
        let out = a.ad_transpose(&a.basis_z(0), &a.basis_z(0)).unwrap();
        assert!(out.norm() < 1e-15);
    }

    #[test]
    fn center_of_heisenberg_is_one_dimensional() {
        let a = heisenberg::canonical_algebra(3);
        let c = a.center();
        assert_eq!(c.len(), 1);
        assert!((c[0].sub(&a.basis_z(0))).norm() < 1e-12);
    }

    #[test]
    fn center_of_abelian_algebra_is_everything() {
        let a = TwoStepAlgebra::new(3, 1, vec![DMatrix::zeros(3, 3)]).unwrap();
        assert_eq!(a.center().len(), 4);
    }

    #[test]
    fn center_picks_up_flat_direction() {
        // H_1 plus one extra v-direction with no j-action.
        let mut j = DMatrix::zeros(3, 3);
        j[(0, 1)] = -1.0;
        j[(1, 0)] = 1.0;
        let a = TwoStepAlgebra::new(3, 1, vec![j]).unwrap();
        let c = a.center();
        assert_eq!(c.len(), 2);
        let spans_extra = c
            .iter()
            .any(|b| b.v_part()[2].abs() > 0.9 && b.z_part().norm() < 1e-12);
        assert!(spans_extra);
    }

    #[test]
    fn heisenberg_is_nonsingular() {
        for n in 1..=3 {
            let a = heisenberg::canonical_algebra(n);
            let (ok, witness) = a.is_nonsingular(32, 7);
            assert!(ok, "H_{n} must be non-singular");
            assert!(witness.is_none());
        }
    }

    #[test]
    fn odd_dimensional_j_is_singular() {
        let mut j = DMatrix::zeros(3, 3);
        j[(0, 1)] = -1.0;
        j[(1, 0)] = 1.0;
        let a = TwoStepAlgebra::new(3, 1, vec![j]).unwrap();
        let (ok, witness) = a.is_nonsingular(8, 7);
        assert!(!ok);
        assert!(witness.is_some());
    }

    #[test]
    fn zero_j_direction_is_reported_as_witness() {
        let mut j0 = DMatrix::zeros(2, 2);
        j0[(0, 1)] = -1.0;
        j0[(1, 0)] = 1.0;
        let a = TwoStepAlgebra::new(2, 2, vec![j0, DMatrix::zeros(2, 2)]).unwrap();
        let (ok, witness) = a.is_nonsingular(16, 3);
        assert!(!ok);
        let w = witness.unwrap();
        assert!((w[1] - 1.0).abs() < 1e-15, "witness should be Z_2, got {w}");
    }

    #[test]
    fn rejects_non_skew_j() {
        let j = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(TwoStepAlgebra::new(2, 1, vec![j]).is_err());
    }

    #[test]
    fn rejects_mismatched_dimensions() {
        let a = heisenberg::canonical_algebra(1);
        let bad = AlgebraVector::zeros(4, 1);
        assert!(a.bracket(&bad, &bad).is_err());
        assert!(a.j_of(&DVector::zeros(2)).is_err());
    }

    #[test]
    fn skewness_respects_nonstandard_metric() {
        // j skew for diag(1, 4) metric but not for the identity.
        let g = DMatrix::from_row_slice(3, 3, &[1., 0., 0., 0., 4., 0., 0., 0., 1.]);
        let j = DMatrix::from_row_slice(2, 2, &[0.0, -4.0, 1.0, 0.0]);
        assert!(TwoStepAlgebra::with_metric(2, 1, vec![j.clone()], g).is_ok());
        assert!(TwoStepAlgebra::new(2, 1, vec![j]).is_err());
    }

    #[test]
    fn group_product_matches_bch_example() {
        // (e_1, 0)(e_2, 0) has central coordinate +1/2 because
        // log(ab) = a + b + [a, b]/2 and [X_1, X_2] = Z_1.
        let a = heisenberg::canonical_algebra(1);
        let p = a.exp_map(&a.basis_v(0));
        let q = a.exp_map(&a.basis_v(1));
        let prod = a.group_mul(&p, &q);
        assert_eq!(prod.len(), 3);
        assert!((prod[0] - 1.0).abs() < 1e-15);
        assert!((prod[1] - 1.0).abs() < 1e-15);
        assert!((prod[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn inverse_cancels() {
        let a = heisenberg::canonical_algebra(2);
        let p = DVector::from_row_slice(&[0.3, -1.2, 0.7, 0.1, 2.0]);
        let e = a.group_mul(&p, &a.group_inv(&p));
        assert!(e.norm() < 1e-15);
    }

    #[test]
    fn frame_at_identity_is_identity() {
        let a = heisenberg::canonical_algebra(2);
        let f = a.left_invariant_frame(&a.group_identity());
        assert!((f - DMatrix::identity(5, 5)).norm() < 1e-15);
    }
}
