//! The Heisenberg group of dimension `2n + 1`, its canonical metric, and the
//! commuting families of first integrals.
//!
//! Coordinates are interleaved: `v = (x_1, y_1, ..., x_n, y_n)` followed by
//! the central coordinate, so the complex structure is block diagonal with
//! 2x2 rotation generators and group coordinates agree with exponential
//! coordinates of the algebra.

use nalgebra::{DMatrix, DVector};

use crate::algebra::{AlgebraVector, TwoStepAlgebra};
use crate::error::{Error, Result};
use crate::integrals::FirstIntegral;

/// Block-diagonal complex structure `J` on `R^{2n}`: `J e_{2k-1} = e_{2k}`.
pub fn canonical_j(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(2 * k, 2 * k + 1)] = -1.0;
        j[(2 * k + 1, 2 * k)] = 1.0;
    }
    j
}

/// The Heisenberg algebra `h_n` with its canonical inner product.
pub fn canonical_algebra(n: usize) -> TwoStepAlgebra {
    assert!(n >= 1, "Heisenberg rank must be positive");
    TwoStepAlgebra::new(2 * n, 1, vec![canonical_j(n)])
        .expect("canonical data satisfies the algebra invariants")
}

/// The Heisenberg group in `(v, z)` coordinates with the explicit
/// multiplication law; cross-checked against the exponential-coordinate
/// product of [`TwoStepAlgebra`].
#[derive(Clone, Debug)]
pub struct HeisenbergGroup {
    n: usize,
    algebra: TwoStepAlgebra,
    j: DMatrix<f64>,
}

impl HeisenbergGroup {
    pub fn new(n: usize) -> Self {
        HeisenbergGroup {
            n,
            algebra: canonical_algebra(n),
            j: canonical_j(n),
        }
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn algebra(&self) -> &TwoStepAlgebra {
        &self.algebra
    }

    pub fn identity(&self) -> DVector<f64> {
        DVector::zeros(self.dim())
    }

    fn check_point(&self, p: &DVector<f64>) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::dims("group element", self.dim(), p.len()));
        }
        Ok(())
    }

    /// `(v, z)(v', z') = (v + v', z + z' - v^T J v' / 2)`.
    pub fn mul(&self, p: &DVector<f64>, q: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_point(p)?;
        self.check_point(q)?;
        let d = 2 * self.n;
        let pv = p.rows(0, d);
        let qv = q.rows(0, d).into_owned();
        let mut out = p + q;
        out[d] -= 0.5 * pv.dot(&(&self.j * qv));
        Ok(out)
    }

    pub fn inv(&self, p: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_point(p)?;
        Ok(-p)
    }

    /// Exponential coordinates make `exp` the identity map.
    pub fn exp_map(&self, x: &AlgebraVector) -> Result<DVector<f64>> {
        self.algebra.check_vector(x, "exp_map")?;
        Ok(x.as_vector().clone())
    }

    pub fn log_map(&self, p: &DVector<f64>) -> Result<AlgebraVector> {
        self.check_point(p)?;
        Ok(self.algebra.log_map(p))
    }

    /// Columns are the left-invariant frame fields at `p` in coordinates:
    /// the k-th pair is `(d_x - p_y d_z / 2, d_y + p_x d_z / 2)`.
    pub fn left_invariant_frame(&self, p: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_point(p)?;
        let d = 2 * self.n;
        let mut frame = DMatrix::identity(self.dim(), self.dim());
        for k in 0..self.n {
            frame[(d, 2 * k)] = -0.5 * p[2 * k + 1];
            frame[(d, 2 * k + 1)] = 0.5 * p[2 * k];
        }
        Ok(frame)
    }
}

/// Symmetric projector `A_i` onto the i-th complex plane (1-based).
pub fn pair_projector(n: usize, i: usize) -> DMatrix<f64> {
    assert!(i >= 1 && i <= n);
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    a[(2 * i - 2, 2 * i - 2)] = 1.0;
    a[(2 * i - 1, 2 * i - 1)] = 1.0;
    a
}

/// Cartan rotation `T_i = J A_i` (1-based).
pub fn cartan_rotation(n: usize, i: usize) -> DMatrix<f64> {
    canonical_j(n) * pair_projector(n, i)
}

/// Basis of the isotropy algebra: skew maps commuting with `J`, i.e. the
/// realification of the skew-Hermitian `n x n` matrices. Dimension `n^2`.
pub fn isometry_isotropy_basis(n: usize) -> Vec<DMatrix<f64>> {
    let mut basis = Vec::with_capacity(n * n);
    let mut push_block = |entries: &[(usize, usize, f64, f64)]| {
        // Each entry is (row-block, col-block, re, im) of a complex matrix;
        // blocks realify as [[re, -im], [im, re]].
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for &(a, b, re, im) in entries {
            m[(2 * a, 2 * b)] = re;
            m[(2 * a, 2 * b + 1)] = -im;
            m[(2 * a + 1, 2 * b)] = im;
            m[(2 * a + 1, 2 * b + 1)] = re;
        }
        basis.push(m);
    };
    for a in 0..n {
        push_block(&[(a, a, 0.0, 1.0)]);
    }
    for a in 0..n {
        for b in (a + 1)..n {
            push_block(&[(a, b, 1.0, 0.0), (b, a, -1.0, 0.0)]);
            push_block(&[(a, b, 0.0, 1.0), (b, a, 0.0, 1.0)]);
        }
    }
    basis
}

/// Which of the three canonical commuting families to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    /// Energy, pairwise projectors, Cartan rotations.
    Isotropy,
    /// Central linear integral, projectors, odd translations.
    OddTranslations,
    /// Central linear integral, projectors, even translations.
    EvenTranslations,
}

impl FamilyKind {
    pub fn parse(token: &str) -> Result<Self> {
        match token {
            "G" => Ok(FamilyKind::Isotropy),
            "F" => Ok(FamilyKind::OddTranslations),
            "Fprime" => Ok(FamilyKind::EvenTranslations),
            other => Err(Error::Config(format!(
                "unknown family '{other}'; expected G, F or Fprime"
            ))),
        }
    }

    pub fn token(&self) -> &'static str {
        match self {
            FamilyKind::Isotropy => "G",
            FamilyKind::OddTranslations => "F",
            FamilyKind::EvenTranslations => "Fprime",
        }
    }
}

/// The three families of `2n + 1` commuting first integrals.
#[derive(Clone, Debug)]
pub struct CanonicalFamilies {
    pub isotropy: Vec<FirstIntegral>,
    pub odd: Vec<FirstIntegral>,
    pub even: Vec<FirstIntegral>,
}

pub fn family(n: usize, kind: FamilyKind) -> Vec<FirstIntegral> {
    let algebra = canonical_algebra(n);
    let quadratics = |out: &mut Vec<FirstIntegral>| {
        for i in 1..=n {
            out.push(
                FirstIntegral::quadratic_on_v(&algebra, pair_projector(n, i))
                    .expect("projector is symmetric")
                    .with_label(format!("g_A{i}")),
            );
        }
    };
    let mut out = Vec::with_capacity(2 * n + 1);
    match kind {
        FamilyKind::Isotropy => {
            out.push(FirstIntegral::energy());
            quadratics(&mut out);
            for i in 1..=n {
                out.push(
                    FirstIntegral::killing_rotation(&algebra, cartan_rotation(n, i))
                        .expect("Cartan rotations commute with J")
                        .with_label(format!("F_T{i}")),
                );
            }
        }
        FamilyKind::OddTranslations => {
            out.push(FirstIntegral::central_basis(&algebra));
            quadratics(&mut out);
            for k in 1..=n {
                out.push(
                    FirstIntegral::killing_translation(&algebra, 2 * k - 1)
                        .expect("index in range"),
                );
            }
        }
        FamilyKind::EvenTranslations => {
            out.push(FirstIntegral::central_basis(&algebra));
            quadratics(&mut out);
            for k in 1..=n {
                out.push(
                    FirstIntegral::killing_translation(&algebra, 2 * k).expect("index in range"),
                );
            }
        }
    }
    out
}

pub fn canonical_families(n: usize) -> CanonicalFamilies {
    CanonicalFamilies {
        isotropy: family(n, FamilyKind::Isotropy),
        odd: family(n, FamilyKind::OddTranslations),
        even: family(n, FamilyKind::EvenTranslations),
    }
}
