//! First integrals of the geodesic flow: exact values, exact gradients,
//! commutation criteria for quadratic integrals, and the correspondence
//! between Killing fields and integrals.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::algebra::{AlgebraVector, TwoStepAlgebra};
use crate::error::{Error, Result};
use crate::linalg;
use crate::state::{TangentPair, TangentState};
use crate::symplectic;

/// Frobenius-norm threshold for the commutation criteria.
pub const COMMUTE_TOL: f64 = 1e-10;

/// Central velocities below this are treated as the smooth zero extension of
/// the quotient integrals.
pub const SMOOTHING_CUTOFF: f64 = 1e-12;

type EvalFn = dyn Fn(&TwoStepAlgebra, &TangentState) -> f64 + Send + Sync;
type GradFn = dyn Fn(&TwoStepAlgebra, &TangentState) -> TangentPair + Send + Sync;

/// Evaluator/gradient pair for integrals outside the built-in families.
#[derive(Clone)]
pub struct CustomIntegral {
    pub eval: Arc<EvalFn>,
    pub grad: Option<Arc<GradFn>>,
}

#[derive(Clone)]
pub enum IntegralKind {
    /// `E(p, Y) = <Y, Y> / 2`.
    Energy,
    /// `f(p, Y) = <Y, Z_0>` for a central `Z_0` (given in z-coordinates).
    LinearCentral(DVector<f64>),
    /// `g(p, Y) = <Y, A Y> / 2` for a metric-symmetric `A` annihilating `z`.
    Quadratic(DMatrix<f64>),
    /// Pairing with the right-invariant Killing field of an algebra element:
    /// `f(p, Y) = <Y, U - [log p, U]>`.
    KillingVector(AlgebraVector),
    /// Pairing with the Killing field of an isotropy rotation `T = J A`:
    /// `f(p, Y) = <T W_v, Y_v> - <A W_v, W_v> <Z_1, Y> / 2`.
    KillingRotation {
        rotation: DMatrix<f64>,
        symmetric: DMatrix<f64>,
    },
    /// Lattice-invariant smoothing of a translation integral:
    /// `exp(-1/f^2) sin(2 pi F_k / f)` with `f = <Y, Z_1>`, extended by zero
    /// across `f = 0`.
    SmoothedKilling {
        index: usize,
    },
    /// Linear combination of other integrals.
    Sum(Vec<(f64, FirstIntegral)>),
    Custom(CustomIntegral),
}

/// A tagged first integral with exact evaluation and gradient rules.
#[derive(Clone)]
pub struct FirstIntegral {
    label: String,
    kind: IntegralKind,
}

impl fmt::Debug for FirstIntegral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FirstIntegral({})", self.label)
    }
}

impl FirstIntegral {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> &IntegralKind {
        &self.kind
    }

    pub fn energy() -> Self {
        FirstIntegral {
            label: "E".into(),
            kind: IntegralKind::Energy,
        }
    }

    pub fn linear_central(algebra: &TwoStepAlgebra, z0: DVector<f64>) -> Result<Self> {
        if z0.len() != algebra.dim_z() {
            return Err(Error::dims("linear_central", algebra.dim_z(), z0.len()));
        }
        Ok(FirstIntegral {
            label: "f_Z".into(),
            kind: IntegralKind::LinearCentral(z0),
        })
    }

    /// The linear integral of the first central basis direction.
    pub fn central_basis(algebra: &TwoStepAlgebra) -> Self {
        let mut z0 = DVector::zeros(algebra.dim_z());
        z0[0] = 1.0;
        FirstIntegral {
            label: "f_Z1".into(),
            kind: IntegralKind::LinearCentral(z0),
        }
    }

    /// Quadratic integral from a full-size matrix.
    pub fn quadratic(algebra: &TwoStepAlgebra, matrix: DMatrix<f64>) -> Result<Self> {
        let d = algebra.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::dims("quadratic", d, matrix.nrows()));
        }
        if !linalg::is_symmetric_wrt(algebra.metric(), &matrix, 1e-12) {
            return Err(Error::InvalidInput(
                "quadratic integral needs a metric-symmetric matrix".into(),
            ));
        }
        for c in algebra.dim_v()..d {
            if matrix.column(c).norm() > 1e-12 {
                return Err(Error::InvalidInput(
                    "quadratic integral matrix must annihilate the center".into(),
                ));
            }
        }
        Ok(FirstIntegral {
            label: "g_A".into(),
            kind: IntegralKind::Quadratic(matrix),
        })
    }

    /// Quadratic integral from a matrix on `v`, extended by zero on `z`.
    pub fn quadratic_on_v(algebra: &TwoStepAlgebra, matrix_v: DMatrix<f64>) -> Result<Self> {
        let dv = algebra.dim_v();
        if matrix_v.nrows() != dv || matrix_v.ncols() != dv {
            return Err(Error::dims("quadratic_on_v", dv, matrix_v.nrows()));
        }
        let mut full = DMatrix::zeros(algebra.dim(), algebra.dim());
        full.view_mut((0, 0), (dv, dv)).copy_from(&matrix_v);
        Self::quadratic(algebra, full)
    }

    pub fn killing_vector(algebra: &TwoStepAlgebra, element: AlgebraVector) -> Result<Self> {
        algebra.check_vector(&element, "killing_vector")?;
        Ok(FirstIntegral {
            label: "f_U*".into(),
            kind: IntegralKind::KillingVector(element),
        })
    }

    /// Translation integral `F_k` of the k-th `v`-basis direction (1-based).
    pub fn killing_translation(algebra: &TwoStepAlgebra, k: usize) -> Result<Self> {
        if k == 0 || k > algebra.dim_v() {
            return Err(Error::InvalidInput(format!(
                "translation index {k} out of range 1..={}",
                algebra.dim_v()
            )));
        }
        Ok(FirstIntegral {
            label: format!("F_{k}"),
            kind: IntegralKind::KillingVector(algebra.basis_v(k - 1)),
        })
    }

    /// Rotation integral `F_T` for a skew `T` commuting with `j(Z_1)`.
    ///
    /// Requires the canonical setting: one-dimensional center and the
    /// standard inner product.
    pub fn killing_rotation(algebra: &TwoStepAlgebra, rotation: DMatrix<f64>) -> Result<Self> {
        require_canonical(algebra, "killing_rotation")?;
        let dv = algebra.dim_v();
        if rotation.nrows() != dv || rotation.ncols() != dv {
            return Err(Error::dims("killing_rotation", dv, rotation.nrows()));
        }
        if linalg::max_abs(&(&rotation + rotation.transpose())) > 1e-12 {
            return Err(Error::InvalidInput(
                "rotation must be skew-symmetric".into(),
            ));
        }
        let j = &algebra.j_mats()[0];
        if linalg::commutator_norm(j, &rotation) > COMMUTE_TOL {
            return Err(Error::InvalidInput(
                "rotation must commute with the complex structure".into(),
            ));
        }
        let symmetric = -(j * &rotation);
        Ok(FirstIntegral {
            label: "F_T".into(),
            kind: IntegralKind::KillingRotation {
                rotation,
                symmetric,
            },
        })
    }

    /// Smoothed, lattice-invariant version of `F_k` (1-based index).
    pub fn smoothed_killing(algebra: &TwoStepAlgebra, k: usize) -> Result<Self> {
        require_canonical(algebra, "smoothed_killing")?;
        if k == 0 || k > algebra.dim_v() {
            return Err(Error::InvalidInput(format!(
                "translation index {k} out of range 1..={}",
                algebra.dim_v()
            )));
        }
        Ok(FirstIntegral {
            label: format!("Fbar_{k}"),
            kind: IntegralKind::SmoothedKilling { index: k },
        })
    }

    pub fn sum(label: impl Into<String>, terms: Vec<(f64, FirstIntegral)>) -> Self {
        FirstIntegral {
            label: label.into(),
            kind: IntegralKind::Sum(terms),
        }
    }

    pub fn custom(label: impl Into<String>, eval: Arc<EvalFn>, grad: Option<Arc<GradFn>>) -> Self {
        FirstIntegral {
            label: label.into(),
            kind: IntegralKind::Custom(CustomIntegral { eval, grad }),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn eval(&self, algebra: &TwoStepAlgebra, state: &TangentState) -> Result<f64> {
        state.conforms(algebra)?;
        Ok(self.eval_unchecked(algebra, state))
    }

    fn eval_unchecked(&self, algebra: &TwoStepAlgebra, state: &TangentState) -> f64 {
        let y = &state.velocity;
        match &self.kind {
            IntegralKind::Energy => 0.5 * algebra.inner(y, y),
            IntegralKind::LinearCentral(z0) => {
                let embedded =
                    AlgebraVector::from_parts(DVector::zeros(algebra.dim_v()), z0.clone());
                algebra.inner(y, &embedded)
            }
            IntegralKind::Quadratic(a) => {
                let ay = algebra
                    .vector_from(a * y.as_vector())
                    .expect("matrix preserves dimension");
                0.5 * algebra.inner(y, &ay)
            }
            IntegralKind::KillingVector(u) => {
                let w = state.log(algebra);
                let shifted = u.sub(&algebra.bracket_v(&w.v_part(), &u.v_part()));
                algebra.inner(y, &shifted)
            }
            IntegralKind::KillingRotation {
                rotation,
                symmetric,
            } => {
                let wv = state.log(algebra).v_part();
                let yz = y.z_part()[0];
                algebra.inner_v(&(rotation * &wv), &y.v_part())
                    - 0.5 * algebra.inner_v(&(symmetric * &wv), &wv) * yz
            }
            IntegralKind::SmoothedKilling { index } => {
                let f = y.z_part()[0];
                if f.abs() <= SMOOTHING_CUTOFF {
                    return 0.0;
                }
                let value = translation_value(algebra, *index, state);
                (-1.0 / (f * f)).exp() * (2.0 * std::f64::consts::PI * value / f).sin()
            }
            IntegralKind::Sum(terms) => terms
                .iter()
                .map(|(c, g)| c * g.eval_unchecked(algebra, state))
                .sum(),
            IntegralKind::Custom(c) => (c.eval)(algebra, state),
        }
    }

    /// Exact gradient with respect to the algebra's metric; custom integrals
    /// without a gradient rule fall back to central differences.
    pub fn grad(&self, algebra: &TwoStepAlgebra, state: &TangentState) -> Result<TangentPair> {
        state.conforms(algebra)?;
        let y = &state.velocity;
        let pair = match &self.kind {
            IntegralKind::Energy => TangentPair::new(algebra.zero_vector(), y.clone()),
            IntegralKind::LinearCentral(z0) => TangentPair::new(
                algebra.zero_vector(),
                AlgebraVector::from_parts(DVector::zeros(algebra.dim_v()), z0.clone()),
            ),
            IntegralKind::Quadratic(a) => TangentPair::new(
                algebra.zero_vector(),
                algebra.vector_from(a * y.as_vector())?,
            ),
            IntegralKind::KillingVector(u) => {
                let w = state.log(algebra);
                let rotated = algebra.apply_j(&y.z_part(), &u.v_part());
                TangentPair::new(
                    AlgebraVector::from_parts(rotated, DVector::zeros(algebra.dim_z())),
                    u.sub(&algebra.bracket_v(&w.v_part(), &u.v_part())),
                )
            }
            IntegralKind::KillingRotation {
                rotation,
                symmetric,
            } => {
                let wv = state.log(algebra).v_part();
                let yz = y.z_part()[0];
                let base_v = -(symmetric * &wv) * yz - rotation * &y.v_part();
                let fiber_v = rotation * &wv;
                let mut fiber_z = DVector::zeros(algebra.dim_z());
                fiber_z[0] = -0.5 * algebra.inner_v(&(symmetric * &wv), &wv);
                TangentPair::new(
                    AlgebraVector::from_parts(base_v, DVector::zeros(algebra.dim_z())),
                    AlgebraVector::from_parts(fiber_v, fiber_z),
                )
            }
            IntegralKind::SmoothedKilling { index } => {
                let f = y.z_part()[0];
                if f.abs() <= SMOOTHING_CUTOFF {
                    return Ok(TangentPair::zeros(algebra));
                }
                let value = translation_value(algebra, *index, state);
                let inner = FirstIntegral::killing_translation(algebra, *index)?;
                let grad_value = inner.grad(algebra, state)?;
                let grad_f = TangentPair::new(algebra.zero_vector(), algebra.basis_z(0));
                let tau = 2.0 * std::f64::consts::PI;
                let damping = (-1.0 / (f * f)).exp();
                let (s, c) = {
                    let arg = tau * value / f;
                    (arg.sin(), arg.cos())
                };
                let coeff_value = damping * c * tau / f;
                let coeff_f = damping * (2.0 * s / f.powi(3) - tau * value * c / (f * f));
                grad_value.scale(coeff_value).add(&grad_f.scale(coeff_f))
            }
            IntegralKind::Sum(terms) => {
                let mut acc = TangentPair::zeros(algebra);
                for (cf, g) in terms {
                    acc = acc.add(&g.grad(algebra, state)?.scale(*cf));
                }
                acc
            }
            IntegralKind::Custom(c) => match &c.grad {
                Some(g) => g(algebra, state),
                None => {
                    let eval = c.eval.clone();
                    symplectic::numeric_gradient(
                        algebra,
                        move |s| eval(algebra, s),
                        state,
                        symplectic::DEFAULT_GRADIENT_STEP,
                    )?
                }
            },
        };
        Ok(pair)
    }

    /// First-integral residual of this integral's exact gradient at `state`.
    pub fn residual_at(&self, algebra: &TwoStepAlgebra, state: &TangentState) -> Result<f64> {
        let grad = self.grad(algebra, state)?;
        symplectic::first_integral_residual(algebra, state, &grad)
    }
}

fn require_canonical(algebra: &TwoStepAlgebra, context: &str) -> Result<()> {
    if algebra.dim_z() != 1 || !algebra.has_standard_metric() {
        return Err(Error::Config(format!(
            "{context} needs a one-dimensional center and the standard metric"
        )));
    }
    Ok(())
}

/// Value of the plain translation integral `F_k` (1-based index).
fn translation_value(algebra: &TwoStepAlgebra, k: usize, state: &TangentState) -> f64 {
    let u = algebra.basis_v(k - 1);
    let w = state.log(algebra);
    let shifted = u.sub(&algebra.bracket_v(&w.v_part(), &u.v_part()));
    algebra.inner(&state.velocity, &shifted)
}

/// Criterion for `g_A` to be a first integral: `[j(Z_i), A] = 0` for every
/// central basis direction. `matrix_v` acts on `v` and must be
/// metric-symmetric.
pub fn quadratic_is_integral(algebra: &TwoStepAlgebra, matrix_v: &DMatrix<f64>) -> Result<bool> {
    let dv = algebra.dim_v();
    if matrix_v.nrows() != dv || matrix_v.ncols() != dv {
        return Err(Error::dims("quadratic_is_integral", dv, matrix_v.nrows()));
    }
    if !linalg::is_symmetric_wrt(algebra.metric_v(), matrix_v, 1e-12) {
        return Err(Error::InvalidInput(
            "quadratic criterion needs a metric-symmetric matrix".into(),
        ));
    }
    Ok(algebra
        .j_mats()
        .iter()
        .all(|j| linalg::commutator_norm(j, matrix_v) <= COMMUTE_TOL))
}

/// Involution criterion for a pair of certified quadratic integrals:
/// `j(Z_i) A B = j(Z_i) B A` for every `i`.
pub fn quadratic_pair_commutes(
    algebra: &TwoStepAlgebra,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<bool> {
    if !quadratic_is_integral(algebra, a)? || !quadratic_is_integral(algebra, b)? {
        return Err(Error::InvalidInput(
            "both quadratic forms must be certified first integrals".into(),
        ));
    }
    let diff = a * b - b * a;
    Ok(algebra
        .j_mats()
        .iter()
        .all(|j| (j * &diff).norm() <= COMMUTE_TOL))
}

/// Bijection from quadratic first integrals to skew derivations: `A -> J A`.
pub fn psi(algebra: &TwoStepAlgebra, symmetric: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    require_canonical(algebra, "psi")?;
    if !quadratic_is_integral(algebra, symmetric)? {
        return Err(Error::InvalidInput(
            "psi needs a symmetric map commuting with the complex structure".into(),
        ));
    }
    Ok(&algebra.j_mats()[0] * symmetric)
}

/// Inverse direction, fixed so that `psi(psi_inverse(B)) = B`: `B -> -J B`.
pub fn psi_inverse(algebra: &TwoStepAlgebra, skew: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    require_canonical(algebra, "psi_inverse")?;
    let dv = algebra.dim_v();
    if skew.nrows() != dv || skew.ncols() != dv {
        return Err(Error::dims("psi_inverse", dv, skew.nrows()));
    }
    if linalg::max_abs(&(skew + skew.transpose())) > 1e-12 {
        return Err(Error::InvalidInput(
            "psi_inverse needs a skew matrix".into(),
        ));
    }
    let j = &algebra.j_mats()[0];
    if linalg::commutator_norm(j, skew) > COMMUTE_TOL {
        return Err(Error::InvalidInput(
            "psi_inverse needs a matrix commuting with the complex structure".into(),
        ));
    }
    Ok(-(j * skew))
}

/// An element of the isometry algebra `k ⋉ h_n`: an isotropy rotation plus
/// an infinitesimal translation.
#[derive(Clone, Debug)]
pub struct IsometryAlgebraElement {
    pub rotation: DMatrix<f64>,
    pub translation: AlgebraVector,
}

impl IsometryAlgebraElement {
    pub fn new(
        algebra: &TwoStepAlgebra,
        rotation: DMatrix<f64>,
        translation: AlgebraVector,
    ) -> Result<Self> {
        require_canonical(algebra, "isometry algebra element")?;
        algebra.check_vector(&translation, "isometry translation")?;
        let dv = algebra.dim_v();
        if rotation.nrows() != dv || rotation.ncols() != dv {
            return Err(Error::dims("isometry rotation", dv, rotation.nrows()));
        }
        if linalg::max_abs(&(&rotation + rotation.transpose())) > 1e-12 {
            return Err(Error::InvalidInput("isotropy part must be skew".into()));
        }
        if linalg::commutator_norm(&algebra.j_mats()[0], &rotation) > 1e-12 {
            return Err(Error::InvalidInput(
                "isotropy part must commute with the complex structure".into(),
            ));
        }
        Ok(IsometryAlgebraElement {
            rotation,
            translation,
        })
    }
}

/// The integral paired with a Killing field, decomposed as the rotation term
/// plus the translation term. Linear in the element.
pub fn killing_to_integral(
    algebra: &TwoStepAlgebra,
    element: &IsometryAlgebraElement,
) -> Result<FirstIntegral> {
    let rotation_part = FirstIntegral::killing_rotation(algebra, element.rotation.clone())?;
    let translation_part = FirstIntegral::killing_vector(algebra, element.translation.clone())?;
    Ok(FirstIntegral::sum(
        "f_X*",
        vec![(1.0, rotation_part), (1.0, translation_part)],
    ))
}
