//! The left-trivialized symplectic form on `TN` and the machinery built on
//! it: Hamiltonian fields from gradients, the Poisson bracket, numeric
//! gradients along left-translated curves, and the pointwise first-integral
//! residual.

use nalgebra::{DMatrix, DVector};

use crate::algebra::{AlgebraVector, TwoStepAlgebra};
use crate::error::{Error, Result};
use crate::state::{TangentPair, TangentState};

/// Default central-difference step before per-coordinate scaling.
pub const DEFAULT_GRADIENT_STEP: f64 = 1e-5;

/// Symplectic form at `state` on two tangent pairs:
/// `<U, V'> - <V, U'> + <Y, [U, U']>`. Left-invariant, so the base point
/// enters only through the fiber velocity.
pub fn omega(
    algebra: &TwoStepAlgebra,
    state: &TangentState,
    first: &TangentPair,
    second: &TangentPair,
) -> Result<f64> {
    state.conforms(algebra)?;
    first.conforms(algebra)?;
    second.conforms(algebra)?;
    let commutator = algebra.bracket(&first.base, &second.base)?;
    Ok(
        algebra.inner(&first.base, &second.fiber) - algebra.inner(&first.fiber, &second.base)
            + algebra.inner(&state.velocity, &commutator),
    )
}

/// Matrix of the symplectic form in the product basis of `n × n`.
pub fn omega_matrix(algebra: &TwoStepAlgebra, state: &TangentState) -> Result<DMatrix<f64>> {
    state.conforms(algebra)?;
    let d = algebra.dim();
    let g = algebra.metric();
    let mut m = DMatrix::zeros(2 * d, 2 * d);
    // Blocks: [[B, G], [-G, 0]] with B_ij = <Y, [e_i, e_j]>.
    for i in 0..d {
        for j in 0..d {
            m[(i, d + j)] = g[(i, j)];
            m[(d + i, j)] = -g[(i, j)];
        }
    }
    for i in 0..algebra.dim_v() {
        let mut ei = DVector::zeros(algebra.dim_v());
        ei[i] = 1.0;
        for j in 0..algebra.dim_v() {
            let mut ej = DVector::zeros(algebra.dim_v());
            ej[j] = 1.0;
            let br = algebra.bracket_v(&ei, &ej);
            m[(i, j)] = algebra.inner(&state.velocity, &br);
        }
    }
    Ok(m)
}

/// Hamiltonian vector field of a function from its gradient:
/// `X_f = (V, ad^t(V) Y - U)` for `grad f = (U, V)`.
pub fn grad_to_hamiltonian(
    algebra: &TwoStepAlgebra,
    velocity: &AlgebraVector,
    grad: &TangentPair,
) -> Result<TangentPair> {
    algebra.check_vector(velocity, "hamiltonian velocity")?;
    grad.conforms(algebra)?;
    let twist = algebra.ad_transpose(&grad.fiber, velocity)?;
    Ok(TangentPair {
        base: grad.fiber.clone(),
        fiber: twist.sub(&grad.base),
    })
}

/// Poisson bracket from gradients:
/// `{f, g} = <V', U> - <V, U'> - <Y, [V, V']>`.
pub fn poisson(
    algebra: &TwoStepAlgebra,
    state: &TangentState,
    grad_f: &TangentPair,
    grad_g: &TangentPair,
) -> Result<f64> {
    state.conforms(algebra)?;
    grad_f.conforms(algebra)?;
    grad_g.conforms(algebra)?;
    let commutator = algebra.bracket(&grad_f.fiber, &grad_g.fiber)?;
    Ok(algebra.inner(&grad_g.fiber, &grad_f.base)
        - algebra.inner(&grad_f.fiber, &grad_g.base)
        - algebra.inner(&state.velocity, &commutator))
}

/// The same bracket written through the j-map,
/// `{f, g} = <V', U> - <V, U'> + <j(Y_z) V'_v, V_v>`; used as a cross-check
/// of [`poisson`].
pub fn poisson_j_form(
    algebra: &TwoStepAlgebra,
    state: &TangentState,
    grad_f: &TangentPair,
    grad_g: &TangentPair,
) -> Result<f64> {
    state.conforms(algebra)?;
    grad_f.conforms(algebra)?;
    grad_g.conforms(algebra)?;
    let rotated = algebra.apply_j(&state.velocity.z_part(), &grad_g.fiber.v_part());
    Ok(
        algebra.inner(&grad_g.fiber, &grad_f.base) - algebra.inner(&grad_f.fiber, &grad_g.base)
            + algebra.inner_v(&rotated, &grad_f.fiber.v_part()),
    )
}

/// Gradient of `f` at `state` by central differences along the curves
/// `t -> (p exp(t e_i), Y)` and `t -> (p, Y + t e_i)`, converted to the
/// stored metric. Steps are scaled per coordinate as `step (1 + |c|)`.
pub fn numeric_gradient<F>(
    algebra: &TwoStepAlgebra,
    f: F,
    state: &TangentState,
    step: f64,
) -> Result<TangentPair>
where
    F: Fn(&TangentState) -> f64,
{
    state.conforms(algebra)?;
    if !(step > 0.0) {
        return Err(Error::InvalidInput("gradient step must be positive".into()));
    }
    let d = algebra.dim();
    let mut directional_base = DVector::zeros(d);
    let mut directional_fiber = DVector::zeros(d);

    for i in 0..d {
        let h = step * (1.0 + state.point[i].abs());
        let mut dir = DVector::zeros(d);
        dir[i] = h;
        let forward = TangentState {
            point: algebra.group_mul(&state.point, &dir),
            velocity: state.velocity.clone(),
        };
        dir[i] = -h;
        let backward = TangentState {
            point: algebra.group_mul(&state.point, &dir),
            velocity: state.velocity.clone(),
        };
        let (fp, fm) = (f(&forward), f(&backward));
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite evaluation in base direction {i}"
            )));
        }
        directional_base[i] = (fp - fm) / (2.0 * h);
    }
    for i in 0..d {
        let h = step * (1.0 + state.velocity.as_vector()[i].abs());
        let mut shifted = state.velocity.as_vector().clone();
        shifted[i] += h;
        let forward = TangentState {
            point: state.point.clone(),
            velocity: AlgebraVector::from_vector(shifted.clone(), algebra.dim_v()),
        };
        shifted[i] -= 2.0 * h;
        let backward = TangentState {
            point: state.point.clone(),
            velocity: AlgebraVector::from_vector(shifted, algebra.dim_v()),
        };
        let (fp, fm) = (f(&forward), f(&backward));
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite evaluation in fiber direction {i}"
            )));
        }
        directional_fiber[i] = (fp - fm) / (2.0 * h);
    }

    // Directional derivatives are the gradient paired against the metric;
    // invert it blockwise to return metric-consistent coordinates.
    let (base, fiber) = if algebra.has_standard_metric() {
        (directional_base, directional_fiber)
    } else {
        let g = algebra.metric();
        let chol = g
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numeric("metric lost positive definiteness".into()))?;
        (
            chol.solve(&directional_base),
            chol.solve(&directional_fiber),
        )
    };
    Ok(TangentPair {
        base: AlgebraVector::from_vector(base, algebra.dim_v()),
        fiber: AlgebraVector::from_vector(fiber, algebra.dim_v()),
    })
}

/// Residual of the first-integral criterion at one state:
/// `<Y, U> - <j(Y_z) V_v, Y_v>` for `grad f = (U, V)`. Vanishing at every
/// state is equivalent to `f` being constant along geodesics.
pub fn first_integral_residual(
    algebra: &TwoStepAlgebra,
    state: &TangentState,
    grad: &TangentPair,
) -> Result<f64> {
    state.conforms(algebra)?;
    grad.conforms(algebra)?;
    let rotated = algebra.apply_j(&state.velocity.z_part(), &grad.fiber.v_part());
    Ok(algebra.inner(&state.velocity, &grad.base)
        - algebra.inner_v(&rotated, &state.velocity.v_part()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heisenberg;
    use crate::sample;

    fn h1_state_at_z1() -> (TwoStepAlgebra, TangentState) {
        let a = heisenberg::canonical_algebra(1);
        let state = TangentState::at_identity(&a, a.basis_z(0));
        (a, state)
    }

    #[test]
    fn omega_pairs_base_with_fiber() {
        let (a, state) = h1_state_at_z1();
        let mut rng = sample::sample_rng(11, 0);
        for _ in 0..32 {
            let u = sample::sample_algebra_vector(&a, &mut rng);
            let w = sample::sample_algebra_vector(&a, &mut rng);
            let xi = TangentPair::new(u.clone(), a.zero_vector());
            let eta = TangentPair::new(a.zero_vector(), w.clone());
            let val = omega(&a, &state, &xi, &eta).unwrap();
            assert!((val - a.inner(&u, &w)).abs() < 1e-14);
        }
    }

    #[test]
    fn omega_vanishes_on_diagonal() {
        let (a, state) = h1_state_at_z1();
        let mut rng = sample::sample_rng(11, 1);
        let xi = sample::sample_pair(&a, &mut rng);
        assert!(omega(&a, &state, &xi, &xi).unwrap().abs() < 1e-13);
    }

    #[test]
    fn omega_sees_the_bracket_through_the_velocity() {
        let (a, state) = h1_state_at_z1();
        let xi = TangentPair::new(a.basis_v(0), a.zero_vector());
        let eta = TangentPair::new(a.basis_v(1), a.zero_vector());
        let val = omega(&a, &state, &xi, &eta).unwrap();
        assert!((val - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_field_of_energy_gradient() {
        let a = heisenberg::canonical_algebra(1);
        // Y = X_1 + Z_1; grad E = (0, Y) maps to (Y, j(Y_z) Y_v).
        let y = a.basis_v(0).add(&a.basis_z(0));
        let grad = TangentPair::new(a.zero_vector(), y.clone());
        let field = grad_to_hamiltonian(&a, &y, &grad).unwrap();
        assert!((field.base.sub(&y)).norm() < 1e-15);
        assert!((field.fiber.sub(&a.basis_v(1))).norm() < 1e-15);
    }

    #[test]
    fn hamiltonian_field_of_central_linear_gradient() {
        let a = heisenberg::canonical_algebra(2);
        let y = a.basis_v(2);
        let z0 = a.basis_z(0);
        let grad = TangentPair::new(a.zero_vector(), z0.clone());
        let field = grad_to_hamiltonian(&a, &y, &grad).unwrap();
        assert!((field.base.sub(&z0)).norm() < 1e-15);
        assert!(field.fiber.norm() < 1e-15);
    }

    #[test]
    fn hamiltonian_field_with_zero_fiber_gradient() {
        let a = heisenberg::canonical_algebra(1);
        let u = a.basis_v(0);
        let grad = TangentPair::new(u.clone(), a.zero_vector());
        let field = grad_to_hamiltonian(&a, &a.basis_z(0), &grad).unwrap();
        assert!(field.base.norm() < 1e-15);
        assert!((field.fiber.add(&u)).norm() < 1e-15);
    }

    #[test]
    fn poisson_agrees_with_omega_of_hamiltonian_fields() {
        let a = heisenberg::canonical_algebra(2);
        for idx in 0..64 {
            let state = sample::sample_state(&a, 3, idx);
            let mut rng = sample::sample_rng(4, idx);
            let gf = sample::sample_pair(&a, &mut rng);
            let gg = sample::sample_pair(&a, &mut rng);
            let direct = poisson(&a, &state, &gf, &gg).unwrap();
            let xf = grad_to_hamiltonian(&a, &state.velocity, &gf).unwrap();
            let xg = grad_to_hamiltonian(&a, &state.velocity, &gg).unwrap();
            let via_omega = omega(&a, &state, &xf, &xg).unwrap();
            assert!((direct - via_omega).abs() < 1e-12);
            let alt = poisson_j_form(&a, &state, &gf, &gg).unwrap();
            assert!((direct - alt).abs() < 1e-12);
        }
    }

    #[test]
    fn numeric_gradient_of_energy() {
        let a = heisenberg::canonical_algebra(1);
        let state = sample::sample_state(&a, 9, 0);
        let grad = numeric_gradient(
            &a,
            |s| 0.5 * a.inner(&s.velocity, &s.velocity),
            &state,
            DEFAULT_GRADIENT_STEP,
        )
        .unwrap();
        assert!(grad.base.norm() < 1e-8);
        assert!((grad.fiber.sub(&state.velocity)).norm() < 1e-8);
    }

    #[test]
    fn numeric_gradient_of_constant_vanishes() {
        let a = heisenberg::canonical_algebra(1);
        let state = sample::sample_state(&a, 9, 1);
        let grad = numeric_gradient(&a, |_| 4.25, &state, DEFAULT_GRADIENT_STEP).unwrap();
        assert!(grad.base.norm() < 1e-12);
        assert!(grad.fiber.norm() < 1e-12);
    }

    #[test]
    fn numeric_gradient_of_central_linear_function() {
        let a = heisenberg::canonical_algebra(1);
        let state = sample::sample_state(&a, 9, 2);
        let grad = numeric_gradient(
            &a,
            |s| s.velocity.z_part()[0],
            &state,
            DEFAULT_GRADIENT_STEP,
        )
        .unwrap();
        assert!(grad.base.norm() < 1e-9);
        assert!((grad.fiber.sub(&a.basis_z(0))).norm() < 1e-9);
    }

    #[test]
    fn numeric_gradient_rejects_non_finite_values() {
        let a = heisenberg::canonical_algebra(1);
        let state = sample::sample_state(&a, 9, 3);
        let err = numeric_gradient(&a, |s| 1.0 / (s.point[0] - s.point[0]), &state, 1e-5);
        assert!(matches!(err, Err(Error::Numeric(_))));
    }

    #[test]
    fn residual_of_energy_gradient_vanishes() {
        let a = heisenberg::canonical_algebra(2);
        for idx in 0..32 {
            let state = sample::sample_state(&a, 21, idx);
            let grad = TangentPair::new(a.zero_vector(), state.velocity.clone());
            let r = first_integral_residual(&a, &state, &grad).unwrap();
            assert!(r.abs() < 1e-12);
        }
    }

    #[test]
    fn residual_of_position_function_is_generically_nonzero() {
        let a = heisenberg::canonical_algebra(1);
        // f(p, Y) = <W_v, X_1> has exact gradient (X_1, 0).
        let state = TangentState::new(a.exp_map(&a.basis_v(0)), a.basis_v(0));
        let grad = TangentPair::new(a.basis_v(0), a.zero_vector());
        let r = first_integral_residual(&a, &state, &grad).unwrap();
        assert!(r.abs() > 0.5);
    }

    #[test]
    fn omega_matrix_has_full_rank() {
        let a = heisenberg::canonical_algebra(2);
        for idx in 0..8 {
            let state = sample::sample_state(&a, 30, idx);
            let m = omega_matrix(&a, &state).unwrap();
            assert_eq!(crate::linalg::rank_with_tol(&m, 1e-10), 2 * a.dim());
        }
    }
}
