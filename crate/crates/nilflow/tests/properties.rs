//! Property tests for the structural invariants: bracket identities, the
//! symplectic form, group axioms, the quadratic/skew bijection, and lattice
//! closure.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use nilflow::algebra::{AlgebraVector, TwoStepAlgebra};
use nilflow::heisenberg;
use nilflow::integrals;
use nilflow::lattice::Lattice;
use nilflow::state::{TangentPair, TangentState};
use nilflow::symplectic;

const TOL: f64 = 1e-12;

fn coord() -> impl Strategy<Value = f64> {
    -2.0..2.0f64
}

fn coords(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(coord(), len)
}

/// A random 2-step algebra: skew-symmetrized j-matrices over a small
/// dimension grid, standard metric.
fn random_algebra() -> impl Strategy<Value = TwoStepAlgebra> {
    (2usize..=4, 1usize..=2)
        .prop_flat_map(|(dim_v, dim_z)| {
            (
                Just(dim_v),
                Just(dim_z),
                proptest::collection::vec(coords(dim_v * dim_v), dim_z),
            )
        })
        .prop_map(|(dim_v, dim_z, flats)| {
            let j_mats: Vec<DMatrix<f64>> = flats
                .into_iter()
                .map(|flat| {
                    let raw = DMatrix::from_row_slice(dim_v, dim_v, &flat);
                    (&raw - raw.transpose()) * 0.5
                })
                .collect();
            TwoStepAlgebra::new(dim_v, dim_z, j_mats).expect("skew by construction")
        })
}

fn vector_for(algebra: &TwoStepAlgebra, flat: &[f64]) -> AlgebraVector {
    AlgebraVector::from_vector(
        DVector::from_row_slice(&flat[..algebra.dim()]),
        algebra.dim_v(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bracket_is_antisymmetric_bilinear_and_central(
        (algebra, data) in random_algebra().prop_flat_map(|a| {
            let d = a.dim();
            (Just(a), coords(3 * d + 2))
        })
    ) {
        let d = algebra.dim();
        let x = vector_for(&algebra, &data[..d]);
        let y = vector_for(&algebra, &data[d..2 * d]);
        let w = vector_for(&algebra, &data[2 * d..3 * d]);
        let (s, t) = (data[3 * d], data[3 * d + 1]);

        let xy = algebra.bracket(&x, &y).unwrap();
        let yx = algebra.bracket(&y, &x).unwrap();
        prop_assert!(xy.add(&yx).norm() <= TOL);
        // the result is central: brackets against it vanish
        prop_assert!(xy.v_part().norm() == 0.0);
        prop_assert!(algebra.bracket(&w, &xy).unwrap().norm() <= TOL);
        // 2-step: double brackets vanish identically
        prop_assert!(algebra.bracket(&xy, &w).unwrap().norm() <= TOL);
        // bilinearity
        let combo = x.scale(s).add(&y.scale(t));
        let lhs = algebra.bracket(&combo, &w).unwrap();
        let rhs = algebra.bracket(&x, &w).unwrap().scale(s)
            .add(&algebra.bracket(&y, &w).unwrap().scale(t));
        prop_assert!(lhs.sub(&rhs).norm() <= 1e-11);
        // pairing consistency: <[X, Y], W> = <j(W_z) X_v, Y_v>
        let pairing = algebra.inner(&xy, &w);
        let rotated = algebra.apply_j(&w.z_part(), &x.v_part());
        let direct = algebra.inner_v(&rotated, &y.v_part());
        prop_assert!((pairing - direct).abs() <= TOL * (1.0 + pairing.abs()));
    }

    #[test]
    fn ad_transpose_is_dual_to_the_bracket(
        (algebra, data) in random_algebra().prop_flat_map(|a| {
            let d = a.dim();
            (Just(a), coords(3 * d))
        })
    ) {
        let d = algebra.dim();
        let v = vector_for(&algebra, &data[..d]);
        let y = vector_for(&algebra, &data[d..2 * d]);
        let w = vector_for(&algebra, &data[2 * d..]);
        let lhs = algebra.inner(&algebra.ad_transpose(&v, &y).unwrap(), &w);
        let rhs = algebra.inner(&y, &algebra.bracket(&v, &w).unwrap());
        prop_assert!((lhs - rhs).abs() <= TOL * (1.0 + lhs.abs()));
    }

    #[test]
    fn group_axioms_hold_in_exponential_coordinates(
        (algebra, data) in random_algebra().prop_flat_map(|a| {
            let d = a.dim();
            (Just(a), coords(3 * d))
        })
    ) {
        let d = algebra.dim();
        let p = DVector::from_row_slice(&data[..d]);
        let q = DVector::from_row_slice(&data[d..2 * d]);
        let r = DVector::from_row_slice(&data[2 * d..]);
        // associativity
        let left = algebra.group_mul(&algebra.group_mul(&p, &q), &r);
        let right = algebra.group_mul(&p, &algebra.group_mul(&q, &r));
        prop_assert!((left - right).norm() <= 1e-14);
        // identity and inverse
        let e = algebra.group_identity();
        prop_assert!((algebra.group_mul(&p, &e) - &p).norm() == 0.0);
        prop_assert!(algebra.group_mul(&p, &algebra.group_inv(&p)).norm() <= 1e-14);
        // exp and log are mutually inverse
        let x = algebra.log_map(&p);
        prop_assert!((algebra.exp_map(&x) - &p).norm() == 0.0);
    }

    #[test]
    fn hamiltonian_field_reproduces_the_differential(
        (algebra, data) in random_algebra().prop_flat_map(|a| {
            let d = a.dim();
            (Just(a), coords(7 * d))
        })
    ) {
        let d = algebra.dim();
        let state = TangentState::new(
            DVector::from_row_slice(&data[..d]),
            vector_for(&algebra, &data[d..2 * d]),
        );
        let grad = TangentPair::new(
            vector_for(&algebra, &data[2 * d..3 * d]),
            vector_for(&algebra, &data[3 * d..4 * d]),
        );
        let probe = TangentPair::new(
            vector_for(&algebra, &data[4 * d..5 * d]),
            vector_for(&algebra, &data[5 * d..6 * d]),
        );
        let field = symplectic::grad_to_hamiltonian(&algebra, &state.velocity, &grad).unwrap();
        let lhs = symplectic::omega(&algebra, &state, &field, &probe).unwrap();
        let rhs = algebra.inner(&grad.base, &probe.base)
            + algebra.inner(&grad.fiber, &probe.fiber);
        prop_assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + lhs.abs()));
    }

    #[test]
    fn quadratic_skew_bijection_round_trips(
        (n, flat) in (1usize..=3).prop_flat_map(|n| (Just(n), coords(4 * n * n)))
    ) {
        let algebra = heisenberg::canonical_algebra(n);
        let j = algebra.j_mats()[0].clone();
        let raw = DMatrix::from_row_slice(2 * n, 2 * n, &flat);
        let sym = (&raw + raw.transpose()) * 0.5;
        // project onto the commutant of J; symmetric and J-commuting
        let a = (&sym - &j * &sym * &j) * 0.5;
        let image = integrals::psi(&algebra, &a).unwrap();
        // the image is skew and commutes with J
        prop_assert!((&image + image.transpose()).norm() <= 1e-12);
        prop_assert!((&j * &image - &image * &j).norm() <= 1e-12);
        let back = integrals::psi_inverse(&algebra, &image).unwrap();
        prop_assert!((&back - &a).norm() <= 1e-12);
    }

    #[test]
    fn lattice_is_a_subgroup(
        (divisors, a1, b1, a2, b2, c1, c2) in (1u64..=3).prop_flat_map(|r1| {
            let r2 = r1 * 2;
            (
                Just(vec![r1, r2]),
                proptest::collection::vec(-3i64..=3, 2),
                proptest::collection::vec(-3i64..=3, 2),
                proptest::collection::vec(-3i64..=3, 2),
                proptest::collection::vec(-3i64..=3, 2),
                -3i64..=3,
                -3i64..=3,
            )
        })
    ) {
        let group = heisenberg::HeisenbergGroup::new(2);
        let lattice = Lattice::new(divisors).unwrap();
        let q1 = lattice.element(&a1, &b1, c1).unwrap();
        let q2 = lattice.element(&a2, &b2, c2).unwrap();
        prop_assert!(lattice.contains(&group, &q1).unwrap());
        let product = group.mul(&q1, &q2).unwrap();
        prop_assert!(lattice.contains(&group, &product).unwrap());
        let inverse = group.inv(&q1).unwrap();
        prop_assert!(lattice.contains(&group, &inverse).unwrap());
    }

    #[test]
    fn symplectic_form_is_nondegenerate_at_random_states(
        (algebra, data) in random_algebra().prop_flat_map(|a| {
            let d = a.dim();
            (Just(a), coords(2 * d))
        })
    ) {
        let d = algebra.dim();
        let state = TangentState::new(
            DVector::from_row_slice(&data[..d]),
            vector_for(&algebra, &data[d..2 * d]),
        );
        let matrix = symplectic::omega_matrix(&algebra, &state).unwrap();
        prop_assert_eq!(nilflow::linalg::rank_with_tol(&matrix, 1e-10), 2 * d);
    }

    #[test]
    fn first_integral_residual_vanishes_exactly_for_energy_like_gradients(
        (algebra, data) in random_algebra().prop_flat_map(|a| {
            let d = a.dim();
            (Just(a), coords(2 * d))
        })
    ) {
        let d = algebra.dim();
        let state = TangentState::new(
            DVector::from_row_slice(&data[..d]),
            vector_for(&algebra, &data[d..2 * d]),
        );
        // grad E = (0, Y): residual vanishes on any 2-step algebra
        let grad = TangentPair::new(algebra.zero_vector(), state.velocity.clone());
        let residual = symplectic::first_integral_residual(&algebra, &state, &grad).unwrap();
        prop_assert!(residual.abs() <= TOL);
    }
}
