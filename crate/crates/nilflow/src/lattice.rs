//! Cocompact lattices of the Heisenberg group and the smooth first
//! integrals that survive on the quotient.
//!
//! A lattice is indexed by a divisibility chain `r_1 | r_2 | ... | r_n`; its
//! elements have `x_i` in `r_i Z`, `y_i` in `2 Z` and integer central
//! coordinate, where `x_i, y_i` sit in the interleaved slots `2i-1, 2i` of
//! the group coordinates.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::heisenberg::{self, HeisenbergGroup};
use crate::integrals::FirstIntegral;
use crate::state::TangentState;

/// Absolute tolerance for the integrality tests.
pub const INTEGRALITY_TOL: f64 = 1e-9;

/// A lattice `Λ_r` given by its divisor tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    divisors: Vec<u64>,
}

impl Lattice {
    pub fn new(divisors: Vec<u64>) -> Result<Self> {
        if divisors.is_empty() {
            return Err(Error::Config("lattice needs at least one divisor".into()));
        }
        if divisors.contains(&0) {
            return Err(Error::Config("lattice divisors must be positive".into()));
        }
        for w in divisors.windows(2) {
            if w[1] % w[0] != 0 {
                return Err(Error::Config(format!(
                    "divisibility chain broken: {} does not divide {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Lattice { divisors })
    }

    pub fn divisors(&self) -> &[u64] {
        &self.divisors
    }

    pub fn rank(&self) -> usize {
        self.divisors.len()
    }

    /// Membership test with integrality tolerance.
    pub fn contains(&self, group: &HeisenbergGroup, q: &DVector<f64>) -> Result<bool> {
        if group.rank() != self.rank() {
            return Err(Error::Config(format!(
                "lattice rank {} does not match group rank {}",
                self.rank(),
                group.rank()
            )));
        }
        if q.len() != group.dim() {
            return Err(Error::dims("lattice element", group.dim(), q.len()));
        }
        let near_multiple = |value: f64, modulus: f64| -> bool {
            (value - modulus * (value / modulus).round()).abs() <= INTEGRALITY_TOL
        };
        for (i, &r) in self.divisors.iter().enumerate() {
            if !near_multiple(q[2 * i], r as f64) {
                return Ok(false);
            }
            if !near_multiple(q[2 * i + 1], 2.0) {
                return Ok(false);
            }
        }
        Ok(near_multiple(q[2 * self.rank()], 1.0))
    }

    /// The lattice element with `x_i = r_i a_i`, `y_i = 2 b_i` and central
    /// coordinate `c`.
    pub fn element(&self, a: &[i64], b: &[i64], c: i64) -> Result<DVector<f64>> {
        let n = self.rank();
        if a.len() != n || b.len() != n {
            return Err(Error::dims("lattice element coefficients", n, a.len()));
        }
        let mut q = DVector::zeros(2 * n + 1);
        for i in 0..n {
            q[2 * i] = self.divisors[i] as f64 * a[i] as f64;
            q[2 * i + 1] = 2.0 * b[i] as f64;
        }
        q[2 * n] = c as f64;
        Ok(q)
    }

    /// Random element with integer coefficients in `[-3, 3]`.
    pub fn sample_element(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let n = self.rank();
        let a: Vec<i64> = (0..n).map(|_| rng.random_range(-3..=3)).collect();
        let b: Vec<i64> = (0..n).map(|_| rng.random_range(-3..=3)).collect();
        let c = rng.random_range(-3..=3);
        self.element(&a, &b, c)
            .expect("lengths match by construction")
    }
}

/// Left action of a lattice element on a tangent state; errors when `q` is
/// not in the lattice. Fiber coordinates are untouched.
pub fn act(
    group: &HeisenbergGroup,
    lattice: &Lattice,
    q: &DVector<f64>,
    state: &TangentState,
) -> Result<TangentState> {
    if !lattice.contains(group, q)? {
        return Err(Error::InvalidInput(
            "group element is not in the lattice".into(),
        ));
    }
    Ok(TangentState::new(
        group.mul(q, &state.point)?,
        state.velocity.clone(),
    ))
}

/// The translation integral shifts by an integer multiple of the central
/// linear integral under the lattice action; this returns the shift divided
/// by that value (an integer up to round-off) for diagnostics.
pub fn translation_shift_ratio(
    group: &HeisenbergGroup,
    lattice: &Lattice,
    k: usize,
    q: &DVector<f64>,
    state: &TangentState,
) -> Result<f64> {
    let algebra = group.algebra();
    let f_k = FirstIntegral::killing_translation(algebra, k)?;
    let central = state.velocity.z_part()[0];
    if central.abs() <= 1e-12 {
        return Err(Error::InvalidInput(
            "shift ratio undefined at vanishing central velocity".into(),
        ));
    }
    let moved = act(group, lattice, q, state)?;
    let delta = f_k.eval(algebra, &moved)? - f_k.eval(algebra, state)?;
    Ok(delta / central)
}

/// The family of `2n + 1` smooth lattice-invariant integrals: the central
/// linear one, the pair quadratics, and the smoothed translations (odd or
/// even indices).
pub fn quotient_family(n: usize, odd: bool) -> Vec<FirstIntegral> {
    let algebra = heisenberg::canonical_algebra(n);
    let mut out = vec![FirstIntegral::central_basis(&algebra)];
    for i in 1..=n {
        out.push(
            FirstIntegral::quadratic_on_v(&algebra, heisenberg::pair_projector(n, i))
                .expect("projector is symmetric")
                .with_label(format!("g_A{i}")),
        );
    }
    for k in 1..=n {
        let index = if odd { 2 * k - 1 } else { 2 * k };
        out.push(FirstIntegral::smoothed_killing(&algebra, index).expect("index in range"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;

    #[test]
    fn divisibility_is_validated() {
        assert!(Lattice::new(vec![1, 2, 4]).is_ok());
        assert!(Lattice::new(vec![2, 3]).is_err());
        assert!(Lattice::new(vec![]).is_err());
        assert!(Lattice::new(vec![0]).is_err());
    }

    #[test]
    fn membership_examples() {
        let group = HeisenbergGroup::new(2);
        let lattice = Lattice::new(vec![1, 2]).unwrap();
        // (r_1 e_1, 0, 0) is a lattice point
        let q = lattice.element(&[1, 0], &[0, 0], 0).unwrap();
        assert!(lattice.contains(&group, &q).unwrap());
        // y must be even: (0, e_1, 0) is not
        let mut bad = DVector::zeros(5);
        bad[1] = 1.0;
        assert!(!lattice.contains(&group, &bad).unwrap());
        // identity belongs
        assert!(lattice.contains(&group, &group.identity()).unwrap());
        // x_2 must be a multiple of r_2 = 2
        let mut odd_x = DVector::zeros(5);
        odd_x[2] = 1.0;
        assert!(!lattice.contains(&group, &odd_x).unwrap());
    }

    #[test]
    fn commutator_of_generators_is_central() {
        // The generator commutator lands in the center with coordinate
        // 2 r_i: the x-generator has length r_i, the y-generator length 2,
        // and the group law pairs them through J.
        let group = HeisenbergGroup::new(2);
        let lattice = Lattice::new(vec![1, 3]).unwrap();
        for i in 0..2 {
            let mut a = vec![0i64; 2];
            a[i] = 1;
            let x_gen = lattice.element(&a, &[0, 0], 0).unwrap();
            let mut b = vec![0i64; 2];
            b[i] = 1;
            let y_gen = lattice.element(&[0, 0], &b, 0).unwrap();
            let lhs = group.mul(&x_gen, &y_gen).unwrap();
            let lhs = group.mul(&lhs, &group.inv(&x_gen).unwrap()).unwrap();
            let commutator = group.mul(&lhs, &group.inv(&y_gen).unwrap()).unwrap();
            let expected = 2.0 * lattice.divisors()[i] as f64;
            for c in 0..4 {
                assert!(commutator[c].abs() < 1e-12);
            }
            assert!((commutator[4] - expected).abs() < 1e-12);
            assert!(lattice.contains(&group, &commutator).unwrap());
        }
    }

    #[test]
    fn lattice_is_closed_under_products_and_inverses() {
        let group = HeisenbergGroup::new(2);
        let lattice = Lattice::new(vec![1, 2]).unwrap();
        let mut rng = sample::sample_rng(91, 0);
        for _ in 0..64 {
            let q1 = lattice.sample_element(&mut rng);
            let q2 = lattice.sample_element(&mut rng);
            let prod = group.mul(&q1, &q2).unwrap();
            assert!(lattice.contains(&group, &prod).unwrap());
            assert!(lattice.contains(&group, &group.inv(&q1).unwrap()).unwrap());
        }
    }

    #[test]
    fn action_preserves_invariant_integrals() {
        let group = HeisenbergGroup::new(1);
        let algebra = group.algebra();
        let lattice = Lattice::new(vec![1]).unwrap();
        let g1 = FirstIntegral::quadratic_on_v(algebra, heisenberg::pair_projector(1, 1)).unwrap();
        let energy = FirstIntegral::energy();
        let mut rng = sample::sample_rng(92, 0);
        for idx in 0..32 {
            let state = sample::sample_state(algebra, 92, idx);
            let q = lattice.sample_element(&mut rng);
            let moved = act(&group, &lattice, &q, &state).unwrap();
            assert!(
                (g1.eval(algebra, &moved).unwrap() - g1.eval(algebra, &state).unwrap()).abs()
                    < 1e-12
            );
            assert!(
                (energy.eval(algebra, &moved).unwrap() - energy.eval(algebra, &state).unwrap())
                    .abs()
                    < 1e-12
            );
        }
        // identity acts trivially
        let state = sample::sample_state(algebra, 92, 999);
        let moved = act(&group, &lattice, &group.identity(), &state).unwrap();
        assert_eq!(moved, state);
    }

    #[test]
    fn action_rejects_outsiders() {
        let group = HeisenbergGroup::new(1);
        let lattice = Lattice::new(vec![1]).unwrap();
        let state = sample::sample_state(group.algebra(), 93, 0);
        let mut q = DVector::zeros(3);
        q[1] = 1.0;
        assert!(act(&group, &lattice, &q, &state).is_err());
    }

    #[test]
    fn shift_ratio_is_an_integer() {
        let group = HeisenbergGroup::new(1);
        let lattice = Lattice::new(vec![1]).unwrap();
        let mut rng = sample::sample_rng(94, 0);
        for idx in 0..32 {
            let state = sample::sample_state_min_fiber_z(group.algebra(), 94, idx, 0.1);
            let q = lattice.sample_element(&mut rng);
            let ratio = translation_shift_ratio(&group, &lattice, 1, &q, &state).unwrap();
            assert!((ratio - ratio.round()).abs() < 1e-9, "ratio {ratio}");
        }
    }

    #[test]
    fn quotient_family_shape() {
        let fam = quotient_family(1, true);
        assert_eq!(fam.len(), 3);
        let fam = quotient_family(2, false);
        assert_eq!(fam.len(), 5);
        let labels: Vec<&str> = fam.iter().map(|f| f.label()).collect();
        assert_eq!(labels, vec!["f_Z1", "g_A1", "g_A2", "Fbar_2", "Fbar_4"]);
    }
}
