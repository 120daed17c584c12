//! Deterministic state sampling.
//!
//! Every sample owns an RNG seeded by `seed ^ index`, so batches can be
//! evaluated in any order (or split across workers) without changing the
//! stream a given sample sees.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{AlgebraVector, TwoStepAlgebra};
use crate::state::{TangentPair, TangentState};

/// Coordinates are drawn uniformly from `[-COORD_RANGE, COORD_RANGE]`.
pub const COORD_RANGE: f64 = 2.0;

pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ index)
}

fn uniform_vector(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.random_range(-COORD_RANGE..COORD_RANGE))
}

pub fn sample_algebra_vector(algebra: &TwoStepAlgebra, rng: &mut ChaCha8Rng) -> AlgebraVector {
    AlgebraVector::from_vector(uniform_vector(rng, algebra.dim()), algebra.dim_v())
}

pub fn sample_pair(algebra: &TwoStepAlgebra, rng: &mut ChaCha8Rng) -> TangentPair {
    TangentPair {
        base: sample_algebra_vector(algebra, rng),
        fiber: sample_algebra_vector(algebra, rng),
    }
}

pub fn sample_state(algebra: &TwoStepAlgebra, seed: u64, index: u64) -> TangentState {
    let mut rng = sample_rng(seed, index);
    sample_state_with(algebra, &mut rng)
}

pub fn sample_state_with(algebra: &TwoStepAlgebra, rng: &mut ChaCha8Rng) -> TangentState {
    TangentState {
        point: uniform_vector(rng, algebra.dim()),
        velocity: sample_algebra_vector(algebra, rng),
    }
}

/// Sample a state whose central velocity component has norm at least
/// `min_z_norm` (redrawing the velocity within the same per-sample stream).
pub fn sample_state_min_fiber_z(
    algebra: &TwoStepAlgebra,
    seed: u64,
    index: u64,
    min_z_norm: f64,
) -> TangentState {
    let mut rng = sample_rng(seed, index);
    let point = uniform_vector(&mut rng, algebra.dim());
    loop {
        let velocity = sample_algebra_vector(algebra, &mut rng);
        if velocity.z_part().norm() >= min_z_norm {
            return TangentState { point, velocity };
        }
    }
}
