//! Points and tangent vectors of the left-trivialized tangent bundle.

use nalgebra::DVector;

use crate::algebra::{AlgebraVector, TwoStepAlgebra};
use crate::error::Result;

/// A point of `TN ≅ N × n`: group coordinates `p` and the left-trivialized
/// velocity `Y`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentState {
    pub point: DVector<f64>,
    pub velocity: AlgebraVector,
}

impl TangentState {
    pub fn new(point: DVector<f64>, velocity: AlgebraVector) -> Self {
        TangentState { point, velocity }
    }

    /// State over the identity element.
    pub fn at_identity(algebra: &TwoStepAlgebra, velocity: AlgebraVector) -> Self {
        TangentState {
            point: algebra.group_identity(),
            velocity,
        }
    }

    /// Logarithm of the base point.
    pub fn log(&self, algebra: &TwoStepAlgebra) -> AlgebraVector {
        algebra.log_map(&self.point)
    }

    pub fn conforms(&self, algebra: &TwoStepAlgebra) -> Result<()> {
        algebra.check_vector(&self.velocity, "state velocity")?;
        if self.point.len() != algebra.dim() {
            return Err(crate::error::Error::dims(
                "state point",
                algebra.dim(),
                self.point.len(),
            ));
        }
        Ok(())
    }
}

/// An element of `T(TN) ≅ n × n`: a left-invariant base direction and a
/// fiber direction. Gradients of functions on `TN` use the same shape.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentPair {
    pub base: AlgebraVector,
    pub fiber: AlgebraVector,
}

impl TangentPair {
    pub fn new(base: AlgebraVector, fiber: AlgebraVector) -> Self {
        TangentPair { base, fiber }
    }

    pub fn zeros(algebra: &TwoStepAlgebra) -> Self {
        TangentPair {
            base: algebra.zero_vector(),
            fiber: algebra.zero_vector(),
        }
    }

    pub fn conforms(&self, algebra: &TwoStepAlgebra) -> Result<()> {
        algebra.check_vector(&self.base, "pair base")?;
        algebra.check_vector(&self.fiber, "pair fiber")
    }

    pub fn scale(&self, c: f64) -> Self {
        TangentPair {
            base: self.base.scale(c),
            fiber: self.fiber.scale(c),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        TangentPair {
            base: self.base.add(&other.base),
            fiber: self.fiber.add(&other.fiber),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        TangentPair {
            base: self.base.sub(&other.base),
            fiber: self.fiber.sub(&other.fiber),
        }
    }

    /// Norm in the product of the algebra metric with itself.
    pub fn norm(&self, algebra: &TwoStepAlgebra) -> f64 {
        (algebra.inner(&self.base, &self.base) + algebra.inner(&self.fiber, &self.fiber))
            .max(0.0)
            .sqrt()
    }
}
