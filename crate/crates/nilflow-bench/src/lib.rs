//! Shared setup for the benchmark targets.

use nilflow::heisenberg;
use nilflow::integrals::FirstIntegral;
use nilflow::sample;
use nilflow::state::TangentState;
use nilflow::TwoStepAlgebra;

pub fn algebra(n: usize) -> TwoStepAlgebra {
    heisenberg::canonical_algebra(n)
}

pub fn states(algebra: &TwoStepAlgebra, count: usize) -> Vec<TangentState> {
    (0..count)
        .map(|i| sample::sample_state(algebra, 0xbe0c, i as u64))
        .collect()
}

pub fn family(n: usize) -> Vec<FirstIntegral> {
    heisenberg::family(n, heisenberg::FamilyKind::Isotropy)
}
