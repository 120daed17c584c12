//! Coadjoint annihilators and the sufficient non-integrability predicate.
//!
//! For a covector realized as `V + Z` through the metric, the annihilator is
//! `ker j(Z) ⊕ z`. The algebra is flagged non-integrable when, generically,
//! sampled pairs of covectors are regular (annihilator of minimal dimension)
//! and their annihilators have a nonzero bracket.

use nalgebra::DMatrix;

use crate::algebra::{AlgebraVector, TwoStepAlgebra};
use crate::error::Result;
use crate::linalg;
use crate::sample;

/// Fraction of sampled pairs that must satisfy the condition before the
/// predicate reports "generically": failures of the generic conditions form
/// a measure-zero set, so sampled violations indicate structure.
const GENERIC_FRACTION: f64 = 0.99;

/// Basis of the annihilator of the covector dual to `V + Z`:
/// the kernel of `j(Z)` inside `v` together with all of `z`.
pub fn annihilator(
    algebra: &TwoStepAlgebra,
    covector: &AlgebraVector,
) -> Result<Vec<AlgebraVector>> {
    algebra.check_vector(covector, "annihilator covector")?;
    let j = algebra.j_of(&covector.z_part())?;
    let mut basis = Vec::new();
    for kernel_vec in linalg::null_space(&j, linalg::RANK_TOL) {
        basis.push(AlgebraVector::from_parts(
            kernel_vec,
            nalgebra::DVector::zeros(algebra.dim_z()),
        ));
    }
    for i in 0..algebra.dim_z() {
        basis.push(algebra.basis_z(i));
    }
    Ok(basis)
}

/// Outcome of the sampled predicate.
#[derive(Clone, Debug)]
pub struct ButlerReport {
    pub samples: usize,
    pub minimal_dimension: usize,
    pub regular_pairs: usize,
    pub bracketing_pairs: usize,
    /// Pairs that are regular *and* have a positive-dimensional bracket.
    pub witnessing_pairs: usize,
    pub non_integrable: bool,
}

/// Samples covector pairs and tests Butler's condition: both regular and
/// `[n_λ, n_μ]` of positive dimension, generically.
pub fn predicate(algebra: &TwoStepAlgebra, samples: usize, seed: u64) -> Result<ButlerReport> {
    assert!(samples >= 1);
    let mut pairs = Vec::with_capacity(samples);
    let mut minimal = usize::MAX;
    for idx in 0..samples {
        let mut rng = sample::sample_rng(seed, idx as u64);
        let lam = sample::sample_algebra_vector(algebra, &mut rng);
        let mu = sample::sample_algebra_vector(algebra, &mut rng);
        let ann_lam = annihilator(algebra, &lam)?;
        let ann_mu = annihilator(algebra, &mu)?;
        minimal = minimal.min(ann_lam.len()).min(ann_mu.len());
        pairs.push((ann_lam, ann_mu));
    }

    let mut regular_pairs = 0usize;
    let mut bracketing_pairs = 0usize;
    let mut witnessing_pairs = 0usize;
    for (ann_lam, ann_mu) in &pairs {
        let regular = ann_lam.len() == minimal && ann_mu.len() == minimal;
        let bracketing = bracket_dimension(algebra, ann_lam, ann_mu) > 0;
        regular_pairs += regular as usize;
        bracketing_pairs += bracketing as usize;
        witnessing_pairs += (regular && bracketing) as usize;
    }
    let non_integrable = witnessing_pairs as f64 >= GENERIC_FRACTION * samples as f64;
    Ok(ButlerReport {
        samples,
        minimal_dimension: minimal,
        regular_pairs,
        bracketing_pairs,
        witnessing_pairs,
        non_integrable,
    })
}

/// Dimension of the span of brackets between two annihilators. Central
/// basis vectors bracket to zero, so only kernel directions contribute.
/// The cutoff is absolute (scaled by the j-map magnitudes): brackets that
/// are pure rounding noise must count as zero.
pub fn bracket_dimension(
    algebra: &TwoStepAlgebra,
    first: &[AlgebraVector],
    second: &[AlgebraVector],
) -> usize {
    let mut rows = Vec::new();
    for x in first {
        if x.v_part().norm() < 1e-14 {
            continue;
        }
        for y in second {
            if y.v_part().norm() < 1e-14 {
                continue;
            }
            let b = algebra.bracket_v(&x.v_part(), &y.v_part());
            rows.push(b.z_part());
        }
    }
    if rows.is_empty() {
        return 0;
    }
    let mut m = DMatrix::zeros(rows.len(), algebra.dim_z());
    for (r, row) in rows.iter().enumerate() {
        m.row_mut(r).copy_from(&row.transpose());
    }
    let scale = algebra
        .j_mats()
        .iter()
        .map(linalg::max_abs)
        .fold(1.0_f64, f64::max);
    let svd = m.svd(false, false);
    svd.singular_values
        .iter()
        .filter(|&&s| s > linalg::RANK_TOL * scale)
        .count()
}
