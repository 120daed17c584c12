//! Certification suites: each function samples seeded random data, folds the
//! residuals of one structural statement into a [`CheckReport`], and is used
//! both by the command-line harness and by the acceptance tests.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::algebra::TwoStepAlgebra;
use crate::butler;
use crate::error::Result;
use crate::flow::{self, Method};
use crate::heisenberg::{self, HeisenbergGroup};
use crate::integrals::{self, FirstIntegral};
use crate::lattice::{self, Lattice};
use crate::linalg;
use crate::pmetric::{self, PMetric};
use crate::report::CheckReport;
use crate::sample;
use crate::state::{TangentPair, TangentState};
use crate::symplectic;

/// Antisymmetry and bilinearity of the symplectic form, and agreement of the
/// two Poisson-bracket evaluation routes, at seeded random states.
pub fn symplectic_consistency(
    algebra: &TwoStepAlgebra,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("symplectic-consistency", tol);
    report.samples = samples;
    for idx in 0..samples {
        let state = sample::sample_state(algebra, seed, idx as u64);
        let mut rng = sample::sample_rng(seed.wrapping_add(1), idx as u64);
        let xi = sample::sample_pair(algebra, &mut rng);
        let eta = sample::sample_pair(algebra, &mut rng);
        let zeta = sample::sample_pair(algebra, &mut rng);
        let a = rng.random_range(-2.0..2.0);
        let b = rng.random_range(-2.0..2.0);

        let antisym = symplectic::omega(algebra, &state, &xi, &eta)?
            + symplectic::omega(algebra, &state, &eta, &xi)?;
        report.record(idx as u64, "antisymmetry", antisym, &state);

        let combo = xi.scale(a).add(&eta.scale(b));
        let bilin = symplectic::omega(algebra, &state, &combo, &zeta)?
            - a * symplectic::omega(algebra, &state, &xi, &zeta)?
            - b * symplectic::omega(algebra, &state, &eta, &zeta)?;
        report.record(idx as u64, "bilinearity", bilin, &state);

        let direct = symplectic::poisson(algebra, &state, &xi, &eta)?;
        let xf = symplectic::grad_to_hamiltonian(algebra, &state.velocity, &xi)?;
        let xg = symplectic::grad_to_hamiltonian(algebra, &state.velocity, &eta)?;
        let via_omega = symplectic::omega(algebra, &state, &xf, &xg)?;
        report.record(idx as u64, "poisson-vs-omega", direct - via_omega, &state);

        let j_form = symplectic::poisson_j_form(algebra, &state, &xi, &eta)?;
        report.record(idx as u64, "poisson-vs-j-form", direct - j_form, &state);
    }
    Ok(report)
}

/// First-integral residuals of every family member at seeded random states.
pub fn integral_certification(
    algebra: &TwoStepAlgebra,
    family: &[FirstIntegral],
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("integral-certification", tol);
    report.samples = samples;
    for idx in 0..samples {
        let state = sample::sample_state(algebra, seed, idx as u64);
        for integral in family {
            let residual = integral.residual_at(algebra, &state)?;
            report.record(idx as u64, integral.label(), residual, &state);
        }
    }
    Ok(report)
}

/// The base-coordinate probe `<W_v, X_1>` must fail the residual test on at
/// least `required_fraction` of the sampled states with margin
/// `rejection_level`.
pub fn position_probe_failure(
    algebra: &TwoStepAlgebra,
    samples: usize,
    seed: u64,
    rejection_level: f64,
    required_fraction: f64,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("position-probe-rejection", rejection_level);
    report.samples = samples;
    // exact gradient of <W_v, X_1> is (X_1, 0)
    let grad = TangentPair::new(algebra.basis_v(0), algebra.zero_vector());
    let mut rejected = 0usize;
    for idx in 0..samples {
        let state = sample::sample_state(algebra, seed, idx as u64);
        let residual = symplectic::first_integral_residual(algebra, &state, &grad)?;
        if residual.abs() >= rejection_level {
            rejected += 1;
        }
        report.max_abs_residual = report.max_abs_residual.max(residual.abs());
    }
    let fraction = rejected as f64 / samples as f64;
    report.details = Some(serde_json::json!({
        "rejected_fraction": fraction,
        "required_fraction": required_fraction,
    }));
    if fraction < required_fraction {
        report.fail(format!(
            "probe rejected at only {fraction} of states, needed {required_fraction}"
        ));
    }
    Ok(report)
}

/// Maximum pairwise Poisson bracket within a family, using exact gradients.
pub fn involution(
    algebra: &TwoStepAlgebra,
    family: &[FirstIntegral],
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("involution", tol);
    report.samples = samples;
    for idx in 0..samples {
        let state = sample::sample_state(algebra, seed, idx as u64);
        let grads: Vec<TangentPair> = family
            .iter()
            .map(|f| f.grad(algebra, &state))
            .collect::<Result<_>>()?;
        for i in 0..family.len() {
            for j in (i + 1)..family.len() {
                let bracket = symplectic::poisson(algebra, &state, &grads[i], &grads[j])?;
                report.record(
                    idx as u64,
                    format!("{{{}, {}}}", family[i].label(), family[j].label()),
                    bracket,
                    &state,
                );
            }
        }
    }
    Ok(report)
}

/// Gradient-independence report wrapped as a check: the family must reach
/// full rank on at least `required_fraction` of the samples.
pub fn rank(
    algebra: &TwoStepAlgebra,
    family: &[FirstIntegral],
    samples: usize,
    seed: u64,
    required_fraction: f64,
) -> Result<CheckReport> {
    let rank_report = flow::rank_check(algebra, family, samples, seed)?;
    let mut report = CheckReport::new("rank", 0.0);
    report.samples = samples;
    report.details = Some(serde_json::json!({
        "family_size": rank_report.family_size,
        "min_rank": rank_report.min_rank,
        "full_rank_fraction": rank_report.full_rank_fraction,
        "required_fraction": required_fraction,
    }));
    if rank_report.full_rank_fraction < required_fraction {
        report.fail(format!(
            "full rank at {} of samples, needed {}",
            rank_report.full_rank_fraction, required_fraction
        ));
    }
    Ok(report)
}

/// Generates `count` symmetric maps on `v` (half raw, half projected onto
/// the commutant of `J` so that both directions of the criterion occur) and
/// checks that the sampled residual test for `g_A` matches the commutator
/// criterion exactly, and likewise for Poisson brackets of certified pairs.
pub fn quadratic_classification(
    n: usize,
    count: usize,
    states_per_case: usize,
    seed: u64,
    tol: f64,
    rejection_level: f64,
) -> Result<CheckReport> {
    let algebra = heisenberg::canonical_algebra(n);
    let j = algebra.j_mats()[0].clone();
    let dv = algebra.dim_v();
    let mut report = CheckReport::new("quadratic-classification", tol);
    report.samples = count;

    let mut candidates = Vec::with_capacity(count);
    for c in 0..count {
        let mut rng = sample::sample_rng(seed, c as u64);
        let raw = DMatrix::from_fn(dv, dv, |_, _| rng.random_range(-1.0..1.0));
        let sym = (&raw + raw.transpose()) * 0.5;
        if c % 2 == 0 {
            candidates.push(sym);
        } else {
            // (A - J A J) / 2 is symmetric and commutes with J
            candidates.push((&sym - &j * &sym * &j) * 0.5);
        }
    }

    let max_residual = |a_mat: &DMatrix<f64>| -> Result<f64> {
        let g = FirstIntegral::quadratic_on_v(&algebra, a_mat.clone())?;
        let mut worst = 0.0_f64;
        for idx in 0..states_per_case {
            let state = sample::sample_state(&algebra, seed ^ 0x5eed, idx as u64);
            worst = worst.max(g.residual_at(&algebra, &state)?.abs());
        }
        Ok(worst)
    };

    let mut misclassified = 0usize;
    for (c, a_mat) in candidates.iter().enumerate() {
        let predicted = integrals::quadratic_is_integral(&algebra, a_mat)?;
        let observed = max_residual(a_mat)?;
        let ok = if predicted {
            observed <= tol
        } else {
            observed >= rejection_level
        };
        if !ok {
            misclassified += 1;
            report.fail(format!(
                "candidate {c}: criterion says {predicted}, residual {observed}"
            ));
        }
    }

    // Pair direction on the certified candidates, plus constructed
    // commuting pairs (powers commute with each other and with J).
    let certified: Vec<&DMatrix<f64>> = candidates
        .iter()
        .filter(|a| integrals::quadratic_is_integral(&algebra, a).unwrap_or(false))
        .collect();
    let mut pair_cases: Vec<(DMatrix<f64>, DMatrix<f64>)> = Vec::new();
    for w in certified.windows(2) {
        pair_cases.push((w[0].clone(), w[1].clone()));
    }
    for a_mat in certified.iter().take(8) {
        pair_cases.push(((*a_mat).clone(), *a_mat * *a_mat));
    }
    let bracket_worst = |a_mat: &DMatrix<f64>, b_mat: &DMatrix<f64>| -> Result<f64> {
        let ga = FirstIntegral::quadratic_on_v(&algebra, a_mat.clone())?;
        let gb = FirstIntegral::quadratic_on_v(&algebra, b_mat.clone())?;
        let mut worst = 0.0_f64;
        for idx in 0..states_per_case {
            let state = sample::sample_state(&algebra, seed ^ 0xb0a7, idx as u64);
            let bracket = symplectic::poisson(
                &algebra,
                &state,
                &ga.grad(&algebra, &state)?,
                &gb.grad(&algebra, &state)?,
            )?;
            worst = worst.max(bracket.abs());
        }
        Ok(worst)
    };
    for (c, (a_mat, b_mat)) in pair_cases.iter().enumerate() {
        let predicted = integrals::quadratic_pair_commutes(&algebra, a_mat, b_mat)?;
        // H_n is non-singular, so the criterion reduces to [A, B] = 0.
        let commutator = linalg::commutator_norm(a_mat, b_mat);
        if predicted != (commutator <= tol) {
            misclassified += 1;
            report.fail(format!(
                "pair {c}: j-criterion and commutator disagree ({commutator})"
            ));
        }
        let observed = bracket_worst(a_mat, b_mat)?;
        let ok = if predicted {
            observed <= tol
        } else {
            observed >= rejection_level
        };
        if !ok {
            misclassified += 1;
            report.fail(format!(
                "pair {c}: criterion says {predicted}, bracket {observed}"
            ));
        }
    }
    report.details = Some(serde_json::json!({
        "candidates": count,
        "certified": certified.len(),
        "pairs": pair_cases.len(),
        "misclassified": misclassified,
    }));
    Ok(report)
}

/// The Poisson table of the translation and rotation integrals, as separate
/// reports: translation pairs produce the central integral, rotation pairs
/// close onto the rotation of the commutator, the central integral commutes
/// with everything, and rotations act on translations by rotating the fiber.
pub fn poisson_table(n: usize, samples: usize, seed: u64) -> Result<Vec<CheckReport>> {
    let algebra = heisenberg::canonical_algebra(n);
    let f_z1 = FirstIntegral::central_basis(&algebra);
    let translations: Vec<FirstIntegral> = (1..=2 * n)
        .map(|k| FirstIntegral::killing_translation(&algebra, k))
        .collect::<Result<_>>()?;
    let iso_basis = heisenberg::isometry_isotropy_basis(n);
    let rotations: Vec<FirstIntegral> = iso_basis
        .iter()
        .map(|t| FirstIntegral::killing_rotation(&algebra, t.clone()))
        .collect::<Result<_>>()?;

    let mut translations_report = CheckReport::new("poisson-table/translation-pairs", 1e-10);
    let mut rotations_report = CheckReport::new("poisson-table/rotation-pairs", 1e-10);
    let mut central_report = CheckReport::new("poisson-table/central", 1e-12);
    let mut mixed_report = CheckReport::new("poisson-table/rotation-translation", 1e-10);
    translations_report.samples = samples;
    rotations_report.samples = samples;
    central_report.samples = samples;
    mixed_report.samples = samples;

    // Commutator integrals F_[Ta,Tb] are fixed, compute them once.
    let mut rotation_pairs = Vec::new();
    for a in 0..iso_basis.len() {
        for b in (a + 1)..iso_basis.len() {
            let commutator = &iso_basis[a] * &iso_basis[b] - &iso_basis[b] * &iso_basis[a];
            rotation_pairs.push((a, b, FirstIntegral::killing_rotation(&algebra, commutator)?));
        }
    }

    for idx in 0..samples {
        let state = sample::sample_state(&algebra, seed, idx as u64);
        let grad_z = f_z1.grad(&algebra, &state)?;
        let grads_t: Vec<TangentPair> = translations
            .iter()
            .map(|f| f.grad(&algebra, &state))
            .collect::<Result<_>>()?;
        let grads_r: Vec<TangentPair> = rotations
            .iter()
            .map(|f| f.grad(&algebra, &state))
            .collect::<Result<_>>()?;

        let f_z1_value = f_z1.eval(&algebra, &state)?;
        for i in 1..=n {
            let bracket =
                symplectic::poisson(&algebra, &state, &grads_t[2 * i - 2], &grads_t[2 * i - 1])?;
            translations_report.record(
                idx as u64,
                format!("{{F_{}, F_{}}} - f_Z1", 2 * i - 1, 2 * i),
                bracket - f_z1_value,
                &state,
            );
        }

        for (a, b, expected) in &rotation_pairs {
            let bracket = symplectic::poisson(&algebra, &state, &grads_r[*a], &grads_r[*b])?;
            let target = expected.eval(&algebra, &state)?;
            rotations_report.record(
                idx as u64,
                format!("{{F_T{a}, F_T{b}}} - F_[T,T]"),
                bracket - target,
                &state,
            );
        }

        for (k, grad_t) in grads_t.iter().enumerate() {
            let bracket = symplectic::poisson(&algebra, &state, &grad_z, grad_t)?;
            central_report.record(
                idx as u64,
                format!("{{f_Z1, F_{}}}", k + 1),
                bracket,
                &state,
            );
        }
        for (a, grad_r) in grads_r.iter().enumerate() {
            let bracket = symplectic::poisson(&algebra, &state, &grad_z, grad_r)?;
            central_report.record(idx as u64, format!("{{f_Z1, F_T{a}}}"), bracket, &state);
        }

        // {F_T, F_k} pairs with the rotated translation direction: it is the
        // translation integral of T X_k, matching the bracket of the
        // underlying Killing fields.
        for (a, rotation) in iso_basis.iter().enumerate() {
            for (k, grad_t) in grads_t.iter().enumerate() {
                let bracket = symplectic::poisson(&algebra, &state, &grads_r[a], grad_t)?;
                let mut direction = algebra.zero_vector().into_vector();
                direction
                    .rows_mut(0, 2 * n)
                    .copy_from(&rotation.column(k).into_owned());
                let rotated_translation = FirstIntegral::killing_vector(
                    &algebra,
                    crate::algebra::AlgebraVector::from_vector(direction, 2 * n),
                )?;
                let target = rotated_translation.eval(&algebra, &state)?;
                mixed_report.record(
                    idx as u64,
                    format!("{{F_T{a}, F_{}}}", k + 1),
                    bracket - target,
                    &state,
                );
            }
        }
    }
    Ok(vec![
        translations_report,
        rotations_report,
        central_report,
        mixed_report,
    ])
}

/// Injectivity certificate for the Killing-field-to-integral morphism: the
/// matrix of values and exact-gradient components of the isotropy rotations,
/// translations and the central integral at a fixed probe set has full row
/// rank, so no nonzero combination vanishes identically.
pub fn isomorphism_injectivity(n: usize, probes: usize, seed: u64) -> Result<CheckReport> {
    let algebra = heisenberg::canonical_algebra(n);
    let mut family: Vec<FirstIntegral> = heisenberg::isometry_isotropy_basis(n)
        .into_iter()
        .map(|t| FirstIntegral::killing_rotation(&algebra, t))
        .collect::<Result<_>>()?;
    for k in 1..=2 * n {
        family.push(FirstIntegral::killing_translation(&algebra, k)?);
    }
    family.push(FirstIntegral::central_basis(&algebra));
    let expected = family.len();

    let d = algebra.dim();
    let width = 1 + 2 * d;
    let mut matrix = DMatrix::zeros(expected, probes * width);
    for c in 0..probes {
        let state = sample::sample_state(&algebra, seed, c as u64);
        for (r, integral) in family.iter().enumerate() {
            matrix[(r, c * width)] = integral.eval(&algebra, &state)?;
            let grad = integral.grad(&algebra, &state)?;
            for i in 0..d {
                matrix[(r, c * width + 1 + i)] = grad.base.as_vector()[i];
                matrix[(r, c * width + 1 + d + i)] = grad.fiber.as_vector()[i];
            }
        }
    }
    let rank = linalg::rank_with_tol(&matrix, 1e-8);
    let mut report = CheckReport::new("isomorphism-injectivity", 0.0);
    report.samples = probes;
    report.details = Some(serde_json::json!({
        "rank": rank,
        "expected": expected,
        "isotropy_dimension": n * n,
    }));
    if rank != expected {
        report.fail(format!(
            "evaluation matrix rank {rank}, expected {expected}"
        ));
    }
    Ok(report)
}

/// Draws a symmetric positive operator commuting with `J` (so its
/// eigenspaces are closed under the complex structure).
pub fn random_commuting_positive(n: usize, seed: u64, index: u64) -> DMatrix<f64> {
    let dv = 2 * n;
    let mut rng = sample::sample_rng(seed, index);
    let raw = DMatrix::from_fn(dv, dv, |_, _| rng.random_range(-1.0..1.0));
    let sym = (&raw + raw.transpose()) * 0.5;
    let j = heisenberg::canonical_j(n);
    let commuting = (&sym - &j * &sym * &j) * 0.5;
    let shift = linalg::max_abs(&commuting) * (dv as f64) + 0.5;
    commuting + DMatrix::identity(dv, dv) * shift
}

/// Reports for one P-metric model: skewness of the twisted map, the
/// gradient relation between the two metrics, involution of both families,
/// and the bracket normalization of the paired translations.
pub fn pmetric_checks(metric: &PMetric, samples: usize, seed: u64) -> Result<Vec<CheckReport>> {
    let algebra = metric.algebra();
    let standard = heisenberg::canonical_algebra(metric.rank());

    let mut skew = CheckReport::new("pmetric/skewness", 1e-12);
    skew.samples = samples.min(64);
    for idx in 0..skew.samples {
        let mut rng = sample::sample_rng(seed ^ 0x51, idx as u64);
        let x = sample::sample_algebra_vector(algebra, &mut rng);
        let y = sample::sample_algebra_vector(algebra, &mut rng);
        let jx = algebra.vector_from({
            let mut v = DVector::zeros(algebra.dim());
            v.rows_mut(0, algebra.dim_v())
                .copy_from(&(metric.j_p() * x.v_part()));
            v
        })?;
        let jy = algebra.vector_from({
            let mut v = DVector::zeros(algebra.dim());
            v.rows_mut(0, algebra.dim_v())
                .copy_from(&(metric.j_p() * y.v_part()));
            v
        })?;
        let residual = algebra.inner(&jx, &y) + algebra.inner(&x, &jy);
        let state = TangentState::at_identity(algebra, x.clone());
        skew.record(idx as u64, "skewness", residual, &state);
    }

    let mut grad_rel = CheckReport::new("pmetric/gradient-relation", 1e-7);
    grad_rel.samples = samples.min(16);
    type ProbeFn = Box<dyn Fn(&TangentState) -> f64>;
    let probe_functions: Vec<ProbeFn> = vec![
        {
            let alg = algebra.clone();
            Box::new(move |s: &TangentState| 0.5 * alg.inner(&s.velocity, &s.velocity))
        },
        {
            let f = metric.translation_integral(1);
            let alg = algebra.clone();
            Box::new(move |s: &TangentState| f.eval(&alg, s).expect("conforming state"))
        },
    ];
    for idx in 0..grad_rel.samples {
        let state = sample::sample_state(&standard, seed ^ 0x52, idx as u64);
        for (fi, f) in probe_functions.iter().enumerate() {
            let grad_std = symplectic::numeric_gradient(&standard, f, &state, 1e-5)?;
            let grad_p = symplectic::numeric_gradient(algebra, f, &state, 1e-5)?;
            // grad_std = (full metric) * grad_p, blockwise
            let g = algebra.metric();
            let unwound_base = g * grad_p.base.as_vector();
            let unwound_fiber = g * grad_p.fiber.as_vector();
            let residual = (unwound_base - grad_std.base.as_vector()).norm()
                + (unwound_fiber - grad_std.fiber.as_vector()).norm();
            grad_rel.record(idx as u64, format!("probe-{fi}"), residual, &state);
        }
    }

    let (odd, even) = metric.families();
    let mut families = CheckReport::new("pmetric/family-involution", 1e-9);
    families.samples = samples;
    for idx in 0..samples {
        let state = sample::sample_state(algebra, seed ^ 0x53, idx as u64);
        for family in [&odd, &even] {
            let grads: Vec<TangentPair> = family
                .iter()
                .map(|f| f.grad(algebra, &state))
                .collect::<Result<_>>()?;
            for i in 0..family.len() {
                for j in (i + 1)..family.len() {
                    let bracket = symplectic::poisson(algebra, &state, &grads[i], &grads[j])?;
                    families.record(
                        idx as u64,
                        format!("{{{}, {}}}", family[i].label(), family[j].label()),
                        bracket,
                        &state,
                    );
                }
            }
        }
    }

    // {F~_{2i-1}, F~_{2j}} = delta_ij <Y, Z_1>_P: the central linear
    // integral of the ambient metric.
    let mut pairing = CheckReport::new("pmetric/pairing-bracket", 1e-9);
    pairing.samples = samples;
    let f_central = metric.central_integral();
    let odd_translations: Vec<FirstIntegral> = (1..=metric.rank())
        .map(|i| metric.translation_integral(2 * i - 1))
        .collect();
    let even_translations: Vec<FirstIntegral> = (1..=metric.rank())
        .map(|j| metric.translation_integral(2 * j))
        .collect();
    for idx in 0..samples {
        let state = sample::sample_state(algebra, seed ^ 0x54, idx as u64);
        let central_value = f_central.eval(algebra, &state)?;
        for (i, fo) in odd_translations.iter().enumerate() {
            for (j, fe) in even_translations.iter().enumerate() {
                let bracket = symplectic::poisson(
                    algebra,
                    &state,
                    &fo.grad(algebra, &state)?,
                    &fe.grad(algebra, &state)?,
                )?;
                let expected = if i == j { central_value } else { 0.0 };
                pairing.record(
                    idx as u64,
                    format!("{{F_{}~, F_{}~}}", 2 * i + 1, 2 * j + 2),
                    bracket - expected,
                    &state,
                );
            }
        }
    }

    Ok(vec![skew, grad_rel, families, pairing])
}

/// Convenience driver for the P-metric acceptance sweep.
pub fn pmetric_sweep(
    n: usize,
    operator_count: usize,
    lambdas: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<CheckReport>> {
    let mut merged: Vec<CheckReport> = Vec::new();
    for c in 0..operator_count {
        let p_tilde = random_commuting_positive(n, seed, c as u64);
        for (li, &lambda) in lambdas.iter().enumerate() {
            let metric = pmetric::build_p_metric(n, p_tilde.clone(), lambda)?;
            let reports = pmetric_checks(&metric, samples, seed ^ ((c as u64) << 8 | li as u64))?;
            if merged.is_empty() {
                merged = reports;
            } else {
                for (acc, r) in merged.iter_mut().zip(reports) {
                    acc.samples += r.samples;
                    acc.max_abs_residual = acc.max_abs_residual.max(r.max_abs_residual);
                    acc.passed &= r.passed;
                    acc.failures.extend(r.failures);
                }
            }
        }
    }
    Ok(merged)
}

/// Lattice-quotient suite: invariance of the smoothed integrals under the
/// lattice action, the integer-multiple property of the translation shifts,
/// and conservation of the smoothed integrals along trajectories.
pub fn quotient_checks(
    lattice: &Lattice,
    elements: usize,
    states: usize,
    seed: u64,
) -> Result<Vec<CheckReport>> {
    let n = lattice.rank();
    let group = HeisenbergGroup::new(n);
    let algebra = group.algebra();
    let smoothed: Vec<FirstIntegral> = (1..=2 * n)
        .map(|k| FirstIntegral::smoothed_killing(algebra, k))
        .collect::<Result<_>>()?;

    let mut invariance = CheckReport::new("quotient/invariance", 1e-9);
    invariance.samples = elements * states;
    let mut shifts = CheckReport::new("quotient/integer-shift", 1e-9);
    shifts.samples = elements * states;

    let mut rng = sample::sample_rng(seed, u64::MAX);
    let lattice_elements: Vec<DVector<f64>> = (0..elements)
        .map(|_| lattice.sample_element(&mut rng))
        .collect();

    for idx in 0..states {
        let state = sample::sample_state_min_fiber_z(algebra, seed, idx as u64, 0.1);
        let central = state.velocity.z_part()[0];
        let base_values: Vec<f64> = smoothed
            .iter()
            .map(|f| f.eval(algebra, &state))
            .collect::<Result<_>>()?;
        let translations: Vec<FirstIntegral> = (1..=2 * n)
            .map(|k| FirstIntegral::killing_translation(algebra, k))
            .collect::<Result<_>>()?;
        let translation_values: Vec<f64> = translations
            .iter()
            .map(|f| f.eval(algebra, &state))
            .collect::<Result<_>>()?;
        for (e, q) in lattice_elements.iter().enumerate() {
            let moved = lattice::act(&group, lattice, q, &state)?;
            let tag = (idx * elements + e) as u64;
            for (k, f) in smoothed.iter().enumerate() {
                let delta = f.eval(algebra, &moved)? - base_values[k];
                invariance.record(tag, format!("Fbar_{}", k + 1), delta, &state);
            }
            for (k, f) in translations.iter().enumerate() {
                let delta = f.eval(algebra, &moved)? - translation_values[k];
                let multiple = (delta / central).round();
                shifts.record(
                    tag,
                    format!("F_{} shift", k + 1),
                    delta - multiple * central,
                    &state,
                );
            }
        }
    }

    let mut drift = CheckReport::new("quotient/drift", 1e-6);
    let trajectories = 3usize;
    drift.samples = trajectories;
    for t in 0..trajectories {
        let initial = sample::sample_state_min_fiber_z(algebra, seed ^ 0x77, t as u64, 0.1);
        let trajectory = flow::integrate(algebra, &initial, 10.0, 1e-3, Method::Rk4)?;
        for (label, value) in flow::conservation_report(algebra, &trajectory, &smoothed)? {
            drift.record(t as u64, label, value, &initial);
        }
    }

    Ok(vec![invariance, shifts, drift])
}

/// Butler-predicate report plus a consistency certificate: each computed
/// annihilator basis vector must actually annihilate the covector's pairing
/// with all brackets.
pub fn butler_check(algebra: &TwoStepAlgebra, samples: usize, seed: u64) -> Result<CheckReport> {
    let predicate = butler::predicate(algebra, samples, seed)?;
    let mut report = CheckReport::new("butler", 1e-9);
    report.samples = samples;
    for idx in 0..samples.min(32) {
        let mut rng = sample::sample_rng(seed ^ 0xab, idx as u64);
        let covector = sample::sample_algebra_vector(algebra, &mut rng);
        let basis = butler::annihilator(algebra, &covector)?;
        let state = TangentState::at_identity(algebra, covector.clone());
        for member in &basis {
            // <Z, [X, W]> = 0 for every W exactly when X annihilates.
            let mut worst = 0.0_f64;
            for w in 0..algebra.dim_v() {
                let bracket = algebra.bracket(member, &algebra.basis_v(w))?;
                let embedded = crate::algebra::AlgebraVector::from_parts(
                    DVector::zeros(algebra.dim_v()),
                    covector.z_part(),
                );
                worst = worst.max(algebra.inner(&embedded, &bracket).abs());
            }
            report.record(idx as u64, "annihilator-consistency", worst, &state);
        }
    }
    report.details = Some(serde_json::json!({
        "non_integrable": predicate.non_integrable,
        "minimal_dimension": predicate.minimal_dimension,
        "regular_pairs": predicate.regular_pairs,
        "bracketing_pairs": predicate.bracketing_pairs,
        "witnessing_pairs": predicate.witnessing_pairs,
    }));
    Ok(report)
}

/// Final-time fiber error of the numerical method against the closed-form
/// fiber solution.
pub fn fiber_error(
    algebra: &TwoStepAlgebra,
    initial: &TangentState,
    horizon: f64,
    dt: f64,
    method: Method,
) -> Result<f64> {
    let trajectory = flow::integrate(algebra, initial, horizon, dt, method)?;
    let exact = flow::exact_fiber_solution(algebra, &initial.velocity, horizon)?;
    let last = &trajectory
        .states
        .last()
        .expect("nonempty trajectory")
        .velocity;
    Ok(last.sub(&exact).norm())
}

/// Least-squares slope of `log(error)` against `log(dt)`.
pub fn observed_order(
    algebra: &TwoStepAlgebra,
    initial: &TangentState,
    horizon: f64,
    steps: &[f64],
) -> Result<f64> {
    let mut xs = Vec::with_capacity(steps.len());
    let mut ys = Vec::with_capacity(steps.len());
    for &dt in steps {
        let err = fiber_error(algebra, initial, horizon, dt, Method::Rk4)?;
        xs.push(dt.ln());
        ys.push(err.max(1e-300).ln());
    }
    let nf = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(cov / var)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consistency_suite_passes_on_h1() {
        let a = heisenberg::canonical_algebra(1);
        let report = symplectic_consistency(&a, 64, 7, 1e-12).unwrap();
        assert!(report.passed, "max residual {}", report.max_abs_residual);
    }

    #[test]
    fn families_certify_on_h1() {
        let a = heisenberg::canonical_algebra(1);
        let fams = heisenberg::canonical_families(1);
        for family in [&fams.isotropy, &fams.odd, &fams.even] {
            let report = integral_certification(&a, family, 128, 3, 1e-10).unwrap();
            assert!(report.passed, "max residual {}", report.max_abs_residual);
        }
    }

    #[test]
    fn probe_rejection_works() {
        let a = heisenberg::canonical_algebra(1);
        let report = position_probe_failure(&a, 256, 5, 1e-2, 0.9).unwrap();
        assert!(report.passed);
    }

    #[test]
    fn poisson_table_holds_on_h1() {
        for report in poisson_table(1, 64, 9).unwrap() {
            assert!(
                report.passed,
                "{}: max residual {}",
                report.check, report.max_abs_residual
            );
        }
    }

    #[test]
    fn injectivity_certificate_on_h1() {
        let report = isomorphism_injectivity(1, 16, 11).unwrap();
        assert!(report.passed, "{:?}", report.details);
    }

    #[test]
    fn butler_report_carries_the_predicate() {
        let a = heisenberg::canonical_algebra(1);
        let report = butler_check(&a, 32, 13).unwrap();
        assert!(report.passed);
        let details = report.details.unwrap();
        assert_eq!(details["non_integrable"], serde_json::json!(false));
    }

    #[test]
    fn observed_order_is_near_four() {
        let a = heisenberg::canonical_algebra(1);
        let initial =
            TangentState::at_identity(&a, a.basis_v(0).scale(2.0).add(&a.basis_z(0).scale(2.0)));
        let order = observed_order(&a, &initial, 1.0, &[1e-2, 5e-3, 2.5e-3]).unwrap();
        assert!(order > 3.9, "observed order {order}");
    }
}
