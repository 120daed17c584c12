//! Geodesic flow integration and the conservation / independence reports.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::algebra::{AlgebraVector, TwoStepAlgebra};
use crate::error::{Error, Result};
use crate::integrals::FirstIntegral;
use crate::linalg;
use crate::sample;
use crate::state::TangentState;

/// Integration scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Classical fixed-step fourth-order one-step method on the product
    /// coordinates.
    Rk4,
    /// Splitting scheme: the fiber is rotated exactly, only the base point
    /// is stepped numerically.
    ExactFiber,
}

impl Method {
    pub fn parse(token: &str) -> Result<Self> {
        match token {
            "rk4" => Ok(Method::Rk4),
            "exact-fiber" => Ok(Method::ExactFiber),
            other => Err(Error::Config(format!(
                "unknown method '{other}'; expected rk4 or exact-fiber"
            ))),
        }
    }
}

/// A discretized geodesic on `TN`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<TangentState>,
    pub method: Method,
    pub dt: f64,
}

/// The geodesic vector field: base velocity is the left translation of `Y`,
/// fiber velocity is `j(Y_z) Y_v` (purely horizontal).
pub fn geodesic_field(
    algebra: &TwoStepAlgebra,
    state: &TangentState,
) -> Result<(DVector<f64>, AlgebraVector)> {
    state.conforms(algebra)?;
    let dp = algebra.left_translate(&state.point, &state.velocity);
    let rotated = algebra.apply_j(&state.velocity.z_part(), &state.velocity.v_part());
    let dy = AlgebraVector::from_parts(rotated, DVector::zeros(algebra.dim_z()));
    Ok((dp, dy))
}

/// Fiber component of the flow in closed form: the central part of `Y` is
/// constant, the horizontal part rotates by `exp(t j(Y_z))`.
pub fn exact_fiber_solution(
    algebra: &TwoStepAlgebra,
    initial: &AlgebraVector,
    t: f64,
) -> Result<AlgebraVector> {
    algebra.check_vector(initial, "exact_fiber_solution")?;
    let generator = algebra.j_of(&initial.z_part())? * t;
    let rotation = linalg::expm(&generator);
    Ok(AlgebraVector::from_parts(
        &rotation * initial.v_part(),
        initial.z_part(),
    ))
}

fn rk4_step(algebra: &TwoStepAlgebra, state: &TangentState, dt: f64) -> Result<TangentState> {
    let eval = |p: &DVector<f64>, y: &AlgebraVector| -> Result<(DVector<f64>, DVector<f64>)> {
        let s = TangentState::new(p.clone(), y.clone());
        let (dp, dy) = geodesic_field(algebra, &s)?;
        Ok((dp, dy.into_vector()))
    };
    let p0 = &state.point;
    let y0 = state.velocity.as_vector();
    let dv = algebra.dim_v();
    let mk = |v: DVector<f64>| AlgebraVector::from_vector(v, dv);

    let (kp1, ky1) = eval(p0, &state.velocity)?;
    let (kp2, ky2) = eval(&(p0 + &kp1 * (dt / 2.0)), &mk(y0 + &ky1 * (dt / 2.0)))?;
    let (kp3, ky3) = eval(&(p0 + &kp2 * (dt / 2.0)), &mk(y0 + &ky2 * (dt / 2.0)))?;
    let (kp4, ky4) = eval(&(p0 + &kp3 * dt), &mk(y0 + &ky3 * dt))?;

    let p = p0 + (kp1 + kp2 * 2.0 + kp3 * 2.0 + kp4) * (dt / 6.0);
    let y = y0 + (ky1 + ky2 * 2.0 + ky3 * 2.0 + ky4) * (dt / 6.0);
    Ok(TangentState::new(p, mk(y)))
}

/// One splitting step: the fiber rotation is applied exactly while the base
/// equation `dp = dL_p Y(t)` is stepped with the classical stage pattern and
/// the exact stage velocities.
fn exact_fiber_step(
    algebra: &TwoStepAlgebra,
    state: &TangentState,
    half_rotation: &DMatrix<f64>,
    full_rotation: &DMatrix<f64>,
    dt: f64,
) -> Result<TangentState> {
    let zpart = state.velocity.z_part();
    let y0 = state.velocity.clone();
    let y_half = AlgebraVector::from_parts(half_rotation * state.velocity.v_part(), zpart.clone());
    let y_full = AlgebraVector::from_parts(full_rotation * state.velocity.v_part(), zpart);

    let p0 = &state.point;
    let k1 = algebra.left_translate(p0, &y0);
    let k2 = algebra.left_translate(&(p0 + &k1 * (dt / 2.0)), &y_half);
    let k3 = algebra.left_translate(&(p0 + &k2 * (dt / 2.0)), &y_half);
    let k4 = algebra.left_translate(&(p0 + &k3 * dt), &y_full);
    let p = p0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    Ok(TangentState::new(p, y_full))
}

/// Integrates the geodesic through `initial` over `[0, horizon]` with a
/// fixed step. The trajectory has `floor(horizon / dt) + 1` states.
pub fn integrate(
    algebra: &TwoStepAlgebra,
    initial: &TangentState,
    horizon: f64,
    dt: f64,
    method: Method,
) -> Result<Trajectory> {
    initial.conforms(algebra)?;
    if !(dt > 0.0) || !(horizon > 0.0) {
        return Err(Error::InvalidInput(
            "horizon and step must be positive".into(),
        ));
    }
    let steps = (horizon / dt + 1e-9).floor() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(initial.clone());

    let rotations = if method == Method::ExactFiber {
        let generator = algebra.j_of(&initial.velocity.z_part())?;
        let half = linalg::expm(&(&generator * (dt / 2.0)));
        let full = &half * &half;
        Some((half, full))
    } else {
        None
    };

    for step in 0..steps {
        let next = match method {
            Method::Rk4 => rk4_step(algebra, &states[step], dt)?,
            Method::ExactFiber => {
                let (half, full) = rotations.as_ref().expect("precomputed rotations");
                exact_fiber_step(algebra, &states[step], half, full, dt)?
            }
        };
        if next.point.iter().any(|x| !x.is_finite())
            || next.velocity.as_vector().iter().any(|x| !x.is_finite())
        {
            return Err(Error::Numeric(format!(
                "non-finite state at step {}",
                step + 1
            )));
        }
        times.push(dt * (step + 1) as f64);
        states.push(next);
    }
    Ok(Trajectory {
        times,
        states,
        method,
        dt,
    })
}

/// Maximum relative drift `max_t |F(t) - F(0)| / (1 + |F(0)|)` per integral.
pub fn conservation_report(
    algebra: &TwoStepAlgebra,
    trajectory: &Trajectory,
    family: &[FirstIntegral],
) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::with_capacity(family.len());
    for integral in family {
        let initial = integral.eval(algebra, &trajectory.states[0])?;
        let mut drift = 0.0_f64;
        for state in &trajectory.states[1..] {
            let value = integral.eval(algebra, state)?;
            drift = drift.max((value - initial).abs());
        }
        out.push((integral.label().to_string(), drift / (1.0 + initial.abs())));
    }
    Ok(out)
}

/// Result of the gradient-independence check of a family.
#[derive(Clone, Debug)]
pub struct RankReport {
    pub family_size: usize,
    pub samples: usize,
    pub min_rank: usize,
    pub full_rank_fraction: f64,
}

/// Numerical rank of the stacked exact gradients at seeded random states.
pub fn rank_check(
    algebra: &TwoStepAlgebra,
    family: &[FirstIntegral],
    samples: usize,
    seed: u64,
) -> Result<RankReport> {
    if family.is_empty() || samples == 0 {
        return Err(Error::InvalidInput(
            "rank check needs a family and at least one sample".into(),
        ));
    }
    let d = algebra.dim();
    let mut min_rank = usize::MAX;
    let mut full = 0usize;
    for idx in 0..samples {
        let state = sample::sample_state(algebra, seed, idx as u64);
        let mut rows = DMatrix::zeros(family.len(), 2 * d);
        for (r, integral) in family.iter().enumerate() {
            let grad = integral.grad(algebra, &state)?;
            for c in 0..d {
                rows[(r, c)] = grad.base.as_vector()[c];
                rows[(r, d + c)] = grad.fiber.as_vector()[c];
            }
        }
        let rank = linalg::rank_with_tol(&rows, 1e-8);
        min_rank = min_rank.min(rank);
        if rank == family.len() {
            full += 1;
        }
    }
    Ok(RankReport {
        family_size: family.len(),
        samples,
        min_rank,
        full_rank_fraction: full as f64 / samples as f64,
    })
}

/// Writes the trajectory as CSV with 17 significant digits:
/// `t, p_1..p_d, Y_1..Y_d`.
pub fn write_csv<W: Write>(trajectory: &Trajectory, out: &mut W) -> Result<()> {
    let d = trajectory.states[0].point.len();
    let mut header = String::from("t");
    for i in 1..=d {
        header.push_str(&format!(",p_{i}"));
    }
    for i in 1..=d {
        header.push_str(&format!(",Y_{i}"));
    }
    writeln!(out, "{header}")?;
    for (t, state) in trajectory.times.iter().zip(trajectory.states.iter()) {
        let mut line = format!("{t:.16e}");
        for x in state.point.iter() {
            line.push_str(&format!(",{x:.16e}"));
        }
        for x in state.velocity.as_vector().iter() {
            line.push_str(&format!(",{x:.16e}"));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}
