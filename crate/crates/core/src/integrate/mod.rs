//! Time stepping for the pendulum fields, optionally with the 2×2
//! variational matrix M' = J(t) M, M(0) = I.

mod dopri;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    averaged_jacobian_entry, averaged_rates, jacobian_original, original_rates, Field, Forcing, Params,
    ReferenceTrajectory, State,
};
use crate::error::{Error, Result};

/// The original system is stepped with h ≤ ε / FAST_STEPS_PER_EPSILON.
pub const FAST_STEPS_PER_EPSILON: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub initial_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self::refine()
    }
}

impl IntegratorConfig {
    /// Tolerances for orbit refinement (1e-10).
    pub fn refine() -> Self {
        IntegratorConfig { rel_tol: 1e-10, abs_tol: 1e-10, max_step: 0.25, initial_step: 1e-2, max_steps: 2_000_000 }
    }

    /// Tolerances for grid scans (1e-8).
    pub fn scan() -> Self {
        Self::refine().with_tol(1e-8)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self.abs_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !(positive(self.rel_tol) && positive(self.abs_tol)) {
            return Err(Error::InvalidArgument("integrator tolerances must be > 0".into()));
        }
        if !positive(self.max_step) || !positive(self.initial_step) {
            return Err(Error::InvalidArgument("integrator step sizes must be > 0".into()));
        }
        if self.max_steps < 1 {
            return Err(Error::InvalidArgument("max_steps must be >= 1".into()));
        }
        Ok(())
    }

    /// Largest step allowed for `field`: the fast period is resolved by
    /// capping the step at ε/20 for the original system.
    pub fn effective_max_step(&self, field: Field, params: &Params) -> f64 {
        match field {
            Field::Averaged => self.max_step,
            Field::Original => self.max_step.min(params.epsilon / FAST_STEPS_PER_EPSILON),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    pub final_state: State,
    /// ∂state(T)/∂state(0), when requested.
    pub variational: Option<Matrix2<f64>>,
    pub steps_taken: usize,
    /// (t, φ, p) at the requested sample times.
    pub dense_samples: Option<Vec<(f64, f64, f64)>>,
}

fn check_inputs(s0: &State, duration: f64, field: Field, params: &Params, f: &Forcing) -> Result<()> {
    if !s0.is_finite() {
        return Err(Error::InvalidArgument("initial state must be finite".into()));
    }
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(Error::InvalidArgument(format!("duration must be finite and >= 0, got {duration}")));
    }
    params.validate()?;
    f.check_params(params)?;
    if field == Field::Original && params.commensurate_k().is_none() {
        return Err(Error::InvalidArgument(format!(
            "original system needs 1/epsilon to be a positive integer, got epsilon = {}",
            params.epsilon
        )));
    }
    Ok(())
}

#[inline]
fn rates(field: Field, t: f64, phi: f64, p: f64, params: &Params, f: &Forcing) -> [f64; 2] {
    match field {
        Field::Averaged => averaged_rates(t, phi, p, params, f),
        Field::Original => original_rates(t, phi, p, params, f),
    }
}

#[inline]
fn augmented_rates(field: Field, t: f64, y: &[f64; 6], params: &Params, f: &Forcing) -> [f64; 6] {
    let [dphi, dp] = rates(field, t, y[0], y[1], params, f);
    let j = match field {
        Field::Averaged => Matrix2::new(0.0, 1.0, averaged_jacobian_entry(t, y[0], params, f), -params.mu),
        Field::Original => jacobian_original(&State::new(y[0], y[1], t), params, f),
    };
    let m = Matrix2::new(y[2], y[3], y[4], y[5]);
    let dm = j * m;
    [dphi, dp, dm[(0, 0)], dm[(0, 1)], dm[(1, 0)], dm[(1, 1)]]
}

/// Adaptive Dormand–Prince integration over `duration` starting at `s0.t`.
///
/// `sample_times` are absolute times inside `[s0.t, s0.t + duration]`,
/// sorted ascending; the integrator lands exactly on each of them.
#[allow(clippy::too_many_arguments)]
pub fn flow(
    s0: &State,
    duration: f64,
    field: Field,
    params: &Params,
    f: &Forcing,
    cfg: &IntegratorConfig,
    want_variational: bool,
    sample_times: Option<&[f64]>,
) -> Result<FlowResult> {
    check_inputs(s0, duration, field, params, f)?;
    cfg.validate()?;
    let stops = sample_times.unwrap_or(&[]);
    if stops.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("sample times must be sorted".into()));
    }
    let max_step = cfg.effective_max_step(field, params);
    let t_end = s0.t + duration;
    let mut samples = Vec::with_capacity(stops.len());

    if want_variational {
        let y0 = [s0.phi, s0.p, 1.0, 0.0, 0.0, 1.0];
        let (y, steps) = dopri::integrate(
            |t, y: &[f64; 6]| augmented_rates(field, t, y, params, f),
            s0.t,
            y0,
            t_end,
            cfg,
            max_step,
            stops,
            |t, y| samples.push((t, y[0], y[1])),
        )?;
        Ok(FlowResult {
            final_state: State::new(y[0], y[1], t_end),
            variational: Some(Matrix2::new(y[2], y[3], y[4], y[5])),
            steps_taken: steps,
            dense_samples: sample_times.map(|_| samples),
        })
    } else {
        let (y, steps) = dopri::integrate(
            |t, y: &[f64; 2]| rates(field, t, y[0], y[1], params, f),
            s0.t,
            [s0.phi, s0.p],
            t_end,
            cfg,
            max_step,
            stops,
            |t, y| samples.push((t, y[0], y[1])),
        )?;
        Ok(FlowResult {
            final_state: State::new(y[0], y[1], t_end),
            variational: None,
            steps_taken: steps,
            dense_samples: sample_times.map(|_| samples),
        })
    }
}

fn check_fixed(duration: f64, n_steps: usize, field: Field, params: &Params) -> Result<()> {
    if n_steps < 1 {
        return Err(Error::InvalidArgument("n_steps must be >= 1".into()));
    }
    if field == Field::Original && (n_steps as f64) < FAST_STEPS_PER_EPSILON * duration / params.epsilon {
        return Err(Error::InvalidArgument(format!(
            "original system needs n_steps >= 20 T / epsilon = {}",
            (FAST_STEPS_PER_EPSILON * duration / params.epsilon).ceil()
        )));
    }
    Ok(())
}

/// Classical RK4 with `n_steps` equal steps. Bitwise deterministic.
pub fn flow_fixed(
    s0: &State,
    duration: f64,
    n_steps: usize,
    field: Field,
    params: &Params,
    f: &Forcing,
) -> Result<FlowResult> {
    flow_fixed_sampled(s0, duration, n_steps, field, params, f, None)
}

/// [`flow_fixed`], also recording (t, φ, p) every `sample_every` steps
/// (including the initial state).
pub fn flow_fixed_sampled(
    s0: &State,
    duration: f64,
    n_steps: usize,
    field: Field,
    params: &Params,
    f: &Forcing,
    sample_every: Option<usize>,
) -> Result<FlowResult> {
    check_inputs(s0, duration, field, params, f)?;
    check_fixed(duration, n_steps, field, params)?;
    let mut samples = Vec::new();
    if sample_every.is_some() {
        samples.push((s0.t, s0.phi, s0.p));
    }
    let every = sample_every.unwrap_or(usize::MAX).max(1);
    let y = dopri::rk4(
        |t, y: &[f64; 2]| rates(field, t, y[0], y[1], params, f),
        s0.t,
        [s0.phi, s0.p],
        duration,
        n_steps,
        |step, t, y| {
            if sample_every.is_some() && (step % every == 0 || step == n_steps) {
                samples.push((t, y[0], y[1]));
            }
        },
    )?;
    Ok(FlowResult {
        final_state: State::new(y[0], y[1], s0.t + duration),
        variational: None,
        steps_taken: n_steps,
        dense_samples: sample_every.map(|_| samples),
    })
}

/// Monodromy matrix of the averaged system along a prescribed 2π-periodic
/// solution, integrating only the linear variational equation.
pub fn monodromy_along(
    traj: &ReferenceTrajectory,
    params: &Params,
    f: &Forcing,
    cfg: &IntegratorConfig,
) -> Result<Matrix2<f64>> {
    params.validate()?;
    f.check_params(params)?;
    cfg.validate()?;
    let mu = params.mu;
    let (y, _) = dopri::integrate(
        |t, m: &[f64; 4]| {
            let j21 = averaged_jacobian_entry(t, traj.phi(t), params, f);
            [m[2], m[3], j21 * m[0] - mu * m[2], j21 * m[1] - mu * m[3]]
        },
        0.0,
        [1.0, 0.0, 0.0, 1.0],
        std::f64::consts::TAU,
        cfg,
        cfg.max_step,
        &[],
        |_, _| {},
    )?;
    Ok(Matrix2::new(y[0], y[1], y[2], y[3]))
}
