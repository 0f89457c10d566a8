//! Vector fields of the vibrated pendulum.
//!
//! The original system, with pivot motion h(t) = aε sin(t/ε), reads
//!
//! ```text
//! φ' = p − ḣ sin φ
//! p' = −sin φ − μp + μḣ sin φ + ḣ p cos φ − ḣ² sin φ cos φ + F(t) cos φ
//! ```
//!
//! and its average over the fast period is
//!
//! ```text
//! φ' = p
//! p' = −sin φ − μp − (a²/4) sin 2φ + F(t) cos φ
//! ```

mod forcing;
mod trajectory;

use std::f64::consts::FRAC_PI_2;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use forcing::{Forcing, PeriodicSpline, SUP_GRID_POINTS};
pub(crate) use forcing::golden_max;
pub use trajectory::{ReferenceTrajectory, TrigSeries, TRAJECTORY_CHECK_POINTS};

/// `inverse_force` rejects trajectories with min |cos φ| at or below this.
pub const COS_GUARD: f64 = 1e-6;

/// Step of the central differences used for the original-system Jacobian.
pub const ORIGINAL_FD_STEP: f64 = 1e-7;

/// Physical and asymptotic parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Viscous friction coefficient.
    pub mu: f64,
    /// Vibration amplitude parameter.
    pub a: f64,
    /// Fast time scale; only the original system reads it.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    1.0 / 50.0
}

impl Params {
    /// Parameters with ε = 1/50.
    pub fn new(mu: f64, a: f64) -> Self {
        Params { mu, a, epsilon: default_epsilon() }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// Sets ε = 1/k.
    pub fn with_k(self, k: u32) -> Self {
        self.with_epsilon(1.0 / k as f64)
    }

    pub fn with_a(mut self, a: f64) -> Self {
        self.a = a;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(Error::InvalidArgument(format!("mu must be finite and >= 0, got {}", self.mu)));
        }
        if !(self.a.is_finite() && self.a >= 0.0) {
            return Err(Error::InvalidArgument(format!("a must be finite and >= 0, got {}", self.a)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        Ok(())
    }

    /// k with ε = 1/k, when 1/ε is a positive integer (to 1e-9).
    pub fn commensurate_k(&self) -> Option<u32> {
        let k = 1.0 / self.epsilon;
        let rounded = k.round();
        ((k - rounded).abs() < 1e-9 && rounded >= 1.0 && rounded <= u32::MAX as f64).then_some(rounded as u32)
    }

    /// ḣ(t) = a cos(t/ε).
    pub fn pivot_velocity(&self, t: f64) -> f64 {
        self.a * (t / self.epsilon).cos()
    }
}

/// Which vector field to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Averaged,
    Original,
}

impl std::fmt::Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Field::Averaged => "averaged",
            Field::Original => "original",
        })
    }
}

impl std::str::FromStr for Field {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "averaged" => Ok(Field::Averaged),
            "original" => Ok(Field::Original),
            other => Err(Error::InvalidArgument(format!("unknown system '{other}'"))),
        }
    }
}

/// A phase point at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub phi: f64,
    pub p: f64,
    pub t: f64,
}

impl State {
    pub fn new(phi: f64, p: f64, t: f64) -> Self {
        State { phi, p, t }
    }

    pub fn is_finite(&self) -> bool {
        self.phi.is_finite() && self.p.is_finite() && self.t.is_finite()
    }

    /// φ ∈ (π/2, 3π/2).
    pub fn is_non_falling(&self) -> bool {
        is_non_falling(self.phi)
    }
}

pub fn is_non_falling(phi: f64) -> bool {
    phi > FRAC_PI_2 && phi < 3.0 * FRAC_PI_2
}

#[inline]
pub(crate) fn averaged_rates(t: f64, phi: f64, p: f64, params: &Params, forcing: &Forcing) -> [f64; 2] {
    let (s, c) = phi.sin_cos();
    let dp = -s - params.mu * p - 0.5 * params.a * params.a * s * c + forcing.value(t) * c;
    [p, dp]
}

#[inline]
pub(crate) fn original_rates(t: f64, phi: f64, p: f64, params: &Params, forcing: &Forcing) -> [f64; 2] {
    let hd = params.pivot_velocity(t);
    let (s, c) = phi.sin_cos();
    let dphi = p - hd * s;
    let dp = -s - params.mu * p + params.mu * hd * s + hd * p * c - hd * hd * s * c + forcing.value(t) * c;
    [dphi, dp]
}

#[inline]
pub(crate) fn averaged_jacobian_entry(t: f64, phi: f64, params: &Params, forcing: &Forcing) -> f64 {
    -phi.cos() - 0.5 * params.a * params.a * (2.0 * phi).cos() - forcing.value(t) * phi.sin()
}

/// Averaged vector field (dφ, dp).
pub fn rhs_averaged(s: &State, params: &Params, f: &Forcing) -> (f64, f64) {
    let [dphi, dp] = averaged_rates(s.t, s.phi, s.p, params, f);
    (dphi, dp)
}

/// Original (non-averaged) vector field (dφ, dp).
pub fn rhs_original(s: &State, params: &Params, f: &Forcing) -> (f64, f64) {
    let [dphi, dp] = original_rates(s.t, s.phi, s.p, params, f);
    (dphi, dp)
}

/// Analytic Jacobian of the averaged field with respect to (φ, p).
pub fn jacobian_averaged(s: &State, params: &Params, f: &Forcing) -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, averaged_jacobian_entry(s.t, s.phi, params, f), -params.mu)
}

/// Central-difference Jacobian of the original field.
pub fn jacobian_original(s: &State, params: &Params, f: &Forcing) -> Matrix2<f64> {
    let h = ORIGINAL_FD_STEP;
    let d_phi = {
        let plus = original_rates(s.t, s.phi + h, s.p, params, f);
        let minus = original_rates(s.t, s.phi - h, s.p, params, f);
        [(plus[0] - minus[0]) / (2.0 * h), (plus[1] - minus[1]) / (2.0 * h)]
    };
    let d_p = {
        let plus = original_rates(s.t, s.phi, s.p + h, params, f);
        let minus = original_rates(s.t, s.phi, s.p - h, params, f);
        [(plus[0] - minus[0]) / (2.0 * h), (plus[1] - minus[1]) / (2.0 * h)]
    };
    Matrix2::new(d_phi[0], d_p[0], d_phi[1], d_p[1])
}

/// The unique 2π-periodic force for which `traj` solves the averaged system:
///
/// F(t) = (φ̈ + sin φ + μφ̇ + (a²/4) sin 2φ) / cos φ
pub fn inverse_force(traj: &ReferenceTrajectory, params: &Params) -> Result<Forcing> {
    params.validate()?;
    traj.validate()?;
    forcing::check_inverse_guard(traj)?;
    Ok(Forcing::InverseDerived { trajectory: traj.clone(), mu: params.mu, a: params.a })
}

/// (φ, p) ↦ (2π − φ, −p).
pub fn symmetry_reflect(s: &State) -> State {
    State { phi: std::f64::consts::TAU - s.phi, p: -s.p, t: s.t }
}

/// F ↦ −F.
pub fn symmetry_reflect_forcing(f: &Forcing) -> Forcing {
    f.reflected()
}
