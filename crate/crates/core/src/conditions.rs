//! Closed-form conditions: the Duffing-type stability criterion with the
//! constant K(q), critical angles of the vibrational potential, the
//! small-force hypotheses and the momentum bound of the search box.

use std::f64::consts::{FRAC_2_PI, TAU};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::dynamics::{golden_max, Forcing, Params, SUP_GRID_POINTS};
use crate::error::{Error, Result};

/// Tolerance for deciding that √(1 + a²/2) is an integer.
pub const RESONANCE_TOL: f64 = 1e-9;
/// Angular grid used when maximising ∂g/∂φ over [β, α].
const ANGLE_GRID_POINTS: usize = 256;

/// K(q) = 1/(q (2π)^{2/q}) · (2/(2+q))^{1−2/q} · (Γ(1/q)/Γ(1/2 + 1/q))² for
/// finite q ≥ 1 and 2/π for q = ∞.
pub fn k_constant(q: f64) -> Result<f64> {
    if q.is_nan() || q < 1.0 {
        return Err(Error::Domain(format!("K(q) needs q >= 1, got {q}")));
    }
    if q.is_infinite() {
        return Ok(FRAC_2_PI);
    }
    let ratio = gamma(1.0 / q) / gamma(0.5 + 1.0 / q);
    Ok(1.0 / (q * TAU.powf(2.0 / q)) * (2.0 / (2.0 + q)).powf(1.0 - 2.0 / q) * ratio * ratio)
}

/// Critical points of Φ(φ) = −sin φ − (a²/4) sin 2φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalAngles {
    pub lambda1: f64,
    pub lambda2: f64,
    pub phi_min1: f64,
    pub phi_max1: f64,
    /// Present only when a² > 2.
    pub phi_max2: Option<f64>,
    pub phi_min2: Option<f64>,
}

pub fn critical_angles(a: f64) -> Result<CriticalAngles> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::Domain(format!("critical angles need a > 0, got {a}")));
    }
    let a2 = a * a;
    let root = (1.0 + 2.0 * a2 * a2).sqrt();
    // λ₁ written without the cancellation of −1 + √(1 + 2a⁴).
    let lambda1 = a2 / (1.0 + root);
    let lambda2 = (-1.0 - root) / (2.0 * a2);
    let phi_min1 = lambda1.acos();
    let (phi_max2, phi_min2) = if a2 > 2.0 {
        let c = lambda2.clamp(-1.0, 1.0).acos();
        (Some(c), Some(TAU - c))
    } else {
        (None, None)
    };
    Ok(CriticalAngles { lambda1, lambda2, phi_min1, phi_max1: TAU - phi_min1, phi_max2, phi_min2 })
}

/// Φ(φ) = −sin φ − (a²/4) sin 2φ.
pub fn potential_slope(phi: f64, a: f64) -> f64 {
    -phi.sin() - 0.25 * a * a * (2.0 * phi).sin()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub passed: bool,
    /// Positive when the hypothesis holds with room to spare.
    pub margin: f64,
}

impl HypothesisCheck {
    fn strict(margin: f64) -> Self {
        HypothesisCheck { passed: margin > 0.0, margin }
    }

    fn non_strict(margin: f64) -> Self {
        HypothesisCheck { passed: margin >= 0.0, margin }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorresHypotheses {
    /// a² > 2, margin a² − 2.
    pub amplitude: HypothesisCheck,
    /// μ > 0.
    pub friction: HypothesisCheck,
    /// sup |F| ≤ 2/π.
    pub forcing_bound: HypothesisCheck,
    /// −F(t) cos β < Φ(β) for all t.
    pub lower_sign: HypothesisCheck,
    /// Φ(α) < −F(t) cos α for all t.
    pub upper_sign: HypothesisCheck,
    /// The dominating function f is ≻ 0 and ‖f‖_k < (1 + μ²/4) K(2k/(k−1)).
    pub omega: HypothesisCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorresVerdict {
    pub applies: bool,
    /// φ²_min, upper end of the trapping interval.
    pub alpha: Option<f64>,
    /// φ²_max, lower end of the trapping interval.
    pub beta: Option<f64>,
    pub k_used: f64,
    /// ‖f‖_k for f(t) = max(0, max over [β, α] of ∂g/∂φ).
    pub f_bound: Option<f64>,
    /// (1 + μ²/4) K(2k/(k−1)).
    pub omega_bound: f64,
    pub details: TorresHypotheses,
    pub reason: Option<String>,
}

/// Checks the hypotheses of the Duffing-type stability criterion for
/// φ̈ + μφ̇ + g(t, φ) = 0 with g = sin φ + (a²/4) sin 2φ − F(t) cos φ on
/// [β, α] = [φ²_max, φ²_min].
///
/// The dominating function is the exact pointwise maximum of
/// ∂g/∂φ = cos φ + (a²/2) cos 2φ + F(t) sin φ over [β, α], clipped at zero.
/// `k` is the Lebesgue exponent of its norm over one period.
pub fn torres_check(params: &Params, f: &Forcing, k: f64) -> Result<TorresVerdict> {
    params.validate()?;
    f.validate()?;
    if k.is_nan() || k < 1.0 {
        return Err(Error::Domain(format!("norm index k must be in [1, inf], got {k}")));
    }
    let (mu, a) = (params.mu, params.a);
    let q = if k.is_infinite() { 2.0 } else if k == 1.0 { f64::INFINITY } else { 2.0 * k / (k - 1.0) };
    let omega_bound = (1.0 + 0.25 * mu * mu) * k_constant(q)?;

    let sup = f.max_abs();
    let amplitude = HypothesisCheck::strict(a * a - 2.0);
    let friction = HypothesisCheck::strict(mu);
    let forcing_bound = HypothesisCheck::non_strict(FRAC_2_PI - sup);
    let failed = HypothesisCheck { passed: false, margin: f64::NAN };

    let angles = if a > 0.0 { Some(critical_angles(a)?) } else { None };
    let (beta, alpha) = match angles.and_then(|c| c.phi_max2.zip(c.phi_min2)) {
        Some(pair) if amplitude.passed => pair,
        _ => {
            return Ok(TorresVerdict {
                applies: false,
                alpha: None,
                beta: None,
                k_used: k,
                f_bound: None,
                omega_bound,
                details: TorresHypotheses {
                    amplitude,
                    friction,
                    forcing_bound,
                    lower_sign: failed,
                    upper_sign: failed,
                    omega: failed,
                },
                reason: Some("a^2 <= 2: the interval [phi2_max, phi2_min] does not exist".into()),
            })
        }
    };

    // Φ(β) + F cos β > 0 and −F cos α − Φ(α) > 0 for all t; cos β = cos α < 0,
    // so both are worst at max F.
    let (_, f_max) = f.extremes();
    let lower_sign = HypothesisCheck::strict(potential_slope(beta, a) + f_max * beta.cos());
    let upper_sign = HypothesisCheck::strict(-f_max * alpha.cos() - potential_slope(alpha, a));

    let dg = |t_force: f64, phi: f64| phi.cos() + 0.5 * a * a * (2.0 * phi).cos() + t_force * phi.sin();
    let h_phi = (alpha - beta) / ANGLE_GRID_POINTS as f64;
    let dominating: Vec<f64> = (0..SUP_GRID_POINTS)
        .map(|j| {
            let force = f.value(TAU * j as f64 / SUP_GRID_POINTS as f64);
            let (best_i, best) = (0..=ANGLE_GRID_POINTS)
                .map(|i| (i, dg(force, beta + i as f64 * h_phi)))
                .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            let phi0 = beta + best_i as f64 * h_phi;
            let lo = (phi0 - h_phi).max(beta);
            let hi = (phi0 + h_phi).min(alpha);
            best.max(golden_max(|phi| dg(force, phi), lo, hi, 1e-10)).max(0.0)
        })
        .collect();
    let positive = dominating.iter().any(|&v| v > 0.0);
    let norm = lk_norm(&dominating, k);
    let omega = HypothesisCheck { passed: positive && norm < omega_bound, margin: omega_bound - norm };

    let details = TorresHypotheses { amplitude, friction, forcing_bound, lower_sign, upper_sign, omega };
    let all = [amplitude, friction, forcing_bound, lower_sign, upper_sign, omega];
    let applies = all.iter().all(|h| h.passed);
    let reason = (!applies).then(|| {
        let names = ["amplitude", "friction", "forcing_bound", "lower_sign", "upper_sign", "omega"];
        let failing: Vec<&str> = names.iter().zip(all.iter()).filter(|(_, h)| !h.passed).map(|(n, _)| *n).collect();
        format!("failed: {}", failing.join(", "))
    });
    Ok(TorresVerdict {
        applies,
        alpha: Some(alpha),
        beta: Some(beta),
        k_used: k,
        f_bound: Some(norm),
        omega_bound,
        details,
        reason,
    })
}

/// (∫₀^{2π} |v|^k dt)^{1/k} from uniform samples over one period.
fn lk_norm(values: &[f64], k: f64) -> f64 {
    if k.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let h = TAU / values.len() as f64;
    (values.iter().map(|v| v.abs().powf(k)).sum::<f64>() * h).powf(1.0 / k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    /// √(1 + a²/2).
    pub value: f64,
    pub resonant: bool,
    pub distance: f64,
}

pub fn resonance_check(a: f64) -> Resonance {
    let value = (1.0 + 0.5 * a * a).sqrt();
    let distance = (value - value.round()).abs();
    Resonance { value, resonant: distance <= RESONANCE_TOL, distance }
}

/// P = (1 + a²/4 + max |F|)/μ: every non-falling periodic orbit has |p| ≤ P.
pub fn momentum_bound(params: &Params, f: &Forcing) -> Result<f64> {
    params.validate()?;
    if params.mu == 0.0 {
        return Err(Error::Domain("momentum bound is infinite for mu = 0".into()));
    }
    Ok((1.0 + 0.25 * params.a * params.a + f.max_abs()) / params.mu)
}

/// μ > 0 and a² > 2.
pub fn prop1_condition(params: &Params) -> bool {
    params.mu > 0.0 && params.a * params.a > 2.0
}

/// Convenience: the trapping interval (β, α) when a² > 2.
pub fn trapping_interval(a: f64) -> Option<(f64, f64)> {
    let c = critical_angles(a).ok()?;
    c.phi_max2.zip(c.phi_min2)
}
