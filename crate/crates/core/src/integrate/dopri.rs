//! Dormand–Prince 5(4) with a PI step-size controller.

use super::IntegratorConfig;
use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const PI_BETA: f64 = 0.04;
const PI_ALPHA: f64 = 0.2 - 0.75 * PI_BETA;
pub(crate) const MIN_STEP: f64 = 1e-14;

#[inline]
fn combine<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (coef, k) in terms {
        if *coef != 0.0 {
            for i in 0..N {
                out[i] += h * coef * k[i];
            }
        }
    }
    out
}

fn all_finite<const N: usize>(y: &[f64; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

/// Integrates from `t0` to `t_end`, landing exactly on every time in `stops`
/// (sorted, inside the interval) and reporting the state there via `on_stop`.
///
/// Returns the final state and the number of accepted steps.
pub(crate) fn integrate<const N: usize, F>(
    rhs: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    cfg: &IntegratorConfig,
    max_step: f64,
    stops: &[f64],
    mut on_stop: impl FnMut(f64, &[f64; N]),
) -> Result<([f64; N], usize)>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut t = t0;
    let mut y = y0;
    let mut stop_iter = stops.iter().copied().peekable();
    while let Some(&s) = stop_iter.peek() {
        if s > t0 {
            break;
        }
        on_stop(s, &y);
        stop_iter.next();
    }
    if t_end <= t0 {
        return Ok((y, 0));
    }

    let mut h = cfg.initial_step.min(max_step).min(t_end - t0);
    let mut k1 = rhs(t, &y);
    let mut err_old: f64 = 1e-4;
    let mut accepted = 0usize;
    let mut attempts = 0usize;
    let mut last_rejected = false;

    loop {
        let target = match stop_iter.peek() {
            Some(&s) if s < t_end => s,
            _ => t_end,
        };
        let remaining = target - t;
        let snap = 1e-13 * t.abs().max(1.0);
        if remaining <= snap {
            t = target;
            if target == t_end {
                while let Some(s) = stop_iter.next() {
                    if s <= t_end {
                        on_stop(s, &y);
                    }
                }
                return Ok((y, accepted));
            }
            on_stop(target, &y);
            stop_iter.next();
            continue;
        }
        if attempts >= cfg.max_steps {
            return Err(Error::StepBudgetExceeded { max_steps: cfg.max_steps, t });
        }
        attempts += 1;

        let mut h_try = h.min(max_step);
        let landing = h_try >= remaining;
        if landing {
            h_try = remaining;
        }

        let k2 = rhs(t + C2 * h_try, &combine(&y, h_try, &[(A21, &k1)]));
        let k3 = rhs(t + C3 * h_try, &combine(&y, h_try, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(t + C4 * h_try, &combine(&y, h_try, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = rhs(t + C5 * h_try, &combine(&y, h_try, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let y6 = combine(&y, h_try, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let k6 = rhs(t + h_try, &y6);
        let y_new = combine(&y, h_try, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let t_new = if landing { target } else { t + h_try };
        let k7 = rhs(t_new, &y_new);

        let mut sum = 0.0;
        for i in 0..N {
            let e = h_try * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
            sum += (e / scale).powi(2);
        }
        let err = (sum / N as f64).sqrt();

        if !err.is_finite() || !all_finite(&y_new) || !all_finite(&k7) {
            h = h_try * MIN_FACTOR;
            last_rejected = true;
            if h < MIN_STEP {
                return Err(Error::NonFiniteState { t });
            }
            continue;
        }

        if err <= 1.0 {
            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-PI_ALPHA) * err_old.powf(PI_BETA)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            let factor = if last_rejected { factor.min(1.0) } else { factor };
            err_old = err.max(1e-4);
            t = t_new;
            y = y_new;
            k1 = k7;
            accepted += 1;
            last_rejected = false;
            // A step clipped to land on a stop should not shrink the next one.
            h = if landing { h.max(h_try * factor) } else { h_try * factor };
        } else {
            let factor = (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
            h = h_try * factor;
            last_rejected = true;
            if h < MIN_STEP {
                return Err(Error::StepUnderflow { t, h });
            }
        }
    }
}

/// Classical fixed-step RK4; `on_step` sees the state after every step.
pub(crate) fn rk4<const N: usize, F>(
    rhs: F,
    t0: f64,
    y0: [f64; N],
    duration: f64,
    n_steps: usize,
    mut on_step: impl FnMut(usize, f64, &[f64; N]),
) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let h = duration / n_steps as f64;
    let mut y = y0;
    for step in 0..n_steps {
        let t = t0 + step as f64 * h;
        let k1 = rhs(t, &y);
        let k2 = rhs(t + 0.5 * h, &combine(&y, h, &[(0.5, &k1)]));
        let k3 = rhs(t + 0.5 * h, &combine(&y, h, &[(0.5, &k2)]));
        let k4 = rhs(t + h, &combine(&y, h, &[(1.0, &k3)]));
        for i in 0..N {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if !all_finite(&y) {
            return Err(Error::NonFiniteState { t: t + h });
        }
        on_step(step + 1, t0 + (step + 1) as f64 * h, &y);
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_meets_tolerance() {
        let cfg = IntegratorConfig::default().with_tol(1e-10);
        let (y, steps) = integrate(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 5.0, &cfg, 1.0, &[], |_, _| {}).unwrap();
        assert!((y[0] - (-5f64).exp()).abs() < 1e-10);
        assert!(steps > 5);
    }

    #[test]
    fn lands_on_stops() {
        let cfg = IntegratorConfig::default();
        let stops = [0.0, 0.5, 1.0, 2.0];
        let mut seen = Vec::new();
        integrate(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 2.0, &cfg, 1.0, &stops, |t, y| seen.push((t, y[0]))).unwrap();
        assert_eq!(seen.iter().map(|s| s.0).collect::<Vec<_>>(), stops.to_vec());
        for (t, v) in seen {
            assert!((v - t.exp()).abs() < 1e-8 * t.exp());
        }
    }

    #[test]
    fn step_budget() {
        let cfg = IntegratorConfig { max_steps: 3, ..IntegratorConfig::default() };
        let r = integrate(|t, _: &[f64; 1]| [(50.0 * t).sin()], 0.0, [0.0], 100.0, &cfg, 0.1, &[], |_, _| {});
        assert!(matches!(r, Err(Error::StepBudgetExceeded { .. })));
    }

    #[test]
    fn blow_up_reported() {
        let cfg = IntegratorConfig::default();
        // y' = y^2 from 1 blows up at t = 1.
        let r = integrate(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 2.0, &cfg, 0.1, &[], |_, _| {});
        assert!(matches!(r, Err(Error::StepUnderflow { .. }) | Err(Error::NonFiniteState { .. }) | Err(Error::StepBudgetExceeded { .. })));
    }

    #[test]
    fn rk4_harmonic_oscillator() {
        let y = rk4(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], std::f64::consts::TAU, 2000, |_, _, _| {}).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10 && y[1].abs() < 1e-10);
    }
}
