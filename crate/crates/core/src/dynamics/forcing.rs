//! Horizontal force models F(t), all exactly 2π-periodic.
//!
//! Every variant reduces `t` modulo 2π before any other arithmetic, so the
//! evaluation at `t` and at `t + 2π` go through the same reduced argument.

use std::f64::consts::TAU;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{Params, ReferenceTrajectory};
use crate::error::{Error, Result};

/// Grid size used for sup-norm estimates of a forcing.
pub const SUP_GRID_POINTS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Forcing {
    Zero,
    /// F(t) = amplitude · cos(t + phase).
    Harmonic {
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    /// F(t) = Σ_k cos[k]·cos(kt) + sin[k]·sin(kt), k starting at 0.
    Fourier {
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    /// Periodic cubic spline through samples at t_j = 2πj/N.
    Sampled(PeriodicSpline),
    /// Force that makes a prescribed trajectory an exact solution of the
    /// averaged system for the stored (mu, a).
    InverseDerived {
        trajectory: ReferenceTrajectory,
        mu: f64,
        a: f64,
    },
}

impl Default for Forcing {
    fn default() -> Self {
        Forcing::Zero
    }
}

impl Forcing {
    pub fn harmonic(amplitude: f64, phase: f64) -> Self {
        Forcing::Harmonic { amplitude, phase }
    }

    pub fn fourier(cos: Vec<f64>, sin: Vec<f64>) -> Self {
        Forcing::Fourier { cos, sin }
    }

    pub fn sampled(samples: Vec<f64>) -> Result<Self> {
        Ok(Forcing::Sampled(PeriodicSpline::new(samples)?))
    }

    pub fn value(&self, t: f64) -> f64 {
        let t = t.rem_euclid(TAU);
        match self {
            Forcing::Zero => 0.0,
            Forcing::Harmonic { amplitude, phase } => amplitude * (t + phase).cos(),
            Forcing::Fourier { cos, sin } => {
                let step = Complex::new(t.cos(), t.sin());
                let mut rot = Complex::new(1.0, 0.0);
                let n = cos.len().max(sin.len());
                let mut acc = 0.0;
                for k in 0..n {
                    if k > 0 {
                        rot *= step;
                    }
                    acc += cos.get(k).copied().unwrap_or(0.0) * rot.re + sin.get(k).copied().unwrap_or(0.0) * rot.im;
                }
                acc
            }
            Forcing::Sampled(spline) => spline.eval(t),
            Forcing::InverseDerived { trajectory, mu, a } => {
                let (phi, dphi, ddphi) = trajectory.eval(t);
                (ddphi + phi.sin() + mu * dphi + 0.25 * a * a * (2.0 * phi).sin()) / phi.cos()
            }
        }
    }

    /// Errors when an inverse-derived force is combined with parameters other
    /// than the ones it was built for.
    pub fn check_params(&self, params: &Params) -> Result<()> {
        if let Forcing::InverseDerived { mu, a, .. } = self {
            if *mu != params.mu || *a != params.a {
                return Err(Error::ForcingMismatch { snapshot_mu: *mu, snapshot_a: *a, mu: params.mu, a: params.a });
            }
        }
        Ok(())
    }

    /// F ↦ −F.
    pub fn reflected(&self) -> Self {
        match self {
            Forcing::Zero => Forcing::Zero,
            Forcing::Harmonic { amplitude, phase } => Forcing::Harmonic { amplitude: -amplitude, phase: *phase },
            Forcing::Fourier { cos, sin } => Forcing::Fourier {
                cos: cos.iter().map(|c| -c).collect(),
                sin: sin.iter().map(|s| -s).collect(),
            },
            Forcing::Sampled(spline) => Forcing::Sampled(spline.scaled(-1.0)),
            Forcing::InverseDerived { trajectory, mu, a } => {
                Forcing::InverseDerived { trajectory: trajectory.reflected(), mu: *mu, a: *a }
            }
        }
    }

    /// F ↦ s·F. Inverse-derived forces cannot be rescaled.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Ok(match self {
            Forcing::Zero => Forcing::Zero,
            Forcing::Harmonic { amplitude, phase } => Forcing::Harmonic { amplitude: s * amplitude, phase: *phase },
            Forcing::Fourier { cos, sin } => Forcing::Fourier {
                cos: cos.iter().map(|c| s * c).collect(),
                sin: sin.iter().map(|x| s * x).collect(),
            },
            Forcing::Sampled(spline) => Forcing::Sampled(spline.scaled(s)),
            Forcing::InverseDerived { .. } if s == 1.0 => self.clone(),
            Forcing::InverseDerived { .. } => {
                return Err(Error::InvalidArgument("an inverse-derived force cannot be rescaled".into()))
            }
        })
    }

    /// Time shift F(t) ↦ F(t + shift), where representable in closed form.
    pub fn shifted(&self, shift: f64) -> Result<Self> {
        match self {
            Forcing::Zero => Ok(Forcing::Zero),
            Forcing::Harmonic { amplitude, phase } => {
                Ok(Forcing::Harmonic { amplitude: *amplitude, phase: (phase + shift).rem_euclid(TAU) })
            }
            _ => Err(Error::InvalidArgument("time shift is only supported for zero and harmonic forcing".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Forcing::Zero => Ok(()),
            Forcing::Harmonic { amplitude, phase } if amplitude.is_finite() && phase.is_finite() => Ok(()),
            Forcing::Harmonic { .. } => Err(Error::InvalidArgument("harmonic amplitude and phase must be finite".into())),
            Forcing::Fourier { cos, sin } if finite(cos) && finite(sin) => Ok(()),
            Forcing::Fourier { .. } => Err(Error::InvalidArgument("Fourier coefficients must be finite".into())),
            Forcing::Sampled(_) => Ok(()),
            Forcing::InverseDerived { trajectory, mu, a } => {
                trajectory.validate()?;
                check_inverse_guard(trajectory)?;
                if !(mu.is_finite() && a.is_finite()) {
                    return Err(Error::InvalidArgument("inverse-derived snapshot must be finite".into()));
                }
                Ok(())
            }
        }
    }

    /// Short identifier used in chart metadata.
    pub fn family_id(&self) -> &'static str {
        match self {
            Forcing::Zero => "zero",
            Forcing::Harmonic { .. } => "harmonic",
            Forcing::Fourier { .. } => "fourier",
            Forcing::Sampled(_) => "sampled",
            Forcing::InverseDerived { .. } => "inverse_derived",
        }
    }

    /// max |F(t)| over one period: dense grid, then golden-section refinement
    /// around the best grid node to 1e-9 in t.
    pub fn max_abs(&self) -> f64 {
        if matches!(self, Forcing::Zero) {
            return 0.0;
        }
        let h = TAU / SUP_GRID_POINTS as f64;
        let (best_j, best) = (0..SUP_GRID_POINTS)
            .map(|j| (j, self.value(j as f64 * h).abs()))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        let t0 = best_j as f64 * h;
        let refined = golden_max(|t| self.value(t).abs(), t0 - h, t0 + h, 1e-9);
        best.max(refined)
    }

    /// (min F, max F) over one period, refined like [`Forcing::max_abs`].
    pub fn extremes(&self) -> (f64, f64) {
        if matches!(self, Forcing::Zero) {
            return (0.0, 0.0);
        }
        let h = TAU / SUP_GRID_POINTS as f64;
        let top = |sign: f64| {
            let (best_j, best) = (0..SUP_GRID_POINTS)
                .map(|j| (j, sign * self.value(j as f64 * h)))
                .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            let t0 = best_j as f64 * h;
            best.max(golden_max(|t| sign * self.value(t), t0 - h, t0 + h, 1e-9))
        };
        (-top(-1.0), top(1.0))
    }
}

pub(crate) fn check_inverse_guard(trajectory: &ReferenceTrajectory) -> Result<()> {
    let min_cos = trajectory.min_abs_cos();
    if min_cos <= super::COS_GUARD {
        return Err(Error::Domain(format!(
            "trajectory comes within |cos phi| = {min_cos:e} of the horizontal"
        )));
    }
    Ok(())
}

pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        }
    }
    f1.max(f2)
}

/// C² periodic cubic spline on a uniform grid over [0, 2π).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SplineRepr", into = "SplineRepr")]
pub struct PeriodicSpline {
    values: Arc<[f64]>,
    second: Arc<[f64]>,
}

#[derive(Serialize, Deserialize)]
struct SplineRepr {
    samples: Vec<f64>,
    #[serde(default = "cubic")]
    interpolation: String,
}

fn cubic() -> String {
    "cubic".to_string()
}

impl TryFrom<SplineRepr> for PeriodicSpline {
    type Error = Error;
    fn try_from(repr: SplineRepr) -> Result<Self> {
        if repr.interpolation != "cubic" {
            return Err(Error::InvalidArgument(format!(
                "unsupported interpolation '{}', only 'cubic' is available",
                repr.interpolation
            )));
        }
        PeriodicSpline::new(repr.samples)
    }
}

impl From<PeriodicSpline> for SplineRepr {
    fn from(spline: PeriodicSpline) -> Self {
        SplineRepr { samples: spline.values.to_vec(), interpolation: cubic() }
    }
}

impl PeriodicSpline {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 8 {
            return Err(Error::InvalidArgument(format!("sampled forcing needs at least 8 nodes, got {n}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("sampled forcing values must be finite".into()));
        }
        // The periodic spline system m[j-1] + 4 m[j] + m[j+1] = rhs[j] is
        // circulant, so it diagonalises under the DFT.
        let h = TAU / n as f64;
        let mut buf: Vec<Complex<f64>> = (0..n)
            .map(|j| {
                let prev = values[(j + n - 1) % n];
                let next = values[(j + 1) % n];
                Complex::new(6.0 * (next - 2.0 * values[j] + prev) / (h * h), 0.0)
            })
            .collect();
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(n).process(&mut buf);
        for (k, c) in buf.iter_mut().enumerate() {
            *c /= 4.0 + 2.0 * (TAU * k as f64 / n as f64).cos();
        }
        planner.plan_fft_inverse(n).process(&mut buf);
        let second: Vec<f64> = buf.iter().map(|c| c.re / n as f64).collect();
        Ok(PeriodicSpline { values: values.into(), second: second.into() })
    }

    pub fn samples(&self) -> &[f64] {
        &self.values
    }

    fn scaled(&self, s: f64) -> Self {
        PeriodicSpline {
            values: self.values.iter().map(|v| s * v).collect(),
            second: self.second.iter().map(|v| s * v).collect(),
        }
    }

    /// Evaluates at `t` already reduced to [0, 2π).
    fn eval(&self, t: f64) -> f64 {
        let n = self.values.len();
        let h = TAU / n as f64;
        let j = ((t / h).floor() as usize).min(n - 1);
        let next = (j + 1) % n;
        let left = t - j as f64 * h;
        let right = h - left;
        let (y0, y1) = (self.values[j], self.values[next]);
        let (m0, m1) = (self.second[j], self.second[next]);
        m0 * right.powi(3) / (6.0 * h)
            + m1 * left.powi(3) / (6.0 * h)
            + (y0 / h - m0 * h / 6.0) * right
            + (y1 / h - m1 * h / 6.0) * left
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn harmonic_value() {
        let f = Forcing::harmonic(0.5, 0.0);
        assert_eq!(f.value(0.0), 0.5);
        assert!((f.value(PI) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn reflected_harmonic_matches_phase_shift() {
        let f = Forcing::harmonic(0.7, 0.0);
        let r = f.reflected();
        assert_eq!(r, Forcing::harmonic(-0.7, 0.0));
        let shifted = Forcing::harmonic(0.7, PI);
        for j in 0..50 {
            let t = 0.13 * j as f64;
            assert!((r.value(t) - shifted.value(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn fourier_value() {
        let f = Forcing::fourier(vec![0.1, 0.5], vec![0.0, 0.0, 0.25]);
        let t = 0.7_f64;
        let expected = 0.1 + 0.5 * t.cos() + 0.25 * (2.0 * t).sin();
        assert!((f.value(t) - expected).abs() < 1e-14);
    }

    #[test]
    fn spline_interpolates_nodes_and_is_accurate() {
        let n = 64;
        let g = |t: f64| t.sin() + 0.3 * (3.0 * t).cos();
        let samples = (0..n).map(|j| g(TAU * j as f64 / n as f64)).collect();
        let f = Forcing::sampled(samples).unwrap();
        for j in 0..n {
            let t = TAU * j as f64 / n as f64;
            assert!((f.value(t) - g(t)).abs() < 1e-12);
        }
        for j in 0..200 {
            let t = 0.031 * j as f64;
            assert!((f.value(t) - g(t)).abs() < 2e-4);
        }
    }

    #[test]
    fn spline_is_c1_across_the_wrap() {
        let samples = (0..16).map(|j| ((j * 7) % 5) as f64).collect();
        let f = Forcing::sampled(samples).unwrap();
        let d = 1e-6;
        let left = (f.value(TAU - d) - f.value(TAU - 2.0 * d)) / d;
        let right = (f.value(d) - f.value(0.0)) / d;
        assert!((left - right).abs() < 1e-3);
        assert!((f.value(TAU - 1e-12) - f.value(0.0)).abs() < 1e-9);
    }

    #[test]
    fn sampled_requires_eight_nodes() {
        assert!(Forcing::sampled(vec![0.0; 7]).is_err());
    }

    #[test]
    fn periodic_to_rounding() {
        let forcings = [
            Forcing::harmonic(1.3, 0.4),
            Forcing::fourier(vec![0.2, 1.0, -0.4], vec![0.0, 0.3]),
            Forcing::sampled((0..32).map(|j| (j as f64 * 0.37).sin()).collect()).unwrap(),
        ];
        for f in &forcings {
            for j in 0..100 {
                let t = -7.0 + 0.173 * j as f64;
                assert!((f.value(t + TAU) - f.value(t)).abs() < 1e-13, "{f:?} at {t}");
            }
            // Reduction happens first, so exact multiples agree bit for bit.
            assert_eq!(f.value(0.0).to_bits(), f.value(TAU).to_bits());
        }
    }

    #[test]
    fn max_abs_refines_past_grid() {
        let f = Forcing::harmonic(1.0, 0.123456789);
        assert!((f.max_abs() - 1.0).abs() < 1e-12);
        let g = Forcing::fourier(vec![0.0, 1.0], vec![0.0, 1.0]);
        assert!((g.max_abs() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn json_schema_shapes() {
        let f: Forcing = serde_json::from_str(r#"{"type":"harmonic","amplitude":0.1}"#).unwrap();
        assert_eq!(f, Forcing::harmonic(0.1, 0.0));
        let z: Forcing = serde_json::from_str(r#"{"type":"zero"}"#).unwrap();
        assert_eq!(z, Forcing::Zero);
        let s: Forcing = serde_json::from_str(r#"{"type":"sampled","samples":[0,1,2,3,4,5,6,7]}"#).unwrap();
        let json = serde_json::to_value(&s).unwrap();
        assert_eq!(json["interpolation"], "cubic");
        assert_eq!(json["samples"].as_array().unwrap().len(), 8);
        assert!(serde_json::from_str::<Forcing>(r#"{"type":"sampled","samples":[0,1,2]}"#).is_err());
        assert!(serde_json::from_str::<Forcing>(r#"{"type":"sampled","samples":[0,1,2,3,4,5,6,7],"interpolation":"linear"}"#).is_err());
    }
}
