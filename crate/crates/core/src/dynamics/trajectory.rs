//! Prescribed 2π-periodic angle functions used to derive a horizontal force.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of points used when checking the non-falling property of a trajectory.
pub const TRAJECTORY_CHECK_POINTS: usize = 4096;

/// A 2π-periodic angle function φ(t) with first and second derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceTrajectory {
    /// φ(t) = π − A cos t.
    Cosine { amplitude: f64 },
    /// Trigonometric interpolant of uniform samples over one period.
    Sampled(TrigSeries),
}

impl ReferenceTrajectory {
    pub fn cosine(amplitude: f64) -> Result<Self> {
        let traj = ReferenceTrajectory::Cosine { amplitude };
        traj.validate()?;
        Ok(traj)
    }

    /// Builds a spectral interpolant through `samples` taken at t_j = 2πj/N.
    pub fn sampled(samples: Vec<f64>) -> Result<Self> {
        let traj = ReferenceTrajectory::Sampled(TrigSeries::from_samples(samples)?);
        traj.validate()?;
        Ok(traj)
    }

    /// Returns (φ, φ̇, φ̈) at time `t`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let t = t.rem_euclid(TAU);
        match self {
            ReferenceTrajectory::Cosine { amplitude } => {
                let (s, c) = t.sin_cos();
                (PI - amplitude * c, amplitude * s, amplitude * c)
            }
            ReferenceTrajectory::Sampled(series) => series.eval(t),
        }
    }

    pub fn phi(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    /// Initial condition (φ(0), φ̇(0)) of the trajectory viewed as an orbit.
    pub fn initial_condition(&self) -> (f64, f64) {
        let (phi, dphi, _) = self.eval(0.0);
        (phi, dphi)
    }

    /// The image under (φ ↦ 2π − φ).
    pub fn reflected(&self) -> Self {
        match self {
            ReferenceTrajectory::Cosine { amplitude } => ReferenceTrajectory::Cosine { amplitude: -amplitude },
            ReferenceTrajectory::Sampled(series) => {
                let samples = series.samples.iter().map(|x| TAU - x).collect::<Vec<_>>();
                // Reflection keeps the sample count, so construction cannot fail.
                ReferenceTrajectory::Sampled(TrigSeries::from_samples(samples).expect("valid sample count"))
            }
        }
    }

    /// Checks finiteness and φ(t) ∈ (π/2, 3π/2) on a dense grid.
    pub fn validate(&self) -> Result<()> {
        if let ReferenceTrajectory::Cosine { amplitude } = self {
            if !amplitude.is_finite() || amplitude.abs() >= FRAC_PI_2 {
                return Err(Error::Domain(format!(
                    "cosine trajectory amplitude {amplitude} must satisfy |A| < pi/2"
                )));
            }
        }
        for j in 0..TRAJECTORY_CHECK_POINTS {
            let t = TAU * j as f64 / TRAJECTORY_CHECK_POINTS as f64;
            let (phi, dphi, ddphi) = self.eval(t);
            if !(phi.is_finite() && dphi.is_finite() && ddphi.is_finite()) {
                return Err(Error::Domain(format!("trajectory is not finite at t = {t}")));
            }
            if phi <= FRAC_PI_2 || phi >= 3.0 * FRAC_PI_2 {
                return Err(Error::Domain(format!(
                    "trajectory leaves (pi/2, 3pi/2) at t = {t} (phi = {phi})"
                )));
            }
        }
        Ok(())
    }

    /// Minimum of |cos φ(t)| over a dense grid.
    pub fn min_abs_cos(&self) -> f64 {
        (0..TRAJECTORY_CHECK_POINTS)
            .map(|j| {
                let t = TAU * j as f64 / TRAJECTORY_CHECK_POINTS as f64;
                self.phi(t).cos().abs()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Real trigonometric polynomial x(t) = c₀ + Σ (a_k cos kt + b_k sin kt)
/// interpolating uniform samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SamplesRepr", into = "SamplesRepr")]
pub struct TrigSeries {
    samples: Arc<[f64]>,
    mean: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SamplesRepr {
    samples: Vec<f64>,
}

impl TryFrom<SamplesRepr> for TrigSeries {
    type Error = Error;
    fn try_from(repr: SamplesRepr) -> Result<Self> {
        TrigSeries::from_samples(repr.samples)
    }
}

impl From<TrigSeries> for SamplesRepr {
    fn from(series: TrigSeries) -> Self {
        SamplesRepr { samples: series.samples.to_vec() }
    }
}

impl TrigSeries {
    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        let n = samples.len();
        if n < 8 {
            return Err(Error::InvalidArgument(format!("need at least 8 samples, got {n}")));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("samples must be finite".into()));
        }
        let mut buf: Vec<Complex<f64>> = samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let scale = 1.0 / n as f64;
        let half = n / 2;
        let mut cos = Vec::with_capacity(half);
        let mut sin = Vec::with_capacity(half);
        for (k, coeff) in buf.iter().enumerate().take(half + 1).skip(1) {
            if 2 * k == n {
                // Nyquist mode: keep the cosine part only, with half weight.
                cos.push(coeff.re * scale);
                sin.push(0.0);
            } else {
                cos.push(2.0 * coeff.re * scale);
                sin.push(-2.0 * coeff.im * scale);
            }
        }
        Ok(TrigSeries { samples: samples.into(), mean: buf[0].re * scale, cos, sin })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// (x, x', x'') at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let step = Complex::new(t.cos(), t.sin());
        let mut rot = Complex::new(1.0, 0.0);
        let (mut x, mut dx, mut ddx) = (self.mean, 0.0, 0.0);
        for (k0, (&a, &b)) in self.cos.iter().zip(&self.sin).enumerate() {
            rot *= step;
            let k = (k0 + 1) as f64;
            let (c, s) = (rot.re, rot.im);
            x += a * c + b * s;
            dx += k * (b * c - a * s);
            ddx -= k * k * (a * c + b * s);
        }
        (x, dx, ddx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_family_derivatives() {
        let traj = ReferenceTrajectory::cosine(0.5).unwrap();
        let (phi, dphi, ddphi) = traj.eval(PI / 2.0);
        assert!((phi - PI).abs() < 1e-15);
        assert!((dphi - 0.5).abs() < 1e-15);
        assert!(ddphi.abs() < 1e-15);
        assert_eq!(traj.initial_condition(), (PI - 0.5, 0.0));
    }

    #[test]
    fn cosine_amplitude_out_of_range() {
        assert!(matches!(ReferenceTrajectory::cosine(1.6), Err(Error::Domain(_))));
    }

    #[test]
    fn sampled_reproduces_smooth_function_and_derivatives() {
        let n = 64;
        let f = |t: f64| PI + 0.3 * t.sin() - 0.2 * (2.0 * t).cos();
        let samples = (0..n).map(|j| f(TAU * j as f64 / n as f64)).collect();
        let traj = ReferenceTrajectory::sampled(samples).unwrap();
        for &t in &[0.1, 1.3, 2.9, 5.5] {
            let (x, dx, ddx) = traj.eval(t);
            assert!((x - f(t)).abs() < 1e-12);
            assert!((dx - (0.3 * t.cos() + 0.4 * (2.0 * t).sin())).abs() < 1e-11);
            assert!((ddx - (-0.3 * t.sin() + 0.8 * (2.0 * t).cos())).abs() < 1e-10);
        }
    }

    #[test]
    fn sampled_interpolates_nodes_with_nyquist_mode() {
        let samples: Vec<f64> = (0..8).map(|j| PI + if j % 2 == 0 { 0.1 } else { -0.1 }).collect();
        let traj = ReferenceTrajectory::sampled(samples.clone()).unwrap();
        for (j, s) in samples.iter().enumerate() {
            let t = TAU * j as f64 / 8.0;
            assert!((traj.phi(t) - s).abs() < 1e-13);
        }
    }

    #[test]
    fn too_few_samples() {
        assert!(ReferenceTrajectory::sampled(vec![PI; 4]).is_err());
    }

    #[test]
    fn falling_samples_rejected() {
        let samples = (0..16).map(|j| if j == 3 { 1.0 } else { PI }).collect();
        assert!(matches!(ReferenceTrajectory::sampled(samples), Err(Error::Domain(_))));
    }

    #[test]
    fn json_round_trip() {
        let traj = ReferenceTrajectory::sampled((0..8).map(|j| PI + 0.01 * j as f64).collect()).unwrap();
        let json = serde_json::to_string(&traj).unwrap();
        assert!(json.contains("\"kind\":\"sampled\""));
        let back: ReferenceTrajectory = serde_json::from_str(&json).unwrap();
        assert_eq!(back, traj);
    }
}
