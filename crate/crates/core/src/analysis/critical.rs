use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::chart::{check_axis, ChartCell, ChartMetadata, ChartMode, OrbitSummary, StabilityChart, Verdict};
use crate::dynamics::{Field, Forcing, Params};
use crate::error::{Error, Result};
use crate::integrate::IntegratorConfig;
use crate::orbits::{newton_refine, PeriodicOrbit, Stability};

/// Bracket width at which bisection on a stops.
pub const BISECTION_TOL: f64 = 1e-4;
/// Spacing of the probes used to establish a stability bracket in a.
pub const PROBE_STEP: f64 = 0.05;
pub const MAX_PROBES: usize = 40;
/// Default step of the continuation in A.
pub const CONTINUATION_STEP: f64 = 0.01;
/// Smallest step in A tried before the continuation is declared broken.
pub const MIN_CONTINUATION_STEP: f64 = 1e-4;
/// At A = 0 the bracket search starts here and probes downwards.
pub const ANCHOR_PROBE_START: f64 = 2.0;
/// Halvings tried when an orbit is continued in a.
const MAX_A_HALVINGS: usize = 20;

/// One-parameter family of forces F(t; A) = A · shape(t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcingFamily {
    pub shape: Forcing,
}

impl Default for ForcingFamily {
    /// F(t; A) = A cos t.
    fn default() -> Self {
        ForcingFamily { shape: Forcing::harmonic(1.0, 0.0) }
    }
}

impl ForcingFamily {
    pub fn new(shape: Forcing) -> Result<Self> {
        shape.validate()?;
        if matches!(shape, Forcing::InverseDerived { .. }) {
            return Err(Error::InvalidArgument("a forcing family cannot be built on an inverse-derived force".into()));
        }
        Ok(ForcingFamily { shape })
    }

    pub fn at(&self, amplitude: f64) -> Result<Forcing> {
        self.shape.scaled(amplitude)
    }

    pub fn id(&self) -> &'static str {
        self.shape.family_id()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    #[serde(rename = "A")]
    pub amplitude: f64,
    pub a_star: f64,
    /// (a_lo, a_hi): the continued orbit is Stable at a_hi and not at a_lo.
    pub bracket: (f64, f64),
    pub orbit_at_a_hi: PeriodicOrbit,
}

fn refine_at(
    amplitude: f64,
    a: f64,
    mu: f64,
    family: &ForcingFamily,
    seed: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<PeriodicOrbit> {
    let f = family.at(amplitude)?;
    newton_refine(seed, Field::Averaged, &Params::new(mu, a), &f, cfg)
}

/// Follows an orbit from (a_from, seed) to a_to, halving the step in a
/// whenever Newton fails.
fn continue_in_a(
    amplitude: f64,
    mu: f64,
    family: &ForcingFamily,
    seed: (f64, f64),
    a_from: f64,
    a_to: f64,
    cfg: &IntegratorConfig,
) -> Result<PeriodicOrbit> {
    let mut x = seed;
    let mut a = a_from;
    let mut step = a_to - a_from;
    let mut halvings = 0;
    loop {
        let target = if (a_to - a).abs() <= step.abs() { a_to } else { a + step };
        match refine_at(amplitude, target, mu, family, x, cfg) {
            Ok(orbit) if target == a_to => return Ok(orbit),
            Ok(orbit) => {
                x = (orbit.phi0, orbit.p0);
                a = target;
            }
            Err(_) if halvings < MAX_A_HALVINGS => {
                step *= 0.5;
                halvings += 1;
            }
            Err(_) => return Err(Error::LostOrbit { a: target }),
        }
    }
}

fn is_stable(o: &PeriodicOrbit) -> bool {
    o.stability == Stability::Stable
}

/// Bisection on a for the amplitude where the orbit continued from `seed`
/// changes stability. The orbit must be Stable at `a_hi` and not at `a_lo`.
pub fn critical_a_bisect(
    amplitude: f64,
    mu: f64,
    family: &ForcingFamily,
    (a_lo, a_hi): (f64, f64),
    seed: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<CriticalPoint> {
    let invalid = |reason: String| Error::InvalidBracket { a_lo, a_hi, reason };
    if !(a_lo.is_finite() && a_hi.is_finite() && a_lo >= 0.0 && a_lo < a_hi) {
        return Err(invalid("need 0 <= a_lo < a_hi".into()));
    }
    let mut hi_orbit = refine_at(amplitude, a_hi, mu, family, seed, cfg)
        .map_err(|e| invalid(format!("no orbit at a_hi: {e}")))?;
    if !is_stable(&hi_orbit) {
        return Err(invalid(format!("orbit at a_hi is {}", hi_orbit.stability)));
    }
    let lo_orbit = continue_in_a(amplitude, mu, family, (hi_orbit.phi0, hi_orbit.p0), a_hi, a_lo, cfg)?;
    if is_stable(&lo_orbit) {
        return Err(invalid("continued orbit is Stable at a_lo".into()));
    }

    let (mut lo, mut hi) = (a_lo, a_hi);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        let orbit = continue_in_a(amplitude, mu, family, (hi_orbit.phi0, hi_orbit.p0), hi, mid, cfg)?;
        if is_stable(&orbit) {
            hi = mid;
            hi_orbit = orbit;
        } else {
            lo = mid;
        }
    }
    Ok(CriticalPoint { amplitude, a_star: 0.5 * (lo + hi), bracket: (lo, hi), orbit_at_a_hi: hi_orbit })
}

/// Probes a in steps of [`PROBE_STEP`] from `a_start` until the continued
/// orbit changes stability; returns the bracket and the Stable-end seed.
fn find_bracket(
    amplitude: f64,
    mu: f64,
    family: &ForcingFamily,
    a_start: f64,
    seed: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<((f64, f64), (f64, f64))> {
    let breakdown = || Error::ContinuationBreakdown { amplitude };
    let first = refine_at(amplitude, a_start, mu, family, seed, cfg).map_err(|_| breakdown())?;
    let start_stable = is_stable(&first);
    let dir = if start_stable { -1.0 } else { 1.0 };
    let (mut a, mut prev) = (a_start, first);
    for _ in 0..MAX_PROBES {
        let next_a = a + dir * PROBE_STEP;
        if next_a < 0.0 {
            break;
        }
        let Ok(next) = continue_in_a(amplitude, mu, family, (prev.phi0, prev.p0), a, next_a, cfg) else {
            break;
        };
        if is_stable(&next) != start_stable {
            return Ok(if start_stable {
                ((next_a, a), (prev.phi0, prev.p0))
            } else {
                ((a, next_a), (next.phi0, next.p0))
            });
        }
        a = next_a;
        prev = next;
    }
    Err(breakdown())
}

/// Critical points along A up to the first failure, if any.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveTrace {
    pub mu: f64,
    pub family: ForcingFamily,
    pub points: Vec<CriticalPoint>,
    /// A at which the continuation broke down.
    pub breakdown: Option<f64>,
    pub elapsed_seconds: f64,
}

impl CurveTrace {
    pub fn is_complete(&self) -> bool {
        self.breakdown.is_none()
    }

    /// The traced part as a `CriticalCurve` chart; `a_values` is left empty
    /// because a is the output, not an axis.
    pub fn chart(&self, cfg: &IntegratorConfig) -> StabilityChart {
        let mut metadata = ChartMetadata::new(self.mu, self.family.id(), cfg);
        metadata.elapsed_seconds = self.elapsed_seconds;
        StabilityChart {
            mode: ChartMode::CriticalCurve,
            amplitudes: self.points.iter().map(|p| p.amplitude).collect(),
            a_values: Vec::new(),
            cells: self
                .points
                .iter()
                .map(|p| ChartCell {
                    amplitude: p.amplitude,
                    a: p.a_star,
                    verdict: Verdict::Stable,
                    orbit: Some(OrbitSummary::from(&p.orbit_at_a_hi)),
                    message: None,
                })
                .collect(),
            metadata,
        }
    }
}

/// Traces a*(A) by natural-parameter continuation from the anchor A = 0,
/// keeping whatever was computed before a breakdown.
pub fn trace_critical_curve(amplitudes: &[f64], mu: f64, family: &ForcingFamily, cfg: &IntegratorConfig) -> Result<CurveTrace> {
    check_axis("A", amplitudes)?;
    if amplitudes[0] != 0.0 {
        return Err(Error::InvalidArgument("the A grid must start at 0".into()));
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::InvalidArgument(format!("critical curve needs mu > 0, got {mu}")));
    }
    cfg.validate()?;
    let start = std::time::Instant::now();
    let mut trace = CurveTrace { mu, family: family.clone(), points: Vec::new(), breakdown: None, elapsed_seconds: 0.0 };

    let anchor = find_bracket(0.0, mu, family, ANCHOR_PROBE_START, (PI, 0.0), cfg)
        .and_then(|(bracket, seed)| critical_a_bisect(0.0, mu, family, bracket, seed, cfg));
    match anchor {
        Ok(p) => trace.points.push(p),
        Err(_) => {
            trace.breakdown = Some(0.0);
            trace.elapsed_seconds = start.elapsed().as_secs_f64();
            return Ok(trace);
        }
    }

    for &target in &amplitudes[1..] {
        let prev = trace.points.last().expect("anchor present");
        match next_point(prev, target, mu, family, cfg) {
            Ok(p) => trace.points.push(p),
            Err(_) => {
                trace.breakdown = Some(target);
                break;
            }
        }
    }
    trace.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(trace)
}

fn next_point(
    prev: &CriticalPoint,
    target: f64,
    mu: f64,
    family: &ForcingFamily,
    cfg: &IntegratorConfig,
) -> Result<CriticalPoint> {
    let a_hi = prev.bracket.1;
    let mut x = (prev.orbit_at_a_hi.phi0, prev.orbit_at_a_hi.p0);
    let mut amp = prev.amplitude;
    let mut step = CONTINUATION_STEP;
    while amp < target {
        let next = (amp + step).min(target);
        match refine_at(next, a_hi, mu, family, x, cfg) {
            Ok(o) => {
                x = (o.phi0, o.p0);
                amp = next;
                step = (2.0 * step).min(CONTINUATION_STEP);
            }
            Err(_) => {
                step *= 0.5;
                if step < MIN_CONTINUATION_STEP {
                    return Err(Error::ContinuationBreakdown { amplitude: next });
                }
            }
        }
    }
    let (bracket, seed) = find_bracket(target, mu, family, a_hi, x, cfg)?;
    critical_a_bisect(target, mu, family, bracket, seed, cfg).map_err(|_| Error::ContinuationBreakdown { amplitude: target })
}

/// [`trace_critical_curve`] that fails with `ContinuationBreakdown` instead of
/// returning a partial curve.
pub fn critical_a_curve(amplitudes: &[f64], mu: f64, family: &ForcingFamily, cfg: &IntegratorConfig) -> Result<StabilityChart> {
    let trace = trace_critical_curve(amplitudes, mu, family, cfg)?;
    match trace.breakdown {
        Some(amplitude) => Err(Error::ContinuationBreakdown { amplitude }),
        None => Ok(trace.chart(cfg)),
    }
}
