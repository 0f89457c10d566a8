use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::IntegratorConfig;
use crate::orbits::{PeriodicOrbit, Stability};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChartMode {
    RegionGrid,
    CriticalCurve,
    BifurcationScan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
    NoOrbit,
    Failed,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Stable => "Stable",
            Verdict::Unstable => "Unstable",
            Verdict::Marginal => "Marginal",
            Verdict::NoOrbit => "NoOrbit",
            Verdict::Failed => "Failed",
        }
    }
}

impl From<Stability> for Verdict {
    fn from(s: Stability) -> Self {
        match s {
            Stability::Stable => Verdict::Stable,
            Stability::Unstable => Verdict::Unstable,
            Stability::Marginal => Verdict::Marginal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitSummary {
    pub phi0: f64,
    pub p0: f64,
    /// Shooting residual; `None` when the orbit is known in closed form and
    /// the residual was not evaluated.
    pub residual: Option<f64>,
    pub max_multiplier_abs: f64,
}

impl From<&PeriodicOrbit> for OrbitSummary {
    fn from(o: &PeriodicOrbit) -> Self {
        OrbitSummary { phi0: o.phi0, p0: o.p0, residual: Some(o.residual), max_multiplier_abs: o.max_multiplier_abs() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartCell {
    #[serde(rename = "A")]
    pub amplitude: f64,
    pub a: f64,
    pub verdict: Verdict,
    pub orbit: Option<OrbitSummary>,
    /// Error text for `Failed` and `NoOrbit` cells.
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartMetadata {
    pub mu: f64,
    pub forcing_family: String,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Seconds since the Unix epoch when the chart was computed.
    pub created_unix: u64,
    pub elapsed_seconds: f64,
}

impl ChartMetadata {
    pub fn new(mu: f64, forcing_family: impl Into<String>, cfg: &IntegratorConfig) -> Self {
        let created_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        ChartMetadata {
            mu,
            forcing_family: forcing_family.into(),
            rel_tol: cfg.rel_tol,
            abs_tol: cfg.abs_tol,
            created_unix,
            elapsed_seconds: 0.0,
        }
    }
}

/// Results of a parameter study over (A, a).
///
/// `amplitudes` and `a_values` are the axes. Region grids hold one cell per
/// axis pair in A-major order; curves hold one cell per A with `a` the
/// critical value; bifurcation scans hold one cell per orbit found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityChart {
    pub mode: ChartMode,
    pub amplitudes: Vec<f64>,
    pub a_values: Vec<f64>,
    pub cells: Vec<ChartCell>,
    pub metadata: ChartMetadata,
}

pub(crate) fn check_axis(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidArgument(format!("{name} axis is empty")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("{name} axis has non-finite values")));
    }
    if v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!("{name} axis must be strictly increasing")));
    }
    Ok(())
}

fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

impl StabilityChart {
    /// Cell at (A index, a index) of a region grid.
    pub fn cell(&self, i: usize, j: usize) -> Option<&ChartCell> {
        if self.mode != ChartMode::RegionGrid || i >= self.amplitudes.len() || j >= self.a_values.len() {
            return None;
        }
        self.cells.get(i * self.a_values.len() + j)
    }

    pub fn count(&self, verdict: Verdict) -> usize {
        self.cells.iter().filter(|c| c.verdict == verdict).count()
    }

    /// `A,a,verdict,max_multiplier_abs,phi0,p0`; empty fields where no orbit
    /// is attached.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("A,a,verdict,max_multiplier_abs,phi0,p0\n");
        for c in &self.cells {
            let (m, phi, p) = match &c.orbit {
                Some(o) => (fmt_num(o.max_multiplier_abs), fmt_num(o.phi0), fmt_num(o.p0)),
                None => (String::new(), String::new(), String::new()),
            };
            let _ = writeln!(out, "{},{},{},{},{},{}", fmt_num(c.amplitude), fmt_num(c.a), c.verdict.as_str(), m, phi, p);
        }
        out
    }

    pub fn to_svg(&self) -> String {
        super::svg::render_chart(self)
    }
}
