use serde::{Deserialize, Serialize};

use super::chart::{ChartCell, ChartMetadata, ChartMode, OrbitSummary, StabilityChart, Verdict};
use super::critical::ForcingFamily;
use crate::dynamics::{Field, Params};
use crate::error::{Error, Result};
use crate::integrate::IntegratorConfig;
use crate::orbits::{seed_grid, PeriodicOrbit, SearchBox, SeedDiagnostics, Stability};

/// Smallest grid accepted by [`bifurcation_scan`].
pub const MIN_SCAN_GRID: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationEntry {
    pub a: f64,
    pub orbits: Vec<PeriodicOrbit>,
    pub diagnostics: SeedDiagnostics,
}

impl BifurcationEntry {
    pub fn count(&self, s: Stability) -> usize {
        self.orbits.iter().filter(|o| o.stability == s).count()
    }
}

/// All non-falling 2π-periodic orbits of the averaged system for each a.
pub fn bifurcation_scan(
    amplitude: f64,
    mu: f64,
    a_list: &[f64],
    family: &ForcingFamily,
    (n_phi, n_p): (usize, usize),
    cfg: &IntegratorConfig,
) -> Result<Vec<BifurcationEntry>> {
    if n_phi < MIN_SCAN_GRID || n_p < MIN_SCAN_GRID {
        return Err(Error::InvalidArgument(format!("scan grid must be at least {MIN_SCAN_GRID}x{MIN_SCAN_GRID}")));
    }
    if a_list.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidArgument("a values must be finite".into()));
    }
    let f = family.at(amplitude)?;
    a_list
        .iter()
        .map(|&a| {
            let params = Params::new(mu, a);
            let bx = SearchBox::for_problem(&params, &f)?;
            let scan = seed_grid(&bx, n_phi, n_p, Field::Averaged, &params, &f, cfg)?;
            Ok(BifurcationEntry { a, orbits: scan.orbits, diagnostics: scan.diagnostics })
        })
        .collect()
}

/// One chart cell per orbit found; a values without orbits get a `NoOrbit`
/// cell.
pub fn bifurcation_chart(
    amplitude: f64,
    mu: f64,
    family: &ForcingFamily,
    entries: &[BifurcationEntry],
    cfg: &IntegratorConfig,
) -> StabilityChart {
    let mut cells = Vec::new();
    for e in entries {
        if e.orbits.is_empty() {
            cells.push(ChartCell { amplitude, a: e.a, verdict: Verdict::NoOrbit, orbit: None, message: None });
        }
        for o in &e.orbits {
            cells.push(ChartCell {
                amplitude,
                a: e.a,
                verdict: o.stability.into(),
                orbit: Some(OrbitSummary::from(o)),
                message: None,
            });
        }
    }
    let mut a_values: Vec<f64> = entries.iter().map(|e| e.a).collect();
    a_values.sort_by(f64::total_cmp);
    a_values.dedup();
    StabilityChart {
        mode: ChartMode::BifurcationScan,
        amplitudes: vec![amplitude],
        a_values,
        cells,
        metadata: ChartMetadata::new(mu, family.id(), cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grid_rejected() {
        let r = bifurcation_scan(0.0, 1.0, &[2.0], &ForcingFamily::default(), (16, 64), &IntegratorConfig::refine());
        assert!(r.is_err());
    }

    #[test]
    fn unforced_scan_has_one_stable_orbit() {
        let cfg = IntegratorConfig::refine();
        let entries = bifurcation_scan(0.0, 1.0, &[2.0], &ForcingFamily::default(), (32, 32), &cfg).unwrap();
        assert_eq!(entries[0].count(Stability::Stable), 1);
        let chart = bifurcation_chart(0.0, 1.0, &ForcingFamily::default(), &entries, &cfg);
        assert_eq!(chart.cells.len(), entries[0].orbits.len());
    }
}
