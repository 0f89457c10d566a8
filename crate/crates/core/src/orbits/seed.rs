//! Grid seeding of the Newton search over the search box.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{finish_orbit, newton_domain, newton_iterate, residual_phi, PeriodicOrbit, SearchBox, DEDUP_TOL};
use crate::dynamics::{Field, Forcing, Params};
use crate::error::{Error, Result};
use crate::integrate::IntegratorConfig;

/// Residual local minima above this are not used as Newton seeds.
pub const SEED_THRESHOLD: f64 = 0.5;
const MAX_DEFLATION_ROUNDS: usize = 4;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeedDiagnostics {
    pub grid_points: usize,
    /// Grid points where the residual could not be evaluated.
    pub grid_failures: usize,
    pub seeds: usize,
    /// Failed refinements by error kind.
    pub dropped: BTreeMap<String, usize>,
    /// Orbits that only showed up once known ones were deflated.
    pub found_by_deflation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedScan {
    /// Distinct orbits sorted by (φ₀, p₀).
    pub orbits: Vec<PeriodicOrbit>,
    pub diagnostics: SeedDiagnostics,
}

/// Evaluates the shooting residual on an `n_phi × n_p` cell-centred grid,
/// refines every local minimum below [`SEED_THRESHOLD`] and returns the
/// distinct orbits.
///
/// After the plain Newton pass, each seed is run again with the known orbits
/// deflated, which separates orbits closer together than the grid spacing.
pub fn seed_grid(
    bx: &SearchBox,
    n_phi: usize,
    n_p: usize,
    field: Field,
    params: &Params,
    f: &Forcing,
    cfg: &IntegratorConfig,
) -> Result<SeedScan> {
    if n_phi < 8 || n_p < 8 {
        return Err(Error::InvalidArgument(format!("grid must be at least 8x8, got {n_phi}x{n_p}")));
    }
    bx.validate()?;
    params.validate()?;
    f.check_params(params)?;
    cfg.validate()?;

    let scan_cfg = cfg.with_tol(cfg.rel_tol.max(IntegratorConfig::scan().rel_tol));
    let dphi = (bx.phi_max - bx.phi_min) / n_phi as f64;
    let dp = (bx.p_max - bx.p_min) / n_p as f64;
    let point = |i: usize, j: usize| (bx.phi_min + (i as f64 + 0.5) * dphi, bx.p_min + (j as f64 + 0.5) * dp);

    let residuals: Vec<Option<f64>> = (0..n_phi * n_p)
        .into_par_iter()
        .map(|idx| {
            let (phi, p) = point(idx / n_p, idx % n_p);
            residual_phi(phi, p, field, params, f, &scan_cfg).ok().filter(|r| r.is_finite())
        })
        .collect();

    let mut diagnostics = SeedDiagnostics {
        grid_points: residuals.len(),
        grid_failures: residuals.iter().filter(|r| r.is_none()).count(),
        ..SeedDiagnostics::default()
    };

    let value = |i: usize, j: usize| residuals[i * n_p + j].unwrap_or(f64::INFINITY);
    let mut seeds = Vec::new();
    for i in 0..n_phi {
        for j in 0..n_p {
            let r = value(i, j);
            if !(r < SEED_THRESHOLD) {
                continue;
            }
            let mut is_min = true;
            'nb: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 || ni >= n_phi as i64 || nj >= n_p as i64 {
                        continue;
                    }
                    if value(ni as usize, nj as usize) <= r {
                        is_min = false;
                        break 'nb;
                    }
                }
            }
            if is_min {
                seeds.push(point(i, j));
            }
        }
    }
    diagnostics.seeds = seeds.len();

    let domain = newton_domain(params, f);
    let mut roots: Vec<(f64, f64)> = Vec::new();
    let mut orbits: Vec<PeriodicOrbit> = Vec::new();
    let accept = |x: (f64, f64),
                      residual: f64,
                      m,
                      roots: &mut Vec<(f64, f64)>,
                      orbits: &mut Vec<PeriodicOrbit>,
                      diagnostics: &mut SeedDiagnostics|
     -> bool {
        if roots.iter().any(|r| same_point(*r, x)) {
            return false;
        }
        roots.push(x);
        match finish_orbit(x, residual, m, field, params, f, cfg) {
            Ok(orbit) => {
                orbits.push(orbit);
                true
            }
            Err(e) => {
                *diagnostics.dropped.entry(e.kind().to_string()).or_default() += 1;
                false
            }
        }
    };

    let plain: Vec<_> = seeds
        .par_iter()
        .map(|&s| newton_iterate(s, field, params, f, cfg, &domain, &[]))
        .collect();
    for r in plain {
        match r {
            Ok((x, residual, m)) => {
                accept(x, residual, m, &mut roots, &mut orbits, &mut diagnostics);
            }
            Err(e) => *diagnostics.dropped.entry(e.kind().to_string()).or_default() += 1,
        }
    }

    for _ in 0..MAX_DEFLATION_ROUNDS {
        if roots.is_empty() {
            break;
        }
        let known = roots.clone();
        let mut starts = seeds.clone();
        for &(rp, rq) in &known {
            for (sp, sq) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
                starts.push((rp + 0.5 * sp * dphi, rq + 0.5 * sq * dp));
            }
        }
        let found: Vec<_> = starts
            .par_iter()
            .filter_map(|&s| {
                let (x, _, _) = newton_iterate(s, field, params, f, cfg, &domain, &known).ok()?;
                if known.iter().any(|r| same_point(*r, x)) {
                    return None;
                }
                // Polish without deflation so the stored data matches plain Newton.
                newton_iterate(x, field, params, f, cfg, &domain, &[]).ok()
            })
            .collect();
        let mut added = 0;
        for (x, residual, m) in found {
            if accept(x, residual, m, &mut roots, &mut orbits, &mut diagnostics) {
                added += 1;
            }
        }
        diagnostics.found_by_deflation += added;
        if added == 0 {
            break;
        }
    }

    orbits.sort_by(|a, b| a.phi0.total_cmp(&b.phi0).then(a.p0.total_cmp(&b.p0)));
    Ok(SeedScan { orbits, diagnostics })
}

fn same_point(a: (f64, f64), b: (f64, f64)) -> bool {
    (a.0 - b.0).abs() < DEDUP_TOL && (a.1 - b.1).abs() < DEDUP_TOL
}
