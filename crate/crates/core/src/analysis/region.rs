use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;

use super::chart::{check_axis, ChartCell, ChartMetadata, ChartMode, OrbitSummary, StabilityChart, Verdict};
use crate::dynamics::{inverse_force, Field, Params, ReferenceTrajectory};
use crate::error::{Error, Result};
use crate::integrate::{monodromy_along, IntegratorConfig};
use crate::orbits::{multipliers, residual_phi, Stability, RESIDUAL_TOL};

/// Classifies the prescribed orbit φ(t) = π − A cos t on an (A, a) grid.
///
/// Each cell derives the force that makes φ a solution, integrates the
/// variational equation along it and classifies the multipliers. Stable
/// cells additionally get their shooting residual checked at 1e-10.
pub fn stability_region(amplitudes: &[f64], a_values: &[f64], mu: f64, cfg: &IntegratorConfig) -> Result<StabilityChart> {
    check_axis("A", amplitudes)?;
    check_axis("a", a_values)?;
    if amplitudes.iter().any(|x| x.abs() >= FRAC_PI_2) {
        return Err(Error::InvalidArgument("A values must satisfy |A| < pi/2".into()));
    }
    if a_values.iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidArgument("a values must be >= 0".into()));
    }
    Params::new(mu, 0.0).validate()?;
    cfg.validate()?;

    let start = std::time::Instant::now();
    let n_a = a_values.len();
    let cells: Vec<ChartCell> = (0..amplitudes.len() * n_a)
        .into_par_iter()
        .map(|idx| region_cell(amplitudes[idx / n_a], a_values[idx % n_a], mu, cfg))
        .collect();
    let mut metadata = ChartMetadata::new(mu, "inverse_derived", cfg);
    metadata.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(StabilityChart {
        mode: ChartMode::RegionGrid,
        amplitudes: amplitudes.to_vec(),
        a_values: a_values.to_vec(),
        cells,
        metadata,
    })
}

fn region_cell(amplitude: f64, a: f64, mu: f64, cfg: &IntegratorConfig) -> ChartCell {
    let mut cell = ChartCell { amplitude, a, verdict: Verdict::Failed, orbit: None, message: None };
    let params = Params::new(mu, a);
    let prepared = ReferenceTrajectory::cosine(amplitude).and_then(|traj| {
        let f = inverse_force(&traj, &params)?;
        Ok((traj, f))
    });
    let (traj, f) = match prepared {
        Ok(x) => x,
        Err(e) => {
            cell.verdict = Verdict::NoOrbit;
            cell.message = Some(e.to_string());
            return cell;
        }
    };
    let m = match monodromy_along(&traj, &params, &f, cfg) {
        Ok(m) => m,
        Err(e) => {
            cell.message = Some(e.to_string());
            return cell;
        }
    };
    let mults = multipliers(&m);
    let stability = Stability::classify(&mults);
    let (phi0, p0) = traj.initial_condition();
    let mut summary = OrbitSummary {
        phi0,
        p0,
        residual: None,
        max_multiplier_abs: mults[0].norm().max(mults[1].norm()),
    };
    if stability == Stability::Stable {
        let tight = cfg.with_tol(cfg.rel_tol.min(IntegratorConfig::refine().rel_tol));
        match residual_phi(phi0, p0, Field::Averaged, &params, &f, &tight) {
            Ok(r) if r < RESIDUAL_TOL => summary.residual = Some(r),
            Ok(r) => {
                cell.message = Some(format!("stable multipliers but shooting residual {r:e}"));
                return cell;
            }
            Err(e) => {
                cell.message = Some(e.to_string());
                return cell;
            }
        }
    }
    cell.verdict = stability.into();
    cell.orbit = Some(summary);
    cell
}
