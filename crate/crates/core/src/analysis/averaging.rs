use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Field, State};
use crate::error::{Error, Result};
use crate::integrate::{flow, IntegratorConfig};
use crate::orbits::{newton_refine, PeriodicOrbit, Stability};

/// Times per period at which the two orbits are compared.
pub const COMPARISON_SAMPLES: usize = 4096;
/// The original-system orbit must lie this close to its seed.
pub const SEED_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragingReport {
    pub k: u32,
    /// |x_original(0) − x_averaged(0)|.
    pub seed_distance: f64,
    /// max over t of |x_original(t) − x_averaged(t)| in the (φ, p) plane.
    pub sup_distance: f64,
    pub stability_agrees: bool,
    pub averaged_stability: Stability,
    pub original: PeriodicOrbit,
}

/// Refines the original system (ε = 1/k) from the initial condition of an
/// averaged-system orbit and compares the two.
pub fn averaged_vs_original_check(orbit: &PeriodicOrbit, k: u32, cfg: &IntegratorConfig) -> Result<AveragingReport> {
    if orbit.field != Field::Averaged {
        return Err(Error::InvalidArgument("expected an orbit of the averaged system".into()));
    }
    if k < 10 {
        return Err(Error::InvalidArgument(format!("k must be >= 10, got {k}")));
    }
    let params = orbit.params.with_k(k);
    let seed = (orbit.phi0, orbit.p0);
    let original = newton_refine(seed, Field::Original, &params, &orbit.forcing, cfg)?;
    let seed_distance = (original.phi0 - seed.0).hypot(original.p0 - seed.1);
    if seed_distance > SEED_RADIUS {
        return Err(Error::NoConvergence { iterations: 0, residual: seed_distance });
    }

    let times: Vec<f64> = (0..COMPARISON_SAMPLES).map(|j| TAU * j as f64 / COMPARISON_SAMPLES as f64).collect();
    let avg = flow(&orbit.initial_state(), TAU, Field::Averaged, &orbit.params, &orbit.forcing, cfg, false, Some(&times))?;
    let orig = flow(
        &State::new(original.phi0, original.p0, 0.0),
        TAU,
        Field::Original,
        &params,
        &orbit.forcing,
        cfg,
        false,
        Some(&times),
    )?;
    let sup_distance = avg
        .dense_samples
        .unwrap_or_default()
        .iter()
        .zip(orig.dense_samples.unwrap_or_default())
        .map(|(x, y)| (x.1 - y.1).hypot(x.2 - y.2))
        .fold(0.0, f64::max);

    Ok(AveragingReport {
        k,
        seed_distance,
        sup_distance,
        stability_agrees: original.stability == orbit.stability,
        averaged_stability: orbit.stability,
        original,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Forcing, Params};
    use std::f64::consts::PI;

    #[test]
    fn unforced_equilibrium_is_shared() {
        let cfg = IntegratorConfig::refine();
        let avg = newton_refine((PI, 0.0), Field::Averaged, &Params::new(1.0, 2.0), &Forcing::Zero, &cfg).unwrap();
        let rep = averaged_vs_original_check(&avg, 50, &cfg).unwrap();
        assert!(rep.seed_distance < 1e-9 && rep.sup_distance < 1e-9);
        assert!(rep.stability_agrees);
    }

    #[test]
    fn small_k_rejected() {
        let cfg = IntegratorConfig::refine();
        let avg = newton_refine((PI, 0.0), Field::Averaged, &Params::new(1.0, 2.0), &Forcing::Zero, &cfg).unwrap();
        assert!(averaged_vs_original_check(&avg, 5, &cfg).is_err());
    }
}
