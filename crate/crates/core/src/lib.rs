//! Periodic non-falling solutions of an inverted pendulum with a vertically
//! vibrating pivot and a 2π-periodic horizontal force.
//!
//! The crate is organised bottom-up:
//!
//! * [`dynamics`]: original and averaged vector fields, force models, the
//!   inverse-force construction for prescribed trajectories.
//! * [`integrate`]: adaptive Dormand–Prince and fixed-step RK4 with optional
//!   variational matrix.
//! * [`orbits`]: period-map residual, Newton refinement, monodromy and
//!   Floquet multipliers, grid seeding.
//! * [`analysis`]: stability rasters, critical amplitude bisection and
//!   continuation, bifurcation scans, averaged vs original comparison.
//! * [`conditions`]: closed-form sufficient conditions and bounds.

pub mod analysis;
pub mod conditions;
pub mod dynamics;
pub mod error;
pub mod integrate;
pub mod orbits;

pub use dynamics::{Field, Forcing, Params, ReferenceTrajectory, State};
pub use error::{Error, Result};
pub use integrate::{FlowResult, IntegratorConfig};
pub use orbits::{PeriodicOrbit, SearchBox, Stability};
