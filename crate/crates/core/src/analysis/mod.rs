//! Parameter studies: stability rasters for prescribed orbits, critical
//! vibration amplitude by bisection and continuation, bifurcation scans and
//! the averaged vs original comparison.

mod averaging;
mod bifurcation;
mod chart;
mod critical;
mod region;
mod svg;

pub use averaging::{averaged_vs_original_check, AveragingReport, COMPARISON_SAMPLES, SEED_RADIUS};
pub use bifurcation::{bifurcation_chart, bifurcation_scan, BifurcationEntry, MIN_SCAN_GRID};
pub use chart::{ChartCell, ChartMetadata, ChartMode, OrbitSummary, StabilityChart, Verdict};
pub use critical::{
    critical_a_bisect, critical_a_curve, trace_critical_curve, CriticalPoint, CurveTrace, ForcingFamily,
    ANCHOR_PROBE_START, BISECTION_TOL, CONTINUATION_STEP, MAX_PROBES, MIN_CONTINUATION_STEP, PROBE_STEP,
};
pub use region::stability_region;
pub use svg::render_curves;
