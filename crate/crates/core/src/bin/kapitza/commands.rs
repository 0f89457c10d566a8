use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use kapitza::analysis::{
    bifurcation_chart, bifurcation_scan, render_curves, stability_region, trace_critical_curve, ForcingFamily, Verdict,
};
use kapitza::conditions::{critical_angles, momentum_bound, prop1_condition, resonance_check, torres_check};
use kapitza::dynamics::inverse_force as derive_force;
use kapitza::integrate::{flow, flow_fixed_sampled};
use kapitza::orbits::{newton_refine, seed_grid};
use kapitza::{IntegratorConfig, Params, PeriodicOrbit, ReferenceTrajectory, SearchBox, State};

use crate::config::*;

/// `println!` that ignores a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

/// Share of region cells that must be computed for a run to count as
/// complete.
const REGION_MIN_COMPUTED: f64 = 0.99;

pub struct Context {
    pub out: PathBuf,
    pub tol: Option<f64>,
    pub command: &'static str,
}

impl Context {
    fn integrator(&self, base: IntegratorConfig) -> IntegratorConfig {
        match self.tol {
            Some(t) => base.with_tol(t),
            None => base,
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let p = self.path(name);
        std::fs::write(&p, contents).map_err(|e| CliError::io(&p, e))
    }

    fn write_json<T: Serialize>(&self, name: &str, v: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(v).map_err(|e| CliError::numerical(e.to_string()))?;
        self.write(name, &(text + "\n"))
    }

    /// Creates the output directory, runs `body` and records the resolved
    /// configuration and outcome in `manifest.json`.
    fn execute<C: Serialize>(&self, cfg: &C, body: impl FnOnce() -> Result<i32, CliError>) -> Result<i32, CliError> {
        std::fs::create_dir_all(&self.out).map_err(|e| CliError::io(&self.out, e))?;
        let result = body();
        let (code, status) = match &result {
            Ok(0) => (0, "ok".to_string()),
            Ok(c) => (*c, "partial".to_string()),
            Err(e) => (e.code, e.message.clone()),
        };
        let manifest = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "tol": self.tol,
            "config": cfg,
            "exit_code": code,
            "status": status,
        });
        self.write_json("manifest.json", &manifest)?;
        result
    }
}

fn trajectory_csv(rows: &[(f64, f64, f64)]) -> String {
    let mut out = String::from("t,phi,p\n");
    for (t, phi, p) in rows {
        let _ = writeln!(out, "{t},{phi},{p}");
    }
    out
}

fn params_for(mu: f64, a: f64, k: Option<u32>) -> Result<Params, CliError> {
    let mut params = Params::new(mu, a);
    if let Some(k) = k {
        params = params.with_k(k);
    }
    params.validate()?;
    Ok(params)
}

pub fn simulate(ctx: &Context, cfg: SimulateConfig) -> Result<i32, CliError> {
    let k = cfg.validate()?;
    let params = params_for(cfg.mu, cfg.a, k)?;
    cfg.forcing.check_params(&params)?;
    let integ = ctx.integrator(IntegratorConfig::refine());
    ctx.execute(&cfg, || {
        let s0 = State::new(cfg.phi0, cfg.p0, cfg.t0);
        let rows = match cfg.fixed_steps {
            Some(n) => {
                let every = n / (cfg.samples - 1);
                flow_fixed_sampled(&s0, cfg.duration, n, cfg.system, &params, &cfg.forcing, Some(every))?
            }
            None => {
                let times = linspace([cfg.t0, cfg.t0 + cfg.duration], cfg.samples);
                flow(&s0, cfg.duration, cfg.system, &params, &cfg.forcing, &integ, false, Some(&times))?
            }
        }
        .dense_samples
        .unwrap_or_default();
        ctx.write("trajectory.csv", &trajectory_csv(&rows))?;
        eprintln!("wrote {} rows to {}", rows.len(), ctx.path("trajectory.csv").display());
        Ok(0)
    })
}

pub fn inverse_force(ctx: &Context, cfg: InverseForceConfig) -> Result<i32, CliError> {
    cfg.validate()?;
    let params = params_for(cfg.mu, cfg.a, None)?;
    let traj = ReferenceTrajectory::cosine(cfg.amplitude)?;
    ctx.execute(&cfg, || {
        let f = derive_force(&traj, &params)?;
        let mut csv = String::from("t,phi,F\n");
        for j in 0..cfg.samples {
            let t = TAU * j as f64 / cfg.samples as f64;
            let _ = writeln!(csv, "{t},{},{}", traj.phi(t), f.value(t));
        }
        ctx.write("inverse_force.csv", &csv)?;
        ctx.write_json("forcing.json", &f)?;
        say!("max |F| = {}", f.max_abs());
        Ok(0)
    })
}

fn orbits_csv(orbits: &[PeriodicOrbit]) -> String {
    let mut out = String::from("phi0,p0,stability,max_multiplier_abs,residual\n");
    for o in orbits {
        let _ = writeln!(out, "{},{},{},{},{}", o.phi0, o.p0, o.stability, o.max_multiplier_abs(), o.residual);
    }
    out
}

pub fn orbits(ctx: &Context, cfg: OrbitsConfig) -> Result<i32, CliError> {
    let k = cfg.validate()?;
    let params = params_for(cfg.mu, cfg.a, k)?;
    cfg.forcing.check_params(&params)?;
    let integ = ctx.integrator(IntegratorConfig::refine());
    ctx.execute(&cfg, || {
        let (orbits, diagnostics) = match cfg.seed {
            Some([phi, p]) => {
                let o = newton_refine((phi, p), cfg.system, &params, &cfg.forcing, &integ)?;
                (vec![o], Value::Null)
            }
            None => {
                let bx = SearchBox::for_problem(&params, &cfg.forcing)?;
                let scan = seed_grid(&bx, cfg.grid, cfg.grid, cfg.system, &params, &cfg.forcing, &integ)?;
                (scan.orbits, serde_json::to_value(scan.diagnostics).unwrap_or(Value::Null))
            }
        };
        ctx.write_json("orbits.json", &json!({ "orbits": orbits, "diagnostics": diagnostics }))?;
        ctx.write("orbits.csv", &orbits_csv(&orbits))?;
        for o in &orbits {
            say!("({:.6}, {:.6}) {} |rho|max = {:.6}", o.phi0, o.p0, o.stability, o.max_multiplier_abs());
        }
        if orbits.is_empty() {
            say!("no periodic orbits found");
        }
        Ok(0)
    })
}

pub fn region(ctx: &Context, cfg: RegionConfig) -> Result<i32, CliError> {
    cfg.validate()?;
    let amps = linspace(cfg.amplitude_range, cfg.n_amplitude);
    let a_values = linspace(cfg.a_range, cfg.n_a);
    let integ = ctx.integrator(IntegratorConfig::scan());
    ctx.execute(&cfg, || {
        let chart = stability_region(&amps, &a_values, cfg.mu, &integ)?;
        ctx.write("region.csv", &chart.to_csv())?;
        ctx.write("region.svg", &chart.to_svg())?;
        ctx.write_json("region.json", &chart)?;
        let failed = chart.count(Verdict::Failed);
        let total = chart.cells.len();
        say!("{} stable / {} cells, {} failed", chart.count(Verdict::Stable), total, failed);
        if (total - failed) as f64 >= REGION_MIN_COMPUTED * total as f64 {
            Ok(0)
        } else {
            eprintln!("only {} of {} cells computed", total - failed, total);
            Ok(EXIT_PARTIAL)
        }
    })
}

fn curve_file(mu: f64, ext: &str) -> String {
    format!("curve_mu{mu}.{ext}")
}

pub fn curve(ctx: &Context, cfg: CurveConfig) -> Result<i32, CliError> {
    cfg.validate()?;
    let family = ForcingFamily::new(cfg.shape.clone())?;
    let amps = cfg.amplitudes();
    let integ = ctx.integrator(IntegratorConfig::refine());
    ctx.execute(&cfg, || {
        let traces = cfg
            .mu
            .par_iter()
            .map(|&mu| trace_critical_curve(&amps, mu, &family, &integ))
            .collect::<Result<Vec<_>, _>>()?;
        let mut charts = Vec::new();
        let mut partial = false;
        for t in &traces {
            let chart = t.chart(&integ);
            ctx.write(&curve_file(t.mu, "csv"), &chart.to_csv())?;
            ctx.write_json(&curve_file(t.mu, "json"), t)?;
            match (t.points.first(), t.breakdown) {
                (Some(p), None) => say!("mu = {}: a*(0) = {:.6}, {} points", t.mu, p.a_star, t.points.len()),
                (Some(p), Some(at)) => {
                    partial = true;
                    eprintln!("mu = {}: a*(0) = {:.6}, continuation broke down at A = {at}", t.mu, p.a_star);
                }
                (None, _) => {
                    partial = true;
                    eprintln!("mu = {}: no critical point at A = 0", t.mu);
                }
            }
            charts.push(chart);
        }
        ctx.write("curves.svg", &render_curves(&charts))?;
        if traces.iter().all(|t| t.points.is_empty()) {
            return Err(CliError::numerical("no curve could be started"));
        }
        Ok(if partial { EXIT_PARTIAL } else { 0 })
    })
}

pub fn bifurcate(ctx: &Context, cfg: BifurcateConfig) -> Result<i32, CliError> {
    let (a_list, removed) = cfg.validate()?;
    if removed > 0 {
        eprintln!("warning: removed {removed} duplicate a value(s)");
    }
    let family = ForcingFamily::new(cfg.shape.clone())?;
    let integ = ctx.integrator(IntegratorConfig::refine());
    ctx.execute(&cfg, || {
        let entries = bifurcation_scan(cfg.amplitude, cfg.mu, &a_list, &family, (cfg.grid, cfg.grid), &integ)?;
        let chart = bifurcation_chart(cfg.amplitude, cfg.mu, &family, &entries, &integ);
        ctx.write_json("bifurcation.json", &entries)?;
        ctx.write("bifurcation.csv", &chart.to_csv())?;
        ctx.write("bifurcation.svg", &chart.to_svg())?;
        for e in &entries {
            let tags: Vec<&str> = e.orbits.iter().map(|o| o.stability.as_str()).collect();
            say!("a = {}: {} orbit(s) [{}]", e.a, e.orbits.len(), tags.join(", "));
        }
        Ok(0)
    })
}

fn or_error<T: Serialize>(r: kapitza::Result<T>) -> Value {
    match r {
        Ok(v) => serde_json::to_value(v).unwrap_or(Value::Null),
        Err(e) => json!({ "error": e.to_string(), "kind": e.kind() }),
    }
}

pub fn check(ctx: &Context, cfg: CheckConfig) -> Result<i32, CliError> {
    let norm_k = cfg.validate()?;
    let params = params_for(cfg.mu, cfg.a, None)?;
    cfg.forcing.check_params(&params)?;
    ctx.execute(&cfg, || {
        let report = json!({
            "prop1_condition": prop1_condition(&params),
            "resonance_check": resonance_check(cfg.a),
            "torres_check": or_error(torres_check(&params, &cfg.forcing, norm_k)),
            "momentum_bound": or_error(momentum_bound(&params, &cfg.forcing).map(|p| json!({ "value": p }))),
            "critical_angles": or_error(critical_angles(cfg.a)),
        });
        ctx.write_json("check.json", &report)?;
        say!("{}", serde_json::to_string_pretty(&report).unwrap_or_default());
        Ok(0)
    })
}
