//! 2π-periodic orbits as fixed points of the period map.

mod seed;

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conditions::momentum_bound;
use crate::dynamics::{is_non_falling, Field, Forcing, Params, State};
use crate::error::{Error, Result};
use crate::integrate::{flow, IntegratorConfig};

pub use seed::{seed_grid, SeedDiagnostics, SeedScan, SEED_THRESHOLD};

/// Newton stops once the shooting residual drops below this.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Distance from the unit circle inside which a multiplier counts as neutral.
pub const STABILITY_MARGIN: f64 = 1e-6;
/// Two orbits are the same when both initial coordinates agree to this.
pub const DEDUP_TOL: f64 = 1e-6;
pub const MAX_NEWTON_ITERATIONS: usize = 50;
/// |det(M − I)| below this is treated as a bifurcation point.
pub const SINGULAR_DET: f64 = 1e-12;
/// Consecutive residual increases tolerated before giving up.
pub const MAX_RESIDUAL_GROWTH: usize = 5;
/// Newton iterates must stay in the search box scaled by 1 + BOX_MARGIN.
pub const BOX_MARGIN: f64 = 0.1;
/// Time samples used to check that an orbit never falls.
pub const ORBIT_CHECK_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

impl Stability {
    pub fn classify(multipliers: &[Complex64; 2]) -> Self {
        let m0 = multipliers[0].norm();
        let m1 = multipliers[1].norm();
        if m0 < 1.0 - STABILITY_MARGIN && m1 < 1.0 - STABILITY_MARGIN {
            Stability::Stable
        } else if m0 > 1.0 + STABILITY_MARGIN || m1 > 1.0 + STABILITY_MARGIN {
            Stability::Unstable
        } else {
            Stability::Marginal
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Stability::Stable => "Stable",
            Stability::Unstable => "Unstable",
            Stability::Marginal => "Marginal",
        }
    }
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Rectangle of initial conditions at t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub phi_min: f64,
    pub phi_max: f64,
    pub p_min: f64,
    pub p_max: f64,
}

impl SearchBox {
    /// φ ∈ [π/2, 3π/2], p ∈ [−P, P].
    pub fn new(p_bound: f64) -> Result<Self> {
        if !(p_bound.is_finite() && p_bound > 0.0) {
            return Err(Error::InvalidArgument(format!("momentum bound must be finite and > 0, got {p_bound}")));
        }
        Ok(SearchBox { phi_min: FRAC_PI_2, phi_max: 3.0 * FRAC_PI_2, p_min: -p_bound, p_max: p_bound })
    }

    /// The box outside which no non-falling periodic orbit can exist.
    pub fn for_problem(params: &Params, f: &Forcing) -> Result<Self> {
        SearchBox::new(momentum_bound(params, f)?)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.phi_min, self.phi_max, self.p_min, self.p_max].iter().all(|x| x.is_finite())
            && self.phi_max > self.phi_min
            && self.p_max > self.p_min;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("degenerate search box {self:?}")))
        }
    }

    /// Scales the box about its centre by 1 + `margin`.
    pub fn enlarged(&self, margin: f64) -> Self {
        let dphi = 0.5 * margin * (self.phi_max - self.phi_min);
        let dp = 0.5 * margin * (self.p_max - self.p_min);
        SearchBox {
            phi_min: self.phi_min - dphi,
            phi_max: self.phi_max + dphi,
            p_min: self.p_min - dp,
            p_max: self.p_max + dp,
        }
    }

    pub fn contains(&self, phi: f64, p: f64) -> bool {
        phi >= self.phi_min && phi <= self.phi_max && p >= self.p_min && p <= self.p_max
    }
}

/// Domain that Newton iterates must stay in: the enlarged search box, or
/// only its angular part when there is no friction to bound p.
fn newton_domain(params: &Params, f: &Forcing) -> SearchBox {
    match SearchBox::for_problem(params, f) {
        Ok(b) => b.enlarged(BOX_MARGIN),
        Err(_) => {
            let dphi = 0.5 * BOX_MARGIN * PI;
            SearchBox {
                phi_min: FRAC_PI_2 - dphi,
                phi_max: 3.0 * FRAC_PI_2 + dphi,
                p_min: f64::NEG_INFINITY,
                p_max: f64::INFINITY,
            }
        }
    }
}

/// A refined 2π-periodic solution together with its Floquet data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub phi0: f64,
    pub p0: f64,
    pub residual: f64,
    #[serde(with = "matrix_row_major")]
    pub monodromy: Matrix2<f64>,
    #[serde(with = "complex_pairs")]
    pub multipliers: [Complex64; 2],
    pub stability: Stability,
    pub field: Field,
    pub params: Params,
    pub forcing: Forcing,
}

impl PeriodicOrbit {
    /// Fills in multipliers and stability from a monodromy matrix.
    pub fn from_monodromy(
        (phi0, p0): (f64, f64),
        residual: f64,
        monodromy: Matrix2<f64>,
        field: Field,
        params: &Params,
        forcing: &Forcing,
    ) -> Self {
        let mults = multipliers(&monodromy);
        PeriodicOrbit {
            phi0,
            p0,
            residual,
            monodromy,
            multipliers: mults,
            stability: Stability::classify(&mults),
            field,
            params: *params,
            forcing: forcing.clone(),
        }
    }

    pub fn max_multiplier_abs(&self) -> f64 {
        self.multipliers[0].norm().max(self.multipliers[1].norm())
    }

    pub fn initial_state(&self) -> State {
        State::new(self.phi0, self.p0, 0.0)
    }

    /// (t, φ, p) at `n` uniformly spaced times in [0, 2π).
    pub fn sample(&self, n: usize, cfg: &IntegratorConfig) -> Result<Vec<(f64, f64, f64)>> {
        sample_orbit((self.phi0, self.p0), n, self.field, &self.params, &self.forcing, cfg)
    }

    pub fn same_as(&self, other: &PeriodicOrbit) -> bool {
        (self.phi0 - other.phi0).abs() < DEDUP_TOL && (self.p0 - other.p0).abs() < DEDUP_TOL
    }
}

fn sample_orbit(
    (phi0, p0): (f64, f64),
    n: usize,
    field: Field,
    params: &Params,
    f: &Forcing,
    cfg: &IntegratorConfig,
) -> Result<Vec<(f64, f64, f64)>> {
    let times: Vec<f64> = (0..n).map(|j| TAU * j as f64 / n as f64).collect();
    let res = flow(&State::new(phi0, p0, 0.0), TAU, field, params, f, cfg, false, Some(&times))?;
    Ok(res.dense_samples.unwrap_or_default())
}

/// Φ(φ₀, p₀) = |flow_2π(φ₀, p₀) − (φ₀, p₀)|.
pub fn residual_phi(phi0: f64, p0: f64, field: Field, params: &Params, f: &Forcing, cfg: &IntegratorConfig) -> Result<f64> {
    if !(phi0.is_finite() && p0.is_finite()) {
        return Err(Error::InvalidArgument("initial condition must be finite".into()));
    }
    let end = flow(&State::new(phi0, p0, 0.0), TAU, field, params, f, cfg, false, None)?.final_state;
    Ok((end.phi - phi0).hypot(end.p - p0))
}

/// ∂flow_2π/∂x at a point of a periodic orbit.
pub fn monodromy(
    (phi0, p0): (f64, f64),
    field: Field,
    params: &Params,
    f: &Forcing,
    cfg: &IntegratorConfig,
) -> Result<Matrix2<f64>> {
    let res = flow(&State::new(phi0, p0, 0.0), TAU, field, params, f, cfg, true, None)?;
    let r = (res.final_state.phi - phi0).hypot(res.final_state.p - p0);
    if !(r < 1e-6) {
        return Err(Error::InvalidArgument(format!(
            "({phi0}, {p0}) is not on a periodic orbit (residual {r:e})"
        )));
    }
    Ok(res.variational.expect("variational requested"))
}

/// Eigenvalues of a 2×2 matrix from its trace and determinant, sorted by
/// descending modulus, then real part, then imaginary part.
pub fn multipliers(m: &Matrix2<f64>) -> [Complex64; 2] {
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let half = 0.5 * tr;
    let disc = half * half - det;
    let mut pair = if disc >= 0.0 {
        let root = disc.sqrt();
        // Avoid cancellation in the smaller root.
        let big = if half >= 0.0 { half + root } else { half - root };
        let small = if big != 0.0 { det / big } else { half - root.copysign(half) };
        [Complex64::new(big, 0.0), Complex64::new(small, 0.0)]
    } else {
        let im = (-disc).sqrt();
        [Complex64::new(half, im), Complex64::new(half, -im)]
    };
    pair.sort_by(|x, y| {
        y.norm()
            .total_cmp(&x.norm())
            .then(y.re.total_cmp(&x.re))
            .then(y.im.total_cmp(&x.im))
    });
    pair
}

/// Refines `guess` to a 2π-periodic orbit by Newton's method on
/// flow_2π(x) − x with Jacobian M − I.
pub fn newton_refine(
    guess: (f64, f64),
    field: Field,
    params: &Params,
    f: &Forcing,
    cfg: &IntegratorConfig,
) -> Result<PeriodicOrbit> {
    let domain = newton_domain(params, f);
    let (x, residual, m) = newton_iterate(guess, field, params, f, cfg, &domain, &[])?;
    finish_orbit(x, residual, m, field, params, f, cfg)
}

pub(crate) fn finish_orbit(
    x: (f64, f64),
    residual: f64,
    m: Matrix2<f64>,
    field: Field,
    params: &Params,
    f: &Forcing,
    cfg: &IntegratorConfig,
) -> Result<PeriodicOrbit> {
    let samples = sample_orbit(x, ORBIT_CHECK_SAMPLES, field, params, f, cfg)?;
    if samples.iter().any(|&(_, phi, _)| !is_non_falling(phi)) {
        return Err(Error::FallingOrbit { phi0: x.0, p0: x.1 });
    }
    Ok(PeriodicOrbit::from_monodromy(x, residual, m, field, params, f))
}

/// Newton iteration, optionally deflating previously found roots.
///
/// With roots r_i the update x ← x + τδ uses the plain Newton step δ and
/// τ = 1 / (1 − ⟨∇ log m(x), δ⟩), m(x) = Π (|x − r_i|⁻² + 1).
///
/// Steps are halved up to [`MAX_BACKTRACKS`] times until the residual drops
/// and the iterate stays in `domain`; if no fraction lowers the residual the
/// full step is taken. `LeftDomain` is reported only when every fraction
/// leaves the domain.
pub(crate) fn newton_iterate(
    guess: (f64, f64),
    field: Field,
    params: &Params,
    f: &Forcing,
    cfg: &IntegratorConfig,
    domain: &SearchBox,
    deflate: &[(f64, f64)],
) -> Result<((f64, f64), f64, Matrix2<f64>)> {
    let (phi, p) = guess;
    if !(phi.is_finite() && p.is_finite()) {
        return Err(Error::InvalidArgument("initial guess must be finite".into()));
    }
    if !domain.contains(phi, p) {
        return Err(Error::LeftDomain { phi0: phi, p0: p });
    }
    let mut cur = newton_eval((phi, p), field, params, f, cfg)?;
    let mut prev = f64::INFINITY;
    let mut growth = 0;
    for iteration in 0..=MAX_NEWTON_ITERATIONS {
        let NewtonPoint { x: (phi, p), g, r, m } = cur;
        if r < RESIDUAL_TOL {
            return Ok(((phi, p), r, m));
        }
        if r > prev {
            growth += 1;
            if growth >= MAX_RESIDUAL_GROWTH {
                return Err(Error::NoConvergence { iterations: iteration, residual: r });
            }
        } else {
            growth = 0;
        }
        prev = r;
        if iteration == MAX_NEWTON_ITERATIONS {
            return Err(Error::NoConvergence { iterations: iteration, residual: r });
        }

        let j = m - Matrix2::identity();
        let det = j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)];
        if det.abs() < SINGULAR_DET {
            return Err(Error::SingularJacobian { det, phi0: phi, p0: p });
        }
        let d_phi = -(j[(1, 1)] * g.0 - j[(0, 1)] * g.1) / det;
        let d_p = -(-j[(1, 0)] * g.0 + j[(0, 0)] * g.1) / det;
        let tau = deflation_factor((phi, p), (d_phi, d_p), deflate);

        let full = (phi + tau * d_phi, p + tau * d_p);
        let mut fallback = None;
        let mut accepted = None;
        let mut lambda = 1.0;
        for _ in 0..=MAX_BACKTRACKS {
            let x = (phi + lambda * tau * d_phi, p + lambda * tau * d_p);
            if x.0.is_finite() && x.1.is_finite() && domain.contains(x.0, x.1) {
                if let Ok(pt) = newton_eval(x, field, params, f, cfg) {
                    if pt.r < r {
                        accepted = Some(pt);
                        break;
                    }
                    if lambda == 1.0 {
                        fallback = Some(pt);
                    }
                }
            }
            lambda *= 0.5;
        }
        cur = match (accepted, fallback) {
            (Some(pt), _) | (None, Some(pt)) => pt,
            (None, None) if domain.contains(full.0, full.1) => newton_eval(full, field, params, f, cfg)?,
            (None, None) => return Err(Error::LeftDomain { phi0: full.0, p0: full.1 }),
        };
    }
    unreachable!("loop returns on its last iteration")
}

/// Step halvings tried per Newton iteration.
const MAX_BACKTRACKS: usize = 6;

struct NewtonPoint {
    x: (f64, f64),
    g: (f64, f64),
    r: f64,
    m: Matrix2<f64>,
}

fn newton_eval(x: (f64, f64), field: Field, params: &Params, f: &Forcing, cfg: &IntegratorConfig) -> Result<NewtonPoint> {
    let res = flow(&State::new(x.0, x.1, 0.0), TAU, field, params, f, cfg, true, None)?;
    let m = res.variational.expect("variational requested");
    let g = (res.final_state.phi - x.0, res.final_state.p - x.1);
    Ok(NewtonPoint { x, g, r: g.0.hypot(g.1), m })
}

fn deflation_factor(x: (f64, f64), d: (f64, f64), deflate: &[(f64, f64)]) -> f64 {
    if deflate.is_empty() {
        return 1.0;
    }
    let mut grad = (0.0, 0.0);
    for &(rp, rq) in deflate {
        let (dx, dy) = (x.0 - rp, x.1 - rq);
        let s = dx * dx + dy * dy;
        let w = -2.0 / (s * (1.0 + s));
        grad.0 += w * dx;
        grad.1 += w * dy;
    }
    let denom = 1.0 - (grad.0 * d.0 + grad.1 * d.1);
    if denom.abs() < 1e-12 || !denom.is_finite() {
        1.0
    } else {
        1.0 / denom
    }
}

mod matrix_row_major {
    use nalgebra::Matrix2;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Matrix2<f64>, s: S) -> Result<S::Ok, S::Error> {
        [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix2<f64>, D::Error> {
        let v = <[f64; 4]>::deserialize(d)?;
        Ok(Matrix2::new(v[0], v[1], v[2], v[3]))
    }
}

mod complex_pairs {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &[Complex64; 2], s: S) -> Result<S::Ok, S::Error> {
        [[z[0].re, z[0].im], [z[1].re, z[1].im]].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[Complex64; 2], D::Error> {
        let v = <[[f64; 2]; 2]>::deserialize(d)?;
        Ok([Complex64::new(v[0][0], v[0][1]), Complex64::new(v[1][0], v[1][1])])
    }
}
