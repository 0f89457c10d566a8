//! Resolved run configurations. A config file (or an earlier manifest) is
//! read as JSON, flags are laid over it, and the merged object is
//! deserialized into one of the structs below and validated.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::{Map, Value};

use kapitza::{Field, Forcing};

/// Failure with a process exit code attached.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { code: EXIT_CONFIG, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError { code: EXIT_NUMERICAL, message: message.into() }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::numerical(format!("{}: {e}", path.display()))
    }
}

impl From<kapitza::Error> for CliError {
    fn from(e: kapitza::Error) -> Self {
        use kapitza::Error::*;
        let code = match e {
            Domain(_) | InvalidArgument(_) | InvalidBracket { .. } | ForcingMismatch { .. } => EXIT_CONFIG,
            _ => EXIT_NUMERICAL,
        };
        CliError { code, message: e.to_string() }
    }
}

fn bad(field: &str, why: impl std::fmt::Display) -> CliError {
    CliError::config(format!("invalid config field `{field}`: {why}"))
}

/// Contents of `--config`, split into the command's own block and an
/// optional tolerance. Manifests nest the block under `config`.
pub struct FileConfig {
    pub block: Map<String, Value>,
    pub tol: Option<f64>,
}

pub fn read_config_file(path: &Path, command: &str) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: not valid JSON: {e}", path.display())))?;
    let Value::Object(mut top) = value else {
        return Err(CliError::config(format!("{}: expected a JSON object", path.display())));
    };
    if let Some(c) = top.get("command") {
        if c.as_str() != Some(command) {
            return Err(bad("command", format!("file is for {c}, not \"{command}\"")));
        }
    }
    let tol = match top.get("tol") {
        None | Some(Value::Null) => None,
        Some(v) => Some(v.as_f64().ok_or_else(|| bad("tol", "expected a number"))?),
    };
    let block = match top.remove("config") {
        Some(Value::Object(m)) => m,
        Some(_) => return Err(bad("config", "expected an object")),
        None => {
            for k in ["command", "tol", "jobs", "version", "exit_code", "status"] {
                top.remove(k);
            }
            top
        }
    };
    Ok(FileConfig { block, tol })
}

/// Lays `flags` over `base` and deserializes, naming the offending field on
/// failure.
pub fn resolve<T: DeserializeOwned>(mut base: Map<String, Value>, flags: Map<String, Value>) -> Result<T, CliError> {
    for (k, v) in flags {
        if !v.is_null() {
            base.insert(k, v);
        }
    }
    let de = Value::Object(base);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        bad(if path.is_empty() || path == "." { "<root>" } else { &path }, e.into_inner())
    })
}

/// Flags whose value is `None` are dropped so they never shadow the file.
pub fn flag_map<T: Serialize>(args: &T) -> Map<String, Value> {
    match serde_json::to_value(args) {
        Ok(Value::Object(m)) => m.into_iter().filter(|(_, v)| !v.is_null()).collect(),
        _ => Map::new(),
    }
}

/// Forcing given on the command line, as a JSON value for the merge.
pub fn forcing_flag(
    kind: Option<&str>,
    amplitude: Option<f64>,
    phase: Option<f64>,
    file: Option<&Path>,
) -> Result<Option<Value>, CliError> {
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let v: Value =
            serde_json::from_str(&text).map_err(|e| bad("forcing", format!("{}: {e}", path.display())))?;
        return Ok(Some(v));
    }
    let kind = match (kind, amplitude) {
        (Some(k), _) => k,
        (None, Some(_)) => "harmonic",
        (None, None) => return Ok(None),
    };
    match kind {
        "zero" => Ok(Some(serde_json::json!({ "type": "zero" }))),
        "harmonic" => Ok(Some(serde_json::json!({
            "type": "harmonic",
            "amplitude": amplitude.unwrap_or(0.0),
            "phase": phase.unwrap_or(0.0),
        }))),
        other => Err(bad("forcing", format!("unknown kind '{other}' (use zero, harmonic or --forcing-file)"))),
    }
}

fn finite(field: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(bad(field, "must be finite"))
    }
}

fn non_negative(field: &str, x: f64) -> Result<(), CliError> {
    finite(field, x)?;
    if x < 0.0 {
        return Err(bad(field, format!("must be >= 0, got {x}")));
    }
    Ok(())
}

fn check_forcing(f: &Forcing) -> Result<(), CliError> {
    f.validate().map_err(|e| bad("forcing", e))
}

/// ε = 1/k needs a positive integer k.
fn check_k(field: Field, k: Option<f64>) -> Result<Option<u32>, CliError> {
    match (field, k) {
        (Field::Averaged, None) => Ok(None),
        (Field::Original, None) => Err(bad("k", "required for the original system")),
        (_, Some(k)) => {
            if !(k.is_finite() && k >= 1.0 && k.fract() == 0.0 && k <= u32::MAX as f64) {
                return Err(bad("k", format!("must be a positive integer, got {k}")));
            }
            Ok(Some(k as u32))
        }
    }
}

fn default_forcing() -> Forcing {
    Forcing::Zero
}

fn default_shape() -> Forcing {
    Forcing::harmonic(1.0, 0.0)
}

fn default_system() -> Field {
    Field::Averaged
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "default_system")]
    pub system: Field,
    pub mu: f64,
    pub a: f64,
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default = "default_forcing")]
    pub forcing: Forcing,
    pub phi0: f64,
    pub p0: f64,
    #[serde(rename = "T")]
    pub duration: f64,
    #[serde(default)]
    pub t0: f64,
    /// Output rows, endpoints included.
    #[serde(default = "SimulateConfig::default_samples")]
    pub samples: usize,
    /// Fixed-step RK4 with this many steps instead of the adaptive scheme.
    #[serde(default)]
    pub fixed_steps: Option<usize>,
}

impl SimulateConfig {
    fn default_samples() -> usize {
        201
    }

    pub fn validate(&self) -> Result<Option<u32>, CliError> {
        non_negative("mu", self.mu)?;
        non_negative("a", self.a)?;
        finite("phi0", self.phi0)?;
        finite("p0", self.p0)?;
        finite("t0", self.t0)?;
        finite("T", self.duration)?;
        if self.duration <= 0.0 {
            return Err(bad("T", "must be > 0"));
        }
        if self.samples < 2 {
            return Err(bad("samples", "must be >= 2"));
        }
        if let Some(n) = self.fixed_steps {
            if n == 0 || n % (self.samples - 1) != 0 {
                return Err(bad("fixed_steps", "must be a positive multiple of samples - 1"));
            }
        }
        check_forcing(&self.forcing)?;
        check_k(self.system, self.k)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InverseForceConfig {
    pub mu: f64,
    pub a: f64,
    /// Amplitude of the prescribed φ(t) = π − A cos t.
    #[serde(rename = "A")]
    pub amplitude: f64,
    #[serde(default = "InverseForceConfig::default_samples")]
    pub samples: usize,
}

impl InverseForceConfig {
    fn default_samples() -> usize {
        256
    }

    pub fn validate(&self) -> Result<(), CliError> {
        non_negative("mu", self.mu)?;
        non_negative("a", self.a)?;
        finite("A", self.amplitude)?;
        if self.amplitude.abs() >= FRAC_PI_2 {
            return Err(bad("A", "must satisfy |A| < pi/2"));
        }
        if self.samples < 2 {
            return Err(bad("samples", "must be >= 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitsConfig {
    #[serde(default = "default_system")]
    pub system: Field,
    pub mu: f64,
    pub a: f64,
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default = "default_forcing")]
    pub forcing: Forcing,
    /// Seed-grid resolution per axis; ignored when `seed` is given.
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Single Newton start (φ₀, p₀) instead of a grid scan.
    #[serde(default)]
    pub seed: Option<[f64; 2]>,
}

fn default_grid() -> usize {
    64
}

impl OrbitsConfig {
    pub fn validate(&self) -> Result<Option<u32>, CliError> {
        non_negative("mu", self.mu)?;
        non_negative("a", self.a)?;
        if self.grid < 2 {
            return Err(bad("grid", "must be >= 2"));
        }
        if let Some([phi, p]) = self.seed {
            finite("seed", phi)?;
            finite("seed", p)?;
        } else if self.mu == 0.0 {
            return Err(bad("mu", "a grid scan needs mu > 0 to bound the search box; pass a seed instead"));
        }
        check_forcing(&self.forcing)?;
        check_k(self.system, self.k)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub mu: f64,
    #[serde(rename = "A_range")]
    pub amplitude_range: [f64; 2],
    pub a_range: [f64; 2],
    #[serde(rename = "n_A")]
    pub n_amplitude: usize,
    pub n_a: usize,
}

/// `n` evenly spaced points from lo to hi inclusive.
pub fn linspace([lo, hi]: [f64; 2], n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn check_range(field: &str, [lo, hi]: [f64; 2], n: usize, n_field: &str) -> Result<(), CliError> {
    finite(field, lo)?;
    finite(field, hi)?;
    if n == 0 {
        return Err(bad(n_field, "range is empty"));
    }
    if hi < lo || (n > 1 && hi == lo) {
        return Err(bad(field, format!("empty range [{lo}, {hi}]")));
    }
    Ok(())
}

impl RegionConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        non_negative("mu", self.mu)?;
        check_range("A_range", self.amplitude_range, self.n_amplitude, "n_A")?;
        check_range("a_range", self.a_range, self.n_a, "n_a")?;
        if self.amplitude_range[0] < 0.0 || self.amplitude_range[1] >= FRAC_PI_2 {
            return Err(bad("A_range", "must lie in [0, pi/2)"));
        }
        if self.a_range[0] < 0.0 {
            return Err(bad("a_range", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    /// One curve per value.
    pub mu: Vec<f64>,
    /// F(t; A) = A · shape(t).
    #[serde(default = "default_shape")]
    pub shape: Forcing,
    #[serde(rename = "A_max", default = "CurveConfig::default_max")]
    pub amplitude_max: f64,
    #[serde(rename = "A_step", default = "CurveConfig::default_step")]
    pub amplitude_step: f64,
}

impl CurveConfig {
    fn default_max() -> f64 {
        1.5
    }

    fn default_step() -> f64 {
        0.05
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.mu.is_empty() {
            return Err(bad("mu", "at least one value is required"));
        }
        for &m in &self.mu {
            finite("mu", m)?;
            if m <= 0.0 {
                return Err(bad("mu", format!("must be > 0, got {m}")));
            }
        }
        non_negative("A_max", self.amplitude_max)?;
        finite("A_step", self.amplitude_step)?;
        if self.amplitude_step <= 0.0 {
            return Err(bad("A_step", "must be > 0"));
        }
        check_forcing(&self.shape)?;
        if matches!(self.shape, Forcing::InverseDerived { .. }) {
            return Err(bad("shape", "inverse-derived forces cannot be scaled into a family"));
        }
        Ok(())
    }

    /// 0, step, 2 step, ... up to A_max, with A_max itself as the last node.
    pub fn amplitudes(&self) -> Vec<f64> {
        let n = (self.amplitude_max / self.amplitude_step + 1e-9).floor() as usize;
        let mut v: Vec<f64> = (0..=n).map(|i| i as f64 * self.amplitude_step).collect();
        if self.amplitude_max - v[n] > 1e-9 {
            v.push(self.amplitude_max);
        }
        v
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BifurcateConfig {
    #[serde(rename = "A")]
    pub amplitude: f64,
    pub mu: f64,
    pub a: Vec<f64>,
    #[serde(default = "default_shape")]
    pub shape: Forcing,
    #[serde(default = "default_grid")]
    pub grid: usize,
}

impl BifurcateConfig {
    /// Validates and returns the sorted, deduplicated a list together with
    /// the number of duplicates removed.
    pub fn validate(&self) -> Result<(Vec<f64>, usize), CliError> {
        finite("A", self.amplitude)?;
        finite("mu", self.mu)?;
        if self.mu <= 0.0 {
            return Err(bad("mu", "must be > 0"));
        }
        if self.a.is_empty() {
            return Err(bad("a", "at least one value is required"));
        }
        for &a in &self.a {
            non_negative("a", a)?;
        }
        if self.grid < kapitza::analysis::MIN_SCAN_GRID {
            return Err(bad("grid", format!("must be >= {}", kapitza::analysis::MIN_SCAN_GRID)));
        }
        check_forcing(&self.shape)?;
        if matches!(self.shape, Forcing::InverseDerived { .. }) {
            return Err(bad("shape", "inverse-derived forces cannot be scaled into a family"));
        }
        let mut list = self.a.clone();
        list.sort_by(f64::total_cmp);
        list.dedup();
        let removed = self.a.len() - list.len();
        Ok((list, removed))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    pub mu: f64,
    pub a: f64,
    #[serde(default = "default_forcing")]
    pub forcing: Forcing,
    /// Lebesgue exponent for the stability criterion; absent means ∞.
    #[serde(default)]
    pub norm_k: Option<f64>,
}

impl CheckConfig {
    pub fn validate(&self) -> Result<f64, CliError> {
        non_negative("mu", self.mu)?;
        non_negative("a", self.a)?;
        check_forcing(&self.forcing)?;
        match self.norm_k {
            None => Ok(f64::INFINITY),
            Some(k) if k >= 1.0 && !k.is_nan() => Ok(k),
            Some(k) => Err(bad("norm_k", format!("must be >= 1, got {k}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn flags_override_file() {
        let file = obj(serde_json::json!({ "mu": 1.0, "a": 2.0, "check_unused": null }));
        let flags = obj(serde_json::json!({ "a": 3.0 }));
        let err = resolve::<CheckConfig>(file.clone(), flags.clone()).unwrap_err();
        assert!(err.message.contains("check_unused"));
        let mut file = file;
        file.remove("check_unused");
        let c: CheckConfig = resolve(file, flags).unwrap();
        assert_eq!((c.mu, c.a), (1.0, 3.0));
    }

    #[test]
    fn missing_field_is_named() {
        let err = resolve::<RegionConfig>(Map::new(), obj(serde_json::json!({ "mu": 1.0 }))).unwrap_err();
        assert_eq!(err.code, EXIT_CONFIG);
        assert!(err.message.contains("A_range"), "{}", err.message);
    }

    #[test]
    fn fractional_k_rejected() {
        assert!(check_k(Field::Original, Some(50.5)).is_err());
        assert_eq!(check_k(Field::Original, Some(50.0)).unwrap(), Some(50));
        assert!(check_k(Field::Original, None).is_err());
    }

    #[test]
    fn curve_grid_ends_at_max() {
        let c = CurveConfig { mu: vec![1.0], shape: default_shape(), amplitude_max: 0.12, amplitude_step: 0.05 };
        assert_eq!(c.amplitudes(), vec![0.0, 0.05, 0.1, 0.12]);
        let c = CurveConfig { amplitude_max: 0.0, ..c };
        assert_eq!(c.amplitudes(), vec![0.0]);
    }

    #[test]
    fn linspace_endpoints() {
        let v = linspace([0.0, 1.0], 5);
        assert_eq!(v, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
