//! Run configuration.
//!
//! The file format is TOML. Every real parameter is stored as a quoted
//! decimal string so that a parse/serialize cycle never rewrites a value;
//! `"inf"` is accepted wherever s may be +∞.

use bulkscale::numerics::{Precision, XReal};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("serialize error: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("field `{field}`: {msg}")]
    Invalid { field: String, msg: String },
}

fn invalid(field: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.into(), msg: msg.into() }
}

/// The six experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExperimentId {
    /// kernel convergence and OP-layer oracles
    E1,
    /// recurrence coefficients against the 1/n prediction
    E2,
    /// polylog identity
    E3,
    /// large-s decay of the model problem
    E4,
    /// model problem health and integrable-equation residuals
    E5,
    /// Laplace engine and Szegő rate
    E6,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 6] =
        [ExperimentId::E1, ExperimentId::E2, ExperimentId::E3, ExperimentId::E4, ExperimentId::E5, ExperimentId::E6];

    /// Acceptance criteria evaluated by this experiment.
    pub fn criteria(self) -> &'static [&'static str] {
        match self {
            ExperimentId::E1 => &["A2", "A7"],
            ExperimentId::E2 => &["A1"],
            ExperimentId::E3 => &["A3"],
            ExperimentId::E4 => &["A4"],
            ExperimentId::E5 => &["A5", "A6"],
            ExperimentId::E6 => &["A8", "A9"],
        }
    }

    /// The experiment that owns a criterion id such as "A4".
    pub fn owning(criterion: &str) -> Option<ExperimentId> {
        let c = criterion.trim().to_ascii_uppercase();
        ExperimentId::ALL.into_iter().find(|e| e.criteria().contains(&c.as_str()))
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for ExperimentId {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let u = s.trim().to_ascii_uppercase();
        ExperimentId::ALL
            .into_iter()
            .find(|e| e.to_string() == u)
            .ok_or_else(|| invalid("experiment", format!("unknown experiment `{s}` (expected E1..E6)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    /// ascending coefficients of V
    pub potential: Vec<String>,
    /// ascending coefficients of Q; Q(0) = Q'(0) = 0
    pub deformation: Vec<String>,
    pub s: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: Vec<usize>,
    pub n_min: usize,
    /// s values for scans over the deformation strength
    pub s_values: Vec<String>,
    /// ζ = ξ grid for kernel comparisons
    pub points: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub tol: String,
    pub refine: u32,
    /// finite-difference steps for the integrable-equation residuals
    pub steps: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub amplitude_rel: String,
    pub route_rel: String,
    pub kernel_slope: String,
    pub polylog: String,
    pub decay_slope: String,
    pub det: String,
    pub doubling: String,
    pub neumann: String,
    pub hermite_rel: String,
    pub trace: String,
    pub projection: String,
    pub laplace_band: String,
    pub szego_slope: String,
}

impl Default for Tolerances {
    fn default() -> Self {
        let s = |v: &str| v.to_string();
        Tolerances {
            amplitude_rel: s("0.05"),
            route_rel: s("1e-6"),
            kernel_slope: s("-0.8"),
            polylog: s("1e-10"),
            decay_slope: s("-1.8"),
            det: s("1e-8"),
            doubling: s("1e-8"),
            neumann: s("1e-10"),
            hermite_rel: s("1e-40"),
            trace: s("1e-20"),
            projection: s("1e-30"),
            laplace_band: s("0.2"),
            szego_slope: s("-2.5"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// also write two-column .dat files
    pub dat: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: ExperimentId,
    /// working precision in decimal digits
    pub precision: u32,
    pub ensemble: EnsembleConfig,
    pub grid: GridConfig,
    pub mesh: MeshConfig,
    pub tolerances: Tolerances,
    pub output: OutputConfig,
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

impl Config {
    /// Defaults reproduce the acceptance settings: V = 2x², Q = x², s = 2.
    pub fn default_for(id: ExperimentId) -> Config {
        let (n, n_min, s_values) = match id {
            ExperimentId::E1 => (vec![32, 64, 128], 32, vec!["2"]),
            ExperimentId::E2 => (vec![32, 33, 48, 49, 64, 65, 96, 97, 128, 129], 32, vec!["2"]),
            ExperimentId::E3 => (vec![], 0, vec!["0", "1", "5"]),
            ExperimentId::E4 => (vec![], 0, vec!["3", "4", "5", "6"]),
            ExperimentId::E5 => (vec![], 0, vec!["2", "3", "4"]),
            ExperimentId::E6 => (vec![16, 32, 64, 128], 16, vec!["2"]),
        };
        Config {
            experiment: id,
            precision: 60,
            ensemble: EnsembleConfig {
                potential: strings(&["0", "0", "2"]),
                deformation: strings(&["0", "0", "1"]),
                s: "2".into(),
            },
            grid: GridConfig {
                n,
                n_min,
                s_values: strings(&s_values),
                points: strings(&["-2", "-1", "0", "1", "2"]),
            },
            mesh: MeshConfig { tol: "1e-16".into(), refine: 0, steps: strings(&["0.1", "0.05"]) },
            tolerances: Tolerances::default(),
            output: OutputConfig { dat: true },
        }
    }

    pub fn from_toml(text: &str) -> Result<Config, ConfigError> {
        let c: Config = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Config::from_toml(&text)
    }

    pub fn precision_digits(&self) -> Precision {
        Precision::digits(self.precision)
    }

    /// Checks everything that can be checked without running a pipeline.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(20..=2000).contains(&self.precision) {
            return Err(invalid("precision", "must lie in 20..=2000 digits"));
        }
        let v = parse_list("ensemble.potential", &self.ensemble.potential)?;
        if v.len() < 3 || (v.len() - 1) % 2 != 0 || *v.last().unwrap() <= 0.0 {
            return Err(invalid("ensemble.potential", "need even degree ≥ 2 with positive leading coefficient"));
        }
        let q = parse_list("ensemble.deformation", &self.ensemble.deformation)?;
        if q.len() < 3 || q[0] != 0.0 || q[1] != 0.0 {
            return Err(invalid("ensemble.deformation", "Q(0) and Q'(0) must vanish"));
        }
        if q[2] <= 0.0 {
            return Err(invalid("ensemble.deformation", format!("t = Q''(0)/2 must be positive, got {}", q[2])));
        }
        let s = parse_real("ensemble.s", &self.ensemble.s)?;
        if s.is_nan() || s == f64::NEG_INFINITY {
            return Err(invalid("ensemble.s", "must be real or inf"));
        }
        if self.grid.n.contains(&0) {
            return Err(invalid("grid.n", "n must be positive"));
        }
        for (i, s) in self.grid.s_values.iter().enumerate() {
            let v = parse_real("grid.s_values", s)?;
            if v.is_nan() {
                return Err(invalid("grid.s_values", format!("entry {i} is not a number")));
            }
        }
        parse_list("grid.points", &self.grid.points)?;
        let tol = parse_real("mesh.tol", &self.mesh.tol)?;
        if !(tol > 0.0 && tol < 1e-2) {
            return Err(invalid("mesh.tol", "must lie in (0, 1e-2)"));
        }
        for st in parse_list("mesh.steps", &self.mesh.steps)? {
            if st <= 0.0 {
                return Err(invalid("mesh.steps", "steps must be positive"));
            }
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("amplitude_rel", &t.amplitude_rel),
            ("route_rel", &t.route_rel),
            ("kernel_slope", &t.kernel_slope),
            ("polylog", &t.polylog),
            ("decay_slope", &t.decay_slope),
            ("det", &t.det),
            ("doubling", &t.doubling),
            ("neumann", &t.neumann),
            ("hermite_rel", &t.hermite_rel),
            ("trace", &t.trace),
            ("projection", &t.projection),
            ("laplace_band", &t.laplace_band),
            ("szego_slope", &t.szego_slope),
        ] {
            parse_real(&format!("tolerances.{name}"), v)?;
        }
        Ok(())
    }
}

/// Parses a decimal string or `inf`.
pub fn parse_real(field: &str, s: &str) -> Result<f64, ConfigError> {
    let t = s.trim();
    match t {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => t.parse::<f64>().map_err(|_| invalid(field, format!("`{s}` is not a number"))),
    }
}

pub fn parse_list(field: &str, v: &[String]) -> Result<Vec<f64>, ConfigError> {
    v.iter().map(|s| parse_real(field, s)).collect()
}

/// Exact conversion of a decimal string to the working precision.
pub fn parse_x(field: &str, s: &str, p: Precision) -> Result<XReal, ConfigError> {
    XReal::parse(s, p).ok_or_else(|| invalid(field, format!("`{s}` is not a number")))
}
