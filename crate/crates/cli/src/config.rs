//! Experiment configuration: a single JSON document.

use std::fmt;
use std::path::PathBuf;

use kuramoto_graphon::continuation::Strategy;
use kuramoto_graphon::freqdist::{FrequencyModel, FrequencySpec};
use kuramoto_graphon::graphon::{Graphon, SampleMode};
use kuramoto_graphon::instance::GraphKind;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Fig1KcritSweep,
    Fig2ProfileUniform,
    Fig3ProfileCauchy,
    Fig4BifurcationCosine,
    Fig5Smallworld,
    ConvergenceDiag,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig1KcritSweep => "fig1_kcrit_sweep",
            Experiment::Fig2ProfileUniform => "fig2_profile_uniform",
            Experiment::Fig3ProfileCauchy => "fig3_profile_cauchy",
            Experiment::Fig4BifurcationCosine => "fig4_bifurcation_cosine",
            Experiment::Fig5Smallworld => "fig5_smallworld",
            Experiment::ConvergenceDiag => "convergence_diag",
        }
    }
}

fn one() -> usize {
    1
}

fn default_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub graphon: Graphon,
    pub frequency: FrequencySpec,
    /// Network sizes; for `fig5_smallworld` the sizes of the random
    /// realizations compared with the grid model.
    pub n: Vec<usize>,
    /// Master seed; every task seed is derived from it.
    pub seed: u64,
    #[serde(default = "one")]
    pub realizations: usize,
    /// Fixed coupling for the profile experiments (default: the onset).
    #[serde(default)]
    pub coupling: Option<f64>,
    /// Starting coupling for continuation experiments.
    #[serde(default)]
    pub k_start: Option<f64>,
    #[serde(default)]
    pub k_range: Option<[f64; 2]>,
    #[serde(default)]
    pub ds: Option<f64>,
    /// Newton and corrector residual tolerance.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub strategy: Strategy,
    #[serde(default)]
    pub mode: SampleMode,
    #[serde(default)]
    pub kind: GraphKind,
    /// Size of the deterministic graphon grid (`fig5_smallworld`).
    #[serde(default)]
    pub grid_m: Option<usize>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// A schema violation, anchored to a position in the config text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Position of the first occurrence of `"key"` in `text`, or the start.
fn locate(text: &str, key: &str) -> (usize, usize) {
    let needle = format!("\"{key}\"");
    for (i, line) in text.lines().enumerate() {
        if let Some(c) = line.find(&needle) {
            return (i + 1, c + 1);
        }
    }
    (1, 1)
}

fn fail(text: &str, key: &str, message: impl Into<String>) -> ConfigError {
    let (line, column) = locate(text, key);
    ConfigError { line, column, message: message.into() }
}

impl ExperimentConfig {
    /// Parses and validates `text`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ConfigError {
            line: e.line().max(1),
            column: e.column().max(1),
            message: e.to_string().split(" at line ").next().unwrap_or_default().to_string(),
        })?;
        cfg.validate(text)?;
        Ok(cfg)
    }

    pub fn validate(&self, text: &str) -> Result<(), ConfigError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.n.is_empty() {
            return Err(fail(text, "n", "n must list at least one network size"));
        }
        if let Some(&bad) = self.n.iter().find(|&&n| n < 2) {
            return Err(fail(text, "n", format!("network size {bad} is below 2")));
        }
        if self.realizations == 0 {
            return Err(fail(text, "realizations", "realizations must be at least 1"));
        }
        if !positive(self.tol) {
            return Err(fail(text, "tol", format!("tolerance {} must be positive", self.tol)));
        }
        if let Some(ds) = self.ds.filter(|&d| !positive(d)) {
            return Err(fail(text, "ds", format!("step {ds} must be positive")));
        }
        if let Some(k) = self.coupling.filter(|&k| !positive(k)) {
            return Err(fail(text, "coupling", format!("coupling {k} must be positive")));
        }
        if let Some(k) = self.k_start.filter(|&k| !positive(k)) {
            return Err(fail(text, "k_start", format!("coupling {k} must be positive")));
        }
        if let Some([lo, hi]) = self.k_range {
            if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
                return Err(fail(text, "k_range", format!("k_range [{lo}, {hi}] must satisfy 0 <= lo < hi")));
            }
        }
        if let Some(m) = self.grid_m.filter(|&m| m < 2) {
            return Err(fail(text, "grid_m", format!("grid size {m} is below 2")));
        }
        if self.workers == Some(0) {
            return Err(fail(text, "workers", "workers must be at least 1"));
        }
        self.graphon.validate().map_err(|e| fail(text, "graphon", e.to_string()))?;
        self.model().map_err(|e| fail(text, "frequency", e.to_string()))?;
        let needs_constant = matches!(
            self.experiment,
            Experiment::Fig2ProfileUniform | Experiment::Fig3ProfileCauchy | Experiment::Fig4BifurcationCosine
        );
        if needs_constant && self.graphon.constant_value().is_none() {
            return Err(fail(text, "graphon", format!("{} needs an erdos_renyi graphon", self.experiment.name())));
        }
        Ok(())
    }

    pub fn model(&self) -> kuramoto_graphon::Result<FrequencyModel> {
        FrequencyModel::try_from(self.frequency.clone())
    }

    /// SHA-256 of the canonical JSON form, including command-line overrides.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(&bytes))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// `uniform`, `arcsine-cosine` or `cauchy-like` (underscores accepted).
pub fn parse_model(s: &str) -> Result<FrequencyModel, String> {
    match s.replace('_', "-").as_str() {
        "uniform" => Ok(FrequencyModel::Uniform),
        "arcsine-cosine" | "cosine" => Ok(FrequencyModel::ArcsineCosine),
        "cauchy-like" | "cauchy" => Ok(FrequencyModel::CauchyLike),
        other => Err(format!("unknown frequency model '{other}' (uniform, arcsine-cosine, cauchy-like)")),
    }
}

/// `er:P`, `erdos-renyi:P` or `small-world:HI,LO,RADIUS`.
pub fn parse_graphon(s: &str) -> Result<Graphon, String> {
    let (kind, args) = s.split_once(':').ok_or_else(|| format!("graphon '{s}' is not of the form KIND:PARAMS"))?;
    let nums: Vec<f64> = args
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("bad graphon parameter '{v}': {e}")))
        .collect::<Result<_, _>>()?;
    let g = match (kind.replace('_', "-").as_str(), nums.as_slice()) {
        ("er" | "erdos-renyi", [p]) => Graphon::erdos_renyi(*p),
        ("small-world" | "sw", [hi, lo, r]) => Graphon::small_world(*hi, *lo, *r),
        _ => return Err(format!("unknown graphon '{s}' (er:P or small-world:HI,LO,RADIUS)")),
    };
    g.map_err(|e| e.to_string())
}
