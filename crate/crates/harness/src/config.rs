//! Versioned JSON experiment configuration.
//!
//! Every field except `version` is optional in the file; missing values take
//! the defaults of the selected experiment kind. Command-line flags are
//! applied on top of the file.

use std::path::{Path, PathBuf};

use bentkus_core::confseq::Method;
use bentkus_core::stitching::StitchConfig;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Coverage,
    Width,
    Stopping,
    Bestarm,
    BoundTable,
    Sweep,
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::Coverage => "coverage",
            Kind::Width => "width",
            Kind::Stopping => "stopping",
            Kind::Bestarm => "bestarm",
            Kind::BoundTable => "bound-table",
            Kind::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Distribution {
    Bernoulli { p: f64 },
    UniformAverage { m: u32 },
}

impl Distribution {
    pub fn mean(&self) -> f64 {
        match *self {
            Distribution::Bernoulli { p } => p,
            Distribution::UniformAverage { .. } => 0.5,
        }
    }

    pub fn std_dev(&self) -> f64 {
        match *self {
            Distribution::Bernoulli { p } => (p * (1.0 - p)).sqrt(),
            Distribution::UniformAverage { m } => (1.0 / (12.0 * m as f64)).sqrt(),
        }
    }

    /// Largest centred value `1 - mean` on the unit support.
    pub fn upper_deviation(&self) -> f64 {
        1.0 - self.mean()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Radius {
    #[default]
    Raw,
    Reported,
}

/// Fields as they appear in the file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub version: u32,
    pub kind: Option<Kind>,
    pub distribution: Option<Distribution>,
    pub methods: Option<Vec<Method>>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub horizon: Option<u64>,
    pub replications: Option<u64>,
    pub seed: Option<u64>,
    pub stitch: Option<StitchConfig>,
    pub checkpoints: Option<Vec<u64>>,
    pub m_values: Option<Vec<u32>>,
    pub arms: Option<usize>,
    pub arm_means: Option<Vec<f64>>,
    pub radius: Option<Radius>,
    pub trace: Option<bool>,
    pub n_grid: Option<Vec<u64>>,
    pub eta_grid: Option<Vec<f64>>,
    pub power_grid: Option<Vec<f64>>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub distribution: Distribution,
    pub methods: Vec<Method>,
    pub delta: f64,
    pub epsilon: f64,
    pub horizon: u64,
    pub replications: u64,
    pub seed: u64,
    pub stitch: StitchConfig,
    /// Sample sizes at which coverage/width rows are written.
    pub checkpoints: Vec<u64>,
    /// Uniform-average sizes for stopping experiments.
    pub m_values: Vec<u32>,
    pub arm_means: Vec<f64>,
    pub radius: Radius,
    pub trace: bool,
    pub n_grid: Vec<u64>,
    pub eta_grid: Vec<f64>,
    pub power_grid: Vec<f64>,
    pub output: Option<PathBuf>,
    pub format: Format,
}

/// Arm means `1 - (a / K)^0.6`.
pub fn power_law_arms(k: usize) -> Vec<f64> {
    bentkus_core::apps::power_law_means(k)
}

fn default_checkpoints(horizon: u64) -> Vec<u64> {
    let mut out: Vec<u64> = [1u64, 2, 5]
        .iter()
        .flat_map(|&d| (0..10).map(move |e| d * 10u64.pow(e)))
        .filter(|&n| n >= 10 && n < horizon)
        .collect();
    out.push(horizon);
    out.sort_unstable();
    out
}

impl ExperimentConfig {
    pub fn defaults(kind: Kind) -> Self {
        let anytime = vec![Method::ABentkus, Method::AHoeffding, Method::EBernstein];
        let mut cfg = Self {
            kind,
            distribution: Distribution::Bernoulli { p: 0.1 },
            methods: anytime,
            delta: 0.05,
            epsilon: 0.1,
            horizon: 5000,
            replications: 300,
            seed: 20190529,
            stitch: StitchConfig::for_delta(0.05).expect("valid defaults"),
            checkpoints: default_checkpoints(5000),
            m_values: vec![10],
            arm_means: power_law_arms(5),
            radius: Radius::Raw,
            trace: false,
            n_grid: vec![1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10_000, 20_000],
            eta_grid: vec![1.05, 1.1, 1.5, 2.0],
            power_grid: vec![1.05, 1.1, 1.5, 2.0],
            output: None,
            format: Format::Csv,
        };
        match kind {
            Kind::Coverage | Kind::Width => {}
            Kind::Stopping => {
                cfg.distribution = Distribution::UniformAverage { m: 10 };
                cfg.replications = 50;
                cfg.horizon = 10_000_000;
            }
            Kind::Bestarm => {
                cfg.replications = 10;
                cfg.horizon = 10_000_000;
            }
            Kind::BoundTable | Kind::Sweep => {
                cfg.distribution = Distribution::Bernoulli { p: 0.25 };
                cfg.replications = 1;
            }
        }
        cfg
    }

    pub fn from_json_str(text: &str, kind: Option<Kind>) -> Result<Self> {
        let file: ConfigFile =
            serde_json::from_str(text).map_err(|e| config_err(format!("invalid config: {e}")))?;
        Self::from_file(file, kind)
    }

    pub fn load(path: &Path, kind: Option<Kind>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text, kind)
    }

    /// Merges `file` over the defaults of its kind. A `kind` argument (from the
    /// subcommand) must agree with the file; `coverage` also accepts `width`.
    pub fn from_file(file: ConfigFile, kind: Option<Kind>) -> Result<Self> {
        if file.version != CONFIG_VERSION {
            return Err(config_err(format!("unsupported config version {} (expected {CONFIG_VERSION})", file.version)));
        }
        let kind = match (kind, file.kind) {
            (Some(Kind::Coverage), Some(Kind::Width)) => Kind::Width,
            (Some(a), Some(b)) if a != b => {
                return Err(config_err(format!("config kind '{}' does not match subcommand '{}'", b.name(), a.name())))
            }
            (Some(a), _) => a,
            (None, Some(b)) => b,
            (None, None) => return Err(config_err("config has no 'kind' and none was given")),
        };
        let mut cfg = Self::defaults(kind);
        let horizon_given = file.horizon.is_some();
        let checkpoints_given = file.checkpoints.is_some();
        let means_given = file.arm_means.is_some();
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = file.$f { cfg.$f = v; })* };
        }
        take!(distribution, methods, delta, epsilon, horizon, replications, seed, stitch, checkpoints, m_values, arm_means,
              radius, trace, n_grid, eta_grid, power_grid, format);
        cfg.output = file.output;
        if let Some(k) = file.arms {
            if means_given {
                return Err(config_err("give either 'arms' or 'arm_means', not both"));
            }
            cfg.arm_means = power_law_arms(k);
        }
        if horizon_given && !checkpoints_given {
            cfg.checkpoints = default_checkpoints(cfg.horizon);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets the horizon and, for coverage runs, resets the checkpoints to match.
    pub fn set_horizon(&mut self, horizon: u64) {
        self.horizon = horizon;
        self.checkpoints = default_checkpoints(horizon);
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(config_err(m));
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta = {} must lie in (0, 1)", self.delta));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon = {} must lie in (0, 1)", self.epsilon));
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        match self.distribution {
            Distribution::Bernoulli { p } if !(0.0..=1.0).contains(&p) => {
                return bad(format!("bernoulli p = {p} must lie in [0, 1]"))
            }
            Distribution::UniformAverage { m: 0 } => return bad("uniform-average m must be at least 1".into()),
            _ => {}
        }
        if self.checkpoints.iter().any(|&n| n == 0 || n > self.horizon) {
            return bad(format!("checkpoints must lie in [1, {}]", self.horizon));
        }
        if self.m_values.contains(&0) {
            return bad("m_values must be positive".into());
        }
        if self.arm_means.is_empty() || self.arm_means.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return bad("arm means must be a non-empty list in [0, 1]".into());
        }
        if self.n_grid.contains(&0) {
            return bad("n_grid entries must be positive".into());
        }
        if self.eta_grid.iter().chain(&self.power_grid).any(|&v| v.is_nan() || v <= 1.0) {
            return bad("eta_grid and power_grid entries must exceed 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_takes_kind_defaults() {
        let cfg = ExperimentConfig::from_json_str(r#"{"version": 1, "kind": "stopping"}"#, None).unwrap();
        assert_eq!(cfg, ExperimentConfig::defaults(Kind::Stopping));
    }

    #[test]
    fn file_values_override_defaults() {
        let text = r#"{"version": 1, "kind": "coverage", "distribution": {"type": "bernoulli", "p": 0.5},
                       "methods": ["A-Bentkus"], "horizon": 300, "replications": 7, "seed": 3}"#;
        let cfg = ExperimentConfig::from_json_str(text, Some(Kind::Coverage)).unwrap();
        assert_eq!(cfg.distribution, Distribution::Bernoulli { p: 0.5 });
        assert_eq!(cfg.methods, vec![Method::ABentkus]);
        assert_eq!((cfg.horizon, cfg.replications, cfg.seed), (300, 7, 3));
        assert_eq!(*cfg.checkpoints.last().unwrap(), 300);
    }

    #[test]
    fn rejects_bad_files() {
        let cases = [
            r#"{"version": 2, "kind": "coverage"}"#,
            r#"{"version": 1}"#,
            r#"{"version": 1, "kind": "coverage", "bogus": 1}"#,
            r#"{"version": 1, "kind": "coverage", "delta": 1.5}"#,
            r#"{"version": 1, "kind": "coverage", "methods": ["nope"]}"#,
            r#"{"version": 1, "kind": "coverage", "replications": 0}"#,
            r#"{"version": 1, "kind": "bestarm", "arms": 3, "arm_means": [0.5]}"#,
            "{\"version\": 1,\n \"kind\": \"coverage\",\n \"horizon\": -3}",
        ];
        for text in cases {
            assert!(ExperimentConfig::from_json_str(text, None).is_err(), "{text}");
        }
        let err = ExperimentConfig::from_json_str("{\"version\": 1,\n \"kind\": \"coverage\",\n \"horizon\": -3}", None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(ExperimentConfig::from_json_str(r#"{"version": 1, "kind": "sweep"}"#, Some(Kind::Coverage)).is_err());
    }
}
