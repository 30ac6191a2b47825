//! Suite configuration documents.

use grrt::{Algorithm, ClockMode, PlannerConfig, ProblemKind, ProblemParams};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{BenchError, Result};

pub const CONFIG_FORMAT_VERSION: u32 = 1;

/// Environment variable that replaces the configured seed base.
pub const SEED_ENV: &str = "BENCH_SEED";

/// Planner ids understood by the harness.
pub const KNOWN_PLANNERS: [&str; 3] = ["grrt_star", "grrt_star_informed", "rrt_connect"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerEntry {
    /// One of [`KNOWN_PLANNERS`].
    pub id: String,
    /// Name used in outputs; defaults to `id`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Planner configuration fields replacing the defaults of `id`.
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub overrides: Map<String, Value>,
}

impl PlannerEntry {
    pub fn new(id: &str) -> Self {
        PlannerEntry {
            id: id.to_string(),
            label: None,
            overrides: Map::new(),
        }
    }

    pub fn name(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.id)
    }

    /// Base configuration of the id with overrides applied. Seed and budget
    /// fields are filled in per trial.
    pub fn planner_config(&self) -> Result<PlannerConfig> {
        let base = match self.id.as_str() {
            "grrt_star" => PlannerConfig::default(),
            "grrt_star_informed" => PlannerConfig {
                epsilon: 0.0,
                ..PlannerConfig::default()
            },
            "rrt_connect" => PlannerConfig::rrt_connect(),
            other => {
                return Err(BenchError::Config(format!(
                    "unknown planner id {other:?}; expected one of {KNOWN_PLANNERS:?}"
                )))
            }
        };
        if self.overrides.is_empty() {
            return Ok(base);
        }
        let mut value = serde_json::to_value(&base)?;
        let fields = value.as_object_mut().expect("planner config is an object");
        for (k, v) in &self.overrides {
            if !fields.contains_key(k) {
                return Err(BenchError::Config(format!(
                    "planner {:?}: unknown override {k:?}",
                    self.name()
                )));
            }
            fields.insert(k.clone(), v.clone());
        }
        let config: PlannerConfig = serde_json::from_value(value)
            .map_err(|e| BenchError::Config(format!("planner {:?}: {e}", self.name())))?;
        if self.id == "rrt_connect" && config.algorithm != Algorithm::RrtConnect {
            return Err(BenchError::Config(
                "rrt_connect cannot override its algorithm".into(),
            ));
        }
        Ok(config)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemEntry {
    /// `many_homotopy`, `narrow_passage` or `double_enclosure`.
    pub kind: String,
    pub dims: Vec<usize>,
    #[serde(default)]
    pub params: ProblemParams,
}

impl ProblemEntry {
    pub fn kind(&self) -> Result<ProblemKind> {
        self.kind
            .parse()
            .map_err(|_| BenchError::Config(format!("unknown problem id {:?}", self.kind)))
    }
}

fn default_format() -> u32 {
    CONFIG_FORMAT_VERSION
}

fn default_threads() -> usize {
    1
}

fn default_verify() -> bool {
    true
}

/// A benchmark matrix: every planner on every problem and dimension, for
/// `trials` consecutive seeds starting at `seed_base`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default = "default_format")]
    pub format: u32,
    pub planners: Vec<PlannerEntry>,
    pub problems: Vec<ProblemEntry>,
    pub trials: usize,
    /// Seconds per trial.
    pub time_limit: f64,
    #[serde(default)]
    pub seed_base: u64,
    /// Wall clock unless set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock: Option<ClockMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iteration_limit: Option<u64>,
    /// Shortcut attempts per path; ten per path state when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shortcut_budget: Option<usize>,
    #[serde(default = "default_threads")]
    pub threads: usize,
    /// Run the verification suite alongside the trials.
    #[serde(default = "default_verify")]
    pub verify: bool,
}

impl SuiteConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: SuiteConfig =
            serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Applies `BENCH_SEED` when it is set.
    pub fn with_env_overrides(mut self) -> Result<Self> {
        if let Ok(text) = std::env::var(SEED_ENV) {
            self.seed_base = text
                .trim()
                .parse()
                .map_err(|_| BenchError::Config(format!("{SEED_ENV} must be an integer, got {text:?}")))?;
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != CONFIG_FORMAT_VERSION {
            return Err(BenchError::Config(format!(
                "unsupported config format {}",
                self.format
            )));
        }
        if !(self.time_limit > 0.0 && self.time_limit.is_finite()) {
            return Err(BenchError::Config("time_limit must be positive".into()));
        }
        if self.threads == 0 {
            return Err(BenchError::Config("threads must be at least 1".into()));
        }
        let mut names = std::collections::HashSet::new();
        for p in &self.planners {
            p.planner_config()?;
            if !names.insert(p.name().to_string()) {
                return Err(BenchError::Config(format!("duplicate planner name {:?}", p.name())));
            }
        }
        for p in &self.problems {
            p.kind()?;
            if p.dims.iter().any(|&n| n < 2) {
                return Err(BenchError::Config(format!("{}: dimensions must be at least 2", p.kind)));
            }
        }
        Ok(())
    }

    /// Full planner configuration for one trial.
    pub fn trial_config(&self, planner: &PlannerEntry, seed: u64) -> Result<PlannerConfig> {
        let mut config = planner.planner_config()?;
        config.seed = seed;
        config.time_limit = Some(self.time_limit);
        config.iteration_limit = self.iteration_limit;
        config.clock = self.clock.unwrap_or(ClockMode::Wall);
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "planners": [{"id": "grrt_star"}, {"id": "grrt_star_informed"}],
        "problems": [{"kind": "narrow_passage", "dims": [2, 4]}],
        "trials": 5,
        "time_limit": 1.0
    }"#;

    #[test]
    fn minimal_document_parses_with_defaults() {
        let c = SuiteConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.seed_base, 0);
        assert_eq!(c.threads, 1);
        assert!(c.verify);
        let informed = c.trial_config(&c.planners[1], 7).unwrap();
        assert_eq!(informed.epsilon, 0.0);
        assert_eq!(informed.seed, 7);
        assert_eq!(informed.time_limit, Some(1.0));
        let round = SuiteConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(round, c);
    }

    #[test]
    fn overrides_replace_defaults() {
        let mut entry = PlannerEntry::new("grrt_star");
        entry.overrides.insert("epsilon".into(), Value::from(0.5));
        entry.overrides.insert("balanced".into(), Value::from(false));
        let c = entry.planner_config().unwrap();
        assert_eq!(c.epsilon, 0.5);
        assert!(!c.balanced);
        entry.overrides.insert("nonsense".into(), Value::from(1));
        assert!(entry.planner_config().is_err());
    }

    #[test]
    fn unknown_ids_are_rejected() {
        let bad_planner = MINIMAL.replace("grrt_star_informed", "bit_star");
        assert!(SuiteConfig::from_json(&bad_planner).is_err());
        let bad_problem = MINIMAL.replace("narrow_passage", "maze");
        assert!(SuiteConfig::from_json(&bad_problem).is_err());
        let duplicate = MINIMAL.replace("grrt_star_informed", "grrt_star");
        assert!(SuiteConfig::from_json(&duplicate).is_err());
        let bad_time = MINIMAL.replace("\"time_limit\": 1.0", "\"time_limit\": 0.0");
        assert!(SuiteConfig::from_json(&bad_time).is_err());
    }
}
