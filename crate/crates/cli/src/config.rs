//! Run and bench configuration files (TOML or JSON, chosen by extension).

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use urdp_core::evaluator::ExternalEvaluatorConfig;
use urdp_core::orchestrator::{LlmBackend, OuterLoopConfig, TaskBundle};
use urdp_core::report::BenchConfig;
use urdp_core::{Evaluator, ExternalEvaluator, SyntheticEvaluator, SyntheticPreset, SyntheticTaskSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing {path}: {reason}")]
    Parse { path: String, reason: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    /// Where ledger.json, best_reward.py and metrics.csv go.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub task: TaskSection,
    pub evaluator: EvaluatorSection,
    pub outer: OuterLoopConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("urdp-out")
}

/// Task description and environment source. Synthetic evaluators supply
/// both when omitted.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub environment_code: Option<String>,
    #[serde(default)]
    pub environment_file: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EvaluatorSection {
    Synthetic(SyntheticSection),
    External(ExternalEvaluatorConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSection {
    #[serde(default)]
    pub preset: Option<SyntheticPreset>,
    /// JSON or TOML task spec; exclusive with `preset`.
    #[serde(default)]
    pub spec_file: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfigFile {
    #[serde(default = "default_bench_dir")]
    pub output_dir: PathBuf,
    pub bench: BenchConfig,
}

fn default_bench_dir() -> PathBuf {
    PathBuf::from("urdp-bench")
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    let parsed = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => serde_json::from_str(&text).map_err(|e| e.to_string()),
        _ => toml::from_str(&text).map_err(|e| e.to_string()),
    };
    parsed.map_err(|reason| ConfigError::Parse { path: path.display().to_string(), reason })
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Everything `urdp run` needs, with paths resolved.
pub struct PreparedRun {
    pub config: RunConfigFile,
    pub task: TaskBundle,
    pub evaluator: Box<dyn Evaluator>,
}

impl RunConfigFile {
    /// Resolves relative input paths against `base` (the config's directory).
    pub fn prepare(mut self, base: &Path) -> Result<PreparedRun, ConfigError> {
        if let LlmBackend::Scripted { dir } = &mut self.outer.llm {
            *dir = resolve(base, dir);
        }
        self.outer.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let (evaluator, spec): (Box<dyn Evaluator>, Option<SyntheticTaskSpec>) = match &mut self.evaluator {
            EvaluatorSection::Synthetic(s) => {
                let spec = match (&s.preset, &s.spec_file) {
                    (Some(p), None) => p.spec(),
                    (None, Some(f)) => {
                        let f = resolve(base, f);
                        s.spec_file = Some(f.clone());
                        load::<SyntheticTaskSpec>(&f)?
                    }
                    _ => return Err(ConfigError::Invalid("synthetic evaluator needs exactly one of `preset` or `spec_file`".into())),
                };
                let ev = SyntheticEvaluator::new(spec.clone()).map_err(|e| ConfigError::Invalid(format!("synthetic task: {e}")))?;
                (Box::new(ev), Some(spec))
            }
            EvaluatorSection::External(c) => {
                if c.command.trim().is_empty() {
                    return Err(ConfigError::Invalid("external evaluator needs a command".into()));
                }
                if c.max_parallel == 0 || !(c.timeout_s > 0.0) {
                    return Err(ConfigError::Invalid("external evaluator needs max_parallel >= 1 and timeout_s > 0".into()));
                }
                if let Some(root) = &mut c.work_root {
                    *root = resolve(base, root);
                }
                (Box::new(ExternalEvaluator::new(c.clone())), None)
            }
        };

        let t = &self.task;
        let environment_code = match (&t.environment_code, &t.environment_file) {
            (Some(_), Some(_)) => return Err(ConfigError::Invalid("task: set `environment_code` or `environment_file`, not both".into())),
            (Some(c), None) => Some(c.clone()),
            (None, Some(f)) => {
                let f = resolve(base, f);
                Some(std::fs::read_to_string(&f).map_err(|source| ConfigError::Io { path: f.display().to_string(), source })?)
            }
            (None, None) => spec.as_ref().map(|s| s.environment_code.clone()),
        };
        let description = t.description.clone().or_else(|| spec.as_ref().map(|s| s.task_description.clone()));
        let (Some(task_description), Some(environment_code)) = (description, environment_code) else {
            return Err(ConfigError::Invalid("task: description and environment code are required for external evaluators".into()));
        };
        Ok(PreparedRun { config: self, task: TaskBundle { task_description, environment_code }, evaluator })
    }
}

impl BenchConfigFile {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let b = &self.bench;
        if b.tasks.is_empty() || b.modes.is_empty() || b.seeds.is_empty() {
            return Err(ConfigError::Invalid("bench needs at least one task, mode and seed".into()));
        }
        if b.budget == 0 {
            return Err(ConfigError::Invalid("bench budget must be at least 1".into()));
        }
        b.inner.validate().map_err(|e| ConfigError::Invalid(format!("bench.inner: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[evaluator]
kind = "synthetic"
preset = "synthetic-d2"

[outer]
k_samples = 4

[outer.llm]
kind = "scripted"
dir = "responses"
"#;

    #[test]
    fn minimal_toml_defaults() {
        let cfg: RunConfigFile = toml::from_str(MINIMAL).unwrap();
        assert_eq!(cfg.output_dir, PathBuf::from("urdp-out"));
        assert_eq!(cfg.outer.k_samples, 4);
        assert_eq!(cfg.outer.omega, 0.95);
        let prepared = cfg.prepare(Path::new("/base")).unwrap();
        assert!(matches!(prepared.config.outer.llm, LlmBackend::Scripted { ref dir } if dir == Path::new("/base/responses")));
        assert!(prepared.task.task_description.contains("ant-like"));
    }

    #[test]
    fn unknown_keys_rejected() {
        for bad in [
            format!("{MINIMAL}\nbogus = 1\n"),
            MINIMAL.replace("k_samples = 4", "k_samples = 4\nk_sample = 3"),
            MINIMAL.replace("preset = \"synthetic-d2\"", "preset = \"synthetic-d2\"\nnoise = 0.1"),
            MINIMAL.replace("dir = \"responses\"", "dir = \"responses\"\nmodel = \"x\""),
            format!("{MINIMAL}\n[outer.inner]\nbudget_mni = 3\n"),
        ] {
            assert!(toml::from_str::<RunConfigFile>(&bad).is_err(), "accepted:\n{bad}");
        }
    }

    #[test]
    fn external_needs_task() {
        let text = MINIMAL.replace("kind = \"synthetic\"\npreset = \"synthetic-d2\"", "kind = \"external\"\ncommand = \"sim\"");
        let cfg: RunConfigFile = toml::from_str(&text).unwrap();
        assert!(matches!(cfg.prepare(Path::new(".")), Err(ConfigError::Invalid(_))));
        let text = format!("{text}\n[task]\ndescription = \"walk\"\nenvironment_code = \"class E: pass\"\n");
        let cfg: RunConfigFile = toml::from_str(&text).unwrap();
        assert_eq!(cfg.prepare(Path::new(".")).unwrap().task.task_description, "walk");
    }

    #[test]
    fn invalid_values_rejected() {
        let cfg: RunConfigFile = toml::from_str(&MINIMAL.replace("k_samples = 4", "omega = 1.5")).unwrap();
        assert!(cfg.prepare(Path::new(".")).is_err());
        let cfg: RunConfigFile = toml::from_str(&MINIMAL.replace("preset = \"synthetic-d2\"", "")).unwrap();
        assert!(cfg.prepare(Path::new(".")).is_err());
    }

    #[test]
    fn bench_file() {
        let cfg: BenchConfigFile = toml::from_str("[bench]\ntasks = [\"synthetic-d6-m2\"]\nmodes = [\"ei\", \"uei\"]\nbudget = 60\n").unwrap();
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.bench.seeds.len(), 20);
        assert!(toml::from_str::<BenchConfigFile>("[bench]\ntasks = [\"synthetic-d7\"]\n").is_err());
    }
}
