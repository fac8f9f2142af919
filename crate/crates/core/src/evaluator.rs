//! Fitness evaluation backends: a synthetic desk-scale task family and an
//! external command that trains/scores a candidate out of process.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::str::FromStr;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::{mentions_identifier, substitute_hyperparameters, ComponentStats, EvaluationRecord, RewardFunctionSample};
use crate::seq;
use crate::similarity::SimilarityEngine;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvaluatorError {
    #[error("failed to launch evaluator command `{command}`: {reason}")]
    Spawn { command: String, reason: String },
    #[error("evaluator I/O error: {0}")]
    Io(String),
    #[error("hyperparameter `{0}` has no literal assignment in the code")]
    Substitution(String),
    #[error("theta has {got} values but the sample has {expected} hyperparameters")]
    ThetaLength { expected: usize, got: usize },
}

/// One evaluation call. `theta` is in raw hyperparameter units.
#[derive(Clone, Debug)]
pub struct EvaluationRequest<'a> {
    pub sample: &'a RewardFunctionSample,
    pub theta: Vec<f64>,
    pub run_id: String,
    pub iteration: usize,
    /// Retry counter for this point, starting at 0.
    pub attempt: usize,
    pub seed: u64,
}

pub trait Evaluator: Send + Sync {
    /// Scores one candidate. Harness-side failures (crash, timeout, garbage
    /// output) come back as failed records; `Err` means the evaluator itself
    /// could not run.
    fn evaluate(&self, request: &EvaluationRequest<'_>) -> Result<EvaluationRecord, EvaluatorError>;

    /// Upper bound on concurrent `evaluate` calls.
    fn max_parallel(&self) -> usize {
        1
    }

    /// `(human, sparse)` reference scores, when known.
    fn hns_baselines(&self) -> Option<(f64, f64)> {
        None
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("human and sparse baselines coincide ({0}); HNS is undefined")]
pub struct DegenerateBaseline(pub f64);

/// Human-normalized score `(method - sparse) / |human - sparse|`.
pub fn hns(method: f64, human: f64, sparse: f64) -> Result<f64, DegenerateBaseline> {
    let scale = (human - sparse).abs();
    if scale == 0.0 {
        return Err(DegenerateBaseline(human));
    }
    Ok((method - sparse) / scale)
}

// ---------------------------------------------------------------------------
// Synthetic tasks

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Concept {
    /// Canonical component name, e.g. `forward_velocity_reward`.
    pub name: String,
    pub description: String,
    pub relevance: f64,
    /// Natural-log temperature at which the concept scores fully.
    pub target_log_temp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticTaskSpec {
    pub task_name: String,
    pub concepts: Vec<Concept>,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default = "default_coverage_bonus")]
    pub coverage_bonus: f64,
    #[serde(default = "default_irrelevant_penalty")]
    pub irrelevant_penalty: f64,
    #[serde(default = "default_match_threshold")]
    pub match_threshold: f64,
    pub human_score: f64,
    pub sparse_score: f64,
    #[serde(default)]
    pub task_description: String,
    #[serde(default)]
    pub environment_code: String,
}

fn default_coverage_bonus() -> f64 {
    0.5
}

fn default_irrelevant_penalty() -> f64 {
    0.2
}

fn default_match_threshold() -> f64 {
    0.7
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskSpecError {
    #[error("no concept has positive relevance")]
    NoRelevantConcept,
    #[error("relevance of `{0}` is outside [0, 1]")]
    Relevance(String),
    #[error("human and sparse scores must differ")]
    DegenerateBaseline,
    #[error("noise_std must be finite and non-negative")]
    Noise,
}

impl SyntheticTaskSpec {
    pub fn validate(&self) -> Result<(), TaskSpecError> {
        if let Some(c) = self.concepts.iter().find(|c| !(0.0..=1.0).contains(&c.relevance)) {
            return Err(TaskSpecError::Relevance(c.name.clone()));
        }
        if !self.concepts.iter().any(|c| c.relevance > 0.0) {
            return Err(TaskSpecError::NoRelevantConcept);
        }
        if self.human_score == self.sparse_score {
            return Err(TaskSpecError::DegenerateBaseline);
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(TaskSpecError::Noise);
        }
        Ok(())
    }

    /// Noise-free fitness of a sample covering every concept at its target.
    pub fn optimum(&self) -> f64 {
        self.concepts.iter().filter(|c| c.relevance > 0.0).map(|c| c.relevance).sum::<f64>() + self.coverage_bonus
    }

    pub fn temp_name(concept: &Concept) -> String {
        let stem = ["_reward", "_penalty", "_bonus", "_cost", "_term", "_shaping"]
            .iter()
            .find_map(|s| concept.name.strip_suffix(s))
            .unwrap_or(&concept.name);
        format!("{stem}_temp")
    }

    /// Python source of a reward function with one component per concept,
    /// each scaled by its own temperature initialised to 1.0.
    pub fn canonical_code(&self) -> String {
        let mut out = String::from(
            "def compute_reward(obs: Dict[str, torch.Tensor], actions: torch.Tensor) -> Tuple[torch.Tensor, Dict[str, torch.Tensor]]:\n",
        );
        for c in &self.concepts {
            out.push_str(&format!("    {}: float = 1.0\n", Self::temp_name(c)));
        }
        out.push('\n');
        for c in &self.concepts {
            out.push_str(&format!("    {} = torch.exp(-torch.abs(obs[\"{}\"]) / {})\n", c.name, c.name, Self::temp_name(c)));
        }
        let sum: Vec<&str> = self.concepts.iter().map(|c| c.name.as_str()).collect();
        out.push_str(&format!("\n    total_reward = {}\n", sum.join(" + ")));
        out.push_str("    reward_components = {\n");
        for c in &self.concepts {
            out.push_str(&format!("        \"{}\": {},\n", c.name, c.name));
        }
        out.push_str("    }\n    return total_reward, reward_components\n");
        out
    }

    /// Temperatures that reach the optimum, in canonical hyperparameter order.
    pub fn optimal_theta(&self) -> Vec<f64> {
        self.concepts.iter().map(|c| c.target_log_temp.exp()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SyntheticPreset {
    #[serde(rename = "synthetic-d2")]
    D2,
    #[serde(rename = "synthetic-d4")]
    D4,
    #[serde(rename = "synthetic-d6")]
    D6,
    /// Six tunables of which only the first two matter.
    #[serde(rename = "synthetic-d6-m2")]
    D6M2,
}

impl SyntheticPreset {
    pub const ALL: [SyntheticPreset; 4] = [Self::D2, Self::D4, Self::D6, Self::D6M2];

    pub fn name(self) -> &'static str {
        match self {
            Self::D2 => "synthetic-d2",
            Self::D4 => "synthetic-d4",
            Self::D6 => "synthetic-d6",
            Self::D6M2 => "synthetic-d6-m2",
        }
    }

    pub fn spec(self) -> SyntheticTaskSpec {
        const NAMES: [(&str, &str); 6] = [
            ("forward_velocity_reward", "forward velocity reward"),
            ("action_energy_penalty", "action energy penalty"),
            ("upright_posture_bonus", "upright posture bonus"),
            ("joint_limit_cost", "joint limit cost"),
            ("goal_distance_shaping", "goal distance shaping"),
            ("contact_force_term", "contact force term"),
        ];
        const TARGETS: [f64; 6] = [0.9, -1.1, 1.4, -0.5, 0.6, -1.6];
        const RELEVANCE: [f64; 6] = [1.0, 0.6, 0.8, 0.4, 0.7, 0.5];
        let (d, relevance): (usize, [f64; 6]) = match self {
            Self::D2 => (2, RELEVANCE),
            Self::D4 => (4, RELEVANCE),
            Self::D6 => (6, RELEVANCE),
            Self::D6M2 => (6, [1.0, 1.0, 0.0, 0.0, 0.0, 0.0]),
        };
        let concepts: Vec<Concept> = (0..d)
            .map(|i| Concept {
                name: NAMES[i].0.to_string(),
                description: NAMES[i].1.to_string(),
                relevance: relevance[i],
                target_log_temp: if relevance[i] > 0.0 { TARGETS[i] } else { 0.0 },
            })
            .collect();
        let mut spec = SyntheticTaskSpec {
            task_name: self.name().to_string(),
            concepts,
            noise_std: 0.0,
            coverage_bonus: default_coverage_bonus(),
            irrelevant_penalty: default_irrelevant_penalty(),
            match_threshold: default_match_threshold(),
            human_score: 0.0,
            sparse_score: 0.0,
            task_description: "to make the ant-like robot run forward as fast as possible while staying upright".to_string(),
            environment_code: ENV_CODE.to_string(),
        };
        spec.human_score = 0.6 * spec.optimum();
        spec
    }
}

const ENV_CODE: &str = "class SyntheticRunner:\n    def compute_observations(self):\n        self.obs = {\n            \"forward_velocity_reward\": self.root_vel[:, 0] - self.target_speed,\n            \"action_energy_penalty\": self.actions.pow(2).sum(-1),\n            \"upright_posture_bonus\": 1.0 - self.up_proj,\n            \"joint_limit_cost\": self.dof_limit_violation.sum(-1),\n            \"goal_distance_shaping\": torch.norm(self.goal_pos - self.root_pos, dim=-1),\n            \"contact_force_term\": self.contact_forces.clamp(0.0, 10.0).sum(-1),\n        }\n";

impl fmt::Display for SyntheticPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SyntheticPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| format!("unknown synthetic preset `{s}`"))
    }
}

/// Per-component contribution to a synthetic fitness.
#[derive(Clone, Debug, PartialEq)]
pub struct Contribution {
    pub component: String,
    pub concept: Option<usize>,
    pub share: f64,
}

pub struct SyntheticEvaluator {
    spec: SyntheticTaskSpec,
    engine: SimilarityEngine,
    matches: Mutex<HashMap<String, Option<usize>>>,
}

impl SyntheticEvaluator {
    pub fn new(spec: SyntheticTaskSpec) -> Result<Self, TaskSpecError> {
        spec.validate()?;
        Ok(Self { spec, engine: SimilarityEngine::offline(), matches: Mutex::new(HashMap::new()) })
    }

    pub fn preset(preset: SyntheticPreset) -> Self {
        Self::new(preset.spec()).expect("presets are valid")
    }

    pub fn spec(&self) -> &SyntheticTaskSpec {
        &self.spec
    }

    /// Best-matching concept for a component name, if any clears the
    /// threshold. Ties go to the earlier concept.
    pub fn match_concept(&self, component_name: &str) -> Option<usize> {
        if let Some(hit) = self.matches.lock().expect("match cache poisoned").get(component_name) {
            return *hit;
        }
        let label = component_name.replace('_', " ");
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in self.spec.concepts.iter().enumerate() {
            let Ok(score) = self.engine.combined(&label, &c.description) else { continue };
            let s = score.value();
            if s >= self.spec.match_threshold && best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
        let hit = best.map(|(i, _)| i);
        self.matches.lock().expect("match cache poisoned").insert(component_name.to_string(), hit);
        hit
    }

    /// Noise-free per-component breakdown and total fitness.
    pub fn breakdown(&self, sample: &RewardFunctionSample, theta: &[f64]) -> (Vec<Contribution>, f64) {
        let mut credited = vec![false; self.spec.concepts.len()];
        let mut parts = Vec::with_capacity(sample.components.len());
        for comp in &sample.components {
            let concept = self.match_concept(&comp.name).filter(|&i| !credited[i]);
            let share = match concept {
                Some(i) => {
                    credited[i] = true;
                    let logs: Vec<f64> = sample
                        .hyperparameters
                        .iter()
                        .zip(theta)
                        .filter(|(h, _)| mentions_identifier(&comp.body_text, &h.name))
                        .map(|(_, &v)| v.abs().max(f64::MIN_POSITIVE).ln())
                        .collect();
                    let log_temp = if logs.is_empty() { 0.0 } else { logs.iter().sum::<f64>() / logs.len() as f64 };
                    let c = &self.spec.concepts[i];
                    c.relevance * (-(log_temp - c.target_log_temp).powi(2)).exp()
                }
                None => -self.spec.irrelevant_penalty,
            };
            parts.push(Contribution { component: comp.name.clone(), concept, share });
        }
        let relevant = self.spec.concepts.iter().filter(|c| c.relevance > 0.0).count();
        let covered = self.spec.concepts.iter().zip(&credited).filter(|(c, &hit)| hit && c.relevance > 0.0).count();
        let coverage = self.spec.coverage_bonus * covered as f64 / relevant as f64;
        let total = parts.iter().map(|p| p.share).sum::<f64>() + coverage;
        (parts, total)
    }

    fn noise(&self, request: &EvaluationRequest<'_>) -> f64 {
        if self.spec.noise_std == 0.0 {
            return 0.0;
        }
        let mut path: Vec<u64> = vec![request.sample.sample_id as u64];
        path.extend(request.theta.iter().map(|v| v.to_bits()));
        let mut rng = seq::rng(seq::derive_seed(request.seed, &path));
        Normal::new(0.0, self.spec.noise_std).expect("validated noise").sample(&mut rng)
    }
}

impl Evaluator for SyntheticEvaluator {
    fn evaluate(&self, request: &EvaluationRequest<'_>) -> Result<EvaluationRecord, EvaluatorError> {
        let n = request.sample.hyperparameters.len();
        if request.theta.len() != n {
            return Err(EvaluatorError::ThetaLength { expected: n, got: request.theta.len() });
        }
        let (parts, total) = self.breakdown(request.sample, &request.theta);
        let stats = parts
            .iter()
            .map(|p| {
                let spread = 0.25 * p.share.abs();
                (p.component.clone(), ComponentStats { max: p.share + spread, mean: p.share, min: p.share - spread })
            })
            .collect();
        Ok(EvaluationRecord::success(request.sample.sample_id, request.theta.clone(), total + self.noise(request), stats))
    }

    fn max_parallel(&self) -> usize {
        usize::MAX
    }

    fn hns_baselines(&self) -> Option<(f64, f64)> {
        Some((self.spec.human_score, self.spec.sparse_score))
    }
}

// ---------------------------------------------------------------------------
// External command

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalEvaluatorConfig {
    /// Program to run; receives the work directory as its last argument.
    pub command: String,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: f64,
    #[serde(default = "default_output_file")]
    pub output_file: String,
    #[serde(default = "default_max_parallel")]
    pub max_parallel: usize,
    /// Parent directory for work directories (system temp when unset).
    #[serde(default)]
    pub work_root: Option<PathBuf>,
    #[serde(default)]
    pub keep_workdirs: bool,
}

fn default_timeout_s() -> f64 {
    3600.0
}

fn default_output_file() -> String {
    "result.json".to_string()
}

fn default_max_parallel() -> usize {
    1
}

/// Why an external evaluation produced no fitness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExternalFailure {
    #[error("timeout after {0:.1}s")]
    Timeout(f64),
    #[error("non-zero exit: {0}")]
    NonZeroExit(String),
    #[error("malformed output: {0}")]
    MalformedOutput(String),
}

#[derive(Deserialize)]
struct ResultFile {
    fitness: f64,
    #[serde(default)]
    component_stats: BTreeMap<String, ComponentStats>,
    #[serde(default)]
    #[allow(dead_code)]
    extra: Option<Value>,
}

pub struct ExternalEvaluator {
    config: ExternalEvaluatorConfig,
}

impl ExternalEvaluator {
    pub fn new(config: ExternalEvaluatorConfig) -> Self {
        Self { config }
    }

    fn run(&self, request: &EvaluationRequest<'_>) -> Result<Result<(f64, BTreeMap<String, ComponentStats>), ExternalFailure>, EvaluatorError> {
        let sample = request.sample;
        let pairs: Vec<(&str, f64)> = sample.hyperparameters.iter().zip(&request.theta).map(|(h, &v)| (h.name.as_str(), v)).collect();
        let code = substitute_hyperparameters(&sample.code_text, &pairs).map_err(|e| EvaluatorError::Substitution(e.0))?;
        let theta: serde_json::Map<String, Value> = pairs.iter().map(|(k, v)| (k.to_string(), Value::from(*v))).collect();
        let body = serde_json::json!({
            "code": code,
            "theta": theta,
            "sample_id": sample.sample_id,
            "iteration": request.iteration,
        });

        let mut builder = tempfile::Builder::new();
        builder.prefix("urdp-eval-");
        let dir = match &self.config.work_root {
            Some(root) => builder.tempdir_in(root),
            None => builder.tempdir(),
        }
        .map_err(|e| EvaluatorError::Io(e.to_string()))?;
        let io = |e: std::io::Error| EvaluatorError::Io(e.to_string());
        std::fs::write(dir.path().join("request.json"), serde_json::to_vec_pretty(&body).expect("request serializes")).map_err(io)?;
        let stdout = std::fs::File::create(dir.path().join("stdout.log")).map_err(io)?;
        let stderr = std::fs::File::create(dir.path().join("stderr.log")).map_err(io)?;

        let mut child = Command::new(&self.config.command)
            .args(&self.config.args)
            .arg(dir.path())
            .stdin(Stdio::null())
            .stdout(stdout)
            .stderr(stderr)
            .spawn()
            .map_err(|e| EvaluatorError::Spawn { command: self.config.command.clone(), reason: e.to_string() })?;

        let deadline = Instant::now() + Duration::from_secs_f64(self.config.timeout_s.max(0.0));
        let status = loop {
            if let Some(status) = child.try_wait().map_err(io)? {
                break status;
            }
            if Instant::now() >= deadline {
                let _ = child.kill();
                let _ = child.wait();
                return Ok(Err(ExternalFailure::Timeout(self.config.timeout_s)));
            }
            std::thread::sleep(Duration::from_millis(10));
        };

        let outcome = if !status.success() {
            Err(ExternalFailure::NonZeroExit(status.to_string()))
        } else {
            match std::fs::read_to_string(dir.path().join(&self.config.output_file)) {
                Err(e) => Err(ExternalFailure::MalformedOutput(format!("{}: {e}", self.config.output_file))),
                Ok(text) => match serde_json::from_str::<ResultFile>(&text) {
                    Ok(r) if r.fitness.is_finite() => Ok((r.fitness, r.component_stats)),
                    Ok(r) => Err(ExternalFailure::MalformedOutput(format!("non-finite fitness {}", r.fitness))),
                    Err(e) => Err(ExternalFailure::MalformedOutput(e.to_string())),
                },
            }
        };
        if self.config.keep_workdirs {
            let kept = dir.keep();
            log::info!("kept evaluator work dir {}", kept.display());
        }
        Ok(outcome)
    }
}

impl Evaluator for ExternalEvaluator {
    fn evaluate(&self, request: &EvaluationRequest<'_>) -> Result<EvaluationRecord, EvaluatorError> {
        let n = request.sample.hyperparameters.len();
        if request.theta.len() != n {
            return Err(EvaluatorError::ThetaLength { expected: n, got: request.theta.len() });
        }
        let id = request.sample.sample_id;
        Ok(match self.run(request)? {
            Ok((fitness, stats)) => EvaluationRecord::success(id, request.theta.clone(), fitness, stats),
            Err(failure) => {
                log::warn!("evaluation of sample {id} failed: {failure}");
                EvaluationRecord::failed(id, request.theta.clone(), failure.to_string())
            }
        })
    }

    fn max_parallel(&self) -> usize {
        self.config.max_parallel.max(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_reward_sample, ParseConfig};

    fn request(sample: &RewardFunctionSample, theta: Vec<f64>) -> EvaluationRequest<'_> {
        EvaluationRequest { sample, theta, run_id: "t".into(), iteration: 1, attempt: 0, seed: 3 }
    }

    fn canonical(preset: SyntheticPreset) -> (SyntheticEvaluator, RewardFunctionSample) {
        let ev = SyntheticEvaluator::preset(preset);
        let sample = parse_reward_sample(&ev.spec().canonical_code(), &ParseConfig::default()).unwrap();
        (ev, sample)
    }

    #[test]
    fn hns_examples() {
        assert_eq!(hns(1.0, 1.0, 0.0).unwrap(), 1.0);
        assert_eq!(hns(0.3, 1.0, 0.3).unwrap(), 0.0);
        assert_eq!(hns(2.0, 1.0, 0.0).unwrap(), 2.0);
        assert_eq!(hns(1.0, 2.0, 2.0), Err(DegenerateBaseline(2.0)));
    }

    #[test]
    fn canonical_components_match_their_own_concepts() {
        for preset in SyntheticPreset::ALL {
            let (ev, sample) = canonical(preset);
            assert_eq!(sample.hyperparameters.len(), ev.spec().concepts.len());
            for (i, c) in sample.components.iter().enumerate() {
                assert_eq!(ev.match_concept(&c.name), Some(i), "{preset}: {}", c.name);
            }
        }
    }

    #[test]
    fn full_vocabulary_at_targets_scores_optimum() {
        for preset in SyntheticPreset::ALL {
            let (ev, sample) = canonical(preset);
            let rec = ev.evaluate(&request(&sample, ev.spec().optimal_theta())).unwrap();
            let expected: f64 = ev.spec().concepts.iter().map(|c| c.relevance).sum::<f64>() + ev.spec().coverage_bonus;
            assert!((rec.fitness.unwrap() - expected).abs() < 1e-12);
            assert_eq!(rec.component_stats.len(), sample.components.len());
        }
    }

    #[test]
    fn unmatched_components_are_penalized() {
        let ev = SyntheticEvaluator::preset(SyntheticPreset::D2);
        let code = "def compute_reward(obs):\n    alive_temp = 1.0\n    survival_time = obs[\"alive\"] * alive_temp\n    smoothness = -obs[\"jerk\"]\n    return survival_time, {\"survival_time\": survival_time, \"smoothness\": smoothness}\n";
        let sample = parse_reward_sample(code, &ParseConfig::default()).unwrap();
        let rec = ev.evaluate(&request(&sample, vec![1.0])).unwrap();
        assert!((rec.fitness.unwrap() + 2.0 * ev.spec().irrelevant_penalty).abs() < 1e-12);
    }

    #[test]
    fn one_decade_off_target() {
        let spec = SyntheticTaskSpec {
            task_name: "one".into(),
            concepts: vec![Concept { name: "forward_velocity_reward".into(), description: "forward velocity reward".into(), relevance: 1.0, target_log_temp: 0.0 }],
            noise_std: 0.0,
            coverage_bonus: 0.5,
            irrelevant_penalty: 0.2,
            match_threshold: 0.7,
            human_score: 1.0,
            sparse_score: 0.0,
            task_description: String::new(),
            environment_code: String::new(),
        };
        let ev = SyntheticEvaluator::new(spec).unwrap();
        let sample = parse_reward_sample(&ev.spec().canonical_code(), &ParseConfig::default()).unwrap();
        let f = ev.evaluate(&request(&sample, vec![10.0])).unwrap().fitness.unwrap();
        let gap = 10f64.ln();
        assert!((gap - 2.302_585).abs() < 1e-6);
        assert!((f - 0.5 - (-gap * gap).exp()).abs() < 1e-12);
        assert!((f - 0.5 - 0.004_982_128).abs() < 1e-9);
    }

    #[test]
    fn optimum_is_at_targets_on_a_grid() {
        let (ev, sample) = canonical(SyntheticPreset::D2);
        let target = ev.spec().optimal_theta();
        let best = ev.breakdown(&sample, &target).1;
        for i in 0..=60 {
            for j in 0..=60 {
                let theta = [sample.hyperparameters[0].from_unit(i as f64 / 60.0), sample.hyperparameters[1].from_unit(j as f64 / 60.0)];
                assert!(ev.breakdown(&sample, &theta).1 <= best + 1e-12);
            }
        }
    }

    #[test]
    fn noise_is_seeded() {
        let mut spec = SyntheticPreset::D2.spec();
        spec.noise_std = 0.1;
        let ev = SyntheticEvaluator::new(spec).unwrap();
        let sample = parse_reward_sample(&ev.spec().canonical_code(), &ParseConfig::default()).unwrap();
        let a = ev.evaluate(&request(&sample, vec![1.0, 1.0])).unwrap();
        let b = ev.evaluate(&request(&sample, vec![1.0, 1.0])).unwrap();
        assert_eq!(a, b);
        let mut r = request(&sample, vec![1.0, 1.0]);
        r.seed = 4;
        assert_ne!(ev.evaluate(&r).unwrap().fitness, a.fitness);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = SyntheticPreset::D2.spec();
        spec.sparse_score = spec.human_score;
        assert_eq!(SyntheticEvaluator::new(spec).err(), Some(TaskSpecError::DegenerateBaseline));
        let mut spec = SyntheticPreset::D2.spec();
        spec.concepts.iter_mut().for_each(|c| c.relevance = 0.0);
        assert_eq!(SyntheticEvaluator::new(spec).err(), Some(TaskSpecError::NoRelevantConcept));
    }

    #[cfg(unix)]
    mod external {
        use super::*;
        use std::os::unix::fs::PermissionsExt;

        fn script(dir: &std::path::Path, body: &str) -> ExternalEvaluatorConfig {
            let path = dir.join("harness.sh");
            std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
            std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
            ExternalEvaluatorConfig {
                command: path.to_string_lossy().into_owned(),
                args: vec![],
                timeout_s: 5.0,
                output_file: "result.json".into(),
                max_parallel: 1,
                work_root: None,
                keep_workdirs: false,
            }
        }

        fn sample() -> RewardFunctionSample {
            let code = "def compute_reward(obs):\n    speed_temp = 1.0\n    speed = obs[\"v\"] * speed_temp\n    return speed, {\"speed\": speed}\n";
            parse_reward_sample(code, &ParseConfig::default()).unwrap().with_ids(2, 5)
        }

        #[test]
        fn passes_fitness_through_and_writes_request() {
            let dir = tempfile::tempdir().unwrap();
            let log = dir.path().join("seen.json");
            let cfg = script(
                dir.path(),
                &format!("cp \"$1/request.json\" '{}'\necho '{{\"fitness\": 0.42, \"component_stats\": {{\"speed\": {{\"max\": 1, \"mean\": 0.5, \"min\": 0}}}}}}' > \"$1/result.json\"", log.display()),
            );
            let s = sample();
            let rec = ExternalEvaluator::new(cfg).evaluate(&request(&s, vec![2.5])).unwrap();
            assert_eq!(rec.fitness, Some(0.42));
            assert_eq!(rec.component_stats["speed"].mean, 0.5);
            let seen: Value = serde_json::from_str(&std::fs::read_to_string(log).unwrap()).unwrap();
            assert_eq!(seen["theta"]["speed_temp"], 2.5);
            assert_eq!(seen["sample_id"], 5);
            assert_eq!(seen["iteration"], 1);
            assert!(seen["code"].as_str().unwrap().contains("speed_temp = 2.5"));
        }

        #[test]
        fn timeout_marks_record_failed() {
            let dir = tempfile::tempdir().unwrap();
            let mut cfg = script(dir.path(), "sleep 10");
            cfg.timeout_s = 0.3;
            let s = sample();
            let start = Instant::now();
            let rec = ExternalEvaluator::new(cfg).evaluate(&request(&s, vec![1.0])).unwrap();
            assert!(start.elapsed() < Duration::from_secs_f64(1.3));
            assert!(rec.is_failed());
            assert!(rec.error.unwrap().starts_with("timeout"));
        }

        #[test]
        fn malformed_and_nonzero_are_failures() {
            let dir = tempfile::tempdir().unwrap();
            let s = sample();
            let rec = ExternalEvaluator::new(script(dir.path(), "echo 'not json' > \"$1/result.json\"")).evaluate(&request(&s, vec![1.0])).unwrap();
            assert!(rec.error.unwrap().starts_with("malformed output"));
            let rec = ExternalEvaluator::new(script(dir.path(), "exit 3")).evaluate(&request(&s, vec![1.0])).unwrap();
            assert!(rec.error.unwrap().starts_with("non-zero exit"));
        }

        #[test]
        fn missing_command_is_an_error() {
            let cfg = ExternalEvaluatorConfig {
                command: "/nonexistent/harness".into(),
                args: vec![],
                timeout_s: 1.0,
                output_file: "result.json".into(),
                max_parallel: 1,
                work_root: None,
                keep_workdirs: false,
            };
            let s = sample();
            assert!(matches!(ExternalEvaluator::new(cfg).evaluate(&request(&s, vec![1.0])), Err(EvaluatorError::Spawn { .. })));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn irrelevant_component_never_helps(units in proptest::collection::vec(0.0f64..1.0, 4), extra in "[a-z]{4,9}") {
                let (ev, sample) = canonical(SyntheticPreset::D4);
                let theta = sample.from_unit(&units);
                let base = ev.breakdown(&sample, &theta).1;
                let mut more = sample.clone();
                more.components.push(crate::model::RewardComponent::new(format!("zz_{extra}_misc"), format!("zz_{extra}_misc = obs.x")));
                prop_assert!(ev.breakdown(&more, &theta).1 <= base + 1e-12);
            }

            #[test]
            fn hns_matches_formula(m in -10.0f64..10.0, h in -10.0f64..10.0, s in -10.0f64..10.0) {
                prop_assume!(h != s);
                prop_assert_eq!(hns(m, h, s).unwrap(), (m - s) / (h - s).abs());
            }
        }
    }
}
