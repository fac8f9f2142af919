//! The outer loop: sample candidates from the language model, screen them
//! by self-consistency, tune each survivor's intensities, reflect, repeat.

pub mod llm;
pub mod prompts;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluator::{hns, Evaluator};
use crate::model::{extract_code_block, parse_reward_sample, substitute_hyperparameters, ParseConfig, RewardFunctionSample, SubstitutionMiss};
use crate::seq;
use crate::similarity::{EmbeddingProvider, HashEmbedder, HttpEmbedder, HttpEmbedderConfig, ProviderError, SimilarityEngine};
use crate::uabo::{allocate_budget, map_component_u_to_dims, run_inner_loop, InnerLoopConfig, InnerLoopError, InnerLoopResult, InnerLoopTask};
use crate::uncertainty::{score_dispersion, UncertaintyError, UncertaintyReport, DEFAULT_OMEGA};
use crate::model::EvaluationRecord;

pub use llm::{ChatMessage, ChatSlot, HttpChatClient, LlmClient, LlmClientConfig, LlmError, ScriptedLlm};
pub use prompts::{build_reflection_prompt, initial_user_prompt, TaskBundle};

pub const LEDGER_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LlmBackend {
    Http(LlmClientConfig),
    /// Response files `iter{n}_sample{k}.md`, resolved against the config
    /// file's directory when relative.
    Scripted { dir: PathBuf },
}

impl LlmBackend {
    pub fn build(&self) -> Result<Box<dyn LlmClient>, LlmError> {
        Ok(match self {
            LlmBackend::Http(c) => Box::new(HttpChatClient::new(c)?),
            LlmBackend::Scripted { dir } => Box::new(ScriptedLlm::new(dir.clone())),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EmbedderBackend {
    /// Offline hashed bag-of-tokens embedder.
    Mock {
        #[serde(default = "default_embed_dim")]
        dim: usize,
    },
    Http(HttpEmbedderConfig),
}

fn default_embed_dim() -> usize {
    256
}

impl Default for EmbedderBackend {
    fn default() -> Self {
        EmbedderBackend::Mock { dim: default_embed_dim() }
    }
}

impl EmbedderBackend {
    pub fn engine(&self) -> Result<SimilarityEngine, ProviderError> {
        let provider: Arc<dyn EmbeddingProvider> = match self {
            EmbedderBackend::Mock { dim } => Arc::new(HashEmbedder::new(*dim)),
            EmbedderBackend::Http(c) => Arc::new(HttpEmbedder::new(c)?),
        };
        Ok(SimilarityEngine::new(provider))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HnsBaselines {
    pub human: f64,
    pub sparse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuterLoopConfig {
    #[serde(default = "default_k")]
    pub k_samples: usize,
    #[serde(default = "default_n_outer")]
    pub n_outer_max: usize,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default = "default_stop_std")]
    pub stop_std: f64,
    #[serde(default = "default_stop_range")]
    pub stop_range: f64,
    /// Evaluate only one representative per similarity group.
    #[serde(default = "default_true")]
    pub filter_redundant: bool,
    /// Fills `{epoch_freq}` in the reflection prompt.
    #[serde(default = "default_epoch_freq")]
    pub epoch_freq: usize,
    /// Concurrent chat requests within one iteration.
    #[serde(default = "default_workers")]
    pub llm_concurrency: usize,
    /// Concurrent inner loops, further capped by the evaluator.
    #[serde(default = "default_workers")]
    pub inner_workers: usize,
    /// Overrides the evaluator's own HNS baselines.
    #[serde(default)]
    pub hns_baselines: Option<HnsBaselines>,
    pub llm: LlmBackend,
    #[serde(default)]
    pub embedder: EmbedderBackend,
    #[serde(default)]
    pub parse: ParseConfig,
    #[serde(default)]
    pub inner: InnerLoopConfig,
}

fn default_k() -> usize {
    16
}
fn default_n_outer() -> usize {
    10
}
fn default_omega() -> f64 {
    DEFAULT_OMEGA
}
fn default_stop_std() -> f64 {
    0.05
}
fn default_stop_range() -> f64 {
    0.1
}
fn default_true() -> bool {
    true
}
fn default_epoch_freq() -> usize {
    10
}
fn default_workers() -> usize {
    4
}

impl OuterLoopConfig {
    pub fn new(llm: LlmBackend) -> Self {
        Self {
            k_samples: default_k(),
            n_outer_max: default_n_outer(),
            omega: default_omega(),
            stop_std: default_stop_std(),
            stop_range: default_stop_range(),
            filter_redundant: true,
            epoch_freq: default_epoch_freq(),
            llm_concurrency: default_workers(),
            inner_workers: default_workers(),
            hns_baselines: None,
            llm,
            embedder: EmbedderBackend::default(),
            parse: ParseConfig::default(),
            inner: InnerLoopConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), OrchestratorError> {
        let bad = |m: String| Err(OrchestratorError::Config(m));
        if self.k_samples == 0 {
            return bad("k_samples must be at least 1".into());
        }
        if self.n_outer_max == 0 {
            return bad("n_outer_max must be at least 1".into());
        }
        if !(self.omega > 0.0 && self.omega < 1.0) {
            return bad(format!("omega must lie in (0, 1), got {}", self.omega));
        }
        if !(self.stop_std >= 0.0 && self.stop_range >= 0.0) {
            return bad("stop thresholds must be non-negative".into());
        }
        if self.llm_concurrency == 0 || self.inner_workers == 0 {
            return bad("worker counts must be at least 1".into());
        }
        if let LlmBackend::Http(c) = &self.llm {
            if !(c.base_url.starts_with("http://") || c.base_url.starts_with("https://")) {
                return bad(format!("llm.base_url is not an http(s) URL: {}", c.base_url));
            }
        }
        self.inner.validate().map_err(|e| OrchestratorError::Config(format!("inner: {e}")))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrchestratorError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("iteration {iteration}: no response produced a parseable reward function")]
    InsufficientSamples { iteration: usize },
    #[error(transparent)]
    Embedder(#[from] ProviderError),
    #[error(transparent)]
    Uncertainty(#[from] UncertaintyError),
    #[error(transparent)]
    InnerLoop(#[from] InnerLoopError),
    #[error(transparent)]
    Substitution(#[from] SubstitutionMiss),
    #[error("no evaluation in the run produced a finite fitness")]
    NoSuccessfulEvaluation,
}

/// One chat-completion request and what came of it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LlmCallRecord {
    pub sample: usize,
    pub attempt: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_error: Option<String>,
}

impl LlmCallRecord {
    pub fn parsed(&self) -> bool {
        self.response.is_some() && self.parse_error.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailedInnerLoop {
    pub sample_id: usize,
    pub budget: usize,
    pub reason: String,
    pub history: Vec<EvaluationRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    pub std: f64,
    pub range: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub llm_calls: Vec<LlmCallRecord>,
    pub samples: Vec<RewardFunctionSample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<UncertaintyReport>,
    /// Budget per retained sample id.
    pub budgets: BTreeMap<usize, usize>,
    pub inner_loops: Vec<InnerLoopResult>,
    pub failed_inner_loops: Vec<FailedInnerLoop>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersion: Option<Dispersion>,
    pub stopped: bool,
    /// Feedback sent with the next iteration's requests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflection_prompt: Option<String>,
}

impl IterationRecord {
    pub fn nlc(&self) -> usize {
        self.llm_calls.len()
    }

    pub fn noe(&self) -> usize {
        self.inner_loops.iter().map(|r| r.evaluations_used).sum::<usize>() + self.failed_inner_loops.iter().map(|f| f.history.len()).sum::<usize>()
    }

    /// Best successful inner loop; ties go to the lowest sample id.
    pub fn best(&self) -> Option<&InnerLoopResult> {
        self.inner_loops.iter().fold(None, |acc: Option<&InnerLoopResult>, r| match acc {
            Some(b) if b.best_fitness > r.best_fitness || (b.best_fitness == r.best_fitness && b.sample_id <= r.sample_id) => Some(b),
            _ => Some(r),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestReward {
    pub iteration: usize,
    pub sample_id: usize,
    pub fitness: f64,
    pub theta: Vec<f64>,
    pub named_theta: BTreeMap<String, f64>,
    pub code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hns: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    /// Ran all `n_outer_max` iterations.
    Completed,
    /// Stopped early on the dispersion rule.
    Converged,
    Failed { error: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunLedger {
    pub schema_version: u32,
    pub run_id: String,
    pub config: OuterLoopConfig,
    pub task: TaskBundle,
    pub iterations: Vec<IterationRecord>,
    /// Total evaluations.
    pub noe: usize,
    /// Total chat-completion requests.
    pub nlc: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best: Option<BestReward>,
    pub status: RunStatus,
}

impl RunLedger {
    fn new(cfg: &OuterLoopConfig, task: &TaskBundle) -> Self {
        Self {
            schema_version: LEDGER_SCHEMA_VERSION,
            run_id: format!("urdp-{:016x}", seq::derive_seed(cfg.inner.seed, &[0x7275_6e]),),
            config: cfg.clone(),
            task: task.clone(),
            iterations: Vec::new(),
            noe: 0,
            nlc: 0,
            best: None,
            status: RunStatus::Running,
        }
    }

    /// Recomputes both counters from the itemized records.
    pub fn audit(&self) -> (usize, usize) {
        (self.iterations.iter().map(IterationRecord::noe).sum(), self.iterations.iter().map(IterationRecord::nlc).sum())
    }

    /// Sets every evaluation wall time to zero, for comparing runs.
    pub fn without_wall_times(mut self) -> Self {
        for it in &mut self.iterations {
            let loops = it.inner_loops.iter_mut().flat_map(|r| r.history.iter_mut());
            let failed = it.failed_inner_loops.iter_mut().flat_map(|f| f.history.iter_mut());
            loops.chain(failed).for_each(|r| r.wall_time = 0.0);
        }
        self
    }
}

/// A run aborted; the ledger holds everything completed before the error.
#[derive(Debug, Error)]
#[error("{error}")]
pub struct RunFailure {
    pub ledger: Box<RunLedger>,
    pub error: OrchestratorError,
}

/// Result of one generation round.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub calls: Vec<LlmCallRecord>,
    pub samples: Vec<RewardFunctionSample>,
}

fn parse_response(response: &str, parse: &ParseConfig) -> Result<RewardFunctionSample, String> {
    let code = extract_code_block(response).ok_or_else(|| "no fenced code block".to_string())?;
    parse_reward_sample(&code, parse).map_err(|e| e.to_string())
}

/// One request per slot, one retry on a parse failure. Returns the call
/// records made so far alongside any error.
fn request_slot(llm: &dyn LlmClient, messages: &[ChatMessage], iteration: usize, k: usize, parse: &ParseConfig) -> (Vec<LlmCallRecord>, Result<Option<RewardFunctionSample>, LlmError>) {
    let mut calls = Vec::new();
    for attempt in 0..2 {
        let mut rec = LlmCallRecord { sample: k, attempt, response: None, error: None, parse_error: None };
        match llm.chat(messages, ChatSlot { iteration, sample: k, attempt }) {
            Err(e) => {
                rec.error = Some(e.to_string());
                calls.push(rec);
                return (calls, Err(e));
            }
            Ok(text) => {
                let parsed = parse_response(&text, parse);
                rec.response = Some(text);
                match parsed {
                    Ok(s) => {
                        calls.push(rec);
                        return (calls, Ok(Some(s.with_ids(iteration, k))));
                    }
                    Err(e) => {
                        log::warn!("iteration {iteration}, sample {k}: unparseable response ({e})");
                        rec.parse_error = Some(e);
                        calls.push(rec);
                    }
                }
            }
        }
    }
    (calls, Ok(None))
}

/// Issues `k_samples` requests with the given conversation and parses the
/// first code block of each response. Sample ids are the slot indices.
pub fn sample_candidates(messages: &[ChatMessage], cfg: &OuterLoopConfig, llm: &dyn LlmClient, iteration: usize) -> (Vec<LlmCallRecord>, Result<Vec<RewardFunctionSample>, OrchestratorError>) {
    let k = cfg.k_samples;
    let slots: Vec<Mutex<Option<(Vec<LlmCallRecord>, Result<Option<RewardFunctionSample>, LlmError>)>>> = (0..k).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..cfg.llm_concurrency.min(k).max(1) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= k {
                    break;
                }
                let out = request_slot(llm, messages, iteration, i, &cfg.parse);
                *slots[i].lock().expect("slot poisoned") = Some(out);
            });
        }
    });
    let mut calls = Vec::new();
    let mut samples = Vec::new();
    let mut first_err = None;
    for slot in slots {
        let (c, r) = slot.into_inner().expect("slot poisoned").expect("every slot is filled");
        calls.extend(c);
        match r {
            Ok(Some(s)) => samples.push(s),
            Ok(None) => {}
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let result = match first_err {
        Some(e) => Err(e.into()),
        None if samples.is_empty() => Err(OrchestratorError::InsufficientSamples { iteration }),
        None => Ok(samples),
    };
    (calls, result)
}

/// The sample's code with every hyperparameter literal set to `theta`.
pub fn recombine(sample: &RewardFunctionSample, theta: &[f64]) -> Result<String, SubstitutionMiss> {
    let values: Vec<(&str, f64)> = sample.hyperparameters.iter().zip(theta).map(|(h, &v)| (h.name.as_str(), v)).collect();
    substitute_hyperparameters(&sample.code_text, &values)
}

fn refinement_messages(base: &[ChatMessage], best_code: &str, reflection: &str) -> Vec<ChatMessage> {
    let mut m = base.to_vec();
    m.push(ChatMessage::assistant(format!("```python\n{best_code}\n```")));
    m.push(ChatMessage::user(format!("{reflection}\n\n{}", prompts::CODE_FORMAT_TIP)));
    m
}

/// Runs inner loops for the retained samples, at most `workers` at a time.
/// Results come back in `samples` order.
fn run_inner_loops(
    samples: &[&RewardFunctionSample],
    report: &UncertaintyReport,
    budgets: &BTreeMap<usize, usize>,
    iteration: usize,
    run_id: &str,
    evaluator: &dyn Evaluator,
    inner: &InnerLoopConfig,
    workers: usize,
) -> Vec<Result<InnerLoopResult, InnerLoopError>> {
    let slots: Vec<Mutex<Option<Result<InnerLoopResult, InnerLoopError>>>> = samples.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..workers.min(samples.len()).max(1) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= samples.len() {
                    break;
                }
                let sample = samples[i];
                let id = sample.sample_id;
                let empty = BTreeMap::new();
                let task = InnerLoopTask {
                    sample,
                    dim_u: map_component_u_to_dims(sample, report.component_u.get(&id).unwrap_or(&empty)),
                    sample_u: report.raw_sample_u.get(&id).copied().unwrap_or(1.0),
                    budget: budgets[&id],
                    iteration,
                    run_id: run_id.to_string(),
                };
                let out = run_inner_loop(&task, evaluator, inner);
                *slots[i].lock().expect("slot poisoned") = Some(out);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot poisoned").expect("every slot is filled")).collect()
}

fn fail(mut ledger: RunLedger, error: OrchestratorError) -> RunFailure {
    ledger.status = RunStatus::Failed { error: error.to_string() };
    RunFailure { ledger: Box::new(ledger), error }
}

/// Executes the full outer loop. `observer` sees the ledger after every
/// iteration so callers can persist progress.
pub fn run(
    cfg: &OuterLoopConfig,
    task: &TaskBundle,
    evaluator: &dyn Evaluator,
    llm: &dyn LlmClient,
    observer: &mut dyn FnMut(&RunLedger),
) -> Result<RunLedger, RunFailure> {
    let mut ledger = RunLedger::new(cfg, task);
    if let Err(e) = cfg.validate() {
        return Err(fail(ledger, e));
    }
    let engine = match cfg.embedder.engine() {
        Ok(e) => e,
        Err(e) => return Err(fail(ledger, e.into())),
    };
    let base = vec![ChatMessage::system(prompts::SYSTEM_PROMPT), ChatMessage::user(initial_user_prompt(task))];
    let mut messages = base.clone();
    let workers = cfg.inner_workers.min(evaluator.max_parallel().max(1));
    // (iteration, sample_id, fitness, theta, sample)
    let mut best: Option<(usize, InnerLoopResult, RewardFunctionSample)> = None;
    let mut converged = false;

    for n in 1..=cfg.n_outer_max {
        let (calls, sampled) = sample_candidates(&messages, cfg, llm, n);
        ledger.nlc += calls.len();
        let mut record = IterationRecord {
            iteration: n,
            llm_calls: calls,
            samples: Vec::new(),
            uncertainty: None,
            budgets: BTreeMap::new(),
            inner_loops: Vec::new(),
            failed_inner_loops: Vec::new(),
            dispersion: None,
            stopped: false,
            reflection_prompt: None,
        };
        let samples = match sampled {
            Ok(s) => s,
            Err(e) => {
                ledger.iterations.push(record);
                return Err(fail(ledger, e));
            }
        };
        record.samples = samples;

        let report = match UncertaintyReport::build_with(&record.samples, cfg.omega, &engine, cfg.filter_redundant) {
            Ok(r) => r,
            Err(e) => {
                ledger.iterations.push(record);
                return Err(fail(ledger, e.into()));
            }
        };
        let k_star = report.retained.len();
        for &id in &report.retained {
            let u = report.normalized_sample_u.get(&id).copied().unwrap_or(0.0);
            record.budgets.insert(id, allocate_budget(u, k_star, &cfg.inner));
        }
        let retained: Vec<&RewardFunctionSample> = report.retained.iter().filter_map(|id| record.samples.iter().find(|s| s.sample_id == *id)).collect();
        log::info!("iteration {n}: {} parsed, {k_star} retained, budgets {:?}", record.samples.len(), record.budgets);

        let results = run_inner_loops(&retained, &report, &record.budgets, n, &ledger.run_id, evaluator, &cfg.inner, workers);
        let mut abort = None;
        for (sample, res) in retained.iter().zip(results) {
            match res {
                Ok(r) => record.inner_loops.push(r),
                Err(InnerLoopError::AllEvaluationsFailed { sample_id, history }) => {
                    log::warn!("iteration {n}: sample {sample_id} produced no successful evaluation");
                    record.failed_inner_loops.push(FailedInnerLoop {
                        sample_id,
                        budget: record.budgets[&sample.sample_id],
                        reason: "all evaluations failed".into(),
                        history,
                    });
                }
                Err(e) => {
                    abort.get_or_insert(e);
                }
            }
        }
        record.uncertainty = Some(report);
        ledger.noe += record.noe();

        if let Some(e) = abort {
            ledger.iterations.push(record);
            return Err(fail(ledger, e.into()));
        }

        if let Some(it_best) = record.best() {
            if best.as_ref().map_or(true, |(_, b, _)| it_best.best_fitness > b.best_fitness) {
                let sample = retained.iter().find(|s| s.sample_id == it_best.sample_id).expect("inner loop of a retained sample");
                best = Some((n, it_best.clone(), (*sample).clone()));
            }
        }

        let scores: Vec<f64> = record.inner_loops.iter().map(|r| r.best_fitness).collect();
        if !scores.is_empty() {
            let (std, range) = score_dispersion(&scores);
            record.dispersion = Some(Dispersion { std, range });
            record.stopped = std < cfg.stop_std && range < cfg.stop_range;
        }

        if !record.stopped && n < cfg.n_outer_max {
            if let (Some(it_best), Some(d)) = (record.best(), record.dispersion) {
                let sample = retained.iter().find(|s| s.sample_id == it_best.sample_id).expect("inner loop of a retained sample");
                let code = match recombine(sample, &it_best.best_theta) {
                    Ok(c) => c,
                    Err(e) => {
                        ledger.iterations.push(record);
                        return Err(fail(ledger, e.into()));
                    }
                };
                let report = record.uncertainty.as_ref().expect("report set above");
                let reflection = build_reflection_prompt(it_best, report, (d.std, d.range), cfg.epoch_freq);
                messages = refinement_messages(&base, &code, &reflection);
                record.reflection_prompt = Some(reflection);
            }
        }

        let stopped = record.stopped;
        ledger.iterations.push(record);
        observer(&ledger);
        if stopped {
            log::info!("iteration {n}: sample scores converged, stopping");
            converged = true;
            break;
        }
    }

    let Some((iteration, result, sample)) = best else {
        return Err(fail(ledger, OrchestratorError::NoSuccessfulEvaluation));
    };
    let code = match recombine(&sample, &result.best_theta) {
        Ok(c) => c,
        Err(e) => return Err(fail(ledger, e.into())),
    };
    let baselines = cfg.hns_baselines.map(|b| (b.human, b.sparse)).or_else(|| evaluator.hns_baselines());
    let hns_value = baselines.and_then(|(h, s)| match hns(result.best_fitness, h, s) {
        Ok(v) => Some(v),
        Err(e) => {
            log::warn!("HNS not reported: {e}");
            None
        }
    });
    ledger.best = Some(BestReward {
        iteration,
        sample_id: result.sample_id,
        fitness: result.best_fitness,
        named_theta: sample.hyperparameters.iter().map(|h| h.name.clone()).zip(result.best_theta.iter().copied()).collect(),
        theta: result.best_theta,
        code,
        hns: hns_value,
    });
    ledger.status = if converged { RunStatus::Converged } else { RunStatus::Completed };
    observer(&ledger);
    Ok(ledger)
}
